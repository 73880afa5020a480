mod common;

use common::*;
use evotune_core::engine::{crossover, mutate, run_observed, GaConfig};
use evotune_core::fitness::{
    evaluate_simulated, parse_latency_hping, parse_throughput_iperf, parse_throughput_netperf, Curve,
    GeneResponse, Interaction, SimModel,
};
use evotune_core::paramspace::{
    parse_param_file, render_apply_commands, sample_chromosome, Chromosome, GeneValue, ParameterSpace,
    ParameterSpec, RenderStyle, Target, ValueKind,
};
use evotune_core::RandomSource;
use proptest::prelude::*;

fn target() -> impl Strategy<Value = Target> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,8}(\\.[a-z0-9_]{1,8}){0,3}".prop_map(Target::Sysctl),
        "[a-z][a-z0-9]{0,6}".prop_map(Target::InterfaceMtu),
        "[a-z][a-z0-9]{0,6}".prop_map(Target::InterfaceTxqueuelen),
    ]
}

fn range() -> impl Strategy<Value = (i64, i64)> {
    (-1_000_000i64..1_000_000, 0i64..2_000_000).prop_map(|(lo, w)| (lo, lo + w))
}

fn kind() -> impl Strategy<Value = ValueKind> {
    prop_oneof![
        range().prop_map(|(min, max)| ValueKind::IntRange { min, max }),
        [range(), range(), range()].prop_map(|r| ValueKind::TripleRange {
            min: [r[0].0, r[1].0, r[2].0],
            max: [r[0].1, r[1].1, r[2].1],
        }),
    ]
}

fn space() -> impl Strategy<Value = ParameterSpace> {
    prop::collection::vec((target(), kind()), 1..10)
        .prop_filter("needs a usable spec", |e| e.iter().any(|(t, k)| t.interface().is_none() || matches!(k, ValueKind::IntRange { .. }))).prop_map(|entries| {
        let mut specs: Vec<ParameterSpec> = Vec::new();
        for (t, k) in entries {
            if specs.iter().all(|s| s.target() != &t) {
                // interface attributes only accept scalars
                if let Ok(spec) = ParameterSpec::new(t, k) {
                    specs.push(spec);
                }
            }
        }
        ParameterSpace::new(specs).unwrap()
    })
}

fn ascending_triple_space() -> impl Strategy<Value = ParameterSpace> {
    (0i64..1000, 0i64..1000, 0i64..1000, 0i64..1000).prop_map(|(a, b, c, d)| {
        let mut lo = [a, a + b, a + b + c];
        let hi = [lo[0] + d, lo[1] + d, lo[2] + d];
        lo.sort();
        let spec = ParameterSpec::new(
            Target::Sysctl("net.ipv4.tcp_rmem".into()),
            ValueKind::TripleRange { min: lo, max: hi },
        )
        .unwrap();
        ParameterSpace::new(vec![spec]).unwrap()
    })
}

proptest! {
    #[test]
    fn samples_lie_inside_the_space(space in space(), seed: u64) {
        let mut rng = RandomSource::from_seed(seed);
        for _ in 0..5 {
            let c = sample_chromosome(&space, &mut rng);
            prop_assert!(c.validate(&space).is_ok());
            prop_assert_eq!(Chromosome::from_canonical(&space, &c.canonical()).unwrap(), c);
        }
    }

    #[test]
    fn kernel_triples_sample_ascending(space in ascending_triple_space(), seed: u64) {
        let mut rng = RandomSource::from_seed(seed);
        let c = sample_chromosome(&space, &mut rng);
        prop_assert!(c.validate(&space).is_ok());
        let GeneValue::Triple(t) = c.genes()[0] else { panic!() };
        prop_assert!(t[0] <= t[1] && t[1] <= t[2]);
    }

    #[test]
    fn param_file_round_trips(space in space()) {
        let text = space.to_param_file();
        let back = parse_param_file(&text).unwrap();
        prop_assert_eq!(&back, &space);
        prop_assert_eq!(back.identity_hash(), space.identity_hash());
    }

    #[test]
    fn rendered_commands_name_their_targets(space in space(), seed: u64, legacy: bool) {
        let style = if legacy { RenderStyle::LegacyIfconfig } else { RenderStyle::IpLink };
        let c = sample_chromosome(&space, &mut RandomSource::from_seed(seed));
        let cmds = render_apply_commands(&space, &c, style).unwrap();
        prop_assert_eq!(cmds.len(), space.len());
        for (cmd, spec) in cmds.iter().zip(&space) {
            prop_assert_eq!(Target::from_command(&cmd.to_string()), Some(spec.target().clone()));
        }
    }

    #[test]
    fn parse_errors_point_at_a_line(text in "(sysctl -w [a-z.]{0,6}=?;[-0-9' ]{0,8};[-0-9' ]{0,8}\n|#[^\n]{0,5}\n|[^\n]{0,12}\n){1,6}") {
        if let Err(e) = parse_param_file(&text) {
            prop_assert!(e.line() >= 1 && e.line() <= text.lines().count());
        }
    }

    #[test]
    fn tool_parsers_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_throughput_netperf(&text);
        let _ = parse_throughput_iperf(&text);
        let _ = parse_latency_hping(&text);
        let _ = parse_param_file(&text);
    }

    #[test]
    fn crossover_keeps_genes_in_place(space in space(), seed: u64, p in 0.0f64..=1.0) {
        let mut rng = RandomSource::from_seed(seed);
        let a = sample_chromosome(&space, &mut rng);
        let b = sample_chromosome(&space, &mut rng);
        let (x, y) = crossover(&a, &b, p, &mut rng).unwrap();
        for i in 0..space.len() {
            let pair = (x.genes()[i], y.genes()[i]);
            prop_assert!(pair == (a.genes()[i], b.genes()[i]) || pair == (b.genes()[i], a.genes()[i]));
        }
        prop_assert!(x.validate(&space).is_ok() && y.validate(&space).is_ok());
    }

    #[test]
    fn mutation_touches_at_most_one_gene(space in space(), seed: u64, p in 0.0f64..=1.0) {
        let mut rng = RandomSource::from_seed(seed);
        let before = sample_chromosome(&space, &mut rng);
        let mut after = before.clone();
        let hit = mutate(&mut after, p, &space, &mut rng);
        let changed: Vec<usize> = (0..space.len()).filter(|&i| before.genes()[i] != after.genes()[i]).collect();
        match hit {
            None => prop_assert!(changed.is_empty()),
            Some(i) => prop_assert!(changed.is_empty() || changed == vec![i]),
        }
        prop_assert!(after.validate(&space).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn engine_invariants(seed: u64, pop in 2usize..40, gens in 1usize..12, f in 0.05f64..=0.5) {
        let (space, model) = toy_cal();
        let default = model.default.clone().unwrap();
        let cfg = GaConfig { population_size: pop, generations: gens, selection_fraction: f, seed, ..GaConfig::default() };
        let mut last_best = f64::MIN;
        let mut ok = true;
        let report = run_observed(&space, &cfg, sim(&space, model), &default, |st, p| {
            ok &= p.len() == pop;
            ok &= st.best >= last_best;
            ok &= p.iter().all(|i| i.fitness.is_some() && i.chromosome.validate(&space).is_ok());
            last_best = st.best;
        })
        .unwrap();
        prop_assert!(ok);
        prop_assert_eq!(report.per_generation.len(), gens);
        prop_assert_eq!(report.overall_best_fitness(), last_best);
        prop_assert_eq!(report.evaluation_count, (pop + gens * cfg.offspring_count() + gens) as u64);
    }

    #[test]
    fn simulation_is_pure_when_noise_free(seed: u64, a: u64, b: u64) {
        let (space, model) = toy_cal();
        let mut rng = RandomSource::from_seed(seed);
        let c = sample_chromosome(&space, &mut rng);
        let x = evaluate_simulated(&space, &c, &model, &mut RandomSource::from_seed(a)).unwrap();
        let y = evaluate_simulated(&space, &c, &model, &mut RandomSource::from_seed(b)).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!(x.mbps() >= 0.0 && x.mbps() <= model.cap);
    }

    #[test]
    fn monotone_genes_never_hurt(seed: u64, gene in 0usize..4) {
        let (space, model) = toy16();
        let mut rng = RandomSource::from_seed(seed);
        let c = sample_chromosome(&space, &mut rng);
        if !model.genes[gene].monotone {
            return Ok(());
        }
        let mut lo = c.clone();
        let mut hi = c.clone();
        lo.genes_mut()[gene] = GeneValue::Int(0);
        hi.genes_mut()[gene] = GeneValue::Int(1);
        let mut r = RandomSource::from_seed(0);
        let vlo = evaluate_simulated(&space, &lo, &model, &mut r).unwrap();
        let vhi = evaluate_simulated(&space, &hi, &model, &mut r).unwrap();
        prop_assert!(vhi >= vlo);
    }

    #[test]
    fn monotone_claims_are_checked(w in -50.0f64..50.0, slope in -1.0f64..1.0) {
        let space = parse_param_file("sysctl -w a=;0;1\nsysctl -w b=;0;1").unwrap();
        let mut model = SimModel::neutral(&space, 100.0, 1000.0);
        model.genes[0] = GeneResponse { key: "a".into(), curve: Curve::linear(1.0, 1.0 + slope), monotone: true, note: String::new() };
        model.interactions.push(Interaction { a: 0, b: 1, weight: w });
        let consistent = slope >= 0.0 && w >= 0.0;
        prop_assert_eq!(model.validate(&space).is_ok(), consistent);
    }
}
