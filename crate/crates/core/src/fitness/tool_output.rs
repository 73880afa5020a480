//! Parsers for benchmark and latency tool output.
//!
//! All parsers take the complete captured stdout and either return a value
//! or [`UnparseableOutput`]; none of them panic on arbitrary input.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Throughput;

/// The text did not contain a recognizable result. Carries the start of the
/// offending output.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable tool output: {0:?}")]
pub struct UnparseableOutput(pub String);

fn unparseable(text: &str) -> UnparseableOutput {
    UnparseableOutput(text.trim().chars().take(120).collect())
}

fn throughput(v: f64, text: &str) -> Result<Throughput, UnparseableOutput> {
    Throughput::from_mbps(v).map_err(|_| unparseable(text))
}

/// Mbit/s per unit named in a netperf header.
fn netperf_scale(text: &str) -> f64 {
    const UNITS: [(&str, f64); 6] = [
        ("10^3bits/s", 1e-3),
        ("10^9bits/s", 1e3),
        ("10^6bits/s", 1.0),
        ("KBytes/s", 8.0 * 1024.0 / 1e6),
        ("MBytes/s", 8.0 * 1024.0 * 1024.0 / 1e6),
        ("GBytes/s", 8.0 * 1024.0 * 1024.0 * 1024.0 / 1e6),
    ];
    UNITS
        .iter()
        .find(|(u, _)| text.contains(u))
        .map(|&(_, s)| s)
        .unwrap_or(1.0)
}

/// Throughput from a netperf `TCP_STREAM`-style report.
///
/// The result row is the last line made only of numbers (at least five:
/// socket sizes, message size, elapsed time, throughput); its final column
/// is the throughput. The unit comes from the header, `10^6bits/sec` when
/// absent.
pub fn parse_throughput_netperf(stdout: &str) -> Result<Throughput, UnparseableOutput> {
    let row = stdout
        .lines()
        .filter_map(|line| {
            let nums: Option<Vec<f64>> = line.split_whitespace().map(|t| t.parse::<f64>().ok()).collect();
            nums.filter(|n| n.len() >= 5)
        })
        .next_back()
        .ok_or_else(|| unparseable(stdout))?;
    let last = *row.last().ok_or_else(|| unparseable(stdout))?;
    throughput(last * netperf_scale(stdout), stdout)
}

fn iperf_rate(line: &str) -> Option<f64> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    for (i, tok) in tokens.iter().enumerate().skip(1) {
        let scale = match *tok {
            "bits/sec" => 1e-6,
            "Kbits/sec" => 1e-3,
            "Mbits/sec" => 1.0,
            "Gbits/sec" => 1e3,
            "Tbits/sec" => 1e6,
            _ => continue,
        };
        if let Ok(v) = tokens[i - 1].parse::<f64>() {
            return Some(v * scale);
        }
    }
    None
}

/// Receiver throughput from iperf3 (or iperf2) client output, in Mbit/s.
///
/// Prefers the `[SUM]` receiver line, then the last receiver line, then
/// (iperf2, which has no sender/receiver labels) the last rate line.
pub fn parse_throughput_iperf(stdout: &str) -> Result<Throughput, UnparseableOutput> {
    let rated: Vec<(&str, f64)> = stdout
        .lines()
        .filter_map(|l| iperf_rate(l).map(|r| (l, r)))
        .collect();
    let receiver = |l: &&(&str, f64)| l.0.contains("receiver");
    let pick = rated
        .iter()
        .rfind(|l| receiver(l) && l.0.contains("[SUM]"))
        .or_else(|| rated.iter().rfind(receiver))
        .or_else(|| rated.last())
        .ok_or_else(|| unparseable(stdout))?;
    throughput(pick.1, stdout)
}

/// Round-trip statistics, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub min_ms: f64,
    pub avg_ms: f64,
    pub max_ms: f64,
}

/// Parses the `round-trip min/avg/max = a/b/c ms` summary of hping3 (ping's
/// `rtt min/avg/max/mdev` form is accepted too). The last summary line wins.
pub fn parse_latency_hping(stdout: &str) -> Result<LatencyReport, UnparseableOutput> {
    let line = stdout
        .lines()
        .rfind(|l| l.contains("min/avg/max"))
        .ok_or_else(|| unparseable(stdout))?;
    let (_, rhs) = line.split_once('=').ok_or_else(|| unparseable(stdout))?;
    let figures = rhs.split_whitespace().next().ok_or_else(|| unparseable(stdout))?;
    let vals: Vec<f64> = figures
        .split('/')
        .map(str::parse::<f64>)
        .collect::<Result<_, _>>()
        .map_err(|_| unparseable(stdout))?;
    let [min_ms, avg_ms, max_ms] = match vals.as_slice() {
        [a, b, c, ..] => [*a, *b, *c],
        _ => return Err(unparseable(stdout)),
    };
    let ok = [min_ms, avg_ms, max_ms].iter().all(|v| v.is_finite() && *v >= 0.0)
        && min_ms <= avg_ms
        && avg_ms <= max_ms;
    if !ok {
        return Err(unparseable(stdout));
    }
    Ok(LatencyReport { min_ms, avg_ms, max_ms })
}
