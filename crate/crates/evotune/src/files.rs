//! Reading inputs and writing reports.

use std::fs;
use std::path::{Path, PathBuf};

use evotune_core::engine::RunReport;
use evotune_core::fitness::{ReplayCache, SimModel};
use evotune_core::fixtures;
use evotune_core::paramspace::{builtin_catalog, parse_param_file, CatalogError, ParameterSpace, ParseError};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", path.display())]
    Params { path: PathBuf, source: ParseError },
    #[error("{}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("no fixture file or embedded fixture named {0:?}")]
    UnknownFixture(String),
}

fn read(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io { path: path.into(), source })
}

pub fn read_params(path: &Path) -> Result<ParameterSpace, FileError> {
    parse_param_file(&read(path)?).map_err(|source| FileError::Params { path: path.into(), source })
}

/// Where the parameter space comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceSource {
    File(PathBuf),
    Catalog(String),
}

pub fn load_space(source: &SpaceSource) -> Result<ParameterSpace, FileError> {
    match source {
        SpaceSource::File(p) => read_params(p),
        SpaceSource::Catalog(name) => Ok(builtin_catalog(name)?),
    }
}

/// Loads a simulation model from a file, falling back to the embedded
/// fixture of that name (`toy-cal.json`, `toy16.json`).
pub fn load_sim_model(arg: &str) -> Result<SimModel, FileError> {
    let path = Path::new(arg);
    let text = if path.exists() {
        read(path)?
    } else {
        fixtures::by_name(arg).ok_or_else(|| FileError::UnknownFixture(arg.into()))?.to_string()
    };
    serde_json::from_str(&text).map_err(|source| FileError::Json { path: path.into(), source })
}

pub fn read_cache(path: &Path) -> Result<ReplayCache, FileError> {
    serde_json::from_str(&read(path)?).map_err(|source| FileError::Json { path: path.into(), source })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_cache(path: &Path, cache: &ReplayCache) -> Result<(), FileError> {
    write(path, &pretty(cache))
}

/// The report as pretty JSON. Contains no timestamps, so equal runs give
/// equal bytes.
pub fn report_json(report: &RunReport) -> String {
    pretty(report)
}

pub fn write_report_json(path: &Path, report: &RunReport) -> Result<(), FileError> {
    write(path, &report_json(report))
}

#[derive(Serialize)]
struct Row {
    generation: usize,
    best: f64,
    worst: f64,
    mean: f64,
    default: f64,
}

/// Per-generation series, header `generation,best,worst,mean,default`.
pub fn report_csv(report: &RunReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for g in &report.per_generation {
        w.serialize(Row {
            generation: g.generation,
            best: g.best,
            worst: g.worst,
            mean: g.mean,
            default: g.default_fitness,
        })?;
    }
    if report.per_generation.is_empty() {
        w.write_record(["generation", "best", "worst", "mean", "default"])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of numbers is utf-8"))
}

pub fn write_report_csv(path: &Path, report: &RunReport) -> Result<(), FileError> {
    let text = report_csv(report).map_err(|source| FileError::Csv { path: path.into(), source })?;
    write(path, &text)
}
