//! Experiment runner: config ingestion, the experiment catalog, CSV/SVG output.

// `!(x >= 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
mod error;
pub mod plot;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use motionsim_core::cooling::RegimeFlags;
use motionsim_core::to_hz;

pub use catalog::{find, Experiment, CATALOG};
pub use config::{ExperimentConfig, OutputFormat, SCHEMA};
pub use error::{CliError, Result};
pub use table::{Column, Metadata, ResultTable};

fn experiment(config: &ExperimentConfig) -> Result<&'static Experiment> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("; ")));
    }
    find(&config.experiment).ok_or_else(|| CliError::Config(format!("unknown experiment {:?}", config.experiment)))
}

/// Run the configured experiment without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<ResultTable> {
    let exp = experiment(config)?;
    let start = Instant::now();
    let mut table = exp.execute(config)?;
    let m = &mut table.metadata;
    m.experiment = exp.name.to_string();
    m.schema = SCHEMA.to_string();
    m.config_sha256 = config.hash();
    m.engine_version = motionsim_core::VERSION.to_string();
    m.seed = config.seed;
    m.wall_time_s = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Files written for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub svg: Option<PathBuf>,
}

pub fn write(table: &ResultTable, dir: &Path, format: OutputFormat) -> Result<Written> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let stem = dir.join(&table.metadata.experiment);
    let put = |path: PathBuf, text: String| -> Result<PathBuf> {
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    };
    let csv = put(stem.with_extension("csv"), table.to_csv())?;
    let meta = serde_json::to_string_pretty(&table.metadata).expect("metadata serializes");
    let metadata = put(stem.with_extension("meta.json"), meta + "\n")?;
    let svg = match format {
        OutputFormat::Csv => None,
        OutputFormat::CsvSvg => {
            Some(put(stem.with_extension("svg"), plot::line_chart(table, &table.metadata.experiment))?)
        }
    };
    Ok(Written { csv, metadata, svg })
}

/// Run and write; `out_dir` overrides the config's output directory.
pub fn run(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<(ResultTable, Written)> {
    let table = execute(config)?;
    let dir = out_dir.unwrap_or(&config.output.dir);
    let written = write(&table, dir, config.output.format)?;
    Ok((table, written))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// `name = value` lines of derived quantities.
    pub derived: Vec<String>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Check a config without running it.
pub fn validate(config: &ExperimentConfig) -> ValidationReport {
    let mut r = ValidationReport { errors: config.problems(), ..Default::default() };
    let Some(exp) = find(&config.experiment) else {
        r.errors.push(format!("unknown experiment {:?}", config.experiment));
        return r;
    };
    let unused = exp.unused_grids(config);
    if !unused.is_empty() {
        r.errors.push(format!("{} does not use {}", exp.name, unused.join(", ")));
    }
    if !r.errors.is_empty() {
        return r;
    }
    let levels = config.options.motional_levels.unwrap_or(10);
    let n_bar = config.options.n_bar.unwrap_or(0.0);
    for f in exp.trap_frequencies(config) {
        let p = match catalog::clock_params(config, f) {
            Ok(p) => p,
            Err(e) => {
                r.errors.push(e.to_string());
                continue;
            }
        };
        let tag = format!("omega/2pi = {f} Hz");
        r.derived.push(format!("{tag}: eta = {:.6}", p.eta));
        match (p.coupling_element(levels, 0, 0), p.sideband_pi_time(levels)) {
            (Ok(c), Ok(ts)) if p.rabi > 0.0 => {
                r.derived.push(format!("{tag}: t_pi_carrier = {:.6e} s", std::f64::consts::PI / (p.rabi * c)));
                r.derived.push(format!("{tag}: t_pi_sideband = {ts:.6e} s"));
            }
            (Err(e), _) | (_, Err(e)) => r.errors.push(e.to_string()),
            _ => r.warnings.push(format!("{tag}: zero Rabi frequency, π times undefined")),
        }
        r.derived.push(format!("{tag}: rabi/2pi = {} Hz", to_hz(p.rabi)));
        r.warnings.extend(RegimeFlags::evaluate(&p, n_bar).warnings);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_are_unique() {
        let mut names: Vec<&str> = CATALOG.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CATALOG.len());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a =
            ExperimentConfig::from_json(r#"{"schema":"motionsim/experiment-v1","experiment":"fig3b_ramsey"}"#).unwrap();
        let b = ExperimentConfig::from_json(
            "{\n  \"experiment\": \"fig3b_ramsey\",\n  \"schema\": \"motionsim/experiment-v1\"\n}",
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }
}
