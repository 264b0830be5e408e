//! Experiment configuration files.
//!
//! Configs are JSON documents tagged with [`SCHEMA`]. Frequencies are given in
//! Hz (ordinary, not angular), times in seconds, phases in radians. Pulse
//! programs use the engine's [`PulseSpec`] records unchanged, so a `detuning`
//! inside a program is angular (rad/s).

use std::path::{Path, PathBuf};

use motionsim_core::cooling::Durations;
use motionsim_core::sequences::{FailureMode, PulseModel};
use motionsim_core::{hz, PhysicalParams, PulseSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_err, CliError, Result};

pub const SCHEMA: &str = "motionsim/experiment-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    /// Catalog key.
    pub experiment: String,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub grids: Grids,
    /// Seed of the jitter ensembles.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: Options,
    /// Custom Ramsey-type program; every `wait` takes its duration from `tau_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<Vec<PulseSpec>>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Overrides of the experiment's physical parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    /// Used by experiments without an `omega_grid`.
    pub trap_frequency_hz: Option<f64>,
    pub rabi_hz: Option<f64>,
    pub detuning_hz: Option<f64>,
    pub linewidth_hz: Option<f64>,
    /// Fixes η instead of deriving it from the trap frequency.
    pub eta: Option<f64>,
    /// Quanta per second.
    pub heating_rate: Option<f64>,
    pub excited_lifetime_s: Option<f64>,
}

impl ParamOverrides {
    pub fn apply(&self, base: PhysicalParams) -> PhysicalParams {
        let mut p = base;
        if let Some(v) = self.rabi_hz {
            p.rabi = hz(v);
        }
        if let Some(v) = self.detuning_hz {
            p.detuning = hz(v);
        }
        if let Some(v) = self.linewidth_hz {
            p.linewidth = hz(v);
        }
        if let Some(v) = self.eta {
            p.eta = v;
        }
        if let Some(v) = self.heating_rate {
            p.heating_rate = v;
        }
        if let Some(v) = self.excited_lifetime_s {
            p.excited_lifetime = v;
        }
        p
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Trap frequencies in Hz.
    pub omega_grid: Option<Vec<f64>>,
    /// Wait times in s.
    pub tau_grid: Option<Vec<f64>>,
    /// Phases in rad.
    pub phi_grid: Option<Vec<f64>>,
    /// Hold times in s.
    pub hold_grid: Option<Vec<f64>>,
    /// Ratio of the second tweezer's depth to the first's.
    pub depth_ratio_grid: Option<Vec<f64>>,
    /// Probe detunings in Hz.
    pub detuning_grid: Option<Vec<f64>>,
    /// Numbers of replacement rounds.
    pub rounds_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Exact,
    Resonant,
}

impl From<ModelName> for PulseModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Exact => PulseModel::Exact,
            ModelName::Resonant => PulseModel::Resonant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureName {
    Leak,
    Dephase,
}

impl From<FailureName> for FailureMode {
    fn from(f: FailureName) -> Self {
        match f {
            FailureName::Leak => FailureMode::Leak,
            FailureName::Dephase => FailureMode::Dephase,
        }
    }
}

/// Experiment knobs; each experiment reads the ones it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub pulse_model: Option<ModelName>,
    pub failure_mode: Option<FailureName>,
    /// Per-sideband-pulse failure probability.
    pub sideband_infidelity: Option<f64>,
    pub imaging_infidelity: Option<f64>,
    pub cz_error: Option<f64>,
    pub transduction_infidelity: Option<f64>,
    pub motional_levels: Option<usize>,
    pub iterations: Option<usize>,
    /// Mean occupation used for thermal starts and the Lamb-Dicke check.
    pub n_bar: Option<f64>,
    /// Ground population before cooling or replacement.
    pub p0_prime: Option<f64>,
    pub slow_image_s: Option<f64>,
    pub fast_image_s: Option<f64>,
    pub replacement_s: Option<f64>,
    /// Lower edge of the scaling-fit window, Hz.
    pub fit_omega_min_hz: Option<f64>,
    pub static_jitter_hz: Option<f64>,
    /// Per-segment jitter, rad/s.
    pub segment_jitter: Option<f64>,
    pub shots: Option<usize>,
    /// Fixed wait for phase scans, s.
    pub tau_s: Option<f64>,
    /// Fixed hold for depth scans, s.
    pub hold_s: Option<f64>,
    /// Static trap-frequency offset during waits, Hz.
    pub wait_detuning_hz: Option<f64>,
}

impl Options {
    pub fn durations(&self) -> Durations {
        let d = Durations::default();
        Durations {
            slow_image_s: self.slow_image_s.unwrap_or(d.slow_image_s),
            fast_image_s: self.fast_image_s.unwrap_or(d.fast_image_s),
            replacement_s: self.replacement_s.unwrap_or(d.replacement_s),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir(), format: OutputFormat::Csv }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            experiment: experiment.to_string(),
            params: ParamOverrides::default(),
            grids: Grids::default(),
            seed: 0,
            options: Options::default(),
            program: None,
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if c.schema != SCHEMA {
            return config_err(format!("unsupported schema {:?}, expected {SCHEMA:?}", c.schema));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Hard errors: malformed values that no experiment can run with.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let g = &self.grids;
        let mut grid = |name: &str, v: &Option<Vec<f64>>, ok: fn(f64) -> bool, what: &str| {
            if let Some(v) = v {
                if v.is_empty() {
                    out.push(format!("{name} is empty"));
                } else if let Some(x) = v.iter().find(|&&x| !x.is_finite() || !ok(x)) {
                    out.push(format!("{name} contains {x}: {what}"));
                }
            }
        };
        grid("omega_grid", &g.omega_grid, |x| x > 0.0, "trap frequencies must be positive");
        grid("tau_grid", &g.tau_grid, |x| x >= 0.0, "negative duration");
        grid("hold_grid", &g.hold_grid, |x| x >= 0.0, "negative duration");
        grid("phi_grid", &g.phi_grid, |_| true, "phases must be finite");
        grid("depth_ratio_grid", &g.depth_ratio_grid, |x| x > 0.0, "depth ratios must be positive");
        grid("detuning_grid", &g.detuning_grid, |_| true, "detunings must be finite");
        if let Some(r) = &g.rounds_grid {
            if r.is_empty() {
                out.push("rounds_grid is empty".into());
            } else if r.contains(&0) {
                out.push("rounds_grid entries must be at least 1".into());
            }
        }

        let o = &self.options;
        for (name, v) in [
            ("slow_image_s", o.slow_image_s),
            ("fast_image_s", o.fast_image_s),
            ("replacement_s", o.replacement_s),
            ("tau_s", o.tau_s),
            ("hold_s", o.hold_s),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    out.push(format!("{name} = {v}: negative duration"));
                }
            }
        }
        for (name, v) in [
            ("sideband_infidelity", o.sideband_infidelity),
            ("imaging_infidelity", o.imaging_infidelity),
            ("cz_error", o.cz_error),
            ("transduction_infidelity", o.transduction_infidelity),
            ("p0_prime", o.p0_prime),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    out.push(format!("{name} = {v} outside [0, 1]"));
                }
            }
        }
        for (name, v) in
            [("n_bar", o.n_bar), ("static_jitter_hz", o.static_jitter_hz), ("segment_jitter", o.segment_jitter)]
        {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    out.push(format!("{name} = {v} must be non-negative"));
                }
            }
        }
        if o.shots == Some(0) || o.iterations == Some(0) {
            out.push("shots and iterations must be at least 1".into());
        }
        if let Some(v) = o.fit_omega_min_hz {
            if !(v > 0.0) {
                out.push(format!("fit_omega_min_hz = {v} must be positive"));
            }
        }
        if let Some(v) = o.wait_detuning_hz {
            if !v.is_finite() {
                out.push("wait_detuning_hz must be finite".into());
            }
        }

        let p = &self.params;
        for (name, v) in [
            ("trap_frequency_hz", p.trap_frequency_hz),
            ("rabi_hz", p.rabi_hz),
            ("linewidth_hz", p.linewidth_hz),
            ("eta", p.eta),
            ("heating_rate", p.heating_rate),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    out.push(format!("params.{name} = {v} must be finite and non-negative"));
                }
            }
        }
        if p.trap_frequency_hz == Some(0.0) {
            out.push("params.trap_frequency_hz must be positive".into());
        }
        if let Some(v) = p.excited_lifetime_s {
            if !(v > 0.0) {
                out.push(format!("params.excited_lifetime_s = {v} must be positive"));
            }
        }
        if let Some(prog) = &self.program {
            if prog.is_empty() {
                out.push("program is empty".into());
            }
            for (i, s) in prog.iter().enumerate() {
                if let Err(e) = s.validate() {
                    out.push(format!("program[{i}]: {e}"));
                }
            }
        }
        out
    }
}
