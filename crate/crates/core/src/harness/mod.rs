//! Experiment runner: sweeps, seeding, parallel trials and CSV output.
//!
//! An [`ExperimentSpec`] names one of the five experiments, a sweep grid, the
//! number of trials per point, a master seed and experiment parameters.
//! Every trial draws from its own stream derived from (master seed, sweep
//! point, trial index), and per-trial results are folded in trial order, so
//! output is identical for any thread count.

mod csv_out;
mod experiments;
pub mod validate;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::protocol::BiasScale;
use crate::rng::{trial_stream, SimRng};

pub use csv_out::{emit_csv, read_csv, write_csv, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    /// Bias and NMSE of the three gain-sum estimators versus M.
    EstimatorCompare,
    /// Repeat and resolution probabilities of a two-UE collision versus the SNR gap.
    TwoUe,
    /// Probability of resolving collisions versus M in a loaded cell.
    ResolveVsM,
    /// Resolution, false negatives and false positives versus the bias δ.
    BiasSweep,
    /// Multi-attempt access versus the number of idle UEs.
    Crowded,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::EstimatorCompare,
        ExperimentId::TwoUe,
        ExperimentId::ResolveVsM,
        ExperimentId::BiasSweep,
        ExperimentId::Crowded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::EstimatorCompare => "estimator-compare",
            ExperimentId::TwoUe => "two-ue",
            ExperimentId::ResolveVsM => "resolve-vs-m",
            ExperimentId::BiasSweep => "bias-sweep",
            ExperimentId::Crowded => "crowded",
        }
    }

    /// Meaning of the sweep values.
    pub fn sweep_variable(self) -> &'static str {
        match self {
            ExperimentId::EstimatorCompare | ExperimentId::ResolveVsM => "antennas",
            ExperimentId::TwoUe => "snr_difference_db",
            ExperimentId::BiasSweep => "delta",
            ExperimentId::Crowded => "k0",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown experiment id `{s}`")))
    }
}

/// Knobs shared by the experiments. Each experiment reads the fields it
/// needs; [`ExperimentSpec::defaults`] fills them per experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    /// Antenna counts used as series (two-ue) or fixed value (first entry).
    pub antennas: Vec<usize>,
    /// True gain sum for estimator-compare.
    pub alpha: f64,
    /// Which interference settings to run as separate series.
    pub interference: Vec<bool>,
    /// Bias δ (ignored by bias-sweep, which sweeps it).
    pub delta: f64,
    pub bias_scale: BiasScale,
    /// Collision sizes evaluated in isolation by bias-sweep.
    pub collision_sizes: Vec<usize>,
    pub k0: u64,
    pub pa: f64,
    pub tau_p: usize,
    /// Adjacent-antenna correlation of the correlated Rayleigh model.
    pub correlation: f64,
    /// Upper end of the random pilot power reduction, in dB.
    pub max_power_reduction_db: f64,
    /// Blocks run before UEs are tracked (crowded).
    pub warmup_blocks: usize,
    /// Batches used for batch-means standard errors (crowded).
    pub batches: usize,
    /// Estimators compared by estimator-compare.
    pub estimators: Vec<EstimatorKind>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            antennas: vec![100],
            alpha: 20.0,
            interference: vec![false, true],
            delta: 0.0,
            bias_scale: BiasScale::SignalGain,
            collision_sizes: vec![2, 5, 10],
            k0: 5000,
            pa: 0.005,
            tau_p: 10,
            correlation: 0.7,
            max_power_reduction_db: 30.0,
            warmup_blocks: 200,
            batches: 20,
            estimators: vec![EstimatorKind::Approx1, EstimatorKind::Approx2, EstimatorKind::Ml],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub params: ExperimentParams,
}

pub const DEFAULT_SEED: u64 = 1;

impl ExperimentSpec {
    /// Default sweep, trial count and parameters of an experiment.
    pub fn defaults(id: ExperimentId) -> Self {
        let mut params = ExperimentParams::default();
        let (grid, trials): (Vec<f64>, usize) = match id {
            ExperimentId::EstimatorCompare => (vec![10.0, 25.0, 50.0, 100.0, 200.0, 500.0], 100_000),
            ExperimentId::TwoUe => {
                params.antennas = vec![100, 300, 500];
                params.interference = vec![false];
                ((-6..=6).map(f64::from).collect(), 100_000)
            }
            ExperimentId::ResolveVsM => (vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0], 10_000),
            ExperimentId::BiasSweep => ((-4..=4).map(|i| f64::from(i) * 0.5).collect(), 10_000),
            ExperimentId::Crowded => {
                params.pa = 0.001;
                params.delta = -1.0;
                let mut grid = vec![100.0];
                grid.extend((1..=12).map(|k| f64::from(k) * 1000.0));
                (grid, 10_000)
            }
        };
        Self {
            id,
            grid,
            trials,
            seed: DEFAULT_SEED,
            out: None,
            params,
        }
    }

    /// Defaults overlaid with a TOML config file's contents.
    pub fn from_config(id: ExperimentId, text: &str) -> Result<Self> {
        let mut spec = Self::defaults(id);
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(named) = cfg.experiment {
            if named != id {
                return Err(Error::Config(format!("config is for `{named}`, not `{id}`")));
            }
        }
        if let Some(g) = cfg.grid {
            spec.grid = g;
        }
        if let Some(t) = cfg.trials {
            spec.trials = t;
        }
        if let Some(s) = cfg.seed {
            spec.seed = s;
        }
        if let Some(o) = cfg.out {
            spec.out = Some(o);
        }
        if let Some(overrides) = cfg.params {
            let mut merged = toml::Table::try_from(&spec.params).map_err(|e| Error::Config(e.to_string()))?;
            for (k, v) in overrides {
                merged.insert(k, v);
            }
            spec.params = merged
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        }
        Ok(spec)
    }

    pub fn load(id: ExperimentId, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_config(id, &text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if let Some(v) = self.grid.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite sweep value {v}")));
        }
        let p = &self.params;
        if p.antennas.is_empty() || p.antennas.contains(&0) {
            return Err(Error::Config(
                "antennas must be a non-empty list of positive counts".into(),
            ));
        }
        if p.interference.is_empty() {
            return Err(Error::Config("interference list is empty".into()));
        }
        if p.tau_p == 0 {
            return Err(Error::Config("tau_p must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&p.pa) {
            return Err(Error::Config(format!("pa = {} outside [0, 1]", p.pa)));
        }
        if p.batches < 2 {
            return Err(Error::Config("batches must be at least 2".into()));
        }
        if matches!(self.id, ExperimentId::EstimatorCompare | ExperimentId::ResolveVsM) {
            if let Some(v) = self.grid.iter().find(|v| **v < 1.0 || v.fract() != 0.0) {
                return Err(Error::Config(format!("antenna count {v} is not a positive integer")));
            }
        }
        if self.id == ExperimentId::Crowded {
            if let Some(v) = self.grid.iter().find(|v| **v < 0.0 || v.fract() != 0.0) {
                return Err(Error::Config(format!("K0 = {v} is not a non-negative integer")));
            }
        }
        if self.id == ExperimentId::EstimatorCompare && p.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        if self.id == ExperimentId::EstimatorCompare && !(p.alpha > 0.0) {
            return Err(Error::Config(format!("alpha = {} must be positive", p.alpha)));
        }
        Ok(())
    }
}

/// Contents of a config file; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<ExperimentId>,
    grid: Option<Vec<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    params: Option<toml::Table>,
}

/// One estimate at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub series: String,
    pub sweep_value: f64,
    pub metric: String,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    /// Closed-form value of the same quantity, where one exists.
    pub closed_form: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment: ExperimentId,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn get(&self, series: &str, sweep_value: f64, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.series == series && r.sweep_value == sweep_value && r.metric == metric)
    }

    pub fn series(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.series.as_str()) {
                out.push(&r.series);
            }
        }
        out
    }
}

/// Runs an experiment and, if `spec.out` is set, writes its CSV.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    log::info!(
        "{}: {} sweep points, {} trials each, seed {}",
        spec.id,
        spec.grid.len(),
        spec.trials,
        spec.seed
    );
    let rows = match spec.id {
        ExperimentId::EstimatorCompare => experiments::estimator_compare(spec)?,
        ExperimentId::TwoUe => experiments::two_ue(spec)?,
        ExperimentId::ResolveVsM => experiments::resolve_vs_m(spec)?,
        ExperimentId::BiasSweep => experiments::bias_sweep(spec)?,
        ExperimentId::Crowded => experiments::crowded(spec)?,
    };
    let result = ExperimentResult {
        experiment: spec.id,
        rows,
    };
    if let Some(path) = &spec.out {
        emit_csv(&result, path)?;
    }
    Ok(result)
}

/// Runs `trials` independent trials of sweep point `point` in parallel and
/// returns their results in trial order.
pub fn run_trials<T, F>(master: u64, point: u64, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|t| f(&mut trial_stream(master, point, t)))
        .collect()
}

/// Fraction of `true` and its binomial standard error.
pub fn bernoulli_estimate(flags: impl IntoIterator<Item = bool>) -> (f64, f64, u64) {
    let (mut hits, mut n) = (0u64, 0u64);
    for f in flags {
        hits += u64::from(f);
        n += 1;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt(), n)
}

/// Sample mean and its standard error.
pub fn mean_estimate(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Ratio `Σa/Σb` over independent pairs with its delta-method standard error.
pub fn ratio_estimate(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len();
    let sa: f64 = pairs.iter().map(|p| p.0).sum();
    let sb: f64 = pairs.iter().map(|p| p.1).sum();
    if sb == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let r = sa / sb;
    if n < 2 {
        return (r, f64::NAN);
    }
    let ss: f64 = pairs.iter().map(|&(a, b)| (a - r * b).powi(2)).sum();
    let nf = n as f64;
    (r, (ss * nf / (nf - 1.0)).sqrt() / sb)
}
