//! Run configuration: a JSON file with serde defaults, where every key can
//! also be set (and overridden) by a command line flag.

use std::str::FromStr;

use mco_ce::bench::{Algorithm, BenchParams};
use mco_ce::distributions::SmoothingConfig;
use mco_ce::objectives::{default_dim, PROBLEM_NAMES};
use serde::{Deserialize, Serialize};

use crate::commands::BenchArgs;

/// Smoothing section of the run configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingSection {
    /// Blend factor for means and mixture weights, in `[0, 1]`.
    pub alpha: f64,
    /// Base blend factor for covariances, in `[0, 1]`.
    pub beta: f64,
    /// Decay exponent of the dynamic covariance factor (positive).
    pub q: f64,
}

impl Default for SmoothingSection {
    fn default() -> Self {
        let s = SmoothingConfig::default();
        Self { alpha: s.alpha, beta: s.beta, q: s.q }
    }
}

/// Cross-validation section of the run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    /// Fold count used by the selecting algorithm variants.
    pub folds: usize,
    /// Elite-fraction candidate grid.
    pub kappas: Vec<f64>,
    /// Component-count candidate grid (mixture variant only).
    pub component_counts: Vec<usize>,
}

impl Default for CvSection {
    fn default() -> Self {
        Self { folds: 4, kappas: vec![0.05, 0.10, 0.15], component_counts: vec![1, 2, 3] }
    }
}

/// The full run configuration. Every field has a default, so `{}` is a valid
/// configuration file and a missing file is equivalent to the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Problem registry names to benchmark.
    pub problems: Vec<String>,
    /// Algorithm names (CES05..CEMX) to benchmark.
    pub algorithms: Vec<String>,
    /// Independent trials per (problem, algorithm).
    pub trials: u64,
    /// Master seed; everything else derives from it.
    pub master_seed: u64,
    /// Evaluation budget per run; `null`/absent scales with dimension.
    pub budget: Option<u64>,
    /// Population size per iteration; `null`/absent scales with dimension.
    pub pop_size: Option<usize>,
    pub smoothing: SmoothingSection,
    pub cv: CvSection,
    /// How many past populations the elite pool keeps.
    pub archive_window: usize,
    /// Target number of recorded checkpoints per problem.
    pub checkpoints: usize,
    /// Dimension used when "rosenbrock" is requested.
    pub rosenbrock_dim: usize,
    /// Worker threads (0 = one per core).
    pub threads: usize,
    /// Directory that receives raw.csv and aggregate.csv.
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problems: PROBLEM_NAMES.iter().map(|s| s.to_string()).collect(),
            algorithms: Algorithm::ALL.iter().map(|a| a.name().to_string()).collect(),
            trials: 30,
            master_seed: 1,
            budget: None,
            pop_size: None,
            smoothing: SmoothingSection::default(),
            cv: CvSection::default(),
            archive_window: 1,
            checkpoints: 50,
            rosenbrock_dim: 8,
            threads: 0,
            out_dir: "out".into(),
        }
    }
}

impl RunConfig {
    /// Parses a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid configuration JSON: {e}"))
    }

    /// Serializes the configuration as pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Applies command line overrides on top of the file/default values.
    pub fn apply_overrides(&mut self, args: &BenchArgs) {
        if let Some(v) = &args.problems {
            self.problems = v.clone();
        }
        if let Some(v) = &args.algorithms {
            self.algorithms = v.clone();
        }
        if let Some(v) = args.trials {
            self.trials = v;
        }
        if let Some(v) = args.master_seed {
            self.master_seed = v;
        }
        if let Some(v) = args.budget {
            self.budget = Some(v);
        }
        if let Some(v) = args.pop_size {
            self.pop_size = Some(v);
        }
        if let Some(v) = args.alpha {
            self.smoothing.alpha = v;
        }
        if let Some(v) = args.beta {
            self.smoothing.beta = v;
        }
        if let Some(v) = args.q {
            self.smoothing.q = v;
        }
        if let Some(v) = args.cv_folds {
            self.cv.folds = v;
        }
        if let Some(v) = &args.cv_kappas {
            self.cv.kappas = v.clone();
        }
        if let Some(v) = &args.cv_components {
            self.cv.component_counts = v.clone();
        }
        if let Some(v) = args.archive_window {
            self.archive_window = v;
        }
        if let Some(v) = args.checkpoints {
            self.checkpoints = v;
        }
        if let Some(v) = args.rosenbrock_dim {
            self.rosenbrock_dim = v;
        }
        if let Some(v) = args.threads {
            self.threads = v;
        }
        if let Some(v) = &args.out {
            self.out_dir = v.display().to_string();
        }
    }

    /// Collects every violation this layer can see; an empty vector means the
    /// configuration is acceptable here (the library validates the deeper
    /// couplings, e.g. elite counts against the dimension).
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.problems.is_empty() {
            v.push("problems must not be empty".into());
        }
        let known_problems = PROBLEM_NAMES.join(", ");
        for name in &self.problems {
            if default_dim(name).is_none() {
                v.push(format!("unknown problem '{name}' (known: {known_problems})"));
            }
        }
        if self.algorithms.is_empty() {
            v.push("algorithms must not be empty".into());
        }
        for name in &self.algorithms {
            if let Err(e) = Algorithm::from_str(name) {
                v.push(e.to_string());
            }
        }
        if self.trials == 0 {
            v.push("trials must be at least 1".into());
        }
        if let Some(b) = self.budget {
            if b == 0 {
                v.push("budget must be at least 1".into());
            }
        }
        if let Some(p) = self.pop_size {
            if p < 2 {
                v.push("pop_size must be at least 2".into());
            }
        }
        let SmoothingSection { alpha, beta, q } = self.smoothing;
        if !(0.0..=1.0).contains(&alpha) {
            v.push(format!("smoothing.alpha must lie in [0, 1], got {alpha}"));
        }
        if !(0.0..=1.0).contains(&beta) {
            v.push(format!("smoothing.beta must lie in [0, 1], got {beta}"));
        }
        if !(q > 0.0 && q.is_finite()) {
            v.push(format!("smoothing.q must be positive and finite, got {q}"));
        }
        if self.cv.folds < 2 {
            v.push(format!("cv.folds must be at least 2, got {}", self.cv.folds));
        }
        if self.cv.kappas.is_empty() {
            v.push("cv.kappas must not be empty".into());
        }
        for &k in &self.cv.kappas {
            if !(k > 0.0 && k < 1.0) {
                v.push(format!("cv.kappas entries must lie in (0, 1), got {k}"));
            }
        }
        if self.cv.component_counts.is_empty() {
            v.push("cv.component_counts must not be empty".into());
        }
        for &k in &self.cv.component_counts {
            if k == 0 {
                v.push("cv.component_counts entries must be at least 1".into());
            }
        }
        if self.archive_window == 0 {
            v.push("archive_window must be at least 1".into());
        }
        if self.checkpoints == 0 {
            v.push("checkpoints must be at least 1".into());
        }
        if self.rosenbrock_dim < 2 {
            v.push(format!("rosenbrock_dim must be at least 2, got {}", self.rosenbrock_dim));
        }
        v
    }

    /// Converts into the library's benchmark parameters. Call `violations`
    /// first; this panics on algorithm names it rejected there.
    pub fn to_bench_params(&self) -> BenchParams {
        let algorithms = self
            .algorithms
            .iter()
            .map(|s| Algorithm::from_str(s).expect("validated algorithm name"))
            .collect();
        BenchParams {
            problems: self.problems.clone(),
            algorithms,
            trials: self.trials,
            master_seed: self.master_seed,
            budget: self.budget,
            pop_size: self.pop_size,
            smoothing: SmoothingConfig {
                alpha: self.smoothing.alpha,
                beta: self.smoothing.beta,
                q: self.smoothing.q,
            },
            archive_window: self.archive_window,
            cv_folds: self.cv.folds,
            cv_kappas: self.cv.kappas.clone(),
            cv_component_counts: self.cv.component_counts.clone(),
            checkpoint_count: self.checkpoints,
            threads: self.threads,
            rosenbrock_dim: self.rosenbrock_dim,
        }
    }
}

/// Resolves the thread count: flag beats the `MCO_CE_THREADS` environment
/// variable, which beats the configuration value. `env_value` is the raw
/// variable content when set.
pub fn resolve_threads(
    flag: Option<usize>,
    env_value: Option<&str>,
    config_value: usize,
) -> Result<usize, String> {
    if let Some(t) = flag {
        return Ok(t);
    }
    if let Some(raw) = env_value {
        return raw.trim().parse::<usize>().map_err(|_| {
            format!("MCO_CE_THREADS must be a non-negative integer (0 = auto), got '{raw}'")
        });
    }
    Ok(config_value)
}
