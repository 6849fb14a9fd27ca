//! Benchmark harness: runs the algorithm suite over the problem registry
//! with paired first populations, records checkpoint-aligned convergence
//! series, aggregates across trials, and round-trips everything through
//! deterministic CSV.
//!
//! Determinism contract: given the same parameters, the harness produces
//! byte-identical CSV regardless of thread count or repetition. All
//! randomness derives from `(master_seed, problem name, trial)`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ce_core::{run_ce_with_start, CEConfig, ModelSpec, SharedStart};
use crate::crossval::{run_plmco_ce_with_start, CandidateGrid};
use crate::distributions::SmoothingConfig;
use crate::error::{Error, Result};
use crate::objectives::{default_dim, make_problem, Problem, PROBLEM_NAMES};
use crate::rng::{derive_seed, fnv1a64};
use crate::scalar::Real;

/// The benchmark algorithm vocabulary: fixed-kappa single Gaussians,
/// fixed-kappa 3-component mixtures, and the two cross-validated variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Ces05,
    Ces10,
    Ces15,
    Cem05,
    Cem10,
    Cem15,
    Cesx,
    Cemx,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Ces05,
        Algorithm::Ces10,
        Algorithm::Ces15,
        Algorithm::Cem05,
        Algorithm::Cem10,
        Algorithm::Cem15,
        Algorithm::Cesx,
        Algorithm::Cemx,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ces05 => "CES05",
            Algorithm::Ces10 => "CES10",
            Algorithm::Ces15 => "CES15",
            Algorithm::Cem05 => "CEM05",
            Algorithm::Cem10 => "CEM10",
            Algorithm::Cem15 => "CEM15",
            Algorithm::Cesx => "CESX",
            Algorithm::Cemx => "CEMX",
        }
    }

    /// True for the cross-validated variants.
    pub fn is_selecting(&self) -> bool {
        matches!(self, Algorithm::Cesx | Algorithm::Cemx)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        Algorithm::ALL
            .iter()
            .find(|a| a.name() == up)
            .copied()
            .ok_or_else(|| Error::UnknownAlgorithm {
                name: s.to_string(),
                known: Algorithm::ALL.map(|a| a.name()).join(", "),
            })
    }
}

/// One recorded point of a convergence series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint<F> {
    /// Objective evaluations consumed when the point was recorded.
    pub evals: u64,
    /// Best objective value found so far.
    pub best_g: F,
    /// Elite threshold of the iteration that produced the point.
    pub gamma: F,
    /// Elite fraction used by that iteration (the CV winner for selecting
    /// algorithms, the configured value otherwise).
    pub kappa_sel: f64,
    /// Component count used by that iteration.
    pub k_sel: usize,
}

/// One algorithm's convergence series on one trial of one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult<F> {
    pub problem: String,
    pub algorithm: String,
    pub trial: u64,
    pub series: Vec<SeriesPoint<F>>,
}

/// Benchmark parameters. `None` budget/population sizes scale with the
/// problem dimension (`20_000 * d` evaluations, `50 * d` samples).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    /// Registry names (e.g. "rosenbrock", "hartman6").
    pub problems: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub trials: u64,
    pub master_seed: u64,
    /// Evaluation budget per run; `None` scales with dimension.
    pub budget: Option<u64>,
    /// Population size per iteration; `None` scales with dimension.
    pub pop_size: Option<usize>,
    pub smoothing: SmoothingConfig,
    pub archive_window: usize,
    /// Fold count for the cross-validated variants.
    pub cv_folds: usize,
    /// Elite-fraction grid for the cross-validated variants.
    pub cv_kappas: Vec<f64>,
    /// Component-count grid for the mixture cross-validated variant.
    pub cv_component_counts: Vec<usize>,
    /// Target number of checkpoints per problem (geometric grid).
    pub checkpoint_count: usize,
    /// Worker threads (0 = one per core).
    pub threads: usize,
    /// Dimension used when "rosenbrock" is requested.
    pub rosenbrock_dim: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            problems: PROBLEM_NAMES.iter().map(|s| s.to_string()).collect(),
            algorithms: Algorithm::ALL.to_vec(),
            trials: 30,
            master_seed: 1,
            budget: None,
            pop_size: None,
            smoothing: SmoothingConfig::default(),
            archive_window: 1,
            cv_folds: 4,
            cv_kappas: vec![0.05, 0.10, 0.15],
            cv_component_counts: vec![1, 2, 3],
            checkpoint_count: 50,
            threads: 0,
            rosenbrock_dim: 8,
        }
    }
}

/// Default population size for dimension `d`.
pub fn default_pop_size(d: usize) -> usize {
    50 * d
}

/// Default evaluation budget for dimension `d`.
pub fn default_budget(d: usize) -> u64 {
    20_000 * d as u64
}

/// A geometric evaluation-count grid from the first population to the
/// budget: `n` target points, rounded and deduplicated, always starting at
/// `pop` and ending at `budget`.
pub fn checkpoint_grid(pop: u64, budget: u64, n: usize) -> Vec<u64> {
    assert!(pop > 0, "population must be positive");
    if budget <= pop {
        return vec![budget];
    }
    let n = n.max(2);
    let lo = pop as f64;
    let hi = budget as f64;
    let mut grid: Vec<u64> = (0..n)
        .map(|i| {
            let frac = i as f64 / (n - 1) as f64;
            (lo * (hi / lo).powf(frac)).round() as u64
        })
        .collect();
    grid[0] = pop;
    let last = grid.len() - 1;
    grid[last] = budget;
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// The per-algorithm configuration: a CE config plus, for the selecting
/// variants, a candidate grid.
pub fn algorithm_setup(
    alg: Algorithm,
    params: &BenchParams,
    pop_size: usize,
    budget: u64,
) -> (CEConfig, Option<CandidateGrid>) {
    let (kappa, model, grid) = match alg {
        Algorithm::Ces05 => (0.05, ModelSpec::Single, None),
        Algorithm::Ces10 => (0.10, ModelSpec::Single, None),
        Algorithm::Ces15 => (0.15, ModelSpec::Single, None),
        Algorithm::Cem05 => (0.05, ModelSpec::Mixture(3), None),
        Algorithm::Cem10 => (0.10, ModelSpec::Mixture(3), None),
        Algorithm::Cem15 => (0.15, ModelSpec::Mixture(3), None),
        Algorithm::Cesx => (
            0.10,
            ModelSpec::Single,
            Some(CandidateGrid {
                kappas: params.cv_kappas.clone(),
                component_counts: vec![1],
                folds: params.cv_folds,
            }),
        ),
        Algorithm::Cemx => (
            0.10,
            ModelSpec::Mixture(3),
            Some(CandidateGrid {
                kappas: params.cv_kappas.clone(),
                component_counts: params.cv_component_counts.clone(),
                folds: params.cv_folds,
            }),
        ),
    };
    let cfg = CEConfig {
        pop_size,
        kappa,
        model,
        smoothing: params.smoothing,
        max_evals: budget,
        archive_window: params.archive_window,
    };
    (cfg, grid)
}

/// Everything a benchmark run produces.
#[derive(Clone, Debug)]
pub struct BenchOutput<F> {
    /// One series per (problem, algorithm, trial), sorted.
    pub results: Vec<TrialResult<F>>,
    /// Aggregated rows, sorted by (problem, algorithm, evals).
    pub aggregate: Vec<AggregateRow<F>>,
    /// The checkpoint grid per problem instance.
    pub checkpoints: BTreeMap<String, Vec<u64>>,
    /// Known optima per problem instance (`None` when unknown).
    pub g_star: BTreeMap<String, Option<F>>,
}

/// Runs the full benchmark. Trials parallelize over (problem, trial) pairs;
/// the algorithms within a pair share their first population. The trial seed
/// is `derive_seed(master, [fnv1a(problem instance name), trial])`, so
/// results do not depend on which other problems or trials run.
pub fn run_benchmark<F: Real>(params: &BenchParams) -> Result<BenchOutput<F>> {
    if params.trials == 0 {
        return Err(Error::InvalidConfig(vec!["trials must be at least 1".into()]));
    }
    if params.algorithms.is_empty() {
        return Err(Error::InvalidConfig(vec!["no algorithms selected".into()]));
    }
    if params.problems.is_empty() {
        return Err(Error::InvalidConfig(vec!["no problems selected".into()]));
    }
    // Resolve and validate everything up front so failures are immediate.
    let mut problems: Vec<(Problem<F>, usize, u64, Vec<u64>)> = Vec::new();
    for name in &params.problems {
        let dim = if name == "rosenbrock" {
            params.rosenbrock_dim
        } else {
            match default_dim(name) {
                Some(d) => d,
                // Unknown name: let the registry produce its canonical error.
                None => return Err(make_problem::<F>(name, 1).unwrap_err()),
            }
        };
        let problem = make_problem::<F>(name, dim)?;
        let pop = params.pop_size.unwrap_or_else(|| default_pop_size(dim));
        let budget = params.budget.unwrap_or_else(|| default_budget(dim));
        let cps = checkpoint_grid(pop as u64, budget, params.checkpoint_count);
        for &alg in &params.algorithms {
            let (cfg, grid) = algorithm_setup(alg, params, pop, budget);
            cfg.validate(dim)?;
            if let Some(g) = &grid {
                g.validate(cfg.model)?;
            }
        }
        problems.push((problem, pop, budget, cps));
    }

    let tasks: Vec<(usize, u64)> = (0..problems.len())
        .flat_map(|pi| (0..params.trials).map(move |t| (pi, t)))
        .collect();

    let run_task = |&(pi, trial): &(usize, u64)| -> Result<Vec<TrialResult<F>>> {
        let (problem, pop, budget, cps) = &problems[pi];
        let trial_seed =
            derive_seed(params.master_seed, &[fnv1a64(problem.name().as_bytes()), trial]);
        let start = SharedStart::draw(problem, *pop, trial_seed)?;
        let mut out = Vec::with_capacity(params.algorithms.len());
        for &alg in &params.algorithms {
            let (cfg, grid) = algorithm_setup(alg, params, *pop, *budget);
            let mut result = match grid {
                None => run_ce_with_start(problem, &cfg, trial_seed, cps, Some(&start))?,
                Some(g) => {
                    run_plmco_ce_with_start(problem, &cfg, &g, trial_seed, cps, Some(&start))?
                }
            };
            result.algorithm = alg.name().to_string();
            result.trial = trial;
            out.push(result);
        }
        Ok(out)
    };

    let nested: Vec<Result<Vec<TrialResult<F>>>> = if params.threads == 1 {
        tasks.iter().map(run_task).collect()
    } else {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if params.threads > 0 {
            builder = builder.num_threads(params.threads);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run_task).collect())
    };

    let mut results: Vec<TrialResult<F>> = Vec::new();
    for r in nested {
        results.extend(r?);
    }
    sort_results(&mut results);

    let checkpoints: BTreeMap<String, Vec<u64>> = problems
        .iter()
        .map(|(p, _, _, cps)| (p.name().to_string(), cps.clone()))
        .collect();
    let g_star: BTreeMap<String, Option<F>> =
        problems.iter().map(|(p, _, _, _)| (p.name().to_string(), p.g_star())).collect();
    let aggregate = aggregate(&results, &checkpoints, &g_star);
    Ok(BenchOutput { results, aggregate, checkpoints, g_star })
}

fn sort_results<F: Real>(results: &mut [TrialResult<F>]) {
    results.sort_by(|a, b| {
        (&a.problem, &a.algorithm, a.trial).cmp(&(&b.problem, &b.algorithm, b.trial))
    });
}

/// One aggregated row: trial statistics of the best-so-far value at one
/// checkpoint. Values are gaps `best_g - g_star` when the optimum is known,
/// raw `best_g` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow<F> {
    pub problem: String,
    pub algorithm: String,
    pub evals: u64,
    pub mean: F,
    pub ci95: F,
    pub median: F,
    pub min: F,
    pub max: F,
}

/// Best-so-far value of one series at evaluation count `c`: the last
/// recorded point at or before `c`, backfilled with the first recorded
/// point when `c` precedes the whole series.
fn value_at<F: Real>(series: &[SeriesPoint<F>], c: u64) -> F {
    let mut v = series.first().expect("non-empty series").best_g;
    for pt in series {
        if pt.evals <= c {
            v = pt.best_g;
        } else {
            break;
        }
    }
    v
}

/// Aggregates trial series into per-checkpoint statistics, carrying each
/// series forward between its recorded points. The 95% interval half-width
/// is `1.96 * s / sqrt(n)` with the sample standard deviation (0 for a
/// single trial).
pub fn aggregate<F: Real>(
    results: &[TrialResult<F>],
    checkpoints: &BTreeMap<String, Vec<u64>>,
    g_star: &BTreeMap<String, Option<F>>,
) -> Vec<AggregateRow<F>> {
    let mut grouped: BTreeMap<(&str, &str), Vec<&TrialResult<F>>> = BTreeMap::new();
    for r in results {
        if r.series.is_empty() {
            continue;
        }
        grouped.entry((r.problem.as_str(), r.algorithm.as_str())).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((problem, algorithm), trials) in grouped {
        let Some(cps) = checkpoints.get(problem) else { continue };
        let shift = g_star.get(problem).copied().flatten();
        for &c in cps {
            let mut values: Vec<F> = trials
                .iter()
                .map(|t| {
                    let v = value_at(&t.series, c);
                    match shift {
                        Some(gs) => v - gs,
                        None => v,
                    }
                })
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
            let n = values.len();
            let nf = F::of(n as f64);
            let mean = values.iter().copied().sum::<F>() / nf;
            let ci95 = if n > 1 {
                let ss: F = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
                let sd = (ss / F::of((n - 1) as f64)).sqrt();
                F::of(1.96) * sd / nf.sqrt()
            } else {
                F::zero()
            };
            let median = if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / F::of(2.0)
            };
            rows.push(AggregateRow {
                problem: problem.to_string(),
                algorithm: algorithm.to_string(),
                evals: c,
                mean,
                ci95,
                median,
                min: values[0],
                max: values[n - 1],
            });
        }
    }
    rows
}

/// Round-trip-exact float formatting shared by every CSV column.
pub fn fmt_float<F: Real>(v: F) -> String {
    format!("{v:.16e}")
}

/// Writes the raw per-trial series CSV:
/// `problem,algorithm,trial,evals,best_g,kappa_sel,k_sel`, rows sorted by
/// (problem, algorithm, trial, evals), floats round-trip exact, LF endings.
pub fn write_raw_csv<F: Real, W: Write>(w: &mut W, results: &[TrialResult<F>]) -> Result<()> {
    let mut ordered: Vec<&TrialResult<F>> = results.iter().collect();
    ordered.sort_by(|a, b| {
        (&a.problem, &a.algorithm, a.trial).cmp(&(&b.problem, &b.algorithm, b.trial))
    });
    writeln!(w, "problem,algorithm,trial,evals,best_g,kappa_sel,k_sel")?;
    for r in ordered {
        for pt in &r.series {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.problem,
                r.algorithm,
                r.trial,
                pt.evals,
                fmt_float(pt.best_g),
                fmt_float(F::of(pt.kappa_sel)),
                pt.k_sel
            )?;
        }
    }
    Ok(())
}

/// Writes the aggregate CSV:
/// `problem,algorithm,evals,mean,ci95,median,min,max`, sorted rows, floats
/// round-trip exact, LF endings.
pub fn write_aggregate_csv<F: Real, W: Write>(w: &mut W, rows: &[AggregateRow<F>]) -> Result<()> {
    let mut ordered: Vec<&AggregateRow<F>> = rows.iter().collect();
    ordered.sort_by(|a, b| {
        (&a.problem, &a.algorithm, a.evals).cmp(&(&b.problem, &b.algorithm, b.evals))
    });
    writeln!(w, "problem,algorithm,evals,mean,ci95,median,min,max")?;
    for r in ordered {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.problem,
            r.algorithm,
            r.evals,
            fmt_float(r.mean),
            fmt_float(r.ci95),
            fmt_float(r.median),
            fmt_float(r.min),
            fmt_float(r.max)
        )?;
    }
    Ok(())
}

/// Parses an aggregate CSV produced by [`write_aggregate_csv`].
pub fn parse_aggregate_csv<F: Real>(text: &str) -> Result<Vec<AggregateRow<F>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty aggregate CSV".into()))?;
    if header.trim_end() != "problem,algorithm,evals,mean,ci95,median,min,max" {
        return Err(Error::InvalidArgument(format!("unexpected aggregate header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(Error::InvalidArgument(format!(
                "aggregate row {} has {} fields, expected 8",
                i + 2,
                parts.len()
            )));
        }
        let field = |j: usize| -> Result<F> {
            parts[j]
                .parse::<f64>()
                .map(F::of)
                .map_err(|e| Error::InvalidArgument(format!("row {}: bad float '{}': {e}", i + 2, parts[j])))
        };
        rows.push(AggregateRow {
            problem: parts[0].to_string(),
            algorithm: parts[1].to_string(),
            evals: parts[2]
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("row {}: bad evals: {e}", i + 2)))?,
            mean: field(3)?,
            ci95: field(4)?,
            median: field(5)?,
            min: field(6)?,
            max: field(7)?,
        });
    }
    Ok(rows)
}
