//! Subcommand definitions and implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mco_ce::bench::{
    fmt_float, parse_aggregate_csv, run_benchmark, write_aggregate_csv, write_raw_csv,
    AggregateRow, Algorithm,
};
use mco_ce::mc_integration::{
    empirical_bias_variance, importance_estimate, naive_mco_argmin,
    optimal_importance_density_1d, Density1d, UniformDensity,
};
use mco_ce::objectives::{default_dim, make_problem, PROBLEM_NAMES};
use mco_ce::rng::substream;
use mco_ce::Error;

use crate::config::{resolve_threads, RunConfig};
use crate::svg::{render_plot, PlotKind};

/// How a command failed, which decides the process exit code: bad input that
/// the caller should fix exits 2, everything that went wrong underway exits 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

/// Cross-entropy optimization benchmarks: run them, plot them, poke at the
/// Monte Carlo foundations.
#[derive(Parser, Debug)]
#[command(name = "mco-ce", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the benchmark suite and write raw + aggregate CSV files.
    Bench(BenchArgs),
    /// Render SVG convergence charts from an aggregate CSV.
    Plot(PlotArgs),
    /// Small Monte Carlo demonstrations that write CSV files.
    Lab(LabArgs),
    /// List the problem registry and the algorithm vocabulary.
    List,
}

/// Flags mirror the configuration file: every flag overrides its key.
#[derive(Args, Debug, Default)]
pub struct BenchArgs {
    /// JSON run configuration; flags override individual keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Comma-separated problem names.
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub problems: Option<Vec<String>>,
    /// Comma-separated algorithm names (CES05..CEMX).
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub algorithms: Option<Vec<String>>,
    /// Independent trials per (problem, algorithm).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Evaluation budget per run (default scales with dimension).
    #[arg(long)]
    pub budget: Option<u64>,
    /// Population size per iteration (default scales with dimension).
    #[arg(long)]
    pub pop_size: Option<usize>,
    /// Mean/weight smoothing factor in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Base covariance smoothing factor in [0, 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Covariance smoothing decay exponent (positive).
    #[arg(long)]
    pub q: Option<f64>,
    /// Fold count for the cross-validated variants.
    #[arg(long)]
    pub cv_folds: Option<usize>,
    /// Comma-separated elite-fraction candidates in (0, 1).
    #[arg(long, value_delimiter = ',', value_name = "FRACTIONS")]
    pub cv_kappas: Option<Vec<f64>>,
    /// Comma-separated component-count candidates.
    #[arg(long, value_delimiter = ',', value_name = "COUNTS")]
    pub cv_components: Option<Vec<usize>>,
    /// How many past populations the elite pool keeps.
    #[arg(long)]
    pub archive_window: Option<usize>,
    /// Target number of recorded checkpoints per problem.
    #[arg(long)]
    pub checkpoints: Option<usize>,
    /// Dimension used when "rosenbrock" is requested.
    #[arg(long)]
    pub rosenbrock_dim: Option<usize>,
    /// Output directory for raw.csv, aggregate.csv, and config.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core); beats MCO_CE_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Aggregate CSV produced by `bench`.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output directory for the SVG files.
    #[arg(long, value_name = "DIR", default_value = "plots")]
    pub out: PathBuf,
    /// Which chart(s) to render per problem.
    #[arg(long, value_enum, default_value_t = PlotKindArg::Both)]
    pub kind: PlotKindArg,
    /// Shift log-chart values by the smallest observed value first (for
    /// problems whose optimum is unknown).
    #[arg(long)]
    pub empirical: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKindArg {
    MeanCi,
    SemilogMedian,
    Both,
}

impl PlotKindArg {
    fn kinds(self) -> Vec<PlotKind> {
        match self {
            PlotKindArg::MeanCi => vec![PlotKind::MeanCi],
            PlotKindArg::SemilogMedian => vec![PlotKind::SemilogMedian],
            PlotKindArg::Both => vec![PlotKind::MeanCi, PlotKind::SemilogMedian],
        }
    }
}

#[derive(Args, Debug)]
pub struct LabArgs {
    #[command(subcommand)]
    pub demo: LabDemo,
}

#[derive(Args, Clone, Debug)]
pub struct LabCommon {
    /// Independent repetitions.
    #[arg(long, default_value_t = 200)]
    pub reps: u64,
    /// Sample size per repetition.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Seed for the demonstration's random draws.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for the CSV file.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum LabDemo {
    /// Importance-sampling estimates of a known integral under two proposal
    /// densities: both center on the truth, with very different spreads.
    IsUnbiased(LabCommon),
    /// Empirical mse = bias^2 + variance decomposition across sample sizes.
    BiasVariance(LabCommon),
    /// Naive Monte Carlo optimization selecting over a shared finite sample:
    /// the picked parameter scatters around the true minimizer.
    NaiveMco(LabCommon),
}

/// Runs one parsed command; the caller maps `Failure` to an exit code.
pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Bench(args) => cmd_bench(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Lab(args) => cmd_lab(args),
        Command::List => {
            print!("{}", list_text());
            Ok(())
        }
    }
}

/// Configuration mistakes exit 2 no matter which layer caught them; genuine
/// runtime failures exit 1.
fn classify(e: Error) -> Failure {
    match e {
        Error::InvalidConfig(_)
        | Error::UnknownProblem { .. }
        | Error::UnknownAlgorithm { .. }
        | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_file(path: &Path, content: &[u8]) -> Result<(), Failure> {
    fs::write(path, content)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_json(&text).map_err(Failure::Usage)?
        }
        None => RunConfig::default(),
    };
    cfg.apply_overrides(args);
    let env_threads = std::env::var("MCO_CE_THREADS").ok();
    cfg.threads = resolve_threads(args.threads, env_threads.as_deref(), cfg.threads)
        .map_err(Failure::Usage)?;
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(Failure::Usage(format!(
            "invalid configuration:\n  - {}",
            violations.join("\n  - ")
        )));
    }

    let params = cfg.to_bench_params();
    let output = run_benchmark::<f64>(&params).map_err(classify)?;

    let out_dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut raw = Vec::new();
    write_raw_csv(&mut raw, &output.results).map_err(runtime)?;
    let raw_path = out_dir.join("raw.csv");
    write_file(&raw_path, &raw)?;

    let mut agg = Vec::new();
    write_aggregate_csv(&mut agg, &output.aggregate).map_err(runtime)?;
    let agg_path = out_dir.join("aggregate.csv");
    write_file(&agg_path, &agg)?;

    let cfg_path = out_dir.join("config.json");
    write_file(&cfg_path, cfg.to_json().as_bytes())?;

    println!(
        "ran {} problem(s) x {} algorithm(s) x {} trial(s)",
        params.problems.len(),
        params.algorithms.len(),
        params.trials
    );
    println!("wrote {} ({} series)", raw_path.display(), output.results.len());
    println!("wrote {} ({} rows)", agg_path.display(), output.aggregate.len());
    println!("wrote {}", cfg_path.display());
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", args.input.display())))?;
    let rows: Vec<AggregateRow<f64>> = parse_aggregate_csv(&text).map_err(runtime)?;
    if rows.is_empty() {
        println!("no rows in {}; nothing to plot", args.input.display());
        return Ok(());
    }
    let mut by_problem: BTreeMap<&str, Vec<AggregateRow<f64>>> = BTreeMap::new();
    for r in &rows {
        by_problem.entry(r.problem.as_str()).or_default().push(r.clone());
    }
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", args.out.display())))?;
    for (problem, rows) in &by_problem {
        for kind in args.kind.kinds() {
            let svg = render_plot(problem, rows, kind, args.empirical);
            let path = args.out.join(format!("{problem}-{}.svg", kind.slug()));
            write_file(&path, svg.as_bytes())?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_lab(args: &LabArgs) -> Result<(), Failure> {
    let (common, name, result) = match &args.demo {
        LabDemo::IsUnbiased(c) => (c, "is_unbiased", lab_is_unbiased(c.reps, c.m, c.seed)),
        LabDemo::BiasVariance(c) => (c, "bias_variance", lab_bias_variance(c.reps, c.m, c.seed)),
        LabDemo::NaiveMco(c) => (c, "naive_mco", lab_naive_mco(c.reps, c.m, c.seed)),
    };
    if common.reps == 0 || common.m == 0 {
        return Err(Failure::Usage("reps and m must both be at least 1".into()));
    }
    let (csv, summary) = result?;
    fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", common.out.display())))?;
    let path = common.out.join(format!("{name}.csv"));
    write_file(&path, csv.as_bytes())?;
    println!("{summary}");
    println!("wrote {}", path.display());
    Ok(())
}

/// The registry listing: problems with dimension and optimum, and the
/// algorithm vocabulary.
pub fn list_text() -> String {
    let mut s = String::from("problems (name dim g_star):\n");
    for name in PROBLEM_NAMES {
        let dim = default_dim(name).expect("registry name");
        let p = make_problem::<f64>(name, dim).expect("registry name");
        let gs = match p.g_star() {
            Some(g) => format!("{g:.5}"),
            None => "unknown".into(),
        };
        let _ = writeln!(s, "  {name} {dim} {gs}");
    }
    s.push_str("algorithms:\n");
    for a in Algorithm::ALL {
        let _ = writeln!(s, "  {}", a.name());
    }
    s
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The integral everything in the lab estimates: `int_0^1 x^2 dx = 1/3`.
const LAB_TRUTH: f64 = 1.0 / 3.0;

fn lab_integrand(x: f64) -> f64 {
    x * x
}

/// Estimates the same integral `reps` times under a uniform proposal and
/// under the (discretized) optimal proposal shaped like the integrand. Both
/// estimators average to the truth; the optimal one's spread is tiny.
pub fn lab_is_unbiased(reps: u64, m: usize, seed: u64) -> Result<(String, String), Failure> {
    let uniform = UniformDensity::new(0.0, 1.0).map_err(runtime)?;
    let optimal = optimal_importance_density_1d(lab_integrand, (0.0, 1.0), 64).map_err(runtime)?;
    let mut csv = String::from("rep,uniform,optimal\n");
    let mut us = Vec::with_capacity(reps as usize);
    let mut os = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let eu = importance_estimate(lab_integrand, &uniform, m, &mut substream(seed, &[10, rep]))
            .map_err(runtime)?;
        let eo = importance_estimate(lab_integrand, &optimal, m, &mut substream(seed, &[11, rep]))
            .map_err(runtime)?;
        let _ = writeln!(csv, "{rep},{},{}", fmt_float(eu.value), fmt_float(eo.value));
        us.push(eu.value);
        os.push(eo.value);
    }
    let (um, use_) = mean_and_se(&us);
    let (om, ose) = mean_and_se(&os);
    let summary = format!(
        "truth {LAB_TRUTH:.6}: uniform proposal mean {um:.6} (se {use_:.2e}), \
         integrand-shaped proposal mean {om:.6} (se {ose:.2e})"
    );
    Ok((csv, summary))
}

/// Decomposes the uniform-proposal estimator's error at growing sample sizes:
/// the bias term stays noise-level while the variance shrinks like 1/m.
pub fn lab_bias_variance(reps: u64, m: usize, seed: u64) -> Result<(String, String), Failure> {
    let uniform = UniformDensity::new(0.0, 1.0).map_err(runtime)?;
    let mut csv = String::from("m,mse,bias_sq,variance\n");
    let mut first_var = None;
    let mut last_var = None;
    for (i, mult) in [1usize, 2, 4, 8].into_iter().enumerate() {
        let mm = m * mult;
        let estimates: Vec<f64> = (0..reps)
            .map(|rep| {
                importance_estimate(
                    lab_integrand,
                    &uniform,
                    mm,
                    &mut substream(seed, &[13, i as u64, rep]),
                )
                .map(|e| e.value)
                .map_err(runtime)
            })
            .collect::<Result<_, _>>()?;
        let report = empirical_bias_variance(&estimates, LAB_TRUTH).map_err(runtime)?;
        let _ = writeln!(
            csv,
            "{mm},{},{},{}",
            fmt_float(report.mse),
            fmt_float(report.bias_sq),
            fmt_float(report.variance)
        );
        if first_var.is_none() {
            first_var = Some(report.variance);
        }
        last_var = Some(report.variance);
    }
    let summary = format!(
        "variance fell from {:.3e} at m={} to {:.3e} at m={} (truth {LAB_TRUTH:.6})",
        first_var.unwrap_or(f64::NAN),
        m,
        last_var.unwrap_or(f64::NAN),
        m * 8
    );
    Ok((csv, summary))
}

/// Naive Monte Carlo optimization of `E[(x - theta)^2]`, x uniform on [0, 1]:
/// the argmin over a shared sample picks the grid point nearest the sample
/// mean, so small samples scatter the selection around the true 0.5.
pub fn lab_naive_mco(reps: u64, m: usize, seed: u64) -> Result<(String, String), Failure> {
    let uniform = UniformDensity::new(0.0, 1.0).map_err(runtime)?;
    let thetas: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    let true_index = 20usize; // theta = 0.5
    let mut csv = String::from("rep,selected_index,selected_theta\n");
    let mut exact = 0u64;
    let mut theta_sum = 0.0;
    for rep in 0..reps {
        let mut rng = substream(seed, &[12, rep]);
        let data: Vec<(f64, f64)> =
            (0..m).map(|_| (uniform.sample(&mut rng), 1.0)).collect();
        let idx = naive_mco_argmin(&thetas, |t: &f64, x: &f64| (x - t) * (x - t), &data)
            .map_err(runtime)?;
        let _ = writeln!(csv, "{rep},{idx},{}", fmt_float(thetas[idx]));
        if idx == true_index {
            exact += 1;
        }
        theta_sum += thetas[idx];
    }
    let summary = format!(
        "true minimizer theta=0.5 (index {true_index}); picked exactly {exact}/{reps} times, \
         mean selection {:.4}",
        theta_sum / reps as f64
    );
    Ok((csv, summary))
}
