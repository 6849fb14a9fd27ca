//! The cross-entropy method for continuous minimization: population
//! sampling from a parametric proposal, elite selection at percentile
//! `kappa`, KL-minimizing refit of the proposal on the elites (unity weights,
//! the CE convention), and dynamically damped smoothing.
//!
//! # Random-stream discipline
//!
//! Every consumer derives its own substream from `(seed, iteration,
//! purpose)` — see [`crate::rng`]. Population draws never share a stream
//! with fitting, so a hyperparameter-selecting run (see [`crate::crossval`])
//! that happens to pick the same `(kappa, K)` every iteration reproduces a
//! fixed-parameter run bit for bit.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bench::{SeriesPoint, TrialResult};
use crate::distributions::{
    em_fit_mixture, smooth_gaussian, smooth_mixture, weighted_gaussian_mle, DistributionId,
    EmInit, GaussianParams, MixtureParams, SmoothingConfig, WeightedPoint,
};
use crate::error::{Error, Result};
use crate::objectives::Problem;
use crate::rng::{purpose, substream};
use crate::scalar::Real;

/// Importance-weight cap shared by elite weighting and held-out scoring.
pub const WEIGHT_CAP: f64 = 1e12;

/// The proposal family a run fits: a single Gaussian or a K-component
/// mixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Single,
    Mixture(usize),
}

impl ModelSpec {
    /// Component count of the family (1 for a single Gaussian).
    pub fn component_count(&self) -> usize {
        match self {
            ModelSpec::Single => 1,
            ModelSpec::Mixture(k) => *k,
        }
    }
}

/// A proposal distribution of either family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum Proposal<F: Real> {
    Single(GaussianParams<F>),
    Mixture(MixtureParams<F>),
}

impl<F: Real> Proposal<F> {
    pub fn dim(&self) -> usize {
        match self {
            Proposal::Single(g) => g.dim(),
            Proposal::Mixture(m) => m.dim(),
        }
    }

    /// Current component count (1 for single).
    pub fn component_count(&self) -> usize {
        match self {
            Proposal::Single(_) => 1,
            Proposal::Mixture(m) => m.k(),
        }
    }

    pub fn logpdf(&self, x: &[F]) -> F {
        match self {
            Proposal::Single(g) => g.logpdf(x),
            Proposal::Mixture(m) => m.logpdf(x),
        }
    }

    pub fn sample_one<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        match self {
            Proposal::Single(g) => g.sample_one(rng),
            Proposal::Mixture(m) => m.sample_one(rng),
        }
    }
}

/// A sample tagged with the proposal that generated it: the log-density is
/// recorded at generation time so importance ratios stay available after the
/// proposal moves on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedSample<F> {
    pub x: Vec<F>,
    /// Objective value `G(x)`, evaluated exactly once at draw time.
    pub g: F,
    /// Which archived generator drew this sample.
    pub gen_id: DistributionId,
    /// `ln q_gen(x)` at generation time.
    pub gen_logpdf: F,
}

/// Configuration of a CE run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CEConfig {
    /// Samples drawn per iteration.
    pub pop_size: usize,
    /// Elite fraction in (0, 1); the elite count is `ceil(kappa * pool)`.
    pub kappa: f64,
    /// Proposal family.
    pub model: ModelSpec,
    /// Smoothing schedule for proposal updates.
    pub smoothing: SmoothingConfig,
    /// Total evaluation budget; the run stops before exceeding it.
    pub max_evals: u64,
    /// How many past iterations' samples stay in the selection pool
    /// (1 = classical CE, current population only).
    pub archive_window: usize,
}

impl CEConfig {
    /// Validates the configuration against a problem dimension, collecting
    /// every violation.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut violations = Vec::new();
        if self.pop_size < 2 {
            violations.push(format!("pop_size must be at least 2, got {}", self.pop_size));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            violations.push(format!("kappa must lie in (0, 1), got {}", self.kappa));
        } else if elite_count(self.kappa, self.pop_size) < dim + 1 {
            violations.push(format!(
                "elite count ceil({} * {}) = {} is below the covariance-fit floor d + 1 = {}",
                self.kappa,
                self.pop_size,
                elite_count(self.kappa, self.pop_size),
                dim + 1
            ));
        }
        if (self.max_evals as u128) < self.pop_size as u128 {
            violations.push(format!(
                "max_evals {} cannot absorb a single population of {}",
                self.max_evals, self.pop_size
            ));
        }
        if self.archive_window == 0 {
            violations.push("archive_window must be at least 1".into());
        }
        for (name, v) in [("alpha", self.smoothing.alpha), ("beta", self.smoothing.beta)] {
            if !(0.0..=1.0).contains(&v) {
                violations.push(format!("smoothing {name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.smoothing.q > 0.0) {
            violations.push(format!("smoothing q must be positive, got {}", self.smoothing.q));
        }
        if let ModelSpec::Mixture(k) = self.model {
            if k == 0 {
                violations.push("mixture component count must be at least 1".into());
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations))
        }
    }
}

/// Elite count `ceil(kappa * n)`, with the product snapped to the nearest
/// integer when within 1e-9 so that nominal fractions like 0.10 of 100 never
/// round up through floating-point dust.
pub fn elite_count(kappa: f64, n: usize) -> usize {
    let m = kappa * n as f64;
    let snapped = if (m - m.round()).abs() < 1e-9 { m.round() } else { m.ceil() };
    snapped as usize
}

/// Best point found so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Best<F> {
    pub x: Vec<F>,
    pub g: F,
}

/// Mutable state of a CE run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CEState<F: Real> {
    /// Completed iterations (the next population draw is tagged with this).
    pub t: u64,
    /// Master seed all substreams derive from.
    pub seed: u64,
    /// Current proposal θ_t.
    pub theta: Proposal<F>,
    /// Frozen generator distributions, indexed by [`DistributionId`].
    pub generators: Vec<Proposal<F>>,
    /// Per-iteration sample batches, oldest first, at most `archive_window`.
    pub archive: VecDeque<Vec<TaggedSample<F>>>,
    /// Best point over every sample ever absorbed (not only the archive).
    pub best: Option<Best<F>>,
    /// Elite threshold γ of the most recent update.
    pub gamma: Option<F>,
    /// Objective evaluations consumed.
    pub evals_used: u64,
}

/// The initial proposal for a problem: for a single Gaussian, the
/// region-center Gaussian (mean at the region center, variance `(width/2)^2`
/// per coordinate); for a mixture, `K` components at uniformly random region
/// points (stream keyed by the seed and a dedicated purpose tag), each with
/// the region covariance, at equal weights.
pub fn init_state<F: Real>(problem: &Problem<F>, cfg: &CEConfig, seed: u64) -> Result<CEState<F>> {
    cfg.validate(problem.dim())?;
    let theta = match cfg.model {
        ModelSpec::Single => Proposal::Single(region_gaussian(problem)?),
        ModelSpec::Mixture(k) => {
            let mut rng = substream(seed, &[purpose::THETA0]);
            let region = problem.init_region();
            let d = problem.dim();
            let variances: Vec<F> = region
                .iter()
                .map(|&(a, b)| {
                    let half = (b - a) / F::of(2.0);
                    half * half
                })
                .collect();
            let mut comps = Vec::with_capacity(k);
            for _ in 0..k {
                let mean: Vec<F> = (0..d)
                    .map(|j| {
                        let (a, b) = region[j];
                        a + (b - a) * F::unit_uniform(&mut rng)
                    })
                    .collect();
                comps.push(GaussianParams::diagonal(mean, &variances)?);
            }
            Proposal::Mixture(MixtureParams::new(vec![F::one(); k], comps)?)
        }
    };
    Ok(CEState {
        t: 0,
        seed,
        theta,
        generators: Vec::new(),
        archive: VecDeque::new(),
        best: None,
        gamma: None,
        evals_used: 0,
    })
}

/// The region-center Gaussian used both for single-model initialization and
/// as the shared first-population generator.
pub fn region_gaussian<F: Real>(problem: &Problem<F>) -> Result<GaussianParams<F>> {
    let region = problem.init_region();
    let mean: Vec<F> = region.iter().map(|&(a, b)| (a + b) / F::of(2.0)).collect();
    let variances: Vec<F> = region
        .iter()
        .map(|&(a, b)| {
            let half = (b - a) / F::of(2.0);
            half * half
        })
        .collect();
    GaussianParams::diagonal(mean, &variances)
}

/// A pre-drawn first population, shared across algorithms so that every
/// algorithm in a benchmark trial starts from identical information.
#[derive(Clone, Debug)]
pub struct SharedStart<F: Real> {
    /// The distribution the shared samples were drawn from.
    pub generator: GaussianParams<F>,
    /// The evaluated, tagged samples (gen_id 0 by construction).
    pub samples: Vec<TaggedSample<F>>,
}

impl<F: Real> SharedStart<F> {
    /// Draws and evaluates the shared first population.
    ///
    /// Uses the same substream a plain run would use for its first
    /// population, and the region-center Gaussian every single-model run
    /// starts from — so for single-Gaussian algorithms injection is a
    /// bit-exact no-op relative to drawing independently.
    pub fn draw(problem: &Problem<F>, pop_size: usize, seed: u64) -> Result<Self> {
        let generator = region_gaussian(problem)?;
        let mut rng = substream(seed, &[0, purpose::POPULATION]);
        let samples = (0..pop_size)
            .map(|_| {
                let x = generator.sample_one(&mut rng);
                let g = problem.eval(&x);
                let gen_logpdf = generator.logpdf(&x);
                TaggedSample { x, g, gen_id: DistributionId(0), gen_logpdf }
            })
            .collect();
        Ok(Self { generator, samples })
    }
}

/// Draws, evaluates, and absorbs one population from the current proposal.
///
/// Consumes the `(seed, t, population)` substream, registers the current
/// proposal in the generator table, trims the archive to the configured
/// window, updates the best-so-far, and advances the evaluation count.
/// Returns a copy of the drawn batch.
pub fn draw_population<F: Real>(
    state: &mut CEState<F>,
    problem: &Problem<F>,
    cfg: &CEConfig,
) -> Result<Vec<TaggedSample<F>>> {
    check_budget(state, cfg)?;
    let gen_id = DistributionId(state.generators.len());
    state.generators.push(state.theta.clone());
    let generator = &state.generators[gen_id.0];
    let mut rng = substream(state.seed, &[state.t, purpose::POPULATION]);
    let batch: Vec<TaggedSample<F>> = (0..cfg.pop_size)
        .map(|_| {
            let x = generator.sample_one(&mut rng);
            let g = problem.eval(&x);
            let gen_logpdf = generator.logpdf(&x);
            TaggedSample { x, g, gen_id, gen_logpdf }
        })
        .collect();
    absorb(state, cfg, batch.clone());
    Ok(batch)
}

/// Absorbs a pre-drawn shared first population instead of drawing one.
/// Only valid before any population has been absorbed.
pub fn inject_shared_start<F: Real>(
    state: &mut CEState<F>,
    cfg: &CEConfig,
    start: &SharedStart<F>,
) -> Result<()> {
    if state.t != 0 || !state.archive.is_empty() {
        return Err(Error::InvalidArgument("shared start must be injected before iteration 0".into()));
    }
    if start.samples.len() != cfg.pop_size {
        return Err(Error::InvalidArgument(format!(
            "shared start has {} samples, config wants pop_size {}",
            start.samples.len(),
            cfg.pop_size
        )));
    }
    check_budget(state, cfg)?;
    state.generators.push(Proposal::Single(start.generator.clone()));
    absorb(state, cfg, start.samples.clone());
    Ok(())
}

fn check_budget<F: Real>(state: &CEState<F>, cfg: &CEConfig) -> Result<()> {
    let needed = cfg.pop_size as u64;
    if state.evals_used + needed > cfg.max_evals {
        return Err(Error::BudgetExhausted {
            used: state.evals_used,
            budget: cfg.max_evals,
            needed,
        });
    }
    Ok(())
}

fn absorb<F: Real>(state: &mut CEState<F>, cfg: &CEConfig, batch: Vec<TaggedSample<F>>) {
    state.evals_used += batch.len() as u64;
    for s in &batch {
        let better = match &state.best {
            None => true,
            Some(b) => s.g < b.g,
        };
        if better {
            state.best = Some(Best { x: s.x.clone(), g: s.g });
        }
    }
    state.archive.push_back(batch);
    while state.archive.len() > cfg.archive_window {
        state.archive.pop_front();
    }
}

/// The current selection pool: every archived sample, oldest batch first.
pub fn current_pool<F: Real>(state: &CEState<F>) -> Vec<TaggedSample<F>> {
    state.archive.iter().flatten().cloned().collect()
}

fn cmp_g<F: Real>(a: F, b: F) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater, // NaN sorts worst
        (false, true) => Ordering::Less,
        (false, false) => a.partial_cmp(&b).expect("both comparable"),
    }
}

/// Selects the `ceil(kappa * n)` samples with the smallest objective values.
///
/// Ties at the threshold are broken by original order (stable). Returns the
/// elite batch in ascending-objective order and the threshold
/// `gamma = max elite g`.
pub fn select_elite<F: Real>(
    samples: &[TaggedSample<F>],
    kappa: f64,
) -> Result<(Vec<TaggedSample<F>>, F)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("cannot select elites from an empty pool".into()));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    let n = samples.len();
    let m = elite_count(kappa, n).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| cmp_g(samples[a].g, samples[b].g).then(a.cmp(&b)));
    let elite: Vec<TaggedSample<F>> = idx[..m].iter().map(|&i| samples[i].clone()).collect();
    let gamma = elite.last().expect("m >= 1").g;
    Ok((elite, gamma))
}

/// How elite samples are weighted for the refit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// The CE convention: the indicator's importance ratio is set to unity on
    /// elites (and zero off them), so every elite weighs 1.
    CeUnity,
    /// The literal importance ratio `1/q_gen(x)` of the indicator estimate
    /// (the indicator itself is 1 on elites), capped at 1e12.
    LikelihoodRatio,
}

/// Converts elites into weighted fit points under the chosen convention.
pub fn elite_weights<F: Real>(elite: &[TaggedSample<F>], mode: WeightMode) -> Vec<WeightedPoint<F>> {
    let cap = F::of(WEIGHT_CAP);
    elite
        .iter()
        .map(|s| {
            let w = match mode {
                WeightMode::CeUnity => F::one(),
                WeightMode::LikelihoodRatio => (-s.gen_logpdf).exp().min(cap),
            };
            WeightedPoint::new(s.x.clone(), w)
        })
        .collect()
}

/// Fits the model family on weighted points and smooths against the previous
/// proposal. `t_next` is the 1-based smoothing iteration. The RNG is only
/// consumed by mixture fits (EM seeding).
pub fn fit_and_smooth<F: Real, R: rand::Rng + ?Sized>(
    previous: &Proposal<F>,
    points: &[WeightedPoint<F>],
    model: ModelSpec,
    smoothing: &SmoothingConfig,
    t_next: u64,
    rng: &mut R,
) -> Result<Proposal<F>> {
    match model {
        ModelSpec::Single => {
            let fitted = weighted_gaussian_mle(points)?;
            let prev = match previous {
                Proposal::Single(g) => g.clone(),
                Proposal::Mixture(_) => {
                    return Err(Error::InvalidArgument(
                        "single-model update against a mixture proposal".into(),
                    ))
                }
            };
            Ok(Proposal::Single(smooth_gaussian(&prev, &fitted, t_next, smoothing)?))
        }
        ModelSpec::Mixture(k) => {
            let fit = em_fit_mixture(points, k, EmInit::Seeded, rng)?;
            let prev = match previous {
                Proposal::Mixture(m) => m.clone(),
                Proposal::Single(g) => MixtureParams::single(g.clone()),
            };
            Ok(Proposal::Mixture(smooth_mixture(&prev, &fit.params, t_next, smoothing)?))
        }
    }
}

/// Refits the configured model on the weighted elites and smooths against
/// the current proposal (at smoothing iteration `t + 1`).
pub fn update_params<F: Real, R: rand::Rng + ?Sized>(
    state: &CEState<F>,
    elite_weighted: &[WeightedPoint<F>],
    cfg: &CEConfig,
    rng: &mut R,
) -> Result<Proposal<F>> {
    fit_and_smooth(&state.theta, elite_weighted, cfg.model, &cfg.smoothing, state.t + 1, rng)
}

/// What one iteration decided: the elite threshold and the hyperparameters
/// used for the update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSummary<F> {
    pub gamma: F,
    pub kappa_used: f64,
    pub k_used: usize,
}

/// One full CE iteration: draw → select → weight (unity) → refit → smooth.
/// Increments `t`. A budget error leaves the state untouched.
pub fn ce_step<F: Real>(
    state: &mut CEState<F>,
    problem: &Problem<F>,
    cfg: &CEConfig,
) -> Result<StepSummary<F>> {
    ce_step_inner(state, problem, cfg, None)
}

fn ce_step_inner<F: Real>(
    state: &mut CEState<F>,
    problem: &Problem<F>,
    cfg: &CEConfig,
    start: Option<&SharedStart<F>>,
) -> Result<StepSummary<F>> {
    match start {
        Some(s) if state.t == 0 => inject_shared_start(state, cfg, s)?,
        _ => {
            draw_population(state, problem, cfg)?;
        }
    }
    let pool = current_pool(state);
    let (elite, gamma) = select_elite(&pool, cfg.kappa)?;
    let weighted = elite_weights(&elite, WeightMode::CeUnity);
    let mut fit_rng = substream(state.seed, &[state.t, purpose::FIT]);
    state.theta = update_params(state, &weighted, cfg, &mut fit_rng)?;
    state.gamma = Some(gamma);
    state.t += 1;
    Ok(StepSummary { gamma, kappa_used: cfg.kappa, k_used: cfg.model.component_count() })
}

/// Checkpoint-aligned series recorder: at most one point per iteration, one
/// per crossed checkpoint, plus the final iteration.
pub(crate) struct Recorder<F> {
    checkpoints: Vec<u64>,
    next: usize,
    series: Vec<SeriesPoint<F>>,
}

impl<F: Real> Recorder<F> {
    pub(crate) fn new(checkpoints: &[u64]) -> Self {
        let mut cps = checkpoints.to_vec();
        cps.sort_unstable();
        cps.dedup();
        Self { checkpoints: cps, next: 0, series: Vec::new() }
    }

    pub(crate) fn observe(&mut self, evals: u64, best_g: F, summary: &StepSummary<F>, is_final: bool) {
        let crossed = self.checkpoints[self.next..].iter().take_while(|&&c| c <= evals).count();
        self.next += crossed;
        if crossed > 0 || is_final {
            self.series.push(SeriesPoint {
                evals,
                best_g,
                gamma: summary.gamma,
                kappa_sel: summary.kappa_used,
                k_sel: summary.k_used,
            });
        }
    }

    pub(crate) fn into_series(self) -> Vec<SeriesPoint<F>> {
        self.series
    }
}

/// Runs fixed-hyperparameter CE until the budget cannot absorb another
/// population. Records a series point whenever a checkpoint is crossed and at
/// the final iteration. The result's `algorithm` and `trial` fields are left
/// for the caller (the benchmark harness labels them).
pub fn run_ce<F: Real>(
    problem: &Problem<F>,
    cfg: &CEConfig,
    seed: u64,
    checkpoints: &[u64],
) -> Result<TrialResult<F>> {
    run_ce_with_start(problem, cfg, seed, checkpoints, None)
}

/// [`run_ce`] with an optional pre-drawn shared first population.
pub fn run_ce_with_start<F: Real>(
    problem: &Problem<F>,
    cfg: &CEConfig,
    seed: u64,
    checkpoints: &[u64],
    start: Option<&SharedStart<F>>,
) -> Result<TrialResult<F>> {
    let mut state = init_state(problem, cfg, seed)?;
    let mut recorder = Recorder::new(checkpoints);
    let pop = cfg.pop_size as u64;
    while state.evals_used + pop <= cfg.max_evals {
        let summary = ce_step_inner(&mut state, problem, cfg, start)?;
        let is_final = state.evals_used + pop > cfg.max_evals;
        let best = state.best.as_ref().expect("population absorbed");
        recorder.observe(state.evals_used, best.g, &summary, is_final);
    }
    Ok(TrialResult {
        problem: problem.name().to_string(),
        algorithm: String::new(),
        trial: 0,
        series: recorder.into_series(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::make_problem;

    fn quad1() -> Problem<f64> {
        Problem::from_parts("quad1", vec![(-5.0, 5.0)], Some(0.0), Some(vec![0.0]), |x: &[f64]| {
            x[0] * x[0]
        })
    }

    fn base_cfg(pop: usize, max_evals: u64) -> CEConfig {
        CEConfig {
            pop_size: pop,
            kappa: 0.10,
            model: ModelSpec::Single,
            smoothing: SmoothingConfig::default(),
            max_evals,
            archive_window: 1,
        }
    }

    #[test]
    fn elite_count_snaps_nominal_fractions() {
        assert_eq!(elite_count(0.10, 100), 10);
        assert_eq!(elite_count(0.15, 100), 15);
        assert_eq!(elite_count(0.05, 50), 3); // 2.5 -> ceil 3
        assert_eq!(elite_count(0.15, 30), 5); // 4.5 -> ceil 5
        assert_eq!(elite_count(0.3, 10), 3);
    }

    #[test]
    fn config_validation_collects_all_violations() {
        let cfg = CEConfig {
            pop_size: 1,
            kappa: 1.5,
            model: ModelSpec::Mixture(0),
            smoothing: SmoothingConfig { alpha: 2.0, beta: -0.1, q: 0.0 },
            max_evals: 0,
            archive_window: 0,
        };
        match cfg.validate(4) {
            Err(Error::InvalidConfig(v)) => assert!(v.len() >= 6, "violations: {v:?}"),
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    #[test]
    fn config_validation_enforces_elite_floor() {
        // kappa 5% of 50 gives 3 elites < d + 1 = 5 for a 4-dim problem.
        let cfg = CEConfig { kappa: 0.05, ..base_cfg(50, 10_000) };
        assert!(cfg.validate(4).is_err());
        assert!(cfg.validate(1).is_ok());
    }

    #[test]
    fn init_state_region_center_for_single() {
        let p: Problem<f64> = make_problem("hartman6", 6).unwrap();
        let cfg = base_cfg(100, 10_000);
        let state = init_state(&p, &cfg, 1).unwrap();
        match &state.theta {
            Proposal::Single(g) => {
                assert_eq!(g.mean(), &[0.5; 6]);
                for i in 0..6 {
                    for j in 0..6 {
                        let want = if i == j { 0.25 } else { 0.0 };
                        assert_eq!(g.covariance()[i * 6 + j], want);
                    }
                }
            }
            _ => panic!("expected single"),
        }
        assert_eq!(state.t, 0);
        assert!(state.archive.is_empty());
    }

    #[test]
    fn init_state_mixture_components_in_region() {
        let p: Problem<f64> = make_problem("woods", 4).unwrap();
        let cfg = CEConfig { model: ModelSpec::Mixture(3), ..base_cfg(100, 10_000) };
        let a = init_state(&p, &cfg, 9).unwrap();
        let b = init_state(&p, &cfg, 9).unwrap();
        match (&a.theta, &b.theta) {
            (Proposal::Mixture(ma), Proposal::Mixture(mb)) => {
                assert_eq!(ma.k(), 3);
                assert_eq!(ma.weights(), &[1.0 / 3.0; 3]);
                for (ca, cb) in ma.components().iter().zip(mb.components()) {
                    assert_eq!(ca.mean(), cb.mean(), "same seed, same placement");
                    for &m in ca.mean() {
                        assert!((-3.0..=3.0).contains(&m));
                    }
                }
            }
            _ => panic!("expected mixtures"),
        }
    }

    #[test]
    fn draw_population_counts_and_tags() {
        let p = quad1();
        let cfg = base_cfg(50, 10_000);
        let mut state = init_state(&p, &cfg, 3).unwrap();
        let batch = draw_population(&mut state, &p, &cfg).unwrap();
        assert_eq!(state.evals_used, 50);
        assert_eq!(batch.len(), 50);
        for s in &batch {
            assert_eq!(s.gen_id, DistributionId(0));
            assert_eq!(s.g, p.eval(&s.x));
            let gen = &state.generators[s.gen_id.0];
            assert_eq!(s.gen_logpdf, gen.logpdf(&s.x));
        }
        // Best never increases across populations.
        let best1 = state.best.as_ref().unwrap().g;
        draw_population(&mut state, &p, &cfg).unwrap();
        assert!(state.best.as_ref().unwrap().g <= best1);
        assert_eq!(state.evals_used, 100);
    }

    #[test]
    fn draw_population_respects_budget() {
        let p = quad1();
        let cfg = base_cfg(50, 70);
        let mut state = init_state(&p, &cfg, 3).unwrap();
        draw_population(&mut state, &p, &cfg).unwrap();
        let err = draw_population(&mut state, &p, &cfg).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { used: 50, budget: 70, needed: 50 }));
    }

    fn tagged(g: f64) -> TaggedSample<f64> {
        TaggedSample { x: vec![g], g, gen_id: DistributionId(0), gen_logpdf: 0.0 }
    }

    #[test]
    fn select_elite_hand_cases() {
        // g = 1..100, kappa 0.10: elites 1..=10, gamma 10.
        let samples: Vec<TaggedSample<f64>> = (1..=100).map(|i| tagged(i as f64)).collect();
        let (elite, gamma) = select_elite(&samples, 0.10).unwrap();
        assert_eq!(elite.len(), 10);
        assert_eq!(gamma, 10.0);
        assert_eq!(elite.iter().map(|s| s.g as i64).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());

        // kappa pushing count to n: everything elite, gamma = max.
        let (all, g_max) = select_elite(&samples, 0.999999).unwrap();
        assert_eq!(all.len(), 100);
        assert_eq!(g_max, 100.0);

        // All equal: stable original order, gamma = common value.
        let ties: Vec<TaggedSample<f64>> = (0..10)
            .map(|i| TaggedSample { x: vec![i as f64], g: 7.0, gen_id: DistributionId(0), gen_logpdf: 0.0 })
            .collect();
        let (e, g) = select_elite(&ties, 0.3).unwrap();
        assert_eq!(g, 7.0);
        assert_eq!(e.iter().map(|s| s.x[0] as i64).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn select_elite_percentile_properties() {
        let mut rng = substream(41, &[0]);
        for trial in 0..50u64 {
            let n = 20 + (trial as usize * 7) % 180;
            let samples: Vec<TaggedSample<f64>> =
                (0..n).map(|_| tagged(f64::standard_normal(&mut rng))).collect();
            let kappa = 0.05 + 0.9 * f64::unit_uniform(&mut rng);
            let (elite, gamma) = select_elite(&samples, kappa).unwrap();
            assert_eq!(elite.len(), elite_count(kappa, n).clamp(1, n));
            let max_elite = elite.iter().map(|s| s.g).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(max_elite, gamma);
            // max elite <= min non-elite
            let elite_ids: std::collections::HashSet<u64> =
                elite.iter().map(|s| s.g.to_bits()).collect();
            let min_rest = samples
                .iter()
                .filter(|s| !elite_ids.contains(&s.g.to_bits()))
                .map(|s| s.g)
                .fold(f64::INFINITY, f64::min);
            assert!(max_elite <= min_rest);
        }
    }

    #[test]
    fn elite_weights_modes() {
        let mut e = vec![tagged(1.0), tagged(2.0)];
        e[0].gen_logpdf = -1.0;
        e[1].gen_logpdf = 2.0;
        let unity = elite_weights(&e, WeightMode::CeUnity);
        assert!(unity.iter().all(|w| w.weight == 1.0));
        let lr = elite_weights(&e, WeightMode::LikelihoodRatio);
        assert_eq!(lr[0].weight, (1.0f64).exp());
        assert_eq!(lr[1].weight, (-2.0f64).exp());
        // Cap engages when gen_logpdf < -ln(1e12).
        e[0].gen_logpdf = -30.0; // exp(30) > 1e12
        let capped = elite_weights(&e, WeightMode::LikelihoodRatio);
        assert_eq!(capped[0].weight, 1e12);
    }

    #[test]
    fn unsmoothed_single_update_equals_closed_form() {
        let p = quad1();
        let cfg = CEConfig {
            smoothing: SmoothingConfig { alpha: 1.0, beta: 1.0, q: 1e9 },
            ..base_cfg(50, 10_000)
        };
        let mut state = init_state(&p, &cfg, 5).unwrap();
        draw_population(&mut state, &p, &cfg).unwrap();
        let pool = current_pool(&state);
        let (elite, _) = select_elite(&pool, cfg.kappa).unwrap();
        let weighted = elite_weights(&elite, WeightMode::CeUnity);
        let mut rng = substream(5, &[0, purpose::FIT]);
        let theta = update_params(&state, &weighted, &cfg, &mut rng).unwrap();
        let direct = weighted_gaussian_mle(&weighted).unwrap();
        match theta {
            Proposal::Single(g) => {
                assert!((g.mean()[0] - direct.mean()[0]).abs() <= 1e-12 * (1.0 + direct.mean()[0].abs()));
                assert!((g.covariance()[0] - direct.covariance()[0]).abs() <= 1e-12 * (1.0 + direct.covariance()[0]));
            }
            _ => panic!("expected single"),
        }
    }

    #[test]
    fn k1_mixture_update_matches_single_path() {
        let p = quad1();
        let cfg_s = base_cfg(50, 10_000);
        let cfg_m = CEConfig { model: ModelSpec::Mixture(1), ..base_cfg(50, 10_000) };
        let mut ss = init_state(&p, &cfg_s, 7).unwrap();
        let mut sm = init_state(&p, &cfg_m, 7).unwrap();
        // Mixture initialization places components at random region points;
        // align the smoothing anchors and the first population so the only
        // difference between the runs is the fitting path.
        sm.theta = Proposal::Mixture(MixtureParams::single(region_gaussian(&p).unwrap()));
        let start = SharedStart::draw(&p, 50, 7).unwrap();
        let sum_s = ce_step_inner(&mut ss, &p, &cfg_s, Some(&start)).unwrap();
        let sum_m = ce_step_inner(&mut sm, &p, &cfg_m, Some(&start)).unwrap();
        assert_eq!(sum_s.gamma, sum_m.gamma);
        let (gs, gm) = match (&ss.theta, &sm.theta) {
            (Proposal::Single(g), Proposal::Mixture(m)) => (g.clone(), m.components()[0].clone()),
            _ => panic!("unexpected families"),
        };
        // Same elites, same fit; mixture smoothing blends against the
        // single-component wrap of the same initial Gaussian.
        for (a, b) in gs.mean().iter().zip(gm.mean()) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
        for (a, b) in gs.covariance().iter().zip(gm.covariance()) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn ce_step_consumes_exactly_pop_size() {
        let p = quad1();
        let cfg = base_cfg(50, 10_000);
        let mut state = init_state(&p, &cfg, 11).unwrap();
        ce_step(&mut state, &p, &cfg).unwrap();
        assert_eq!(state.evals_used, 50);
        assert_eq!(state.t, 1);
        ce_step(&mut state, &p, &cfg).unwrap();
        assert_eq!(state.evals_used, 100);
    }

    #[test]
    fn ce_converges_on_1d_quadratic() {
        // 30 steps, pop 50, kappa 0.1 on G(x) = x^2: |mean| < 1e-3 in at
        // least 95 of 100 seeded runs.
        let p = quad1();
        let cfg = base_cfg(50, 50 * 30);
        let mut hits = 0;
        for seed in 0..100 {
            let mut state = init_state(&p, &cfg, seed).unwrap();
            for _ in 0..30 {
                ce_step(&mut state, &p, &cfg).unwrap();
            }
            let mean0 = match &state.theta {
                Proposal::Single(g) => g.mean()[0],
                _ => unreachable!(),
            };
            if mean0.abs() < 1e-3 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs converged");
    }

    #[test]
    fn state_serialization_round_trips_bitwise() {
        let p = quad1();
        let cfg = base_cfg(50, 10_000);
        let mut state = init_state(&p, &cfg, 13).unwrap();
        ce_step(&mut state, &p, &cfg).unwrap();
        ce_step(&mut state, &p, &cfg).unwrap();
        let json = serde_json::to_string(&state).unwrap();
        let back: CEState<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.t, state.t);
        assert_eq!(back.evals_used, state.evals_used);
        assert_eq!(back.best, state.best);
        match (&back.theta, &state.theta) {
            (Proposal::Single(a), Proposal::Single(b)) => {
                assert_eq!(a.mean(), b.mean());
                assert_eq!(a.covariance(), b.covariance());
                assert_eq!(a.chol(), b.chol());
            }
            _ => panic!("family changed"),
        }
        assert_eq!(back.archive, state.archive);
    }

    #[test]
    fn run_ce_budget_edge_single_iteration() {
        let p = quad1();
        let cfg = base_cfg(50, 50);
        let r = run_ce(&p, &cfg, 3, &[50]).unwrap();
        assert_eq!(r.series.len(), 1);
        assert_eq!(r.series[0].evals, 50);
    }

    #[test]
    fn run_ce_improves_on_rosenbrock4() {
        let p: Problem<f64> = make_problem("rosenbrock", 4).unwrap();
        let cfg = CEConfig { pop_size: 100, ..base_cfg(100, 10_000) };
        let cps: Vec<u64> = (1..=100).map(|i| i * 100).collect();
        let r = run_ce(&p, &cfg, 17, &cps).unwrap();
        let first = r.series.first().unwrap().best_g;
        let last = r.series.last().unwrap().best_g;
        assert!(last < first, "no improvement: {first} -> {last}");
        // Monotone best_g along the series.
        for w in r.series.windows(2) {
            assert!(w[1].best_g <= w[0].best_g);
            assert!(w[1].evals > w[0].evals);
        }
    }

    #[test]
    fn run_ce_is_deterministic() {
        let p: Problem<f64> = make_problem("woods", 4).unwrap();
        let cfg = base_cfg(60, 3_000);
        let cps = [60, 600, 1800, 3000];
        let a = run_ce(&p, &cfg, 23, &cps).unwrap();
        let b = run_ce(&p, &cfg, 23, &cps).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exactness_property() {
        let p = quad1();
        for (pop, budget) in [(50usize, 1000u64), (50, 1049), (7, 100), (10, 10)] {
            // kappa 0.5 keeps the elite floor satisfied even for pop 7.
            let cfg = CEConfig { kappa: 0.5, ..base_cfg(pop, budget) };
            let counter = crate::objectives::EvalCounter::new(p.clone());
            let counting = counter.problem();
            run_ce(&counting, &cfg, 29, &[]).unwrap();
            let want = (budget / pop as u64) * pop as u64;
            assert_eq!(counter.calls(), want, "pop {pop} budget {budget}");
        }
    }

    #[test]
    fn shared_start_is_noop_for_single_model() {
        let p: Problem<f64> = make_problem("woods", 4).unwrap();
        let cfg = base_cfg(60, 1_800);
        let start = SharedStart::draw(&p, 60, 31).unwrap();
        let plain = run_ce(&p, &cfg, 31, &[600, 1800]).unwrap();
        let injected = run_ce_with_start(&p, &cfg, 31, &[600, 1800], Some(&start)).unwrap();
        assert_eq!(plain, injected);
    }
}
