//! Per-iteration cross-validated hyperparameter selection for the CE
//! method: at every iteration, K-fold CV over a grid of elite fractions and
//! mixture orders picks the `(kappa, K)` whose unsmoothed refit scores best
//! on held-out samples under an importance-weighted estimate of
//! `E_{q_theta}[G]`, and the winner drives a smoothed refit on the full
//! pool.
//!
//! Candidate fits never touch the population-draw random stream, so a
//! degenerate grid with a single candidate reproduces the fixed-parameter
//! run of [`crate::ce_core`] bit for bit.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bench::TrialResult;
use crate::ce_core::{
    current_pool, draw_population, elite_count, elite_weights, fit_and_smooth, init_state,
    inject_shared_start, select_elite, CEConfig, CEState, ModelSpec, Proposal, Recorder,
    SharedStart, StepSummary, TaggedSample, WeightMode, WEIGHT_CAP,
};
use crate::distributions::{em_fit_mixture, weighted_gaussian_mle, EmInit};
use crate::error::{Error, Result};
use crate::objectives::Problem;
use crate::rng::{purpose, substream};
use crate::scalar::Real;

/// Importance ratios below this count as "near zero" in diagnostics: the
/// candidate proposal assigns essentially no mass where the sample lies.
pub const NEAR_ZERO_RATIO: f64 = 1e-12;

/// The hyperparameter grid searched each iteration, plus the fold count of
/// the per-iteration cross-validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    /// Elite fractions, each in (0, 1).
    pub kappas: Vec<f64>,
    /// Mixture component counts, each at least 1.
    pub component_counts: Vec<usize>,
    /// Number of CV folds (at least 2).
    pub folds: usize,
}

impl CandidateGrid {
    /// The single-Gaussian selection grid: kappa over {0.05, 0.10, 0.15},
    /// K fixed at 1, 4 folds.
    pub fn single_model() -> Self {
        Self { kappas: vec![0.05, 0.10, 0.15], component_counts: vec![1], folds: 4 }
    }

    /// The mixture selection grid: kappa over {0.05, 0.10, 0.15}, K over
    /// {1, 2, 3}, 4 folds.
    pub fn mixture_model() -> Self {
        Self { kappas: vec![0.05, 0.10, 0.15], component_counts: vec![1, 2, 3], folds: 4 }
    }

    /// Validates the grid against the run's model family, collecting every
    /// violation. A `Single` family only admits component count 1 (the final
    /// refit would otherwise have to change family mid-run).
    pub fn validate(&self, family: ModelSpec) -> Result<()> {
        let mut violations = Vec::new();
        if self.kappas.is_empty() {
            violations.push("candidate grid needs at least one kappa".into());
        }
        for &k in &self.kappas {
            if !(k > 0.0 && k < 1.0) {
                violations.push(format!("grid kappa must lie in (0, 1), got {k}"));
            }
        }
        if self.component_counts.is_empty() {
            violations.push("candidate grid needs at least one component count".into());
        }
        for &c in &self.component_counts {
            if c == 0 {
                violations.push("grid component counts must be at least 1".into());
            }
            if matches!(family, ModelSpec::Single) && c != 1 {
                violations.push(format!(
                    "single-Gaussian runs only admit component count 1 in the grid, got {c}"
                ));
            }
        }
        if self.folds < 2 {
            violations.push(format!("cross-validation needs at least 2 folds, got {}", self.folds));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations))
        }
    }
}

/// A K-fold partition of `n` items: `assignment[i]` is the fold of item `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldSpec {
    /// Item count per fold.
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Randomly partitions `n` items into `k` folds whose sizes differ by at
/// most one (e.g. n=10, k=4 gives sizes {3, 3, 2, 2}).
pub fn kfold_partition<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<FoldSpec> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k-fold CV needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} items into {k} non-empty folds"
        )));
    }
    let base = n / k;
    let rem = n % k;
    let mut assignment = Vec::with_capacity(n);
    for fold in 0..k {
        let size = base + usize::from(fold < rem);
        assignment.extend(std::iter::repeat(fold).take(size));
    }
    assignment.shuffle(rng);
    Ok(FoldSpec { k, assignment })
}

/// Importance-weighted held-out estimate of `E_{q_theta}[G]`:
/// `(1/m) * sum_i min(q_theta(x_i) / q_gen_i(x_i), 1e12) * g_i`.
///
/// Lower is better. Returns zero for an empty held-out set.
pub fn heldout_score<F: Real>(theta: &Proposal<F>, heldout: &[TaggedSample<F>]) -> F {
    heldout_score_diag(theta, heldout).0
}

/// [`heldout_score`] plus diagnostic counts: (score, cap hits, near-zero
/// ratios, total terms).
fn heldout_score_diag<F: Real>(theta: &Proposal<F>, heldout: &[TaggedSample<F>]) -> (F, u64, u64, u64) {
    if heldout.is_empty() {
        return (F::zero(), 0, 0, 0);
    }
    let cap = F::of(WEIGHT_CAP);
    let near_zero = F::of(NEAR_ZERO_RATIO);
    let mut sum = F::zero();
    let mut cap_hits = 0u64;
    let mut near_zeros = 0u64;
    for s in heldout {
        let raw = (theta.logpdf(&s.x) - s.gen_logpdf).exp();
        if raw > cap {
            cap_hits += 1;
        }
        let ratio = raw.min(cap);
        if ratio < near_zero {
            near_zeros += 1;
        }
        sum += ratio * s.g;
    }
    (sum / F::of(heldout.len() as f64), cap_hits, near_zeros, heldout.len() as u64)
}

/// Outcome of evaluating one `(kappa, K)` candidate across all folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore<F> {
    /// Mean held-out score over folds; `None` when the candidate is
    /// infeasible (elite floor) or any fold's fit failed.
    pub mean_score: Option<F>,
    /// Per-fold scores (`None` for failed folds).
    pub fold_scores: Vec<Option<F>>,
    pub cap_hits: u64,
    pub near_zero_ratios: u64,
    pub ratio_terms: u64,
    pub degenerate_fits: u64,
}

/// Evaluates one candidate: for each fold, fit the candidate model
/// (unsmoothed, CE-unity weights) on the elites of the out-of-fold samples
/// and score it on the held-in fold.
///
/// A candidate whose elite count on any fold's training split falls below
/// `dim + 1` is infeasible. Each fold's mixture fit draws from the
/// substream keyed `(t, cv-fit, candidate, fold)`.
#[allow(clippy::too_many_arguments)]
pub fn cv_evaluate_candidate<F: Real>(
    pool: &[TaggedSample<F>],
    folds: &FoldSpec,
    kappa: f64,
    model: ModelSpec,
    dim: usize,
    seed: u64,
    t: u64,
    cand_index: u64,
) -> CandidateScore<F> {
    let sizes = folds.fold_sizes();
    let n = pool.len();
    let feasible = (0..folds.k).all(|j| {
        let train_len = n - sizes[j];
        train_len > 0 && elite_count(kappa, train_len).min(train_len) >= dim + 1
    });
    if !feasible {
        return CandidateScore {
            mean_score: None,
            fold_scores: vec![None; folds.k],
            cap_hits: 0,
            near_zero_ratios: 0,
            ratio_terms: 0,
            degenerate_fits: 0,
        };
    }
    let mut fold_scores = Vec::with_capacity(folds.k);
    let mut cap_hits = 0;
    let mut near_zero_ratios = 0;
    let mut ratio_terms = 0;
    let mut degenerate_fits = 0;
    for j in 0..folds.k {
        let mut train = Vec::with_capacity(n - sizes[j]);
        let mut held = Vec::with_capacity(sizes[j]);
        for (s, &f) in pool.iter().zip(&folds.assignment) {
            if f == j {
                held.push(s.clone());
            } else {
                train.push(s.clone());
            }
        }
        let fitted = select_elite(&train, kappa).and_then(|(elite, _)| {
            let weighted = elite_weights(&elite, WeightMode::CeUnity);
            match model {
                ModelSpec::Single => weighted_gaussian_mle(&weighted).map(Proposal::Single),
                ModelSpec::Mixture(k) => {
                    let mut rng =
                        substream(seed, &[t, purpose::CV_FIT, cand_index, j as u64]);
                    em_fit_mixture(&weighted, k, EmInit::Seeded, &mut rng)
                        .map(|fit| Proposal::Mixture(fit.params))
                }
            }
        });
        match fitted {
            Ok(theta) => {
                let (score, caps, zeros, terms) = heldout_score_diag(&theta, &held);
                cap_hits += caps;
                near_zero_ratios += zeros;
                ratio_terms += terms;
                fold_scores.push(Some(score));
            }
            Err(_) => {
                degenerate_fits += 1;
                fold_scores.push(None);
            }
        }
    }
    let mean_score = if fold_scores.iter().all(Option::is_some) {
        let sum: F = fold_scores.iter().map(|s| s.unwrap()).sum();
        Some(sum / F::of(folds.k as f64))
    } else {
        None
    };
    CandidateScore { mean_score, fold_scores, cap_hits, near_zero_ratios, ratio_terms, degenerate_fits }
}

/// Aggregate diagnostics over every candidate and fold of one selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvDiagnostics {
    /// Held-out importance ratios clipped at the cap.
    pub cap_hits: u64,
    /// Folds whose candidate fit failed outright.
    pub degenerate_fits: u64,
    /// Held-out ratio terms evaluated in total.
    pub ratio_terms: u64,
    /// Terms whose ratio fell below [`NEAR_ZERO_RATIO`].
    pub near_zero_ratios: u64,
}

impl CvDiagnostics {
    /// Fraction of held-out terms with a near-zero importance ratio.
    pub fn near_zero_fraction(&self) -> f64 {
        if self.ratio_terms == 0 {
            0.0
        } else {
            self.near_zero_ratios as f64 / self.ratio_terms as f64
        }
    }
}

/// The outcome of one per-iteration selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVReport<F> {
    /// Grid axis: elite fractions, in grid order.
    pub kappas: Vec<f64>,
    /// Grid axis: component counts, in grid order.
    pub component_counts: Vec<usize>,
    /// `scores[k_idx][kappa_idx]`: mean held-out score, `None` if the
    /// candidate was infeasible or failed.
    pub scores: Vec<Vec<Option<F>>>,
    pub winner_kappa: f64,
    pub winner_k: usize,
    /// True when every candidate was infeasible and the conservative
    /// fallback (largest grid kappa, K = 1) was imposed.
    pub fallback: bool,
    pub diagnostics: CvDiagnostics,
}

/// Winner over the score matrix: for each component count, the best-scoring
/// kappa (ties to the larger kappa); across component counts, the best of
/// those (ties to the smaller K). `None` when no candidate has a score.
fn pick_winner<F: Real>(
    scores: &[Vec<Option<F>>],
    kappas: &[f64],
    component_counts: &[usize],
) -> Option<(f64, usize)> {
    let mut best: Option<(F, f64, usize)> = None;
    for (ki, &k) in component_counts.iter().enumerate() {
        let mut best_row: Option<(F, f64)> = None;
        for (kpi, &kappa) in kappas.iter().enumerate() {
            if let Some(s) = scores[ki][kpi] {
                let take = match best_row {
                    None => true,
                    Some((bs, bk)) => s < bs || (s == bs && kappa > bk),
                };
                if take {
                    best_row = Some((s, kappa));
                }
            }
        }
        if let Some((s, kappa)) = best_row {
            let take = match best {
                None => true,
                Some((bs, _, bk)) => s < bs || (s == bs && k < bk),
            };
            if take {
                best = Some((s, kappa, k));
            }
        }
    }
    best.map(|(_, kappa, k)| (kappa, k))
}

/// Scores the whole grid by K-fold CV on the pooled samples and picks the
/// winner; when nothing is feasible, falls back to the most conservative
/// candidate (largest grid kappa, K = 1) and flags it.
pub fn cv_select<F: Real>(
    pool: &[TaggedSample<F>],
    grid: &CandidateGrid,
    folds: &FoldSpec,
    family: ModelSpec,
    dim: usize,
    seed: u64,
    t: u64,
) -> Result<CVReport<F>> {
    grid.validate(family)?;
    if pool.len() != folds.assignment.len() {
        return Err(Error::InvalidArgument(format!(
            "fold assignment covers {} items but the pool has {}",
            folds.assignment.len(),
            pool.len()
        )));
    }
    let mut scores: Vec<Vec<Option<F>>> = Vec::with_capacity(grid.component_counts.len());
    let mut diagnostics = CvDiagnostics::default();
    for (ki, &k) in grid.component_counts.iter().enumerate() {
        let mut row = Vec::with_capacity(grid.kappas.len());
        for (kpi, &kappa) in grid.kappas.iter().enumerate() {
            let cand_index = (ki * grid.kappas.len() + kpi) as u64;
            let model = match family {
                ModelSpec::Single => ModelSpec::Single,
                ModelSpec::Mixture(_) => ModelSpec::Mixture(k),
            };
            let cand = cv_evaluate_candidate(pool, folds, kappa, model, dim, seed, t, cand_index);
            diagnostics.cap_hits += cand.cap_hits;
            diagnostics.degenerate_fits += cand.degenerate_fits;
            diagnostics.ratio_terms += cand.ratio_terms;
            diagnostics.near_zero_ratios += cand.near_zero_ratios;
            row.push(cand.mean_score);
        }
        scores.push(row);
    }
    let (winner_kappa, winner_k, fallback) =
        match pick_winner(&scores, &grid.kappas, &grid.component_counts) {
            Some((kappa, k)) => (kappa, k, false),
            None => {
                let largest = grid.kappas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (largest, 1, true)
            }
        };
    Ok(CVReport {
        kappas: grid.kappas.clone(),
        component_counts: grid.component_counts.clone(),
        scores,
        winner_kappa,
        winner_k,
        fallback,
        diagnostics,
    })
}

/// One cross-validated CE iteration: draw → pool → partition folds →
/// CV-select `(kappa, K)` → smoothed refit of the winner on all pooled
/// elites. Returns the step summary and the full selection report.
pub fn plmco_ce_step<F: Real>(
    state: &mut CEState<F>,
    problem: &Problem<F>,
    cfg: &CEConfig,
    grid: &CandidateGrid,
) -> Result<(StepSummary<F>, CVReport<F>)> {
    plmco_step_inner(state, problem, cfg, grid, None)
}

fn plmco_step_inner<F: Real>(
    state: &mut CEState<F>,
    problem: &Problem<F>,
    cfg: &CEConfig,
    grid: &CandidateGrid,
    start: Option<&SharedStart<F>>,
) -> Result<(StepSummary<F>, CVReport<F>)> {
    match start {
        Some(s) if state.t == 0 => inject_shared_start(state, cfg, s)?,
        _ => {
            draw_population(state, problem, cfg)?;
        }
    }
    let pool = current_pool(state);
    let mut fold_rng = substream(state.seed, &[state.t, purpose::FOLDS]);
    let folds = kfold_partition(pool.len(), grid.folds, &mut fold_rng)?;
    let report = cv_select(&pool, grid, &folds, cfg.model, problem.dim(), state.seed, state.t)?;
    let (elite, gamma) = select_elite(&pool, report.winner_kappa)?;
    let weighted = elite_weights(&elite, WeightMode::CeUnity);
    let final_model = match cfg.model {
        ModelSpec::Single => ModelSpec::Single,
        ModelSpec::Mixture(_) => ModelSpec::Mixture(report.winner_k),
    };
    let mut fit_rng = substream(state.seed, &[state.t, purpose::FIT]);
    state.theta =
        fit_and_smooth(&state.theta, &weighted, final_model, &cfg.smoothing, state.t + 1, &mut fit_rng)?;
    state.gamma = Some(gamma);
    state.t += 1;
    let summary =
        StepSummary { gamma, kappa_used: report.winner_kappa, k_used: report.winner_k };
    Ok((summary, report))
}

/// Runs cross-validated CE until the budget cannot absorb another
/// population. Series points carry the per-iteration winning `(kappa, K)`.
pub fn run_plmco_ce<F: Real>(
    problem: &Problem<F>,
    cfg: &CEConfig,
    grid: &CandidateGrid,
    seed: u64,
    checkpoints: &[u64],
) -> Result<TrialResult<F>> {
    run_plmco_ce_with_start(problem, cfg, grid, seed, checkpoints, None)
}

/// [`run_plmco_ce`] with an optional pre-drawn shared first population.
pub fn run_plmco_ce_with_start<F: Real>(
    problem: &Problem<F>,
    cfg: &CEConfig,
    grid: &CandidateGrid,
    seed: u64,
    checkpoints: &[u64],
    start: Option<&SharedStart<F>>,
) -> Result<TrialResult<F>> {
    grid.validate(cfg.model)?;
    let mut state = init_state(problem, cfg, seed)?;
    let mut recorder = Recorder::new(checkpoints);
    let pop = cfg.pop_size as u64;
    while state.evals_used + pop <= cfg.max_evals {
        let (summary, _report) = plmco_step_inner(&mut state, problem, cfg, grid, start)?;
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
    use crate::distributions::{DistributionId, GaussianParams};
    use crate::objectives::make_problem;

    #[test]
    fn kfold_sizes_differ_by_at_most_one() {
        let mut rng = substream(1, &[purpose::FOLDS]);
        let f = kfold_partition(10, 4, &mut rng).unwrap();
        let mut sizes = f.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3, 3]);
        let f = kfold_partition(12, 4, &mut rng).unwrap();
        assert_eq!(f.fold_sizes(), vec![3, 3, 3, 3]);
        let f = kfold_partition(7, 3, &mut rng).unwrap();
        let mut sizes = f.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
        assert!(f.assignment.iter().all(|&a| a < 3));
    }

    #[test]
    fn kfold_is_deterministic_per_stream() {
        let a = kfold_partition(40, 4, &mut substream(7, &[3, purpose::FOLDS])).unwrap();
        let b = kfold_partition(40, 4, &mut substream(7, &[3, purpose::FOLDS])).unwrap();
        assert_eq!(a, b);
        let c = kfold_partition(40, 4, &mut substream(7, &[4, purpose::FOLDS])).unwrap();
        assert_ne!(a, c, "different iterations should shuffle differently");
    }

    #[test]
    fn kfold_rejects_bad_shapes() {
        let mut rng = substream(1, &[]);
        assert!(kfold_partition(10, 1, &mut rng).is_err());
        assert!(kfold_partition(3, 4, &mut rng).is_err());
        assert!(kfold_partition(4, 4, &mut rng).is_ok());
    }

    fn sample_with_ratio(theta: &Proposal<f64>, x: f64, ratio: f64, g: f64) -> TaggedSample<f64> {
        // gen_logpdf chosen so that q_theta(x) / q_gen(x) equals `ratio`.
        let lp = theta.logpdf(&[x]);
        TaggedSample { x: vec![x], g, gen_id: DistributionId(0), gen_logpdf: lp - ratio.ln() }
    }

    fn std_normal_1d() -> Proposal<f64> {
        Proposal::Single(GaussianParams::new(vec![0.0], vec![1.0]).unwrap())
    }

    #[test]
    fn heldout_score_hand_example() {
        // Ratios {1, 3} against values {2, 4}: (1*2 + 3*4) / 2 = 7.
        let theta = std_normal_1d();
        let held = vec![
            sample_with_ratio(&theta, 0.3, 1.0, 2.0),
            sample_with_ratio(&theta, -0.8, 3.0, 4.0),
        ];
        let s = heldout_score(&theta, &held);
        assert!((s - 7.0).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn heldout_score_caps_extreme_ratios() {
        let theta = std_normal_1d();
        // Requested ratio e^100 far exceeds the cap; the capped term is
        // 1e12 * g, so the mean over one sample is exactly 1e12 * 2.
        let held = vec![sample_with_ratio(&theta, 0.0, 100f64.exp2(), 2.0)];
        // exp2(100) overflows the ratio past the cap long before exp().
        let s = heldout_score(&theta, &held);
        assert_eq!(s, 2e12);
    }

    #[test]
    fn heldout_score_empty_is_zero() {
        let theta = std_normal_1d();
        assert_eq!(heldout_score(&theta, &[]), 0.0);
    }

    #[test]
    fn pick_winner_prefers_larger_kappa_then_smaller_k() {
        // Tie along kappa within one K: larger kappa wins.
        let kappas = [0.05, 0.15];
        let scores = vec![vec![Some(1.0), Some(1.0)]];
        assert_eq!(pick_winner(&scores, &kappas, &[1]), Some((0.15, 1)));

        // Tie across K at the per-K bests: smaller K wins.
        let scores = vec![vec![Some(2.0), Some(5.0)], vec![Some(5.0), Some(2.0)]];
        assert_eq!(pick_winner(&scores, &kappas, &[1, 2]), Some((0.05, 1)));

        // Mixed feasibility: each K keeps its only feasible kappa.
        let scores = vec![vec![None, Some(3.0)], vec![Some(2.0), None]];
        assert_eq!(pick_winner(&scores, &kappas, &[1, 2]), Some((0.05, 2)));

        // Nothing feasible.
        let scores: Vec<Vec<Option<f64>>> = vec![vec![None, None], vec![None, None]];
        assert_eq!(pick_winner(&scores, &kappas, &[1, 2]), None);
    }

    /// A deterministic pool of `n` 1-D samples from N(0, sigma^2), with
    /// objective `g`.
    fn make_pool(n: usize, sigma: f64, seed: u64, g: impl Fn(f64) -> f64) -> Vec<TaggedSample<f64>> {
        let q = GaussianParams::new(vec![0.0], vec![sigma * sigma]).unwrap();
        let mut rng = substream(seed, &[99]);
        (0..n)
            .map(|_| {
                let x = q.sample_one(&mut rng);
                TaggedSample {
                    g: g(x[0]),
                    gen_logpdf: q.logpdf(&x),
                    x,
                    gen_id: DistributionId(0),
                }
            })
            .collect()
    }

    #[test]
    fn cv_select_matches_exhaustive_enumeration() {
        let pool = make_pool(48, 3.0, 5, |x| (x - 1.0).powi(2));
        let grid = CandidateGrid {
            kappas: vec![0.1, 0.2, 0.4],
            component_counts: vec![1, 2],
            folds: 4,
        };
        let folds = kfold_partition(pool.len(), 4, &mut substream(11, &[0, purpose::FOLDS])).unwrap();
        let family = ModelSpec::Mixture(2);
        let report = cv_select(&pool, &grid, &folds, family, 1, 11, 0).unwrap();

        // Independent oracle: enumerate candidates, then argmin with the
        // documented tie-breaks, written as a flat scan over (K, kappa).
        let mut best: Option<(f64, f64, usize)> = None;
        for (ki, &k) in grid.component_counts.iter().enumerate() {
            for (kpi, &kappa) in grid.kappas.iter().enumerate() {
                let cand = cv_evaluate_candidate(
                    &pool,
                    &folds,
                    kappa,
                    ModelSpec::Mixture(k),
                    1,
                    11,
                    0,
                    (ki * grid.kappas.len() + kpi) as u64,
                );
                assert_eq!(cand.mean_score, report.scores[ki][kpi], "cell ({ki},{kpi})");
                if let Some(s) = cand.mean_score {
                    let replace = match best {
                        None => true,
                        Some((bs, bkappa, bk)) => {
                            s < bs
                                || (s == bs && k < bk)
                                || (s == bs && k == bk && kappa > bkappa)
                        }
                    };
                    if replace {
                        best = Some((s, kappa, k));
                    }
                }
            }
        }
        let (_, want_kappa, want_k) = best.expect("some candidate feasible");
        assert_eq!(report.winner_kappa, want_kappa);
        assert_eq!(report.winner_k, want_k);
        assert!(!report.fallback);
        assert!(report.diagnostics.ratio_terms > 0);
    }

    #[test]
    fn cv_select_falls_back_when_nothing_is_feasible() {
        // 4-D pool of 16: training splits of 12 give elite counts of at most
        // ceil(0.15 * 12) = 2 < d + 1 = 5 for every grid kappa.
        let mut rng = substream(3, &[0]);
        let pool: Vec<TaggedSample<f64>> = (0..16)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| f64::standard_normal(&mut rng)).collect();
                let g = x.iter().map(|v| v * v).sum();
                TaggedSample { x, g, gen_id: DistributionId(0), gen_logpdf: 0.0 }
            })
            .collect();
        let folds = kfold_partition(16, 4, &mut rng).unwrap();
        let grid = CandidateGrid::single_model();
        let report = cv_select(&pool, &grid, &folds, ModelSpec::Single, 4, 3, 0).unwrap();
        assert!(report.fallback);
        assert_eq!(report.winner_kappa, 0.15);
        assert_eq!(report.winner_k, 1);
        assert!(report.scores.iter().flatten().all(Option::is_none));
    }

    #[test]
    fn cv_scores_are_exchangeable_under_joint_permutation() {
        // Permuting the pool and the fold assignment together must leave
        // single-model candidate scores unchanged up to summation order.
        let pool = make_pool(40, 2.0, 21, |x| x * x);
        let folds = kfold_partition(40, 4, &mut substream(21, &[0, purpose::FOLDS])).unwrap();
        let cand = cv_evaluate_candidate(&pool, &folds, 0.2, ModelSpec::Single, 1, 21, 0, 0);

        let perm: Vec<usize> = {
            // A fixed derangement-ish shuffle.
            let mut idx: Vec<usize> = (0..40).collect();
            idx.rotate_left(17);
            idx.swap(3, 31);
            idx
        };
        let pool_p: Vec<_> = perm.iter().map(|&i| pool[i].clone()).collect();
        let assignment_p: Vec<_> = perm.iter().map(|&i| folds.assignment[i]).collect();
        let folds_p = FoldSpec { k: 4, assignment: assignment_p };
        let cand_p = cv_evaluate_candidate(&pool_p, &folds_p, 0.2, ModelSpec::Single, 1, 21, 0, 0);

        for (a, b) in cand.fold_scores.iter().zip(&cand_p.fold_scores) {
            let (a, b) = (a.unwrap(), b.unwrap());
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn infeasible_candidates_score_none() {
        let pool = make_pool(16, 2.0, 2, |x| x * x);
        let folds = kfold_partition(16, 4, &mut substream(2, &[0, purpose::FOLDS])).unwrap();
        // Training splits have 12 samples; kappa 0.05 gives 1 elite < d+1=2.
        let cand = cv_evaluate_candidate(&pool, &folds, 0.05, ModelSpec::Single, 1, 2, 0, 0);
        assert_eq!(cand.mean_score, None);
        // kappa 0.5 gives 6 elites, plenty.
        let cand = cv_evaluate_candidate(&pool, &folds, 0.5, ModelSpec::Single, 1, 2, 0, 0);
        assert!(cand.mean_score.is_some());
    }

    #[test]
    fn singleton_grid_reproduces_fixed_parameter_run_bitwise() {
        let p: Problem<f64> = make_problem("woods", 4).unwrap();
        let cfg = CEConfig {
            pop_size: 60,
            kappa: 0.10,
            model: ModelSpec::Single,
            smoothing: Default::default(),
            max_evals: 1_800,
            archive_window: 1,
        };
        let grid = CandidateGrid { kappas: vec![0.10], component_counts: vec![1], folds: 4 };
        let cps = [60, 300, 900, 1800];
        let fixed = crate::ce_core::run_ce(&p, &cfg, 37, &cps).unwrap();
        let selected = run_plmco_ce(&p, &cfg, &grid, 37, &cps).unwrap();
        assert_eq!(fixed, selected);
    }

    #[test]
    fn grid_validation_rejects_bad_grids() {
        let empty = CandidateGrid { kappas: vec![], component_counts: vec![], folds: 1 };
        match empty.validate(ModelSpec::Single) {
            Err(Error::InvalidConfig(v)) => assert!(v.len() >= 3, "{v:?}"),
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
        let multi_k_single = CandidateGrid { kappas: vec![0.1], component_counts: vec![1, 2], folds: 4 };
        assert!(multi_k_single.validate(ModelSpec::Single).is_err());
        assert!(multi_k_single.validate(ModelSpec::Mixture(3)).is_ok());
        let bad_kappa = CandidateGrid { kappas: vec![0.0], component_counts: vec![1], folds: 4 };
        assert!(bad_kappa.validate(ModelSpec::Single).is_err());
    }

    #[test]
    fn plmco_run_is_deterministic_and_improves() {
        let p: Problem<f64> = make_problem("rosenbrock", 4).unwrap();
        let cfg = CEConfig {
            pop_size: 100,
            kappa: 0.10,
            model: ModelSpec::Single,
            smoothing: Default::default(),
            max_evals: 6_000,
            archive_window: 1,
        };
        let grid = CandidateGrid::single_model();
        let cps: Vec<u64> = (1..=60).map(|i| i * 100).collect();
        let a = run_plmco_ce(&p, &cfg, &grid, 41, &cps).unwrap();
        let b = run_plmco_ce(&p, &cfg, &grid, 41, &cps).unwrap();
        assert_eq!(a, b);
        assert!(a.series.last().unwrap().best_g < a.series.first().unwrap().best_g);
        // kappa_sel must always be one of the grid values.
        for pt in &a.series {
            assert!(grid.kappas.contains(&pt.kappa_sel), "kappa_sel {}", pt.kappa_sel);
            assert_eq!(pt.k_sel, 1);
        }
    }

    #[test]
    fn mixture_selection_prefers_k2_on_bimodal_landscape() {
        // Samples from a wide normal scored by a two-well objective: the
        // K = 2 candidate should win the CV score more often than K = 1.
        let grid = CandidateGrid { kappas: vec![0.3], component_counts: vec![1, 2], folds: 4 };
        let mut k2_wins = 0;
        let mut k1_wins = 0;
        for seed in 0..50u64 {
            let pool = make_pool(60, 5.0, seed, |x| (x * x - 9.0).powi(2) / 10.0);
            let folds =
                kfold_partition(pool.len(), 4, &mut substream(seed, &[0, purpose::FOLDS])).unwrap();
            let report =
                cv_select(&pool, &grid, &folds, ModelSpec::Mixture(2), 1, seed, 0).unwrap();
            assert!(!report.fallback);
            match report.winner_k {
                2 => k2_wins += 1,
                1 => k1_wins += 1,
                other => panic!("unexpected K {other}"),
            }
        }
        assert!(
            k2_wins > k1_wins,
            "expected K=2 to dominate on a bimodal landscape: K2 {k2_wins}, K1 {k1_wins}"
        );
    }
}
