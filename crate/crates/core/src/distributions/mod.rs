//! Parametric proposal families: full-covariance Gaussians and finite
//! Gaussian mixtures, with weighted maximum-likelihood fitting and the
//! dynamically damped smoothing schedule used by the CE loop.

mod em;

pub use em::{em_fit_mixture, EmFit, EmInit};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Opaque handle identifying a frozen generator distribution in a run's
/// archive. Samples carry the id of the proposal that generated them so that
/// importance ratios can always be computed against the right density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DistributionId(pub usize);

/// A sample point with an attached nonnegative weight, the common currency of
/// every fit in this crate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedPoint<F> {
    pub x: Vec<F>,
    pub weight: F,
}

impl<F> WeightedPoint<F> {
    pub fn new(x: Vec<F>, weight: F) -> Self {
        Self { x, weight }
    }
}

/// Absolute floor for the covariance jitter.
const JITTER_ABS: f64 = 1e-12;
/// Relative (to mean diagonal magnitude) scale for the covariance jitter.
const JITTER_REL: f64 = 1e-10;
/// Number of times the jitter is escalated by 10x after the first attempt.
const JITTER_RETRIES: u32 = 3;

/// A full-covariance multivariate Gaussian, stored together with the lower
/// Cholesky factor of its (regularized) covariance.
///
/// Construction validates shape and finiteness and guarantees the stored
/// covariance is numerically positive definite: if the given matrix does not
/// factor as-is, a jitter `lambda * I` with
/// `lambda = max(1e-12, 1e-10 * trace / d)` is added, escalating by 10x up to
/// three times before giving up. The *stored* covariance is the regularized
/// one, so `chol * chol^T` always reproduces `covariance()`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GaussianParams<F: Real> {
    mean: Vec<F>,
    cov: Vec<F>,
    chol: Vec<F>,
}

impl<F: Real> GaussianParams<F> {
    /// Builds a Gaussian from a mean and a row-major `d x d` covariance.
    pub fn new(mean: Vec<F>, cov: Vec<F>) -> Result<Self> {
        Self::new_reporting(mean, cov).map(|(g, _)| g)
    }

    /// [`GaussianParams::new`], also reporting whether the covariance needed
    /// jitter regularization to factor (callers fitting near-degenerate data
    /// use this to qualify likelihood guarantees).
    pub fn new_reporting(mean: Vec<F>, cov: Vec<F>) -> Result<(Self, bool)> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidDistribution("mean must be non-empty".into()));
        }
        if cov.len() != d * d {
            return Err(Error::InvalidDistribution(format!(
                "covariance must be {d}x{d} row-major, got {} entries",
                cov.len()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite parameter entry".into()));
        }
        let mut cov = cov;
        for i in 0..d {
            for j in (i + 1)..d {
                let a = cov[i * d + j];
                let b = cov[j * d + i];
                let tol = F::of(1e-8) * (F::one() + a.abs() + b.abs());
                if (a - b).abs() > tol {
                    return Err(Error::InvalidDistribution(format!(
                        "covariance not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                let avg = (a + b) / F::of(2.0);
                cov[i * d + j] = avg;
                cov[j * d + i] = avg;
            }
        }
        // Factor as-is first; only degenerate matrices receive jitter, so
        // valid covariances (including deliberately tiny ones) pass through
        // bit-for-bit.
        if let Some(chol) = linalg::cholesky(d, &cov) {
            return Ok((Self { mean, cov, chol }, false));
        }
        let trace: F = (0..d).map(|i| cov[i * d + i]).sum();
        let base = F::of(JITTER_ABS).max(F::of(JITTER_REL) * trace / F::of(d as f64));
        let mut lambda = base;
        for _ in 0..=JITTER_RETRIES {
            let mut jittered = cov.clone();
            for i in 0..d {
                jittered[i * d + i] += lambda;
            }
            if let Some(chol) = linalg::cholesky(d, &jittered) {
                return Ok((Self { mean, cov: jittered, chol }, true));
            }
            lambda *= F::of(10.0);
        }
        Err(Error::InvalidDistribution(
            "covariance not positive definite after jitter regularization".into(),
        ))
    }

    /// Builds an axis-aligned Gaussian from per-coordinate variances.
    pub fn diagonal(mean: Vec<F>, variances: &[F]) -> Result<Self> {
        let d = mean.len();
        if variances.len() != d {
            return Err(Error::InvalidDistribution(format!(
                "expected {d} variances, got {}",
                variances.len()
            )));
        }
        let mut cov = vec![F::zero(); d * d];
        for (i, &v) in variances.iter().enumerate() {
            cov[i * d + i] = v;
        }
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[F] {
        &self.mean
    }

    /// The stored (post-regularization) covariance, row-major.
    pub fn covariance(&self) -> &[F] {
        &self.cov
    }

    /// Lower Cholesky factor of `covariance()`, row-major.
    pub fn chol(&self) -> &[F] {
        &self.chol
    }

    /// Draws one sample `mean + L z` with `z` standard normal.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        let d = self.dim();
        let z: Vec<F> = (0..d).map(|_| F::standard_normal(rng)).collect();
        let lz = linalg::lower_mul_vec(d, &self.chol, &z);
        self.mean.iter().zip(lz).map(|(&m, s)| m + s).collect()
    }

    /// Draws `n` samples in sequence from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<F>> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Log-density at `x`.
    ///
    /// Panics if `x` has the wrong dimension (a programming error, not a data
    /// error).
    pub fn logpdf(&self, x: &[F]) -> F {
        let d = self.dim();
        assert_eq!(x.len(), d, "logpdf dimension mismatch");
        let mut diff: Vec<F> = x.iter().zip(&self.mean).map(|(&a, &b)| a - b).collect();
        linalg::solve_lower_in_place(d, &self.chol, &mut diff);
        let quad: F = diff.iter().map(|&y| y * y).sum();
        let half_logdet: F = (0..d).map(|i| self.chol[i * d + i].ln()).sum();
        let ln_2pi = F::of(std::f64::consts::TAU).ln();
        -F::of(0.5) * (F::of(d as f64) * ln_2pi + quad) - half_logdet
    }
}

/// Weighted maximum-likelihood Gaussian fit.
///
/// Weights are normalized by their sum, so the fit is invariant under common
/// scaling of the weights. The covariance passes through the same
/// regularization as [`GaussianParams::new`], so a degenerate sample (single
/// support point) yields the jitter-floor covariance rather than an error.
pub fn weighted_gaussian_mle<F: Real>(points: &[WeightedPoint<F>]) -> Result<GaussianParams<F>> {
    weighted_gaussian_mle_reporting(points).map(|(g, _)| g)
}

/// [`weighted_gaussian_mle`], also reporting whether the covariance needed
/// jitter regularization.
pub fn weighted_gaussian_mle_reporting<F: Real>(
    points: &[WeightedPoint<F>],
) -> Result<(GaussianParams<F>, bool)> {
    if points.is_empty() {
        return Err(Error::EmptyFit("no points given".into()));
    }
    let d = points[0].x.len();
    let mut total = F::zero();
    for (i, p) in points.iter().enumerate() {
        if p.x.len() != d {
            return Err(Error::InvalidArgument(format!(
                "point {i} has dimension {}, expected {d}",
                p.x.len()
            )));
        }
        if !p.weight.is_finite() || p.weight < F::zero() {
            return Err(Error::InvalidArgument(format!(
                "point {i} has invalid weight {}",
                p.weight
            )));
        }
        if p.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("point {i} has non-finite coordinates")));
        }
        total += p.weight;
    }
    if !(total > F::zero()) {
        return Err(Error::EmptyFit("total weight is zero".into()));
    }
    let mut mean = vec![F::zero(); d];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(&p.x) {
            *m += p.weight * x;
        }
    }
    for m in &mut mean {
        *m /= total;
    }
    let mut cov = vec![F::zero(); d * d];
    for p in points {
        let diff: Vec<F> = p.x.iter().zip(&mean).map(|(&x, &m)| x - m).collect();
        for i in 0..d {
            let wdi = p.weight * diff[i];
            for j in 0..=i {
                cov[i * d + j] += wdi * diff[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[i * d + j] / total;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    GaussianParams::new_reporting(mean, cov)
}

/// A finite mixture of Gaussians with normalized nonnegative weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MixtureParams<F: Real> {
    weights: Vec<F>,
    components: Vec<GaussianParams<F>>,
}

impl<F: Real> MixtureParams<F> {
    /// Builds a mixture, normalizing the weights by their sum.
    ///
    /// Normalization is skipped when the sum is already within `1e-12` of
    /// one, which makes construction idempotent: rebuilding from stored
    /// weights preserves them bit-for-bit.
    pub fn new(weights: Vec<F>, components: Vec<GaussianParams<F>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDistribution("mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::InvalidDistribution("components differ in dimension".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < F::zero()) {
            return Err(Error::InvalidDistribution("weights must be finite and nonnegative".into()));
        }
        let sum: F = weights.iter().copied().sum();
        if !(sum > F::zero()) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        let weights = if (sum - F::one()).abs() <= F::of(1e-12) {
            weights
        } else {
            weights.into_iter().map(|w| w / sum).collect()
        };
        Ok(Self { weights, components })
    }

    /// Single-component mixture wrapping a Gaussian.
    pub fn single(component: GaussianParams<F>) -> Self {
        Self { weights: vec![F::one()], components: vec![component] }
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianParams<F>] {
        &self.components
    }

    /// Draws one sample: pick a component by weight, then sample it.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        let u = F::unit_uniform(rng);
        let mut acc = F::zero();
        let mut idx = self.components.len() - 1;
        for (k, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = k;
                break;
            }
        }
        self.components[idx].sample_one(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<F>> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Log-density via a numerically stable log-sum-exp over components.
    pub fn logpdf(&self, x: &[F]) -> F {
        let mut terms = Vec::with_capacity(self.components.len());
        let mut best = F::neg_infinity();
        for (&w, comp) in self.weights.iter().zip(&self.components) {
            if w > F::zero() {
                let t = w.ln() + comp.logpdf(x);
                if t > best {
                    best = t;
                }
                terms.push(t);
            }
        }
        if !best.is_finite() {
            return F::neg_infinity();
        }
        let sum: F = terms.iter().map(|&t| (t - best).exp()).sum();
        best + sum.ln()
    }
}

/// Smoothing schedule for proposal updates.
///
/// Means and mixture weights are blended with the constant factor `alpha`;
/// covariances use the dynamic factor
/// `beta_t = beta - beta * (1 - 1/t)^q`, which starts at `beta` for `t = 1`
/// and decays toward zero, freezing the covariance progressively and
/// preventing premature collapse of the proposal spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Blend factor for means and mixture weights, in `[0, 1]`; 1 keeps the
    /// newly fitted value, 0 keeps the previous one.
    pub alpha: f64,
    /// Base blend factor for covariances, in `[0, 1]`.
    pub beta: f64,
    /// Decay exponent of the dynamic covariance factor; larger `q` keeps
    /// `beta_t` close to `beta` for longer.
    pub q: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self { alpha: 0.9, beta: 0.9, q: 5.0 }
    }
}

impl SmoothingConfig {
    /// The covariance blend factor at iteration `t >= 1`.
    pub fn beta_t(&self, t: u64) -> f64 {
        debug_assert!(t >= 1, "smoothing iterations are 1-based");
        self.beta - self.beta * (1.0 - 1.0 / t as f64).powf(self.q)
    }
}

fn check_smooth_args(old_dim: usize, fitted_dim: usize, t: u64, cfg: &SmoothingConfig) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("smoothing iteration index is 1-based; got t = 0".into()));
    }
    if old_dim != fitted_dim {
        return Err(Error::InvalidArgument(format!(
            "smoothing dimension mismatch: previous {old_dim}, fitted {fitted_dim}"
        )));
    }
    for (name, v) in [("alpha", cfg.alpha), ("beta", cfg.beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("smoothing {name} must be in [0, 1], got {v}")));
        }
    }
    if !(cfg.q > 0.0) {
        return Err(Error::InvalidArgument(format!("smoothing q must be positive, got {}", cfg.q)));
    }
    Ok(())
}

/// Blends a freshly fitted Gaussian with the previous one.
pub fn smooth_gaussian<F: Real>(
    previous: &GaussianParams<F>,
    fitted: &GaussianParams<F>,
    t: u64,
    cfg: &SmoothingConfig,
) -> Result<GaussianParams<F>> {
    check_smooth_args(previous.dim(), fitted.dim(), t, cfg)?;
    let alpha = F::of(cfg.alpha);
    let beta_t = F::of(cfg.beta_t(t));
    let one = F::one();
    let mean: Vec<F> = fitted
        .mean()
        .iter()
        .zip(previous.mean())
        .map(|(&f, &o)| alpha * f + (one - alpha) * o)
        .collect();
    let cov: Vec<F> = fitted
        .covariance()
        .iter()
        .zip(previous.covariance())
        .map(|(&f, &o)| beta_t * f + (one - beta_t) * o)
        .collect();
    GaussianParams::new(mean, cov)
}

/// Blends a freshly fitted mixture with the previous one.
///
/// Components are paired greedily by nearest means (smallest squared
/// distance first, ties by lower index). Each fitted component matched to a
/// previous one is blended like a Gaussian and its weight alpha-blended;
/// fitted components without a partner (the fitted mixture may have a
/// different size) are kept unsmoothed with weight `alpha * w`. Weights are
/// renormalized, and the result always has the fitted component count.
pub fn smooth_mixture<F: Real>(
    previous: &MixtureParams<F>,
    fitted: &MixtureParams<F>,
    t: u64,
    cfg: &SmoothingConfig,
) -> Result<MixtureParams<F>> {
    check_smooth_args(previous.dim(), fitted.dim(), t, cfg)?;
    let alpha = F::of(cfg.alpha);
    let one = F::one();

    let mut pairs: Vec<(F, usize, usize)> = Vec::with_capacity(previous.k() * fitted.k());
    for (i, prev) in previous.components().iter().enumerate() {
        for (j, fit) in fitted.components().iter().enumerate() {
            let d2: F = prev
                .mean()
                .iter()
                .zip(fit.mean())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            pairs.push((d2, i, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut prev_used = vec![false; previous.k()];
    let mut match_for_fitted: Vec<Option<usize>> = vec![None; fitted.k()];
    let mut matched = 0usize;
    let max_matches = previous.k().min(fitted.k());
    for &(_, i, j) in &pairs {
        if matched == max_matches {
            break;
        }
        if !prev_used[i] && match_for_fitted[j].is_none() {
            prev_used[i] = true;
            match_for_fitted[j] = Some(i);
            matched += 1;
        }
    }

    let mut weights = Vec::with_capacity(fitted.k());
    let mut components = Vec::with_capacity(fitted.k());
    for (j, fit) in fitted.components().iter().enumerate() {
        match match_for_fitted[j] {
            Some(i) => {
                components.push(smooth_gaussian(&previous.components()[i], fit, t, cfg)?);
                weights.push(alpha * fitted.weights()[j] + (one - alpha) * previous.weights()[i]);
            }
            None => {
                components.push(fit.clone());
                weights.push(alpha * fitted.weights()[j]);
            }
        }
    }
    MixtureParams::new(weights, components)
}
