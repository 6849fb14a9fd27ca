//! Monte Carlo integration foundations: importance sampling, the
//! variance-minimizing importance density in one dimension, the empirical
//! bias-variance decomposition, and naive Monte Carlo optimization.
//!
//! These operations exist both as the statistical ground the optimizer stands
//! on and as runnable demonstrations (exposed through the CLI's `lab`
//! subcommand): the unbiasedness of the importance-sampling estimator, the
//! exactness of the `mse = bias^2 + variance` split, and how badly a naive
//! argmin over a shared tiny sample can misselect.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A one-dimensional probability density that can be both evaluated and
/// sampled. Implementations must integrate to one over their support.
pub trait Density1d<F: Real> {
    /// Density value at `x` (zero outside the support).
    fn pdf(&self, x: F) -> F;
    /// Draws one point from the density.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F;
}

/// Uniform density on `[a, b)`.
#[derive(Clone, Copy, Debug)]
pub struct UniformDensity<F> {
    a: F,
    b: F,
}

impl<F: Real> UniformDensity<F> {
    pub fn new(a: F, b: F) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("need finite a < b, got [{a}, {b})")));
        }
        Ok(Self { a, b })
    }
}

impl<F: Real> Density1d<F> for UniformDensity<F> {
    fn pdf(&self, x: F) -> F {
        if x >= self.a && x < self.b {
            F::one() / (self.b - self.a)
        } else {
            F::zero()
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        self.a + (self.b - self.a) * F::unit_uniform(rng)
    }
}

/// Piecewise-constant density on a uniform grid over `[a, b)`, sampled by
/// inverse CDF. Produced by [`optimal_importance_density_1d`].
#[derive(Clone, Debug)]
pub struct PiecewiseConstantDensity<F> {
    a: F,
    b: F,
    /// Normalized density value per cell.
    heights: Vec<F>,
    /// Cumulative mass at each cell's right edge; last entry is 1.
    cdf: Vec<F>,
}

impl<F: Real> PiecewiseConstantDensity<F> {
    /// Builds the density from nonnegative cell masses (any scale).
    pub fn from_cell_masses(a: F, b: F, masses: Vec<F>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("need finite a < b, got [{a}, {b})")));
        }
        if masses.is_empty() {
            return Err(Error::InvalidArgument("need at least one grid cell".into()));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < F::zero()) {
            return Err(Error::InvalidProposal("cell masses must be finite and nonnegative".into()));
        }
        let total: F = masses.iter().copied().sum();
        if !(total > F::zero()) {
            return Err(Error::InvalidProposal("density integrates to zero".into()));
        }
        let n = masses.len();
        let width = (b - a) / F::of(n as f64);
        let mut cdf = Vec::with_capacity(n);
        let mut acc = F::zero();
        let mut heights = Vec::with_capacity(n);
        for m in &masses {
            acc += *m / total;
            cdf.push(acc);
            heights.push(*m / total / width);
        }
        // Guarantee the final edge is exactly one so inverse-CDF lookups
        // cannot fall off the end.
        *cdf.last_mut().expect("nonempty") = F::one();
        Ok(Self { a, b, heights, cdf })
    }

    /// Cumulative mass at `x` (0 below the support, 1 above).
    pub fn cdf(&self, x: F) -> F {
        if x <= self.a {
            return F::zero();
        }
        if x >= self.b {
            return F::one();
        }
        let n = self.heights.len();
        let width = (self.b - self.a) / F::of(n as f64);
        let pos = (x - self.a) / width;
        let cell = pos.to_f64_lossy().floor() as usize;
        let cell = cell.min(n - 1);
        let left_mass = if cell == 0 { F::zero() } else { self.cdf[cell - 1] };
        let into = x - (self.a + F::of(cell as f64) * width);
        left_mass + self.heights[cell] * into
    }
}

impl<F: Real> Density1d<F> for PiecewiseConstantDensity<F> {
    fn pdf(&self, x: F) -> F {
        if x < self.a || x >= self.b {
            return F::zero();
        }
        let n = self.heights.len();
        let width = (self.b - self.a) / F::of(n as f64);
        let cell = ((x - self.a) / width).to_f64_lossy().floor() as usize;
        self.heights[cell.min(n - 1)]
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        let u = F::unit_uniform(rng);
        // First cell whose cumulative mass exceeds u; zero-mass cells are
        // never selected because their cdf equals the previous cell's.
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        let left_mass = if idx == 0 { F::zero() } else { self.cdf[idx - 1] };
        let n = self.heights.len();
        let width = (self.b - self.a) / F::of(n as f64);
        let left = self.a + F::of(idx as f64) * width;
        left + (u - left_mass) / self.heights[idx]
    }
}

/// Summary of the integrand/density ratios behind an estimate.
#[derive(Clone, Copy, Debug)]
pub struct WeightsSummary<F> {
    pub min: F,
    pub max: F,
    pub mean: F,
}

/// An importance-sampling estimate `(1/m) sum f(x_i)/h(x_i)`.
#[derive(Clone, Copy, Debug)]
pub struct ISEstimate<F> {
    /// The sample average of the ratios.
    pub value: F,
    /// Number of draws `m`.
    pub n: usize,
    /// Min/max/mean of the individual ratios.
    pub weights_summary: WeightsSummary<F>,
}

/// Estimates `integral of f` by importance sampling `m >= 1` points from `h`.
///
/// Errors with an invalid-proposal diagnosis if any drawn point has zero
/// density (which would make the ratio undefined).
pub fn importance_estimate<F: Real, R: Rng + ?Sized>(
    f: impl Fn(F) -> F,
    h: &impl Density1d<F>,
    m: usize,
    rng: &mut R,
) -> Result<ISEstimate<F>> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let mut sum = F::zero();
    let mut min = F::infinity();
    let mut max = F::neg_infinity();
    for _ in 0..m {
        let x = h.sample(rng);
        let hx = h.pdf(x);
        if !(hx > F::zero()) {
            return Err(Error::InvalidProposal(format!("sampled point {x} has density {hx}")));
        }
        let ratio = f(x) / hx;
        sum += ratio;
        if ratio < min {
            min = ratio;
        }
        if ratio > max {
            max = ratio;
        }
    }
    let value = sum / F::of(m as f64);
    Ok(ISEstimate { value, n: m, weights_summary: WeightsSummary { min, max, mean: value } })
}

/// The variance-minimizing importance density for estimating `integral of f`:
/// proportional to `|f|`, discretized as piecewise-constant on `grid` uniform
/// cells (midpoint rule) with inverse-CDF sampling.
///
/// Errors when `|f|` integrates to zero on the domain.
pub fn optimal_importance_density_1d<F: Real>(
    f: impl Fn(F) -> F,
    domain: (F, F),
    grid: usize,
) -> Result<PiecewiseConstantDensity<F>> {
    let (a, b) = domain;
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must have at least one cell".into()));
    }
    let width = (b - a) / F::of(grid as f64);
    let half = F::of(0.5);
    let masses: Vec<F> = (0..grid)
        .map(|i| {
            let mid = a + (F::of(i as f64) + half) * width;
            f(mid).abs()
        })
        .collect();
    PiecewiseConstantDensity::from_cell_masses(a, b, masses)
}

/// The empirical decomposition of mean squared error against a known truth.
///
/// The variance is the population form (divide by N, not N-1): that is what
/// makes `mse = bias_sq + variance` an exact algebraic identity rather than
/// an approximation. The statistical coupling between estimator and target
/// that the full decomposition would carry is ignored here, the same
/// convention the decomposition is usually quoted with.
#[derive(Clone, Copy, Debug)]
pub struct BiasVarianceReport<F> {
    pub mse: F,
    pub bias_sq: F,
    pub variance: F,
}

/// Computes mse, squared bias, and population variance of `estimates` around
/// `truth`.
pub fn empirical_bias_variance<F: Real>(estimates: &[F], truth: F) -> Result<BiasVarianceReport<F>> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("need at least one estimate".into()));
    }
    let n = F::of(estimates.len() as f64);
    let mean: F = estimates.iter().copied().sum::<F>() / n;
    let bias = mean - truth;
    let mse: F = estimates.iter().map(|&e| (e - truth) * (e - truth)).sum::<F>() / n;
    let variance: F = estimates.iter().map(|&e| (e - mean) * (e - mean)).sum::<F>() / n;
    Ok(BiasVarianceReport { mse, bias_sq: bias * bias, variance })
}

/// Naive Monte Carlo optimization: returns the index of the `theta`
/// minimizing `(1/m) sum f_theta(x_i) / h(x_i)` over a shared sample, ties
/// broken by the lowest index.
///
/// Every data point must carry a strictly positive density.
pub fn naive_mco_argmin<T, X, F: Real>(
    thetas: &[T],
    f_theta: impl Fn(&T, &X) -> F,
    data: &[(X, F)],
) -> Result<usize> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("need at least one theta".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("need at least one data point".into()));
    }
    if data.iter().any(|(_, h)| !(*h > F::zero())) {
        return Err(Error::InvalidProposal("every data point needs positive density".into()));
    }
    let m = F::of(data.len() as f64);
    let mut best = 0usize;
    let mut best_score = F::infinity();
    for (i, theta) in thetas.iter().enumerate() {
        let score: F = data.iter().map(|(x, h)| f_theta(theta, x) / *h).sum::<F>() / m;
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    #[test]
    fn constant_integrand_is_exact_with_zero_spread() {
        let h = UniformDensity::new(0.0, 1.0).unwrap();
        let est = importance_estimate(|_| 2.5f64, &h, 100, &mut substream(1, &[0])).unwrap();
        assert!((est.value - 2.5).abs() < 1e-12);
        assert!((est.weights_summary.min - est.weights_summary.max).abs() < 1e-12);
    }

    #[test]
    fn linear_integrand_lands_near_half() {
        let h = UniformDensity::new(0.0, 1.0).unwrap();
        let m = 100_000;
        let est = importance_estimate(|x: f64| x, &h, m, &mut substream(2, &[0])).unwrap();
        let se = 1.0 / (12.0f64.sqrt() * (m as f64).sqrt());
        assert!((est.value - 0.5).abs() < 5.0 * se, "value {}", est.value);
    }

    #[test]
    fn optimal_density_degenerates_for_proportional_integrand() {
        // When h is exactly proportional to f >= 0, every ratio equals the
        // integral and the estimator has zero spread. A step function is
        // constant on the grid cells, so the piecewise-constant density
        // represents it exactly (integral = 0.5*1 + 0.5*3 = 2).
        let f = |x: f64| if x < 0.5 { 1.0 } else { 3.0 };
        let h = optimal_importance_density_1d(f, (0.0, 1.0), 256).unwrap();
        let est = importance_estimate(f, &h, 500, &mut substream(3, &[0])).unwrap();
        assert!((est.weights_summary.max - est.weights_summary.min).abs() < 1e-10);
        assert!((est.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_f_gives_uniform_density() {
        let h = optimal_importance_density_1d(|_| 1.0f64, (0.0, 1.0), 64).unwrap();
        for x in [0.01, 0.3, 0.77, 0.99] {
            assert!((h.pdf(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_f_cdf_matches_square() {
        let h = optimal_importance_density_1d(|x| x, (0.0f64, 1.0), 10_000).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            assert!((h.cdf(x) - x * x).abs() < 1e-3, "cdf({x}) = {}", h.cdf(x));
        }
    }

    #[test]
    fn piecewise_sampling_matches_its_own_cdf() {
        let h = optimal_importance_density_1d(|x| x, (0.0f64, 1.0), 512).unwrap();
        let mut rng = substream(4, &[0]);
        let n = 50_000;
        let below_point7 = (0..n).filter(|_| h.sample(&mut rng) < 0.7).count();
        let freq = below_point7 as f64 / n as f64;
        let p = h.cdf(0.7);
        assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn zero_mass_density_is_rejected() {
        assert!(matches!(
            optimal_importance_density_1d(|_| 0.0f64, (0.0, 1.0), 32),
            Err(Error::InvalidProposal(_))
        ));
    }

    #[test]
    fn optimal_density_reduces_variance_for_square() {
        // 1e4 repeated small estimates of integral x^2 dx on [0,1]:
        // the |f|-proportional density must beat uniform sampling.
        let f = |x: f64| x * x;
        let uniform = UniformDensity::new(0.0, 1.0).unwrap();
        let optimal = optimal_importance_density_1d(f, (0.0, 1.0), 1024).unwrap();
        let reps = 10_000;
        let m = 8;
        let mut rng = substream(5, &[0]);
        let mut uni = Vec::with_capacity(reps);
        let mut opt = Vec::with_capacity(reps);
        for _ in 0..reps {
            uni.push(importance_estimate(f, &uniform, m, &mut rng).unwrap().value);
            opt.push(importance_estimate(f, &optimal, m, &mut rng).unwrap().value);
        }
        let var = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
        };
        assert!(
            var(&opt) < var(&uni),
            "optimal variance {} should be below uniform {}",
            var(&opt),
            var(&uni)
        );
    }

    #[test]
    fn bias_variance_hand_examples() {
        let perfect = empirical_bias_variance(&[3.0f64, 3.0, 3.0], 3.0).unwrap();
        assert_eq!((perfect.mse, perfect.bias_sq, perfect.variance), (0.0, 0.0, 0.0));

        let r = empirical_bias_variance(&[0.0f64, 2.0], 0.0).unwrap();
        assert!((r.mse - 2.0).abs() < 1e-15);
        assert!((r.bias_sq - 1.0).abs() < 1e-15);
        assert!((r.variance - 1.0).abs() < 1e-15);
    }

    proptest! {
        /// mse = bias^2 + variance exactly (to rounding) for arbitrary data,
        /// because the variance uses the population (1/N) form.
        #[test]
        fn bias_variance_identity(
            estimates in proptest::collection::vec(-100.0..100.0f64, 1..50),
            truth in -100.0..100.0f64,
        ) {
            let r = empirical_bias_variance(&estimates, truth).unwrap();
            let lhs = r.mse;
            let rhs = r.bias_sq + r.variance;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        /// Scaling all densities by a positive constant moves every score by
        /// the same factor and cannot change the argmin.
        #[test]
        fn naive_mco_weight_scale_invariance(
            seed in 0u64..1000,
            scale in 0.01..100.0f64,
        ) {
            let mut rng = substream(seed, &[77]);
            let thetas = [0.0f64, 0.25, 0.5, 0.75, 1.0];
            let data: Vec<(f64, f64)> = (0..12)
                .map(|_| (f64::unit_uniform(&mut rng), 0.5 + f64::unit_uniform(&mut rng)))
                .collect();
            let scaled: Vec<(f64, f64)> = data.iter().map(|&(x, h)| (x, h * scale)).collect();
            let f = |t: &f64, x: &f64| (t - x) * (t - x);
            let a = naive_mco_argmin(&thetas, f, &data).unwrap();
            let b = naive_mco_argmin(&thetas, f, &scaled).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn naive_mco_singleton_and_dense_grid() {
        let f = |t: &f64, x: &f64| (t - x) * (t - x);
        let single = naive_mco_argmin(&[0.42f64], f, &[(0.1f64, 1.0f64)]).unwrap();
        assert_eq!(single, 0);

        // Dense uniform data on [0,1]: expected squared loss is minimized at 0.5.
        let data: Vec<(f64, f64)> = (0..1000).map(|i| ((i as f64 + 0.5) / 1000.0, 1.0)).collect();
        let idx = naive_mco_argmin(&[0.0f64, 0.5, 1.0], f, &data).unwrap();
        assert_eq!(idx, 1);
    }

    #[test]
    fn naive_mco_misselects_with_tiny_samples() {
        // With m = 2 the naive argmin over a shared sample picks a
        // suboptimal theta with clearly positive frequency.
        let f = |t: &f64, x: &f64| (t - x) * (t - x);
        let thetas = [0.0f64, 0.5, 1.0];
        let h = UniformDensity::new(0.0f64, 1.0).unwrap();
        let mut rng = substream(6, &[0]);
        let reps = 500;
        let mut missed = 0;
        for _ in 0..reps {
            let data: Vec<(f64, f64)> = (0..2).map(|_| {
                let x = h.sample(&mut rng);
                (x, h.pdf(x))
            }).collect();
            if naive_mco_argmin(&thetas, f, &data).unwrap() != 1 {
                missed += 1;
            }
        }
        assert!(missed > 0, "expected some misselections");
    }

    #[test]
    fn unbiasedness_over_repetitions() {
        // 2000 repetitions, m = 100, f(x) = x on [0,1]: the mean of the
        // estimates sits within 4 standard errors of 1/2.
        let h = UniformDensity::new(0.0f64, 1.0).unwrap();
        let reps = 2000;
        let mut rng = substream(7, &[0]);
        let estimates: Vec<f64> = (0..reps)
            .map(|_| importance_estimate(|x| x, &h, 100, &mut rng).unwrap().value)
            .collect();
        let mean = estimates.iter().sum::<f64>() / reps as f64;
        let sd = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        assert!((mean - 0.5).abs() <= 4.0 * sd / (reps as f64).sqrt());
    }
}
