//! Weighted expectation-maximization for Gaussian mixtures.
//!
//! The fit maximizes the weighted log-likelihood
//! `sum_i w_i * ln q(x_i)` over mixtures with `k` components. Seeding is
//! deterministic given the RNG: a weighted random first center followed by
//! farthest-point placement, then a hard assignment provides the initial
//! responsibilities.

use rand::Rng;

use super::{
    weighted_gaussian_mle, weighted_gaussian_mle_reporting, GaussianParams, MixtureParams,
    WeightedPoint,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maximum number of EM iterations.
const MAX_ITERS: usize = 200;
/// Convergence threshold on the log-likelihood improvement, relative to
/// `1 + |previous|`.
const REL_TOL: f64 = 1e-8;
/// A component whose total responsibility mass falls below this fraction is
/// considered starved and gets re-seeded.
const MIN_COMPONENT_MASS: f64 = 1e-6;
/// A component whose raw covariance trace per dimension falls below this is
/// considered collapsed and gets re-seeded.
const MIN_COMPONENT_SPREAD: f64 = 1e-12;

/// How to initialize the EM iteration.
pub enum EmInit<F: Real> {
    /// Deterministic-given-RNG seeding: weighted random first center,
    /// farthest-point for the rest, hard assignment for responsibilities.
    Seeded,
    /// Start from the given parameters (their component count must be `k`).
    Params(MixtureParams<F>),
}

/// Result of an EM fit.
#[derive(Clone, Debug)]
pub struct EmFit<F: Real> {
    /// The fitted mixture.
    pub params: MixtureParams<F>,
    /// Component count actually fitted (can be below the requested `k` when
    /// the sample has fewer distinct support points).
    pub effective_k: usize,
    /// True when `effective_k < k` was forced by the sample.
    pub k_reduced: bool,
    /// EM iterations actually performed.
    pub iterations: usize,
    /// Weighted log-likelihood after each E-step since the last component
    /// rescue; non-decreasing up to the convergence tolerance whenever
    /// `regularized` is false.
    pub loglik_trace: Vec<F>,
    /// True when any fitted covariance needed jitter regularization. The
    /// unregularized likelihood diverges in exactly those situations (a
    /// component collapsing onto an affine subspace), so the monotone-trace
    /// guarantee is waived.
    pub regularized: bool,
}

/// Fits a `k`-component Gaussian mixture to weighted points.
///
/// `k = 1` reduces exactly to [`weighted_gaussian_mle`]. If the sample has
/// fewer than `k` distinct support points (among positive-weight points), the
/// component count is reduced to that number and flagged in the result.
pub fn em_fit_mixture<F: Real, R: Rng + ?Sized>(
    points: &[WeightedPoint<F>],
    k: usize,
    init: EmInit<F>,
    rng: &mut R,
) -> Result<EmFit<F>> {
    if k == 0 {
        return Err(Error::InvalidArgument("component count must be at least 1".into()));
    }
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
            return Err(Error::InvalidArgument(format!("point {i} has invalid weight {}", p.weight)));
        }
        total += p.weight;
    }
    if !(total > F::zero()) {
        return Err(Error::EmptyFit("total weight is zero".into()));
    }

    let distinct = count_distinct_support(points, k);
    let (k_eff, k_reduced) = if distinct < k { (distinct, true) } else { (k, false) };

    if k_eff == 1 {
        let (g, regularized) = weighted_gaussian_mle_reporting(points)?;
        let ll = weighted_loglik_single(points, &g);
        return Ok(EmFit {
            params: MixtureParams::single(g),
            effective_k: 1,
            k_reduced,
            iterations: 0,
            loglik_trace: vec![ll],
            regularized,
        });
    }

    let mut params = match init {
        EmInit::Params(p) => {
            if p.dim() != d {
                return Err(Error::InvalidArgument(format!(
                    "initial parameters have dimension {}, data has {d}",
                    p.dim()
                )));
            }
            if p.k() != k_eff {
                return Err(Error::InvalidArgument(format!(
                    "initial parameters have {} components, fit wants {k_eff}",
                    p.k()
                )));
            }
            p
        }
        EmInit::Seeded => seed_params(points, k_eff, total, rng)?,
    };

    let n = points.len();
    let mut resp = vec![F::zero(); n * k_eff];
    let mut trace: Vec<F> = Vec::new();
    let mut prev_ll: Option<F> = None;
    let mut iterations = 0usize;
    let mut regularized = false;

    for _ in 0..MAX_ITERS {
        iterations += 1;
        // E-step: responsibilities and weighted log-likelihood.
        let mut ll = F::zero();
        for (i, p) in points.iter().enumerate() {
            let mut best = F::neg_infinity();
            let row = &mut resp[i * k_eff..(i + 1) * k_eff];
            for (k_idx, (w, comp)) in params.weights().iter().zip(params.components()).enumerate() {
                let term = if *w > F::zero() { w.ln() + comp.logpdf(&p.x) } else { F::neg_infinity() };
                row[k_idx] = term;
                if term > best {
                    best = term;
                }
            }
            let mut denom = F::zero();
            for r in row.iter_mut() {
                *r = (*r - best).exp();
                denom += *r;
            }
            for r in row.iter_mut() {
                *r /= denom;
            }
            ll += p.weight * (best + denom.ln());
        }
        trace.push(ll);
        if let Some(prev) = prev_ll {
            if (ll - prev).abs() <= F::of(REL_TOL) * (F::one() + prev.abs()) {
                break;
            }
        }
        prev_ll = Some(ll);

        // M-step with starvation/collapse rescue.
        let mut rescued = false;
        let mut new_weights = Vec::with_capacity(k_eff);
        let mut new_components = Vec::with_capacity(k_eff);
        for k_idx in 0..k_eff {
            let mass: F = points
                .iter()
                .enumerate()
                .map(|(i, p)| p.weight * resp[i * k_eff + k_idx])
                .sum();
            if mass <= F::of(MIN_COMPONENT_MASS) * total {
                let (mean, cov) = rescue_component(points, total, rng);
                let (g, reg) = GaussianParams::new_reporting(mean, cov)?;
                regularized |= reg;
                new_weights.push(F::of(1.0 / k_eff as f64));
                new_components.push(g);
                rescued = true;
                continue;
            }
            let mut mean = vec![F::zero(); d];
            for (i, p) in points.iter().enumerate() {
                let w = p.weight * resp[i * k_eff + k_idx];
                for (m, &x) in mean.iter_mut().zip(&p.x) {
                    *m += w * x;
                }
            }
            for m in &mut mean {
                *m /= mass;
            }
            let mut cov = vec![F::zero(); d * d];
            for (i, p) in points.iter().enumerate() {
                let w = p.weight * resp[i * k_eff + k_idx];
                for a in 0..d {
                    let da = p.x[a] - mean[a];
                    let wda = w * da;
                    for b in 0..=a {
                        cov[a * d + b] += wda * (p.x[b] - mean[b]);
                    }
                }
            }
            let mut spread = F::zero();
            for a in 0..d {
                for b in 0..=a {
                    let v = cov[a * d + b] / mass;
                    cov[a * d + b] = v;
                    cov[b * d + a] = v;
                }
                spread += cov[a * d + a];
            }
            if spread / F::of(d as f64) < F::of(MIN_COMPONENT_SPREAD) {
                let (mean, cov) = rescue_component(points, total, rng);
                let (g, reg) = GaussianParams::new_reporting(mean, cov)?;
                regularized |= reg;
                new_weights.push(F::of(1.0 / k_eff as f64));
                new_components.push(g);
                rescued = true;
                continue;
            }
            let (g, reg) = GaussianParams::new_reporting(mean, cov)?;
            regularized |= reg;
            new_weights.push(mass / total);
            new_components.push(g);
        }
        params = MixtureParams::new(new_weights, new_components)?;
        if rescued {
            // The likelihood can drop across a rescue; restart the monotone
            // segment so the reported trace keeps its contract.
            trace.clear();
            prev_ll = None;
        }
    }

    Ok(EmFit { params, effective_k: k_eff, k_reduced, iterations, loglik_trace: trace, regularized })
}

/// Counts distinct positive-weight support points, stopping early at `cap`.
fn count_distinct_support<F: Real>(points: &[WeightedPoint<F>], cap: usize) -> usize {
    let mut reps: Vec<&[F]> = Vec::new();
    for p in points {
        if !(p.weight > F::zero()) {
            continue;
        }
        if !reps.iter().any(|r| r.iter().zip(&p.x).all(|(a, b)| a == b)) {
            reps.push(&p.x);
            if reps.len() >= cap {
                break;
            }
        }
    }
    reps.len()
}

fn weighted_loglik_single<F: Real>(points: &[WeightedPoint<F>], g: &GaussianParams<F>) -> F {
    points.iter().map(|p| p.weight * g.logpdf(&p.x)).sum()
}

/// A rescue component: mean at a weighted random point, covariance from the
/// whole pool (regularization happens at construction).
fn rescue_component<F: Real, R: Rng + ?Sized>(
    points: &[WeightedPoint<F>],
    total: F,
    rng: &mut R,
) -> (Vec<F>, Vec<F>) {
    let idx = weighted_index(points, total, rng);
    let mean = points[idx].x.clone();
    let d = mean.len();
    let mut global_mean = vec![F::zero(); d];
    for p in points {
        for (m, &x) in global_mean.iter_mut().zip(&p.x) {
            *m += p.weight * x;
        }
    }
    for m in &mut global_mean {
        *m /= total;
    }
    let mut cov = vec![F::zero(); d * d];
    for p in points {
        for a in 0..d {
            let da = p.x[a] - global_mean[a];
            for b in 0..=a {
                cov[a * d + b] += p.weight * da * (p.x[b] - global_mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = cov[a * d + b] / total;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }
    (mean, cov)
}

/// Draws an index with probability proportional to point weight.
fn weighted_index<F: Real, R: Rng + ?Sized>(points: &[WeightedPoint<F>], total: F, rng: &mut R) -> usize {
    let u = F::unit_uniform(rng) * total;
    let mut acc = F::zero();
    let mut last_positive = 0usize;
    for (i, p) in points.iter().enumerate() {
        if p.weight > F::zero() {
            last_positive = i;
            acc += p.weight;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Farthest-point seeding followed by hard assignment and one M-step.
fn seed_params<F: Real, R: Rng + ?Sized>(
    points: &[WeightedPoint<F>],
    k: usize,
    total: F,
    rng: &mut R,
) -> Result<MixtureParams<F>> {
    let first = weighted_index(points, total, rng);
    let mut centers = vec![first];
    while centers.len() < k {
        let mut best_idx = None;
        let mut best_d2 = F::neg_infinity();
        for (i, p) in points.iter().enumerate() {
            if !(p.weight > F::zero()) {
                continue;
            }
            let d2 = centers
                .iter()
                .map(|&c| sq_dist(&points[c].x, &p.x))
                .fold(F::infinity(), F::min);
            if d2 > best_d2 {
                best_d2 = d2;
                best_idx = Some(i);
            }
        }
        centers.push(best_idx.expect("positive-weight point exists"));
    }

    // Hard assignment to the nearest center (ties to the lower center index),
    // then a weighted MLE per cluster.
    let d = points[0].x.len();
    let mut weights = Vec::with_capacity(k);
    let mut comps = Vec::with_capacity(k);
    let assignment: Vec<usize> = points
        .iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_d2 = F::infinity();
            for (c_idx, &c) in centers.iter().enumerate() {
                let d2 = sq_dist(&points[c].x, &p.x);
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = c_idx;
                }
            }
            best
        })
        .collect();
    for c_idx in 0..k {
        let cluster: Vec<WeightedPoint<F>> = points
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == c_idx)
            .map(|(p, _)| p.clone())
            .collect();
        let mass: F = cluster.iter().map(|p| p.weight).sum();
        if !(mass > F::zero()) {
            // Center is a zero-weight... cannot happen (centers have weight > 0),
            // but a cluster can still have zero mass if all its points weigh 0.
            let g = GaussianParams::new(points[centers[c_idx]].x.clone(), vec![F::zero(); d * d])?;
            weights.push(F::of(f64::EPSILON));
            comps.push(g);
            continue;
        }
        weights.push(mass / total);
        comps.push(weighted_gaussian_mle(&cluster)?);
    }
    MixtureParams::new(weights, comps)
}

fn sq_dist<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}
