//! Shared helpers for the integration suites: composite Simpson quadrature
//! and a dependency-free Nelder–Mead refiner. Both are deliberately
//! independent of the library's own numerics so they can serve as oracles.

#![allow(dead_code)] // each integration target uses a subset

/// Composite Simpson quadrature of `f` on `[a, b]` with `n` subintervals
/// (`n` is rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        sum += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Tensor-product Simpson quadrature on `[ax, bx] x [ay, by]`, `n`
/// subintervals per axis.
pub fn simpson2d(
    f: impl Fn(f64, f64) -> f64,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    n: usize,
) -> f64 {
    simpson(|x| simpson(|y| f(x, y), ay, by, n), ax, bx, n)
}

/// Nelder–Mead simplex minimization: starts from `x0` with per-coordinate
/// simplex offset `scale`, runs `iters` reflect/expand/contract/shrink
/// rounds, and returns the best vertex and its value. Entirely deterministic.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += scale;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(v, _)| v[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let reflect: Vec<f64> =
            (0..d).map(|j| centroid[j] + alpha * (centroid[j] - worst.0[j])).collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> =
                (0..d).map(|j| centroid[j] + gamma * (reflect[j] - centroid[j])).collect();
            let fe = f(&expand);
            simplex[d] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflect, fr);
        } else {
            let contract: Vec<f64> =
                (0..d).map(|j| centroid[j] + rho * (worst.0[j] - centroid[j])).collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[d] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> =
                        (0..d).map(|j| best[j] + sigma * (entry.0[j] - best[j])).collect();
                    let fs = f(&shrunk);
                    *entry = (shrunk, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
    simplex.swap_remove(0)
}
