//! Small dense helpers: matrix norms, power iteration, Gauss–Legendre rules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest singular value, from the Hermitian eigendecomposition of `M*M`.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.iter().all(|z| z.norm_sqr() == 0.0) {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b)).max(0.0).sqrt()
}

fn vec_pnorm(v: &[Complex64], p: f64) -> f64 {
    v.iter().map(|z| z.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `dual_p(y)`: the unit-`q`-norm vector attaining `<dual, y> = ‖y‖_p`.
fn dual_vector(y: &[Complex64], p: f64) -> Vec<Complex64> {
    let norm = vec_pnorm(y, p);
    if norm == 0.0 {
        return vec![Complex64::new(0.0, 0.0); y.len()];
    }
    y.iter()
        .map(|z| {
            let a = z.norm();
            if a == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                (z / a) * (a / norm).powf(p - 1.0)
            }
        })
        .collect()
}

/// Induced `ℓ^p → ℓ^p` norm of a small complex matrix.
///
/// Exact for `p ∈ {1, 2, ∞}`. Otherwise a lower bound from Higham's
/// dual-vector ascent started at every unit vector and the all-ones vector;
/// the returned count is the total number of ascent steps.
pub fn induced_norm(m: &DMatrix<Complex64>, p: f64) -> (f64, usize) {
    let (rows, cols) = m.shape();
    if p == 1.0 {
        let v = (0..cols)
            .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        return (v, 0);
    }
    if p.is_infinite() {
        let v = (0..rows)
            .map(|r| m.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        return (v, 0);
    }
    if p == 2.0 {
        return (spectral_norm(m), 0);
    }
    let q = p / (p - 1.0);
    let mut starts: Vec<Vec<Complex64>> = (0..cols)
        .map(|c| {
            let mut e = vec![Complex64::new(0.0, 0.0); cols];
            e[c] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    starts.push(vec![Complex64::new(1.0, 0.0); cols]);

    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        (0..rows)
            .map(|r| (0..cols).map(|c| m[(r, c)] * x[c]).sum())
            .collect()
    };
    let apply_adj = |y: &[Complex64]| -> Vec<Complex64> {
        (0..cols)
            .map(|c| (0..rows).map(|r| m[(r, c)].conj() * y[r]).sum())
            .collect()
    };

    let mut best = 0.0f64;
    let mut steps = 0;
    for start in starts {
        let n0 = vec_pnorm(&start, p);
        let mut x: Vec<Complex64> = start.iter().map(|z| z / n0).collect();
        for _ in 0..100 {
            steps += 1;
            let y = apply(&x);
            best = best.max(vec_pnorm(&y, p));
            let z = apply_adj(&dual_vector(&y, p));
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if vec_pnorm(&z, q) <= zx * (1.0 + 1e-14) {
                break;
            }
            x = dual_vector(&z, q);
        }
    }
    (best, steps)
}

/// Outcome of a power iteration on a Hermitian positive semidefinite operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerIteration {
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub vector: Vec<Complex64>,
}

/// Power iteration with Rayleigh-quotient stopping rule `|λ_k - λ_{k-1}| <= tol·λ_k`.
pub fn power_iteration(
    start: Vec<Complex64>,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    tol: f64,
    max_iter: usize,
) -> PowerIteration {
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut x = start;
    let n0 = norm(&x);
    if n0 > 0.0 {
        x.iter_mut().for_each(|z| *z /= n0);
    }
    let mut lambda = 0.0f64;
    for it in 1..=max_iter {
        let y = apply(&x);
        let rq: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        let ny = norm(&y);
        if ny == 0.0 {
            return PowerIteration { eigenvalue: 0.0, iterations: it, converged: true, vector: x };
        }
        let done = it > 1 && (rq - lambda).abs() <= tol * rq.abs();
        lambda = rq;
        x = y.into_iter().map(|z| z / ny).collect();
        if done {
            return PowerIteration { eigenvalue: lambda, iterations: it, converged: true, vector: x };
        }
    }
    PowerIteration { eigenvalue: lambda, iterations: max_iter, converged: false, vector: x }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    let n = order as f64;
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}
