//! Riesz transforms, the transversal/longitudinal (S/P) splitting of vector
//! fields, and spectral derivatives.
//!
//! Axes are 0-based. The constant Fourier mode has no direction; it is sent
//! to zero by every Riesz transform and belongs to the transversal part.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::field::{ScalarField, VectorField};
use crate::grid::{dot, Grid, Point};
use crate::linalg::power_iteration;
use crate::norms::a_p_constant;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_axis(grid: &Grid, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::Parameter(format!("axis {axis} out of range for a {}-dimensional grid", grid.dim())));
    }
    Ok(())
}

/// Riesz multiplier `-iξ_j/|ξ|`, zero at `ξ = 0`.
pub fn riesz_symbol(xi: &Point, axis: usize) -> Complex64 {
    let k = dot(xi, xi).sqrt();
    if k == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        -I * (xi[axis] / k)
    }
}

pub fn riesz_apply(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    check_axis(f.grid(), axis)?;
    Ok(fft::apply_multiplier(f, |xi| riesz_symbol(xi, axis)))
}

/// Spectral partial derivative `∂_j`, multiplier `iξ_j`.
pub fn derivative(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    check_axis(f.grid(), axis)?;
    Ok(fft::apply_multiplier(f, |xi| I * xi[axis]))
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let d = f.grid().dim();
    let comps = (0..d).map(|j| fft::apply_multiplier(f, |xi| I * xi[j])).collect();
    VectorField::from_parts(*f.grid(), comps)
}

pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = *u.grid();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (j, c) in u.components().iter().enumerate() {
        let mut data = c.samples().to_vec();
        fft::transform_in_place(&grid, &mut data, Direction::Forward);
        for (i, z) in data.iter().enumerate() {
            acc[i] += I * grid.frequency(i)[j] * z;
        }
    }
    fft::transform_in_place(&grid, &mut acc, Direction::Inverse);
    ScalarField::from_parts(grid, acc)
}

/// Componentwise spectral Laplacian `Δu`, multiplier `-|ξ|²`.
pub fn laplacian(u: &VectorField) -> VectorField {
    fft::apply_vector_multiplier(u, |xi, c| {
        let k2 = dot(xi, xi);
        c.iter_mut().for_each(|z| *z *= -k2);
    })
}

/// Splits Fourier coefficients `c` at frequency `ξ` into `(c_S, c_P)` in place:
/// on return `c` holds `c_S` and the longitudinal part is returned.
pub(crate) fn split_coefficients(xi: &Point, c: &mut [Complex64]) -> [Complex64; 3] {
    let mut p = [Complex64::new(0.0, 0.0); 3];
    let k2: f64 = (0..c.len()).map(|j| xi[j] * xi[j]).sum();
    if k2 == 0.0 {
        return p;
    }
    let proj: Complex64 = (0..c.len()).map(|j| c[j] * xi[j]).sum::<Complex64>() / k2;
    for j in 0..c.len() {
        p[j] = proj * xi[j];
        c[j] -= p[j];
    }
    p
}

/// Transversal (divergence-free) and longitudinal (gradient) parts of a vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzPair {
    pub u_s: VectorField,
    pub u_p: VectorField,
}

/// `u = u_S + u_P` with `ξ·û_S(ξ) = 0` and `û_P(ξ) ∥ ξ`; the mean of `u` goes to `u_S`.
pub fn helmholtz_split(u: &VectorField) -> Result<HelmholtzPair> {
    let grid = *u.grid();
    let d = grid.dim();
    if d < 2 {
        return Err(Error::Unsupported("Helmholtz splitting needs d >= 2".into()));
    }
    let mut s = fft::forward_vector(u);
    let mut p = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
    let mut buf = [Complex64::new(0.0, 0.0); 3];
    for i in 0..grid.len() {
        for j in 0..d {
            buf[j] = s[j][i];
        }
        let long = split_coefficients(&grid.frequency(i), &mut buf[..d]);
        for j in 0..d {
            s[j][i] = buf[j];
            p[j][i] = long[j];
        }
    }
    Ok(HelmholtzPair { u_s: fft::inverse_vector(grid, s), u_p: fft::inverse_vector(grid, p) })
}

/// `cot(π/(2·max{p, p'}))`, the `L^p` norm of a single Riesz transform.
pub fn riesz_lp_constant(p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must lie in (1, ∞), got {p}")));
    }
    let q = p / (p - 1.0);
    Ok(1.0 / (std::f64::consts::PI / (2.0 * p.max(q))).tan())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub p: f64,
    pub riesz_constant: f64,
    /// `1 + 2d·c_p²`
    pub constant: f64,
    /// `‖g_S‖_p + ‖g_P‖_p`
    pub lhs: f64,
    /// `constant · ‖g‖_p`
    pub rhs: f64,
    pub holds: bool,
}

pub fn orthogonality_report(g: &VectorField, p: f64) -> Result<OrthogonalityReport> {
    let c = riesz_lp_constant(p)?;
    let d = g.grid().dim() as f64;
    let pair = helmholtz_split(g)?;
    let constant = 1.0 + 2.0 * d * c * c;
    let lhs = pair.u_s.lp_norm(p) + pair.u_p.lp_norm(p);
    let rhs = constant * g.lp_norm(p);
    Ok(OrthogonalityReport { p, riesz_constant: c, constant, lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) })
}

pub const WEIGHTED_RIESZ_TOLERANCE: f64 = 1e-10;
pub const WEIGHTED_RIESZ_MAX_ITER: usize = 20_000;
const WEIGHTED_RIESZ_SEED: u64 = 0x5249_4553;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRieszReport {
    pub axis: usize,
    /// Estimate of `‖R_j‖` on `L²(w dx)`.
    pub estimate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Muckenhoupt `A_2` constant of `w` over torus dyadic cubes.
    pub q2: f64,
    /// `estimate / q2`
    pub ratio: f64,
    pub configured_constant: f64,
    /// `estimate <= configured_constant · q2`
    pub within_configured_bound: bool,
}

/// Power iteration on `w^{-1/2} R_j* w R_j w^{-1/2}`, whose top eigenvalue is
/// `‖R_j‖²_{L²(w)→L²(w)}`.
pub fn weighted_riesz_norm_estimate(w: &ScalarField, axis: usize, configured_constant: f64) -> Result<WeightedRieszReport> {
    let grid = *w.grid();
    check_axis(&grid, axis)?;
    let weights: Vec<f64> = w
        .samples()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            if z.re > 0.0 && z.im == 0.0 && z.re.is_finite() {
                Ok(z.re)
            } else {
                Err(Error::Domain(format!("weight must be real and positive; sample {i} is {z}")))
            }
        })
        .collect::<Result<_>>()?;
    let inv_sqrt: Vec<f64> = weights.iter().map(|x| 1.0 / x.sqrt()).collect();
    let symbol: Vec<Complex64> = (0..grid.len()).map(|i| riesz_symbol(&grid.frequency(i), axis)).collect();

    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let mut y: Vec<Complex64> = x.iter().zip(&inv_sqrt).map(|(z, s)| z * s).collect();
        fft::transform_in_place(&grid, &mut y, Direction::Forward);
        y.iter_mut().zip(&symbol).for_each(|(z, m)| *z *= m);
        fft::transform_in_place(&grid, &mut y, Direction::Inverse);
        y.iter_mut().zip(&weights).for_each(|(z, wt)| *z *= wt);
        fft::transform_in_place(&grid, &mut y, Direction::Forward);
        y.iter_mut().zip(&symbol).for_each(|(z, m)| *z *= m.conj());
        fft::transform_in_place(&grid, &mut y, Direction::Inverse);
        y.iter_mut().zip(&inv_sqrt).for_each(|(z, s)| *z *= s);
        y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(WEIGHTED_RIESZ_SEED);
    let start: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let result = power_iteration(start, apply, WEIGHTED_RIESZ_TOLERANCE, WEIGHTED_RIESZ_MAX_ITER);
    log::debug!("weighted Riesz R_{axis}: {} power iterations", result.iterations);
    let estimate = result.eigenvalue.max(0.0).sqrt();
    let q2 = a_p_constant(w, 2.0, grid.max_dyadic_level())?.value;
    Ok(WeightedRieszReport {
        axis,
        estimate,
        iterations: result.iterations,
        converged: result.converged,
        q2,
        ratio: estimate / q2,
        configured_constant,
        within_configured_bound: estimate <= configured_constant * q2 * (1.0 + 1e-9),
    })
}
