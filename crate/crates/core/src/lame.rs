//! The Lamé operator `-Δ* = -μΔ - (λ+μ)∇div` on the torus: symbol and its
//! diagonalization, the free resolvent, the 3D Green kernel, polar factors of
//! matrix potentials and the Birman–Schwinger operator
//! `K_z = |V|^{1/2} (-Δ* - z)^{-1} V_{1/2}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{MatrixPotentialField, VectorField};
use crate::grid::{dot, Grid, Point};
use crate::helmholtz::split_coefficients;
use crate::linalg::power_iteration;

/// Lamé parameters with `μ > 0` and `λ + 2μ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LameParamsRepr", into = "LameParamsRepr")]
pub struct LameParams {
    lambda: f64,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LameParamsRepr {
    lambda: f64,
    mu: f64,
}

impl TryFrom<LameParamsRepr> for LameParams {
    type Error = Error;
    fn try_from(r: LameParamsRepr) -> Result<Self> {
        LameParams::new(r.lambda, r.mu)
    }
}

impl From<LameParams> for LameParamsRepr {
    fn from(p: LameParams) -> Self {
        LameParamsRepr { lambda: p.lambda, mu: p.mu }
    }
}

impl Default for LameParams {
    fn default() -> Self {
        LameParams { lambda: 0.0, mu: 1.0 }
    }
}

impl LameParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) {
            return Err(Error::Parameter("Lamé parameters must be finite".into()));
        }
        if !(mu > 0.0) {
            return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
        }
        if !(lambda + 2.0 * mu > 0.0) {
            return Err(Error::Parameter(format!("lambda + 2 mu must be positive, got {}", lambda + 2.0 * mu)));
        }
        Ok(LameParams { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Longitudinal modulus `λ + 2μ`.
    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    /// `min{μ, λ+2μ}`
    pub fn min_modulus(&self) -> f64 {
        self.mu.min(self.p_modulus())
    }
}

/// `L(ξ) = μ|ξ|² I + (λ+μ) ξξᵗ`.
pub fn lame_symbol(xi: &[f64], params: &LameParams) -> DMatrix<f64> {
    let d = xi.len();
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    DMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j { params.mu * k2 } else { 0.0 };
        diag + (params.lambda + params.mu) * xi[i] * xi[j]
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrices {
    pub l: DMatrix<f64>,
    /// `(μ|ξ|², …, μ|ξ|², (λ+2μ)|ξ|²)`
    pub d: DVector<f64>,
    /// Orthogonal eigenbasis; the last column is `ξ/|ξ|`.
    pub p_orth: DMatrix<f64>,
    /// `[[-ξ₂,-ξ₃,ξ₁],[ξ₁,0,ξ₂],[0,ξ₁,ξ₃]]` in three dimensions when `ξ₁ ≠ 0`.
    pub p_explicit: Option<DMatrix<f64>>,
    /// Set when `d = 3` and the explicit basis is singular (`ξ₁ = 0`).
    pub explicit_singular: bool,
}

/// Orthogonal matrix whose last column is the unit vector `v`, built from a
/// Householder reflection.
fn householder_completion(v: &[f64]) -> DMatrix<f64> {
    let d = v.len();
    // reflect e_d onto -v when v_d >= 0 (no cancellation), then flip that column
    let sign = if v[d - 1] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = DVector::from_fn(d, |i, _| sign * v[i]);
    w[d - 1] += 1.0;
    let w2 = w.norm_squared();
    let mut h = DMatrix::identity(d, d) - (&w * w.transpose()) * (2.0 / w2);
    for i in 0..d {
        h[(i, d - 1)] *= -sign;
    }
    h
}

pub fn diagonalize_symbol(xi: &[f64], params: &LameParams) -> Result<SymbolMatrices> {
    let d = xi.len();
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    if k2 == 0.0 {
        return Err(Error::Degenerate("the symbol at xi = 0 vanishes and has no distinguished direction".into()));
    }
    let k = k2.sqrt();
    let unit: Vec<f64> = xi.iter().map(|x| x / k).collect();
    let diag = DVector::from_fn(d, |i, _| if i + 1 < d { params.mu * k2 } else { params.p_modulus() * k2 });
    let (p_explicit, explicit_singular) = if d == 3 {
        let p = DMatrix::from_row_slice(3, 3, &[-xi[1], -xi[2], xi[0], xi[0], 0.0, xi[1], 0.0, xi[0], xi[2]]);
        // det = ξ₁|ξ|²
        if (xi[0] * k2).abs() <= 1e-12 * k2 * k {
            (None, true)
        } else {
            (Some(p), false)
        }
    } else {
        (None, false)
    };
    Ok(SymbolMatrices { l: lame_symbol(xi, params), d: diag, p_orth: householder_completion(&unit), p_explicit, explicit_singular })
}

/// Applies the Lamé symbol `L(ξ)` to `u`, i.e. computes `-Δ* u`.
pub fn lame_apply(u: &VectorField, params: &LameParams) -> VectorField {
    let d = u.grid().dim();
    let (mu, lm) = (params.mu, params.lambda + params.mu);
    fft::apply_vector_multiplier(u, |xi, c| {
        let k2 = dot(xi, xi);
        let div: Complex64 = (0..d).map(|j| c[j] * xi[j]).sum();
        for j in 0..d {
            c[j] = c[j] * (mu * k2) + div * (lm * xi[j]);
        }
    })
}

/// Smallest admissible distance between `z` and a discrete symbol value.
pub const NEAR_SINGULAR_DISTANCE: f64 = 1e-12;

/// Resolvent multipliers `(1/(μ|ξ|²-z), 1/((λ+2μ)|ξ|²-z))` at every frequency.
fn resolvent_multipliers(grid: &Grid, z: Complex64, params: &LameParams) -> Result<Vec<(Complex64, Complex64)>> {
    let d = grid.dim();
    (0..grid.len())
        .map(|i| {
            let xi = grid.frequency(i);
            let k2 = dot(&xi, &xi);
            let s = params.mu * k2 - z;
            let p = params.p_modulus() * k2 - z;
            // in one dimension only the constant mode has a transversal part
            let s_active = d >= 2 || k2 == 0.0;
            let dist = if s_active { s.norm().min(p.norm()) } else { p.norm() };
            if dist < NEAR_SINGULAR_DISTANCE {
                return Err(Error::NearSingular { z_re: z.re, z_im: z.im, xi: xi[..d].to_vec(), distance: dist });
            }
            Ok((s.inv(), p.inv()))
        })
        .collect()
}

fn apply_resolvent_multipliers(g: &VectorField, mult: &[(Complex64, Complex64)]) -> VectorField {
    let grid = *g.grid();
    let d = grid.dim();
    let mut coeffs = fft::forward_vector(g);
    let mut buf = [Complex64::new(0.0, 0.0); 3];
    for (i, &(ms, mp)) in mult.iter().enumerate() {
        for j in 0..d {
            buf[j] = coeffs[j][i];
        }
        let long = split_coefficients(&grid.frequency(i), &mut buf[..d]);
        for j in 0..d {
            coeffs[j][i] = buf[j] * ms + long[j] * mp;
        }
    }
    fft::inverse_vector(grid, coeffs)
}

/// `(-Δ* - z)^{-1} g = (μ|ξ|²-z)^{-1} ĝ_S + ((λ+2μ)|ξ|²-z)^{-1} ĝ_P` in Fourier space.
pub fn free_resolvent_apply(g: &VectorField, z: Complex64, params: &LameParams) -> Result<VectorField> {
    let mult = resolvent_multipliers(g.grid(), z, params)?;
    Ok(apply_resolvent_multipliers(g, &mult))
}

/// `e^{-√(-ζ) r}/(4πr)` with the principal square root.
pub fn green_kernel_3d(r: f64, zeta: Complex64) -> Result<Complex64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive and finite, got {r}")));
    }
    let k = (-zeta).sqrt();
    Ok((-k * r).exp() / (4.0 * std::f64::consts::PI * r))
}

/// `|V(x)|^{1/2}` and `V_{1/2}(x) = sgn(V(x))|V(x)|^{1/2}` at every point,
/// so that `V_{1/2}|V|^{1/2} = V`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarFactors {
    pub abs_v_sqrt: MatrixPotentialField,
    pub v_half: MatrixPotentialField,
}

/// Per point, from the SVD `V = W Σ Xᴴ`: `|V|^{1/2} = X Σ^{1/2} Xᴴ` and
/// `V_{1/2} = W Σ^{1/2} Xᴴ`. On the kernel of `V` both vanish, which is the
/// pseudo-inverse convention for `sgn(V)`.
pub fn matrix_polar_factors(v: &MatrixPotentialField) -> PolarFactors {
    let grid = *v.grid();
    let d = grid.dim();
    let per_point: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let m = v.matrix_at(i);
            if m.iter().all(|z| z.norm_sqr() == 0.0) {
                let zero = vec![Complex64::new(0.0, 0.0); d * d];
                return (zero.clone(), zero);
            }
            let svd = m.svd(true, true);
            let w = svd.u.expect("left singular vectors requested");
            let xh = svd.v_t.expect("right singular vectors requested");
            let root = DMatrix::from_diagonal(&svd.singular_values.map(|s| Complex64::new(s.max(0.0).sqrt(), 0.0)));
            let tail = &root * &xh;
            let abs_sqrt = xh.adjoint() * &tail;
            let half = w * tail;
            (row_major(&abs_sqrt), row_major(&half))
        })
        .collect();
    let mut a = Vec::with_capacity(d * d * grid.len());
    let mut b = Vec::with_capacity(d * d * grid.len());
    for (x, y) in per_point {
        a.extend(x);
        b.extend(y);
    }
    PolarFactors { abs_v_sqrt: MatrixPotentialField::from_parts(grid, a), v_half: MatrixPotentialField::from_parts(grid, b) }
}

fn row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let (r, c) = m.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect()
}

/// The Birman–Schwinger operator at a fixed `z`, with precomputed polar
/// factors and resolvent multipliers.
pub struct BirmanSchwinger {
    z: Complex64,
    factors: PolarFactors,
    adjoint_half: MatrixPotentialField,
    forward: Vec<(Complex64, Complex64)>,
    backward: Vec<(Complex64, Complex64)>,
}

impl BirmanSchwinger {
    pub fn new(v: &MatrixPotentialField, z: Complex64, params: &LameParams) -> Result<Self> {
        let forward = resolvent_multipliers(v.grid(), z, params)?;
        // the symbol is real symmetric, so R(z)* = R(z̄)
        let backward = forward.iter().map(|(s, p)| (s.conj(), p.conj())).collect();
        let factors = matrix_polar_factors(v);
        let adjoint_half = factors.v_half.adjoint();
        Ok(BirmanSchwinger { z, factors, adjoint_half, forward, backward })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn factors(&self) -> &PolarFactors {
        &self.factors
    }

    pub fn apply(&self, phi: &VectorField) -> VectorField {
        let g = self.factors.v_half.apply(phi);
        self.factors.abs_v_sqrt.apply(&apply_resolvent_multipliers(&g, &self.forward))
    }

    pub fn apply_adjoint(&self, psi: &VectorField) -> VectorField {
        let g = self.factors.abs_v_sqrt.apply(psi);
        self.adjoint_half.apply(&apply_resolvent_multipliers(&g, &self.backward))
    }
}

pub fn birman_schwinger_apply(phi: &VectorField, z: Complex64, v: &MatrixPotentialField, params: &LameParams) -> Result<VectorField> {
    if phi.grid() != v.grid() {
        return Err(Error::Shape("field and potential live on different grids".into()));
    }
    Ok(BirmanSchwinger::new(v, z, params)?.apply(phi))
}

pub const BS_MAX_ITER: usize = 5_000;
const BS_SEED: u64 = 0x4b5a_0001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsNormReport {
    pub z_re: f64,
    pub z_im: f64,
    pub estimate: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

/// `‖K_z‖` by power iteration on `K_z* K_z`, stopping when the Rayleigh
/// quotient changes by at most `tol` relative.
pub fn bs_norm_estimate(z: Complex64, v: &MatrixPotentialField, params: &LameParams, tol: f64) -> Result<BsNormReport> {
    bs_norm_estimate_with(z, v, params, tol, BS_MAX_ITER)
}

pub fn bs_norm_estimate_with(
    z: Complex64,
    v: &MatrixPotentialField,
    params: &LameParams,
    tol: f64,
    max_iter: usize,
) -> Result<BsNormReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let grid = *v.grid();
    let op = BirmanSchwinger::new(v, z, params)?;
    let report = |estimate: f64, iterations: usize| BsNormReport { z_re: z.re, z_im: z.im, estimate, iterations, tolerance: tol };
    if v.is_zero() {
        return Ok(report(0.0, 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(BS_SEED);
    let start: Vec<Complex64> = (0..grid.len() * grid.dim())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let phi = VectorField::from_interleaved(grid, x).expect("length matches grid");
        op.apply_adjoint(&op.apply(&phi)).to_interleaved()
    };
    let result = power_iteration(start, apply, tol, max_iter);
    log::debug!("Birman–Schwinger norm at z = {z}: {} power iterations", result.iterations);
    if !result.converged {
        return Err(Error::Convergence {
            operation: "bs_norm_estimate",
            iterations: result.iterations,
            last_estimate: result.eigenvalue.max(0.0).sqrt(),
        });
    }
    Ok(report(result.eigenvalue.max(0.0).sqrt(), result.iterations))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStep {
    pub epsilon: f64,
    /// `‖K_{ζ+iε}φ - K_ζφ‖`
    pub difference: f64,
}

/// Distance between `K_{ζ+iε}φ` and `K_ζφ` for `ε = ε₀, ε₀/2, …` (`halvings + 1` values).
pub fn epsilon_sequence(
    zeta: Complex64,
    epsilon0: f64,
    halvings: usize,
    v: &MatrixPotentialField,
    params: &LameParams,
    phi: &VectorField,
) -> Result<Vec<EpsilonStep>> {
    if !(epsilon0 > 0.0) {
        return Err(Error::Parameter(format!("initial epsilon must be positive, got {epsilon0}")));
    }
    let limit = birman_schwinger_apply(phi, zeta, v, params)?;
    (0..=halvings)
        .map(|k| {
            let epsilon = epsilon0 / 2f64.powi(k as i32);
            let shifted = birman_schwinger_apply(phi, zeta + Complex64::new(0.0, epsilon), v, params)?;
            Ok(EpsilonStep { epsilon, difference: shifted.sub(&limit).l2_norm() })
        })
        .collect()
}

/// Distance from `z` to the nearest discrete symbol value on `grid`.
pub fn symbol_distance(grid: &Grid, z: Complex64, params: &LameParams) -> (f64, Point) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..grid.len() {
        let xi = grid.frequency(i);
        let k2 = dot(&xi, &xi);
        let dist = (params.mu * k2 - z).norm().min((params.p_modulus() * k2 - z).norm());
        if dist < best.0 {
            best = (dist, xi);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(LameParams::new(0.0, 0.0).is_err());
        assert!(LameParams::new(-2.0, 1.0).is_err());
        let p = LameParams::new(-1.0, 1.0).unwrap();
        assert_eq!(p.min_modulus(), 1.0);
        let json: LameParams = serde_json::from_str(r#"{"lambda": 2.0, "mu": 0.5}"#).unwrap();
        assert_eq!(json.p_modulus(), 3.0);
        assert!(serde_json::from_str::<LameParams>(r#"{"lambda": 0.0, "mu": -1.0}"#).is_err());
    }

    #[test]
    fn symbol_along_axis() {
        let l = lame_symbol(&[1.0, 0.0, 0.0], &LameParams::new(0.0, 1.0).unwrap());
        assert_eq!(l, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0])));
        assert_eq!(lame_symbol(&[0.0, 0.0], &LameParams::default()), DMatrix::zeros(2, 2));
    }

    #[test]
    fn diagonalization_of_sample_frequency() {
        let params = LameParams::new(1.0, 1.0).unwrap();
        let s = diagonalize_symbol(&[1.0, 2.0, 3.0], &params).unwrap();
        let dmat = DMatrix::from_diagonal(&s.d);
        assert_eq!(s.d.as_slice(), &[14.0, 14.0, 42.0]);
        let orth = s.p_orth.transpose() * &s.l * &s.p_orth;
        assert!((orth - &dmat).amax() <= 1e-12 * 42.0);
        let p = s.p_explicit.unwrap();
        let explicit = p.clone().try_inverse().unwrap() * &s.l * p;
        assert!((explicit - dmat).amax() <= 1e-12 * 42.0);
    }

    #[test]
    fn explicit_basis_singular_off_first_axis() {
        let s = diagonalize_symbol(&[0.0, 1.0, 0.0], &LameParams::default()).unwrap();
        assert!(s.explicit_singular);
        assert!(s.p_explicit.is_none());
        assert!(matches!(diagonalize_symbol(&[0.0, 0.0, 0.0], &LameParams::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn resolvent_on_single_modes() {
        let l = 2.0;
        let g = Grid::new(2, 8, l).unwrap();
        let params = LameParams::new(0.5, 1.5).unwrap();
        let k = 2.0 * PI / l;
        let z = c(-1.0, 0.5);
        // transversal: wave along axis 0, polarization along axis 1
        let s_mode = VectorField::from_fn(g, |x| [c(0.0, 0.0), Complex64::from_polar(1.0, k * x[0]), c(0.0, 0.0)]);
        let out = free_resolvent_apply(&s_mode, z, &params).unwrap();
        let expect = s_mode.scale((params.mu() * k * k - z).inv());
        assert!(out.sub(&expect).l2_norm() <= 1e-13 * expect.l2_norm());
        let p_mode = VectorField::from_fn(g, |x| [Complex64::from_polar(1.0, k * x[0]), c(0.0, 0.0), c(0.0, 0.0)]);
        let out = free_resolvent_apply(&p_mode, z, &params).unwrap();
        let expect = p_mode.scale((params.p_modulus() * k * k - z).inv());
        assert!(out.sub(&expect).l2_norm() <= 1e-13 * expect.l2_norm());
    }

    #[test]
    fn resolvent_near_symbol_value_is_rejected() {
        let g = Grid::new(2, 4, 2.0 * PI).unwrap();
        let params = LameParams::default();
        let u = VectorField::zeros(g);
        match free_resolvent_apply(&u, c(1.0, 0.0), &params) {
            Err(Error::NearSingular { xi, .. }) => assert!((xi[0].powi(2) + xi[1].powi(2) - 1.0).abs() < 1e-12),
            other => panic!("expected near-singular error, got {other:?}"),
        }
        assert!(free_resolvent_apply(&u, c(0.0, 0.0), &params).is_err());
    }

    #[test]
    fn green_kernel_values() {
        let v = green_kernel_3d(1.0, c(-1.0, 0.0)).unwrap();
        assert!((v - c((-1f64).exp() / (4.0 * PI), 0.0)).norm() < 1e-15);
        let v = green_kernel_3d(2.0, c(-1e-14, 0.0)).unwrap();
        assert!((v.re - 1.0 / (8.0 * PI)).abs() < 1e-8);
        assert!(green_kernel_3d(0.0, c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn polar_factors_of_scalar_and_zero() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let cval = c(-3.0, 4.0);
        let v = MatrixPotentialField::scalar(&ScalarField::constant(g, cval));
        let f = matrix_polar_factors(&v);
        for i in 0..g.len() {
            let a = f.abs_v_sqrt.at(i);
            let b = f.v_half.at(i);
            assert!((a[0] - c(5f64.sqrt(), 0.0)).norm() < 1e-13 && a[1].norm() < 1e-13);
            assert!((b[0] - cval / 5.0 * 5f64.sqrt()).norm() < 1e-13 && b[2].norm() < 1e-13);
        }
        let z = matrix_polar_factors(&MatrixPotentialField::zeros(g));
        assert!(z.abs_v_sqrt.is_zero() && z.v_half.is_zero());
    }

    #[test]
    fn bs_of_zero_potential_is_zero() {
        let g = Grid::new(3, 4, 1.0).unwrap();
        let r = bs_norm_estimate(c(-1.0, 0.0), &MatrixPotentialField::zeros(g), &LameParams::default(), 1e-10).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn bs_constant_potential_on_transversal_mode() {
        let l = 3.0;
        let g = Grid::new(3, 8, l).unwrap();
        let params = LameParams::new(-0.5, 1.0).unwrap();
        let cval = c(0.3, -0.2);
        let v = MatrixPotentialField::scalar(&ScalarField::constant(g, cval));
        let k = 2.0 * PI / l;
        let z = c(-1.0, 1.0);
        let phi = VectorField::from_fn(g, |x| [c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, k * x[1])]);
        let out = birman_schwinger_apply(&phi, z, &v, &params).unwrap();
        let expect = phi.scale(cval / (params.mu() * k * k - z));
        assert!(out.sub(&expect).l2_norm() <= 1e-12 * expect.l2_norm());
    }
}
