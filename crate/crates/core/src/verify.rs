//! Self-check suites run by `lame-spectra verify`. Each suite compares library
//! output against closed forms or direct recomputation and reports named checks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::enclosure::{absence_threshold, enclosure_disk, lebesgue_bs_constant_d3, BoundKind, ConstantMode, EnclosureSpec};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{MatrixPotentialField, VectorField};
use crate::grid::Grid;
use crate::helmholtz::{divergence, helmholtz_split};
use crate::lame::{
    bs_norm_estimate, diagonalize_symbol, epsilon_sequence, free_resolvent_apply, green_kernel_3d, lame_apply, LameParams,
};
use crate::norms::lp_norm;
use crate::potential::{sample_potential, PotentialSpec};
use crate::spectra::{
    adjoint_symmetry_check, assemble_hamiltonian, containment_check, default_essential_margin, eigenvalues, free_spectrum,
    plane_wave, weyl_residual, WaveMode, DEFAULT_INFLATION,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    FreeSpectrum,
    Helmholtz,
    Symbol,
    Resolvent,
    PlaneWave,
    BirmanSchwinger,
    Containment,
    JSymmetry,
    Weyl,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::FreeSpectrum,
        Suite::Helmholtz,
        Suite::Symbol,
        Suite::Resolvent,
        Suite::PlaneWave,
        Suite::BirmanSchwinger,
        Suite::Containment,
        Suite::JSymmetry,
        Suite::Weyl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::FreeSpectrum => "free-spectrum",
            Suite::Helmholtz => "helmholtz",
            Suite::Symbol => "symbol",
            Suite::Resolvent => "resolvent",
            Suite::PlaneWave => "plane-wave",
            Suite::BirmanSchwinger => "birman-schwinger",
            Suite::Containment => "containment",
            Suite::JSymmetry => "j-symmetry",
            Suite::Weyl => "weyl",
        }
    }

    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|x| x.name() == s)
            .map(|x| vec![*x])
            .ok_or_else(|| Error::Configuration(format!("unknown suite '{s}'; expected one of all, {}", Suite::ALL.map(|x| x.name()).join(", "))))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value <= limit }
    }

    /// Passes when `value >= limit`.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value >= limit }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, limit: 1.0, passed: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub data: Value,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>, data: Value) -> Self {
        SuiteReport { suite, passed: checks.iter().all(|c| c.passed), checks, data }
    }
}

/// Sizes and counts used by the suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    /// Grid for the free-spectrum suite.
    pub grid: Grid,
    pub params: LameParams,
    pub seed: u64,
    pub helmholtz_fields: usize,
    pub symbol_samples: usize,
    pub resolvent_samples: usize,
    pub j_symmetry_potentials: usize,
    /// Grids for the containment suite.
    pub containment_grids: Vec<Grid>,
    /// Fraction of the three-dimensional absence threshold used for containment.
    pub containment_fraction: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            grid: Grid::new(2, 8, 2.0 * PI).expect("valid grid"),
            params: LameParams::default(),
            seed: 0,
            helmholtz_fields: 50,
            symbol_samples: 100,
            resolvent_samples: 20,
            j_symmetry_potentials: 20,
            containment_grids: vec![Grid::new(2, 8, 2.0 * PI).expect("valid grid"), Grid::new(3, 8, 2.0 * PI).expect("valid grid")],
            containment_fraction: 0.5,
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_field(grid: Grid, r: &mut ChaCha8Rng) -> VectorField {
    let data: Vec<Complex64> =
        (0..grid.len() * grid.dim()).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    VectorField::from_interleaved(grid, &data).expect("length matches grid")
}

/// Random field with Fourier support `|m|_∞ <= n/4`, away from the Nyquist row.
fn band_limited_field(grid: Grid, r: &mut ChaCha8Rng) -> VectorField {
    let cut = (grid.n() / 4) as i64;
    let coeffs: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|_| {
            (0..grid.len())
                .map(|i| {
                    let idx = grid.multi_index(i);
                    let inside = (0..grid.dim()).all(|a| grid.frequency_number(idx[a]).abs() <= cut);
                    if inside {
                        Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    fft::inverse_vector(grid, coeffs)
}

fn max_coefficient_gap(a: &VectorField, b: &VectorField) -> f64 {
    let (fa, fb) = (fft::forward_vector(a), fft::forward_vector(b));
    fa.iter().flatten().zip(fb.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn run_suite(suite: Suite, s: &VerifySettings) -> Result<SuiteReport> {
    match suite {
        Suite::FreeSpectrum => free_spectrum_suite(s),
        Suite::Helmholtz => helmholtz_suite(s),
        Suite::Symbol => symbol_suite(s),
        Suite::Resolvent => resolvent_suite(s),
        Suite::PlaneWave => plane_wave_suite(s),
        Suite::BirmanSchwinger => bs_suite(s),
        Suite::Containment => containment_suite(s),
        Suite::JSymmetry => j_symmetry_suite(s),
        Suite::Weyl => weyl_suite(s),
    }
}

/// Runs suites in parallel; results come back in the requested order.
pub fn run_suites(suites: &[Suite], s: &VerifySettings) -> Vec<(Suite, Result<SuiteReport>)> {
    suites.par_iter().map(|&suite| (suite, run_suite(suite, s))).collect()
}

fn free_spectrum_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let grid = s.grid;
    let h = assemble_hamiltonian(&MatrixPotentialField::zeros(grid), &s.params, true)?;
    let report = eigenvalues(&h)?;
    let mut got: Vec<f64> = report.eigenvalues.iter().map(|e| e.re).collect();
    got.sort_by(f64::total_cmp);
    let expect = free_spectrum(&grid, &s.params);
    let scale = expect.last().copied().unwrap_or(1.0).max(1.0);
    let gap = got.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let imag = report.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let disk = enclosure_disk(&EnclosureSpec::new(BoundKind::Lebesgue, 0.5, grid.dim().max(2), s.params), 0.0)?;
    let mut checks = vec![
        Check::at_most("eigenvalues_match_symbol", gap / scale, 1e-9),
        Check::at_most("imaginary_parts", imag / scale, 1e-9),
        Check::at_most("max_residual", report.max_residual, 1e-9 * scale),
    ];
    if grid.dim() >= 2 {
        let contained = containment_check(&report, &disk, 1e-9 * scale, DEFAULT_INFLATION)?;
        checks.push(Check::at_most("violations", contained.violation_count as f64, 0.0));
    }
    Ok(SuiteReport::new(
        Suite::FreeSpectrum,
        checks,
        json!({ "grid": grid, "matrix_dimension": grid.len() * grid.dim(), "eigenvalue_count": got.len() }),
    ))
}

fn helmholtz_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let grids = [(2, 8), (2, 16), (3, 8), (3, 16)];
    let results: Vec<Result<(f64, f64, f64)>> = (0..s.helmholtz_fields)
        .into_par_iter()
        .map(|k| {
            let (d, n) = grids[k % grids.len()];
            let grid = Grid::new(d, n, 2.0 * PI)?;
            let mut r = rng(s.seed, 100 + k as u64);
            let u = random_field(grid, &mut r);
            let pair = helmholtz_split(&u)?;
            let total = u.l2_norm().powi(2);
            let pyth = (total - pair.u_s.l2_norm().powi(2) - pair.u_p.l2_norm().powi(2)).abs() / total;
            let coeff_scale = fft::forward_vector(&u).iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
            let sum = max_coefficient_gap(&pair.u_s.add(&pair.u_p), &u) / coeff_scale;
            let again = helmholtz_split(&pair.u_s)?;
            let idem = max_coefficient_gap(&again.u_s, &pair.u_s).max(max_coefficient_gap(&again.u_p, &VectorField::zeros(grid)))
                / coeff_scale;
            Ok((pyth, sum, idem))
        })
        .collect();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for r in results {
        let (a, b, c) = r?;
        worst = (worst.0.max(a), worst.1.max(b), worst.2.max(c));
    }
    Ok(SuiteReport::new(
        Suite::Helmholtz,
        vec![
            Check::at_most("pythagoras_relative", worst.0, 1e-12),
            Check::at_most("projector_sum_coefficients", worst.1, 1e-13),
            Check::at_most("projector_idempotence_coefficients", worst.2, 1e-13),
        ],
        json!({ "fields": s.helmholtz_fields }),
    ))
}

pub(crate) const SYMBOL_PARAMS: [(f64, f64); 5] = [(0.0, 1.0), (1.0, 1.0), (-0.5, 1.0), (3.0, 0.5), (-1.5, 2.0)];

fn symbol_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let mut r = rng(s.seed, 200);
    let (mut orth, mut expl, mut eig) = (0.0f64, 0.0f64, 0.0f64);
    let mut explicit_count = 0usize;
    for k in 0..s.symbol_samples {
        let d = 2 + k % 2;
        let xi: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        for &(lambda, mu) in &SYMBOL_PARAMS {
            let params = LameParams::new(lambda, mu)?;
            let m = diagonalize_symbol(&xi, &params)?;
            let scale = params.p_modulus().max(mu) * k2;
            let dm = DMatrix::from_diagonal(&m.d);
            orth = orth.max((m.p_orth.transpose() * &m.l * &m.p_orth - &dm).abs().max() / scale);
            if let Some(p) = &m.p_explicit {
                if let Some(inv) = p.clone().try_inverse() {
                    expl = expl.max((inv * &m.l * p - &dm).abs().max() / scale);
                    explicit_count += 1;
                }
            }
            let mut got: Vec<f64> = m.l.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            got.sort_by(f64::total_cmp);
            let mut want = vec![mu * k2; d - 1];
            want.push(params.p_modulus() * k2);
            want.sort_by(f64::total_cmp);
            eig = eig.max(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
        }
    }
    Ok(SuiteReport::new(
        Suite::Symbol,
        vec![
            Check::at_most("orthonormal_basis", orth, 1e-12),
            Check::at_most("explicit_basis", expl, 1e-10),
            Check::at_most("eigenvalue_multiset", eig, 1e-12),
        ],
        json!({ "samples": s.symbol_samples, "parameter_pairs": SYMBOL_PARAMS.len(), "explicit_bases_checked": explicit_count }),
    ))
}

/// Spectral parameters off `[0, ∞)`, including points with `Re z > 0` and `|Im z| = 10⁻³`.
pub(crate) fn resolvent_points(count: usize, r: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut zs = vec![Complex64::new(-1.0, 0.0), Complex64::new(2.5, 1e-3), Complex64::new(0.7, -1e-3), Complex64::new(3.0, 2.0)];
    while zs.len() < count {
        zs.push(Complex64::new(r.random_range(-5.0..5.0), r.random_range(0.5..3.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 }));
    }
    zs.truncate(count);
    zs
}

fn resolvent_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let mut r = rng(s.seed, 300);
    let grid = Grid::new(3, 8, 2.0 * PI + 0.3)?;
    let params = LameParams::new(0.5, 1.0)?;
    let mut worst = 0.0f64;
    for z in resolvent_points(s.resolvent_samples, &mut r) {
        let g = band_limited_field(grid, &mut r);
        let u = free_resolvent_apply(&g, z, &params)?;
        let back = lame_apply(&u, &params).sub(&u.scale(z));
        worst = worst.max(back.sub(&g).l2_norm() / g.l2_norm());
    }
    let mut dominance = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let zeta = Complex64::from_polar(0.5 + i as f64, -PI + (j as f64 + 0.5) * 2.0 * PI / 10.0);
            let rr = 0.1 + 0.4 * j as f64;
            let ratio = green_kernel_3d(rr, zeta)?.norm() / green_kernel_3d(rr, Complex64::new(0.0, 0.0))?.norm();
            dominance = dominance.max(ratio);
        }
    }
    Ok(SuiteReport::new(
        Suite::Resolvent,
        vec![Check::at_most("resolvent_identity", worst, 1e-10), Check::at_most("green_kernel_domination", dominance, 1.0)],
        json!({ "samples": s.resolvent_samples, "grid": grid }),
    ))
}

fn plane_wave_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let grid = Grid::new(3, 8, 2.0)?;
    let params = s.params;
    let k0 = 2.0 * PI / grid.length();
    let (mut res, mut modulus, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for mode in [WaveMode::S, WaveMode::P] {
        for m in 1..=3 {
            let z = mode.modulus(&params) * (m as f64 * k0).powi(2);
            for axis in 0..grid.dim() {
                let w = plane_wave(z, mode, axis, None, &params, &grid)?;
                res = res.max(w.residual);
                let pointwise = w.field.pointwise_norm();
                modulus = modulus.max(pointwise.iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max));
                if mode == WaveMode::S {
                    div = div.max(divergence(&w.field).l2_norm() / w.field.l2_norm());
                }
            }
        }
    }
    Ok(SuiteReport::new(
        Suite::PlaneWave,
        vec![
            Check::at_most("eigen_residual", res, 1e-12),
            Check::at_most("unit_modulus", modulus, 1e-13),
            Check::at_most("s_divergence", div, 1e-12),
        ],
        json!({ "grid": grid }),
    ))
}

pub(crate) const BS_AMPLITUDES: [f64; 5] = [0.05, 0.2, 0.5, 1.0, 2.0];

fn bs_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let grid = Grid::new(3, 16, 8.0)?;
    let params = s.params;
    let c_bs = lebesgue_bs_constant_d3() / params.min_modulus();
    let zs = [Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 1.0), Complex64::new(0.5, 0.1)];
    let mut worst_ratio = 0.0f64;
    let mut rows = Vec::new();
    for &a in &BS_AMPLITUDES {
        let v = sample_potential(&PotentialSpec::GaussianScalar { amplitude: a, width: 1.0, center: None }, &grid)?;
        let n = lp_norm(&v, 1.5)?.value;
        for &z in &zs {
            let est = bs_norm_estimate(z, &v, &params, 1e-10)?.estimate;
            let bound = c_bs * n;
            worst_ratio = worst_ratio.max(est / bound);
            rows.push(json!({ "amplitude": a, "z": [z.re, z.im], "estimate": est, "bound": bound }));
        }
    }
    let v = sample_potential(&PotentialSpec::GaussianScalar { amplitude: 1.0, width: 1.0, center: None }, &grid)?;
    let phi = random_field(grid, &mut rng(s.seed, 500));
    let seq = epsilon_sequence(Complex64::new(0.5, 0.0), 0.1, 6, &v, &params, &phi)?;
    let monotone = seq.windows(2).all(|w| w[1].difference < w[0].difference);
    Ok(SuiteReport::new(
        Suite::BirmanSchwinger,
        vec![Check::at_most("estimate_over_bound", worst_ratio, 1.0), Check::flag("epsilon_sequence_monotone", monotone)],
        json!({ "grid": grid, "samples": rows, "epsilon_sequence": seq }),
    ))
}

/// Complex Gaussian scaled so that its `L^{3/2}` norm is `fraction` of the
/// three-dimensional absence threshold.
pub fn threshold_scaled_potential(grid: &Grid, params: &LameParams, fraction: f64) -> Result<(MatrixPotentialField, f64, f64)> {
    let spec = EnclosureSpec::new(BoundKind::Lebesgue, 0.0, 3, *params);
    let threshold = absence_threshold(&spec)?;
    let base = PotentialSpec::ComplexRotation {
        theta: PI / 3.0,
        base: Box::new(PotentialSpec::GaussianScalar { amplitude: 1.0, width: 1.0, center: None }),
    };
    let unit = sample_potential(&base, grid)?;
    let n = lp_norm(&unit, 1.5)?.value;
    let target = fraction * threshold;
    Ok((unit.scale(Complex64::new(target / n, 0.0)), target, threshold))
}

fn containment_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for grid in &s.containment_grids {
        let d = grid.dim();
        if d < 2 {
            return Err(Error::Configuration("containment grids need d >= 2".into()));
        }
        let (v, norm, threshold) = threshold_scaled_potential(grid, &s.params, s.containment_fraction)?;
        let h = assemble_hamiltonian(&v, &s.params, true)?;
        let report = eigenvalues(&h)?;
        let margin = default_essential_margin(&v);
        let mut disks = vec![EnclosureSpec::new(BoundKind::Lebesgue, 0.5, d, s.params)];
        if d == 3 {
            disks.push(EnclosureSpec::new(BoundKind::Lebesgue, 0.0, 3, s.params));
        }
        for spec in disks {
            let disk = enclosure_disk(&spec, norm)?;
            let c = containment_check(&report, &disk, margin, DEFAULT_INFLATION)?;
            let label = format!("d{}_n{}_gamma{}", d, grid.n(), spec.gamma);
            checks.push(Check::at_most(format!("{label}_violations"), c.violation_count as f64, 0.0));
            runs.push(json!({
                "grid": grid, "gamma": spec.gamma, "explicit_constant": spec.constant_mode == ConstantMode::ExplicitD3,
                "norm": norm, "threshold": threshold, "essential_margin": margin,
                "essential": c.essential_count, "contained": c.contained_count, "violations": c.violation_count,
                "max_residual": c.max_residual,
            }));
        }
    }
    Ok(SuiteReport::new(Suite::Containment, checks, json!({ "runs": runs })))
}

fn j_symmetry_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let grid = Grid::new(3, 4, 2.0)?;
    let results: Vec<Result<(f64, f64, bool)>> = (0..s.j_symmetry_potentials)
        .into_par_iter()
        .map(|k| {
            let spec = PotentialSpec::MatrixDenseRandom { amplitude: 1.0, seed: s.seed.wrapping_add(k as u64), width: None, center: None };
            let v = sample_potential(&spec, &grid)?;
            let r = adjoint_symmetry_check(&v, &s.params)?;
            Ok((r.adjoint_defect, r.j_defect, r.passed))
        })
        .collect();
    let (mut adj, mut j, mut all) = (0.0f64, 0.0f64, true);
    for r in results {
        let (a, b, p) = r?;
        adj = adj.max(a);
        j = j.max(b);
        all &= p;
    }
    Ok(SuiteReport::new(
        Suite::JSymmetry,
        vec![Check::at_most("adjoint_defect", adj, 1e-11), Check::at_most("j_defect", j, 1e-11), Check::flag("all_passed", all)],
        json!({ "grid": grid, "potentials": s.j_symmetry_potentials }),
    ))
}

fn weyl_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let l = 64.0;
    let grid = Grid::new(2, 256, l)?;
    let z = s.params.mu() * (2.0 * PI * 8.0 / l).powi(2);
    let rep = weyl_residual(z, 8, WaveMode::S, 3.5, &s.params, &grid)?;
    let first_ratio = rep.ratios.first().copied().unwrap_or(f64::NAN);
    let norm_gap = rep.entries.iter().map(|e| (e.norm - 1.0).abs()).fold(0.0, f64::max);
    Ok(SuiteReport::new(
        Suite::Weyl,
        vec![
            Check::flag("residuals_decrease", rep.monotone),
            Check::at_most("first_ratio", first_ratio, 0.75),
            Check::at_least("total_decay", rep.total_decay, 8.0),
            Check::at_most("normalization", norm_gap, 1e-10),
        ],
        serde_json::to_value(&rep).expect("serializable"),
    ))
}
