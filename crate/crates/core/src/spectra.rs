//! The discretized Hamiltonian `H = -Δ* + V`, its dense spectrum, containment
//! of eigenvalues in enclosure disks, plane-wave eigenfunctions, Weyl-sequence
//! residuals and adjoint-symmetry checks.
//!
//! Dense matrices act on interleaved vectors: entry `point·d + component`.

use std::fmt::Write as _;

use faer::{c64, Mat};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enclosure::EnclosureDisk;
use crate::error::{Error, Result};
use crate::field::{MatrixPotentialField, ScalarField, VectorField};
use crate::grid::{dot, Grid, Point};
use crate::lame::{lame_apply, lame_symbol, LameParams};

pub const DEFAULT_DENSE_CAP: usize = 6000;

/// `H u = L(ξ)û` in Fourier space plus `V(x)u(x)` pointwise.
#[derive(Clone, Debug)]
pub struct DiscreteHamiltonian {
    grid: Grid,
    params: LameParams,
    potential: MatrixPotentialField,
    dense: Option<Mat<c64>>,
    dense_cap: usize,
}

impl DiscreteHamiltonian {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &LameParams {
        &self.params
    }

    pub fn potential(&self) -> &MatrixPotentialField {
        &self.potential
    }

    pub fn dimension(&self) -> usize {
        self.grid.len() * self.grid.dim()
    }

    pub fn apply(&self, u: &VectorField) -> VectorField {
        lame_apply(u, &self.params).add(&self.potential.apply(u))
    }

    pub fn dense(&self) -> Option<&Mat<c64>> {
        self.dense.as_ref()
    }
}

fn check_cap(grid: &Grid, cap: usize) -> Result<()> {
    let size = grid.len() * grid.dim();
    if size > cap {
        return Err(Error::Size { size, cap });
    }
    Ok(())
}

/// Dense matrix of a linear map on interleaved vectors, built column by column
/// from its action on unit vectors.
fn dense_from_action(grid: &Grid, action: impl Fn(&VectorField) -> VectorField + Sync) -> Mat<c64> {
    let size = grid.len() * grid.dim();
    let columns: Vec<Vec<Complex64>> = (0..size)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); size];
            e[k] = Complex64::new(1.0, 0.0);
            let u = VectorField::from_interleaved(*grid, &e).expect("length matches grid");
            action(&u).to_interleaved()
        })
        .collect();
    Mat::from_fn(size, size, |i, j| columns[j][i])
}

pub fn assemble_hamiltonian(v: &MatrixPotentialField, params: &LameParams, dense: bool) -> Result<DiscreteHamiltonian> {
    assemble_hamiltonian_with_cap(v, params, dense, DEFAULT_DENSE_CAP)
}

pub fn assemble_hamiltonian_with_cap(v: &MatrixPotentialField, params: &LameParams, dense: bool, cap: usize) -> Result<DiscreteHamiltonian> {
    let grid = *v.grid();
    let mut h = DiscreteHamiltonian { grid, params: *params, potential: v.clone(), dense: None, dense_cap: cap };
    if dense {
        check_cap(&grid, cap)?;
        h.dense = Some(dense_from_action(&grid, |u| h.apply(u)));
    }
    Ok(h)
}

/// Dense realization from an explicit position-space kernel:
/// `H[(x,i),(y,j)] = N⁻¹ Σ_ξ e^{iξ·(x-y)} S_ij(ξ) + δ_xy W_ij(x)`.
///
/// Independent of the FFT path; used as an oracle.
pub fn dense_from_kernel(grid: &Grid, symbol: impl Fn(&Point) -> Vec<Complex64>, w: &MatrixPotentialField) -> Mat<c64> {
    let d = grid.dim();
    let npts = grid.len();
    let symbols: Vec<(Point, Vec<Complex64>)> = (0..npts)
        .map(|k| {
            let xi = grid.frequency(k);
            (xi, symbol(&xi))
        })
        .collect();
    // kernel depends on the displacement x - y only
    let origin = [0.0; 3];
    let kernel: Vec<Vec<Complex64>> = (0..npts)
        .into_par_iter()
        .map(|delta| {
            let pos = grid.position(delta);
            let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
            for (xi, s) in &symbols {
                let phase = Complex64::from_polar(1.0, dot(xi, &pos) - dot(xi, &origin));
                for (a, b) in acc.iter_mut().zip(s) {
                    *a += phase * b;
                }
            }
            acc.iter().map(|z| z / npts as f64).collect()
        })
        .collect();
    let n = grid.n();
    Mat::from_fn(npts * d, npts * d, |row, col| {
        let (x, i) = (row / d, row % d);
        let (y, j) = (col / d, col % d);
        let (ix, iy) = (grid.multi_index(x), grid.multi_index(y));
        let mut delta = [0usize; 3];
        for axis in 0..d {
            delta[axis] = (ix[axis] + n - iy[axis]) % n;
        }
        let mut value = kernel[grid.flat_index(&delta[..d])][i * d + j];
        if x == y {
            value += w.at(x)[i * d + j];
        }
        value
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Within the tube around `[0, ∞)` that discretizes the continuous spectrum.
    Essential,
    /// Inside the inflated enclosure disk.
    Contained,
    /// Outside the tube and not admitted by the enclosure.
    Violation,
}

impl Verdict {
    fn name(&self) -> &'static str {
        match self {
            Verdict::Essential => "essential",
            Verdict::Contained => "contained",
            Verdict::Violation => "violation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub re: f64,
    pub im: f64,
    /// `‖Hu - zu‖/‖u‖`
    pub residual: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSettings {
    pub grid: Grid,
    pub params: LameParams,
    pub dense_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub essential_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<EigenRecord>,
    /// Frobenius norm of the dense matrix.
    pub matrix_norm: f64,
    pub max_residual: f64,
    /// Reported pairs satisfy `residual <= residual_tolerance`.
    pub residual_tolerance: f64,
    pub disk: Option<EnclosureDisk>,
    pub essential_count: usize,
    pub contained_count: usize,
    pub violation_count: usize,
    pub settings: SpectrumSettings,
}

impl SpectrumReport {
    pub fn values(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|e| Complex64::new(e.re, e.im)).collect()
    }

    /// `re,im,residual,verdict` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,residual,verdict\n");
        for e in &self.eigenvalues {
            let verdict = e.verdict.map(|v| v.name()).unwrap_or("");
            let _ = writeln!(out, "{:.17e},{:.17e},{:.6e},{verdict}", e.re, e.im, e.residual);
        }
        out
    }
}

/// Relative residual bound on every reported eigenpair.
pub const RESIDUAL_FACTOR: f64 = 1e-8;

/// Eigenvalues of a dense matrix with residuals `‖Mu - zu‖/‖u‖`, sorted by
/// real part then imaginary part. Returns the records and `‖M‖_F`.
pub fn dense_spectrum(m: &Mat<c64>) -> Result<(Vec<EigenRecord>, f64)> {
    let size = m.nrows();
    if m.ncols() != size {
        return Err(Error::Shape(format!("matrix is {}x{}, expected square", size, m.ncols())));
    }
    let norm = m.norm_l2();
    faer::set_global_parallelism(faer::Par::Seq);
    let evd = m.eigen().map_err(|e| Error::Solver(format!("spectra::eigenvalues: dense eigensolver failed on a {size}x{size} matrix: {e:?}")))?;
    let vals: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    let u = evd.U();
    let hu = m * u;
    let mut records: Vec<EigenRecord> = (0..size)
        .into_par_iter()
        .map(|k| {
            let z = vals[k];
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..size {
                num += (hu[(i, k)] - z * u[(i, k)]).norm_sqr();
                den += u[(i, k)].norm_sqr();
            }
            EigenRecord { re: z.re, im: z.im, residual: (num / den).sqrt(), verdict: None }
        })
        .collect();
    records.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok((records, norm))
}

/// Full spectrum of the dense realization with per-pair residual verification.
pub fn eigenvalues(h: &DiscreteHamiltonian) -> Result<SpectrumReport> {
    let m = h.dense().ok_or_else(|| Error::Input("spectra::eigenvalues needs the dense realization; assemble with dense = true".into()))?;
    let (records, norm) = dense_spectrum(m)?;
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let tolerance = RESIDUAL_FACTOR * norm.max(f64::MIN_POSITIVE);
    if max_residual > tolerance {
        return Err(Error::Solver(format!(
            "spectra::eigenvalues: eigenpair residual {max_residual:e} exceeds {tolerance:e} ({RESIDUAL_FACTOR:e}·‖H‖)"
        )));
    }
    Ok(SpectrumReport {
        eigenvalues: records,
        matrix_norm: norm,
        max_residual,
        residual_tolerance: tolerance,
        disk: None,
        essential_count: 0,
        contained_count: 0,
        violation_count: 0,
        settings: SpectrumSettings { grid: h.grid, params: h.params, dense_cap: h.dense_cap, essential_margin: None, inflation: None },
    })
}

/// `10·max_x |V(x)|₂ / n`
pub fn default_essential_margin(v: &MatrixPotentialField) -> f64 {
    let grid = v.grid();
    let sup = (0..grid.len()).map(|i| crate::linalg::spectral_norm(&v.matrix_at(i))).fold(0.0, f64::max);
    10.0 * sup / grid.n() as f64
}

pub const DEFAULT_INFLATION: f64 = 0.1;

/// Classifies every eigenvalue: inside the tube `|Im z| <= margin, Re z >= -margin`
/// it is essential-like; otherwise it must lie in the disk inflated by
/// `1 + inflation` (γ > 0) and counts as a violation when the absence
/// condition holds (γ = 0).
pub fn containment_check(report: &SpectrumReport, disk: &EnclosureDisk, essential_margin: f64, inflation: f64) -> Result<SpectrumReport> {
    if disk.d != report.settings.grid.dim() {
        return Err(Error::Input(format!("disk is for d = {}, spectrum for d = {}", disk.d, report.settings.grid.dim())));
    }
    if disk.params != report.settings.params {
        return Err(Error::Input("disk and spectrum use different Lamé parameters".into()));
    }
    if !(essential_margin >= 0.0 && inflation >= 0.0) {
        return Err(Error::Parameter("margin and inflation must be nonnegative".into()));
    }
    let mut out = report.clone();
    let (mut ess, mut inside, mut bad) = (0, 0, 0);
    for e in &mut out.eigenvalues {
        let verdict = if e.im.abs() <= essential_margin && e.re >= -essential_margin {
            Verdict::Essential
        } else if disk.admits(Complex64::new(e.re, e.im), inflation) {
            Verdict::Contained
        } else {
            Verdict::Violation
        };
        match verdict {
            Verdict::Essential => ess += 1,
            Verdict::Contained => inside += 1,
            Verdict::Violation => bad += 1,
        }
        e.verdict = Some(verdict);
    }
    out.disk = Some(disk.clone());
    out.essential_count = ess;
    out.contained_count = inside;
    out.violation_count = bad;
    out.settings.essential_margin = Some(essential_margin);
    out.settings.inflation = Some(inflation);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveMode {
    /// Transversal: polarization orthogonal to the propagation axis.
    S,
    /// Longitudinal: polarization along the propagation axis.
    P,
}

impl WaveMode {
    pub fn modulus(&self, params: &LameParams) -> f64 {
        match self {
            WaveMode::S => params.mu(),
            WaveMode::P => params.p_modulus(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneWave {
    pub field: VectorField,
    /// Lattice index `m` with `κ = 2πm/L`.
    pub lattice_index: usize,
    pub kappa: f64,
    pub polarization_axis: usize,
    /// `‖-Δ*u - zu‖/‖u‖`
    pub residual: f64,
}

const LATTICE_TOLERANCE: f64 = 1e-9;

/// Energies `M(2πm/L)²`, `m = 1, …, count`, of plane waves of the given mode.
pub fn admissible_energies(mode: WaveMode, params: &LameParams, grid: &Grid, count: usize) -> Vec<f64> {
    let k0 = 2.0 * std::f64::consts::PI / grid.length();
    (1..=count.min(grid.n() / 2 - 1)).map(|m| mode.modulus(params) * (m as f64 * k0).powi(2)).collect()
}

/// `u(x) = e^{iκ x_axis} e_pol` solving `-Δ*u = zu` on the grid.
///
/// `κ = √(z/μ)` for S waves and `√(z/(λ+2μ))` for P waves must be a lattice
/// frequency `2πm/L` with `1 <= m < n/2`. S waves are polarized along
/// `polarization` (default: the next axis).
pub fn plane_wave(
    z: f64,
    mode: WaveMode,
    axis: usize,
    polarization: Option<usize>,
    params: &LameParams,
    grid: &Grid,
) -> Result<PlaneWave> {
    let d = grid.dim();
    if axis >= d {
        return Err(Error::Parameter(format!("axis {axis} out of range for d = {d}")));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Parameter(format!("plane waves need a positive energy, got {z}")));
    }
    let pol = match mode {
        WaveMode::P => axis,
        WaveMode::S => {
            if d < 2 {
                return Err(Error::Unsupported("transversal waves need d >= 2".into()));
            }
            let p = polarization.unwrap_or((axis + 1) % d);
            if p >= d || p == axis {
                return Err(Error::Parameter(format!("S-wave polarization axis {p} must differ from the propagation axis {axis}")));
            }
            p
        }
    };
    let k0 = 2.0 * std::f64::consts::PI / grid.length();
    let modulus = mode.modulus(params);
    let kappa = (z / modulus).sqrt();
    let m_real = kappa / k0;
    let m = m_real.round();
    let max_m = (grid.n() / 2 - 1) as f64;
    if (m_real - m).abs() > LATTICE_TOLERANCE * m_real.max(1.0) || m < 1.0 || m > max_m {
        let lower = m_real.floor().clamp(1.0, max_m);
        let upper = m_real.ceil().clamp(1.0, max_m);
        let mut nearest = vec![modulus * (lower * k0).powi(2)];
        if upper != lower {
            nearest.push(modulus * (upper * k0).powi(2));
        }
        return Err(Error::Quantization { nearest });
    }
    let kappa = m * k0;
    let field = VectorField::from_fn(*grid, |x| {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        v[pol] = Complex64::from_polar(1.0, kappa * x[axis]);
        v
    });
    let residual = lame_apply(&field, params).sub(&field.scale(Complex64::new(z, 0.0))).l2_norm() / field.l2_norm();
    Ok(PlaneWave { field, lattice_index: m as usize, kappa, polarization_axis: pol, residual })
}

/// `exp(1 - 1/(1 - (r/R)²))` for `r < R`, zero outside; equals 1 at the centre.
pub fn smooth_bump(r: f64, radius: f64) -> f64 {
    let t = r / radius;
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylEntry {
    pub scale: usize,
    /// `‖(-Δ* - z)φ_n‖/‖φ_n‖`
    pub residual: f64,
    /// `‖φ_n‖`
    pub norm: f64,
    /// `|n^{-d/2}‖φ₁(·/n)u‖/‖φ₁u‖ - 1|`: deviation of the continuum scaling law on the grid.
    pub scaling_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub z: f64,
    pub mode: WaveMode,
    pub bump_radius: f64,
    pub entries: Vec<WeylEntry>,
    /// `residual(n)/residual(n/2)` for consecutive scales.
    pub ratios: Vec<f64>,
    /// `residual(1)/residual(n_max)`
    pub total_decay: f64,
    pub monotone: bool,
}

/// Residuals of the singular sequence `φ_n(x) = n^{-d/2} φ₁((x-c)/n) u(x)`, `n = 1, 2, 4, …, n_scale`,
/// where `u` is the plane wave at `z` along axis 0 and `φ₁` a smooth bump of
/// radius `bump_radius`. Each `φ_n` is normalized by its discrete norm; the
/// departure of `n^{-d/2}` from that normalization is reported per scale.
pub fn weyl_residual(z: f64, n_scale: usize, mode: WaveMode, bump_radius: f64, params: &LameParams, grid: &Grid) -> Result<WeylReport> {
    if n_scale < 1 {
        return Err(Error::Parameter("n_scale must be at least 1".into()));
    }
    if !(bump_radius > 0.0) {
        return Err(Error::Parameter(format!("bump radius must be positive, got {bump_radius}")));
    }
    if n_scale as f64 * bump_radius >= grid.length() / 2.0 {
        return Err(Error::Geometry(format!(
            "bump of radius {} at scale {n_scale} does not fit in a torus of side {}",
            bump_radius,
            grid.length()
        )));
    }
    let wave = plane_wave(z, mode, 0, None, params, grid)?;
    let center = grid.center();
    let d = grid.dim() as f64;
    let base = ScalarField::from_fn(*grid, |x| Complex64::new(smooth_bump(grid.torus_distance(x, &center), bump_radius), 0.0));
    let base_norm = wave_product(&wave.field, &base).l2_norm();

    let mut entries = Vec::new();
    let mut scale = 1usize;
    while scale <= n_scale {
        let s = scale as f64;
        let r = bump_radius * s;
        let bump = ScalarField::from_fn(*grid, |x| Complex64::new(smooth_bump(grid.torus_distance(x, &center), r), 0.0));
        let raw = wave_product(&wave.field, &bump);
        let raw_norm = raw.l2_norm();
        let scaling_defect = (s.powf(-d / 2.0) * raw_norm / base_norm - 1.0).abs();
        let phi = raw.scale(Complex64::new(1.0 / raw_norm, 0.0));
        let res = lame_apply(&phi, params).sub(&phi.scale(Complex64::new(z, 0.0)));
        let norm = phi.l2_norm();
        entries.push(WeylEntry { scale, residual: res.l2_norm() / norm, norm, scaling_defect });
        scale *= 2;
    }
    let ratios: Vec<f64> = entries.windows(2).map(|w| w[1].residual / w[0].residual).collect();
    let monotone = ratios.iter().all(|&q| q < 1.0);
    let total_decay = entries[0].residual / entries.last().expect("at least one scale").residual;
    Ok(WeylReport { z, mode, bump_radius, entries, ratios, total_decay, monotone })
}

fn wave_product(u: &VectorField, f: &ScalarField) -> VectorField {
    let comps = u
        .components()
        .iter()
        .map(|c| ScalarField::from_parts(*u.grid(), c.samples().iter().zip(f.samples()).map(|(a, b)| a * b).collect()))
        .collect();
    VectorField::from_parts(*u.grid(), comps)
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max |H(V)* - H(V̄ᵗ)|`
    pub adjoint_defect: f64,
    /// `max |J H(V) J - H(V)*|` with `J` acting on the symbol and the potential
    /// by conjugate transposition, assembled from the explicit kernel.
    pub j_defect: f64,
    /// `max |conj(H(V)) - H(V̄)|` (diagnostic: plain conjugation of the
    /// discrete matrix, which differs at the Nyquist frequency).
    pub conjugation_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

fn adjoint(a: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn adjoint_symmetry_check(v: &MatrixPotentialField, params: &LameParams) -> Result<SymmetryReport> {
    adjoint_symmetry_check_with_cap(v, params, DEFAULT_DENSE_CAP)
}

pub fn adjoint_symmetry_check_with_cap(v: &MatrixPotentialField, params: &LameParams, cap: usize) -> Result<SymmetryReport> {
    let grid = *v.grid();
    check_cap(&grid, cap)?;
    let d = grid.dim();
    let h = assemble_hamiltonian_with_cap(v, params, true, cap)?;
    let h = h.dense().expect("dense requested");
    let h_star = adjoint(h);
    let h_adj_potential = assemble_hamiltonian_with_cap(&v.adjoint(), params, true, cap)?;
    let adjoint_defect = max_abs_diff(&h_star, h_adj_potential.dense().expect("dense requested"));

    // J(A u) = Ā^t ū, applied to each constituent of H
    let j_potential = v.map_matrices(|m| m.map(|z| z.conj()).transpose());
    let j_symbol = |xi: &Point| -> Vec<Complex64> {
        let l = lame_symbol(&xi[..d], params);
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(Complex64::new(l[(j, i)], 0.0).conj());
            }
        }
        out
    };
    let jhj = dense_from_kernel(&grid, j_symbol, &j_potential);
    let j_defect = max_abs_diff(&jhj, &h_star);

    let conj_h = Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)].conj());
    let h_conj_potential = assemble_hamiltonian_with_cap(&v.map_matrices(|m| m.map(|z| z.conj())), params, true, cap)?;
    let conjugation_defect = max_abs_diff(&conj_h, h_conj_potential.dense().expect("dense requested"));

    let scale = h.norm_max().max(1.0);
    let tolerance = SYMMETRY_TOLERANCE * scale;
    Ok(SymmetryReport {
        adjoint_defect,
        j_defect,
        conjugation_defect,
        tolerance,
        passed: adjoint_defect <= tolerance && j_defect <= tolerance,
    })
}

/// Free spectrum on the grid: `μ|ξ|²` with multiplicity `d-1` and `(λ+2μ)|ξ|²`
/// once per frequency, sorted ascending.
pub fn free_spectrum(grid: &Grid, params: &LameParams) -> Vec<f64> {
    let d = grid.dim();
    let mut out = Vec::with_capacity(grid.len() * d);
    for i in 0..grid.len() {
        let xi = grid.frequency(i);
        let k2 = dot(&xi, &xi);
        for _ in 0..d - 1 {
            out.push(params.mu() * k2);
        }
        out.push(params.p_modulus() * k2);
    }
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_potential, PotentialSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_vector(grid: Grid, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Complex64> = (0..grid.len() * grid.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        VectorField::from_interleaved(grid, &data).unwrap()
    }

    #[test]
    fn free_spectrum_exact() {
        let g = Grid::new(2, 4, 2.0 * PI).unwrap();
        let params = LameParams::new(1.0, 1.0).unwrap();
        let h = assemble_hamiltonian(&MatrixPotentialField::zeros(g), &params, true).unwrap();
        let rep = eigenvalues(&h).unwrap();
        let mut got: Vec<f64> = rep.eigenvalues.iter().map(|e| e.re).collect();
        got.sort_by(f64::total_cmp);
        let expect = free_spectrum(&g, &params);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(rep.eigenvalues.iter().all(|e| e.im.abs() < 1e-9));
        assert!(rep.max_residual <= 1e-9 * rep.matrix_norm.max(1.0));
    }

    #[test]
    fn dense_matches_action() {
        let g = Grid::new(2, 4, 1.3).unwrap();
        let params = LameParams::new(-0.5, 1.0).unwrap();
        let v = sample_potential(&PotentialSpec::MatrixDenseRandom { amplitude: 0.4, seed: 3, width: None, center: None }, &g).unwrap();
        let h = assemble_hamiltonian(&v, &params, true).unwrap();
        let u = random_vector(g, 9);
        let direct = h.apply(&u).to_interleaved();
        let m = h.dense().unwrap();
        let x = u.to_interleaved();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..m.nrows() {
            let yi: Complex64 = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
            err += (yi - direct[i]).norm_sqr();
            scale += direct[i].norm_sqr();
        }
        assert!(err.sqrt() <= 1e-11 * scale.sqrt());
    }

    #[test]
    fn hermitian_potential_gives_hermitian_matrix() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x| Complex64::new(x[0].sin() + 0.5, 0.0));
        let h = assemble_hamiltonian(&MatrixPotentialField::scalar(&f), &LameParams::default(), true).unwrap();
        let m = h.dense().unwrap();
        assert!(max_abs_diff(m, &adjoint(m)) <= 1e-12 * m.norm_max());
    }

    #[test]
    fn cap_is_enforced() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        let r = assemble_hamiltonian_with_cap(&MatrixPotentialField::zeros(g), &LameParams::default(), true, 1000);
        assert!(matches!(r, Err(Error::Size { size: 1536, cap: 1000 })));
    }

    #[test]
    fn plane_wave_lattice_and_quantization() {
        let l = 2.0;
        let g = Grid::new(3, 8, l).unwrap();
        let params = LameParams::new(0.5, 1.0).unwrap();
        let z = params.mu() * (2.0 * PI / l).powi(2);
        let w = plane_wave(z, WaveMode::S, 1, Some(0), &params, &g).unwrap();
        assert!(w.residual <= 1e-12);
        assert_eq!(w.lattice_index, 1);
        match plane_wave(1.3 * z, WaveMode::S, 1, None, &params, &g) {
            Err(Error::Quantization { nearest }) => assert!((nearest[0] - z).abs() < 1e-12 * z),
            other => panic!("expected quantization error, got {other:?}"),
        }
        assert!(plane_wave(z, WaveMode::S, 1, Some(1), &params, &g).is_err());
    }

    #[test]
    fn weyl_geometry_error() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let params = LameParams::default();
        let z = (2.0 * PI / 4.0f64).powi(2);
        assert!(matches!(weyl_residual(z, 8, WaveMode::S, 1.0, &params, &g), Err(Error::Geometry(_))));
    }

    #[test]
    fn containment_of_free_operator() {
        use crate::enclosure::{enclosure_disk, BoundKind, EnclosureSpec};
        let g = Grid::new(2, 4, 2.0).unwrap();
        let params = LameParams::default();
        let h = assemble_hamiltonian(&MatrixPotentialField::zeros(g), &params, true).unwrap();
        let rep = eigenvalues(&h).unwrap();
        let disk = enclosure_disk(&EnclosureSpec::new(BoundKind::Lebesgue, 0.5, 2, params), 0.0).unwrap();
        let checked = containment_check(&rep, &disk, 1e-9, DEFAULT_INFLATION).unwrap();
        assert_eq!(checked.violation_count, 0);
        assert_eq!(checked.essential_count, 2 * 16);
        let other = enclosure_disk(&EnclosureSpec::new(BoundKind::Lebesgue, 0.5, 3, params), 0.0).unwrap();
        assert!(matches!(containment_check(&rep, &other, 0.0, 0.1), Err(Error::Input(_))));
        let csv = checked.to_csv();
        assert!(csv.starts_with("re,im,residual,verdict\n"));
        assert_eq!(csv.lines().count(), 33);
    }

    #[test]
    fn adjoint_identities_hold_for_random_potential() {
        let g = Grid::new(2, 4, 1.7).unwrap();
        let params = LameParams::new(0.3, 0.8).unwrap();
        let v = sample_potential(&PotentialSpec::MatrixDenseRandom { amplitude: 1.0, seed: 11, width: None, center: None }, &g).unwrap();
        let rep = adjoint_symmetry_check(&v, &params).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn weyl_residuals_decay() {
        let l = 32.0;
        let g = Grid::new(2, 128, l).unwrap();
        let params = LameParams::new(1.0, 1.0).unwrap();
        let z = params.mu() * (2.0 * PI * 4.0 / l).powi(2);
        let rep = weyl_residual(z, 4, WaveMode::S, 3.5, &params, &g).unwrap();
        assert!(rep.monotone, "{rep:?}");
        for e in &rep.entries {
            assert!((e.norm - 1.0).abs() < 1e-3, "{e:?}");
        }
        // residual ~ 1/n asymptotically; lower-order terms only speed up the decay
        assert!(rep.ratios.iter().all(|&q| q < 0.6), "{:?}", rep.ratios);
        assert!(rep.total_decay > 4.0);
    }

    #[test]
    fn two_by_two_block() {
        let m = Mat::from_fn(2, 2, |i, j| c64::new([[2.0, 1.0], [1.0, 2.0]][i][j], 0.0));
        let (recs, _) = dense_spectrum(&m).unwrap();
        assert!((recs[0].re - 1.0).abs() < 1e-12 && (recs[1].re - 3.0).abs() < 1e-12);
        assert!(recs.iter().all(|r| r.im.abs() < 1e-12 && r.residual < 1e-12));
    }

    #[test]
    fn real_scalar_potential_spectrum_is_real_and_bounded_below() {
        let g = Grid::new(2, 4, 3.0).unwrap();
        let f = ScalarField::from_fn(g, |x| Complex64::new(0.7 * (x[0] * 2.0 * PI / 3.0).cos() - 0.2, 0.0));
        let min_v = f.real_parts().into_iter().fold(f64::INFINITY, f64::min);
        let h = assemble_hamiltonian(&MatrixPotentialField::scalar(&f), &LameParams::new(0.5, 1.2).unwrap(), true).unwrap();
        let rep = eigenvalues(&h).unwrap();
        for e in &rep.eigenvalues {
            assert!(e.im.abs() <= 1e-9);
            assert!(e.re >= min_v - 1e-9);
        }
    }

    #[test]
    fn weyl_norms_are_one() {
        let l = 32.0;
        let g = Grid::new(2, 128, l).unwrap();
        let params = LameParams::default();
        let z = (2.0 * PI * 4.0 / l).powi(2);
        let rep = weyl_residual(z, 4, WaveMode::S, 3.5, &params, &g).unwrap();
        for e in &rep.entries {
            assert!((e.norm - 1.0).abs() < 1e-10, "{e:?}");
        }
    }
}
