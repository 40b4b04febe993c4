//! C ABI for `lame-spectra`.
//!
//! Objects are opaque handles created by `ls_*_new`-style constructors and
//! released with the matching `ls_*_free`. Every fallible call returns an
//! [`LsStatus`]; on failure the message is kept per thread and can be read
//! with [`ls_last_error_message`]. Complex arrays are `LsComplex` values in
//! point-major order, matching the in-memory layout of the Rust fields.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lame_spectra::enclosure::{enclosure_disk, BoundKind, EnclosureDisk, EnclosureSpec};
use lame_spectra::lame::{bs_norm_estimate_with, free_resolvent_apply, BS_MAX_ITER};
use lame_spectra::norms::lp_norm;
use lame_spectra::potential::{sample_potential, PotentialSpec};
use lame_spectra::spectra::{assemble_hamiltonian_with_cap, eigenvalues, SpectrumReport};
use lame_spectra::verify::{run_suite, Suite, VerifySettings};
use lame_spectra::{io, Complex64, Error, Grid, LameParams, MatrixPotentialField, VectorField};

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// An iterative method or eigensolver failed.
    Numerical = 4,
    /// The problem exceeds the dense size cap.
    TooLarge = 5,
    /// The spectral parameter is too close to the free spectrum.
    NearSingular = 6,
    /// A buffer supplied by the caller is too short.
    BufferTooSmall = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<LsComplex> for Complex64 {
    fn from(z: LsComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for LsComplex {
    fn from(z: Complex64) -> Self {
        LsComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsBoundKind {
    Lebesgue = 0,
    MorreyCampanato = 1,
    KermanSawyer = 2,
}

/// Enclosure data. For `gamma > 0` `has_radius` is set; for `gamma = 0`
/// `absence_satisfied` is 0 or 1 and `absence_margin` is `1 - c N^{d/2}`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsDisk {
    pub constant: f64,
    /// 1 when the constant is proven for these parameters, 0 when configured.
    pub constant_proven: i32,
    pub has_radius: i32,
    pub radius: f64,
    /// -1 when not applicable.
    pub absence_satisfied: i32,
    pub absence_margin: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LsEigenvalue {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

/// Opaque periodic grid.
pub struct LsGrid(Grid);

/// Opaque matrix-valued potential.
pub struct LsPotential(MatrixPotentialField);

/// Opaque computed spectrum.
pub struct LsSpectrum(SpectrumReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> LsStatus {
    match err {
        Error::Io { .. } | Error::Format { .. } => LsStatus::Io,
        Error::Convergence { .. } | Error::Solver(_) => LsStatus::Numerical,
        Error::Size { .. } => LsStatus::TooLarge,
        Error::NearSingular { .. } => LsStatus::NearSingular,
        _ => LsStatus::InvalidArgument,
    }
}

fn fail(status: LsStatus, msg: impl Into<String>) -> LsStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), LsStatus>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(LsStatus::Internal, msg)
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LsStatus>;
}

impl<T> OrStatus<T> for lame_spectra::Result<T> {
    fn or_status(self) -> Result<T, LsStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, LsStatus> {
    p.as_ref().ok_or_else(|| fail(LsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LsStatus> {
    p.as_mut().ok_or_else(|| fail(LsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, LsStatus> {
    if p.is_null() {
        return Err(fail(LsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(LsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], LsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn params(lambda: f64, mu: f64) -> Result<LameParams, LsStatus> {
    LameParams::new(lambda, mu).or_status()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ls_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out_grid` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_grid_new(dim: usize, n: usize, length: f64, out_grid: *mut *mut LsGrid) -> LsStatus {
    guard(|| {
        let slot = out(out_grid, "out_grid")?;
        let g = Grid::new(dim, n, length).or_status()?;
        *slot = Box::into_raw(Box::new(LsGrid(g)));
        Ok(())
    })
}

/// Number of grid points, `n^dim`; 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_grid_len(grid: *const LsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `grid` must be null or a handle from [`ls_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_grid_free(grid: *mut LsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Samples a potential family described by JSON, e.g.
/// `{"family":"gaussian_scalar","amplitude":1,"width":1}`.
///
/// # Safety
/// `grid` must be a live handle, `json` a NUL-terminated string and
/// `out_potential` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_potential_from_json(grid: *const LsGrid, json: *const c_char, out_potential: *mut *mut LsPotential) -> LsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        let text = c_str(json, "json")?;
        let slot = out(out_potential, "out_potential")?;
        let spec: PotentialSpec =
            serde_json::from_str(text).map_err(|e| fail(LsStatus::InvalidArgument, format!("potential JSON: {e}")))?;
        let v = sample_potential(&spec, &g.0).or_status()?;
        *slot = Box::into_raw(Box::new(LsPotential(v)));
        Ok(())
    })
}

/// Builds a potential from `len = n^dim · dim²` entries, each point's matrix
/// stored row-major.
///
/// # Safety
/// `entries` must be valid for `len` reads and `out_potential` for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_potential_from_entries(
    grid: *const LsGrid,
    entries: *const LsComplex,
    len: usize,
    out_potential: *mut *mut LsPotential,
) -> LsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        let data = slice(entries, len, "entries")?;
        let slot = out(out_potential, "out_potential")?;
        let v = MatrixPotentialField::new(g.0, data.iter().map(|&z| z.into()).collect()).or_status()?;
        *slot = Box::into_raw(Box::new(LsPotential(v)));
        Ok(())
    })
}

/// Loads a matrix field from a binary field file.
///
/// # Safety
/// `path` must be NUL-terminated and `out_potential` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_potential_load(path: *const c_char, out_potential: *mut *mut LsPotential) -> LsStatus {
    guard(|| {
        let p = c_str(path, "path")?;
        let slot = out(out_potential, "out_potential")?;
        let v = io::load_matrix_field(p).or_status()?;
        *slot = Box::into_raw(Box::new(LsPotential(v)));
        Ok(())
    })
}

/// # Safety
/// `potential` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_potential_free(potential: *mut LsPotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

/// `‖ |V|₂ ‖_{L^p}` of the pointwise operator norm.
///
/// # Safety
/// `potential` must be a live handle and `out_norm` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_potential_lp_norm(potential: *const LsPotential, p: f64, out_norm: *mut f64) -> LsStatus {
    guard(|| {
        let v = deref(potential, "potential")?;
        let slot = out(out_norm, "out_norm")?;
        *slot = lp_norm(&v.0, p).or_status()?.value;
        Ok(())
    })
}

/// Power-iteration estimate of the Birman–Schwinger norm at `z`.
/// `max_iter = 0` selects the library default.
///
/// # Safety
/// `potential` must be a live handle; `out_estimate` valid for writes and
/// `out_iterations` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_bs_norm(
    potential: *const LsPotential,
    lambda: f64,
    mu: f64,
    z: LsComplex,
    tol: f64,
    max_iter: usize,
    out_estimate: *mut f64,
    out_iterations: *mut usize,
) -> LsStatus {
    guard(|| {
        let v = deref(potential, "potential")?;
        let slot = out(out_estimate, "out_estimate")?;
        let cap = if max_iter == 0 { BS_MAX_ITER } else { max_iter };
        let rep = bs_norm_estimate_with(z.into(), &v.0, &params(lambda, mu)?, tol, cap).or_status()?;
        *slot = rep.estimate;
        if let Some(it) = out_iterations.as_mut() {
            *it = rep.iterations;
        }
        Ok(())
    })
}

/// Enclosure disk or absence predicate for a norm value. `configured_constant`
/// is used whenever no proven constant exists for the parameters.
///
/// # Safety
/// `out_disk` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_enclosure_disk(
    kind: LsBoundKind,
    gamma: f64,
    d: usize,
    p: f64,
    lambda: f64,
    mu: f64,
    configured_constant: f64,
    norm_value: f64,
    out_disk: *mut LsDisk,
) -> LsStatus {
    guard(|| {
        let slot = out(out_disk, "out_disk")?;
        let kind = match kind {
            LsBoundKind::Lebesgue => BoundKind::Lebesgue,
            LsBoundKind::MorreyCampanato => BoundKind::MorreyCampanato,
            LsBoundKind::KermanSawyer => BoundKind::KermanSawyer,
        };
        let mut spec = EnclosureSpec::new(kind, gamma, d, params(lambda, mu)?);
        spec.configured_constant = configured_constant;
        if kind == BoundKind::MorreyCampanato {
            spec.p = Some(p);
        }
        spec.validate().or_status()?;
        let disk = enclosure_disk(&spec, norm_value).or_status()?;
        *slot = disk_to_c(&disk);
        Ok(())
    })
}

fn disk_to_c(disk: &EnclosureDisk) -> LsDisk {
    LsDisk {
        constant: disk.constant,
        constant_proven: i32::from(disk.constant_provenance == "explicit_d3"),
        has_radius: i32::from(disk.radius.is_some()),
        radius: disk.radius.unwrap_or(f64::NAN),
        absence_satisfied: disk.absence_satisfied.map_or(-1, i32::from),
        absence_margin: disk.absence_margin.unwrap_or(f64::NAN),
    }
}

/// Whether `z` is compatible with the disk inflated by `tol`: 1 or 0.
///
/// # Safety
/// `disk` must be null or point to a valid [`LsDisk`]; null yields 0.
#[no_mangle]
pub unsafe extern "C" fn ls_disk_admits(disk: *const LsDisk, z: LsComplex, tol: f64) -> i32 {
    let Some(d) = disk.as_ref() else { return 0 };
    let admitted = if d.has_radius != 0 {
        Complex64::from(z).norm() <= d.radius * (1.0 + tol)
    } else {
        d.absence_satisfied != 1
    };
    i32::from(admitted)
}

/// Applies the free resolvent `(-Δ* - z)^{-1}` to a vector field of
/// `n^dim · dim` interleaved values, writing the same number to `out_values`.
///
/// # Safety
/// `values` and `out_values` must be valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ls_free_resolvent_apply(
    grid: *const LsGrid,
    values: *const LsComplex,
    len: usize,
    z: LsComplex,
    lambda: f64,
    mu: f64,
    out_values: *mut LsComplex,
) -> LsStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        let data: Vec<Complex64> = slice(values, len, "values")?.iter().map(|&z| z.into()).collect();
        if out_values.is_null() {
            return Err(fail(LsStatus::NullPointer, "out_values is null"));
        }
        let u = VectorField::from_interleaved(g.0, &data).or_status()?;
        let r = free_resolvent_apply(&u, z.into(), &params(lambda, mu)?).or_status()?;
        for (i, z) in r.to_interleaved().into_iter().enumerate() {
            *out_values.add(i) = z.into();
        }
        Ok(())
    })
}

/// Dense eigenvalues of the discretized operator `-Δ* + V`. Fails with
/// [`LsStatus::TooLarge`] when `n^dim · dim` exceeds `dense_cap`
/// (0 selects the library default).
///
/// # Safety
/// `potential` must be a live handle and `out_spectrum` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_spectrum_compute(
    potential: *const LsPotential,
    lambda: f64,
    mu: f64,
    dense_cap: usize,
    out_spectrum: *mut *mut LsSpectrum,
) -> LsStatus {
    guard(|| {
        let v = deref(potential, "potential")?;
        let slot = out(out_spectrum, "out_spectrum")?;
        let cap = if dense_cap == 0 { lame_spectra::spectra::DEFAULT_DENSE_CAP } else { dense_cap };
        let h = assemble_hamiltonian_with_cap(&v.0, &params(lambda, mu)?, true, cap).or_status()?;
        let rep = eigenvalues(&h).or_status()?;
        *slot = Box::into_raw(Box::new(LsSpectrum(rep)));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_spectrum_len(spectrum: *const LsSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.eigenvalues.len())
}

/// Copies up to `capacity` eigenvalues, sorted by real then imaginary part.
/// Returns [`LsStatus::BufferTooSmall`] (after copying) if the spectrum is longer.
///
/// # Safety
/// `out_values` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn ls_spectrum_values(spectrum: *const LsSpectrum, out_values: *mut LsEigenvalue, capacity: usize) -> LsStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        if capacity > 0 && out_values.is_null() {
            return Err(fail(LsStatus::NullPointer, "out_values is null"));
        }
        for (i, e) in s.0.eigenvalues.iter().take(capacity).enumerate() {
            *out_values.add(i) = LsEigenvalue { re: e.re, im: e.im, residual: e.residual };
        }
        if s.0.eigenvalues.len() > capacity {
            return Err(fail(
                LsStatus::BufferTooSmall,
                format!("spectrum has {} values, buffer holds {capacity}", s.0.eigenvalues.len()),
            ));
        }
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ls_spectrum_free(spectrum: *mut LsSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Runs one verification suite by name with default settings and the given
/// seed; `out_passed` receives 1 or 0.
///
/// # Safety
/// `suite` must be NUL-terminated and `out_passed` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_verify_suite(suite: *const c_char, seed: u64, out_passed: *mut i32) -> LsStatus {
    guard(|| {
        let name = c_str(suite, "suite")?;
        let slot = out(out_passed, "out_passed")?;
        let suites = Suite::parse(name).or_status()?;
        let settings = VerifySettings { seed, ..VerifySettings::default() };
        let mut passed = true;
        for s in suites {
            passed &= run_suite(s, &settings).or_status()?.passed;
        }
        *slot = i32::from(passed);
        Ok(())
    })
}
