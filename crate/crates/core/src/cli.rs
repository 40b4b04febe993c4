//! Batch front end: run configuration, command execution, JSON reports and CSV
//! plot series. The `lame-spectra` binary is a thin argument parser over this.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::enclosure::{
    absence_threshold, bs_bound_value, composite_norm, enclosure_disk, stability_check_d3, AuxConstants, BoundKind, BoundNorms,
    ConstantMode, EnclosureDisk, EnclosureSpec, StabilityCondition, StabilityInputs,
};
use crate::error::Error;
use crate::field::{MatrixPotentialField, ScalarField, VectorField};
use crate::fft;
use crate::grid::Grid;
use crate::lame::{bs_norm_estimate_with, epsilon_sequence, LameParams, BS_MAX_ITER};
use crate::norms::{
    a_p_constant, hardy_constant_estimate, kerman_sawyer_norm, lp_norm, matrix_pointwise_norm, maximal_regularize, morrey_campanato_norm,
    NormKind, NormReport,
};
use crate::potential::{sample_potential, PotentialSpec};
use crate::spectra::{
    admissible_energies, assemble_hamiltonian_with_cap, containment_check, default_essential_margin, eigenvalues, plane_wave,
    weyl_residual, WaveMode, DEFAULT_DENSE_CAP, DEFAULT_INFLATION,
};
use crate::verify::{run_suites, Suite, VerifySettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Number of angles in disk-boundary plot series.
pub const DISK_BOUNDARY_SAMPLES: usize = 256;

pub const CACHE_ENV: &str = "LAME_SPECTRA_CACHE";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Norms,
    Enclose,
    Bsnorm,
    Spectrum,
    Verify,
    Planewave,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::Enclose => "enclose",
            Command::Bsnorm => "bsnorm",
            Command::Spectrum => "spectrum",
            Command::Verify => "verify",
            Command::Planewave => "planewave",
        }
    }
}

/// Bound selection and constants; turned into an [`EnclosureSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub kind: BoundKind,
    pub gamma: f64,
    /// Defaults to the grid dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_mode: Option<ConstantMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configured_constant: Option<f64>,
    #[serde(default)]
    pub aux: AuxConstants,
    /// Norm of V to use instead of computing it from a potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_value: Option<f64>,
}

impl BoundConfig {
    pub fn spec(&self, grid_dim: Option<usize>, params: LameParams) -> Result<EnclosureSpec, Failure> {
        let d = self.d.or(grid_dim).ok_or_else(|| Failure::usage("cli::bound", "bound.d is required when no grid is given"))?;
        let mut spec = EnclosureSpec::new(self.kind, self.gamma, d, params);
        spec.p = self.p;
        if let Some(m) = self.constant_mode {
            spec.constant_mode = m;
        }
        if let Some(c) = self.configured_constant {
            spec.configured_constant = c;
        }
        spec.aux = self.aux;
        spec.validate().map_err(|e| Failure::from_error("enclosure::validate", e))?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsConfig {
    pub kinds: Vec<NormKind>,
    /// Lebesgue / Morrey–Campanato integrability exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Maximal regularization exponent for Kerman–Sawyer / A_p weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    pub max_level: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Exponent of the Muckenhoupt constant.
    pub a_p: f64,
}

impl Default for NormsConfig {
    fn default() -> Self {
        NormsConfig { kinds: vec![NormKind::Lp], p: None, alpha: None, p1: None, max_level: 6, radii: None, a_p: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonConfig {
    /// Embedded spectral point `[re, im]`.
    pub zeta: [f64; 2],
    pub epsilon0: f64,
    pub halvings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BsConfig {
    /// Spectral parameters `[re, im]`.
    pub z: Vec<[f64; 2]>,
    pub tolerance: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonConfig>,
}

impl Default for BsConfig {
    fn default() -> Self {
        BsConfig { z: vec![[-1.0, 0.0]], tolerance: 1e-8, max_iter: BS_MAX_ITER, epsilon: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub dense_cap: usize,
    /// Defaults to `10‖V‖_∞/n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub essential_margin: Option<f64>,
    pub inflation: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { dense_cap: DEFAULT_DENSE_CAP, essential_margin: None, inflation: DEFAULT_INFLATION }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylConfig {
    pub n_scale: usize,
    pub bump_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneWaveConfig {
    /// Energy; when absent the admissible energies are listed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub mode: WaveMode,
    pub axis: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarization: Option<usize>,
    /// How many admissible energies to list.
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weyl: Option<WeylConfig>,
}

impl Default for PlaneWaveConfig {
    fn default() -> Self {
        PlaneWaveConfig { z: None, mode: WaveMode::S, axis: 0, polarization: None, count: 3, weyl: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub helmholtz_fields: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolvent_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_symmetry_potentials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub containment_grids: Option<Vec<Grid>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub containment_fraction: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suites: Suite::ALL.to_vec(),
            helmholtz_fields: None,
            symbol_samples: None,
            resolvent_samples: None,
            j_symmetry_potentials: None,
            containment_grids: None,
            containment_fraction: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory for the JSON report and CSV series; the report goes to stdout when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Record a wall-clock timestamp in the report metadata.
    pub timestamp: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub params: LameParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundConfig>,
    #[serde(default)]
    pub norms: NormsConfig,
    #[serde(default)]
    pub bsnorm: BsConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub planewave: PlaneWaveConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command: Some(command),
            grid: None,
            potential: None,
            params: LameParams::default(),
            bound: None,
            norms: NormsConfig::default(),
            bsnorm: BsConfig::default(),
            spectrum: SpectrumConfig::default(),
            planewave: PlaneWaveConfig::default(),
            verify: VerifyConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
            threads: None,
        }
    }
}

/// A failed run: exit code 2 (usage/configuration) or 3 (numerical).
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub exit_code: i32,
    /// `module::operation` that failed.
    pub operation: String,
    pub message: String,
}

impl Failure {
    pub fn usage(operation: &str, message: impl Into<String>) -> Self {
        Failure { exit_code: EXIT_USAGE, operation: operation.into(), message: message.into() }
    }

    pub fn from_error(operation: &str, e: Error) -> Self {
        let exit_code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Failure { exit_code, operation: operation.into(), message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.operation, self.message)
    }
}

impl std::error::Error for Failure {}

trait Context<T> {
    fn during(self, operation: &str) -> Result<T, Failure>;
}

impl<T> Context<T> for crate::Result<T> {
    fn during(self, operation: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::from_error(operation, e))
    }
}

/// Parses a JSON run configuration; errors carry the line and column.
pub fn parse_config(text: &str) -> Result<RunConfig, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::usage("cli::parse_config", format!("invalid configuration: {e}")))
}

pub fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage("cli::load_config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|f| Failure { message: format!("{} ({})", f.message, path.display()), ..f })
}

/// Result of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
    pub report_hash: String,
    /// Files written, report first.
    pub files: Vec<PathBuf>,
}

struct Run {
    results: Value,
    checks: Vec<Value>,
    messages: Vec<String>,
    csv: Vec<(String, String)>,
}

impl Run {
    fn new() -> Self {
        Run { results: Value::Null, checks: Vec::new(), messages: Vec::new(), csv: Vec::new() }
    }

    fn check(&mut self, name: &str, value: f64, limit: f64, passed: bool) {
        self.checks.push(json!({ "name": name, "value": value, "limit": limit, "passed": passed }));
    }
}

fn grid_of(cfg: &RunConfig) -> Result<Grid, Failure> {
    cfg.grid.ok_or_else(|| Failure::usage("cli::grid", "this command needs a grid (d, n, L)"))
}

fn potential_of(cfg: &RunConfig, grid: &Grid) -> Result<MatrixPotentialField, Failure> {
    let spec = cfg.potential.as_ref().ok_or_else(|| Failure::usage("cli::potential", "this command needs a potential"))?;
    sample_potential(spec, grid).during("field_core::sample_potential")
}

/// sha256 of the canonical JSON of `report` without `report_hash` and `metadata`.
pub fn report_hash(report: &Value) -> String {
    let mut body = report.clone();
    if let Value::Object(map) = &mut body {
        map.remove("report_hash");
        map.remove("metadata");
    }
    let bytes = serde_json::to_vec(&body).expect("JSON values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `theta,re,im` samples of the disk boundary.
pub fn disk_boundary_csv(radius: f64, samples: usize) -> String {
    let mut out = String::from("theta,re,im\n");
    for k in 0..samples {
        let theta = 2.0 * PI * k as f64 / samples as f64;
        out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", theta, radius * theta.cos(), radius * theta.sin()));
    }
    out
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let command = cfg.command.ok_or_else(|| Failure::usage("cli::execute", "no command given"))?;
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Failure::usage("cli::execute", "threads must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let mut run = Run::new();
    match command {
        Command::Norms => run_norms(cfg, &mut run)?,
        Command::Enclose => run_enclose(cfg, &mut run)?,
        Command::Bsnorm => run_bsnorm(cfg, &mut run)?,
        Command::Spectrum => run_spectrum(cfg, &mut run)?,
        Command::Verify => run_verify(cfg, &mut run)?,
        Command::Planewave => run_planewave(cfg, &mut run)?,
    }
    let passed = run.checks.iter().all(|c| c["passed"].as_bool().unwrap_or(false));
    let mut echo = cfg.clone();
    echo.output = OutputConfig::default();
    echo.threads = None;
    let mut report = Map::new();
    report.insert("tool".into(), json!("lame-spectra"));
    report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    report.insert("command".into(), json!(command.name()));
    report.insert("seed".into(), json!(cfg.seed));
    report.insert("config".into(), serde_json::to_value(&echo).expect("config serializes"));
    report.insert("results".into(), run.results);
    report.insert("checks".into(), Value::Array(run.checks));
    report.insert("messages".into(), json!(run.messages));
    report.insert("status".into(), json!(if passed { "passed" } else { "failed" }));
    let mut report = Value::Object(report);
    let hash = report_hash(&report);
    report["report_hash"] = json!(hash);
    if cfg.output.timestamp {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        report["metadata"] = json!({ "unix_time": secs });
    }

    let mut files = Vec::new();
    if let Some(dir) = &cfg.output.dir {
        let write = |name: &str, body: &[u8]| -> Result<PathBuf, Failure> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Failure::usage("cli::write_report", format!("cannot write {}: {e}", path.display())))?;
            Ok(path)
        };
        fs::create_dir_all(dir).map_err(|e| Failure::usage("cli::write_report", format!("cannot create {}: {e}", dir.display())))?;
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        files.push(write(&format!("{}.json", command.name()), text.as_bytes())?);
        for (name, body) in &run.csv {
            files.push(write(name, body.as_bytes())?);
        }
    } else if !run.csv.is_empty() {
        log::info!("no output directory; {} CSV series not written", run.csv.len());
    }
    write_plan_manifest();
    Ok(Outcome { exit_code: if passed { EXIT_OK } else { EXIT_VIOLATION }, report, report_hash: hash, files })
}

/// Records the FFT lengths planned during the run under `$LAME_SPECTRA_CACHE`.
fn write_plan_manifest() {
    let Some(dir) = std::env::var_os(CACHE_ENV) else { return };
    let dir = PathBuf::from(dir);
    let manifest = json!({ "fft_lengths": fft::planned_lengths() });
    let result = fs::create_dir_all(&dir)
        .and_then(|_| fs::write(dir.join("fft-plans.json"), serde_json::to_vec_pretty(&manifest).expect("manifest serializes")));
    if let Err(e) = result {
        log::warn!("cannot write plan manifest to {}: {e}", dir.display());
    }
}

fn norm_value(r: &NormReport) -> Value {
    serde_json::to_value(r).expect("norm report serializes")
}

fn pointwise_weight(v: &MatrixPotentialField, p1: Option<f64>) -> crate::Result<ScalarField> {
    let w = matrix_pointwise_norm(v, 2.0)?;
    match p1 {
        Some(p1) => maximal_regularize(&w, p1),
        None => Ok(w),
    }
}

fn run_norms(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let grid = grid_of(cfg)?;
    let v = potential_of(cfg, &grid)?;
    let n = &cfg.norms;
    let mut out = Vec::new();
    for kind in &n.kinds {
        let report = match kind {
            NormKind::Lp => lp_norm(&v, n.p.unwrap_or(1.5)).during("weighted_norms::lp_norm")?,
            NormKind::MorreyCampanato => {
                let alpha = n.alpha.ok_or_else(|| Failure::usage("weighted_norms::morrey_campanato_norm", "norms.alpha is required"))?;
                let radii = n.radii.clone().unwrap_or_else(|| grid.dyadic_radii());
                morrey_campanato_norm(&v, alpha, n.p.unwrap_or(1.0), &radii).during("weighted_norms::morrey_campanato_norm")?
            }
            NormKind::KermanSawyer => {
                let alpha = n.alpha.ok_or_else(|| Failure::usage("weighted_norms::kerman_sawyer_norm", "norms.alpha is required"))?;
                let w = pointwise_weight(&v, n.p1).during("weighted_norms::maximal_regularize")?;
                kerman_sawyer_norm(&w, alpha, n.max_level).during("weighted_norms::kerman_sawyer_norm")?
            }
            NormKind::AP => {
                let w = pointwise_weight(&v, n.p1).during("weighted_norms::maximal_regularize")?;
                a_p_constant(&w, n.a_p, n.max_level).during("weighted_norms::a_p_constant")?
            }
            NormKind::Hardy => {
                let r = hardy_constant_estimate(&v).during("weighted_norms::hardy_constant_estimate")?;
                if r.settings.get("converged") == Some(&json!(false)) {
                    run.messages.push("Hardy constant power iteration hit its iteration cap; value is a lower estimate".into());
                }
                r
            }
        };
        out.push(norm_value(&report));
    }
    run.results = json!({ "grid": grid, "norms": out });
    Ok(())
}

/// Norms of `V` entering the chosen bound.
fn bound_norms(spec: &EnclosureSpec, v: &MatrixPotentialField, cfg: &RunConfig) -> Result<BoundNorms, Failure> {
    let grid = *v.grid();
    let mut norms = BoundNorms::default();
    match spec.kind {
        BoundKind::Lebesgue => norms.lebesgue = Some(lp_norm(v, spec.exponent()).during("weighted_norms::lp_norm")?.value),
        BoundKind::MorreyCampanato => {
            let radii = cfg.norms.radii.clone().unwrap_or_else(|| grid.dyadic_radii());
            let alpha = spec.alpha().expect("Morrey–Campanato has alpha");
            let p = spec.p.expect("validated spec has p");
            norms.morrey_campanato =
                Some(morrey_campanato_norm(v, alpha, p, &radii).during("weighted_norms::morrey_campanato_norm")?.value);
        }
        BoundKind::KermanSawyer => {
            let w = pointwise_weight(v, cfg.norms.p1).during("weighted_norms::maximal_regularize")?;
            let beta = spec.beta().expect("Kerman–Sawyer has beta");
            let alpha = spec.alpha().expect("Kerman–Sawyer has alpha");
            let wb = w.map(|z| Complex64::new(z.re.powf(beta), 0.0));
            norms.q2 = Some(a_p_constant(&w, 2.0, cfg.norms.max_level).during("weighted_norms::a_p_constant")?.value);
            norms.kerman_sawyer = Some(kerman_sawyer_norm(&wb, alpha, cfg.norms.max_level).during("weighted_norms::kerman_sawyer_norm")?.value);
        }
    }
    Ok(norms)
}

fn bound_spec(cfg: &RunConfig) -> Result<Option<EnclosureSpec>, Failure> {
    cfg.bound.as_ref().map(|b| b.spec(cfg.grid.map(|g| g.dim()), cfg.params)).transpose()
}

/// Disk for the configured bound, from `bound.norm_value` or the potential.
fn disk_for(cfg: &RunConfig, spec: &EnclosureSpec) -> Result<(EnclosureDisk, BoundNorms), Failure> {
    let bound = cfg.bound.as_ref().expect("spec comes from bound");
    let (norm, norms) = match bound.norm_value {
        Some(n) => (n, BoundNorms::default()),
        None => {
            let grid = grid_of(cfg)?;
            if grid.dim() != spec.d {
                return Err(Failure::usage("enclosure::enclosure_disk", format!("bound is for d = {} but the grid has d = {}", spec.d, grid.dim())));
            }
            let v = potential_of(cfg, &grid)?;
            let norms = bound_norms(spec, &v, cfg)?;
            (composite_norm(spec, &norms).during("enclosure::composite_norm")?, norms)
        }
    };
    Ok((enclosure_disk(spec, norm).during("enclosure::enclosure_disk")?, norms))
}

fn run_enclose(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let spec = bound_spec(cfg)?.ok_or_else(|| Failure::usage("cli::enclose", "enclose needs a bound (kind, gamma)"))?;
    let (disk, norms) = disk_for(cfg, &spec)?;
    let mut results = json!({ "spec": spec, "disk": disk, "norms": norms });
    if spec.gamma == 0.0 {
        let threshold = absence_threshold(&spec).during("enclosure::absence_threshold")?;
        results["absence_threshold"] = json!(threshold);
        let satisfied = disk.absence_satisfied.unwrap_or(false);
        run.messages.push(if satisfied {
            format!("absence condition satisfied: norm {} < threshold {threshold}", disk.norm_value)
        } else {
            format!("absence condition NOT satisfied: norm {} >= threshold {threshold}", disk.norm_value)
        });
        if spec.d == 3 && spec.kind == BoundKind::Lebesgue {
            let inputs = StabilityInputs { lebesgue: Some(disk.norm_value), ..Default::default() };
            let s = stability_check_d3(StabilityCondition::Lp, &spec.params, &inputs).during("enclosure::stability_check_d3")?;
            results["stability"] = json!(s);
        }
    } else if let Some(r) = disk.radius {
        run.messages.push(format!("eigenvalues lie in |z| <= {r} ({})", disk.constant_provenance));
        run.csv.push(("disk_boundary.csv".into(), disk_boundary_csv(r, DISK_BOUNDARY_SAMPLES)));
    }
    run.results = results;
    Ok(())
}

fn seeded_field(grid: Grid, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Complex64> =
        (0..grid.len() * grid.dim()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    VectorField::from_interleaved(grid, &data).expect("length matches grid")
}

fn run_bsnorm(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let grid = grid_of(cfg)?;
    let v = potential_of(cfg, &grid)?;
    let b = &cfg.bsnorm;
    let spec = bound_spec(cfg)?;
    let norms = match &spec {
        Some(s) => Some(bound_norms(s, &v, cfg)?),
        None => None,
    };
    let mut rows = Vec::new();
    for z in &b.z {
        let z = Complex64::new(z[0], z[1]);
        let est = bs_norm_estimate_with(z, &v, &cfg.params, b.tolerance, b.max_iter).during("lame_operator::bs_norm_estimate")?;
        let mut row = json!(est);
        if let (Some(s), Some(n)) = (&spec, &norms) {
            let bound = bs_bound_value(z, s, n).during("enclosure::bs_bound_value")?;
            row["bound"] = json!(bound);
            run.check(&format!("bs_norm_le_bound_at_{}{:+}i", z.re, z.im), est.estimate, bound, est.estimate <= bound);
        }
        rows.push(row);
    }
    let mut results = json!({ "grid": grid, "estimates": rows });
    if let Some(norms) = norms {
        results["norms"] = json!(norms);
    }
    if let Some(e) = &b.epsilon {
        let phi = seeded_field(grid, cfg.seed);
        let zeta = Complex64::new(e.zeta[0], e.zeta[1]);
        let seq = epsilon_sequence(zeta, e.epsilon0, e.halvings, &v, &cfg.params, &phi).during("lame_operator::epsilon_sequence")?;
        let monotone = seq.windows(2).all(|w| w[1].difference < w[0].difference);
        run.check("epsilon_sequence_monotone", if monotone { 1.0 } else { 0.0 }, 1.0, monotone);
        let mut csv = String::from("epsilon,difference\n");
        for s in &seq {
            csv.push_str(&format!("{:.17e},{:.17e}\n", s.epsilon, s.difference));
        }
        run.csv.push(("epsilon_extrapolation.csv".into(), csv));
        results["epsilon_sequence"] = json!(seq);
    }
    run.results = results;
    Ok(())
}

fn run_spectrum(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let grid = grid_of(cfg)?;
    let v = potential_of(cfg, &grid)?;
    let h = assemble_hamiltonian_with_cap(&v, &cfg.params, true, cfg.spectrum.dense_cap).during("spectra::assemble_hamiltonian")?;
    let mut report = eigenvalues(&h).during("spectra::eigenvalues")?;
    run.check("max_residual", report.max_residual, report.residual_tolerance, report.max_residual <= report.residual_tolerance);
    if let Some(spec) = bound_spec(cfg)? {
        let (disk, _) = disk_for(cfg, &spec)?;
        let margin = cfg.spectrum.essential_margin.unwrap_or_else(|| default_essential_margin(&v));
        report = containment_check(&report, &disk, margin, cfg.spectrum.inflation).during("spectra::containment_check")?;
        run.check("containment_violations", report.violation_count as f64, 0.0, report.violation_count == 0);
        if let Some(r) = disk.inflated_radius(cfg.spectrum.inflation) {
            run.csv.push(("disk_boundary.csv".into(), disk_boundary_csv(r, DISK_BOUNDARY_SAMPLES)));
        }
    }
    run.csv.insert(0, ("eigenvalues.csv".into(), report.to_csv()));
    run.results = json!(report);
    Ok(())
}

fn run_planewave(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let grid = grid_of(cfg)?;
    let pw = &cfg.planewave;
    let energies = admissible_energies(pw.mode, &cfg.params, &grid, pw.count);
    let mut results = json!({ "grid": grid, "mode": pw.mode, "admissible_energies": energies });
    if let Some(z) = pw.z {
        let w = plane_wave(z, pw.mode, pw.axis, pw.polarization, &cfg.params, &grid).during("spectra::plane_wave")?;
        run.check("plane_wave_residual", w.residual, 1e-12, w.residual <= 1e-12);
        results["plane_wave"] = json!({
            "z": z, "axis": pw.axis, "polarization_axis": w.polarization_axis,
            "lattice_index": w.lattice_index, "kappa": w.kappa, "residual": w.residual,
        });
        if let Some(wc) = &pw.weyl {
            let rep = weyl_residual(z, wc.n_scale, pw.mode, wc.bump_radius, &cfg.params, &grid).during("spectra::weyl_residual")?;
            run.check("weyl_residuals_decrease", if rep.monotone { 1.0 } else { 0.0 }, 1.0, rep.monotone);
            results["weyl"] = json!(rep);
        }
    }
    run.results = results;
    Ok(())
}

fn run_verify(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let vc = &cfg.verify;
    let mut s = VerifySettings { params: cfg.params, seed: cfg.seed, ..Default::default() };
    if let Some(g) = cfg.grid {
        s.grid = g;
    }
    if let Some(x) = vc.helmholtz_fields {
        s.helmholtz_fields = x;
    }
    if let Some(x) = vc.symbol_samples {
        s.symbol_samples = x;
    }
    if let Some(x) = vc.resolvent_samples {
        s.resolvent_samples = x;
    }
    if let Some(x) = vc.j_symmetry_potentials {
        s.j_symmetry_potentials = x;
    }
    if let Some(x) = &vc.containment_grids {
        s.containment_grids = x.clone();
    }
    if let Some(x) = vc.containment_fraction {
        s.containment_fraction = x;
    }
    let mut suites = vc.suites.clone();
    suites.dedup();
    if suites.is_empty() {
        return Err(Failure::usage("cli::verify", "no suites selected"));
    }
    let mut out = Vec::new();
    for (suite, result) in run_suites(&suites, &s) {
        let r = result.map_err(|e| Failure::from_error(&format!("verify::{}", suite.name()), e))?;
        for c in &r.checks {
            run.check(&format!("{}/{}", suite.name(), c.name), c.value, c.limit, c.passed);
        }
        out.push(json!(r));
    }
    run.results = json!({ "suites": out });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_config_reports_location() {
        let f = parse_config("{\n  \"command\": \"norms\",\n  \"grid\": {\"d\": 2,, }\n}").unwrap_err();
        assert_eq!(f.exit_code, EXIT_USAGE);
        assert!(f.message.contains("line 3"), "{}", f.message);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse_config(r#"{"command": "norms", "gird": {"d": 2, "n": 8, "L": 1.0}}"#).is_err());
    }

    #[test]
    fn hash_ignores_metadata() {
        let a = json!({ "x": 1, "metadata": { "unix_time": 5 } });
        let b = json!({ "x": 1, "report_hash": "abc" });
        assert_eq!(report_hash(&a), report_hash(&b));
        assert_ne!(report_hash(&a), report_hash(&json!({ "x": 2 })));
    }

    #[test]
    fn free_spectrum_verify_is_deterministic() {
        let mut cfg = RunConfig::new(Command::Verify);
        cfg.grid = Some(Grid::new(2, 8, 2.0 * PI).unwrap());
        cfg.verify.suites = vec![Suite::FreeSpectrum];
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        assert_eq!(a.exit_code, EXIT_OK);
        assert_eq!(a.report_hash, b.report_hash);
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn enclose_reports_absence_failure_without_violation() {
        let mut cfg = RunConfig::new(Command::Enclose);
        cfg.bound = Some(BoundConfig {
            kind: BoundKind::Lebesgue,
            gamma: 0.0,
            d: Some(3),
            p: None,
            constant_mode: None,
            configured_constant: None,
            aux: AuxConstants::default(),
            norm_value: Some(1.0),
        });
        let out = execute(&cfg).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        let msg = out.report["messages"][0].as_str().unwrap();
        assert!(msg.contains("absence condition NOT satisfied"), "{msg}");
    }

    #[test]
    fn disk_boundary_has_requested_samples() {
        let csv = disk_boundary_csv(2.0, DISK_BOUNDARY_SAMPLES);
        assert_eq!(csv.lines().count(), DISK_BOUNDARY_SAMPLES + 1);
        let first = csv.lines().nth(1).unwrap();
        assert!(first.starts_with("0.0"));
    }

    #[test]
    fn numerical_errors_map_to_exit_three() {
        let e = Error::Convergence { operation: "x", iterations: 1, last_estimate: 0.0 };
        assert_eq!(Failure::from_error("lame_operator::bs_norm_estimate", e).exit_code, EXIT_NUMERICAL);
        assert_eq!(Failure::from_error("x", Error::Parameter("p".into())).exit_code, EXIT_USAGE);
    }
}
