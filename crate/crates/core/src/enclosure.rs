//! Eigenvalue enclosures `|z|^γ <= c·‖V‖^{γ+d/2}`, absence-of-eigenvalue
//! thresholds, right-hand sides of the Birman–Schwinger bounds and the
//! three-dimensional stability conditions.
//!
//! A disk constant `c` and the corresponding Birman–Schwinger constant `c_BS`
//! are related by `c = c_BS^{γ+d/2}`: an eigenvalue forces `‖K_z‖ >= 1`, and
//! `‖K_z‖ <= c_BS |z|^{-2γ/(2γ+d)} N` then gives the disk.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lame::LameParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lebesgue,
    MorreyCampanato,
    KermanSawyer,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Lebesgue => "lebesgue",
            BoundKind::MorreyCampanato => "morrey_campanato",
            BoundKind::KermanSawyer => "kerman_sawyer",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMode {
    /// Closed-form three-dimensional constants (γ = 0 only).
    ExplicitD3,
    /// A user-supplied constant; the existence proofs give no value.
    Configured,
}

/// Constants that enter the three-dimensional formulas but have no known value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxConstants {
    /// Hardy constant factor for Morrey–Campanato weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    /// Hardy constant factor for Kerman–Sawyer weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_ks: Option<f64>,
    /// Weighted Riesz constant: `‖R_j‖_{L²(w)} <= C·Q₂(w)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riesz_c: Option<f64>,
}

/// `2^{4/3}/(3π^{4/3})`, the sharp Sobolev constant `‖u‖²_6 <= S‖∇u‖²_2` in three dimensions.
pub fn sobolev_constant_d3() -> f64 {
    2f64.powf(4.0 / 3.0) / (3.0 * std::f64::consts::PI.powf(4.0 / 3.0))
}

/// `cot²(π/12) = 7 + 4√3`.
pub fn cot2_pi_12() -> f64 {
    7.0 + 4.0 * 3f64.sqrt()
}

/// `2^{4/3}(1+6cot²(π/12))/(3π^{4/3})`: the Birman–Schwinger constant for
/// `L^{3/2}` potentials when `min{μ, λ+2μ} = 1`.
pub fn lebesgue_bs_constant_d3() -> f64 {
    sobolev_constant_d3() * (1.0 + 6.0 * cot2_pi_12())
}

fn require(value: Option<f64>, name: &str) -> Result<f64> {
    match value {
        Some(v) if v.is_finite() && v > 0.0 => Ok(v),
        Some(v) => Err(Error::Configuration(format!("{name} must be positive and finite, got {v}"))),
        None => Err(Error::Configuration(format!("{name} must be configured for this bound"))),
    }
}

/// Birman–Schwinger constant of the three-dimensional `γ = 0` bound; the disk
/// constant is its `3/2` power.
pub fn explicit_bs_constant_d3(kind: BoundKind, params: &LameParams, aux: &AuxConstants) -> Result<f64> {
    let m = params.min_modulus();
    match kind {
        BoundKind::Lebesgue => Ok(lebesgue_bs_constant_d3() / m),
        BoundKind::MorreyCampanato => {
            let c_f = require(aux.c_f, "c_F")?;
            let c = require(aux.riesz_c, "the weighted Riesz constant C")?;
            Ok(c_f * (1.0 + 6.0 * c * c) / m)
        }
        BoundKind::KermanSawyer => {
            let c_ks = require(aux.c_ks, "c_KS")?;
            let c = require(aux.riesz_c, "the weighted Riesz constant C")?;
            Ok(c_ks * (1.0 + 6.0 * c * c) / m)
        }
    }
}

/// Absence constant `c_{0,3}` for `d = 3`, `γ = 0`.
pub fn explicit_constant_d3(kind: BoundKind, params: &LameParams, aux: &AuxConstants) -> Result<f64> {
    Ok(explicit_bs_constant_d3(kind, params, aux)?.powf(1.5))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnclosureSpec {
    pub kind: BoundKind,
    pub gamma: f64,
    pub d: usize,
    /// Integrability exponent of the Morrey–Campanato norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub params: LameParams,
    pub constant_mode: ConstantMode,
    /// Disk constant used in [`ConstantMode::Configured`].
    #[serde(default = "default_constant")]
    pub configured_constant: f64,
    #[serde(default)]
    pub aux: AuxConstants,
}

fn default_constant() -> f64 {
    1.0
}

impl EnclosureSpec {
    pub fn new(kind: BoundKind, gamma: f64, d: usize, params: LameParams) -> Self {
        let constant_mode = if d == 3 && gamma == 0.0 && kind == BoundKind::Lebesgue {
            ConstantMode::ExplicitD3
        } else {
            ConstantMode::Configured
        };
        EnclosureSpec { kind, gamma, d, p: None, params, constant_mode, configured_constant: 1.0, aux: AuxConstants::default() }
    }

    /// `γ + d/2`
    pub fn exponent(&self) -> f64 {
        self.gamma + self.d as f64 / 2.0
    }

    /// Morrey–Campanato: `2d/(2γ+d)`; Kerman–Sawyer: `2dβ/(2γ+d)`.
    pub fn alpha(&self) -> Option<f64> {
        let d = self.d as f64;
        match self.kind {
            BoundKind::Lebesgue => None,
            BoundKind::MorreyCampanato => Some(2.0 * d / (2.0 * self.gamma + d)),
            BoundKind::KermanSawyer => self.beta().map(|b| 2.0 * d * b / (2.0 * self.gamma + d)),
        }
    }

    /// `(d+2γ)(d-1)/(2(d-2γ))` for Kerman–Sawyer.
    pub fn beta(&self) -> Option<f64> {
        let d = self.d as f64;
        (self.kind == BoundKind::KermanSawyer).then(|| (d + 2.0 * self.gamma) * (d - 1.0) / (2.0 * (d - 2.0 * self.gamma)))
    }

    /// Lebesgue exponent of the norm the bound is stated in (`γ + d/2`).
    pub fn lebesgue_exponent(&self) -> f64 {
        self.exponent()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gamma;
        let inadmissible = |msg: String| Err(Error::Admissibility(msg));
        if !g.is_finite() {
            return inadmissible(format!("gamma must be finite, got {g}"));
        }
        if self.d < 2 {
            return inadmissible(format!("d = {} is not covered; the bounds need d >= 2", self.d));
        }
        match self.kind {
            BoundKind::Lebesgue | BoundKind::MorreyCampanato => {
                if self.d == 2 && !(g > 0.0 && g <= 0.5) {
                    return inadmissible(format!("d = 2 requires 0 < gamma <= 1/2 (gamma != 0 if d = 2), got {g}"));
                }
                if self.d >= 3 && !(0.0..=0.5).contains(&g) {
                    return inadmissible(format!("d >= 3 requires 0 <= gamma <= 1/2, got {g}"));
                }
            }
            BoundKind::KermanSawyer => {
                if self.d == 2 && !(g >= 1.0 / 3.0 && g < 0.5) {
                    return inadmissible(format!("d = 2 requires 1/3 <= gamma < 1/2, got {g}"));
                }
                if self.d >= 3 && !(g >= 0.0 && g < 0.5) {
                    return inadmissible(format!("d >= 3 requires 0 <= gamma < 1/2, got {g}"));
                }
            }
        }
        if self.kind == BoundKind::MorreyCampanato {
            let d = self.d as f64;
            let p = self.p.ok_or_else(|| Error::Admissibility("Morrey–Campanato bound needs p".into()))?;
            let lower = (d - 1.0) * (2.0 * g + d) / (2.0 * (d - 2.0 * g));
            let upper = g + d / 2.0;
            if !(p > lower && p <= upper) {
                return inadmissible(format!("Morrey–Campanato requires {lower} < p <= gamma + d/2 = {upper}, got p = {p}"));
            }
        }
        match self.constant_mode {
            ConstantMode::ExplicitD3 if self.d != 3 || g != 0.0 => Err(Error::Configuration(
                "explicit constants exist only for d = 3 and gamma = 0; use a configured constant".into(),
            )),
            ConstantMode::Configured if !(self.configured_constant.is_finite() && self.configured_constant > 0.0) => {
                Err(Error::Configuration(format!("configured constant must be positive, got {}", self.configured_constant)))
            }
            _ => Ok(()),
        }
    }

    /// Disk constant `c` with its provenance label.
    pub fn disk_constant(&self) -> Result<(f64, &'static str)> {
        self.validate()?;
        match self.constant_mode {
            ConstantMode::ExplicitD3 => Ok((explicit_constant_d3(self.kind, &self.params, &self.aux)?, "explicit_d3")),
            ConstantMode::Configured => Ok((self.configured_constant, "configured, not proven")),
        }
    }

    /// Birman–Schwinger constant `c_BS = c^{1/(γ+d/2)}`.
    pub fn bs_constant(&self) -> Result<(f64, &'static str)> {
        self.validate()?;
        match self.constant_mode {
            ConstantMode::ExplicitD3 => Ok((explicit_bs_constant_d3(self.kind, &self.params, &self.aux)?, "explicit_d3")),
            ConstantMode::Configured => Ok((self.configured_constant.powf(1.0 / self.exponent()), "configured, not proven")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnclosureDisk {
    pub kind: BoundKind,
    pub gamma: f64,
    pub d: usize,
    pub params: LameParams,
    pub constant: f64,
    pub constant_provenance: String,
    pub norm_value: f64,
    /// `(c·N^{γ+d/2})^{1/γ}` when `γ > 0`.
    pub radius: Option<f64>,
    /// `c·N^{d/2} < 1` when `γ = 0`.
    pub absence_satisfied: Option<bool>,
    /// `1 - c·N^{d/2}` when `γ = 0`.
    pub absence_margin: Option<f64>,
}

impl EnclosureDisk {
    /// `radius·(1+tol)`; `None` for absence predicates.
    pub fn inflated_radius(&self, tol: f64) -> Option<f64> {
        self.radius.map(|r| r * (1.0 + tol))
    }

    /// Whether `z` is compatible with the bound: inside the (inflated) disk, or
    /// never when the absence condition holds.
    pub fn admits(&self, z: Complex64, tol: f64) -> bool {
        match (self.radius, self.absence_satisfied) {
            (Some(r), _) => z.norm() <= r * (1.0 + tol),
            (None, Some(absent)) => !absent,
            (None, None) => true,
        }
    }
}

pub fn enclosure_disk(spec: &EnclosureSpec, norm_value: f64) -> Result<EnclosureDisk> {
    if !(norm_value >= 0.0 && norm_value.is_finite()) {
        return Err(Error::Parameter(format!("norm value must be nonnegative and finite, got {norm_value}")));
    }
    let (constant, provenance) = spec.disk_constant()?;
    let mut disk = EnclosureDisk {
        kind: spec.kind,
        gamma: spec.gamma,
        d: spec.d,
        params: spec.params,
        constant,
        constant_provenance: provenance.to_string(),
        norm_value,
        radius: None,
        absence_satisfied: None,
        absence_margin: None,
    };
    if spec.gamma > 0.0 {
        disk.radius = Some((constant * norm_value.powf(spec.exponent())).powf(1.0 / spec.gamma));
    } else {
        let value = constant * norm_value.powf(spec.d as f64 / 2.0);
        disk.absence_satisfied = Some(value < 1.0);
        disk.absence_margin = Some(1.0 - value);
    }
    Ok(disk)
}

/// Largest norm value for which the `γ = 0` absence condition holds: `c^{-2/d}`.
pub fn absence_threshold(spec: &EnclosureSpec) -> Result<f64> {
    if spec.gamma != 0.0 {
        return Err(Error::Parameter("absence thresholds exist only for gamma = 0".into()));
    }
    let (c, _) = spec.disk_constant()?;
    Ok(c.powf(-2.0 / spec.d as f64))
}

/// Norms of a potential that enter the bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundNorms {
    /// `‖V‖_{L^{γ+d/2}}`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lebesgue: Option<f64>,
    /// `‖V‖_{𝓛^{α,p}}`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morrey_campanato: Option<f64>,
    /// `Q₂(|V|)`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<f64>,
    /// `‖|V|^β‖_{𝒦𝒮_α}`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kerman_sawyer: Option<f64>,
}

fn missing(name: &str) -> Error {
    Error::Input(format!("the {name} norm of V is required for this bound"))
}

/// The norm `N` that the disk is stated in: the Lebesgue or Morrey–Campanato
/// norm, or `Q₂(|V|)²·‖|V|^β‖_{𝒦𝒮_α}^{1/β}`.
pub fn composite_norm(spec: &EnclosureSpec, norms: &BoundNorms) -> Result<f64> {
    match spec.kind {
        BoundKind::Lebesgue => norms.lebesgue.ok_or_else(|| missing("Lebesgue")),
        BoundKind::MorreyCampanato => norms.morrey_campanato.ok_or_else(|| missing("Morrey–Campanato")),
        BoundKind::KermanSawyer => {
            let q2 = norms.q2.ok_or_else(|| missing("A_2"))?;
            let ks = norms.kerman_sawyer.ok_or_else(|| missing("Kerman–Sawyer"))?;
            let beta = spec.beta().expect("Kerman–Sawyer spec has beta");
            Ok(q2 * q2 * ks.powf(1.0 / beta))
        }
    }
}

/// Theoretical upper bound on `‖K_z‖`.
///
/// For `d = 3`, `γ = 0` with explicit constants the Kerman–Sawyer bound is
/// `c_KS(1+6C²Q₂²)/min{μ,λ+2μ}·‖V‖_{𝒦𝒮_2}`; every other case is
/// `c_BS |z|^{-2γ/(2γ+d)} N`.
pub fn bs_bound_value(z: Complex64, spec: &EnclosureSpec, norms: &BoundNorms) -> Result<f64> {
    spec.validate()?;
    if spec.constant_mode == ConstantMode::ExplicitD3 && spec.kind == BoundKind::KermanSawyer {
        let q2 = norms.q2.ok_or_else(|| missing("A_2"))?;
        let ks = norms.kerman_sawyer.ok_or_else(|| missing("Kerman–Sawyer"))?;
        let c_ks = require(spec.aux.c_ks, "c_KS")?;
        let c = require(spec.aux.riesz_c, "the weighted Riesz constant C")?;
        let c_v = c * q2;
        return Ok(c_ks * (1.0 + 6.0 * c_v * c_v) / spec.params.min_modulus() * ks);
    }
    let n = composite_norm(spec, norms)?;
    let (c_bs, _) = spec.bs_constant()?;
    if spec.gamma == 0.0 {
        return Ok(c_bs * n);
    }
    if z.norm() == 0.0 {
        return Err(Error::Domain("the gamma > 0 bounds are singular at z = 0".into()));
    }
    let d = spec.d as f64;
    Ok(c_bs * z.norm().powf(-2.0 * spec.gamma / (2.0 * spec.gamma + d)) * n)
}

/// Smallest Birman–Schwinger constant consistent with measured `(‖K_z‖, z, N)`
/// triples: `max ‖K_z‖ |z|^{2γ/(2γ+d)} / N`.
pub fn empirical_bs_constant(gamma: f64, d: usize, samples: &[(f64, Complex64, f64)]) -> f64 {
    let e = 2.0 * gamma / (2.0 * gamma + d as f64);
    samples
        .iter()
        .filter(|(_, _, n)| *n > 0.0)
        .map(|(k, z, n)| k * z.norm().powf(e) / n)
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityCondition {
    /// Hardy-type subordination `a < min{μ,λ+2μ}/(1+6c_V²)`.
    Fkv,
    /// `c_F(1+6c_V²)‖V‖_{𝓛^{2,p}}/min{μ,λ+2μ} < 1`
    Mc,
    /// `2^{4/3}(1+6cot²(π/12))‖V‖_{L^{3/2}}/(3π^{4/3}min{μ,λ+2μ}) < 1`
    Lp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityInputs {
    /// Hardy constant `a` of `|V|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardy: Option<f64>,
    /// Weighted Riesz constant `c_V`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    /// `‖V‖_{𝓛^{2,p}}`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morrey_campanato: Option<f64>,
    /// `‖V‖_{L^{3/2}}`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lebesgue: Option<f64>,
}

pub const STABILITY_CONCLUSION: &str = "sigma(-Delta* + V) = sigma_c(-Delta* + V) = [0, inf)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub condition: StabilityCondition,
    /// Left side normalized so that the condition reads `value < 1`.
    pub value: f64,
    pub satisfied: bool,
    /// `1 - value`
    pub margin: f64,
    /// Claim to be tested numerically when the condition holds.
    pub claim_under_test: Option<String>,
}

pub fn stability_check_d3(condition: StabilityCondition, params: &LameParams, inputs: &StabilityInputs) -> Result<StabilityReport> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Input(format!("{name} is required for this condition")));
    let m = params.min_modulus();
    let value = match condition {
        StabilityCondition::Fkv => {
            let a = need(inputs.hardy, "the Hardy constant a")?;
            let c_v = need(inputs.c_v, "c_V")?;
            a * (1.0 + 6.0 * c_v * c_v) / m
        }
        StabilityCondition::Mc => {
            let c_f = need(inputs.c_f, "c_F")?;
            let c_v = need(inputs.c_v, "c_V")?;
            let n = need(inputs.morrey_campanato, "the Morrey–Campanato norm")?;
            c_f * (1.0 + 6.0 * c_v * c_v) * n / m
        }
        StabilityCondition::Lp => {
            let n = need(inputs.lebesgue, "the L^{3/2} norm")?;
            lebesgue_bs_constant_d3() * n / m
        }
    };
    let satisfied = value < 1.0;
    Ok(StabilityReport {
        condition,
        value,
        satisfied,
        margin: 1.0 - value,
        claim_under_test: satisfied.then(|| STABILITY_CONCLUSION.to_string()),
    })
}
