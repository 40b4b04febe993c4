use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MatrixPotentialField, ScalarField};
use crate::grid::{Grid, Point};
use crate::io;

/// Built-in potential families.
///
/// Radial families use the minimum-image torus distance to `center`, which
/// defaults to the centre of the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `A·exp(-|x-x₀|²/σ²)·I`
    GaussianScalar {
        amplitude: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `A·1{|x-x₀| <= r}·I`
    StepScalar {
        amplitude: f64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `A/(|x-x₀|²+ε²)·I`
    InverseSquareRegularized {
        amplitude: f64,
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `e^{iθ}` times another family.
    ComplexRotation { theta: f64, base: Box<PotentialSpec> },
    /// Independent uniform complex entries in `A·([-1,1] + i[-1,1])`, optionally
    /// multiplied by a Gaussian envelope of the given width.
    MatrixDenseRandom {
        amplitude: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// A matrix field stored in the LFD1 format.
    File { path: PathBuf },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be finite")))
    }
}

fn resolve_center(center: &Option<Vec<f64>>, grid: &Grid) -> Result<Point> {
    match center {
        None => Ok(grid.center()),
        Some(c) => {
            if c.len() != grid.dim() {
                return Err(Error::Shape(format!(
                    "center has {} coordinates but the grid is {}-dimensional",
                    c.len(),
                    grid.dim()
                )));
            }
            let mut p = [0.0; 3];
            for (slot, &v) in p.iter_mut().zip(c) {
                finite("center coordinate", v)?;
                *slot = v;
            }
            Ok(p)
        }
    }
}

impl PotentialSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            PotentialSpec::GaussianScalar { .. } => "gaussian_scalar",
            PotentialSpec::StepScalar { .. } => "step_scalar",
            PotentialSpec::InverseSquareRegularized { .. } => "inverse_square_regularized",
            PotentialSpec::ComplexRotation { .. } => "complex_rotation",
            PotentialSpec::MatrixDenseRandom { .. } => "matrix_dense_random",
            PotentialSpec::File { .. } => "file",
        }
    }

    /// Same family with the amplitude multiplied by `s` (file potentials are scaled after loading).
    pub fn scaled(&self, s: f64) -> PotentialSpec {
        let mut out = self.clone();
        match &mut out {
            PotentialSpec::GaussianScalar { amplitude, .. }
            | PotentialSpec::StepScalar { amplitude, .. }
            | PotentialSpec::InverseSquareRegularized { amplitude, .. }
            | PotentialSpec::MatrixDenseRandom { amplitude, .. } => *amplitude *= s,
            PotentialSpec::ComplexRotation { base, .. } => *base = Box::new(base.scaled(s)),
            PotentialSpec::File { .. } => {}
        }
        out
    }
}

/// Samples a potential family on `grid`. Deterministic for a fixed spec.
pub fn sample_potential(spec: &PotentialSpec, grid: &Grid) -> Result<MatrixPotentialField> {
    let radial = |center: &Option<Vec<f64>>, profile: &dyn Fn(f64) -> f64| -> Result<MatrixPotentialField> {
        let c = resolve_center(center, grid)?;
        let f = ScalarField::from_fn(*grid, |x| Complex64::new(profile(grid.torus_distance(x, &c)), 0.0));
        Ok(MatrixPotentialField::scalar(&f))
    };
    match spec {
        PotentialSpec::GaussianScalar { amplitude, width, center } => {
            finite("amplitude", *amplitude)?;
            positive("width", *width)?;
            let (a, s2) = (*amplitude, width * width);
            radial(center, &|r| a * (-r * r / s2).exp())
        }
        PotentialSpec::StepScalar { amplitude, radius, center } => {
            finite("amplitude", *amplitude)?;
            positive("radius", *radius)?;
            let (a, rad) = (*amplitude, *radius);
            radial(center, &|r| if r <= rad { a } else { 0.0 })
        }
        PotentialSpec::InverseSquareRegularized { amplitude, epsilon, center } => {
            finite("amplitude", *amplitude)?;
            positive("epsilon", *epsilon)?;
            let (a, e2) = (*amplitude, epsilon * epsilon);
            radial(center, &|r| a / (r * r + e2))
        }
        PotentialSpec::ComplexRotation { theta, base } => {
            finite("theta", *theta)?;
            let v = sample_potential(base, grid)?;
            Ok(v.scale(Complex64::from_polar(1.0, *theta)))
        }
        PotentialSpec::MatrixDenseRandom { amplitude, seed, width, center } => {
            finite("amplitude", *amplitude)?;
            if let Some(w) = width {
                positive("width", *w)?;
            }
            let c = resolve_center(center, grid)?;
            let d = grid.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut entries = Vec::with_capacity(d * d * grid.len());
            for i in 0..grid.len() {
                let envelope = match width {
                    Some(w) => {
                        let r = grid.torus_distance(&grid.position(i), &c);
                        (-r * r / (w * w)).exp()
                    }
                    None => 1.0,
                };
                for _ in 0..d * d {
                    let re: f64 = rng.random_range(-1.0..=1.0);
                    let im: f64 = rng.random_range(-1.0..=1.0);
                    entries.push(Complex64::new(re, im) * (amplitude * envelope));
                }
            }
            MatrixPotentialField::new(*grid, entries)
        }
        PotentialSpec::File { path } => {
            let v = io::load_matrix_field(path)?;
            if v.grid() != grid {
                return Err(Error::Shape(format!(
                    "potential file {} is on grid {:?}, expected {:?}",
                    path.display(),
                    v.grid(),
                    grid
                )));
            }
            Ok(v)
        }
    }
}
