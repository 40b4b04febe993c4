//! Complex scalar, vector and matrix fields sampled on a [`Grid`].
//!
//! All fields are immutable once built; operations return new fields.
//! Integrals are Riemann sums with cell volume `h^d`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

fn check_finite(values: &[Complex64], what: &str) -> Result<()> {
    if let Some(pos) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Domain(format!("{what} has a non-finite sample at index {pos}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape(format!(
                "scalar field needs {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        check_finite(&samples, "scalar field")?;
        Ok(ScalarField { grid, samples })
    }

    /// Builds a field without re-checking finiteness; callers guarantee the invariants.
    pub(crate) fn from_parts(grid: Grid, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        ScalarField { grid, samples }
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField::from_parts(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        ScalarField::from_parts(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        ScalarField::from_parts(grid, samples)
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        ScalarField::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ScalarField::from_parts(self.grid, self.samples.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    /// Pointwise modulus as a real-valued field.
    pub fn modulus(&self) -> Self {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    /// `(h^d Σ|f|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let h_d = self.grid.cell_volume();
        let s: f64 = self.samples.iter().map(|z| z.norm().powf(p)).sum();
        (h_d * s).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        (self.grid.cell_volume() * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// A `C^d`-valued field stored as `d` scalar components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Shape("vector field needs at least one component".into()));
        };
        let grid = *first.grid();
        if components.len() != grid.dim() {
            return Err(Error::Shape(format!(
                "vector field on a {}-dimensional grid needs {} components, got {}",
                grid.dim(),
                grid.dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::Shape("vector components live on different grids".into()));
        }
        Ok(VectorField { grid, components })
    }

    pub(crate) fn from_parts(grid: Grid, components: Vec<ScalarField>) -> Self {
        debug_assert_eq!(components.len(), grid.dim());
        VectorField { grid, components }
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField::from_parts(grid, vec![ScalarField::zeros(grid); grid.dim()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> [Complex64; 3]) -> Self {
        let d = grid.dim();
        let mut comps = vec![Vec::with_capacity(grid.len()); d];
        for i in 0..grid.len() {
            let v = f(&grid.position(i));
            for (j, c) in comps.iter_mut().enumerate() {
                c.push(v[j]);
            }
        }
        VectorField::from_parts(
            grid,
            comps.into_iter().map(|s| ScalarField::from_parts(grid, s)).collect(),
        )
    }

    /// Builds a field from point-major interleaved samples (`index = point·d + component`).
    pub fn from_interleaved(grid: Grid, data: &[Complex64]) -> Result<Self> {
        let d = grid.dim();
        if data.len() != d * grid.len() {
            return Err(Error::Shape(format!(
                "vector field needs {} interleaved samples, got {}",
                d * grid.len(),
                data.len()
            )));
        }
        check_finite(data, "vector field")?;
        let comps = (0..d)
            .map(|j| {
                ScalarField::from_parts(grid, data.iter().skip(j).step_by(d).copied().collect())
            })
            .collect();
        Ok(VectorField::from_parts(grid, comps))
    }

    pub fn to_interleaved(&self) -> Vec<Complex64> {
        let d = self.grid.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); d * self.grid.len()];
        for (j, c) in self.components.iter().enumerate() {
            for (i, z) in c.samples().iter().enumerate() {
                out[i * d + j] = *z;
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn at(&self, point: usize) -> [Complex64; 3] {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for (j, c) in self.components.iter().enumerate() {
            v[j] = c.samples()[point];
        }
        v
    }

    pub fn zip_with(&self, other: &VectorField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                ScalarField::from_parts(
                    self.grid,
                    a.samples().iter().zip(b.samples()).map(|(&x, &y)| f(x, y)).collect(),
                )
            })
            .collect();
        VectorField::from_parts(self.grid, comps)
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        VectorField::from_parts(self.grid, self.components.iter().map(|c| c.scale(s)).collect())
    }

    /// `∫ conj(self)·other dx`.
    pub fn inner(&self, other: &VectorField) -> Complex64 {
        let s: Complex64 = self
            .components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.samples().iter().zip(b.samples()).map(|(x, y)| x.conj() * y))
            .sum();
        s * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .components
            .iter()
            .flat_map(|c| c.samples().iter().map(|z| z.norm_sqr()))
            .sum();
        (self.grid.cell_volume() * s).sqrt()
    }

    /// `‖ |u(·)|_p ‖_{L^p}` with the pointwise ℓ^p vector norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let d = self.grid.dim();
        let s: f64 = (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                v[..d].iter().map(|z| z.norm().powf(p)).sum::<f64>()
            })
            .sum();
        (self.grid.cell_volume() * s).powf(1.0 / p)
    }

    /// Pointwise Euclidean length `|u(x)|`.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        let d = self.grid.dim();
        (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                v[..d].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            })
            .collect()
    }
}

/// A `C^{d×d}`-valued potential. Entries are point-major, each matrix row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPotentialField {
    grid: Grid,
    entries: Vec<Complex64>,
}

impl MatrixPotentialField {
    pub fn new(grid: Grid, entries: Vec<Complex64>) -> Result<Self> {
        let d = grid.dim();
        if entries.len() != d * d * grid.len() {
            return Err(Error::Shape(format!(
                "matrix potential needs {} entries, got {}",
                d * d * grid.len(),
                entries.len()
            )));
        }
        check_finite(&entries, "matrix potential")?;
        Ok(MatrixPotentialField { grid, entries })
    }

    pub(crate) fn from_parts(grid: Grid, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), grid.dim() * grid.dim() * grid.len());
        MatrixPotentialField { grid, entries }
    }

    pub fn zeros(grid: Grid) -> Self {
        let d = grid.dim();
        MatrixPotentialField::from_parts(grid, vec![Complex64::new(0.0, 0.0); d * d * grid.len()])
    }

    /// `V(x) = f(x)·I`.
    pub fn scalar(f: &ScalarField) -> Self {
        let grid = *f.grid();
        let d = grid.dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); d * d * grid.len()];
        for (i, &v) in f.samples().iter().enumerate() {
            for j in 0..d {
                entries[i * d * d + j * d + j] = v;
            }
        }
        MatrixPotentialField::from_parts(grid, entries)
    }

    /// Builds a potential from a per-point closure returning the row-major matrix.
    pub fn from_fn(grid: Grid, f: impl Fn(usize, &Point) -> Vec<Complex64>) -> Result<Self> {
        let d = grid.dim();
        let mut entries = Vec::with_capacity(d * d * grid.len());
        for i in 0..grid.len() {
            let m = f(i, &grid.position(i));
            if m.len() != d * d {
                return Err(Error::Shape(format!("point matrix must have {} entries", d * d)));
            }
            entries.extend(m);
        }
        MatrixPotentialField::new(grid, entries)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Row-major `d×d` block at grid point `point`.
    pub fn at(&self, point: usize) -> &[Complex64] {
        let dd = self.grid.dim() * self.grid.dim();
        &self.entries[point * dd..(point + 1) * dd]
    }

    pub fn matrix_at(&self, point: usize) -> DMatrix<Complex64> {
        let d = self.grid.dim();
        DMatrix::from_row_slice(d, d, self.at(point))
    }

    pub fn map_matrices(&self, f: impl Fn(DMatrix<Complex64>) -> DMatrix<Complex64>) -> Self {
        let d = self.grid.dim();
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.grid.len() {
            let m = f(self.matrix_at(i));
            for r in 0..d {
                for c in 0..d {
                    entries.push(m[(r, c)]);
                }
            }
        }
        MatrixPotentialField::from_parts(self.grid, entries)
    }

    /// Pointwise conjugate transpose `V̄ᵗ`.
    pub fn adjoint(&self) -> Self {
        let d = self.grid.dim();
        let mut entries = self.entries.clone();
        for (blk, src) in entries.chunks_mut(d * d).zip(self.entries.chunks(d * d)) {
            for r in 0..d {
                for c in 0..d {
                    blk[r * d + c] = src[c * d + r].conj();
                }
            }
        }
        MatrixPotentialField::from_parts(self.grid, entries)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        MatrixPotentialField::from_parts(self.grid, self.entries.iter().map(|z| z * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Largest entry modulus over all points.
    pub fn max_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pointwise product `V(x) u(x)`.
    pub fn apply(&self, u: &VectorField) -> VectorField {
        let d = self.grid.dim();
        let mut out = vec![Vec::with_capacity(self.grid.len()); d];
        for i in 0..self.grid.len() {
            let m = self.at(i);
            let v = u.at(i);
            for (r, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..d {
                    acc += m[r * d + c] * v[c];
                }
                o.push(acc);
            }
        }
        VectorField::from_parts(
            self.grid,
            out.into_iter().map(|s| ScalarField::from_parts(self.grid, s)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_wrong_lengths_and_nan() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        assert!(matches!(ScalarField::new(g, vec![c(0.0); 15]), Err(Error::Shape(_))));
        let mut s = vec![c(0.0); 16];
        s[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(ScalarField::new(g, s), Err(Error::Domain(_))));
        assert!(matches!(MatrixPotentialField::new(g, vec![c(0.0); 16]), Err(Error::Shape(_))));
    }

    #[test]
    fn interleaving_round_trip() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let u = VectorField::from_fn(g, |x| [c(x[0]), Complex64::new(0.0, x[1]), c(0.0)]);
        let back = VectorField::from_interleaved(g, &u.to_interleaved()).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn adjoint_transposes_and_conjugates() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let v = MatrixPotentialField::from_fn(g, |i, _| {
            vec![c(1.0), Complex64::new(i as f64, 2.0), c(3.0), Complex64::new(0.0, -1.0)]
        })
        .unwrap();
        let a = v.adjoint();
        assert_eq!(a.at(5)[1], c(3.0));
        assert_eq!(a.at(5)[2], Complex64::new(5.0, -2.0));
        assert_eq!(a.at(5)[3], Complex64::new(0.0, 1.0));
        assert_eq!(a.adjoint(), v);
    }
}
