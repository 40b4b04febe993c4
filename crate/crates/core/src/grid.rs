use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or frequency in up to three dimensions; unused trailing axes are zero.
pub type Point = [f64; 3];

/// Uniform periodic grid on the torus `[0, L)^d` with `n` points per axis.
///
/// Samples are stored row-major: axis 0 varies slowest. The frequency
/// lattice along each axis is `2πm/L` for `-n/2 <= m < n/2`, laid out in the
/// usual FFT order (`m = k` for `k < n/2`, `m = k - n` otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    d: usize,
    n: usize,
    #[serde(rename = "L")]
    length: f64,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.d, r.n, r.length)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            d: g.dim,
            n: g.n,
            length: g.length,
        }
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Parameter(format!(
                "grid dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Parameter(format!(
                "side length must be positive and finite, got {length}"
            )));
        }
        if n.checked_pow(dim as u32).is_none() {
            return Err(Error::Parameter("grid too large".into()));
        }
        Ok(Grid { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one grid cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume of the torus, `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// `log2(n)`: the finest dyadic level whose cubes still contain a grid point.
    pub fn max_dyadic_level(&self) -> u32 {
        self.n.trailing_zeros()
    }

    /// Stride of axis `axis` in the flat sample layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0usize, |acc, &i| acc * self.n + (i % self.n))
    }

    pub fn position(&self, flat: usize) -> Point {
        let h = self.spacing();
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = idx[axis] as f64 * h;
        }
        x
    }

    /// Integer frequency `m` of FFT bin `k`.
    pub fn frequency_number(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular frequencies `2πm/L` along one axis in FFT order.
    pub fn axis_frequencies(&self) -> Vec<f64> {
        let unit = 2.0 * PI / self.length;
        (0..self.n)
            .map(|k| unit * self.frequency_number(k) as f64)
            .collect()
    }

    /// Frequency vector of the Fourier coefficient stored at `flat`.
    pub fn frequency(&self, flat: usize) -> Point {
        let unit = 2.0 * PI / self.length;
        let idx = self.multi_index(flat);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            xi[axis] = unit * self.frequency_number(idx[axis]) as f64;
        }
        xi
    }

    /// Minimum-image displacement `x - y` on the torus, componentwise in `[-L/2, L/2)`.
    pub fn torus_displacement(&self, x: &Point, y: &Point) -> Point {
        let l = self.length;
        let mut out = [0.0; 3];
        for axis in 0..self.dim {
            let mut t = (x[axis] - y[axis]).rem_euclid(l);
            if t >= 0.5 * l {
                t -= l;
            }
            out[axis] = t;
        }
        out
    }

    pub fn torus_distance(&self, x: &Point, y: &Point) -> f64 {
        norm(&self.torus_displacement(x, y))
    }

    /// Radii `h·2^k` up to `L/2`.
    pub fn dyadic_radii(&self) -> Vec<f64> {
        let h = self.spacing();
        let half = 0.5 * self.length;
        let mut radii = Vec::new();
        let mut r = h;
        while r <= half * (1.0 + 1e-12) {
            radii.push(r);
            r *= 2.0;
        }
        radii
    }

    /// Geometric centre of the torus.
    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for v in c.iter_mut().take(self.dim) {
            *v = 0.5 * self.length;
        }
        c
    }
}

pub fn norm(x: &Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

pub fn dot(x: &Point, y: &Point) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("dimension checked by Grid"),
    }
}
