//! Multidimensional FFT on a [`Grid`] with the normalization "forward divides by n^d".
//!
//! Forward: `f̂(ξ) = n^{-d} Σ_x f(x) e^{-iξ·x}`; inverse: `f(x) = Σ_ξ f̂(ξ) e^{iξ·x}`.
//! Plans are cached process-wide behind a mutex, so transforms may be called
//! from any number of threads.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

struct PlanCache {
    planner: FftPlanner<f64>,
    lengths: BTreeSet<usize>,
}

fn plan_cache() -> &'static Mutex<PlanCache> {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            planner: FftPlanner::new(),
            lengths: BTreeSet::new(),
        })
    })
}

fn plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    let mut cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
    cache.lengths.insert(n);
    match direction {
        Direction::Forward => cache.planner.plan_fft_forward(n),
        Direction::Inverse => cache.planner.plan_fft_inverse(n),
    }
}

/// Transform lengths planned so far in this process.
pub fn planned_lengths() -> Vec<usize> {
    let cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
    cache.lengths.iter().copied().collect()
}

/// In-place transform of raw samples laid out on `grid`.
pub(crate) fn transform_in_place(grid: &Grid, data: &mut [Complex64], direction: Direction) {
    let n = grid.n();
    let fft = plan(n, direction);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let total = grid.len();
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, value) in line.iter().enumerate() {
                    data[start + k * stride] = *value;
                }
            }
        }
    }
    if direction == Direction::Forward {
        let scale = 1.0 / total as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

pub fn spectral_transform(f: &ScalarField, direction: Direction) -> ScalarField {
    let grid = *f.grid();
    let mut data = f.samples().to_vec();
    transform_in_place(&grid, &mut data, direction);
    ScalarField::from_parts(grid, data)
}

pub fn forward(f: &ScalarField) -> ScalarField {
    spectral_transform(f, Direction::Forward)
}

pub fn inverse(f: &ScalarField) -> ScalarField {
    spectral_transform(f, Direction::Inverse)
}

/// Applies a scalar Fourier multiplier `m(ξ)`.
pub fn apply_multiplier(f: &ScalarField, m: impl Fn(&Point) -> Complex64) -> ScalarField {
    let grid = *f.grid();
    let mut data = f.samples().to_vec();
    transform_in_place(&grid, &mut data, Direction::Forward);
    for (i, z) in data.iter_mut().enumerate() {
        *z *= m(&grid.frequency(i));
    }
    transform_in_place(&grid, &mut data, Direction::Inverse);
    ScalarField::from_parts(grid, data)
}

/// Fourier coefficients of every component of `u`.
pub(crate) fn forward_vector(u: &VectorField) -> Vec<Vec<Complex64>> {
    let grid = *u.grid();
    u.components()
        .iter()
        .map(|c| {
            let mut data = c.samples().to_vec();
            transform_in_place(&grid, &mut data, Direction::Forward);
            data
        })
        .collect()
}

pub(crate) fn inverse_vector(grid: Grid, mut coeffs: Vec<Vec<Complex64>>) -> VectorField {
    let comps = coeffs
        .iter_mut()
        .map(|data| {
            transform_in_place(&grid, data, Direction::Inverse);
            ScalarField::from_parts(grid, std::mem::take(data))
        })
        .collect();
    VectorField::from_parts(grid, comps)
}

/// Applies a per-frequency linear map to the Fourier coefficients of `u`.
///
/// The closure receives `ξ` and the `d` coefficients at that frequency and
/// overwrites them in place.
pub fn apply_vector_multiplier(
    u: &VectorField,
    mut m: impl FnMut(&Point, &mut [Complex64]),
) -> VectorField {
    let grid = *u.grid();
    let d = grid.dim();
    let mut coeffs = forward_vector(u);
    let mut buf = [Complex64::new(0.0, 0.0); 3];
    for i in 0..grid.len() {
        for j in 0..d {
            buf[j] = coeffs[j][i];
        }
        m(&grid.frequency(i), &mut buf[..d]);
        for j in 0..d {
            coeffs[j][i] = buf[j];
        }
    }
    inverse_vector(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: Grid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..grid.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ScalarField::new(grid, s).unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        for (d, n) in [(1, 16), (2, 8), (3, 8)] {
            let g = Grid::new(d, n, 3.0).unwrap();
            let f = random_field(g, 7);
            let back = inverse(&forward(&f));
            let err = f
                .samples()
                .iter()
                .zip(back.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = f.samples().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!(err <= 1e-12 * scale, "d={d}: {err}");
        }
    }

    #[test]
    fn constant_maps_to_dc() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let f = ScalarField::constant(g, Complex64::new(1.0, 0.0));
        let fh = forward(&f);
        assert!((fh.samples()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(fh.samples()[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn pure_mode_maps_to_single_bin() {
        let l = 2.5;
        let g = Grid::new(1, 16, l).unwrap();
        let f = ScalarField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0] / l));
        let fh = forward(&f);
        for (k, z) in fh.samples().iter().enumerate() {
            let expect = if k == 1 { 1.0 } else { 0.0 };
            assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn parseval() {
        let g = Grid::new(3, 8, 1.7).unwrap();
        let f = random_field(g, 11);
        let fh = forward(&f);
        let lhs = f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.cell_volume();
        let rhs = fh.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.volume();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn concurrent_transforms_agree() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let f = random_field(g, 3);
        let reference = forward(&f);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..4).map(|_| s.spawn(|| forward(&f))).collect();
            for h in handles {
                assert_eq!(h.join().unwrap(), reference);
            }
        });
    }
}
