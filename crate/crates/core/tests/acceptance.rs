//! Acceptance suite: one PASS/FAIL line per criterion. Expected values come
//! from closed forms or from direct recomputation in this file.

use std::f64::consts::PI;
use std::panic;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lame_spectra::cli::{execute, Command, RunConfig};
use lame_spectra::enclosure::{enclosure_disk, BoundKind, EnclosureSpec};
use lame_spectra::fft;
use lame_spectra::helmholtz::{divergence, helmholtz_split};
use lame_spectra::lame::{
    bs_norm_estimate, diagonalize_symbol, epsilon_sequence, free_resolvent_apply, green_kernel_3d, lame_apply,
};
use lame_spectra::norms::{a_p_constant, kerman_sawyer_diagonal_bound, kerman_sawyer_norm, lp_norm, morrey_campanato_norm};
use lame_spectra::potential::{sample_potential, PotentialSpec};
use lame_spectra::spectra::{
    adjoint_symmetry_check, assemble_hamiltonian, containment_check, default_essential_margin, eigenvalues, plane_wave, smooth_bump,
    weyl_residual, WaveMode, DEFAULT_INFLATION,
};
use lame_spectra::verify::Suite;
use lame_spectra::{Complex64, Grid, LameParams, MatrixPotentialField, ScalarField, VectorField};

// Pinned tolerances.
const HELMHOLTZ_PYTHAGORAS: f64 = 1e-12;
const HELMHOLTZ_COEFFICIENTS: f64 = 1e-13;
const HELMHOLTZ_RUNTIME: Duration = Duration::from_secs(10);
const SYMBOL_ORTHONORMAL: f64 = 1e-12;
const SYMBOL_EXPLICIT: f64 = 1e-10;
const SYMBOL_EIGEN: f64 = 1e-12;
const RESOLVENT_IDENTITY: f64 = 1e-10;
const PLANE_WAVE_RESIDUAL: f64 = 1e-12;
const PLANE_WAVE_MODULUS: f64 = 1e-13;
const PLANE_WAVE_DIVERGENCE: f64 = 1e-12;
const BS_TOLERANCE: f64 = 1e-10;
const CONTAINMENT_RUNTIME: Duration = Duration::from_secs(300);
const A2_CLOSED_FORM: f64 = 1e-10;
const MC_QUADRATURE_SLACK: f64 = 0.02;
const J_SYMMETRY: f64 = 1e-11;
const WEYL_DECAY: f64 = 8.0;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_field(grid: Grid, r: &mut ChaCha8Rng) -> VectorField {
    let data: Vec<Complex64> =
        (0..grid.len() * grid.dim()).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    VectorField::from_interleaved(grid, &data).unwrap()
}

fn coefficients(u: &VectorField) -> Vec<Vec<Complex64>> {
    u.components().iter().map(|c| fft::forward(c).samples().to_vec()).collect()
}

fn symbol(xi: &[f64], lambda: f64, mu: f64) -> DMatrix<f64> {
    let d = xi.len();
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    DMatrix::from_fn(d, d, |i, j| (if i == j { mu * k2 } else { 0.0 }) + (lambda + mu) * xi[i] * xi[j])
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let (mut pyth, mut sum, mut idem, mut proj) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..50 {
        let (d, n) = [(2, 8), (2, 16), (3, 8), (3, 16)][k % 4];
        let grid = Grid::new(d, n, 2.0 * PI).unwrap();
        let u = random_field(grid, &mut r);
        let pair = helmholtz_split(&u).unwrap();
        let total = u.l2_norm().powi(2);
        pyth = pyth.max((total - pair.u_s.l2_norm().powi(2) - pair.u_p.l2_norm().powi(2)).abs() / total);

        let cu = coefficients(&u);
        let (cs, cp) = (coefficients(&pair.u_s), coefficients(&pair.u_p));
        let scale = cu.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        // û_P = ξ(ξ·û)/|ξ|², with the constant mode in the S part
        for i in 0..grid.len() {
            let xi = grid.frequency(i);
            let k2: f64 = xi[..d].iter().map(|x| x * x).sum();
            let dot: Complex64 = (0..d).map(|j| cu[j][i] * xi[j]).sum();
            for j in 0..d {
                let expect_p = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { dot * xi[j] / k2 };
                proj = proj.max((cp[j][i] - expect_p).norm() / scale);
                sum = sum.max((cs[j][i] + cp[j][i] - cu[j][i]).norm() / scale);
            }
        }
        let again = helmholtz_split(&pair.u_p).unwrap();
        let (ap, as_) = (coefficients(&again.u_p), coefficients(&again.u_s));
        for j in 0..d {
            for i in 0..grid.len() {
                idem = idem.max((ap[j][i] - cp[j][i]).norm() / scale).max(as_[j][i].norm() / scale);
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "pythagoras {pyth:.2e} (<= {HELMHOLTZ_PYTHAGORAS:e}), projector {proj:.2e}, sum {sum:.2e}, idempotence {idem:.2e} (<= {HELMHOLTZ_COEFFICIENTS:e}), {:.2} s",
        elapsed.as_secs_f64()
    );
    let ok = pyth <= HELMHOLTZ_PYTHAGORAS
        && proj <= HELMHOLTZ_COEFFICIENTS
        && sum <= HELMHOLTZ_COEFFICIENTS
        && idem <= HELMHOLTZ_COEFFICIENTS
        && elapsed < HELMHOLTZ_RUNTIME;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let pairs = [(0.0, 1.0), (1.0, 1.0), (-0.5, 1.0), (3.0, 0.5), (-1.5, 2.0)];
    let mut r = rng(2);
    let (mut orth, mut expl, mut eig) = (0.0f64, 0.0f64, 0.0f64);
    let mut explicit = 0;
    for _ in 0..100 {
        let xi: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        for &(lambda, mu) in &pairs {
            let params = LameParams::new(lambda, mu).unwrap();
            let m = diagonalize_symbol(&xi, &params).unwrap();
            let l = symbol(&xi, lambda, mu);
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![mu * k2, mu * k2, (lambda + 2.0 * mu) * k2]));
            let p_inv = m.p_orth.clone().try_inverse().unwrap();
            orth = orth.max((&p_inv * &l * &m.p_orth - &d).norm());
            if let Some(p) = &m.p_explicit {
                let det = p.determinant();
                // det P = ξ₁|ξ|²
                assert!((det - xi[0] * k2).abs() <= 1e-12 * k2.powf(1.5));
                let inv = p.clone().try_inverse().unwrap();
                expl = expl.max((inv * &l * p - &d).norm());
                explicit += 1;
            }
            let mut got: Vec<f64> = m.l.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            got.sort_by(f64::total_cmp);
            let mut want = vec![mu * k2, mu * k2, (lambda + 2.0 * mu) * k2];
            want.sort_by(f64::total_cmp);
            eig = eig.max(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    let detail = format!(
        "orthonormal {orth:.2e} (<= {SYMBOL_ORTHONORMAL:e}), explicit {expl:.2e} over {explicit} bases (<= {SYMBOL_EXPLICIT:e}), eigenvalues {eig:.2e} (<= {SYMBOL_EIGEN:e})"
    );
    if orth <= SYMBOL_ORTHONORMAL && expl <= SYMBOL_EXPLICIT && eig <= SYMBOL_EIGEN && explicit == 500 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let l = 2.0 * PI + 0.3;
    let grid = Grid::new(3, 8, l).unwrap();
    let (lambda, mu) = (0.5, 1.0);
    let params = LameParams::new(lambda, mu).unwrap();
    let mut r = rng(3);
    let k0 = 2.0 * PI / l;
    let mut zs = vec![Complex64::new(-1.0, 0.0), Complex64::new(2.5, 1e-3), Complex64::new(0.7, -1e-3), Complex64::new(4.0, 1e-3)];
    while zs.len() < 20 {
        let im = r.random_range(0.2..3.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        zs.push(Complex64::new(r.random_range(-5.0..8.0), im));
    }
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    for &z in &zs {
        // a handful of modes with |m|_∞ <= 2 and random vector amplitudes
        let modes: Vec<([i64; 3], Vec<Complex64>)> = (0..6)
            .map(|_| {
                let m = [r.random_range(-2..=2), r.random_range(-2..=2), r.random_range(-2..=2)];
                let c = (0..3).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
                (m, c)
            })
            .collect();
        let solved: Vec<([i64; 3], Vec<Complex64>, Vec<Complex64>)> = modes
            .iter()
            .map(|(m, c)| {
                let xi: Vec<f64> = m.iter().map(|&x| x as f64 * k0).collect();
                let a = symbol(&xi, lambda, mu).map(|x| Complex64::new(x, 0.0)) - DMatrix::identity(3, 3) * z;
                let sol = a.lu().solve(&DVector::from_vec(c.clone())).unwrap();
                (*m, c.clone(), sol.iter().copied().collect())
            })
            .collect();
        let eval = |which: usize| {
            VectorField::from_fn(grid, |x| {
                let mut out = [Complex64::new(0.0, 0.0); 3];
                for (m, c, s) in &solved {
                    let phase = Complex64::from_polar(1.0, k0 * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]));
                    let amp = if which == 0 { c } else { s };
                    for j in 0..3 {
                        out[j] += amp[j] * phase;
                    }
                }
                out
            })
        };
        let (g, expect) = (eval(0), eval(1));
        let u = free_resolvent_apply(&g, z, &params).unwrap();
        worst = worst.max(u.sub(&expect).l2_norm() / expect.l2_norm());
        let back = lame_apply(&u, &params).sub(&u.scale(z));
        worst_identity = worst_identity.max(back.sub(&g).l2_norm() / g.l2_norm());
    }
    let mut domination = 0.0f64;
    let mut formula = 0.0f64;
    for i in 0..10 {
        let zeta = Complex64::from_polar(0.5 + 0.7 * i as f64, -PI + 2.0 * PI * (i as f64 + 0.5) / 10.0);
        for j in 0..10 {
            let rr = 0.1 + 0.5 * j as f64;
            let g = green_kernel_3d(rr, zeta).unwrap();
            let g0 = 1.0 / (4.0 * PI * rr);
            let direct = (-(-zeta).sqrt() * rr).exp() / (4.0 * PI * rr);
            formula = formula.max((g - direct).norm() / g0);
            domination = domination.max(g.norm() / g0);
        }
    }
    let detail = format!(
        "resolvent vs per-mode solve {worst:.2e}, (-Δ*-z)R(z)g - g {worst_identity:.2e} (<= {RESOLVENT_IDENTITY:e}) over {} z; max |G_ζ|/G_0 {domination:.4} (<= 1), kernel formula {formula:.1e}",
        zs.len()
    );
    if worst <= RESOLVENT_IDENTITY && worst_identity <= RESOLVENT_IDENTITY && domination <= 1.0 && formula <= 1e-14 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let l = 2.0;
    let grid = Grid::new(3, 8, l).unwrap();
    let (lambda, mu) = (0.7, 1.3);
    let params = LameParams::new(lambda, mu).unwrap();
    let k0 = 2.0 * PI / l;
    let (mut res, mut modulus, mut div) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for (mode, m_mod) in [(WaveMode::S, mu), (WaveMode::P, lambda + 2.0 * mu)] {
        for m in 1..=3 {
            let z = m_mod * (m as f64 * k0).powi(2);
            for axis in 0..3 {
                let w = plane_wave(z, mode, axis, None, &params, &grid).unwrap();
                let residual = lame_apply(&w.field, &params).sub(&w.field.scale(Complex64::new(z, 0.0))).l2_norm() / w.field.l2_norm();
                res = res.max(residual);
                modulus = modulus.max(w.field.pointwise_norm().iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max));
                if mode == WaveMode::S {
                    div = div.max(divergence(&w.field).l2_norm());
                }
                count += 1;
            }
        }
    }
    let detail = format!(
        "{count} waves: residual {res:.2e} (<= {PLANE_WAVE_RESIDUAL:e}), ||u|-1| {modulus:.2e} (<= {PLANE_WAVE_MODULUS:e}), S divergence {div:.2e} (<= {PLANE_WAVE_DIVERGENCE:e})"
    );
    if res <= PLANE_WAVE_RESIDUAL && modulus <= PLANE_WAVE_MODULUS && div <= PLANE_WAVE_DIVERGENCE {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5() -> Outcome {
    let grid = Grid::new(3, 16, 8.0).unwrap();
    let params = LameParams::new(0.5, 1.0).unwrap();
    let m = params.mu().min(params.lambda() + 2.0 * params.mu());
    let cot2 = 1.0 / (PI / 12.0).tan().powi(2);
    let c_bs = 2f64.powf(4.0 / 3.0) * (1.0 + 6.0 * cot2) / (3.0 * PI.powf(4.0 / 3.0)) / m;
    let h3 = grid.cell_volume();
    let center = grid.center();
    let zs = [Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 1.0), Complex64::new(0.5, 0.1)];
    let mut worst = 0.0f64;
    for &a in &[0.05, 0.2, 0.5, 1.0, 2.0] {
        let v = sample_potential(&PotentialSpec::GaussianScalar { amplitude: a, width: 1.0, center: None }, &grid).unwrap();
        let norm: f64 = (0..grid.len())
            .map(|i| {
                let rr = grid.torus_distance(&grid.position(i), &center);
                (a * (-rr * rr).exp()).powf(1.5)
            })
            .sum::<f64>()
            * h3;
        let norm = norm.powf(2.0 / 3.0);
        let lib = lp_norm(&v, 1.5).unwrap().value;
        if (lib - norm).abs() > 1e-12 * norm {
            return Err(format!("L^3/2 norm {lib} differs from direct sum {norm}"));
        }
        for &z in &zs {
            let est = bs_norm_estimate(z, &v, &params, BS_TOLERANCE).unwrap().estimate;
            worst = worst.max(est / (c_bs * norm));
        }
    }
    let v = sample_potential(&PotentialSpec::GaussianScalar { amplitude: 1.0, width: 1.0, center: None }, &grid).unwrap();
    let phi = random_field(grid, &mut rng(5));
    let seq = epsilon_sequence(Complex64::new(0.5, 0.0), 0.1, 6, &v, &params, &phi).unwrap();
    let diffs: Vec<f64> = seq.iter().map(|s| s.difference).collect();
    let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
    // linear convergence in ε: successive differences roughly halve
    let rates: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    let convergent = rates.iter().all(|&q| q < 0.75);
    let detail = format!(
        "max estimate/bound {worst:.3e} (<= 1) over 15 (amplitude, z) pairs; ε-sequence over 6 halvings monotone={monotone}, rates {:?}",
        rates.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>()
    );
    if worst <= 1.0 && monotone && convergent && seq.len() == 7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let params = LameParams::default();
    let m = 1.0;
    let cot2 = 1.0 / (PI / 12.0).tan().powi(2);
    let c_bs = 2f64.powf(4.0 / 3.0) * (1.0 + 6.0 * cot2) / (3.0 * PI.powf(4.0 / 3.0)) / m;
    // absence: c_BS·‖V‖_{3/2} < 1
    let threshold = 1.0 / c_bs;
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [2usize, 3] {
        let grid = Grid::new(d, 8, 2.0 * PI).unwrap();
        let center = grid.center();
        let phase = Complex64::from_polar(1.0, PI / 3.0);
        let profile = |i: usize| {
            let rr = grid.torus_distance(&grid.position(i), &center);
            (-rr * rr).exp()
        };
        let lq = |q: f64| (0..grid.len()).map(|i| profile(i).powf(q)).sum::<f64>().powf(1.0 / q) * grid.cell_volume().powf(1.0 / q);
        let amp = 0.5 * threshold / lq(1.5);
        let f = ScalarField::from_fn(grid, |x| phase * amp * (-grid.torus_distance(x, &center).powi(2)).exp());
        let v = MatrixPotentialField::scalar(&f);
        let h = assemble_hamiltonian(&v, &params, true).unwrap();
        let spec = eigenvalues(&h).unwrap();
        let sup = amp;
        let margin = 10.0 * sup / 8.0;
        assert!((margin - default_essential_margin(&v)).abs() <= 1e-12 * margin);
        let outside: Vec<Complex64> = spec
            .values()
            .into_iter()
            .filter(|z| !(z.im.abs() <= margin && z.re >= -margin))
            .collect();
        // γ = 1/2 with configured constant 1: radius (N^{γ+d/2})^{1/γ} with N = ‖V‖_{L^{1/2+d/2}}
        let q = 0.5 + d as f64 / 2.0;
        let norm = amp * lq(q);
        let radius = norm.powf(q).powf(2.0);
        let outside_disk = outside.iter().filter(|z| z.norm() > radius * (1.0 + DEFAULT_INFLATION)).count();
        let disk = enclosure_disk(&EnclosureSpec::new(BoundKind::Lebesgue, 0.5, d, params), norm).unwrap();
        if (disk.radius.unwrap() - radius).abs() > 1e-12 * radius.max(1e-300) {
            ok = false;
        }
        let lib = containment_check(&spec, &disk, margin, DEFAULT_INFLATION).unwrap();
        ok &= outside.is_empty() && outside_disk == 0 && lib.violation_count == 0;
        lines.push(format!(
            "d={d} dim {}: {} outside tube, {outside_disk} outside inflated disk, residual {:.1e}",
            grid.len() * d,
            outside.len(),
            spec.max_residual
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < CONTAINMENT_RUNTIME;
    let detail = format!("{}; {:.1} s", lines.join("; "), elapsed.as_secs_f64());
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Sup over dyadic cubes of `Σ_{x≠y∈Q} W(x)W(y)|x-y|^{α-d} h^{2d} / (h^d Σ_{x∈Q} W(x))`.
fn ks_brute_force(w: &[f64], grid: &Grid, alpha: f64) -> f64 {
    let d = grid.dim();
    let n = grid.n();
    let h = grid.spacing();
    let mut best = 0.0f64;
    let mut level = 0u32;
    while (1usize << level) <= n {
        let per = 1usize << level;
        let side = n / per;
        let cubes = per.pow(d as u32);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); cubes];
        for i in 0..grid.len() {
            let idx = grid.multi_index(i);
            let c = (0..d).fold(0, |acc, a| acc * per + idx[a] / side);
            members[c].push(i);
        }
        for pts in members {
            let mass: f64 = pts.iter().map(|&i| w[i]).sum();
            if mass == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for &x in &pts {
                let px = grid.position(x);
                for &y in &pts {
                    if x != y {
                        let py = grid.position(y);
                        let r: f64 = (0..d).map(|a| (px[a] - py[a]).powi(2)).sum::<f64>().sqrt();
                        s += w[x] * w[y] * r.powf(alpha - d as f64);
                    }
                }
            }
            best = best.max(s * h.powi(2 * d as i32) / (mass * h.powi(d as i32)));
        }
        level += 1;
    }
    best
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut ks_gap = 0.0f64;
    let mut ks_ok = true;
    let cases: Vec<(Grid, f64, Vec<f64>)> = vec![
        {
            let g = Grid::new(2, 16, 4.0).unwrap();
            let c = g.center();
            let w = (0..g.len()).map(|i| (-g.torus_distance(&g.position(i), &c).powi(2)).exp()).collect();
            (g, 1.0, w)
        },
        {
            let g = Grid::new(2, 8, 1.0).unwrap();
            let w = (0..g.len()).map(|_| r.random_range(0.1..2.0)).collect();
            (g, 1.5, w)
        },
        {
            let g = Grid::new(3, 8, 2.0).unwrap();
            let w = (0..g.len()).map(|_| r.random_range(0.0..1.0)).collect();
            (g, 2.0, w)
        },
    ];
    for (grid, alpha, w) in &cases {
        let field = ScalarField::from_real(*grid, w).unwrap();
        let ks = kerman_sawyer_norm(&field, *alpha, 10).unwrap().value;
        let bound = kerman_sawyer_diagonal_bound(&field, *alpha, 10).unwrap();
        let brute = ks_brute_force(w, grid, *alpha);
        let gap = ks - brute;
        ks_ok &= gap >= -1e-12 * brute && gap <= bound * (1.0 + 1e-12);
        ks_gap = ks_gap.max(gap / bound);
    }

    let (a, b) = (0.3, 5.0);
    let g = Grid::new(2, 16, 1.0).unwrap();
    let w = ScalarField::from_fn(g, |x| Complex64::new(if x[0] < 0.5 { a } else { b }, 0.0));
    let q2 = a_p_constant(&w, 2.0, 10).unwrap().value;
    let closed = (a + b) * (a + b) / (4.0 * a * b);
    let a2_err = (q2 - closed).abs();

    let mut chain_worst = 0.0f64;
    let mut holder_ok = true;
    for width in [0.3, 0.7, 1.5] {
        let grid = Grid::new(2, 32, 8.0).unwrap();
        let v = sample_potential(&PotentialSpec::GaussianScalar { amplitude: 1.0, width, center: None }, &grid).unwrap();
        let radii = grid.dyadic_radii();
        let alpha = 1.0;
        let q = 2.0 / alpha;
        let vol = PI;
        let mc1 = morrey_campanato_norm(&v, alpha, 1.0, &radii).unwrap().value;
        let mc15 = morrey_campanato_norm(&v, alpha, 1.5, &radii).unwrap().value;
        let mc2 = morrey_campanato_norm(&v, alpha, q, &radii).unwrap().value;
        holder_ok &= mc1 <= vol.powf(1.0 - 1.0 / 1.5) * mc15 * (1.0 + 1e-12);
        holder_ok &= mc15 <= vol.powf(1.0 / 1.5 - 1.0 / q) * mc2 * (1.0 + 1e-12);
        let lq = lp_norm(&v, q).unwrap().value;
        chain_worst = chain_worst.max(mc2 / lq - 1.0);
    }
    let detail = format!(
        "KS minus brute force within diagonal bound: {ks_ok} (max gap/bound {ks_gap:.3}); A_2 two-valued {q2:.12} vs {closed:.12} (err {a2_err:.1e} <= {A2_CLOSED_FORM:e}); Hölder chain exact steps {holder_ok}, MC/L^q excess {chain_worst:.4} (<= {MC_QUADRATURE_SLACK})"
    );
    if ks_ok && a2_err <= A2_CLOSED_FORM && holder_ok && chain_worst <= MC_QUADRATURE_SLACK {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let grid = Grid::new(3, 4, 2.0).unwrap();
    let params = LameParams::new(0.4, 0.9).unwrap();
    let (mut adj, mut jd, mut weak) = (0.0f64, 0.0f64, 0.0f64);
    let mut all = true;
    let mut r = rng(8);
    for seed in 0..20u64 {
        let v = sample_potential(&PotentialSpec::MatrixDenseRandom { amplitude: 1.0, seed, width: None, center: None }, &grid).unwrap();
        let rep = adjoint_symmetry_check(&v, &params).unwrap();
        adj = adj.max(rep.adjoint_defect);
        jd = jd.max(rep.j_defect);
        all &= rep.passed;
        // matrix-free: <H(V)x, y> = <x, H(V̄ᵗ)y>
        let h = assemble_hamiltonian(&v, &params, false).unwrap();
        let ha = assemble_hamiltonian(&v.adjoint(), &params, false).unwrap();
        let (x, y) = (random_field(grid, &mut r), random_field(grid, &mut r));
        let lhs = y.inner(&h.apply(&x));
        let rhs = ha.apply(&y).inner(&x);
        weak = weak.max((lhs - rhs).norm() / (x.l2_norm() * y.l2_norm()));
    }
    let detail = format!("20 potentials: adjoint {adj:.1e}, J {jd:.1e} (<= {J_SYMMETRY:e}), weak form {weak:.1e}");
    if all && adj <= J_SYMMETRY && jd <= J_SYMMETRY && weak <= J_SYMMETRY {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9() -> Outcome {
    let l = 64.0;
    let grid = Grid::new(2, 256, l).unwrap();
    let params = LameParams::new(0.5, 1.0).unwrap();
    let kappa = 2.0 * PI * 8.0 / l;
    let z = params.mu() * kappa * kappa;
    let radius = 3.5;
    let rep = weyl_residual(z, 8, WaveMode::S, radius, &params, &grid).unwrap();
    // recompute every residual from the definition
    let center = grid.center();
    let mut max_diff = 0.0f64;
    for e in &rep.entries {
        let rr = radius * e.scale as f64;
        let phi = VectorField::from_fn(grid, |x| {
            let b = smooth_bump(grid.torus_distance(x, &center), rr);
            [Complex64::new(0.0, 0.0), Complex64::from_polar(b, kappa * x[0]), Complex64::new(0.0, 0.0)]
        });
        let res = lame_apply(&phi, &params).sub(&phi.scale(Complex64::new(z, 0.0))).l2_norm() / phi.l2_norm();
        max_diff = max_diff.max((res - e.residual).abs() / res);
    }
    let residuals: Vec<f64> = rep.entries.iter().map(|e| e.residual).collect();
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    let decay = residuals[0] / residuals[residuals.len() - 1];
    let detail = format!(
        "scales {:?}: residuals {:?}, decreasing={decreasing}, decay {decay:.2}x (>= {WEYL_DECAY}x), recomputation gap {max_diff:.1e}",
        rep.entries.iter().map(|e| e.scale).collect::<Vec<_>>(),
        residuals.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
    );
    if decreasing && decay >= WEYL_DECAY && max_diff <= 1e-10 && rep.entries.len() == 4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10() -> Outcome {
    let mut cfg = RunConfig::new(Command::Verify);
    cfg.seed = 20_240_601;
    cfg.verify.suites = Suite::ALL.to_vec();
    let a = execute(&cfg).map_err(|e| e.to_string())?;
    let b = execute(&cfg).map_err(|e| e.to_string())?;
    let detail = format!("hashes {} / {}, exit codes {} / {}", &a.report_hash[..16], &b.report_hash[..16], a.exit_code, b.exit_code);
    if a.report_hash == b.report_hash && a.report == b.report && a.exit_code == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("helmholtz", criterion_1),
        ("symbol", criterion_2),
        ("resolvent", criterion_3),
        ("plane waves", criterion_4),
        ("birman-schwinger", criterion_5),
        ("containment", criterion_6),
        ("norm oracles", criterion_7),
        ("j-symmetry", criterion_8),
        ("weyl residuals", criterion_9),
        ("determinism", criterion_10),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
