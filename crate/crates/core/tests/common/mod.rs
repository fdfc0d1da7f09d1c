#![allow(dead_code)]

pub mod fwi;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric sum on `n` nodes of `[0, 1]`.
pub fn smooth_signal(rng: &mut ChaCha8Rng, n: usize, modes: usize) -> Vec<f64> {
    let coefs: Vec<(f64, f64)> =
        (0..modes).map(|_| (rng.random_range(-0.5..0.5), rng.random_range(0.0..std::f64::consts::TAU))).collect();
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            coefs
                .iter()
                .enumerate()
                .map(|(k, (a, p))| a * ((k as f64 + 1.0) * std::f64::consts::PI * x + p).sin())
                .sum()
        })
        .collect()
}

/// Optimal transport cost `Σ π_ij |x_i − x_j|²` between two discrete
/// measures on shared support, solved as a linear program.
pub fn transport_lp(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            vars.push(lp.add_var((x[i] - x[j]).powi(2), (0.0, f64::INFINITY)));
        }
    }
    for i in 0..n {
        let row: Vec<_> = (0..n).map(|j| (vars[i * n + j], 1.0)).collect();
        lp.add_constraint(&row[..], ComparisonOp::Eq, a[i]);
    }
    for j in 0..n - 1 {
        let col: Vec<_> = (0..n).map(|i| (vars[i * n + j], 1.0)).collect();
        lp.add_constraint(&col[..], ComparisonOp::Eq, b[j]);
    }
    lp.solve().expect("transport LP is feasible").objective()
}

/// `(i/4) H₀⁽¹⁾(kr)`, the free-space 2D Green's function of `Δ + k²`.
pub fn green_2d(kr: f64) -> num_complex::Complex64 {
    let j0 = puruspe::Jn(0, kr);
    let y0 = puruspe::Yn(0, kr);
    num_complex::Complex64::new(-0.25 * y0, 0.25 * j0)
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Worst relative phase error `|Δφ|/(kr)` and amplitude error over the
/// annulus `3λ ≤ r ≤ half-width`.
pub fn free_space_errors(h: f64, pml_cells: usize) -> (f64, f64) {
    let (c, f) = (1500.0, 5.0);
    let side = 2400.0;
    let n = (side / h).round() as usize + 1;
    let model = hvfwi::helmholtz::VelocityModel2D::constant(n, n, h, h, c).unwrap();
    let omega = std::f64::consts::TAU * f;
    let sys =
        hvfwi::helmholtz::HelmholtzSystem::assemble(&model, omega, hvfwi::helmholtz::PmlSpec::tuned(pml_cells, c, h))
            .unwrap();
    let src = (side / 2.0, side / 2.0);
    let u = sys.solve_point_source(src, num_complex::Complex64::new(1.0, 0.0)).unwrap();
    let k = omega / c;
    let lambda = c / f;
    let (mut phase, mut amp) = (0.0f64, 0.0f64);
    for iz in 0..n {
        for ix in 0..n {
            let r = ((ix as f64 * h - src.0).powi(2) + (iz as f64 * h - src.1).powi(2)).sqrt();
            if r < 3.0 * lambda || r > side / 2.0 {
                continue;
            }
            let g = green_2d(k * r);
            let ratio = u.at(ix, iz) / g;
            phase = phase.max(ratio.arg().abs() / (k * r));
            amp = amp.max((ratio.norm() - 1.0).abs());
        }
    }
    (phase, amp)
}

/// Central differences of a real function of complex samples, as
/// `∂/∂Re + i ∂/∂Im` per sample.
pub fn fd_complex(
    f0: &[num_complex::Complex64],
    value: impl Fn(&[num_complex::Complex64]) -> f64,
    h: f64,
) -> Vec<num_complex::Complex64> {
    (0..f0.len())
        .map(|i| {
            let mut d = [0.0; 2];
            for (part, unit) in
                [num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(0.0, 1.0)].iter().enumerate()
            {
                let mut p = f0.to_vec();
                let mut m = f0.to_vec();
                p[i] += unit * h;
                m[i] -= unit * h;
                d[part] = (value(&p) - value(&m)) / (2.0 * h);
            }
            num_complex::Complex64::new(d[0], d[1])
        })
        .collect()
}

pub fn flat(g: &[num_complex::Complex64]) -> Vec<f64> {
    g.iter().flat_map(|c| [c.re, c.im]).collect()
}
