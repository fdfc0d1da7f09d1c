//! Baseline misfits: least squares and the quadratic Wasserstein distance
//! between linearly normalized signals.
//!
//! A signal sampled at `n` uniform nodes of `[0, 1]` becomes a discrete
//! measure with an atom at every node, of mass `ω_i T(f_i) / ⟨T(f)⟩`, where
//! `ω` are the trapezoid weights and `T(f) = f + β`. The 1D optimal coupling
//! is monotone, so `W2²` is integrated exactly over the merged quantile
//! breakpoints of the two measures.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hv::trapezoid_weights;

pub const DEFAULT_BETA_MARGIN: f64 = 0.1;

/// A signal turned into a probability measure by `T(f) = f + β`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDensity {
    /// `T(f) / ⟨T(f)⟩` at the nodes; integrates to one with trapezoid weights.
    pub pdf: Vec<f64>,
    /// Cumulative atom masses; `cdf[k]` is the mass of nodes `0..=k`.
    pub cdf: Vec<f64>,
    pub shift_beta: f64,
    /// `⟨T(f)⟩` before division.
    pub mass: f64,
}

impl NormalizedDensity {
    pub fn len(&self) -> usize {
        self.pdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pdf.is_empty()
    }

    /// Atom masses `ω_i pdf_i`.
    pub fn masses(&self) -> Vec<f64> {
        let w = trapezoid_weights(self.pdf.len());
        self.pdf.iter().zip(&w).map(|(p, w)| p * w).collect()
    }
}

/// Real and imaginary contributions of a complex W2 misfit.
#[derive(Debug, Clone, PartialEq)]
pub struct W2Eval {
    pub value: f64,
    /// Per-sample gradient with respect to the first signal: the real part
    /// is `∂/∂Re f0_i`, the imaginary part `∂/∂Im f0_i`.
    pub gradient: Vec<Complex64>,
}

/// Shift `β = max(0, -min) + margin · max|f|`, taken over all given signals.
/// All-zero input uses unit amplitude so the result is the uniform density.
pub fn linear_shift(signals: &[&[f64]], beta_margin: f64) -> f64 {
    let mut lo = f64::INFINITY;
    let mut amp = 0.0f64;
    for s in signals {
        for &v in s.iter() {
            lo = lo.min(v);
            amp = amp.max(v.abs());
        }
    }
    if amp == 0.0 {
        amp = 1.0;
    }
    (-lo).max(0.0) + beta_margin * amp
}

/// Normalizes one signal with its own shift.
pub fn normalize_linear(f: &[f64], beta_margin: f64) -> Result<NormalizedDensity> {
    normalize_with_shift(f, linear_shift(&[f], beta_margin))
}

/// Normalizes a pair with a common shift.
pub fn normalize_pair(f0: &[f64], f1: &[f64], beta_margin: f64) -> Result<(NormalizedDensity, NormalizedDensity)> {
    let beta = linear_shift(&[f0, f1], beta_margin);
    Ok((normalize_with_shift(f0, beta)?, normalize_with_shift(f1, beta)?))
}

pub fn normalize_with_shift(f: &[f64], beta: f64) -> Result<NormalizedDensity> {
    if f.len() < 2 {
        return Err(Error::param("f", "needs at least 2 samples"));
    }
    if f.iter().any(|v| !v.is_finite()) || !beta.is_finite() {
        return Err(Error::param("f", "samples must be finite"));
    }
    let w = trapezoid_weights(f.len());
    let shifted: Vec<f64> = f.iter().map(|v| v + beta).collect();
    if shifted.iter().any(|&v| v < 0.0) {
        return Err(Error::param("beta", "shift leaves negative samples"));
    }
    let mass: f64 = shifted.iter().zip(&w).map(|(v, w)| v * w).sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass { mass });
    }
    let pdf: Vec<f64> = shifted.iter().map(|v| v / mass).collect();
    let mut cdf = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    for (p, w) in pdf.iter().zip(&w) {
        acc += p * w;
        cdf.push(acc);
    }
    let total = acc;
    for c in cdf.iter_mut() {
        *c /= total;
    }
    Ok(NormalizedDensity { pdf, cdf, shift_beta: beta, mass })
}

fn node(i: usize, n: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

/// Left-most node whose cumulative mass reaches `s`.
fn quantile_index(cdf: &[f64], s: f64) -> usize {
    cdf.partition_point(|&c| c < s).min(cdf.len() - 1)
}

fn check_grids(p: &NormalizedDensity, q: &NormalizedDensity) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::GridMismatch(format!("densities have {} and {} nodes", p.len(), q.len())));
    }
    Ok(())
}

/// `∫₀¹ |F⁻¹(s) − G⁻¹(s)|² ds`.
pub fn w2_distance_1d(p: &NormalizedDensity, q: &NormalizedDensity) -> Result<f64> {
    check_grids(p, q)?;
    let n = p.len();
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    let mut total = 0.0;
    while i < n && j < n {
        let next = p.cdf[i].min(q.cdf[j]);
        let d = node(i, n) - node(j, n);
        total += d * d * (next - s).max(0.0);
        s = next;
        if p.cdf[i] <= next {
            i += 1;
        }
        if q.cdf[j] <= next {
            j += 1;
        }
    }
    Ok(total)
}

/// Monotone map `G⁻¹(F(x))` at the nodes.
pub fn optimal_map(p: &NormalizedDensity, q: &NormalizedDensity) -> Result<Vec<f64>> {
    check_grids(p, q)?;
    let n = p.len();
    Ok(p.cdf.iter().map(|&s| node(quantile_index(&q.cdf, s), n)).collect())
}

/// `∂W2²/∂m_i` for the atom masses of `p`, up to an additive constant.
fn mass_potential(p: &NormalizedDensity, q: &NormalizedDensity) -> Vec<f64> {
    let n = p.len();
    let mut phi = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n - 1).rev() {
        let s = p.cdf[k];
        let j = quantile_index(&q.cdf, s);
        let jump = |y: f64| (node(k, n) - y).powi(2) - (node(k + 1, n) - y).powi(2);
        // at a shared breakpoint take the midpoint of the one-sided derivatives
        acc += if j + 1 < n && (q.cdf[j] - s).abs() <= 1e-14 {
            0.5 * (jump(node(j, n)) + jump(node(j + 1, n)))
        } else {
            jump(node(j, n))
        };
        phi[k] = acc;
    }
    phi
}

/// `∂ value / ∂ β` through both normalizations.
fn shift_sensitivity(p: &NormalizedDensity, phi: &[f64], q: &NormalizedDensity, psi: &[f64]) -> f64 {
    let w = trapezoid_weights(p.len());
    let part = |d: &NormalizedDensity, pot: &[f64]| -> f64 {
        pot.iter().zip(&w).zip(&d.pdf).map(|((u, w), pdf)| u * (w - w * pdf)).sum::<f64>() / d.mass
    };
    part(p, phi) + part(q, psi)
}

/// Squared W2 between shared-shift normalizations of two real signals and
/// its gradient with respect to `f0`.
pub fn w2_misfit_real(f0: &[f64], f1: &[f64], beta_margin: f64) -> Result<(f64, Vec<f64>)> {
    if f0.len() != f1.len() {
        return Err(Error::GridMismatch(format!("signals have {} and {} samples", f0.len(), f1.len())));
    }
    let (p, q) = normalize_pair(f0, f1, beta_margin)?;
    let value = w2_distance_1d(&p, &q)?;
    let n = p.len();
    let w = trapezoid_weights(n);
    let phi = mass_potential(&p, &q);
    let psi = mass_potential(&q, &p);
    let mean: f64 = phi.iter().zip(p.masses()).map(|(u, m)| u * m).sum();
    let mut grad: Vec<f64> = (0..n).map(|j| w[j] / p.mass * (phi[j] - mean)).collect();

    // β moves with the minimum and the peak amplitude of the pair
    let d_beta = shift_sensitivity(&p, &phi, &q, &psi);
    if d_beta != 0.0 {
        let pair = f0.iter().chain(f1);
        let (mut lo, mut lo_at) = (f64::INFINITY, 0);
        let (mut amp, mut amp_at) = (-1.0, 0);
        for (k, &v) in pair.enumerate() {
            if v < lo {
                lo = v;
                lo_at = k;
            }
            if v.abs() > amp {
                amp = v.abs();
                amp_at = k;
            }
        }
        if lo < 0.0 && lo_at < n {
            grad[lo_at] -= d_beta;
        }
        if amp > 0.0 && amp_at < n {
            grad[amp_at] += d_beta * beta_margin * f0[amp_at].signum();
        }
    }
    Ok((value, grad))
}

/// `W2²` of the real parts plus `W2²` of the imaginary parts.
pub fn w2_misfit_complex(f0: &[Complex64], f1: &[Complex64], beta_margin: f64) -> Result<W2Eval> {
    if f0.len() != f1.len() || f0.len() < 5 {
        return Err(Error::GridMismatch(format!(
            "signals need equal lengths of at least 5 (got {} and {})",
            f0.len(),
            f1.len()
        )));
    }
    let split = |f: &[Complex64]| -> (Vec<f64>, Vec<f64>) {
        (f.iter().map(|c| c.re).collect(), f.iter().map(|c| c.im).collect())
    };
    let (a_re, a_im) = split(f0);
    let (b_re, b_im) = split(f1);
    let (v_re, g_re) = w2_misfit_real(&a_re, &b_re, beta_margin)?;
    let (v_im, g_im) = if a_im.iter().chain(&b_im).all(|&v| v == 0.0) {
        (0.0, vec![0.0; f0.len()])
    } else {
        w2_misfit_real(&a_im, &b_im, beta_margin)?
    };
    Ok(W2Eval { value: v_re + v_im, gradient: g_re.into_iter().zip(g_im).map(|(r, i)| Complex64::new(r, i)).collect() })
}

/// `½ Σ ω |f0 − f1|²` and its per-sample gradient `ω (f0 − f1)`.
pub fn l2_misfit_complex(f0: &[Complex64], f1: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    if f0.len() != f1.len() || f0.len() < 2 {
        return Err(Error::GridMismatch(format!(
            "signals need equal lengths of at least 2 (got {} and {})",
            f0.len(),
            f1.len()
        )));
    }
    let w = trapezoid_weights(f0.len());
    let mut value = 0.0;
    let grad = f0
        .iter()
        .zip(f1)
        .zip(&w)
        .map(|((a, b), w)| {
            let d = a - b;
            value += 0.5 * w * d.norm_sqr();
            d * *w
        })
        .collect();
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pair_from_zero_signals() {
        let (p, q) = normalize_pair(&[0.0; 8], &[0.0; 8], 0.1).unwrap();
        assert!(matches!(normalize_with_shift(&[0.0; 8], 0.0), Err(Error::ZeroMass { .. })));
        assert_eq!(p, q);
        assert!(p.pdf.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!((p.cdf[7] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonnegative_signal_without_shift() {
        let f: Vec<f64> = (0..9).map(|i| 1.0 + (i as f64).sin().abs()).collect();
        let p = normalize_with_shift(&f, 0.0).unwrap();
        let w = trapezoid_weights(9);
        let integral: f64 = p.pdf.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((integral - 1.0).abs() < 1e-14);
    }

    #[test]
    fn point_masses_move_by_their_offset() {
        let mut a = vec![0.0; 11];
        let mut b = vec![0.0; 11];
        a[3] = 1.0;
        b[7] = 1.0;
        let p = normalize_with_shift(&a, 0.0).unwrap();
        let q = normalize_with_shift(&b, 0.0).unwrap();
        let w2 = w2_distance_1d(&p, &q).unwrap();
        assert!((w2 - 0.16).abs() < 1e-14);
        assert_eq!(optimal_map(&p, &q).unwrap()[3], 0.7);
    }

    #[test]
    fn l2_of_constant_offset() {
        let a = vec![Complex64::new(1.0, 2.0); 17];
        let b = vec![Complex64::new(0.0, 0.0); 17];
        let (v, g) = l2_misfit_complex(&a, &b).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
        assert!((g[3] - Complex64::new(1.0, 2.0) / 16.0).norm() < 1e-15);
    }
}
