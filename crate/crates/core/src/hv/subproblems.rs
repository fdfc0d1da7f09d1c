//! The two block minimizations of the discrete quadratic energy.
//!
//! Discretization: `f` on time levels `j = 0..=n_t`, `v` and `z` on half
//! levels. At half level `j`,
//!
//! * `τ_j = (f_{j+1} - f_j) / Δt`
//! * `w_j = D_x (f_j + f_{j+1}) / 2` (central differences, one-sided ends)
//! * `z_j = τ_j + w_j ⊙ v_j`
//!
//! and the level energy is
//! `e_j = Σ ω (κv² + z²) + λ Σ_cells Δx (Δv/Δx)² + ε Σ_interior Δx (δ²v/Δx²)²`
//! with trapezoid weights `ω`. `E = Σ_j Δt e_j`.

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::hv::types::{trapezoid_weights, Field, HvParams};

/// Central first difference with second-order one-sided ends.
pub(crate) fn central_slope(values: &[f64], out: &mut [f64]) {
    let n = values.len();
    let inv2h = 0.5 * (n - 1) as f64;
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv2h;
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv2h;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) * inv2h;
    }
}

/// `(τ, w)` on the `n_t` half levels of a path `f`.
pub fn half_level_derivatives(f: &Field) -> (Field, Field) {
    let n_t = f.rows() - 1;
    let n = f.cols();
    let dt = 1.0 / n_t as f64;
    let mut tau = Field::zeros(n_t, n);
    let mut w = Field::zeros(n_t, n);
    let mut mean = vec![0.0; n];
    for j in 0..n_t {
        let (a, b) = (f.row(j), f.row(j + 1));
        for i in 0..n {
            mean[i] = 0.5 * (a[i] + b[i]);
            tau.set(j, i, (b[i] - a[i]) / dt);
        }
        central_slope(&mean, w.row_mut(j));
    }
    (tau, w)
}

/// Vertical source `z = τ + w v` implied by the discrete transport equation.
pub fn source_from(f: &Field, v: &Field) -> Field {
    let (tau, w) = half_level_derivatives(f);
    Field::from_fn(v.rows(), v.cols(), |j, i| tau.get(j, i) + w.get(j, i) * v.get(j, i))
}

/// Velocity part of the level energy.
pub(crate) fn regularizer(v: &[f64], params: &HvParams) -> f64 {
    let n = v.len();
    let h = 1.0 / (n - 1) as f64;
    let omega = trapezoid_weights(n);
    let mass: f64 = v.iter().zip(&omega).map(|(v, w)| w * v * v).sum();
    let slope: f64 = v.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / h;
    let curv: f64 = v.windows(3).map(|p| (p[2] - 2.0 * p[1] + p[0]).powi(2)).sum::<f64>() / (h * h * h);
    params.kappa * mass + params.lambda * slope + params.epsilon * curv
}

/// `e_j` for every half level.
pub(crate) fn level_energies(v: &Field, z: &Field, params: &HvParams) -> Vec<f64> {
    let omega = trapezoid_weights(v.cols());
    (0..v.rows())
        .map(|j| {
            let zz: f64 = z.row(j).iter().zip(&omega).map(|(z, w)| w * z * z).sum();
            regularizer(v.row(j), params) + zz
        })
        .collect()
}

/// Regularizer matrix `A` (divided by Δx) on the interior nodes:
/// `κ I + λ D₁ᵀD₁/Δx² + ε D₂ᵀD₂/Δx⁴` with `v = 0` at the walls. The
/// curvature rows reproduce the ghost-point closure `v_xx = 0`.
pub(crate) fn velocity_operator(n_x: usize, params: &HvParams) -> SymBanded {
    let m = n_x - 1;
    let h = 1.0 / n_x as f64;
    let mut a = SymBanded::zeros(m, 2);
    let lam = params.lambda / (h * h);
    let eps = params.epsilon / (h * h * h * h);
    for k in 0..m {
        a.add(k, k, params.kappa);
    }
    // cells (i, i+1) for nodes i = 0..n_x-1; interior node i maps to k = i-1
    for i in 0..n_x {
        let ends = [i, i + 1];
        let coef = [-1.0, 1.0];
        for p in 0..2 {
            for q in 0..=p {
                let (np, nq) = (ends[p], ends[q]);
                if np == 0 || np == n_x || nq == 0 || nq == n_x {
                    continue;
                }
                a.add(np - 1, nq - 1, lam * coef[p] * coef[q]);
            }
        }
    }
    // second differences centred at interior nodes
    for c in 1..n_x {
        let nodes = [c - 1, c, c + 1];
        let coef = [1.0, -2.0, 1.0];
        for p in 0..3 {
            for q in 0..=p {
                let (np, nq) = (nodes[p], nodes[q]);
                if np == 0 || np == n_x || nq == 0 || nq == n_x {
                    continue;
                }
                a.add(np - 1, nq - 1, eps * coef[p] * coef[q]);
            }
        }
    }
    a
}

/// Solves `(A + diag(w⊙w)) v = -τ⊙w` on one level; returns all `n_x + 1`
/// nodal values with zeros at the walls.
pub fn solve_v_level(w: &[f64], tau: &[f64], params: &HvParams) -> Result<Vec<f64>> {
    let n = w.len();
    if tau.len() != n || n < 5 {
        return Err(Error::GridMismatch("w and τ must share a grid of at least 5 nodes".into()));
    }
    let mut a = velocity_operator(n - 1, params);
    solve_with_operator(&mut a, w, tau)
}

fn solve_with_operator(a: &mut SymBanded, w: &[f64], tau: &[f64]) -> Result<Vec<f64>> {
    let n = w.len();
    let mut rhs = vec![0.0; n - 2];
    for k in 0..n - 2 {
        let i = k + 1;
        a.add(k, k, w[i] * w[i]);
        rhs[k] = -tau[i] * w[i];
    }
    if rhs.iter().all(|&r| r == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let chol = a.clone().cholesky()?;
    chol.solve_in_place(&mut rhs);
    let mut v = vec![0.0; n];
    v[1..n - 1].copy_from_slice(&rhs);
    Ok(v)
}

/// Minimizes the energy over `v` for a fixed path `f` (one banded solve per
/// half level).
pub fn solve_v_given_f(f: &Field, params: &HvParams) -> Result<Field> {
    if f.cols() != params.n_x + 1 || f.rows() != params.n_t + 1 {
        return Err(Error::GridMismatch(format!(
            "path is {}x{}, parameters expect {}x{}",
            f.rows(),
            f.cols(),
            params.n_t + 1,
            params.n_x + 1
        )));
    }
    if f.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::param("f", "path must be finite"));
    }
    let (tau, w) = half_level_derivatives(f);
    let base = velocity_operator(params.n_x, params);
    let mut v = Field::zeros(params.n_t, params.n_x + 1);
    for j in 0..params.n_t {
        let mut a = base.clone();
        let row = solve_with_operator(&mut a, w.row(j), tau.row(j))?;
        v.row_mut(j).copy_from_slice(&row);
    }
    Ok(v)
}

/// Exact minimizer of `Σ_j Δt Σ_i ω_i z_{j,i}²` over the interior time levels
/// of `f` for a fixed velocity, with `f_0` and `f_{n_t}` held.
///
/// Unknowns are ordered space-major so the normal matrix is banded with
/// half-bandwidth `2(n_t - 1) + 1`.
pub fn solve_f_given_v(f0: &[f64], f1: &[f64], v: &Field) -> Result<Field> {
    let n_t = v.rows();
    let n = v.cols();
    let dt = 1.0 / n_t as f64;
    let h = 1.0 / (n - 1) as f64;
    let omega = trapezoid_weights(n);
    let mut f = Field::zeros(n_t + 1, n);
    f.row_mut(0).copy_from_slice(f0);
    f.row_mut(n_t).copy_from_slice(f1);
    if n_t == 1 {
        return Ok(f);
    }
    let levels = n_t - 1;
    let unknown = |i: usize, j: usize| i * levels + (j - 1);
    let bw = 2 * levels + 1;
    let mut a = SymBanded::zeros(n * levels, bw.min(n * levels - 1));
    let mut rhs = vec![0.0; n * levels];

    let mut terms: Vec<(usize, usize, f64)> = Vec::with_capacity(6);
    for j in 0..n_t {
        for i in 0..n {
            terms.clear();
            terms.push((j + 1, i, 1.0 / dt));
            terms.push((j, i, -1.0 / dt));
            let vel = v.get(j, i);
            if vel != 0.0 && i > 0 && i + 1 < n {
                let c = vel / (4.0 * h);
                terms.push((j, i + 1, c));
                terms.push((j + 1, i + 1, c));
                terms.push((j, i - 1, -c));
                terms.push((j + 1, i - 1, -c));
            }
            let weight = dt * omega[i];
            let mut known = 0.0;
            for &(tj, ti, c) in &terms {
                if tj == 0 {
                    known += c * f0[ti];
                } else if tj == n_t {
                    known += c * f1[ti];
                }
            }
            for (p, &(pj, pi, cp)) in terms.iter().enumerate() {
                if pj == 0 || pj == n_t {
                    continue;
                }
                let gp = unknown(pi, pj);
                rhs[gp] -= weight * cp * known;
                for &(qj, qi, cq) in &terms[..=p] {
                    if qj == 0 || qj == n_t {
                        continue;
                    }
                    a.add(gp, unknown(qi, qj), weight * cp * cq);
                }
            }
        }
    }
    let chol = a.cholesky()?;
    chol.solve_in_place(&mut rhs);
    for i in 0..n {
        for j in 1..n_t {
            f.set(j, i, rhs[unknown(i, j)]);
        }
    }
    Ok(f)
}
