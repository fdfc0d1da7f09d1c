//! Damped Newton steps on the joint `(f, v)` energy.
//!
//! The alternating sweeps stall when the two blocks are strongly coupled
//! (small regularization weights). Near a minimizer the joint Hessian is
//! positive definite and a few Levenberg-damped Newton steps finish the job.

use crate::banded::SymBanded;
use crate::error::Result;
use crate::hv::subproblems::{half_level_derivatives, level_energies, source_from, velocity_operator};
use crate::hv::types::{trapezoid_weights, Field, HvParams};

struct Layout {
    n: usize,
    n_t: usize,
    block: usize,
}

impl Layout {
    fn new(n: usize, n_t: usize) -> Self {
        Self { n, n_t, block: 2 * n_t - 1 }
    }

    fn size(&self) -> usize {
        self.n * self.block
    }

    fn bandwidth(&self) -> usize {
        (3 * self.block - 1).min(self.size() - 1)
    }

    /// Unknown index of `f` at time level `j` and node `i`; `None` at the ends.
    fn f(&self, j: usize, i: usize) -> Option<usize> {
        (j > 0 && j < self.n_t).then(|| i * self.block + j - 1)
    }

    fn v(&self, j: usize, i: usize) -> usize {
        i * self.block + self.n_t - 1 + j
    }
}

pub(crate) fn energy(f: &Field, v: &Field, params: &HvParams) -> f64 {
    let z = source_from(f, v);
    level_energies(v, &z, params).iter().sum::<f64>() * params.dt()
}

/// Gradient and Hessian of the joint energy.
fn assemble(f: &Field, v: &Field, params: &HvParams, lay: &Layout) -> (Vec<f64>, SymBanded) {
    let n = lay.n;
    let n_t = lay.n_t;
    let dt = params.dt();
    let h = 1.0 / (n - 1) as f64;
    let c0 = 1.0 / (4.0 * h);
    let omega = trapezoid_weights(n);
    let (tau, w) = half_level_derivatives(f);
    let mut g = vec![0.0; lay.size()];
    let mut hess = SymBanded::zeros(lay.size(), lay.bandwidth());

    let mut terms: Vec<(usize, f64)> = Vec::with_capacity(7);
    for j in 0..n_t {
        for i in 0..n {
            let vel = v.get(j, i);
            let z = tau.get(j, i) + w.get(j, i) * vel;
            let weight = 2.0 * dt * omega[i];
            terms.clear();
            if let Some(p) = lay.f(j + 1, i) {
                terms.push((p, 1.0 / dt));
            }
            if let Some(p) = lay.f(j, i) {
                terms.push((p, -1.0 / dt));
            }
            let interior = i > 0 && i + 1 < n;
            if interior {
                for (lvl, node, s) in [(j, i + 1, 1.0), (j + 1, i + 1, 1.0), (j, i - 1, -1.0), (j + 1, i - 1, -1.0)] {
                    if let Some(p) = lay.f(lvl, node) {
                        terms.push((p, s * c0 * vel));
                    }
                }
                terms.push((lay.v(j, i), w.get(j, i)));
            }
            for (a, &(p, cp)) in terms.iter().enumerate() {
                g[p] += weight * z * cp;
                for &(q, cq) in &terms[..=a] {
                    hess.add(p, q, weight * cp * cq);
                }
            }
            if interior {
                let pv = lay.v(j, i);
                for (lvl, node, s) in [(j, i + 1, 1.0), (j + 1, i + 1, 1.0), (j, i - 1, -1.0), (j + 1, i - 1, -1.0)] {
                    if let Some(p) = lay.f(lvl, node) {
                        hess.add(pv, p, weight * z * s * c0);
                    }
                }
            }
        }
    }

    let a = velocity_operator(n - 1, params);
    let scale = 2.0 * dt * h;
    for j in 0..n_t {
        for i in 1..n - 1 {
            let p = lay.v(j, i);
            for d in 0..=2usize {
                if i < 1 + d || i - d >= n - 1 {
                    continue;
                }
                let k = i - d;
                let coef = scale * a.get(i - 1, k - 1);
                hess.add(p, lay.v(j, k), coef);
                g[p] += coef * v.get(j, k);
                if d > 0 {
                    g[lay.v(j, k)] += coef * v.get(j, i);
                }
            }
        }
        for i in [0, n - 1] {
            hess.add(lay.v(j, i), lay.v(j, i), 1.0);
        }
    }
    (g, hess)
}

/// Outcome of one damped Newton step.
pub(crate) enum NewtonStep {
    Accepted { f: Field, v: Field, energy: f64 },
    Rejected,
}

/// Tries Levenberg-damped Newton steps from `(f, v)` until one lowers the
/// energy. `mu` carries the damping between calls.
pub(crate) fn newton_step(f: &Field, v: &Field, current: f64, params: &HvParams, mu: &mut f64) -> Result<NewtonStep> {
    let lay = Layout::new(f.cols(), v.rows());
    let (g, hess) = assemble(f, v, params, &lay);
    let diag: Vec<f64> = (0..lay.size()).map(|k| hess.get(k, k)).collect();
    let floor = diag.iter().cloned().fold(0.0, f64::max) * 1e-14;
    for _ in 0..30 {
        let mut damped = hess.clone();
        for (k, d) in diag.iter().enumerate() {
            damped.add(k, k, *mu * (d + floor));
        }
        let chol = match damped.cholesky() {
            Ok(c) => c,
            Err(_) => {
                *mu = (*mu * 8.0).max(1e-10);
                continue;
            }
        };
        let mut step: Vec<f64> = g.iter().map(|g| -g).collect();
        chol.solve_in_place(&mut step);
        let mut f_new = f.clone();
        let mut v_new = v.clone();
        for i in 0..lay.n {
            for j in 1..lay.n_t {
                let p = lay.f(j, i).unwrap_or_default();
                f_new.set(j, i, f.get(j, i) + step[p]);
            }
            if i > 0 && i + 1 < lay.n {
                for j in 0..lay.n_t {
                    v_new.set(j, i, v.get(j, i) + step[lay.v(j, i)]);
                }
            }
        }
        let e = energy(&f_new, &v_new, params);
        if e.is_finite() && e <= current {
            *mu = (*mu / 4.0).max(1e-12);
            return Ok(NewtonStep::Accepted { f: f_new, v: v_new, energy: e });
        }
        *mu = (*mu * 8.0).max(1e-10);
    }
    Ok(NewtonStep::Rejected)
}
