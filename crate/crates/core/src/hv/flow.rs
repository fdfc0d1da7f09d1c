//! Characteristics of the velocity field and the closed-form `(f, z)`
//! representation along them.

use crate::error::{Error, Result};
use crate::hv::types::{Field, GridSignal};

/// Flow of a velocity field sampled at the start of every characteristic.
///
/// All arrays are indexed `[space node][time level]`, with `n_x + 1` nodes
/// and `n_t + 1` levels.
#[derive(Debug, Clone)]
pub struct FlowMap {
    /// `Φ(x_i, t_j)`
    pub phi: Field,
    /// `J(x_i, t_j) = exp(-∫₀ᵗ v_x(Φ(x_i, s), s) ds)`
    pub jac: Field,
    /// Normalized running integral of `J` in time, from 0 to 1.
    pub eta: Field,
}

impl FlowMap {
    pub fn n_x(&self) -> usize {
        self.phi.rows() - 1
    }

    pub fn n_t(&self) -> usize {
        self.phi.cols() - 1
    }
}

/// Piecewise-linear interpolant of nodal values on `[0, 1]`, plus its slope.
#[inline]
fn sample(values: &[f64], x: f64) -> (f64, f64) {
    let n_x = values.len() - 1;
    let h = 1.0 / n_x as f64;
    let s = (x.clamp(0.0, 1.0)) * n_x as f64;
    let k = (s.floor() as usize).min(n_x - 1);
    let theta = s - k as f64;
    let a = values[k];
    let b = values[k + 1];
    (a + theta * (b - a), (b - a) / h)
}

/// Value of the nodal interpolant of `values` at `x` in `[0, 1]`.
pub(crate) fn interp_unit(values: &[f64], x: f64) -> f64 {
    sample(values, x).0
}

/// Integrates `dΦ/dt = v(Φ, t)`, `Φ(x, 0) = x` with classical RK4.
///
/// `v` has one row per time interval (the field is held constant within an
/// interval) and `n_x + 1` columns with zero end values. Each interval is
/// split into `n_substeps` RK4 steps; `log J` is advanced with the same
/// stages.
pub fn integrate_flow(v: &Field, n_substeps: usize) -> Result<FlowMap> {
    if n_substeps == 0 {
        return Err(Error::param("n_substeps", "must be at least 1"));
    }
    let n_t = v.rows();
    let n = v.cols();
    if n < 3 || n_t == 0 {
        return Err(Error::param("v", "velocity field is too small"));
    }
    for j in 0..n_t {
        let row = v.row(j);
        if row[0] != 0.0 || row[n - 1] != 0.0 {
            return Err(Error::param("v", "velocity must vanish at both ends"));
        }
    }
    let dt = 1.0 / n_t as f64;
    let h = dt / n_substeps as f64;
    let mut phi = Field::zeros(n, n_t + 1);
    let mut jac = Field::zeros(n, n_t + 1);
    let mut eta = Field::zeros(n, n_t + 1);
    let x_step = 1.0 / (n - 1) as f64;

    for i in 0..n {
        let mut x = i as f64 * x_step;
        let mut log_j = 0.0;
        phi.set(i, 0, x);
        jac.set(i, 0, 1.0);
        if i == 0 || i == n - 1 {
            // v vanishes at the walls, so boundary characteristics stay put.
            for j in 1..=n_t {
                phi.set(i, j, x);
                jac.set(i, j, 1.0);
            }
            continue;
        }
        for j in 0..n_t {
            let vel = v.row(j);
            for _ in 0..n_substeps {
                let (k1, d1) = sample(vel, x);
                let (k2, d2) = sample(vel, x + 0.5 * h * k1);
                let (k3, d3) = sample(vel, x + 0.5 * h * k2);
                let (k4, d4) = sample(vel, x + h * k3);
                x = (x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
                log_j -= h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
            }
            phi.set(i, j + 1, x);
            jac.set(i, j + 1, log_j.exp());
        }
    }

    for j in 1..=n_t {
        for i in 1..n {
            if !(phi.get(i, j) > phi.get(i - 1, j)) {
                return Err(Error::MonotonicityLoss { time_level: j });
            }
        }
    }

    // left-rectangle quadrature of J in time
    for i in 0..n {
        let total: f64 = (0..n_t).map(|m| jac.get(i, m)).sum::<f64>() * dt;
        let mut running = 0.0;
        eta.set(i, 0, 0.0);
        for j in 1..=n_t {
            running += jac.get(i, j - 1) * dt;
            eta.set(i, j, if j == n_t { 1.0 } else { running / total });
        }
    }
    Ok(FlowMap { phi, jac, eta })
}

/// Linear interpolation of `(xs, ys)` (with `xs` strictly increasing and
/// spanning `[0, 1]`) onto the uniform nodes, written into `out`.
fn resample_uniform(xs: &[f64], ys: &[f64], out: &mut [f64]) {
    let n = out.len();
    let h = 1.0 / (n - 1) as f64;
    let mut k = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let x = i as f64 * h;
        while k + 2 < xs.len() && xs[k + 1] < x {
            k += 1;
        }
        let (x0, x1) = (xs[k], xs[k + 1]);
        let theta = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        *o = ys[k] + theta * (ys[k + 1] - ys[k]);
    }
}

/// Closed-form minimizer of `∬ z²` for a fixed velocity, resampled to the
/// uniform grid on every time level.
///
/// Returns `(f, z)`, both with `n_t + 1` rows (time levels) and `n_x + 1`
/// columns.
pub fn solve_fz_given_v(f0: &GridSignal, f1: &GridSignal, flow: &FlowMap) -> Result<(Field, Field)> {
    let n = f0.len();
    if f1.len() != n || flow.phi.rows() != n {
        return Err(Error::GridMismatch(format!(
            "signals have {} and {} samples, flow has {} nodes",
            n,
            f1.len(),
            flow.phi.rows()
        )));
    }
    let n_t = flow.n_t();
    let dt = 1.0 / n_t as f64;
    let f0v = f0.values();
    let f1v = f1.values();

    // Lagrangian values: row j holds samples at positions Φ(·, t_j).
    let mut f_lag = Field::zeros(n_t + 1, n);
    let mut z_lag = Field::zeros(n_t + 1, n);
    let mut pos = Field::zeros(n_t + 1, n);
    for i in 0..n {
        let target = interp_unit(f1v, flow.phi.get(i, n_t));
        let jump = target - f0v[i];
        let total: f64 = (0..n_t).map(|m| flow.jac.get(i, m)).sum::<f64>() * dt;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateFlow { node: i });
        }
        for j in 0..=n_t {
            let eta = flow.eta.get(i, j);
            f_lag.set(j, i, (1.0 - eta) * f0v[i] + eta * target);
            z_lag.set(j, i, jump * flow.jac.get(i, j) / total);
            pos.set(j, i, flow.phi.get(i, j));
        }
    }

    let mut f = Field::zeros(n_t + 1, n);
    let mut z = Field::zeros(n_t + 1, n);
    for j in 0..=n_t {
        resample_uniform(pos.row(j), f_lag.row(j), f.row_mut(j));
        resample_uniform(pos.row(j), z_lag.row(j), z.row_mut(j));
    }
    Ok((f, z))
}
