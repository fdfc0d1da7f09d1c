use crate::error::{Error, Result};
use crate::hv::flow::{integrate_flow, solve_fz_given_v};
use crate::hv::newton::{self, newton_step, NewtonStep};
use crate::hv::subproblems::{level_energies, solve_f_given_v, solve_v_given_f, source_from};
use crate::hv::types::{trapezoid_weights, ComplexGridSignal, Field, GridSignal, HvParams, HvPath, HvResult};

/// How the `(f, z)` block is minimized for a fixed velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceStep {
    /// Closed-form representation along characteristics, resampled.
    Characteristic,
    /// Direct solve of the discrete least-squares problem.
    Exact,
}

/// `(action, quad_energy)` of a path.
pub fn evaluate_action(path: &HvPath, params: &HvParams) -> Result<(f64, f64)> {
    if path.n_x() != params.n_x || path.n_t() != params.n_t || path.z.rows() != path.v.rows() {
        return Err(Error::GridMismatch("path dimensions differ from parameters".into()));
    }
    let dt = params.dt();
    let e = level_energies(&path.v, &path.z, params);
    let action = 0.5 * e.iter().map(|e| e.max(0.0).sqrt()).sum::<f64>() * dt;
    let energy = e.iter().sum::<f64>() * dt;
    Ok((action, energy))
}

/// Relative energy decrease per sweep below which Newton steps take over.
const NEWTON_SWITCH: f64 = 1e-3;

fn substeps_for(v: &Field) -> usize {
    let n_t = v.rows() as f64;
    let n_x = (v.cols() - 1) as f64;
    // a characteristic crosses at most half a cell per RK4 step
    ((2.0 * v.max_abs() * n_x / n_t).ceil() as usize).clamp(1, 4096)
}

fn characteristic_path(f0: &GridSignal, f1: &GridSignal, v: &Field) -> Result<Field> {
    let mut substeps = substeps_for(v);
    let flow = loop {
        match integrate_flow(v, substeps) {
            Ok(flow) => break flow,
            Err(Error::MonotonicityLoss { .. }) if substeps < 1 << 14 => substeps *= 4,
            Err(e) => return Err(e),
        }
    };
    let (mut f, _) = solve_fz_given_v(f0, f1, &flow)?;
    let n_t = v.rows();
    f.row_mut(0).copy_from_slice(f0.values());
    f.row_mut(n_t).copy_from_slice(f1.values());
    Ok(f)
}

pub fn hv_distance(f0: &GridSignal, f1: &GridSignal, params: &HvParams) -> Result<HvResult> {
    hv_distance_with(f0, f1, params, SourceStep::Exact)
}

pub fn hv_distance_with(f0: &GridSignal, f1: &GridSignal, params: &HvParams, step: SourceStep) -> Result<HvResult> {
    params.validate()?;
    if !f0.same_grid(f1) || f0.n_x() != params.n_x {
        return Err(Error::GridMismatch(format!(
            "signals have {} and {} samples, parameters expect {}",
            f0.len(),
            f1.len(),
            params.n_x + 1
        )));
    }
    let n = params.n_x + 1;
    let n_t = params.n_t;
    let mut v = Field::zeros(n_t, n);
    let mut f = Field::from_fn(n_t + 1, n, |j, i| {
        let t = j as f64 / n_t as f64;
        let (a, b) = (f0.values()[i], f1.values()[i]);
        a + t * (b - a)
    });
    let peak = f0.values().iter().chain(f1.values()).fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-30 * (1.0 + peak * peak);
    let mut energy = newton::energy(&f, &v, params);
    let mut history = vec![energy];
    let mut converged = energy <= floor;
    let mut iterations = 0;

    let mut mu = 1e-6;
    let mut polishing = false;
    while !converged && iterations < params.max_iters {
        iterations += 1;
        let mut next = None;
        if polishing {
            match newton_step(&f, &v, energy, params, &mut mu)? {
                NewtonStep::Accepted { f: fa, v: va, energy: e } => {
                    f = fa;
                    v = va;
                    next = Some(e);
                }
                NewtonStep::Rejected => polishing = false,
            }
        }
        let next = match next {
            Some(e) => e,
            None => {
                if iterations > 1 {
                    f = match step {
                        SourceStep::Characteristic => characteristic_path(f0, f1, &v)?,
                        SourceStep::Exact => solve_f_given_v(f0.values(), f1.values(), &v)?,
                    };
                }
                v = solve_v_given_f(&f, params)?;
                newton::energy(&f, &v, params)
            }
        };
        let change = (energy - next).abs() / next.max(f64::MIN_POSITIVE);
        energy = next;
        history.push(energy);
        if change < params.tol || energy <= floor {
            converged = true;
        } else if change < NEWTON_SWITCH {
            polishing = true;
        }
    }
    let z = source_from(&f, &v);

    let path = HvPath { f, v, z };
    let (action, quad_energy) = evaluate_action(&path, params)?;
    Ok(HvResult {
        distance: action.sqrt(),
        action,
        quad_energy,
        iterations,
        converged,
        energy_history: history,
        path,
        params: *params,
    })
}

/// Gradient of `f0 ↦ d_HV²(f0, f1)` as a density on `[0, 1]`.
///
/// The first variation of the optimal quadratic energy is `-2 z(·, 0)`
/// (evaluated here on the discrete path, including the transport term of
/// the first half level); the chain rule through `d² = √E / 2` gives the
/// returned `-z(·, 0) / (2√E)`.
pub fn hv_gradient_f0(result: &HvResult) -> Vec<f64> {
    let energy_grad = energy_gradient_f0(&result.path);
    let e = result.quad_energy;
    if e <= 0.0 {
        return vec![0.0; energy_grad.len()];
    }
    let scale = 1.0 / (4.0 * e.sqrt());
    energy_grad.iter().map(|g| g * scale).collect()
}

/// Density of `∂E/∂f0` at a stationary discrete path.
pub(crate) fn energy_gradient_f0(path: &HvPath) -> Vec<f64> {
    let n = path.f.cols();
    let n_t = path.n_t();
    let dt = 1.0 / n_t as f64;
    let h = 1.0 / (n - 1) as f64;
    let omega = trapezoid_weights(n);
    let z0 = path.z.row(0);
    let v0 = path.v.row(0);
    let mut g = vec![0.0; n];
    for i in 0..n {
        let r = 2.0 * dt * omega[i] * z0[i];
        g[i] -= r / dt;
        if i > 0 && i + 1 < n && v0[i] != 0.0 {
            let c = v0[i] / (4.0 * h);
            g[i + 1] += r * c;
            g[i - 1] -= r * c;
        }
    }
    g.iter().zip(&omega).map(|(g, w)| g / w).collect()
}

/// Complex HV distance combining real and imaginary parts.
pub fn hvc_distance(
    f0: &ComplexGridSignal,
    f1: &ComplexGridSignal,
    params: &HvParams,
) -> Result<(f64, HvResult, HvResult)> {
    let re = hv_distance(&f0.re, &f1.re, params)?;
    let im = hv_distance(&f0.im, &f1.im, params)?;
    let distance = (re.action + im.action).sqrt();
    Ok((distance, re, im))
}

/// Gradient of `d_HVC²` w.r.t. the first argument: real part from the real
/// component, imaginary part from the imaginary component.
pub fn hvc_gradient_f0(re: &HvResult, im: &HvResult) -> Vec<num_complex::Complex64> {
    hv_gradient_f0(re).into_iter().zip(hv_gradient_f0(im)).map(|(a, b)| num_complex::Complex64::new(a, b)).collect()
}
