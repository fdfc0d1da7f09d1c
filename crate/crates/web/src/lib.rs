//! Browser bindings: HV against L2 and W2 on shifted wavelets, a shift
//! scan, and a monochromatic wavefield through the phantom.

use hvfwi::harness::{ricker, ricker_shift_scan, PhantomSpec, RickerScanSpec};
use hvfwi::helmholtz::{HelmholtzSystem, PmlSpec};
use hvfwi::hv::{hv_distance, GridSignal, HvParams};
use hvfwi::ot::{w2_misfit_real, DEFAULT_BETA_MARGIN};
use hvfwi::Complex64;
use wasm_bindgen::prelude::*;

fn js(e: hvfwi::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn wavelet(n_x: usize, peak_hz: f64, shift: f64) -> Result<GridSignal, JsError> {
    GridSignal::from_fn(n_x, |x| ricker(2.0 * x - 1.0 - shift, peak_hz)).map_err(js)
}

/// `[hv, l2, w2, iterations, converged]` for a wavelet against its shifted copy.
#[wasm_bindgen]
pub fn compare_shift(shift: f64, kappa: f64, lambda: f64, epsilon: f64, n_x: usize) -> Result<Vec<f64>, JsError> {
    let peak = RickerScanSpec::default().peak_hz;
    let f = wavelet(n_x, peak, 0.0)?;
    let g = wavelet(n_x, peak, shift)?;
    let params = HvParams::for_grid(n_x).with_weights(kappa, lambda, epsilon);
    let hv = hv_distance(&g, &f, &params).map_err(js)?;
    let l2 = g.values().iter().zip(f.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / (n_x as f64).sqrt();
    let (w2_sq, _) = w2_misfit_real(g.values(), f.values(), DEFAULT_BETA_MARGIN).map_err(js)?;
    Ok(vec![hv.distance, l2, w2_sq.sqrt(), hv.iterations as f64, hv.converged as u8 as f64])
}

/// Shifts followed by the normalized L2 and HV curves, `points` values each.
#[wasm_bindgen]
pub fn shift_scan(points: usize, kappa: f64, lambda: f64, epsilon: f64, n_x: usize) -> Result<Vec<f64>, JsError> {
    if points < 2 {
        return Err(JsError::new("need at least two shifts"));
    }
    let shifts: Vec<f64> = (0..points).map(|i| -0.5 + i as f64 / (points - 1) as f64).collect();
    let spec = RickerScanSpec { n_x, ..RickerScanSpec::default() };
    let scan = ricker_shift_scan(&shifts, &[(kappa, lambda, epsilon)], &spec).map_err(js)?;
    let mut out = shifts;
    for c in &scan.curves {
        out.extend_from_slice(c);
    }
    Ok(out)
}

/// Real part of the field of a point source at the left edge of a
/// phantom, row-major over the `n × n` grid and scaled to `[-1, 1]`.
#[wasm_bindgen]
pub fn phantom_wavefield(n: usize, freq_hz: f64, contrast: f64) -> Result<Vec<f64>, JsError> {
    let phantom = PhantomSpec { n, contrast, ..PhantomSpec::default() };
    let model = phantom.model().map_err(js)?;
    let pml = PmlSpec::tuned(10, phantom.background, phantom.spacing_m);
    let omega = std::f64::consts::TAU * freq_hz;
    let system = HelmholtzSystem::assemble(&model, omega, pml).map_err(js)?;
    let side = phantom.side_m();
    let field = system.solve_point_source((0.1 * side, 0.5 * side), Complex64::new(1.0, 0.0)).map_err(js)?;
    let values = field.physical();
    let peak = values.iter().map(|u| u.re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    Ok(values.iter().map(|u| u.re / peak).collect())
}
