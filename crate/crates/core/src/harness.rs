//! Desk-scale experiments: misfit landscapes over constant velocity, Ricker
//! shift scans, phantom inversions and image quality scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::{forward_data, AcquisitionGeometry, PmlSpec, SourceSpectrum, VelocityModel2D};
use crate::hv::{hv_distance, GridSignal, HvParams};
use crate::inversion::{
    add_noise, fwi_invert, misfit_and_adjoint, InversionConfig, InversionReport, MisfitChoice, UpdateRegion,
};

/// One misfit curve per configuration over a shared parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub labels: Vec<String>,
    /// `curves[k][i]` is configuration `k` at `grid[i]`.
    pub curves: Vec<Vec<f64>>,
}

impl ScanResult {
    /// Comma-separated table with one column per configuration.
    pub fn to_csv(&self) -> String {
        let mut s = self.parameter.clone();
        for l in &self.labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for (i, x) in self.grid.iter().enumerate() {
            s.push_str(&format!("{x:e}"));
            for c in &self.curves {
                s.push_str(&format!(",{:e}", c[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Indices of strict interior local minima.
pub fn strict_local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1]).collect()
}

/// Indices of strict interior local maxima.
pub fn strict_local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect()
}

/// Homogeneous model with sources and receivers on a horizontal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineGeometrySpec {
    pub width_m: f64,
    pub depth_m: f64,
    pub spacing_m: f64,
    pub line_depth_m: f64,
    pub n_sources: usize,
    pub n_receivers: usize,
    pub pml_cells: usize,
}

impl LineGeometrySpec {
    /// 2 km by 1 km at 20 m, 3 sources and 101 receivers at 100 m depth.
    pub fn desk_scale() -> Self {
        Self {
            width_m: 2000.0,
            depth_m: 1000.0,
            spacing_m: 20.0,
            line_depth_m: 100.0,
            n_sources: 3,
            n_receivers: 101,
            pml_cells: 20,
        }
    }

    pub fn model(&self, speed: f64) -> Result<VelocityModel2D> {
        let nx = (self.width_m / self.spacing_m).round() as usize + 1;
        let nz = (self.depth_m / self.spacing_m).round() as usize + 1;
        VelocityModel2D::constant(nx, nz, self.spacing_m, self.spacing_m, speed)
    }

    pub fn geometry(&self) -> AcquisitionGeometry {
        let spread = |n: usize| -> Vec<(f64, f64)> {
            (0..n)
                .map(|i| {
                    let x = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
                    (x * self.width_m, self.line_depth_m)
                })
                .collect()
        };
        // sources sit inside the spread, away from the ends
        let sources = (0..self.n_sources)
            .map(|i| ((i as f64 + 0.5) / self.n_sources as f64 * self.width_m, self.line_depth_m))
            .collect();
        AcquisitionGeometry { sources, receivers: spread(self.n_receivers), spectrum: SourceSpectrum::Flat }
    }
}

/// Summed misfit of homogeneous-model data at each `c` against data at
/// `c_star`, one curve per misfit choice.
pub fn scan_constant_velocity(
    c_values: &[f64],
    c_star: f64,
    spec: &LineGeometrySpec,
    freq_hz: f64,
    metrics: &[(String, MisfitChoice)],
) -> Result<ScanResult> {
    let lo = c_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = c_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(c_star >= lo && c_star <= hi) {
        return Err(Error::param("c_star", "must lie within the scanned range"));
    }
    let geo = spec.geometry();
    let pml = PmlSpec::tuned(spec.pml_cells, c_star, spec.spacing_m);
    let reference = forward_data(&spec.model(c_star)?, &geo, &[freq_hz], pml)?;
    let per_c = crate::parallel::map_indexed(c_values.len(), |i| {
        let syn = forward_data(&spec.model(c_values[i])?, &geo, &[freq_hz], pml)?;
        metrics
            .iter()
            .map(|(_, choice)| {
                let mut total = 0.0;
                for (s, o) in syn.iter().zip(&reference) {
                    total += misfit_and_adjoint(s, o, choice)?.value;
                }
                Ok(total)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let curves = (0..metrics.len()).map(|k| per_c.iter().map(|v| v[k]).collect()).collect();
    Ok(ScanResult {
        parameter: "c".into(),
        grid: c_values.to_vec(),
        labels: metrics.iter().map(|(l, _)| l.clone()).collect(),
        curves,
    })
}

/// Ricker wavelet with peak frequency `peak` at time `t`.
pub fn ricker(t: f64, peak: f64) -> f64 {
    let a = (std::f64::consts::PI * peak * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

/// Wavelet and grid for the shift scans: `t ∈ [-1, 1]` on `n_x + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RickerScanSpec {
    pub n_x: usize,
    pub peak_hz: f64,
}

impl Default for RickerScanSpec {
    fn default() -> Self {
        Self { n_x: 200, peak_hz: 4.0 }
    }
}

/// L2 and HV curves of `f(t)` against `f(t − s)` for every shift, each
/// normalized to a maximum of one. The first curve is L2.
pub fn ricker_shift_scan(
    shifts: &[f64],
    hv_param_sets: &[(f64, f64, f64)],
    spec: &RickerScanSpec,
) -> Result<ScanResult> {
    if shifts.iter().any(|s| !s.is_finite() || s.abs() > 1.0) {
        return Err(Error::param("shifts", "must lie within the signal window"));
    }
    let n_x = spec.n_x;
    let to_t = |x: f64| 2.0 * x - 1.0;
    let f = GridSignal::from_fn(n_x, |x| ricker(to_t(x), spec.peak_hz))?;
    let shifted = |s: f64| GridSignal::from_fn(n_x, |x| ricker(to_t(x) - s, spec.peak_hz));
    let mut labels = vec!["l2".to_string()];
    let mut curves = Vec::new();
    let l2: Vec<f64> = shifts
        .iter()
        .map(|&s| {
            let g = shifted(s)?;
            let d: Vec<f64> = g.values().iter().zip(f.values()).map(|(a, b)| a - b).collect();
            Ok(GridSignal::new(d)?.l2_norm().powi(2))
        })
        .collect::<Result<_>>()?;
    curves.push(l2);
    for &(kappa, lambda, epsilon) in hv_param_sets {
        labels.push(format!("hv k={kappa:e} l={lambda:e} e={epsilon:e}"));
        let params = HvParams::for_grid(n_x).with_weights(kappa, lambda, epsilon);
        let curve =
            crate::parallel::map_indexed(shifts.len(), |i| Ok(hv_distance(&shifted(shifts[i])?, &f, &params)?.action))?;
        curves.push(curve);
    }
    for c in curves.iter_mut() {
        let peak = c.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            for v in c.iter_mut() {
                *v /= peak;
            }
        }
    }
    Ok(ScanResult { parameter: "s".into(), grid: shifts.to_vec(), labels, curves })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    /// Root mean square error in m/s.
    pub rmse: f64,
    /// Peak signal-to-noise ratio in dB, with the reference range as peak.
    pub psnr: f64,
}

/// RMSE and PSNR against a reference. A constant reference has no peak:
/// `DegenerateReference` is returned.
pub fn score(model: &VelocityModel2D, reference: &VelocityModel2D) -> Result<QualityScore> {
    if model.n_x != reference.n_x || model.n_z != reference.n_z {
        return Err(Error::GridMismatch("model and reference grids differ".into()));
    }
    let rmse = rmse(model, reference);
    let r = reference.velocities();
    let range = reference.max_speed() - reference.min_speed();
    if range == 0.0 || r.is_empty() {
        return Err(Error::DegenerateReference);
    }
    let psnr = if rmse == 0.0 { f64::INFINITY } else { 20.0 * (range / rmse).log10() };
    Ok(QualityScore { rmse, psnr })
}

pub fn rmse(model: &VelocityModel2D, reference: &VelocityModel2D) -> f64 {
    let a = model.velocities();
    let b = reference.velocities();
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Gaussian inclusion in a homogeneous square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub n: usize,
    pub spacing_m: f64,
    pub background: f64,
    /// Relative speed change at the inclusion centre.
    pub contrast: f64,
    /// Gaussian width as a fraction of the side.
    pub width: f64,
    /// Centre as fractions of the side.
    pub centre: (f64, f64),
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self { n: 64, spacing_m: 5e-4, background: 1500.0, contrast: 0.05, width: 0.12, centre: (0.55, 0.45) }
    }
}

impl PhantomSpec {
    pub fn side_m(&self) -> f64 {
        (self.n - 1) as f64 * self.spacing_m
    }

    pub fn model(&self) -> Result<VelocityModel2D> {
        let side = self.side_m();
        let (cx, cz) = (self.centre.0 * side, self.centre.1 * side);
        let w = self.width * side;
        VelocityModel2D::from_fn(self.n, self.n, self.spacing_m, self.spacing_m, |x, z| {
            let r2 = (x - cx).powi(2) + (z - cz).powi(2);
            self.background * (1.0 + self.contrast * (-r2 / (2.0 * w * w)).exp())
        })
    }

    pub fn background_model(&self) -> Result<VelocityModel2D> {
        VelocityModel2D::constant(self.n, self.n, self.spacing_m, self.spacing_m, self.background)
    }
}

/// Transducer layout around or above a phantom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryMode {
    /// Receivers along the top row, sources spread below it.
    Line { n_sources: usize, n_receivers: usize },
    /// Transducers on a circle; every `emit_every`-th one also emits.
    Ring { transducers: usize, emit_every: usize, radius_fraction: f64 },
}

impl GeometryMode {
    pub fn desk_ring() -> Self {
        GeometryMode::Ring { transducers: 32, emit_every: 4, radius_fraction: 0.45 }
    }

    /// Disk just inside the ring; `None` for a line.
    pub fn interior(&self, phantom: &PhantomSpec) -> Option<UpdateRegion> {
        match *self {
            GeometryMode::Line { .. } => None,
            GeometryMode::Ring { radius_fraction, .. } => {
                let side = phantom.side_m();
                Some(UpdateRegion::Disk {
                    center_x_m: 0.5 * side,
                    center_z_m: 0.5 * side,
                    radius_m: radius_fraction * side - 2.0 * phantom.spacing_m,
                })
            }
        }
    }

    pub fn build(&self, phantom: &PhantomSpec) -> Result<AcquisitionGeometry> {
        let side = phantom.side_m();
        let h = phantom.spacing_m;
        match *self {
            GeometryMode::Line { n_sources, n_receivers } => {
                if n_sources == 0 || n_receivers < 5 {
                    return Err(Error::param("geometry", "line needs sources and at least 5 receivers"));
                }
                let receivers =
                    (0..n_receivers).map(|i| (i as f64 / (n_receivers - 1) as f64 * side, 2.0 * h)).collect();
                let sources = (0..n_sources).map(|i| ((i as f64 + 0.5) / n_sources as f64 * side, 2.0 * h)).collect();
                Ok(AcquisitionGeometry { sources, receivers, spectrum: SourceSpectrum::Flat })
            }
            GeometryMode::Ring { transducers, emit_every, radius_fraction } => {
                if transducers < 5 || emit_every == 0 {
                    return Err(Error::param("geometry", "ring needs at least 5 transducers"));
                }
                if !(radius_fraction > 0.0 && radius_fraction < 0.5) {
                    return Err(Error::param("radius_fraction", "must lie in (0, 0.5)"));
                }
                let r = radius_fraction * side;
                let c = 0.5 * side;
                let at = |k: f64| {
                    let a = std::f64::consts::TAU * k / transducers as f64;
                    (c + r * a.cos(), c + r * a.sin())
                };
                let receivers = (0..transducers).map(|k| at(k as f64)).collect();
                // emitters sit halfway between receiving elements
                let sources = (0..transducers).step_by(emit_every).map(|k| at(k as f64 + 0.5)).collect();
                Ok(AcquisitionGeometry { sources, receivers, spectrum: SourceSpectrum::Flat })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhantomOutcome {
    pub label: String,
    pub report: InversionReport,
    pub initial: QualityScore,
    pub score: QualityScore,
}

/// Synthesizes data on the phantom, optionally adds noise, and inverts it
/// from the homogeneous background once per misfit choice.
pub fn phantom_experiment(
    phantom: &PhantomSpec,
    mode: &GeometryMode,
    config: &InversionConfig,
    metrics: &[(String, MisfitChoice)],
    snr_db: f64,
    seed: u64,
) -> Result<Vec<PhantomOutcome>> {
    let truth = phantom.model()?;
    let start = phantom.background_model()?;
    let geo = mode.build(phantom)?;
    let clean = forward_data(&truth, &geo, &config.frequency_schedule, config.pml)?;
    let observed = add_noise(&clean, snr_db, seed)?;
    let initial = score(&start, &truth)?;
    metrics
        .iter()
        .map(|(label, choice)| {
            let report = fwi_invert(&observed, &geo, &start, config, choice)?;
            let score = score(&report.final_model, &truth)?;
            Ok(PhantomOutcome { label: label.clone(), report, initial, score })
        })
        .collect()
}
