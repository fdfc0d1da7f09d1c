//! Adjoint-state frequency-domain FWI with selectable misfit, projected
//! L-BFGS and frequency marching.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::{AcquisitionGeometry, FrequencyGather, HelmholtzSystem, PmlSpec, VelocityModel2D, Wavefield};
use crate::hv::{hvc_distance, hvc_gradient_f0, trapezoid_weights, ComplexGridSignal, HvParams};
use crate::ot::{l2_misfit_complex, w2_misfit_complex, DEFAULT_BETA_MARGIN};

/// Metric comparing a synthetic gather with an observed one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case", deny_unknown_fields)]
pub enum MisfitChoice {
    L2,
    /// `n_x` is taken from the receiver count; the other fields are used as given.
    Hv {
        params: HvParams,
    },
    W2 {
        beta_margin: f64,
    },
}

impl MisfitChoice {
    pub fn hv_default() -> Self {
        MisfitChoice::Hv { params: HvParams::for_grid(4) }
    }

    pub fn w2_default() -> Self {
        MisfitChoice::W2 { beta_margin: DEFAULT_BETA_MARGIN }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MisfitChoice::L2 => "l2",
            MisfitChoice::Hv { .. } => "hv",
            MisfitChoice::W2 { .. } => "w2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisfitEval {
    pub value: f64,
    /// `∂D/∂Re u_r + i ∂D/∂Im u_r` per receiver.
    pub adjoint_sources: Vec<Complex64>,
    /// False when the HV solver hit its iteration cap.
    pub converged: bool,
}

/// Misfit of one gather over the receiver axis mapped to `[0, 1]`, with its
/// gradient with respect to the synthetic samples.
pub fn misfit_and_adjoint(syn: &FrequencyGather, obs: &FrequencyGather, choice: &MisfitChoice) -> Result<MisfitEval> {
    if syn.data.len() != obs.data.len() {
        return Err(Error::MismatchedGeometry(format!(
            "synthetic gather has {} receivers, observed {}",
            syn.data.len(),
            obs.data.len()
        )));
    }
    match choice {
        MisfitChoice::L2 => {
            let (value, adjoint_sources) = l2_misfit_complex(&syn.data, &obs.data)?;
            Ok(MisfitEval { value, adjoint_sources, converged: true })
        }
        MisfitChoice::W2 { beta_margin } => {
            let w = w2_misfit_complex(&syn.data, &obs.data, *beta_margin)?;
            Ok(MisfitEval { value: w.value, adjoint_sources: w.gradient, converged: true })
        }
        MisfitChoice::Hv { params } => {
            let n = syn.data.len();
            let mut p = *params;
            p.n_x = n - 1;
            let f0 = ComplexGridSignal::from_complex(&syn.data)?;
            let f1 = ComplexGridSignal::from_complex(&obs.data)?;
            let (_, re, im) = hvc_distance(&f0, &f1, &p)?;
            let w = trapezoid_weights(n);
            let adjoint_sources = hvc_gradient_f0(&re, &im).into_iter().zip(&w).map(|(g, w)| g * *w).collect();
            Ok(MisfitEval { value: re.action + im.action, adjoint_sources, converged: re.converged && im.converged })
        }
    }
}

/// Adjoint field driven by `adjoint_sources` at the receivers.
pub fn solve_adjoint(
    system: &HelmholtzSystem,
    adjoint_sources: &[Complex64],
    receivers: &[(f64, f64)],
) -> Result<Wavefield> {
    if adjoint_sources.len() != receivers.len() {
        return Err(Error::MismatchedGeometry(format!(
            "{} adjoint sources for {} receivers",
            adjoint_sources.len(),
            receivers.len()
        )));
    }
    let inj: Vec<_> = receivers.iter().copied().zip(adjoint_sources.iter().copied()).collect();
    system.solve_adjoint_sources(&inj)
}

/// Misfit gradient with respect to the speed of every cell, summed over
/// sources in order.
pub fn assemble_gradient(system: &HelmholtzSystem, forward: &[Wavefield], adjoint: &[Wavefield]) -> Result<Vec<f64>> {
    if forward.len() != adjoint.len() {
        return Err(Error::MismatchedGeometry("one adjoint field per source is required".into()));
    }
    let m = system.model();
    let mut g = vec![0.0; m.n_x * m.n_z];
    for (u, l) in forward.iter().zip(adjoint) {
        for (a, b) in g.iter_mut().zip(system.velocity_sensitivity(u, l)) {
            *a += b;
        }
    }
    Ok(g)
}

/// Objective value, gradient and solver status at one frequency.
#[derive(Debug, Clone)]
pub struct Objective {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub converged: bool,
}

/// `J(c) = Σ_k D(syn_k, obs_k)` over the sources of one frequency, with its
/// adjoint-state gradient.
pub fn objective(
    model: &VelocityModel2D,
    geometry: &AcquisitionGeometry,
    observed: &[FrequencyGather],
    freq_hz: f64,
    pml: PmlSpec,
    choice: &MisfitChoice,
    with_gradient: bool,
) -> Result<Objective> {
    let omega = 2.0 * std::f64::consts::PI * freq_hz;
    let system = HelmholtzSystem::assemble(model, omega, pml)?;
    let amp = geometry.spectrum.amplitude(freq_hz);
    let per_source = crate::parallel::map_indexed(geometry.sources.len(), |s| {
        let obs = observed
            .iter()
            .find(|g| g.source_index == s && same_freq(g.freq_hz, freq_hz))
            .ok_or_else(|| Error::MismatchedGeometry(format!("no observed gather for source {s} at {freq_hz} Hz")))?;
        let u = system.solve_point_source(geometry.sources[s], amp)?;
        let syn = FrequencyGather { freq_hz, source_index: s, data: system.sample(&u, &geometry.receivers)? };
        let eval = misfit_and_adjoint(&syn, obs, choice)?;
        let grad = if with_gradient {
            let lam = solve_adjoint(&system, &eval.adjoint_sources, &geometry.receivers)?;
            Some(system.velocity_sensitivity(&u, &lam))
        } else {
            None
        };
        Ok((eval.value, eval.converged, grad))
    })?;
    let mut value = 0.0;
    let mut converged = true;
    let mut gradient = vec![0.0; if with_gradient { model.n_x * model.n_z } else { 0 }];
    for (v, ok, g) in per_source {
        value += v;
        converged &= ok;
        if let Some(g) = g {
            for (a, b) in gradient.iter_mut().zip(g) {
                *a += b;
            }
        }
    }
    Ok(Objective { value, gradient, converged })
}

fn same_freq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub memory: usize,
    pub max_iters_per_freq: usize,
    pub armijo_c: f64,
    pub step_shrink: f64,
    /// Stop a stage once `‖g‖∞` falls below this fraction of its first value.
    pub grad_tol: f64,
    pub max_backtracks: usize,
    /// Largest speed change of the first step, as a fraction of the mean speed.
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters_per_freq: 10,
            armijo_c: 1e-4,
            step_shrink: 0.5,
            grad_tol: 1e-6,
            max_backtracks: 20,
            initial_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionConfig {
    pub frequency_schedule: Vec<f64>,
    pub rounds: usize,
    pub inter_round_smoothing_sigma: f64,
    pub optimizer: OptimizerConfig,
    pub velocity_bounds: (f64, f64),
    pub pml: PmlSpec,
    /// Gaussian width (cells) applied to every gradient; 0 disables.
    #[serde(default)]
    pub gradient_smoothing_sigma: f64,
    /// Cells outside this region keep their starting speed.
    #[serde(default)]
    pub update_region: Option<UpdateRegion>,
    /// Updates are bilinear on a coarse grid with this node spacing in
    /// cells; 1 updates every cell independently.
    #[serde(default = "one")]
    pub parameter_spacing_cells: usize,
}

fn one() -> usize {
    1
}

/// Coarse bilinear basis, optionally masked: `u = M P δ`.
struct UpdateBasis {
    nx: usize,
    nz: usize,
    /// Coarse node positions along each axis, in cells.
    xs: Vec<usize>,
    zs: Vec<usize>,
    mask: Option<Vec<bool>>,
}

fn coarse_nodes(n: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).step_by(k).collect();
    if *v.last().expect("at least one node") != n - 1 {
        v.push(n - 1);
    }
    v
}

/// Interval index and weight of the right node for fine index `i`.
fn locate(nodes: &[usize], i: usize) -> (usize, f64) {
    if nodes.len() == 1 {
        return (0, 0.0);
    }
    let j = nodes.partition_point(|&p| p <= i).clamp(1, nodes.len() - 1) - 1;
    let (a, b) = (nodes[j], nodes[j + 1]);
    (j, (i - a) as f64 / (b - a) as f64)
}

impl UpdateBasis {
    fn new(model: &VelocityModel2D, spacing: usize, region: Option<&UpdateRegion>) -> Self {
        let mask = region.map(|r| {
            let mut keep = vec![1.0; model.n_x * model.n_z];
            r.apply(&mut keep, model);
            keep.iter().map(|&k| k != 0.0).collect()
        });
        Self {
            nx: model.n_x,
            nz: model.n_z,
            xs: coarse_nodes(model.n_x, spacing),
            zs: coarse_nodes(model.n_z, spacing),
            mask,
        }
    }

    fn len(&self) -> usize {
        self.xs.len() * self.zs.len()
    }

    fn each(&self, mut f: impl FnMut(usize, usize, f64)) {
        let ncx = self.xs.len();
        for iz in 0..self.nz {
            let (jz, wz) = locate(&self.zs, iz);
            for ix in 0..self.nx {
                let k = iz * self.nx + ix;
                if self.mask.as_ref().is_some_and(|m| !m[k]) {
                    continue;
                }
                let (jx, wx) = locate(&self.xs, ix);
                for (dz, az) in [(0, 1.0 - wz), (1, wz)] {
                    for (dx, ax) in [(0, 1.0 - wx), (1, wx)] {
                        let w = az * ax;
                        if w != 0.0 {
                            f(k, (jz + dz) * ncx + jx + dx, w);
                        }
                    }
                }
            }
        }
    }

    fn expand(&self, coarse: &[f64]) -> Vec<f64> {
        let mut fine = vec![0.0; self.nx * self.nz];
        self.each(|k, c, w| fine[k] += w * coarse[c]);
        fine
    }

    fn restrict(&self, fine: &[f64]) -> Vec<f64> {
        let mut coarse = vec![0.0; self.len()];
        self.each(|k, c, w| coarse[c] += w * fine[k]);
        coarse
    }
}

/// Part of the model the optimizer may change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum UpdateRegion {
    Disk { center_x_m: f64, center_z_m: f64, radius_m: f64 },
}

impl UpdateRegion {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        match *self {
            UpdateRegion::Disk { center_x_m, center_z_m, radius_m } => {
                (x - center_x_m).hypot(z - center_z_m) <= radius_m
            }
        }
    }

    /// Zeroes entries of a row-major model field that fall outside.
    pub fn apply(&self, field: &mut [f64], model: &VelocityModel2D) {
        for (k, g) in field.iter_mut().enumerate() {
            let (i, j) = (k % model.n_x, k / model.n_x);
            if !self.contains(i as f64 * model.d_x, j as f64 * model.d_z) {
                *g = 0.0;
            }
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frequency_schedule.is_empty() {
            return Err(Error::param("frequency_schedule", "needs at least one frequency"));
        }
        if self.frequency_schedule.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::param("frequency_schedule", "frequencies must be positive"));
        }
        if self.frequency_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("frequency_schedule", "must be strictly ascending"));
        }
        let (lo, hi) = self.velocity_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::param("velocity_bounds", "need 0 < c_min < c_max"));
        }
        let o = &self.optimizer;
        if o.memory == 0 {
            return Err(Error::param("memory", "must be at least 1"));
        }
        if !(o.armijo_c > 0.0 && o.armijo_c < 1.0) {
            return Err(Error::param("armijo_c", "must lie in (0, 1)"));
        }
        if !(o.step_shrink > 0.0 && o.step_shrink < 1.0) {
            return Err(Error::param("step_shrink", "must lie in (0, 1)"));
        }
        if !(o.initial_step > 0.0) {
            return Err(Error::param("initial_step", "must be positive"));
        }
        if !(self.gradient_smoothing_sigma >= 0.0) {
            return Err(Error::param("gradient_smoothing_sigma", "must be nonnegative"));
        }
        if self.parameter_spacing_cells == 0 {
            return Err(Error::param("parameter_spacing_cells", "must be at least 1"));
        }
        if let Some(UpdateRegion::Disk { radius_m, .. }) = self.update_region {
            if !(radius_m > 0.0) {
                return Err(Error::param("update_region", "radius must be positive"));
            }
        }
        if !(self.inter_round_smoothing_sigma >= 0.0) {
            return Err(Error::param("inter_round_smoothing_sigma", "must be nonnegative"));
        }
        self.pml.validate()
    }
}

/// How an optimization stage ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageEnd {
    IterationCap,
    GradientTolerance,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub round: usize,
    pub freq_hz: f64,
    /// Objective at the stage start and after every accepted step.
    pub misfits: Vec<f64>,
    pub end: StageEnd,
    /// False if any misfit evaluation hit the HV iteration cap.
    pub solver_converged: bool,
    pub snapshot: VelocityModel2D,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct InversionReport {
    pub final_model: VelocityModel2D,
    pub stages: Vec<StageReport>,
}

impl InversionReport {
    /// Accepted-step misfits of every stage in order.
    pub fn misfit_history(&self) -> Vec<f64> {
        self.stages.iter().flat_map(|s| s.misfits.iter().copied()).collect()
    }

    pub fn line_search_failed(&self) -> bool {
        self.stages.iter().any(|s| s.end == StageEnd::LineSearchFailure)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: `-H g` from the stored pairs.
fn lbfgs_direction(g: &[f64], pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((rho, a));
    }
    if let Some((s, y)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        for v in q.iter_mut() {
            *v *= gamma;
        }
    }
    for ((s, y), (rho, a)) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn project(c: &mut [f64], (lo, hi): (f64, f64)) {
    for v in c.iter_mut() {
        *v = v.clamp(lo, hi);
    }
}

/// Runs every round of the frequency schedule from `initial`.
pub fn fwi_invert(
    observed: &[FrequencyGather],
    geometry: &AcquisitionGeometry,
    initial: &VelocityModel2D,
    config: &InversionConfig,
    choice: &MisfitChoice,
) -> Result<InversionReport> {
    config.validate()?;
    geometry.validate(initial)?;
    let bounds = config.velocity_bounds;
    if initial.velocities().iter().any(|&c| c < bounds.0 || c > bounds.1) {
        return Err(Error::param("initial_model", "lies outside the velocity bounds"));
    }
    let mut model = initial.clone();
    let mut stages = Vec::new();
    for round in 0..config.rounds {
        if round > 0 && config.inter_round_smoothing_sigma > 0.0 {
            model = gaussian_smooth(&model, config.inter_round_smoothing_sigma)?;
        }
        for &freq in &config.frequency_schedule {
            let start = Instant::now();
            let (next, mut report) = invert_stage(observed, geometry, &model, config, choice, freq)?;
            model = next;
            report.round = round;
            report.seconds = start.elapsed().as_secs_f64();
            stages.push(report);
        }
    }
    Ok(InversionReport { final_model: model, stages })
}

fn invert_stage(
    observed: &[FrequencyGather],
    geometry: &AcquisitionGeometry,
    model: &VelocityModel2D,
    config: &InversionConfig,
    choice: &MisfitChoice,
    freq: f64,
) -> Result<(VelocityModel2D, StageReport)> {
    let opt = &config.optimizer;
    let eval = |m: &VelocityModel2D, grad: bool| -> Result<Objective> {
        let mut obj = objective(m, geometry, observed, freq, config.pml, choice, grad)?;
        if grad && config.gradient_smoothing_sigma > 0.0 {
            obj.gradient = smooth_field(&obj.gradient, m.n_x, m.n_z, config.gradient_smoothing_sigma);
        }
        Ok(obj)
    };
    let basis = UpdateBasis::new(model, config.parameter_spacing_cells, config.update_region.as_ref());
    let mut current = model.clone();
    let mut report = StageReport {
        round: 0,
        freq_hz: freq,
        misfits: Vec::new(),
        end: StageEnd::IterationCap,
        solver_converged: true,
        snapshot: current.clone(),
        seconds: 0.0,
    };
    if opt.max_iters_per_freq == 0 {
        return Ok((current, report));
    }
    let mut obj = eval(&current, true)?;
    report.solver_converged &= obj.converged;
    report.misfits.push(obj.value);
    let mut grad = basis.restrict(&obj.gradient);
    let g_first = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean_c = current.velocities().iter().sum::<f64>() / current.velocities().len() as f64;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();

    for _ in 0..opt.max_iters_per_freq {
        let g_max = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g_max == 0.0 || g_max <= opt.grad_tol * g_first {
            report.end = StageEnd::GradientTolerance;
            break;
        }
        let mut dir = lbfgs_direction(&grad, &pairs);
        if dot(&dir, &grad) >= 0.0 {
            pairs.clear();
            dir = grad.iter().map(|g| -g).collect();
        }
        let fine_dir = basis.expand(&dir);
        let mut alpha = if pairs.is_empty() {
            let d_max = fine_dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            opt.initial_step * mean_c / d_max
        } else {
            1.0
        };
        let c0 = current.velocities().to_vec();
        let mut accepted = None;
        for _ in 0..=opt.max_backtracks {
            let mut trial: Vec<f64> = c0.iter().zip(&fine_dir).map(|(c, d)| c + alpha * d).collect();
            project(&mut trial, config.velocity_bounds);
            let step: Vec<f64> = trial.iter().zip(&c0).map(|(a, b)| a - b).collect();
            let decrease = dot(&obj.gradient, &step);
            if decrease < 0.0 {
                let m = current.with_velocities(trial)?;
                let cand = eval(&m, false)?;
                report.solver_converged &= cand.converged;
                if cand.value <= obj.value + opt.armijo_c * decrease {
                    accepted = Some((m, alpha));
                    break;
                }
            }
            alpha *= opt.step_shrink;
        }
        let Some((m, alpha)) = accepted else {
            report.end = StageEnd::LineSearchFailure;
            break;
        };
        let next = eval(&m, true)?;
        report.solver_converged &= next.converged;
        let next_grad = basis.restrict(&next.gradient);
        let step: Vec<f64> = dir.iter().map(|d| alpha * d).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&step, &y) > 1e-12 * dot(&step, &step).sqrt() * dot(&y, &y).sqrt() {
            pairs.push((step, y));
            if pairs.len() > opt.memory {
                pairs.remove(0);
            }
        }
        current = m;
        obj = next;
        grad = next_grad;
        report.misfits.push(obj.value);
    }
    report.snapshot = current.clone();
    Ok((current, report))
}

/// Adds circular complex Gaussian noise at a dataset-wide SNR (dB).
/// `snr_db = +∞` returns the data unchanged.
pub fn add_noise(data: &[FrequencyGather], snr_db: f64, seed: u64) -> Result<Vec<FrequencyGather>> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::param("snr_db", "must be finite or +inf"));
    }
    if snr_db == f64::INFINITY {
        return Ok(data.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<Vec<Complex64>> = data
        .iter()
        .map(|g| {
            g.data
                .iter()
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    let signal: f64 = data.iter().flat_map(|g| &g.data).map(|v| v.norm_sqr()).sum();
    let raw: f64 = noise.iter().flatten().map(|v| v.norm_sqr()).sum();
    if raw == 0.0 {
        return Ok(data.to_vec());
    }
    let scale = (signal / (raw * 10f64.powf(snr_db / 10.0))).sqrt();
    Ok(data
        .iter()
        .zip(noise)
        .map(|(g, n)| FrequencyGather { data: g.data.iter().zip(n).map(|(d, n)| d + n * scale).collect(), ..g.clone() })
        .collect())
}

/// Separable Gaussian filter with edge replication; `sigma` in cells.
pub fn gaussian_smooth(model: &VelocityModel2D, sigma_cells: f64) -> Result<VelocityModel2D> {
    if !(sigma_cells >= 0.0) || !sigma_cells.is_finite() {
        return Err(Error::param("sigma_cells", "must be nonnegative"));
    }
    if sigma_cells == 0.0 {
        return Ok(model.clone());
    }
    model.with_velocities(smooth_field(model.velocities(), model.n_x, model.n_z, sigma_cells))
}

/// Separable Gaussian filter of a row-major `[n_z][n_x]` field with edge
/// replication.
fn smooth_field(c: &[f64], nx: usize, nz: usize, sigma_cells: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_cells).ceil() as isize;
    let kernel: Vec<f64> =
        (-radius..=radius).map(|k| (-(k * k) as f64 / (2.0 * sigma_cells * sigma_cells)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; nx * nz];
    for iz in 0..nz {
        for ix in 0..nx {
            tmp[iz * nx + ix] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * c[iz * nx + clamp(ix as isize + k as isize - radius, nx)])
                .sum();
        }
    }
    let mut out = vec![0.0; nx * nz];
    for iz in 0..nz {
        for ix in 0..nx {
            out[iz * nx + ix] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp(iz as isize + k as isize - radius, nz) * nx + ix])
                .sum();
        }
    }
    out
}
