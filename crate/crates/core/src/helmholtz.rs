//! 2D acoustic Helmholtz solver: second-order five-point stencil, complex
//! coordinate stretching in an absorbing collar, banded LU.
//!
//! The physical grid is padded by `width_cells` on every side with the edge
//! velocities replicated. With `s = 1 + iσ/ω` the assembled operator is
//!
//! `∂x((s_z/s_x) ∂x u) + ∂z((s_x/s_z) ∂z u) + s_x s_z ω²/c² u = −src`
//!
//! which stays complex symmetric, so one LU serves forward and adjoint
//! solves. Outside the collar `u = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::{ComplexBanded, ComplexBandedLu};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Gridded wave speed, row-major `[n_z][n_x]`, node `(ix, iz)` at
/// `(ix · d_x, iz · d_z)` metres.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel2D {
    pub n_x: usize,
    pub n_z: usize,
    pub d_x: f64,
    pub d_z: f64,
    c: Vec<f64>,
}

impl VelocityModel2D {
    pub fn new(n_x: usize, n_z: usize, d_x: f64, d_z: f64, c: Vec<f64>) -> Result<Self> {
        if n_x < 3 || n_z < 3 {
            return Err(Error::param("shape", "model needs at least 3x3 nodes"));
        }
        if c.len() != n_x * n_z {
            return Err(Error::GridMismatch(format!("{} velocity samples for a {n_z}x{n_x} grid", c.len())));
        }
        if !(d_x > 0.0 && d_z > 0.0 && d_x.is_finite() && d_z.is_finite()) {
            return Err(Error::param("spacing", "d_x and d_z must be positive"));
        }
        if c.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::param("c", "velocities must be positive and finite"));
        }
        Ok(Self { n_x, n_z, d_x, d_z, c })
    }

    pub fn constant(n_x: usize, n_z: usize, d_x: f64, d_z: f64, speed: f64) -> Result<Self> {
        Self::new(n_x, n_z, d_x, d_z, vec![speed; n_x * n_z])
    }

    pub fn from_fn(n_x: usize, n_z: usize, d_x: f64, d_z: f64, speed: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut c = Vec::with_capacity(n_x * n_z);
        for iz in 0..n_z {
            for ix in 0..n_x {
                c.push(speed(ix as f64 * d_x, iz as f64 * d_z));
            }
        }
        Self::new(n_x, n_z, d_x, d_z, c)
    }

    pub fn velocities(&self) -> &[f64] {
        &self.c
    }

    /// Replaces every sample, keeping the grid.
    pub fn with_velocities(&self, c: Vec<f64>) -> Result<Self> {
        Self::new(self.n_x, self.n_z, self.d_x, self.d_z, c)
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.c[iz * self.n_x + ix]
    }

    pub fn width_m(&self) -> f64 {
        (self.n_x - 1) as f64 * self.d_x
    }

    pub fn depth_m(&self) -> f64 {
        (self.n_z - 1) as f64 * self.d_z
    }

    pub fn min_speed(&self) -> f64 {
        self.c.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_speed(&self) -> f64 {
        self.c.iter().cloned().fold(0.0, f64::max)
    }

    /// Node nearest to a physical position.
    pub fn nearest_node(&self, x: f64, z: f64) -> Result<(usize, usize)> {
        let tol = 1e-9;
        let inside_x = x >= -tol * self.d_x && x <= self.width_m() + tol * self.d_x;
        let inside_z = z >= -tol * self.d_z && z <= self.depth_m() + tol * self.d_z;
        if !(inside_x && inside_z) || !x.is_finite() || !z.is_finite() {
            return Err(Error::OutsideDomain { x, z });
        }
        let ix = ((x / self.d_x).round() as usize).min(self.n_x - 1);
        let iz = ((z / self.d_z).round() as usize).min(self.n_z - 1);
        Ok((ix, iz))
    }
}

/// Absorbing collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlSpec {
    pub width_cells: usize,
    /// Peak damping `σ_max` in 1/s at the outer edge.
    pub max_damping: f64,
    pub profile_power: f64,
}

impl PmlSpec {
    /// Theoretical reflection targeted by [`PmlSpec::tuned`].
    pub const TARGET_REFLECTION: f64 = 1e-3;

    /// Damping that attenuates a normally incident wave of speed `speed` to
    /// [`Self::TARGET_REFLECTION`] over a round trip through the collar.
    pub fn tuned(width_cells: usize, speed: f64, spacing: f64) -> Self {
        let power = 2.0;
        let thickness = width_cells as f64 * spacing;
        let max_damping = if width_cells == 0 {
            0.0
        } else {
            (power + 1.0) * speed * (1.0 / Self::TARGET_REFLECTION).ln() / (2.0 * thickness)
        };
        Self { width_cells, max_damping, profile_power: power }
    }

    /// 20 cells tuned to the fastest speed and coarsest spacing of `model`.
    pub fn for_model(model: &VelocityModel2D) -> Self {
        Self::tuned(20, model.max_speed(), model.d_x.max(model.d_z))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_damping >= 0.0) || !self.max_damping.is_finite() {
            return Err(Error::param("max_damping", "must be nonnegative"));
        }
        if !(self.profile_power >= 0.0) || !self.profile_power.is_finite() {
            return Err(Error::param("profile_power", "must be nonnegative"));
        }
        Ok(())
    }

    /// `σ` at a depth `d` (metres) into a collar of thickness `thickness`.
    fn damping(&self, d: f64, thickness: f64) -> f64 {
        if d <= 0.0 || thickness <= 0.0 {
            0.0
        } else {
            self.max_damping * (d / thickness).min(1.0).powf(self.profile_power)
        }
    }
}

/// Emitted spectrum per frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpectrum {
    /// Unit amplitude at every frequency.
    Flat,
    /// Fourier transform of a Ricker wavelet centred at `t = 0`.
    Ricker { peak_hz: f64 },
}

impl SourceSpectrum {
    pub fn amplitude(&self, freq_hz: f64) -> Complex64 {
        match *self {
            SourceSpectrum::Flat => Complex64::new(1.0, 0.0),
            SourceSpectrum::Ricker { peak_hz } => {
                let r = (freq_hz / peak_hz).powi(2);
                let a = 2.0 / std::f64::consts::PI.sqrt() * r / peak_hz * (-r).exp();
                Complex64::new(a, 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionGeometry {
    /// `(x, z)` in metres.
    pub sources: Vec<(f64, f64)>,
    pub receivers: Vec<(f64, f64)>,
    pub spectrum: SourceSpectrum,
}

impl AcquisitionGeometry {
    pub fn validate(&self, model: &VelocityModel2D) -> Result<()> {
        for &(x, z) in self.sources.iter().chain(&self.receivers) {
            model.nearest_node(x, z)?;
        }
        Ok(())
    }
}

/// Complex receiver samples for one source at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGather {
    pub freq_hz: f64,
    pub source_index: usize,
    pub data: Vec<Complex64>,
}

/// Solution for one right-hand side; keeps the collar for sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefield {
    pub omega: f64,
    n_x: usize,
    n_z: usize,
    pad: usize,
    padded: Vec<Complex64>,
}

impl Wavefield {
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> Complex64 {
        let w = self.n_x + 2 * self.pad;
        self.padded[(iz + self.pad) * w + ix + self.pad]
    }

    /// Physical region, row-major `[n_z][n_x]`.
    pub fn physical(&self) -> Vec<Complex64> {
        let mut u = Vec::with_capacity(self.n_x * self.n_z);
        for iz in 0..self.n_z {
            for ix in 0..self.n_x {
                u.push(self.at(ix, iz));
            }
        }
        u
    }

    pub fn max_abs(&self) -> f64 {
        self.padded.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Factored Helmholtz operator for one model and angular frequency.
#[derive(Debug, Clone)]
pub struct HelmholtzSystem {
    model: VelocityModel2D,
    omega: f64,
    pml: PmlSpec,
    /// `s_x s_z` per padded node, row-major.
    stretch: Vec<Complex64>,
    lu: ComplexBandedLu,
}

struct Padded {
    nx: usize,
    nz: usize,
    pad: usize,
    /// `x` is the minor (fast) axis.
    x_minor: bool,
}

impl Padded {
    fn index(&self, px: usize, pz: usize) -> usize {
        if self.x_minor {
            pz * self.nx + px
        } else {
            px * self.nz + pz
        }
    }

    fn minor(&self) -> usize {
        if self.x_minor {
            self.nx
        } else {
            self.nz
        }
    }
}

/// `s(p) = 1 + iσ/ω` at padded coordinate `p` (in cells, may be fractional).
fn stretch_1d(p: f64, n_phys: usize, pad: usize, h: f64, pml: &PmlSpec, omega: f64) -> Complex64 {
    let lo = pad as f64;
    let hi = (pad + n_phys - 1) as f64;
    let d = if p < lo {
        (lo - p) * h
    } else if p > hi {
        (p - hi) * h
    } else {
        0.0
    };
    Complex64::new(1.0, pml.damping(d, pad as f64 * h) / omega)
}

fn build_operator(
    model: &VelocityModel2D,
    omega: f64,
    pml: &PmlSpec,
) -> Result<(ComplexBanded, Vec<Complex64>, Padded)> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::param("omega", "angular frequency must be positive"));
    }
    pml.validate()?;
    let pad = pml.width_cells;
    let lay = Padded { nx: model.n_x + 2 * pad, nz: model.n_z + 2 * pad, pad, x_minor: model.n_x <= model.n_z };
    let n = lay.nx * lay.nz;
    let band = lay.minor();
    let mut a = ComplexBanded::zeros(n, band, band);
    let (hx, hz) = (model.d_x, model.d_z);
    let sx = |p: f64| stretch_1d(p, model.n_x, pad, hx, pml, omega);
    let sz = |p: f64| stretch_1d(p, model.n_z, pad, hz, pml, omega);
    let mut stretch = vec![ZERO; n];
    for pz in 0..lay.nz {
        let iz = pz.saturating_sub(pad).min(model.n_z - 1);
        for px in 0..lay.nx {
            let ix = px.saturating_sub(pad).min(model.n_x - 1);
            let row = lay.index(px, pz);
            let (x, z) = (px as f64, pz as f64);
            let s_node = sx(x) * sz(z);
            stretch[row] = s_node;
            let k2 = omega * omega / (model.at(ix, iz) * model.at(ix, iz));
            let mut diag = s_node * k2;
            // fluxes through the four half-node faces
            for (dir, nb) in [(-0.5, px.checked_sub(1)), (0.5, Some(px + 1))] {
                let coef = sz(z) / sx(x + dir) / (hx * hx);
                diag -= coef;
                if let Some(q) = nb.filter(|&q| q < lay.nx) {
                    a.add(row, lay.index(q, pz), coef);
                }
            }
            for (dir, nb) in [(-0.5, pz.checked_sub(1)), (0.5, Some(pz + 1))] {
                let coef = sx(x) / sz(z + dir) / (hz * hz);
                diag -= coef;
                if let Some(q) = nb.filter(|&q| q < lay.nz) {
                    a.add(row, lay.index(px, q), coef);
                }
            }
            a.add(row, row, diag);
        }
    }
    Ok((a, stretch, lay))
}

impl HelmholtzSystem {
    /// Assembles and factors the operator.
    pub fn assemble(model: &VelocityModel2D, omega: f64, pml: PmlSpec) -> Result<Self> {
        let (a, stretch, _) = build_operator(model, omega, &pml)?;
        let lu = a.factor()?;
        Ok(Self { model: model.clone(), omega, pml, stretch, lu })
    }

    fn layout(&self) -> Padded {
        let pad = self.pml.width_cells;
        Padded {
            nx: self.model.n_x + 2 * pad,
            nz: self.model.n_z + 2 * pad,
            pad,
            x_minor: self.model.n_x <= self.model.n_z,
        }
    }

    pub fn model(&self) -> &VelocityModel2D {
        &self.model
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn pml(&self) -> &PmlSpec {
        &self.pml
    }

    /// Grid points per shortest wavelength in the physical region.
    pub fn points_per_wavelength(&self) -> f64 {
        let lambda = 2.0 * std::f64::consts::PI * self.model.min_speed() / self.omega;
        lambda / self.model.d_x.max(self.model.d_z)
    }

    fn to_wavefield(&self, solution: Vec<Complex64>) -> Wavefield {
        let lay = self.layout();
        // store row-major with x fastest regardless of the solver ordering
        let mut padded = vec![ZERO; solution.len()];
        for pz in 0..lay.nz {
            for px in 0..lay.nx {
                padded[pz * lay.nx + px] = solution[lay.index(px, pz)];
            }
        }
        Wavefield { omega: self.omega, n_x: self.model.n_x, n_z: self.model.n_z, pad: lay.pad, padded }
    }

    fn rhs(&self, injections: &[((f64, f64), Complex64)]) -> Result<Vec<Complex64>> {
        let lay = self.layout();
        let mut b = vec![ZERO; lay.nx * lay.nz];
        let scale = 1.0 / (self.model.d_x * self.model.d_z);
        for &((x, z), amp) in injections {
            let (ix, iz) = self.model.nearest_node(x, z)?;
            // L u = −src
            b[lay.index(ix + lay.pad, iz + lay.pad)] -= amp * scale;
        }
        Ok(b)
    }

    /// Field of a sum of point sources, each a scaled discrete delta at the
    /// nearest node.
    pub fn solve_sources(&self, injections: &[((f64, f64), Complex64)]) -> Result<Wavefield> {
        let mut b = self.rhs(injections)?;
        self.lu.solve_in_place(&mut b);
        Ok(self.to_wavefield(b))
    }

    pub fn solve_point_source(&self, position: (f64, f64), amplitude: Complex64) -> Result<Wavefield> {
        self.solve_sources(&[(position, amplitude)])
    }

    /// Solves the conjugate-transposed system for the given injections.
    pub fn solve_adjoint_sources(&self, injections: &[((f64, f64), Complex64)]) -> Result<Wavefield> {
        let conj: Vec<_> = injections.iter().map(|&(p, a)| (p, a.conj())).collect();
        let mut b = self.rhs(&conj)?;
        self.lu.solve_in_place(&mut b);
        for v in b.iter_mut() {
            *v = v.conj();
        }
        Ok(self.to_wavefield(b))
    }

    /// Samples a field at the nodes nearest to `positions`.
    pub fn sample(&self, field: &Wavefield, positions: &[(f64, f64)]) -> Result<Vec<Complex64>> {
        positions
            .iter()
            .map(|&(x, z)| {
                let (ix, iz) = self.model.nearest_node(x, z)?;
                Ok(field.at(ix, iz))
            })
            .collect()
    }

    /// `−2ω² Re(conj(λ) s_x s_z u) / c³ · d_x d_z` per physical cell, with the
    /// collar cells folded onto the edge cells whose speed they replicate.
    /// With `λ` from [`Self::solve_adjoint_sources`] driven by `∂D/∂u`, this is
    /// the gradient of the misfit with respect to the speed of each cell.
    pub fn velocity_sensitivity(&self, forward: &Wavefield, adjoint: &Wavefield) -> Vec<f64> {
        let m = &self.model;
        let lay = self.layout();
        let mut g = vec![0.0; m.n_x * m.n_z];
        let scale = -2.0 * self.omega * self.omega * m.d_x * m.d_z;
        for pz in 0..lay.nz {
            let iz = pz.saturating_sub(lay.pad).min(m.n_z - 1);
            for px in 0..lay.nx {
                let ix = px.saturating_sub(lay.pad).min(m.n_x - 1);
                let k = pz * lay.nx + px;
                let c = m.at(ix, iz);
                let term = adjoint.padded[k].conj() * self.stretch[lay.index(px, pz)] * forward.padded[k];
                g[iz * m.n_x + ix] += scale * term.re / (c * c * c);
            }
        }
        g
    }
}

/// Receiver gathers for every frequency and source. Output is
/// frequency-major, source-minor.
pub fn forward_data(
    model: &VelocityModel2D,
    geometry: &AcquisitionGeometry,
    freqs_hz: &[f64],
    pml: PmlSpec,
) -> Result<Vec<FrequencyGather>> {
    geometry.validate(model)?;
    let mut out = Vec::with_capacity(freqs_hz.len() * geometry.sources.len());
    if geometry.sources.is_empty() {
        return Ok(out);
    }
    for &freq in freqs_hz {
        let omega = 2.0 * std::f64::consts::PI * freq;
        let system = HelmholtzSystem::assemble(model, omega, pml)?;
        let amp = geometry.spectrum.amplitude(freq);
        let gathers = crate::parallel::map_indexed(geometry.sources.len(), |s| {
            let u = system.solve_point_source(geometry.sources[s], amp)?;
            Ok(FrequencyGather { freq_hz: freq, source_index: s, data: system.sample(&u, &geometry.receivers)? })
        })?;
        out.extend(gathers);
    }
    Ok(out)
}
