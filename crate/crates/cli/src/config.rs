use std::path::{Path, PathBuf};

use hvfwi::harness::{GeometryMode, LineGeometrySpec, PhantomSpec, RickerScanSpec};
use hvfwi::helmholtz::{AcquisitionGeometry, PmlSpec, SourceSpectrum};
use hvfwi::hv::HvParams;
use hvfwi::inversion::{InversionConfig, MisfitChoice};
use hvfwi::io::{parse_toml, read_text};
use hvfwi::{Error, Result};
use serde::Deserialize;

/// Everything a subcommand may need; each one reads only its own sections.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub outputs: Outputs,
    pub phantom: Option<PhantomSpec>,
    pub geometry: Option<GeometryConfig>,
    pub frequencies_hz: Option<Vec<f64>>,
    pub pml: Option<PmlSpec>,
    pub misfit: Option<MisfitChoice>,
    pub inversion: Option<InversionConfig>,
    pub noise: Option<NoiseConfig>,
    pub hv: Option<HvParams>,
    pub w2: Option<W2Config>,
    pub scan_velocity: Option<VelocityScanConfig>,
    pub scan_ricker: Option<RickerScanConfig>,
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Grid header: the true model for `forward`, the start for `invert`.
    pub model: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    /// Gather header.
    pub data: Option<PathBuf>,
    /// Text signals, one sample per line.
    pub f0: Option<PathBuf>,
    pub f1: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Explicit {
        sources: Vec<[f64; 2]>,
        receivers: Vec<[f64; 2]>,
        #[serde(default = "flat")]
        spectrum: SourceSpectrum,
    },
    Ring {
        transducers: usize,
        emit_every: usize,
        radius_fraction: f64,
    },
    Line {
        n_sources: usize,
        n_receivers: usize,
    },
}

fn flat() -> SourceSpectrum {
    SourceSpectrum::Flat
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct W2Config {
    pub beta_margin: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityScanConfig {
    pub c_min: f64,
    pub c_max: f64,
    pub points: usize,
    pub c_star: f64,
    pub freq_hz: f64,
    #[serde(default = "LineGeometrySpec::desk_scale")]
    pub line: LineGeometrySpec,
    pub metrics: Vec<MisfitChoice>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RickerScanConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    #[serde(default)]
    pub spec: RickerScanSpec,
    /// `[kappa, lambda, epsilon]` per HV curve.
    pub hv_weights: Vec<[f64; 3]>,
}

pub fn missing(section: &'static str) -> Error {
    Error::InvalidParameter { name: section, reason: "required by this subcommand".into() }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = parse_toml(&read_text(path)?, "config")?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Resolves a configured path against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn input(&self, field: Option<&PathBuf>, name: &'static str) -> Result<PathBuf> {
        field.map(|p| self.resolve(p)).ok_or_else(|| missing(name))
    }

    pub fn geometry(&self) -> Result<AcquisitionGeometry> {
        let phantom = self.phantom.unwrap_or_default();
        match self.geometry.clone().ok_or_else(|| missing("geometry"))? {
            GeometryConfig::Explicit { sources, receivers, spectrum } => Ok(AcquisitionGeometry {
                sources: sources.iter().map(|p| (p[0], p[1])).collect(),
                receivers: receivers.iter().map(|p| (p[0], p[1])).collect(),
                spectrum,
            }),
            GeometryConfig::Ring { transducers, emit_every, radius_fraction } => {
                GeometryMode::Ring { transducers, emit_every, radius_fraction }.build(&phantom)
            }
            GeometryConfig::Line { n_sources, n_receivers } => {
                GeometryMode::Line { n_sources, n_receivers }.build(&phantom)
            }
        }
    }
}
