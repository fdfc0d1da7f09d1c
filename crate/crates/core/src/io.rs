//! Raw little-endian payloads with TOML sidecar headers.
//!
//! A grid or gather stored at `name.toml` keeps its numbers in the file
//! named by the header's `payload` key, resolved next to the header. Every
//! write goes to a temporary sibling first and is renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::helmholtz::{AcquisitionGeometry, FrequencyGather, SourceSpectrum, VelocityModel2D};
use crate::{Error, Result};

pub const GATHER_LAYOUT: &str = "source-major, freq-major, receiver-minor, complex interleaved re/im";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub dtype: String,
    /// `[n_z, n_x]`.
    pub shape: [usize; 2],
    pub dx_m: f64,
    pub dz_m: f64,
    pub byte_order: String,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatherHeader {
    pub dtype: String,
    pub freqs_hz: Vec<f64>,
    pub sources: Vec<[f64; 2]>,
    pub receivers: Vec<[f64; 2]>,
    pub spectrum: SourceSpectrum,
    pub layout: String,
    pub byte_order: String,
    pub payload: String,
}

/// Observed or synthetic data together with the geometry it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GatherFile {
    pub geometry: AcquisitionGeometry,
    pub freqs_hz: Vec<f64>,
    /// Frequency-major, source-minor, as produced by `forward_data`.
    pub gathers: Vec<FrequencyGather>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn format_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Format { field: field.to_string(), reason: reason.into() }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| io_err(path, "not a file path"))?.to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Parses a TOML document, naming the offending key on failure.
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| what.to_string());
        format_err(&field, msg.trim())
    })
}

fn payload_path(header: &Path, name: &str) -> PathBuf {
    header.parent().unwrap_or(Path::new("")).join(name)
}

fn default_payload(header: &Path) -> Result<String> {
    let stem = header.file_stem().ok_or_else(|| io_err(header, "header path has no file name"))?;
    Ok(format!("{}.bin", stem.to_string_lossy()))
}

fn to_le_bytes(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(f64::to_le_bytes).collect()
}

fn from_le_bytes(bytes: &[u8]) -> Vec<f64> {
    bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes"))).collect()
}

fn check_common(dtype: &str, want: &str, byte_order: &str) -> Result<()> {
    if dtype != want {
        return Err(format_err("dtype", format!("expected \"{want}\", found \"{dtype}\"")));
    }
    if byte_order != "little" {
        return Err(format_err("byte_order", format!("expected \"little\", found \"{byte_order}\"")));
    }
    Ok(())
}

pub fn write_grid(header_path: &Path, model: &VelocityModel2D) -> Result<()> {
    let header = GridHeader {
        dtype: "f64".into(),
        shape: [model.n_z, model.n_x],
        dx_m: model.d_x,
        dz_m: model.d_z,
        byte_order: "little".into(),
        payload: default_payload(header_path)?,
    };
    let bytes = to_le_bytes(model.velocities().iter().copied());
    write_atomic(&payload_path(header_path, &header.payload), &bytes)?;
    let text = toml::to_string(&header).map_err(|e| io_err(header_path, e))?;
    write_atomic(header_path, text.as_bytes())
}

pub fn read_grid(header_path: &Path) -> Result<VelocityModel2D> {
    let header: GridHeader = parse_toml(&read_text(header_path)?, "grid header")?;
    check_common(&header.dtype, "f64", &header.byte_order)?;
    let [n_z, n_x] = header.shape;
    let path = payload_path(header_path, &header.payload);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    if bytes.len() != 8 * n_z * n_x {
        return Err(format_err(
            "shape",
            format!("[{n_z}, {n_x}] needs {} payload bytes, found {}", 8 * n_z * n_x, bytes.len()),
        ));
    }
    let model = VelocityModel2D::constant(n_x, n_z, header.dx_m, header.dz_m, 1.0)
        .map_err(|e| format_err("shape", e.to_string()))?;
    model.with_velocities(from_le_bytes(&bytes))
}

pub fn write_gathers(header_path: &Path, file: &GatherFile) -> Result<()> {
    let n_src = file.geometry.sources.len();
    let n_rec = file.geometry.receivers.len();
    let n_freq = file.freqs_hz.len();
    if file.gathers.len() != n_src * n_freq {
        return Err(Error::MismatchedGeometry(format!(
            "{} gathers for {n_freq} frequencies and {n_src} sources",
            file.gathers.len()
        )));
    }
    let mut values = Vec::with_capacity(2 * n_src * n_freq * n_rec);
    for s in 0..n_src {
        for f in 0..n_freq {
            let g = &file.gathers[f * n_src + s];
            if g.source_index != s || g.freq_hz != file.freqs_hz[f] || g.data.len() != n_rec {
                return Err(Error::MismatchedGeometry(format!(
                    "gather {} is not source {s} at {} Hz with {n_rec} receivers",
                    f * n_src + s,
                    file.freqs_hz[f]
                )));
            }
            for d in &g.data {
                values.push(d.re);
                values.push(d.im);
            }
        }
    }
    let header = GatherHeader {
        dtype: "c128".into(),
        freqs_hz: file.freqs_hz.clone(),
        sources: file.geometry.sources.iter().map(|&(x, z)| [x, z]).collect(),
        receivers: file.geometry.receivers.iter().map(|&(x, z)| [x, z]).collect(),
        spectrum: file.geometry.spectrum,
        layout: GATHER_LAYOUT.into(),
        byte_order: "little".into(),
        payload: default_payload(header_path)?,
    };
    write_atomic(&payload_path(header_path, &header.payload), &to_le_bytes(values.into_iter()))?;
    let text = toml::to_string(&header).map_err(|e| io_err(header_path, e))?;
    write_atomic(header_path, text.as_bytes())
}

pub fn read_gathers(header_path: &Path) -> Result<GatherFile> {
    let header: GatherHeader = parse_toml(&read_text(header_path)?, "gather header")?;
    check_common(&header.dtype, "c128", &header.byte_order)?;
    if header.layout != GATHER_LAYOUT {
        return Err(format_err("layout", format!("expected \"{GATHER_LAYOUT}\"")));
    }
    let (n_src, n_rec, n_freq) = (header.sources.len(), header.receivers.len(), header.freqs_hz.len());
    let path = payload_path(header_path, &header.payload);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    let want = 16 * n_src * n_freq * n_rec;
    if bytes.len() != want {
        return Err(format_err(
            "receivers",
            format!(
                "{n_src} sources x {n_freq} frequencies x {n_rec} receivers need {want} payload bytes, found {}",
                bytes.len()
            ),
        ));
    }
    let values = from_le_bytes(&bytes);
    let mut gathers = vec![None; n_src * n_freq];
    let mut chunks = values.chunks_exact(2 * n_rec.max(1));
    for s in 0..n_src {
        for (f, &freq_hz) in header.freqs_hz.iter().enumerate() {
            let data = if n_rec == 0 {
                Vec::new()
            } else {
                let c = chunks.next().expect("payload length was checked");
                c.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
            };
            gathers[f * n_src + s] = Some(FrequencyGather { freq_hz, source_index: s, data });
        }
    }
    let geometry = AcquisitionGeometry {
        sources: header.sources.iter().map(|p| (p[0], p[1])).collect(),
        receivers: header.receivers.iter().map(|p| (p[0], p[1])).collect(),
        spectrum: header.spectrum,
    };
    Ok(GatherFile {
        geometry,
        freqs_hz: header.freqs_hz,
        gathers: gathers.into_iter().map(|g| g.expect("every slot filled")).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageScale {
    pub min: f64,
    pub max: f64,
}

impl ImageScale {
    /// Value represented by a pixel level.
    pub fn value(&self, level: u8) -> f64 {
        self.min + (self.max - self.min) * level as f64 / 255.0
    }
}

/// Binary graymap rows follow increasing depth.
pub fn encode_pgm(model: &VelocityModel2D) -> (Vec<u8>, ImageScale) {
    let c = model.velocities();
    let scale = ImageScale { min: model.min_speed(), max: model.max_speed() };
    let span = scale.max - scale.min;
    let mut out = format!("P5\n{} {}\n255\n", model.n_x, model.n_z).into_bytes();
    out.extend(c.iter().map(|&v| {
        if span > 0.0 {
            (255.0 * (v - scale.min) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    (out, scale)
}

/// Writes `out` and the min/max sidecar `out.toml`.
pub fn export_image(model: &VelocityModel2D, out: &Path) -> Result<ImageScale> {
    let (bytes, scale) = encode_pgm(model);
    write_atomic(out, &bytes)?;
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".toml");
    let text = toml::to_string(&scale).map_err(|e| io_err(out, e))?;
    write_atomic(Path::new(&sidecar), text.as_bytes())?;
    Ok(scale)
}
