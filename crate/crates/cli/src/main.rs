mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hvfwi::harness::{
    ricker_shift_scan, rmse, scan_constant_velocity, score, strict_local_maxima, strict_local_minima,
};
use hvfwi::helmholtz::{forward_data, PmlSpec, VelocityModel2D};
use hvfwi::hv::{hv_distance, GridSignal, HvParams};
use hvfwi::inversion::{add_noise, fwi_invert, MisfitChoice};
use hvfwi::io::{
    export_image, read_gathers, read_grid, read_text, write_atomic, write_gathers, write_grid, GatherFile,
};
use hvfwi::ot::{w2_misfit_real, DEFAULT_BETA_MARGIN};
use hvfwi::Error;
use log::{info, warn};
use serde_json::{json, Value};

use config::{missing, RunConfig};

#[derive(Parser)]
#[command(name = "hvfwi", version, about = "Frequency-domain FWI with the HV misfit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize gathers on a model.
    Forward(Common),
    /// Invert observed gathers from a starting model.
    Invert(Common),
    /// HV distance between two text signals.
    HvDist(Common),
    /// W2 distance between two text signals.
    W2Dist(Common),
    /// Misfit against homogeneous speed on a line survey.
    ScanVelocity(Common),
    /// Misfit of a Ricker wavelet against shifted copies.
    ScanRicker(Common),
    /// Add seeded Gaussian noise to gathers.
    Noise(Common),
    /// RMSE and PSNR of a model against a reference.
    Score(Common),
    /// Write a grid as an 8-bit graymap.
    ExportImage(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    L2,
    Hv,
    W2,
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            Error::InvalidParameter { .. }
            | Error::Format { .. }
            | Error::GridMismatch(_)
            | Error::MismatchedGeometry(_)
            | Error::OutsideDomain { .. }
            | Error::DegenerateReference => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<(Value, bool), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Forward(c) => ("forward", c),
        Command::Invert(c) => ("invert", c),
        Command::HvDist(c) => ("hv-dist", c),
        Command::W2Dist(c) => ("w2-dist", c),
        Command::ScanVelocity(c) => ("scan-velocity", c),
        Command::ScanRicker(c) => ("scan-ricker", c),
        Command::Noise(c) => ("noise", c),
        Command::Score(c) => ("score", c),
        Command::ExportImage(c) => ("export-image", c),
    };
    let result = RunConfig::load(&common.config).map_err(Failure::from).and_then(|cfg| {
        let run = Run { cfg, flags: common };
        match cli.command {
            Command::Forward(_) => run.forward(),
            Command::Invert(_) => run.invert(),
            Command::HvDist(_) => run.hv_dist(),
            Command::W2Dist(_) => run.w2_dist(),
            Command::ScanVelocity(_) => run.scan_velocity(),
            Command::ScanRicker(_) => run.scan_ricker(),
            Command::Noise(_) => run.noise(),
            Command::Score(_) => run.score(),
            Command::ExportImage(_) => run.export_image(),
        }
    });
    match result {
        Ok((mut summary, converged)) => {
            summary["command"] = json!(name);
            summary["status"] = json!(if converged { "ok" } else { "not_converged" });
            println!("{summary}");
            if converged {
                ExitCode::SUCCESS
            } else {
                warn!("solver hit its iteration cap");
                ExitCode::from(3)
            }
        }
        Err(f) => {
            let (code, status, msg) = match f {
                Failure::Config(m) => (2, "config_error", m),
                Failure::Numerical(m) => (3, "numerical_error", m),
                Failure::Io(m) => (1, "io_error", m),
            };
            log::error!("{msg}");
            println!("{}", json!({ "command": name, "status": status, "error": msg }));
            ExitCode::from(code)
        }
    }
}

struct Run<'a> {
    cfg: RunConfig,
    flags: &'a Common,
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn read_signal(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = read_text(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|_| Failure::Config(format!("{}: sample {i} is not a number: `{l}`", path.display())))
        })
        .collect()
}

impl Run<'_> {
    fn out(&self) -> Result<PathBuf, Failure> {
        match (&self.flags.out, &self.cfg.outputs.path) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(p)) => Ok(self.cfg.resolve(p)),
            (None, None) => Err(missing("outputs.path").into()),
        }
    }

    fn metric(&self) -> MisfitChoice {
        match self.flags.metric {
            Some(Metric::L2) => MisfitChoice::L2,
            Some(Metric::W2) => match self.cfg.misfit {
                Some(m @ MisfitChoice::W2 { .. }) => m,
                _ => MisfitChoice::w2_default(),
            },
            Some(Metric::Hv) => match self.cfg.misfit {
                Some(m @ MisfitChoice::Hv { .. }) => m,
                _ => MisfitChoice::hv_default(),
            },
            None => self.cfg.misfit.unwrap_or_else(MisfitChoice::hv_default),
        }
    }

    fn noise_level(&self) -> Option<(f64, u64)> {
        let snr = self.flags.snr_db.or(self.cfg.noise.map(|n| n.snr_db))?;
        Some((snr, self.flags.seed.or(self.cfg.noise.map(|n| n.seed)).unwrap_or(0)))
    }

    fn model_input(&self, background: bool) -> Result<VelocityModel2D, Failure> {
        if let Some(p) = &self.cfg.inputs.model {
            return Ok(read_grid(&self.cfg.resolve(p))?);
        }
        let phantom = self.cfg.phantom.ok_or_else(|| missing("inputs.model"))?;
        Ok(if background { phantom.background_model()? } else { phantom.model()? })
    }

    fn pml(&self, model: &VelocityModel2D) -> PmlSpec {
        self.cfg.pml.or(self.cfg.inversion.as_ref().map(|i| i.pml)).unwrap_or_else(|| PmlSpec::for_model(model))
    }

    fn forward(&self) -> Outcome {
        let model = self.model_input(false)?;
        let geometry = self.cfg.geometry()?;
        let freqs_hz = self
            .cfg
            .frequencies_hz
            .clone()
            .or(self.cfg.inversion.as_ref().map(|i| i.frequency_schedule.clone()))
            .ok_or_else(|| missing("frequencies_hz"))?;
        let pml = self.pml(&model);
        info!(
            "forward: {} sources, {} receivers, {} frequencies",
            geometry.sources.len(),
            geometry.receivers.len(),
            freqs_hz.len()
        );
        let mut gathers = forward_data(&model, &geometry, &freqs_hz, pml)?;
        if let Some((snr, seed)) = self.noise_level() {
            info!("adding noise at {snr} dB, seed {seed}");
            gathers = add_noise(&gathers, snr, seed)?;
        }
        let out = self.out()?;
        let n = gathers.len();
        write_gathers(&out, &GatherFile { geometry, freqs_hz, gathers })?;
        Ok((json!({ "gathers": n, "out": out.display().to_string() }), true))
    }

    fn invert(&self) -> Outcome {
        let data = read_gathers(&self.cfg.input(self.cfg.inputs.data.as_ref(), "inputs.data")?)?;
        let initial = self.model_input(true)?;
        let mut config = self.cfg.inversion.clone().ok_or_else(|| missing("inversion"))?;
        if let Some(k) = self.flags.max_iters {
            config.optimizer.max_iters_per_freq = k;
        }
        let choice = self.metric();
        info!("invert with {} over {:?} Hz", choice.name(), config.frequency_schedule);
        let report = fwi_invert(&data.gathers, &data.geometry, &initial, &config, &choice)?;
        let out = self.out()?;
        write_grid(&out, &report.final_model)?;
        let mut csv = String::from("round,freq_hz,iteration,misfit\n");
        for s in &report.stages {
            info!(
                "round {} at {} Hz: {} misfits, {:?}, {:.1} s",
                s.round,
                s.freq_hz,
                s.misfits.len(),
                s.end,
                s.seconds
            );
            for (k, m) in s.misfits.iter().enumerate() {
                csv.push_str(&format!("{},{:e},{k},{m:e}\n", s.round, s.freq_hz));
            }
        }
        write_atomic(&out.with_extension("history.csv"), csv.as_bytes())?;
        let converged = report.stages.iter().all(|s| s.solver_converged);
        let history = report.misfit_history();
        Ok((
            json!({
                "metric": choice.name(),
                "stages": report.stages.len(),
                "final_misfit": history.last().copied().map(finite),
                "line_search_failed": report.line_search_failed(),
                "out": out.display().to_string(),
            }),
            converged,
        ))
    }

    fn signals(&self) -> Result<(Vec<f64>, Vec<f64>), Failure> {
        let f0 = read_signal(&self.cfg.input(self.cfg.inputs.f0.as_ref(), "inputs.f0")?)?;
        let f1 = read_signal(&self.cfg.input(self.cfg.inputs.f1.as_ref(), "inputs.f1")?)?;
        if f0.len() != f1.len() {
            return Err(Failure::Config(format!("inputs.f1: {} samples, inputs.f0 has {}", f1.len(), f0.len())));
        }
        Ok((f0, f1))
    }

    fn hv_dist(&self) -> Outcome {
        let (f0, f1) = self.signals()?;
        let n_x = f0.len().saturating_sub(1);
        let params = match self.cfg.hv {
            Some(p) if p.n_x == n_x => p,
            Some(p) => {
                return Err(Failure::Config(format!("hv.n_x is {} but the signals have {n_x} intervals", p.n_x)))
            }
            None => HvParams::for_grid(n_x),
        };
        let r = hv_distance(&GridSignal::new(f0)?, &GridSignal::new(f1)?, &params)?;
        info!("hv: {} iterations, energy {:e}", r.iterations, r.quad_energy);
        Ok((json!({ "distance": r.distance, "action": r.action, "iterations": r.iterations }), r.converged))
    }

    fn w2_dist(&self) -> Outcome {
        let (f0, f1) = self.signals()?;
        let margin = self.cfg.w2.map(|w| w.beta_margin).unwrap_or(DEFAULT_BETA_MARGIN);
        let (w2_sq, _) = w2_misfit_real(&f0, &f1, margin)?;
        Ok((json!({ "distance": w2_sq.sqrt(), "squared": w2_sq, "beta_margin": margin }), true))
    }

    fn scan_velocity(&self) -> Outcome {
        let s = self.cfg.scan_velocity.clone().ok_or_else(|| missing("scan_velocity"))?;
        if s.points < 2 {
            return Err(Failure::Config("scan_velocity.points: needs at least 2".into()));
        }
        let grid: Vec<f64> =
            (0..s.points).map(|i| s.c_min + (s.c_max - s.c_min) * i as f64 / (s.points - 1) as f64).collect();
        let metrics: Vec<(String, MisfitChoice)> = s.metrics.iter().map(|m| (m.name().to_string(), *m)).collect();
        info!("scanning {} speeds with {} metrics", grid.len(), metrics.len());
        let scan = scan_constant_velocity(&grid, s.c_star, &s.line, s.freq_hz, &metrics)?;
        self.write_scan(&scan)
    }

    fn scan_ricker(&self) -> Outcome {
        let s = self.cfg.scan_ricker.clone().ok_or_else(|| missing("scan_ricker"))?;
        if s.points < 2 {
            return Err(Failure::Config("scan_ricker.points: needs at least 2".into()));
        }
        let shifts: Vec<f64> =
            (0..s.points).map(|i| s.s_min + (s.s_max - s.s_min) * i as f64 / (s.points - 1) as f64).collect();
        let sets: Vec<(f64, f64, f64)> = s.hv_weights.iter().map(|w| (w[0], w[1], w[2])).collect();
        let scan = ricker_shift_scan(&shifts, &sets, &s.spec)?;
        self.write_scan(&scan)
    }

    fn write_scan(&self, scan: &hvfwi::harness::ScanResult) -> Outcome {
        let out = self.out()?;
        write_atomic(&out, scan.to_csv().as_bytes())?;
        let curves: Vec<Value> = scan
            .labels
            .iter()
            .zip(&scan.curves)
            .map(|(l, c)| {
                let argmin = c.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| scan.grid[i]);
                json!({
                    "label": l,
                    "argmin": argmin,
                    "local_minima": strict_local_minima(c).len(),
                    "local_maxima": strict_local_maxima(c).len(),
                })
            })
            .collect();
        Ok((json!({ "curves": curves, "out": out.display().to_string() }), true))
    }

    fn noise(&self) -> Outcome {
        let path = self.cfg.input(self.cfg.inputs.data.as_ref(), "inputs.data")?;
        let mut file = read_gathers(&path)?;
        let (snr, seed) = self.noise_level().ok_or_else(|| missing("noise.snr_db"))?;
        file.gathers = add_noise(&file.gathers, snr, seed)?;
        let out = self.out()?;
        write_gathers(&out, &file)?;
        Ok((json!({ "snr_db": finite(snr), "seed": seed, "out": out.display().to_string() }), true))
    }

    fn score(&self) -> Outcome {
        let model = read_grid(&self.cfg.input(self.cfg.inputs.model.as_ref(), "inputs.model")?)?;
        let reference = read_grid(&self.cfg.input(self.cfg.inputs.reference.as_ref(), "inputs.reference")?)?;
        let (rmse, psnr) = match score(&model, &reference) {
            Ok(q) => (q.rmse, q.psnr),
            Err(Error::DegenerateReference) => (rmse(&model, &reference), f64::INFINITY),
            Err(e) => return Err(e.into()),
        };
        let summary = json!({ "rmse": finite(rmse), "psnr": finite(psnr) });
        if let Some(out) = self.flags.out.clone().or(self.cfg.outputs.path.as_ref().map(|p| self.cfg.resolve(p))) {
            write_atomic(&out, format!("{summary}\n").as_bytes())?;
        }
        Ok((summary, true))
    }

    fn export_image(&self) -> Outcome {
        let model = read_grid(&self.cfg.input(self.cfg.inputs.model.as_ref(), "inputs.model")?)?;
        let out = self.out()?;
        let scale = export_image(&model, &out)?;
        Ok((json!({ "min": scale.min, "max": scale.max, "out": out.display().to_string() }), true))
    }
}
