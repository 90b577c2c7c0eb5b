//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors, 2 when a
//! run fails after validation (I/O, numerical failure).

use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{duality_report, write_sweep_csv, DualityRecord, DualityReport};
use crate::detector::{build_uqsd, correlated_state, discriminate, make_detector_pair};
use crate::error::Error;
use crate::montecarlo::{run_experiment, stream_rng, RunConfig};
use crate::optics::{density_curve, Path, SlitGeometry};

#[derive(Debug, Parser)]
#[command(name = "wpduality", version, about = "Two-slit duality experiment with a UQSD path detector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Noiseless screen density of the detector-correlated state.
    Pattern {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid points across the window.
        #[arg(long, default_value_t = SlitGeometry::DEFAULT_POINTS)]
        points: usize,
    },
    /// Monte Carlo experiment: histograms and duality report.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Duality report for one overlap; Monte Carlo only if --samples > 0.
    Duality {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Duality table over a grid of overlaps.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Unitarity of the constructed interaction and discrimination statistics.
    UqsdVerify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Detector overlap c = <d1|d2>.
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    /// Slit separation in meters.
    #[arg(long, default_value_t = 10e-6)]
    slit_separation: f64,
    /// Wavelength in meters.
    #[arg(long, default_value_t = 500e-9)]
    wavelength: f64,
    /// Slit-to-screen distance in meters.
    #[arg(long, default_value_t = 1.0)]
    screen_distance: f64,
    /// Standard deviation of the intensity envelope in meters.
    #[arg(long, default_value_t = 0.15)]
    envelope_width: f64,
    /// Quantons to simulate (per path for uqsd-verify).
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 4096)]
    bins: usize,
    /// Half-width of the screen window in meters.
    #[arg(long, default_value_t = SlitGeometry::DEFAULT_WINDOW)]
    window: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    streams: usize,
    /// Write artifacts here instead of printing to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 11)]
    steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandKind {
    Pattern { points: usize },
    Run,
    Duality,
    Sweep { from: f64, to: f64, steps: usize },
    UqsdVerify { from: f64, to: f64, steps: usize },
}

/// Validated command-line configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: CommandKind,
    pub run: RunConfig,
    pub out_dir: Option<PathBuf>,
    pub format: Format,
}

impl CliConfig {
    fn from_cli(cli: Cli) -> Result<Self, String> {
        let (common, command) = match cli.command {
            Command::Pattern { common, points } => (common, CommandKind::Pattern { points }),
            Command::Run { common } => (common, CommandKind::Run),
            Command::Duality { common } => (common, CommandKind::Duality),
            Command::Sweep { common, grid } => (
                common,
                CommandKind::Sweep { from: grid.from, to: grid.to, steps: grid.steps },
            ),
            Command::UqsdVerify { common, grid } => (
                common,
                CommandKind::UqsdVerify { from: grid.from, to: grid.to, steps: grid.steps },
            ),
        };

        let mut problems = Vec::new();
        let geometry = match SlitGeometry::new(
            common.slit_separation,
            common.wavelength,
            common.screen_distance,
            common.envelope_width,
        ) {
            Ok(g) => g,
            Err(e) => {
                problems.push(e.to_string());
                SlitGeometry::default()
            }
        };
        let run = RunConfig {
            overlap: common.overlap,
            geometry,
            n_samples: common.samples,
            seed: common.seed,
            n_bins: common.bins,
            x_max: common.window,
            n_streams: common.streams,
        };
        problems.extend(run.problems());
        match command {
            CommandKind::Pattern { points } if points < 2 => {
                problems.push(format!("points must be at least 2 (got {points})"));
            }
            CommandKind::Sweep { from, to, steps } | CommandKind::UqsdVerify { from, to, steps } => {
                for (name, v) in [("from", from), ("to", to)] {
                    if !(0.0..=1.0).contains(&v) {
                        problems.push(format!("{name} must lie in [0, 1] (got {v})"));
                    }
                }
                if from > to {
                    problems.push(format!("from ({from}) must not exceed to ({to})"));
                }
                if steps == 0 {
                    problems.push("steps must be at least 1".to_string());
                }
            }
            _ => {}
        }
        if !problems.is_empty() {
            return Err(problems.join("; "));
        }

        let format = common.format.unwrap_or(match command {
            CommandKind::Pattern { .. } | CommandKind::Sweep { .. } => Format::Csv,
            _ => Format::Json,
        });
        Ok(Self {
            command,
            run,
            out_dir: common.out_dir,
            format,
        })
    }
}

/// Overlap values `from, …, to` in `steps` evenly spaced points.
fn overlap_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![from];
    }
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| (from * (last - i as f64) + to * i as f64) / last)
        .collect()
}

#[derive(Debug, thiserror::Error)]
enum RuntimeError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One row of `uqsd-verify` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UqsdCheck {
    pub c: f64,
    pub alpha_sq: f64,
    pub beta_sq: f64,
    pub unitarity_defect: f64,
    pub image_residual: f64,
    pub trials_per_path: u64,
    pub conclusive: u64,
    pub inconclusive: u64,
    pub wrong_verdicts: u64,
    pub pass: bool,
}

pub const UQSD_CSV_HEADER: &str = "c,alpha_sq,beta_sq,unitarity_defect,image_residual,trials_per_path,conclusive,inconclusive,wrong_verdicts,pass";

#[derive(Serialize)]
struct DensityPoint {
    x_m: f64,
    density_per_m: f64,
}

struct Output<'a> {
    dir: Option<&'a FsPath>,
    stdout: &'a mut dyn Write,
}

impl Output<'_> {
    /// Writes `bytes` to `name` under the output directory, or to stdout.
    fn emit(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        match self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), bytes)
            }
            None => self.stdout.write_all(bytes),
        }
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, RuntimeError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn reports_bytes(reports: &[DualityReport], format: Format) -> Result<Vec<u8>, RuntimeError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_sweep_csv(reports, &mut buf)?,
        Format::Json => {
            let records: Vec<DualityRecord> = reports.iter().map(|r| r.record()).collect();
            buf = if let [single] = records.as_slice() {
                to_json(single)?
            } else {
                to_json(&records)?
            };
        }
    }
    Ok(buf)
}

fn report_for(config: &RunConfig, c: f64, seed: u64, stderr: &mut dyn Write) -> Result<DualityReport, RuntimeError> {
    if config.n_samples == 0 {
        return Ok(duality_report(c, None)?);
    }
    let cfg = RunConfig {
        overlap: c,
        seed,
        ..config.clone()
    };
    let res = run_experiment(&cfg)?;
    let s = res.summary;
    writeln!(
        stderr,
        "c={c}: a1={} a2={} slit1={} slit2={} wrong={} out_of_window={}",
        s.a1, s.a2, s.slit1, s.slit2, s.wrong_verdicts, s.out_of_window
    )?;
    Ok(res.report()?)
}

fn execute(cfg: &CliConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), RuntimeError> {
    let mut out = Output {
        dir: cfg.out_dir.as_deref(),
        stdout,
    };
    let run = &cfg.run;
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    match cfg.command {
        CommandKind::Pattern { points } => {
            let state = correlated_state(&make_detector_pair(run.overlap)?, false);
            let curve = density_curve(&state, &run.geometry, run.x_max, points)?;
            if curve.normalization_warning {
                writeln!(stderr, "warning: density integrates to {} over the window", curve.integral)?;
            }
            let bytes = match cfg.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    curve.write_csv(&mut buf)?;
                    buf
                }
                Format::Json => {
                    let pts: Vec<DensityPoint> = curve
                        .grid
                        .iter()
                        .zip(&curve.values)
                        .map(|(&x_m, &density_per_m)| DensityPoint { x_m, density_per_m })
                        .collect();
                    to_json(&pts)?
                }
            };
            out.emit(&format!("pattern.{ext}"), &bytes)?;
        }
        CommandKind::Run => {
            let res = run_experiment(run)?;
            if cfg.out_dir.is_some() {
                let mut buf = Vec::new();
                res.histograms.write_csv(&mut buf)?;
                out.emit("histograms.csv", &buf)?;
            }
            let s = res.summary;
            writeln!(
                stderr,
                "a1={} a2={} slit1={} slit2={} wrong={} out_of_window={}",
                s.a1, s.a2, s.slit1, s.slit2, s.wrong_verdicts, s.out_of_window
            )?;
            out.emit(&format!("report.{ext}"), &reports_bytes(&[res.report()?], cfg.format)?)?;
        }
        CommandKind::Duality => {
            let report = report_for(run, run.overlap, run.seed, stderr)?;
            out.emit(&format!("report.{ext}"), &reports_bytes(&[report], cfg.format)?)?;
        }
        CommandKind::Sweep { from, to, steps } => {
            // row i is seeded with seed + i
            let reports = overlap_grid(from, to, steps)
                .into_iter()
                .enumerate()
                .map(|(i, c)| report_for(run, c, run.seed.wrapping_add(i as u64), stderr))
                .collect::<Result<Vec<_>, _>>()?;
            out.emit(&format!("sweep.{ext}"), &reports_bytes(&reports, cfg.format)?)?;
        }
        CommandKind::UqsdVerify { from, to, steps } => {
            let checks = overlap_grid(from, to, steps)
                .into_iter()
                .enumerate()
                .map(|(i, c)| uqsd_check(c, run.n_samples, run.seed, i))
                .collect::<Result<Vec<_>, _>>()?;
            let bytes = match cfg.format {
                Format::Json => to_json(&checks)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    writeln!(buf, "{UQSD_CSV_HEADER}")?;
                    for k in &checks {
                        writeln!(
                            buf,
                            "{},{},{},{},{},{},{},{},{},{}",
                            k.c,
                            k.alpha_sq,
                            k.beta_sq,
                            k.unitarity_defect,
                            k.image_residual,
                            k.trials_per_path,
                            k.conclusive,
                            k.inconclusive,
                            k.wrong_verdicts,
                            k.pass
                        )?;
                    }
                    buf
                }
            };
            out.emit(&format!("uqsd_verify.{ext}"), &bytes)?;
        }
    }
    Ok(())
}

fn uqsd_check(c: f64, trials: u64, seed: u64, index: usize) -> Result<UqsdCheck, RuntimeError> {
    let u = build_uqsd(c)?;
    let mut rng = stream_rng(seed, index);
    let (mut conclusive, mut inconclusive, mut wrong) = (0u64, 0u64, 0u64);
    for path in Path::BOTH {
        for _ in 0..trials {
            match discriminate(path, &u, &mut rng).path() {
                None => inconclusive += 1,
                Some(p) => {
                    conclusive += 1;
                    if p != path {
                        wrong += 1;
                    }
                }
            }
        }
    }
    let alpha_sq = u.alpha() * u.alpha();
    let beta_sq = u.beta() * u.beta();
    let unitarity_defect = u.unitarity_defect();
    let image_residual = u.image_residual();
    let pass = unitarity_defect <= 1e-12
        && image_residual <= 1e-12
        && (alpha_sq - (1.0 - c)).abs() <= 1e-12
        && (beta_sq - c).abs() <= 1e-12
        && wrong == 0;
    Ok(UqsdCheck {
        c,
        alpha_sq,
        beta_sq,
        unitarity_defect,
        image_residual,
        trials_per_path: trials,
        conclusive,
        inconclusive,
        wrong_verdicts: wrong,
        pass,
    })
}

/// Parses `argv` (program name first), runs the selected command and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let cfg = match CliConfig::from_cli(cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 1;
        }
    };
    match execute(&cfg, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
