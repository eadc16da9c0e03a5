use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use serde_json::Value;
use twodisk::io::config::GeometryInput;
use twodisk::io::{exit_code, run, Mode, RunConfig, SigmaGrid};
use twodisk::Error;

#[derive(Parser)]
#[command(name = "twodisk", version, about = "Two hard disks in a circular cavity: classical and quantum pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble-averaged largest Lyapunov exponent per sigma.
    ClassicalLyapunov(Common),
    /// Spectrum of one symmetry block at one sigma.
    QuantumSpectrum(Common),
    /// Spectrum of one block across a sigma grid.
    QuantumSweep(Common),
    /// Unfolded nearest-neighbour spacing statistics at one sigma.
    AnalyzeSpacing(Common),
    /// Pressure against volume for selected levels.
    AnalyzeEos(Common),
    /// Mean squared disk separation and its correlation with pressure.
    AnalyzeDistance(Common),
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::ClassicalLyapunov(c) => (Mode::ClassicalLyapunov, c),
            Command::QuantumSpectrum(c) => (Mode::QuantumSpectrum, c),
            Command::QuantumSweep(c) => (Mode::QuantumSweep, c),
            Command::AnalyzeSpacing(c) => (Mode::AnalyzeSpacing, c),
            Command::AnalyzeEos(c) => (Mode::AnalyzeEos, c),
            Command::AnalyzeDistance(c) => (Mode::AnalyzeDistance, c),
        }
    }
}

/// Flags override the matching fields of `--config`.
#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disk-to-cavity radius ratio a/R.
    #[arg(long, conflicts_with_all = ["geometry", "sigma_grid"])]
    sigma: Option<f64>,
    /// Physical radii `R,a`.
    #[arg(long, value_parser = parse_geometry, conflicts_with = "sigma_grid")]
    geometry: Option<GeometryInput>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    sigma_grid: Option<SigmaGrid>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// `$TWODISK_CACHE_DIR` takes precedence.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Angular-momentum block.
    #[arg(long, allow_hyphen_values = true)]
    l_z: Option<i32>,
    /// Number of basis functions.
    #[arg(long)]
    m: Option<usize>,
    /// Relative overlap eigenvalue cutoff.
    #[arg(long)]
    eps_n: Option<f64>,
    /// Drop the disk-disk exclusion (free pair, wall-only billiard).
    #[arg(long)]
    noninteracting: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    n_col: Option<usize>,
    /// Comma-separated 1-based levels for the pressure and distance curves.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
}

fn parse_geometry(s: &str) -> Result<GeometryInput, String> {
    let (r, a) = s.split_once(',').ok_or("expected R,a")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    Ok(GeometryInput { cavity_radius: num(r)?, disk_radius: num(a)? })
}

fn parse_grid(s: &str) -> Result<SigmaGrid, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => Ok(SigmaGrid::Range { start: num(start)?, stop: num(stop)?, step: num(step)? }),
        [list] => list.split(',').map(num).collect::<Result<_, _>>().map(SigmaGrid::List),
        _ => Err("expected start:stop:step or a comma-separated list".into()),
    }
}

fn load(mode: Mode, c: &Common) -> twodisk::Result<RunConfig> {
    let Some(path) = &c.config else {
        return Ok(RunConfig::new(mode));
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    // The subcommand decides the mode.
    if let Value::Object(map) = &mut value {
        map.insert("mode".into(), serde_json::to_value(mode)?);
    }
    RunConfig::from_json(&value.to_string())
}

fn resolve(mode: Mode, c: Common) -> twodisk::Result<RunConfig> {
    let mut cfg = load(mode, &c)?;
    if c.sigma.is_some() || c.geometry.is_some() || c.sigma_grid.is_some() {
        cfg.sigma = c.sigma;
        cfg.geometry = c.geometry;
        cfg.sigma_grid = c.sigma_grid;
    }
    if let Some(v) = c.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = c.cache_dir {
        cfg.cache_dir = Some(v);
    }
    if let Some(v) = c.threads {
        cfg.threads = v;
    }
    if let Some(v) = c.l_z {
        cfg.quantum.l_z = v;
    }
    if let Some(v) = c.m {
        cfg.quantum.m = v;
    }
    if let Some(v) = c.eps_n {
        cfg.quantum.eps_n = v;
    }
    if c.noninteracting {
        cfg.quantum.interacting = false;
        cfg.classical.interacting = false;
    }
    if let Some(v) = c.seed {
        cfg.classical.seed = v;
    }
    if let Some(v) = c.n_init {
        cfg.classical.n_init = v;
    }
    if let Some(v) = c.n_col {
        cfg.classical.n_col = v;
    }
    if let Some(v) = c.levels {
        cfg.analysis.levels = v;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (mode, common) = Cli::parse().command.split();
    let outcome = resolve(mode, common).and_then(|cfg| run(&cfg));
    match &outcome {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            if !report.failed_points.is_empty() {
                error!("{} sigma points failed: {:?}", report.failed_points.len(), report.failed_points);
            }
        }
        Err(e) => error!("{e}"),
    }
    ExitCode::from(exit_code(&outcome) as u8)
}
