use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use super::cache::{Cache, CACHE_DIR_ENV};
use super::config::{Mode, RunConfig};
use super::csv::{provenance_line, write_csv, CODE_VERSION};
use crate::analysis::{
    distance_curve, ks_critical_5pct, pressure_curve, pressure_distance_correlation, solve_point, spacing_statistics, sweep,
    t_parity_split, Parity, Reference, SpacingEnsemble, SpectrumTable,
};
use crate::classical::{lyapunov_ensemble, Billiard};
use crate::error::{Error, Result};
use crate::geometry::ScaledGeometry;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CACHE_RECOVERED: i32 = 4;

/// Seed of job `job` under master seed `master`: the SplitMix64 finalizer
/// applied to `master + (job + 1) * 0x9E3779B97F4A7C15`. Jobs are numbered
/// by their position in the sigma grid, so the value does not depend on how
/// jobs are scheduled.
pub fn job_seed(master: u64, job: u64) -> u64 {
    let mut z = master.wrapping_add(job.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub cache_hits: usize,
    pub assembled: usize,
    pub corrupt_cache_entries: usize,
    /// Sigma points that failed and were left out of the outputs.
    pub failed_points: Vec<f64>,
}

/// Exit status for the outcome of [`run`].
pub fn exit_code(outcome: &Result<RunReport>) -> i32 {
    match outcome {
        Err(Error::Config(_)) | Err(Error::InvalidGeometry(_)) => EXIT_CONFIG,
        Err(_) => EXIT_NUMERICAL,
        Ok(r) if !r.failed_points.is_empty() => EXIT_NUMERICAL,
        Ok(r) if r.corrupt_cache_entries > 0 => EXIT_CACHE_RECOVERED,
        Ok(_) => EXIT_SUCCESS,
    }
}

#[derive(Serialize)]
struct Frozen<'a> {
    code_version: &'static str,
    config: &'a RunConfig,
    sigmas: &'a [f64],
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    sigmas: Vec<f64>,
    out: &'a Path,
    cache: Option<Cache>,
    report: RunReport,
    params: Value,
}

impl Ctx<'_> {
    fn emit<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let path = self.out.join(name);
        write_csv(&path, &provenance_line(self.cfg.mode.name(), &self.params), header, rows)?;
        info!("wrote {}", path.display());
        self.report.files.push(path);
        Ok(())
    }

    fn sweep(&mut self, with_d2: bool) -> Result<SpectrumTable> {
        let (table, stats) = sweep(&self.cfg.quantum.block(), &self.sigmas, with_d2, self.cache.as_ref())?;
        self.report.cache_hits += stats.cache_hits;
        self.report.assembled += stats.assembled;
        if stats.cache_hits > 0 {
            info!("{} of {} sigma points loaded from the cache", stats.cache_hits, self.sigmas.len());
        }
        self.report.failed_points.extend(table.failures.iter().map(|f| f.sigma));
        if !table.failures.is_empty() {
            let rows: Vec<Vec<String>> =
                table.failures.iter().map(|f| vec![f.sigma.to_string(), f.message.clone()]).collect();
            self.emit("failures.csv", &["sigma", "message"], rows)?;
        }
        Ok(table)
    }

    fn emit_spectrum(&mut self, table: &SpectrumTable) -> Result<()> {
        let rows: Vec<Vec<String>> = table
            .rows()
            .map(|r| {
                vec![
                    r.sigma.to_string(),
                    r.l_z.to_string(),
                    r.level.to_string(),
                    r.energy.to_string(),
                    r.retained_dim.to_string(),
                ]
            })
            .collect();
        self.emit("spectrum.csv", &["sigma", "l_z", "level", "energy", "retained_dim"], rows)
    }

    fn emit_spacing(&mut self, stem: &str, ens: &SpacingEnsemble) -> Result<()> {
        let h = &ens.histogram;
        let rows: Vec<Vec<String>> = (0..h.counts.len())
            .map(|i| {
                vec![h.edges[i].to_string(), h.edges[i + 1].to_string(), h.counts[i].to_string(), h.density[i].to_string()]
            })
            .collect();
        self.emit(&format!("{stem}_histogram.csv"), &["bin_left", "bin_right", "count", "density"], rows)?;
        let rows: Vec<Vec<String>> = ens
            .ks
            .iter()
            .map(|k| {
                vec![
                    k.reference.name().to_string(),
                    k.statistic.to_string(),
                    k.n.to_string(),
                    ks_critical_5pct(k.n).to_string(),
                    ens.degree.to_string(),
                ]
            })
            .collect();
        self.emit(&format!("{stem}_ks.csv"), &["distribution", "statistic", "n", "critical_5pct", "fit_degree"], rows)?;
        info!(
            "{stem}: {} spacings, KS poisson {:.4} wigner {:.4} two_wigner {:.4}, closest {}",
            ens.spacings.len(),
            ens.ks(Reference::Poisson),
            ens.ks(Reference::Wigner),
            ens.ks(Reference::TwoWigner),
            ens.closest().name()
        );
        Ok(())
    }
}

/// Executes the pipeline selected by `cfg.mode` and writes its CSV outputs,
/// plus `config.json`, into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let sigmas = cfg.sigmas()?;
    let out = cfg.output_dir.as_path();
    fs::create_dir_all(out)?;

    let cache_root = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).or_else(|| cfg.cache_dir.clone());
    let cache = cache_root.map(Cache::new).transpose()?;

    // Paths do not change the numbers, so they stay out of the provenance.
    let mut params = serde_json::to_value(cfg)?;
    if let Value::Object(map) = &mut params {
        map.remove("output_dir");
        map.remove("cache_dir");
    }
    let frozen = Frozen { code_version: CODE_VERSION, config: cfg, sigmas: &sigmas };
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&frozen)? + "\n")?;

    let mut ctx = Ctx { cfg, sigmas, out, cache, report: RunReport::default(), params };
    ctx.report.files.push(out.join("config.json"));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    pool.install(|| dispatch(&mut ctx))?;

    let mut report = ctx.report;
    report.corrupt_cache_entries = ctx.cache.as_ref().map_or(0, Cache::corrupt_count);
    if report.corrupt_cache_entries > 0 {
        warn!("{} corrupt cache entries were recomputed", report.corrupt_cache_entries);
    }
    Ok(report)
}

fn dispatch(ctx: &mut Ctx) -> Result<()> {
    match ctx.cfg.mode {
        Mode::ClassicalLyapunov => classical(ctx),
        Mode::QuantumSpectrum => spectrum(ctx),
        Mode::QuantumSweep => {
            let table = ctx.sweep(false)?;
            ctx.emit_spectrum(&table)
        }
        Mode::AnalyzeSpacing => spacing(ctx),
        Mode::AnalyzeEos => eos(ctx),
        Mode::AnalyzeDistance => distance(ctx),
    }
}

fn classical(ctx: &mut Ctx) -> Result<()> {
    let c = &ctx.cfg.classical;
    let mut rows = Vec::with_capacity(ctx.sigmas.len());
    for (job, &sigma) in ctx.sigmas.iter().enumerate() {
        let g = ScaledGeometry::from_sigma(sigma)?;
        let billiard = if c.interacting { Billiard::new(&g) } else { Billiard::new(&g).without_interaction() };
        let est = lyapunov_ensemble(&billiard, &c.ensemble(job_seed(c.seed, job as u64)))?;
        info!("sigma {sigma}: lambda {:.5} +- {:.5}, torus fraction {}", est.mean, est.stderr(), est.torus_fraction);
        rows.push(vec![
            sigma.to_string(),
            est.mean.to_string(),
            est.std.to_string(),
            est.torus_fraction.to_string(),
            est.n_init.to_string(),
            est.n_col.to_string(),
            est.discards.to_string(),
            est.mean_per_collision.to_string(),
            est.std_per_collision.to_string(),
        ]);
    }
    ctx.emit(
        "classical.csv",
        &[
            "sigma",
            "mean_lambda",
            "std_lambda",
            "torus_fraction",
            "n_init",
            "n_col",
            "discards",
            "mean_lambda_per_collision",
            "std_lambda_per_collision",
        ],
        rows,
    )
}

fn single_point(ctx: &mut Ctx) -> Result<crate::analysis::SolvedPoint> {
    let block = ctx.cfg.quantum.block();
    let basis = block.basis()?;
    let sp = solve_point(&block, &basis, ctx.sigmas[0], ctx.cache.as_ref())?;
    if sp.cache_hit {
        ctx.report.cache_hits += 1;
        info!("matrices loaded from the cache");
    } else {
        ctx.report.assembled += 1;
    }
    Ok(sp)
}

fn spectrum(ctx: &mut Ctx) -> Result<()> {
    let sp = single_point(ctx)?;
    let block = ctx.cfg.quantum.block();
    let table = SpectrumTable {
        basis_len: sp.mats.dim(),
        points: vec![crate::analysis::SpectrumPoint {
            sigma: sp.sigma,
            max_projected_residual: sp.result.max_projected_residual(),
            energies: sp.result.energies,
            d2: None,
            retained_dim: sp.result.retained_dim,
            cutoff: sp.result.cutoff,
            asymmetry_h: sp.mats.asymmetry.h,
        }],
        block,
        failures: vec![],
    };
    ctx.emit_spectrum(&table)
}

fn spacing(ctx: &mut Ctx) -> Result<()> {
    let sp = single_point(ctx)?;
    let opts = ctx.cfg.analysis.spacing();
    let all = spacing_statistics(&sp.result.energies, &opts)?;
    ctx.emit_spacing("spacing", &all)?;
    if ctx.cfg.quantum.l_z != 0 || !ctx.cfg.analysis.t_parity {
        return Ok(());
    }
    let split = t_parity_split(&sp.mats, &sp.result)?;
    info!(
        "T parity: {} even, {} odd, {} ambiguous, commutator {:.3e}",
        split.even.len(),
        split.odd.len(),
        split.ambiguous.len(),
        split.commutator
    );
    let rows: Vec<Vec<String>> = (0..split.classes.len())
        .map(|l| {
            let class = match split.classes[l] {
                Parity::Even => "even",
                Parity::Odd => "odd",
                Parity::Ambiguous => "ambiguous",
            };
            vec![(l + 1).to_string(), sp.result.energies[l].to_string(), split.expectations[l].to_string(), class.into()]
        })
        .collect();
    ctx.emit("parity.csv", &["level", "energy", "t_expectation", "class"], rows)?;
    ctx.emit("parity_commutator.csv", &["commutator"], [[split.commutator.to_string()]])?;
    // Each class holds about half the levels, so the window halves too.
    let half = crate::analysis::SpacingOptions {
        window: crate::analysis::LevelWindow { skip: opts.window.skip / 2, keep: opts.window.keep / 2 },
        ..opts
    };
    for (name, seq) in [("spacing_even", &split.even), ("spacing_odd", &split.odd)] {
        match spacing_statistics(seq, &half) {
            Ok(ens) => ctx.emit_spacing(name, &ens)?,
            Err(e) => warn!("{name}: {e}"),
        }
    }
    Ok(())
}

fn eos(ctx: &mut Ctx) -> Result<()> {
    let table = ctx.sweep(false)?;
    let opts = ctx.cfg.analysis.peaks();
    let (mut curve_rows, mut peak_rows) = (Vec::new(), Vec::new());
    for &level in &ctx.cfg.analysis.levels {
        let curve = match pressure_curve(&table, level, &opts) {
            Ok(c) => c,
            Err(e) => {
                warn!("level {level}: {e}");
                continue;
            }
        };
        info!("level {level}: {} peaks", curve.peaks.len());
        if !curve.coarse_points.is_empty() {
            warn!("level {level}: grid too coarse at {} points", curve.coarse_points.len());
        }
        for p in &curve.points {
            curve_rows.push(vec![
                p.sigma.to_string(),
                p.volume.to_string(),
                p.pressure.to_string(),
                level.to_string(),
                curve.l_z.to_string(),
            ]);
        }
        for p in &curve.peaks {
            peak_rows.push(vec![
                level.to_string(),
                curve.l_z.to_string(),
                p.sigma.to_string(),
                p.volume.to_string(),
                p.pressure.to_string(),
                p.prominence.to_string(),
            ]);
        }
    }
    ctx.emit("eos.csv", &["sigma", "V", "P", "level", "L_z"], curve_rows)?;
    ctx.emit("peaks.csv", &["level", "L_z", "sigma", "V", "P", "prominence"], peak_rows)
}

fn distance(ctx: &mut Ctx) -> Result<()> {
    let table = ctx.sweep(true)?;
    let a = &ctx.cfg.analysis;
    let mut levels = a.levels.clone();
    levels.extend(a.tracked_pair);
    levels.sort_unstable();
    levels.dedup();
    let mut rows = Vec::new();
    for level in levels {
        let curve = distance_curve(&table, level)?;
        for &(sigma, d2) in &curve.points {
            rows.push(vec![sigma.to_string(), d2.to_string(), level.to_string(), curve.l_z.to_string()]);
        }
    }
    let report = pressure_distance_correlation(&table, a.tracked_pair[0], &a.peaks(), &a.crossings())?;
    let jumps: Vec<Vec<String>> = report
        .jumps
        .iter()
        .map(|j| {
            vec![
                j.sigma.to_string(),
                j.level.to_string(),
                j.pressure_jump.to_string(),
                j.d2_jump.to_string(),
                j.same_sign().to_string(),
            ]
        })
        .collect();
    match report.agreement() {
        Some(f) => info!("{} crossings, jump signs agree in {:.0}%", report.crossings.len(), 100.0 * f),
        None => warn!("no sharp avoided crossing between levels {:?}", a.tracked_pair),
    }
    ctx.emit("distance.csv", &["sigma", "d2", "level", "L_z"], rows)?;
    ctx.emit("crossings.csv", &["sigma", "level", "pressure_jump", "d2_jump", "same_sign"], jumps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_seeds_are_distinct_and_schedule_free() {
        let seeds: Vec<u64> = (0..1000).map(|j| job_seed(7, j)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_eq!(job_seed(7, 3), seeds[3]);
        assert_ne!(job_seed(8, 3), seeds[3]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), EXIT_CONFIG);
        assert_eq!(exit_code(&Err(Error::EmptySubspace)), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Ok(RunReport::default())), EXIT_SUCCESS);
        let r = RunReport { corrupt_cache_entries: 1, ..Default::default() };
        assert_eq!(exit_code(&Ok(r)), EXIT_CACHE_RECOVERED);
        let r = RunReport { failed_points: vec![0.3], corrupt_cache_entries: 1, ..Default::default() };
        assert_eq!(exit_code(&Ok(r)), EXIT_NUMERICAL);
    }

    #[test]
    fn spectrum_run_writes_frozen_config_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(Mode::QuantumSpectrum);
        cfg.sigma = Some(0.2);
        cfg.quantum.m = 40;
        cfg.quantum.n_radial = 32;
        cfg.quantum.n_angular = 64;
        cfg.output_dir = dir.path().join("out");
        let report = run(&cfg).unwrap();
        assert_eq!(report.assembled, 1);
        let (prov, rows) = super::super::csv::read_csv(&cfg.output_dir.join("spectrum.csv")).unwrap();
        assert!(prov.contains("quantum-spectrum"));
        assert!(!prov.contains("output_dir"));
        assert_eq!(rows[0], ["sigma", "l_z", "level", "energy", "retained_dim"]);
        assert!(rows.len() > 30);
        let frozen: Value = serde_json::from_slice(&fs::read(cfg.output_dir.join("config.json")).unwrap()).unwrap();
        assert_eq!(frozen["sigmas"][0], 0.2);
    }

    #[test]
    fn invalid_config_is_rejected_before_any_output() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(Mode::QuantumSpectrum);
        cfg.output_dir = dir.path().join("out");
        assert_eq!(exit_code(&run(&cfg)), EXIT_CONFIG);
        assert!(!cfg.output_dir.exists());
    }
}
