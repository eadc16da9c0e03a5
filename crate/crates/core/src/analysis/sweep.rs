use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, HermiticityCheck, MatrixTriple};
use crate::basis::{auto_rectangle, enumerate_basis, precompute_kernels, BasisSet, Exclusion};
use crate::error::Result;
use crate::geometry::ScaledGeometry;
use crate::io::cache::{Cache, MatrixKey};
use crate::solver::{expectation_d2, solve_block, solve_block_guarded, SpectralResult, DEFAULT_NORM_CUTOFF};
use crate::special::{BesselZeroTable, GridSpec, QuadratureRule};

/// Parameters of one quantum block, shared by every point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub l_z: i32,
    pub m: usize,
    /// Basis rectangle; chosen automatically when absent.
    pub k_max: Option<u32>,
    pub n_max: Option<u32>,
    pub beta: f64,
    pub cutoff: f64,
    pub grid: GridSpec,
    pub hermiticity: HermiticityCheck,
    /// `false` sets the exclusion factor to one (independent disks).
    pub interacting: bool,
    /// Raise the cutoff where a level falls below the free floor; a sweep then
    /// re-solves every point at the largest cutoff any point needed.
    pub floor_guard: bool,
}

impl BlockConfig {
    pub fn new(l_z: i32, m: usize) -> Self {
        Self {
            l_z,
            m,
            k_max: None,
            n_max: None,
            beta: 1.5,
            cutoff: DEFAULT_NORM_CUTOFF,
            grid: GridSpec::default(),
            hermiticity: HermiticityCheck::default(),
            interacting: true,
            floor_guard: true,
        }
    }

    pub fn rectangle(&self) -> (u32, u32) {
        match (self.k_max, self.n_max) {
            (Some(k), Some(n)) => (k, n),
            _ => {
                let (k, n) = auto_rectangle(self.l_z, self.m);
                (self.k_max.unwrap_or(k), self.n_max.unwrap_or(n))
            }
        }
    }

    pub fn basis(&self) -> Result<BasisSet> {
        let (k, n) = self.rectangle();
        let zeros = BesselZeroTable::new(k, n);
        enumerate_basis(self.l_z, self.m, k, n, &zeros)
    }

    pub fn exclusion(&self, sigma: f64) -> Result<Exclusion> {
        let g = ScaledGeometry::from_sigma(sigma)?;
        Ok(if self.interacting { Exclusion::HardCore { beta: self.beta, l0: g.l0 } } else { Exclusion::Off })
    }

    fn matrix_key(&self, sigma: f64) -> Result<MatrixKey> {
        let (k_max, n_max) = self.rectangle();
        Ok(MatrixKey {
            sigma,
            exclusion: self.exclusion(sigma)?,
            l_z: self.l_z,
            m: self.m,
            k_max,
            n_max,
            grid: self.grid,
            hermiticity: format!("{:?}", self.hermiticity),
        })
    }
}

pub struct SolvedPoint {
    pub sigma: f64,
    pub mats: MatrixTriple,
    pub result: SpectralResult,
    pub cache_hit: bool,
}

/// Assembles (or loads) and solves the block at one `sigma`.
pub fn solve_point(cfg: &BlockConfig, basis: &BasisSet, sigma: f64, cache: Option<&Cache>) -> Result<SolvedPoint> {
    let key = cfg.matrix_key(sigma)?;
    let cached = cache.and_then(|c| c.load_matrices(&key, basis));
    let cache_hit = cached.is_some();
    let mats = match cached {
        Some(m) => {
            info!("sigma {sigma}: matrices loaded from cache");
            m
        }
        None => {
            let rule = QuadratureRule::new(cfg.grid);
            let kernels = precompute_kernels(&rule, key.exclusion, basis.max_fourier_index());
            let m = assemble(basis, &kernels, &rule, cfg.hermiticity)?;
            if let Some(c) = cache {
                c.store_matrices(&key, &m)?;
            }
            m
        }
    };
    let result = if cfg.floor_guard { solve_block_guarded(&mats, cfg.cutoff)? } else { solve_block(&mats, cfg.cutoff)? };
    if result.escalations > 0 {
        warn!("sigma {sigma}: ill-conditioned, norm cutoff raised to {:e}", result.cutoff);
    }
    Ok(SolvedPoint { sigma, mats, result, cache_hit })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub sigma: f64,
    /// Ascending scaled energies; index 0 is level 1.
    pub energies: Vec<f64>,
    /// `<d^2>` per level in scaled units, when computed.
    pub d2: Option<Vec<f64>>,
    pub retained_dim: usize,
    /// Norm cutoff actually used.
    pub cutoff: f64,
    pub max_projected_residual: f64,
    pub asymmetry_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub sigma: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub block: BlockConfig,
    pub basis_len: usize,
    pub points: Vec<SpectrumPoint>,
    pub failures: Vec<SweepFailure>,
}

/// One row of the long-format view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumRow {
    pub sigma: f64,
    pub l_z: i32,
    /// 1-based.
    pub level: usize,
    pub energy: f64,
    pub retained_dim: usize,
}

impl SpectrumTable {
    pub fn rows(&self) -> impl Iterator<Item = SpectrumRow> + '_ {
        self.points.iter().flat_map(move |p| {
            p.energies.iter().enumerate().map(move |(i, &energy)| SpectrumRow {
                sigma: p.sigma,
                l_z: self.block.l_z,
                level: i + 1,
                energy,
                retained_dim: p.retained_dim,
            })
        })
    }

    /// `(sigma, E)` of a 1-based level at every point where it exists.
    pub fn level_series(&self, level: usize) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.energies.get(level.wrapping_sub(1)).map(|&e| (p.sigma, e)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SweepStats {
    pub cache_hits: usize,
    pub assembled: usize,
}

/// Solves the block at every `sigma` (strictly increasing). Failures at a
/// point are recorded and the sweep continues.
pub fn sweep(
    cfg: &BlockConfig,
    sigmas: &[f64],
    with_d2: bool,
    cache: Option<&Cache>,
) -> Result<(SpectrumTable, SweepStats)> {
    if sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::Error::Config("sigma grid must be strictly increasing".into()));
    }
    for &s in sigmas {
        ScaledGeometry::from_sigma(s)?;
    }
    let basis = cfg.basis()?;
    let mut stats = SweepStats::default();
    let mut solved = Vec::with_capacity(sigmas.len());
    let mut failures = Vec::new();
    for &sigma in sigmas {
        match solve_point(cfg, &basis, sigma, cache) {
            Ok(sp) => {
                if sp.cache_hit {
                    stats.cache_hits += 1;
                } else {
                    stats.assembled += 1;
                }
                solved.push(sp);
            }
            Err(e) => {
                warn!("sigma {sigma}: {e}");
                failures.push(SweepFailure { sigma, message: e.to_string() });
            }
        }
    }
    // A common cutoff keeps neighbouring points on the same footing.
    let common = solved.iter().map(|sp| sp.result.cutoff).fold(cfg.cutoff, f64::max);
    if common > cfg.cutoff {
        info!("sweep norm cutoff raised to {common:e}");
    }
    let mut points = Vec::with_capacity(solved.len());
    for mut sp in solved {
        if sp.result.cutoff < common {
            sp.result = solve_block_guarded(&sp.mats, common)?;
        }
        let d2 = if with_d2 {
            Some((0..sp.result.len()).map(|l| expectation_d2(&sp.result, &sp.mats, l)).collect::<Result<_>>()?)
        } else {
            None
        };
        info!("sigma {}: {} levels, lowest {:.6}", sp.sigma, sp.result.len(), sp.result.energies[0]);
        points.push(SpectrumPoint {
            sigma: sp.sigma,
            max_projected_residual: sp.result.max_projected_residual(),
            energies: sp.result.energies,
            d2,
            retained_dim: sp.result.retained_dim,
            cutoff: sp.result.cutoff,
            asymmetry_h: sp.mats.asymmetry.h,
        });
    }
    let table = SpectrumTable { block: cfg.clone(), basis_len: basis.len(), points, failures };
    Ok((table, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> BlockConfig {
        BlockConfig {
            grid: GridSpec { n_radial: 32, n_angular: 128 },
            hermiticity: HermiticityCheck::None,
            ..BlockConfig::new(1, 30)
        }
    }

    #[test]
    fn levels_are_continuous_and_rise_with_sigma() {
        let sigmas: Vec<f64> = (0..9).map(|i| 0.1 + 0.01 * i as f64).collect();
        let (table, stats) = sweep(&small_cfg(), &sigmas, true, None).unwrap();
        assert_eq!(stats.assembled, 9);
        assert!(table.failures.is_empty());
        for level in 1..=5 {
            let s = table.level_series(level);
            for w in s.windows(2) {
                assert!(w[1].1 > w[0].1, "level {level} not rising");
                assert!((w[1].1 - w[0].1) / w[0].1 < 0.05);
            }
        }
        let rows: Vec<_> = table.rows().collect();
        assert_eq!(rows[0].level, 1);
        assert!(table.points.iter().all(|p| p.d2.as_ref().unwrap().iter().all(|&d| d > 0.0 && d <= 4.0)));
    }

    #[test]
    fn cache_round_trip_gives_identical_points() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let cfg = small_cfg();
        let (a, sa) = sweep(&cfg, &[0.2, 0.3], true, Some(&cache)).unwrap();
        let (b, sb) = sweep(&cfg, &[0.2, 0.3], true, Some(&cache)).unwrap();
        assert_eq!((sa.assembled, sb.cache_hits), (2, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(sweep(&small_cfg(), &[0.2, 0.1], false, None).is_err());
        assert!(sweep(&small_cfg(), &[0.2, 0.6], false, None).is_err());
    }
}
