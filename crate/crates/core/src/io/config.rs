//! Run configuration: one JSON document, every section optional.
//!
//! ```json
//! {
//!   "mode": "analyze-eos",
//!   "sigma_grid": { "start": 0.05, "stop": 0.45, "step": 0.005 },
//!   "quantum": { "l_z": 1, "m": 400 },
//!   "analysis": { "levels": [1, 19, 38, 45] },
//!   "output_dir": "out/eos"
//! }
//! ```
//!
//! The disk size is given by exactly one of `sigma`, `geometry`
//! (`cavity_radius`, `disk_radius`) or `sigma_grid` (a `start`/`stop`/`step`
//! range or an explicit list).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{BlockConfig, CrossingOptions, EnergyScale, LevelWindow, PeakOptions, SpacingOptions};
use crate::assembly::HermiticityCheck;
use crate::classical::{EnsembleConfig, TorusThreshold, DEFAULT_RENORM_EVERY};
use crate::error::{Error, Result};
use crate::geometry::PhysicalGeometry;
use crate::special::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ClassicalLyapunov,
    QuantumSpectrum,
    QuantumSweep,
    AnalyzeSpacing,
    AnalyzeEos,
    AnalyzeDistance,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::ClassicalLyapunov,
        Mode::QuantumSpectrum,
        Mode::QuantumSweep,
        Mode::AnalyzeSpacing,
        Mode::AnalyzeEos,
        Mode::AnalyzeDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::ClassicalLyapunov => "classical-lyapunov",
            Mode::QuantumSpectrum => "quantum-spectrum",
            Mode::QuantumSweep => "quantum-sweep",
            Mode::AnalyzeSpacing => "analyze-spacing",
            Mode::AnalyzeEos => "analyze-eos",
            Mode::AnalyzeDistance => "analyze-distance",
        }
    }

    fn single_point(self) -> bool {
        matches!(self, Mode::QuantumSpectrum | Mode::AnalyzeSpacing)
    }

    fn needs_sweep(self) -> bool {
        matches!(self, Mode::QuantumSweep | Mode::AnalyzeEos | Mode::AnalyzeDistance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaGrid {
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl SigmaGrid {
    /// Points of the grid. Range points are `start + i step`, rounded to 12
    /// decimals so that CSV output stays readable.
    pub fn points(&self) -> Vec<f64> {
        match self {
            SigmaGrid::List(v) => v.clone(),
            SigmaGrid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryInput {
    pub cavity_radius: f64,
    pub disk_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumConfig {
    pub l_z: i32,
    pub m: usize,
    pub k_max: Option<u32>,
    pub n_max: Option<u32>,
    pub beta: f64,
    /// Relative norm cutoff.
    pub eps_n: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub hermiticity: HermiticityCheck,
    pub interacting: bool,
    pub floor_guard: bool,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        let b = BlockConfig::new(1, 400);
        Self {
            l_z: b.l_z,
            m: b.m,
            k_max: None,
            n_max: None,
            beta: b.beta,
            eps_n: b.cutoff,
            n_radial: b.grid.n_radial,
            n_angular: b.grid.n_angular,
            hermiticity: b.hermiticity,
            interacting: b.interacting,
            floor_guard: b.floor_guard,
        }
    }
}

impl QuantumConfig {
    pub fn block(&self) -> BlockConfig {
        BlockConfig {
            l_z: self.l_z,
            m: self.m,
            k_max: self.k_max,
            n_max: self.n_max,
            beta: self.beta,
            cutoff: self.eps_n,
            grid: GridSpec { n_radial: self.n_radial, n_angular: self.n_angular },
            hermiticity: self.hermiticity,
            interacting: self.interacting,
            floor_guard: self.floor_guard,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    pub n_init: usize,
    pub n_col: usize,
    /// Master seed; each sigma point gets [`job_seed`](super::job_seed).
    pub seed: u64,
    pub energy: f64,
    pub renorm_every: usize,
    pub interacting: bool,
    pub torus: TorusThreshold,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            n_init: 200,
            n_col: 100_000,
            seed: 1,
            energy: 1.0,
            renorm_every: DEFAULT_RENORM_EVERY,
            interacting: true,
            torus: TorusThreshold::default(),
        }
    }
}

impl ClassicalConfig {
    pub fn ensemble(&self, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            renorm_every: self.renorm_every,
            energy: self.energy,
            torus: self.torus,
            ..EnsembleConfig::new(self.n_init, self.n_col, seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// 1-based levels for pressure and distance curves.
    pub levels: Vec<usize>,
    /// Neighbouring levels whose avoided crossings are correlated.
    pub tracked_pair: [usize; 2],
    pub skip_levels: usize,
    pub keep_levels: usize,
    pub fit_degree: usize,
    pub bin_width: f64,
    pub bin_upper: f64,
    pub relative_prominence: f64,
    pub energy_scale: EnergyScale,
    pub crossing_half_width: usize,
    pub crossing_depth: f64,
    /// Split an `L_z = 0` spectrum by T-parity.
    pub t_parity: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let w = LevelWindow::default();
        let s = SpacingOptions::default();
        let p = PeakOptions::default();
        let c = CrossingOptions::default();
        Self {
            levels: vec![1, 19, 38, 45],
            tracked_pair: [17, 18],
            skip_levels: w.skip,
            keep_levels: w.keep,
            fit_degree: s.degree,
            bin_width: s.bin_width,
            bin_upper: s.bin_upper,
            relative_prominence: p.relative_prominence,
            energy_scale: p.energy,
            crossing_half_width: c.half_width,
            crossing_depth: c.depth,
            t_parity: true,
        }
    }
}

impl AnalysisConfig {
    pub fn spacing(&self) -> SpacingOptions {
        SpacingOptions {
            window: LevelWindow { skip: self.skip_levels, keep: self.keep_levels },
            degree: self.fit_degree,
            bin_width: self.bin_width,
            bin_upper: self.bin_upper,
        }
    }

    pub fn peaks(&self) -> PeakOptions {
        PeakOptions { relative_prominence: self.relative_prominence, energy: self.energy_scale }
    }

    pub fn crossings(&self) -> CrossingOptions {
        CrossingOptions { half_width: self.crossing_half_width, depth: self.crossing_depth }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_threads() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_grid: Option<SigmaGrid>,
    #[serde(default)]
    pub quantum: QuantumConfig,
    #[serde(default)]
    pub classical: ClassicalConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Overridden by `$TWODISK_CACHE_DIR`; no caching when both are absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            sigma: None,
            geometry: None,
            sigma_grid: None,
            quantum: QuantumConfig::default(),
            classical: ClassicalConfig::default(),
            analysis: AnalysisConfig::default(),
            output_dir: default_output_dir(),
            cache_dir: None,
            threads: default_threads(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// The sigma points of this run, in increasing order.
    pub fn sigmas(&self) -> Result<Vec<f64>> {
        let given = [self.sigma.is_some(), self.geometry.is_some(), self.sigma_grid.is_some()];
        match given.iter().filter(|&&g| g).count() {
            0 => return Err(Error::Config("one of sigma, geometry or sigma_grid is required".into())),
            1 => {}
            _ => return Err(Error::Config("sigma, geometry and sigma_grid are mutually exclusive".into())),
        }
        if let Some(s) = self.sigma {
            return Ok(vec![s]);
        }
        if let Some(g) = self.geometry {
            let p = PhysicalGeometry::new(g.cavity_radius, g.disk_radius);
            p.validate().map_err(|e| Error::Config(format!("geometry: {e}")))?;
            return Ok(vec![g.disk_radius / g.cavity_radius]);
        }
        Ok(self.sigma_grid.as_ref().map(SigmaGrid::points).unwrap_or_default())
    }

    /// Checks every field against the preconditions of the modules the mode
    /// uses, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        match self.sigmas() {
            Err(Error::Config(m)) => bad.push(m),
            Err(e) => bad.push(e.to_string()),
            Ok(s) => {
                if s.is_empty() {
                    bad.push("sigma_grid: no points".into());
                }
                if let Some(x) = s.iter().find(|&&x| !(x > 0.0 && x < 0.5)) {
                    bad.push(format!("sigma: {x} outside (0, 0.5)"));
                }
                if s.windows(2).any(|w| w[1] <= w[0]) {
                    bad.push("sigma_grid: must be strictly increasing".into());
                }
                if self.mode.single_point() && s.len() != 1 {
                    bad.push(format!("{}: needs a single sigma, got {}", self.mode.name(), s.len()));
                }
                if self.mode.needs_sweep() && s.len() < 3 {
                    bad.push(format!("{}: needs at least 3 sigma points for differencing", self.mode.name()));
                }
            }
        }
        if self.threads == 0 {
            bad.push("threads: must be >= 1".into());
        }
        if self.mode == Mode::ClassicalLyapunov {
            let c = &self.classical;
            if c.n_init == 0 {
                bad.push("classical.n_init: must be >= 1".into());
            }
            if c.n_col == 0 {
                bad.push("classical.n_col: must be >= 1".into());
            }
            if c.renorm_every == 0 {
                bad.push("classical.renorm_every: must be >= 1".into());
            }
            if !(c.energy > 0.0 && c.energy.is_finite()) {
                bad.push(format!("classical.energy: {} must be > 0", c.energy));
            }
        } else {
            let q = &self.quantum;
            if q.m == 0 {
                bad.push("quantum.m: must be >= 1".into());
            }
            if !(q.beta > 0.0 && q.beta.is_finite()) {
                bad.push(format!("quantum.beta: {} must be > 0", q.beta));
            }
            if !(q.eps_n > 0.0 && q.eps_n < 1.0) {
                bad.push(format!("quantum.eps_n: {} must lie in (0, 1)", q.eps_n));
            }
            if q.n_radial < 8 || q.n_angular < 16 {
                bad.push("quantum.n_radial / n_angular: grid too small (min 8 x 16)".into());
            }
            if q.k_max.is_some() != q.n_max.is_some() {
                bad.push("quantum.k_max / n_max: give both or neither".into());
            }
            let a = &self.analysis;
            if matches!(self.mode, Mode::AnalyzeEos | Mode::AnalyzeDistance) {
                if a.levels.is_empty() || a.levels.contains(&0) {
                    bad.push("analysis.levels: need 1-based level indices".into());
                }
                if a.levels.iter().any(|&l| l > q.m) {
                    bad.push(format!("analysis.levels: exceed the block size {}", q.m));
                }
            }
            if self.mode == Mode::AnalyzeDistance && (a.tracked_pair[0] == 0 || a.tracked_pair[1] != a.tracked_pair[0] + 1)
            {
                bad.push("analysis.tracked_pair: must be neighbouring 1-based levels [l, l + 1]".into());
            }
            if self.mode == Mode::AnalyzeSpacing {
                if a.fit_degree == 0 {
                    bad.push("analysis.fit_degree: must be >= 1".into());
                }
                if !(a.bin_width > 0.0 && a.bin_upper > a.bin_width) {
                    bad.push("analysis.bin_width / bin_upper: need 0 < width < upper".into());
                }
            }
            if !(a.relative_prominence >= 0.0) {
                bad.push("analysis.relative_prominence: must be >= 0".into());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_fills_defaults() {
        let c = RunConfig::from_json(r#"{"mode": "quantum-spectrum", "sigma": 0.2}"#).unwrap();
        assert_eq!(c.quantum.m, 400);
        assert_eq!(c.classical.n_init, 200);
        assert_eq!(c.analysis.tracked_pair, [17, 18]);
        c.validate().unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ranges_hit_their_endpoints() {
        let g = SigmaGrid::Range { start: 0.05, stop: 0.45, step: 0.005 };
        let p = g.points();
        assert_eq!(p.len(), 81);
        assert_eq!((p[0], p[1], p[80]), (0.05, 0.055, 0.45));
    }

    #[test]
    fn problems_are_reported_per_field() {
        let mut c = RunConfig::new(Mode::AnalyzeEos);
        c.sigma_grid = Some(SigmaGrid::List(vec![0.1, 0.3, 0.2, 0.7]));
        c.quantum.eps_n = 2.0;
        c.analysis.levels = vec![0];
        let Err(Error::Config(msg)) = c.validate() else { panic!("accepted") };
        for needle in ["outside (0, 0.5)", "strictly increasing", "quantum.eps_n", "analysis.levels"] {
            assert!(msg.contains(needle), "{msg}");
        }
        assert!(RunConfig::from_json(r#"{"mode": "quantum-sweep", "sigmaa": 0.2}"#).is_err());
        let both = RunConfig { sigma: Some(0.2), sigma_grid: Some(SigmaGrid::List(vec![0.2])), ..c };
        assert!(both.sigmas().is_err());
    }

    #[test]
    fn geometry_gives_sigma() {
        let c = RunConfig::from_json(
            r#"{"mode": "classical-lyapunov", "geometry": {"cavity_radius": 5.0, "disk_radius": 1.0}}"#,
        )
        .unwrap();
        assert_eq!(c.sigmas().unwrap(), vec![0.2]);
    }
}
