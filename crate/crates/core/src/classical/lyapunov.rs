use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{next_event, Billiard, PhaseState};
use super::sampling::sample_initial_condition;
use super::tangent::{propagate_tangent, TangentVector};
use crate::error::{Error, Result};

pub const DEFAULT_RENORM_EVERY: usize = 10;

/// Finite-time maximum Lyapunov exponent of one orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitExponent {
    /// Per unit time.
    pub lambda: f64,
    /// Per collision, `lambda * total_time / n_col`.
    pub per_collision: f64,
    pub total_time: f64,
    pub n_col: usize,
}

/// Tangent-space (Benettin) estimate over `n_col` collisions started from
/// `tau0`.
pub fn lyapunov_exponent(
    billiard: &Billiard,
    s0: &PhaseState,
    tau0: &TangentVector,
    n_col: usize,
    renorm_every: usize,
) -> Result<OrbitExponent> {
    if n_col == 0 || renorm_every == 0 {
        return Err(Error::Config("n_col and renorm_every must be positive".into()));
    }
    let norm0 = tau0.norm();
    if !(norm0 > 0.0) {
        return Err(Error::Config("initial tangent vector must be nonzero".into()));
    }
    let mut s = *s0;
    let mut tau = tau0.scaled(1.0 / norm0);
    let mut log_growth = 0.0;
    for col in 1..=n_col {
        let e = next_event(&s, billiard)?;
        tau = propagate_tangent(&s, &tau, &e, billiard)?;
        billiard.step(&mut s)?;
        if col % renorm_every == 0 || col == n_col {
            let n = tau.norm();
            log_growth += n.ln();
            tau = tau.scaled(1.0 / n);
        }
    }
    let total_time = s.t - s0.t;
    let lambda = log_growth / total_time;
    Ok(OrbitExponent { lambda, per_collision: log_growth / n_col as f64, total_time, n_col })
}

/// Criterion for flagging an orbit as regular (`lambda ~ 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TorusThreshold {
    /// `c / T`.
    StatisticalFloor(f64),
    /// `(c + ln T) / T`: allows the linear (shear) growth of deviations on a
    /// torus, whose finite-time exponent decays only like `ln T / T`.
    ShearFloor(f64),
}

impl Default for TorusThreshold {
    fn default() -> Self {
        TorusThreshold::ShearFloor(3.0)
    }
}

impl TorusThreshold {
    pub fn value(&self, total_time: f64) -> f64 {
        match *self {
            TorusThreshold::StatisticalFloor(c) => c / total_time,
            TorusThreshold::ShearFloor(c) => (c + total_time.max(1.0).ln()) / total_time,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_init: usize,
    pub n_col: usize,
    pub renorm_every: usize,
    pub energy: f64,
    pub seed: u64,
    pub torus: TorusThreshold,
    /// Fresh initial conditions tried per member after grazing discards.
    pub max_resamples: usize,
}

impl EnsembleConfig {
    pub fn new(n_init: usize, n_col: usize, seed: u64) -> Self {
        Self {
            n_init,
            n_col,
            renorm_every: DEFAULT_RENORM_EVERY,
            energy: 1.0,
            seed,
            torus: TorusThreshold::default(),
            max_resamples: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub mean: f64,
    /// Sample standard deviation over initial conditions.
    pub std: f64,
    pub mean_per_collision: f64,
    pub std_per_collision: f64,
    pub torus_fraction: f64,
    pub n_init: usize,
    pub n_col: usize,
    /// Orbits thrown away on grazing collisions.
    pub discards: usize,
    pub members: Vec<OrbitExponent>,
}

impl LyapunovEstimate {
    pub fn stderr(&self) -> f64 {
        self.std / (self.members.len() as f64).sqrt()
    }

    pub fn relative_std(&self) -> f64 {
        self.std / self.mean.abs()
    }
}

/// Generator for ensemble member `index`: ChaCha8 keyed by the master seed,
/// one stream per member, so results do not depend on scheduling.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_member(billiard: &Billiard, cfg: &EnsembleConfig, index: usize) -> Result<(OrbitExponent, usize)> {
    let mut rng = member_rng(cfg.seed, index as u64);
    let mut discards = 0;
    loop {
        let s0 = sample_initial_condition(billiard, cfg.energy, &mut rng)?;
        let tau0 = TangentVector::from_components(std::array::from_fn(|_| rng.sample(StandardNormal)));
        match lyapunov_exponent(billiard, &s0, &tau0, cfg.n_col, cfg.renorm_every) {
            Ok(x) => return Ok((x, discards)),
            Err(Error::TangentialCollision { .. }) if discards < cfg.max_resamples => discards += 1,
            Err(e) => return Err(e),
        }
    }
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = if n > 1.0 { xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

pub fn lyapunov_ensemble(billiard: &Billiard, cfg: &EnsembleConfig) -> Result<LyapunovEstimate> {
    if cfg.n_init == 0 {
        return Err(Error::Config("n_init must be positive".into()));
    }
    let runs: Vec<(OrbitExponent, usize)> =
        (0..cfg.n_init).into_par_iter().map(|i| run_member(billiard, cfg, i)).collect::<Result<_>>()?;
    let members: Vec<OrbitExponent> = runs.iter().map(|r| r.0).collect();
    let discards = runs.iter().map(|r| r.1).sum();
    let (mean, std) = mean_std(members.iter().map(|m| m.lambda));
    let (mean_per_collision, std_per_collision) = mean_std(members.iter().map(|m| m.per_collision));
    let tori = members.iter().filter(|m| m.lambda < cfg.torus.value(m.total_time)).count();
    Ok(LyapunovEstimate {
        mean,
        std,
        mean_per_collision,
        std_per_collision,
        torus_fraction: tori as f64 / members.len() as f64,
        n_init: cfg.n_init,
        n_col: cfg.n_col,
        discards,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScaledGeometry;

    #[test]
    fn chaotic_versus_integrable() {
        let b = Billiard::new(&ScaledGeometry::from_sigma(0.15).unwrap());
        let cfg = EnsembleConfig::new(8, 20_000, 1);
        let on = lyapunov_ensemble(&b, &cfg).unwrap();
        assert!(on.members.iter().all(|m| m.lambda > 0.05), "{:?}", on.members);
        assert_eq!(on.torus_fraction, 0.0);
        let off = lyapunov_ensemble(&b.without_interaction(), &cfg).unwrap();
        assert!(off.mean < 0.1 * on.mean);
        assert_eq!(off.torus_fraction, 1.0);
    }

    #[test]
    fn ensemble_is_schedule_independent() {
        let b = Billiard::new(&ScaledGeometry::from_sigma(0.25).unwrap());
        let cfg = EnsembleConfig::new(6, 2000, 7);
        let a = lyapunov_ensemble(&b, &cfg).unwrap();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = serial.install(|| lyapunov_ensemble(&b, &cfg)).unwrap();
        assert_eq!(a, c);
        let first = run_member(&b, &cfg, 3).unwrap().0;
        assert_eq!(a.members[3], first);
    }

    #[test]
    fn thresholds() {
        assert_eq!(TorusThreshold::StatisticalFloor(3.0).value(100.0), 0.03);
        let t = TorusThreshold::ShearFloor(3.0).value(100.0);
        assert!((t - (3.0 + 100f64.ln()) / 100.0).abs() < 1e-15);
    }
}
