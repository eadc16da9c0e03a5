use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FIT_DEGREE: usize = 6;
pub const MIN_UNFOLD_LEVELS: usize = 100;

/// Reference nearest-neighbour spacing laws, all with unit mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reference {
    /// `exp(-s)`.
    Poisson,
    /// GOE surmise `(pi s / 2) exp(-pi s^2 / 4)`.
    Wigner,
    /// Superposition of two independent GOE-surmise sequences of equal
    /// density.
    TwoWigner,
}

impl Reference {
    pub const ALL: [Reference; 3] = [Reference::Poisson, Reference::Wigner, Reference::TwoWigner];

    pub fn name(self) -> &'static str {
        match self {
            Reference::Poisson => "poisson",
            Reference::Wigner => "wigner",
            Reference::TwoWigner => "two_wigner",
        }
    }

    pub fn cdf(self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Reference::Poisson => -(-s).exp_m1(),
            Reference::Wigner => -(-PI * s * s / 4.0).exp_m1(),
            // Gap function E(s) = erfc(sqrt(pi) s / 4)^2; 1 - F = -E'(s).
            Reference::TwoWigner => 1.0 - libm::erfc(PI.sqrt() * s / 4.0) * (-PI * s * s / 16.0).exp(),
        }
    }

    pub fn density(self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            Reference::Poisson => (-s).exp(),
            Reference::Wigner => 0.5 * PI * s * (-PI * s * s / 4.0).exp(),
            Reference::TwoWigner => {
                let g = (-PI * s * s / 16.0).exp();
                0.5 * g * g + PI * s / 8.0 * libm::erfc(PI.sqrt() * s / 4.0) * g
            }
        }
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided 5% critical value.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unfolded {
    /// Smoothed staircase at each input level.
    pub levels: Vec<f64>,
    pub spacings: Vec<f64>,
}

fn chebyshev_row(x: f64, degree: usize) -> Vec<f64> {
    let mut row = vec![1.0; degree + 1];
    if degree >= 1 {
        row[1] = x;
    }
    for k in 2..=degree {
        row[k] = 2.0 * x * row[k - 1] - row[k - 2];
    }
    row
}

/// Unfolds an ascending level sequence by a least-squares polynomial fit
/// (Chebyshev basis on the normalized energy range) of the staircase
/// `N(E_i) = i + 1/2`.
pub fn unfold(energies: &[f64], degree: usize) -> Result<Unfolded> {
    let n = energies.len();
    if n < MIN_UNFOLD_LEVELS {
        return Err(Error::InsufficientLevels { needed: MIN_UNFOLD_LEVELS, got: n });
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("levels must be ascending".into()));
    }
    let (lo, hi) = (energies[0], energies[n - 1]);
    if hi <= lo {
        return Err(Error::DegenerateFit { degree });
    }
    let x = |e: f64| (2.0 * e - lo - hi) / (hi - lo);
    let design = DMatrix::from_fn(n, degree + 1, |i, k| chebyshev_row(x(energies[i]), degree)[k]);
    let target = DVector::from_fn(n, |i, _| i as f64 + 0.5);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-13)
        .map_err(|_| Error::DegenerateFit { degree })?;
    let eval = |e: f64| chebyshev_row(x(e), degree).iter().zip(coef.iter()).map(|(a, b)| a * b).sum::<f64>();
    // The smoothed staircase must keep the levels in order. Inside a wide
    // empty gap the polynomial may sag without affecting any spacing.
    let levels: Vec<f64> = energies.iter().map(|&e| eval(e)).collect();
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::DegenerateFit { degree });
    }
    let spacings = levels.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(Unfolded { levels, spacings })
}

/// Which sorted levels enter the statistics: skip the lowest `skip`, then
/// keep up to `keep`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelWindow {
    pub skip: usize,
    pub keep: usize,
}

impl Default for LevelWindow {
    fn default() -> Self {
        Self { skip: 50, keep: 450 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts normalized to unit area.
    pub density: Vec<f64>,
}

pub fn histogram(samples: &[f64], width: f64, upper: f64) -> Histogram {
    let bins = (upper / width).round() as usize;
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let i = (s / width).floor();
        if i >= 0.0 && (i as usize) < bins {
            counts[i as usize] += 1;
        }
    }
    let total = samples.len().max(1) as f64;
    let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    Histogram { edges, counts, density }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub reference: Reference,
    pub statistic: f64,
    pub n: usize,
}

impl KsResult {
    pub fn accepted(&self) -> bool {
        self.statistic < ks_critical_5pct(self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingEnsemble {
    pub spacings: Vec<f64>,
    pub window: LevelWindow,
    /// Fit degree actually used; below the requested one when that fit
    /// reorders levels.
    pub degree: usize,
    /// Levels actually used (may be fewer than `window.keep`).
    pub levels_used: usize,
    pub mean: f64,
    pub histogram: Histogram,
    pub ks: Vec<KsResult>,
}

impl SpacingEnsemble {
    pub fn ks(&self, r: Reference) -> f64 {
        self.ks.iter().find(|k| k.reference == r).map(|k| k.statistic).expect("all references tested")
    }

    /// Reference with the smallest KS distance.
    pub fn closest(&self) -> Reference {
        self.ks.iter().min_by(|a, b| a.statistic.total_cmp(&b.statistic)).expect("nonempty").reference
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingOptions {
    pub window: LevelWindow,
    pub degree: usize,
    pub bin_width: f64,
    pub bin_upper: f64,
}

impl Default for SpacingOptions {
    fn default() -> Self {
        Self { window: LevelWindow::default(), degree: DEFAULT_FIT_DEGREE, bin_width: 0.1, bin_upper: 4.0 }
    }
}

/// Windows, unfolds and compares an ascending spectrum against all
/// references.
pub fn spacing_statistics(energies: &[f64], opts: &SpacingOptions) -> Result<SpacingEnsemble> {
    let start = opts.window.skip.min(energies.len());
    let end = (start + opts.window.keep).min(energies.len());
    let window = &energies[start..end];
    let (degree, unfolded) = (1..=opts.degree)
        .rev()
        .find_map(|d| unfold(window, d).ok().map(|u| (d, u)))
        .map_or_else(|| unfold(window, opts.degree).map(|u| (opts.degree, u)), Ok)?;
    if degree < opts.degree {
        log::warn!("unfolding fell back from degree {} to {degree}", opts.degree);
    }
    let spacings = unfolded.spacings;
    let n = spacings.len();
    let mean = spacings.iter().sum::<f64>() / n as f64;
    let ks = Reference::ALL
        .iter()
        .map(|&r| KsResult { reference: r, statistic: ks_statistic(&spacings, |s| r.cdf(s)), n })
        .collect();
    Ok(SpacingEnsemble {
        histogram: histogram(&spacings, opts.bin_width, opts.bin_upper),
        spacings,
        window: opts.window,
        degree,
        levels_used: window.len(),
        mean,
        ks,
    })
}
