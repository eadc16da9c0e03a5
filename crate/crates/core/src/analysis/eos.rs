//! Quantal equation of states `P(V)` of single eigenlevels, squared
//! distance curves, and their behaviour across avoided crossings.
//!
//! The sweep fixes the disk radius `a = 1` and varies `R = 1/sigma`, so
//! `V = pi / sigma^2` and `P = -dE/dV = sigma^3 / (2 pi) dE/dsigma`. By
//! default `E` is the tabulated eigenvalue itself (units of the scaled
//! problem). [`EnergyScale::Physical`] first converts to `m = hbar = 1`
//! units at fixed `a`, `E = E' sigma^2 / (2 (1 - sigma)^2)`, which adds a
//! smooth, steeply rising confinement term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sweep::SpectrumTable;
use crate::error::{Error, Result};
use crate::geometry::cavity_volume;

pub fn physical_energy(scaled: f64, sigma: f64) -> f64 {
    scaled * sigma * sigma / (2.0 * (1.0 - sigma).powi(2))
}

/// Second-order derivative of samples `y(x)` on a possibly nonuniform grid:
/// three-point central stencil inside, three-point one-sided at the ends.
pub fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3 && y.len() == n, "need at least three samples");
    let interior = |i: usize| {
        let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        (hm * hm * y[i + 1] - hp * hp * y[i - 1] + (hp * hp - hm * hm) * y[i]) / (hm * hp * (hm + hp))
    };
    // Derivative at x0 of the parabola through (x0, x1, x2).
    let end = |x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64| {
        let (h1, h2) = (x1 - x0, x2 - x0);
        (-(h1 + h2) / (h1 * h2)) * y0 + (h2 / (h1 * (h2 - h1))) * y1 - (h1 / (h2 * (h2 - h1))) * y2
    };
    let mut d = vec![0.0; n];
    d[0] = end(x[0], x[1], x[2], y[0], y[1], y[2]);
    d[n - 1] = end(x[n - 1], x[n - 2], x[n - 3], y[n - 1], y[n - 2], y[n - 3]);
    for (i, slot) in d.iter_mut().enumerate().take(n - 1).skip(1) {
        *slot = interior(i);
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EosPoint {
    pub sigma: f64,
    pub volume: f64,
    pub pressure: f64,
    /// Level energy on the chosen scale.
    pub energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub sigma: f64,
    pub volume: f64,
    pub pressure: f64,
    pub prominence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EosCurve {
    pub level: usize,
    pub l_z: i32,
    pub points: Vec<EosPoint>,
    pub peaks: Vec<Peak>,
    /// Points whose stencil straddles a feature sharper than the grid.
    pub coarse_points: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyScale {
    #[default]
    Scaled,
    Physical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakOptions {
    /// Minimum topographic prominence as a fraction of `|P|` at the peak.
    /// `P` grows by orders of magnitude along a sweep, so a fraction of the
    /// global maximum would only ever see the small-volume end.
    pub relative_prominence: f64,
    pub energy: EnergyScale,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { relative_prominence: 0.02, energy: EnergyScale::Scaled }
    }
}

/// Interior local maxima of `y` whose topographic prominence is at least
/// `relative` times their own magnitude.
pub fn find_peaks(y: &[f64], relative: f64) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let base = |range: &mut dyn Iterator<Item = usize>| {
            let mut lowest = y[i];
            for j in range {
                if y[j] > y[i] {
                    break;
                }
                lowest = lowest.min(y[j]);
            }
            lowest
        };
        let left = base(&mut (0..i).rev());
        let right = base(&mut (i + 1..n));
        let prominence = y[i] - left.max(right);
        if prominence >= relative * y[i].abs() && prominence > 0.0 {
            out.push((i, prominence));
        }
    }
    out
}

pub fn pressure_curve(table: &SpectrumTable, level: usize, opts: &PeakOptions) -> Result<EosCurve> {
    let series = table.level_series(level);
    if series.len() < 3 {
        return Err(Error::InsufficientLevels { needed: 3, got: series.len() });
    }
    let sigma: Vec<f64> = series.iter().map(|p| p.0).collect();
    let energy: Vec<f64> = series
        .iter()
        .map(|&(s, e)| match opts.energy {
            EnergyScale::Scaled => e,
            EnergyScale::Physical => physical_energy(e, s),
        })
        .collect();
    let de = derivative(&sigma, &energy);
    let points: Vec<EosPoint> = (0..sigma.len())
        .map(|i| EosPoint {
            sigma: sigma[i],
            volume: cavity_volume(1.0 / sigma[i]),
            pressure: sigma[i].powi(3) / (2.0 * PI) * de[i],
            energy: energy[i],
        })
        .collect();
    let p: Vec<f64> = points.iter().map(|x| x.pressure).collect();
    let peaks = find_peaks(&p, opts.relative_prominence)
        .into_iter()
        .map(|(index, prominence)| Peak {
            index,
            sigma: points[index].sigma,
            volume: points[index].volume,
            pressure: points[index].pressure,
            prominence,
        })
        .collect();
    // The stencil is too coarse where dE/dsigma changes by more than its own
    // size within one step.
    let coarse_points = (1..de.len() - 1)
        .filter(|&i| (de[i + 1] - de[i - 1]).abs() > 2.0 * de[i].abs().max(f64::MIN_POSITIVE))
        .collect();
    Ok(EosCurve { level, l_z: table.block.l_z, points, peaks, coarse_points })
}

/// `-dE/dV` differenced directly on the `(V, E)` series.
pub fn pressure_from_volume(curve: &EosCurve) -> Vec<f64> {
    let v: Vec<f64> = curve.points.iter().rev().map(|p| p.volume).collect();
    let e: Vec<f64> = curve.points.iter().rev().map(|p| p.energy).collect();
    let mut p: Vec<f64> = derivative(&v, &e).into_iter().map(|d| -d).collect();
    p.reverse();
    p
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceCurve {
    pub level: usize,
    pub l_z: i32,
    /// `(sigma, <d^2>)` in scaled units.
    pub points: Vec<(f64, f64)>,
}

pub fn distance_curve(table: &SpectrumTable, level: usize) -> Result<DistanceCurve> {
    let mut points = Vec::with_capacity(table.points.len());
    for p in &table.points {
        let d2 = p.d2.as_ref().ok_or(Error::MissingCoefficients { sigma: p.sigma })?;
        if let Some(&d) = d2.get(level.wrapping_sub(1)) {
            points.push((p.sigma, d));
        }
    }
    Ok(DistanceCurve { level, l_z: table.block.l_z, points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingOptions {
    /// Grid steps on each side of the gap minimum.
    pub half_width: usize,
    /// The gap minimum must be below this fraction of the mean gap at
    /// `+-half_width`.
    pub depth: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        Self { half_width: 3, depth: 0.25 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub index: usize,
    pub sigma: f64,
    pub gap: f64,
}

/// Sharp avoided crossings between 1-based levels `lower` and `lower + 1`.
pub fn avoided_crossings(table: &SpectrumTable, lower: usize, opts: &CrossingOptions) -> Vec<AvoidedCrossing> {
    let gaps: Vec<(f64, f64)> = table
        .points
        .iter()
        .filter_map(|p| {
            let a = p.energies.get(lower.wrapping_sub(1))?;
            let b = p.energies.get(lower)?;
            Some((p.sigma, b - a))
        })
        .collect();
    let w = opts.half_width.max(1);
    let mut out = Vec::new();
    for i in w..gaps.len().saturating_sub(w) {
        let g = gaps[i].1;
        let is_min = g <= gaps[i - 1].1 && g <= gaps[i + 1].1;
        let reference = 0.5 * (gaps[i - w].1 + gaps[i + w].1);
        if is_min && g < opts.depth * reference {
            out.push(AvoidedCrossing { index: i, sigma: gaps[i].0, gap: g });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPair {
    pub sigma: f64,
    pub level: usize,
    pub pressure_jump: f64,
    pub d2_jump: f64,
}

impl JumpPair {
    pub fn same_sign(&self) -> bool {
        self.pressure_jump * self.d2_jump > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub crossings: Vec<AvoidedCrossing>,
    pub jumps: Vec<JumpPair>,
}

impl CorrelationReport {
    pub fn agreement(&self) -> Option<f64> {
        if self.jumps.is_empty() {
            return None;
        }
        Some(self.jumps.iter().filter(|j| j.same_sign()).count() as f64 / self.jumps.len() as f64)
    }
}

/// Jumps of `P` and `<d^2>` across each sharp avoided crossing of the pair
/// `(lower, lower + 1)`, measured between `index - w` and `index + w`.
pub fn pressure_distance_correlation(
    table: &SpectrumTable,
    lower: usize,
    peaks: &PeakOptions,
    opts: &CrossingOptions,
) -> Result<CorrelationReport> {
    let crossings = avoided_crossings(table, lower, opts);
    let w = opts.half_width.max(1);
    let mut jumps = Vec::new();
    for level in [lower, lower + 1] {
        let eos = pressure_curve(table, level, peaks)?;
        let dist = distance_curve(table, level)?;
        for c in &crossings {
            let (a, b) = (c.index - w, c.index + w);
            if b >= eos.points.len() || b >= dist.points.len() {
                continue;
            }
            jumps.push(JumpPair {
                sigma: c.sigma,
                level,
                pressure_jump: eos.points[b].pressure - eos.points[a].pressure,
                d2_jump: dist.points[b].1 - dist.points[a].1,
            });
        }
    }
    Ok(CorrelationReport { crossings, jumps })
}

#[cfg(test)]
mod tests {
    use super::super::sweep::{BlockConfig, SpectrumPoint};
    use super::*;

    fn table(sigmas: &[f64], levels: impl Fn(f64) -> Vec<f64>) -> SpectrumTable {
        SpectrumTable {
            block: BlockConfig::new(1, 10),
            basis_len: 10,
            points: sigmas
                .iter()
                .map(|&s| SpectrumPoint {
                    sigma: s,
                    energies: levels(s),
                    d2: Some(vec![1.0; 2]),
                    retained_dim: 2,
                    cutoff: 1e-8,
                    max_projected_residual: 0.0,
                    asymmetry_h: 0.0,
                })
                .collect(),
            failures: vec![],
        }
    }

    fn grid() -> Vec<f64> {
        (0..81).map(|i| 0.05 + 0.005 * i as f64).collect()
    }

    #[test]
    fn derivative_is_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.25, 0.3, 0.5];
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        for (d, t) in derivative(&x, &y).iter().zip(x) {
            assert!((d - (6.0 * t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_energy_has_zero_pressure_on_either_scale() {
        let t = table(&grid(), |_| vec![7.0, 1e9]);
        let c = pressure_curve(&t, 1, &PeakOptions::default()).unwrap();
        assert!(c.points.iter().all(|p| p.pressure.abs() < 1e-9));
        for w in c.points.windows(2) {
            assert!(w[1].volume < w[0].volume);
        }
        // Scaled energy chosen so the physical energy is 7 everywhere.
        let t = table(&grid(), |s| vec![7.0 * 2.0 * (1.0 - s).powi(2) / (s * s), 1e9]);
        let opts = PeakOptions { energy: EnergyScale::Physical, ..Default::default() };
        let c = pressure_curve(&t, 1, &opts).unwrap();
        assert!(c.points.iter().all(|p| p.pressure.abs() < 1e-9));
    }

    #[test]
    fn chain_rule_identity() {
        let t = table(&grid(), |s| vec![20.0 + 30.0 * s + 5.0 * (9.0 * s).sin(), 1e9]);
        let opts = PeakOptions { energy: EnergyScale::Physical, ..Default::default() };
        let c = pressure_curve(&t, 1, &opts).unwrap();
        let direct = pressure_from_volume(&c);
        let scale = c.points.iter().fold(0.0f64, |m, p| m.max(p.pressure.abs()));
        for (p, q) in c.points.iter().zip(&direct).skip(1).take(c.points.len() - 2) {
            assert!((p.pressure - q).abs() < 1e-3 * scale, "{} vs {q}", p.pressure);
        }
    }

    #[test]
    fn peaks_are_scale_invariant_and_require_prominence() {
        let y: Vec<f64> =
            (0..200).map(|i| 3.0 + (i as f64 * 0.1).sin()).collect();
        let a = find_peaks(&y, 0.1);
        let scaled: Vec<f64> = y.iter().map(|v| 1e3 * v).collect();
        let b = find_peaks(&scaled, 0.1);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1 / 1e3).abs() < 1e-12);
        }
        assert_eq!(a.len(), 3);
        let monotone: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(find_peaks(&monotone, 0.0).is_empty());
    }

    #[test]
    fn synthetic_avoided_crossing_is_found() {
        // Two diabatic lines crossing at sigma = 0.25 with coupling 0.05.
        let t = table(&grid(), |s| {
            let (a, b) = (10.0 + 40.0 * s, 20.0 - 0.0 * s);
            let mean = 0.5 * (a + b);
            let half = (0.25 * (a - b).powi(2) + 0.05f64.powi(2)).sqrt();
            vec![mean - half, mean + half]
        });
        let c = avoided_crossings(&t, 1, &CrossingOptions::default());
        assert_eq!(c.len(), 1);
        assert!((c[0].sigma - 0.25).abs() < 0.003);
        assert!(matches!(
            distance_curve(&SpectrumTable { points: vec![SpectrumPoint { d2: None, ..t.points[0].clone() }], ..t }, 1),
            Err(Error::MissingCoefficients { .. })
        ));
    }
}
