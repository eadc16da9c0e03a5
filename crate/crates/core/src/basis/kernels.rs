//! Angular Fourier transforms of the `phi`-dependent factors that appear in
//! the norm, energy and squared-distance integrands.
//!
//! For every pair of radial nodes `(r1_i, r2_j)` and every `m` up to
//! `m_max` we tabulate `int_0^{2 pi} g(r1, r2, phi) cos(m phi) dphi` for the
//! even kernels and `int g sin(phi) sin(m phi) dphi` for the odd one. The
//! support of `f(X)` ends at the contact angle `cos(phi*) = (r1^2 + r2^2 -
//! l0^2) / (2 r1 r2)`; the integral is split there so each piece is smooth.

use std::f64::consts::PI;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::wavefunction::Exclusion;
use crate::error::{Error, Result};
use crate::special::{GridSpec, QuadratureRule};

pub const KERNEL_COUNT: usize = 6;

/// The tabulated kernel family; `e = exp(-beta X)`, `d2 = |q1 - q2|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// `f^2`
    Norm = 0,
    /// `f e`
    Decay = 1,
    /// `f e cos(phi)`
    DecayCos = 2,
    /// `f e sin(phi)`, stored as its `sin(m phi)` transform.
    DecaySin = 3,
    /// `f e d2`
    DecayDist = 4,
    /// `f^2 d2`
    NormDist = 5,
}

impl Kernel {
    pub const ALL: [Kernel; KERNEL_COUNT] = [
        Kernel::Norm,
        Kernel::Decay,
        Kernel::DecayCos,
        Kernel::DecaySin,
        Kernel::DecayDist,
        Kernel::NormDist,
    ];

    pub fn is_odd(self) -> bool {
        self == Kernel::DecaySin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelKey {
    pub exclusion: Exclusion,
    pub grid: GridSpec,
    pub m_max: usize,
}

impl KernelKey {
    /// Content hash of every input that changes the numbers.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        match self.exclusion {
            Exclusion::HardCore { beta, l0 } => {
                h.update(b"hardcore");
                h.update(beta.to_bits().to_le_bytes());
                h.update(l0.to_bits().to_le_bytes());
            }
            Exclusion::Off => h.update(b"off"),
        }
        h.update((self.grid.n_radial as u64).to_le_bytes());
        h.update((self.grid.n_angular as u64).to_le_bytes());
        h.update((self.m_max as u64).to_le_bytes());
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug)]
pub struct KernelTables {
    pub key: KernelKey,
    pub radial_nodes: Vec<f64>,
    // index ((m * n) + i) * n + j
    data: Vec<[f64; KERNEL_COUNT]>,
}

impl KernelTables {
    pub fn n_radial(&self) -> usize {
        self.radial_nodes.len()
    }

    pub fn m_max(&self) -> usize {
        self.key.m_max
    }

    pub fn check_m(&self, m: usize) -> Result<()> {
        if m > self.key.m_max {
            Err(Error::KernelMiss { m, max: self.key.m_max })
        } else {
            Ok(())
        }
    }

    /// All kernels at cell `(i, j)` for Fourier index `m >= 0`.
    #[inline]
    pub fn cell(&self, m: usize, i: usize, j: usize) -> &[f64; KERNEL_COUNT] {
        let n = self.n_radial();
        &self.data[(m * n + i) * n + j]
    }

    /// Row `i` of the `m` table, `n_radial` consecutive cells.
    #[inline]
    pub fn row(&self, m: usize, i: usize) -> &[[f64; KERNEL_COUNT]] {
        let n = self.n_radial();
        let start = (m * n + i) * n;
        &self.data[start..start + n]
    }

    /// `A_m = int_0^{2 pi} g e^{-i m phi} dphi` for signed `m`.
    pub fn transform(&self, kernel: Kernel, m: i64, i: usize, j: usize) -> Result<Complex<f64>> {
        let abs = m.unsigned_abs() as usize;
        self.check_m(abs)?;
        let v = self.cell(abs, i, j)[kernel as usize];
        Ok(if kernel.is_odd() {
            // int g sin(phi) e^{-i m phi} = -i sign(m) int g sin(phi) sin(|m| phi)
            Complex::new(0.0, -(m.signum() as f64) * v)
        } else {
            Complex::new(v, 0.0)
        })
    }
}

pub fn precompute_kernels(rule: &QuadratureRule, exclusion: Exclusion, m_max: usize) -> KernelTables {
    let nodes = rule.radial.nodes.clone();
    let n = nodes.len();
    let periodic = PeriodicHalf::new(rule.grid.n_angular);

    // Upper triangle by rows, each row independent.
    let rows: Vec<Vec<Vec<[f64; KERNEL_COUNT]>>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| cell_transforms(rule, &periodic, nodes[i], nodes[j], exclusion, m_max)).collect())
        .collect();

    let mut data = vec![[0.0; KERNEL_COUNT]; (m_max + 1) * n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, per_m) in row.into_iter().enumerate() {
            let j = i + offset;
            for (m, v) in per_m.into_iter().enumerate() {
                data[(m * n + i) * n + j] = v;
                data[(m * n + j) * n + i] = v;
            }
        }
    }
    KernelTables { key: KernelKey { exclusion, grid: rule.grid, m_max }, radial_nodes: nodes, data }
}

struct PeriodicHalf {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PeriodicHalf {
    // Trapezoid on [0, 2 pi) folded onto [0, pi] for even integrands.
    fn new(n_angular: usize) -> Self {
        let n = n_angular + n_angular % 2;
        let h = 2.0 * PI / n as f64;
        let half = n / 2;
        let nodes = (0..=half).map(|j| j as f64 * h).collect();
        let weights = (0..=half).map(|j| if j == 0 || j == half { h } else { 2.0 * h }).collect();
        Self { nodes, weights }
    }
}

/// Contact angle where `X = 0`, or `None` when `X > 0` on the whole circle.
/// `Some(pi)` means the disks overlap for every angle.
pub fn contact_angle(r1: f64, r2: f64, l0: f64) -> Option<f64> {
    let c = (r1 * r1 + r2 * r2 - l0 * l0) / (2.0 * r1 * r2);
    if c >= 1.0 {
        None
    } else if c <= -1.0 {
        Some(PI)
    } else {
        Some(c.acos())
    }
}

fn cell_transforms(
    rule: &QuadratureRule,
    periodic: &PeriodicHalf,
    r1: f64,
    r2: f64,
    exclusion: Exclusion,
    m_max: usize,
) -> Vec<[f64; KERNEL_COUNT]> {
    let mut out = vec![[0.0; KERNEL_COUNT]; m_max + 1];
    let (beta, l0) = match exclusion {
        Exclusion::HardCore { beta, l0 } => (beta, l0),
        Exclusion::Off => (0.0, 0.0),
    };
    let hard = matches!(exclusion, Exclusion::HardCore { .. });

    let split = if hard { contact_angle(r1, r2, l0) } else { None };
    let segment;
    let (nodes, weights): (&[f64], &[f64]) = match split {
        None => (&periodic.nodes, &periodic.weights),
        Some(lo) if lo >= PI => return out,
        Some(lo) => {
            segment = rule.angular_segment(lo, PI);
            (&segment.nodes, &segment.weights)
        }
    };
    // Folding [0, 2 pi) onto [0, pi] doubles the Gauss weights.
    let fold = if split.is_some() { 2.0 } else { 1.0 };

    let rr = r1 * r1 + r2 * r2;
    let cross = 2.0 * r1 * r2;
    let mut cos_m = vec![0.0; m_max + 1];
    let mut sin_m = vec![0.0; m_max + 1];
    for (&phi, &w) in nodes.iter().zip(weights) {
        let (s, c) = phi.sin_cos();
        let d2 = rr - cross * c;
        let (f, e) = if hard {
            let x = d2 - l0 * l0;
            if x <= 0.0 {
                continue;
            }
            let e = (-beta * x).exp();
            (1.0 - e, e)
        } else {
            (1.0, 0.0)
        };
        let w = w * fold;
        let ff = w * f * f;
        let fe = w * f * e;
        let vals = [ff, fe, fe * c, fe * s, fe * d2, ff * d2];

        cos_m[0] = 1.0;
        sin_m[0] = 0.0;
        if m_max >= 1 {
            cos_m[1] = c;
            sin_m[1] = s;
        }
        for m in 2..=m_max {
            cos_m[m] = 2.0 * c * cos_m[m - 1] - cos_m[m - 2];
            sin_m[m] = 2.0 * c * sin_m[m - 1] - sin_m[m - 2];
        }
        for m in 0..=m_max {
            let (cm, sm) = (cos_m[m], sin_m[m]);
            let slot = &mut out[m];
            slot[0] += vals[0] * cm;
            slot[1] += vals[1] * cm;
            slot[2] += vals[2] * cm;
            slot[3] += vals[3] * sm;
            slot[4] += vals[4] * cm;
            slot[5] += vals[5] * cm;
        }
    }
    out
}
