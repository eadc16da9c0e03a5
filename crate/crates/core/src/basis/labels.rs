use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_zero, BesselZeroTable};

/// One-disk eigenfunction `J_k(lambda_{kn} r) e^{i k theta}` of the unit
/// circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleParticleLabel {
    pub k: i32,
    pub n: u32,
    pub lambda: f64,
}

impl SingleParticleLabel {
    pub fn new(k: i32, n: u32, zeros: &BesselZeroTable) -> Self {
        Self { k, n, lambda: zeros.get(k, n) }
    }

    pub fn energy(&self) -> f64 {
        self.lambda * self.lambda
    }

    fn canonical_key(&self) -> (u32, u32, i32) {
        (self.k.unsigned_abs(), self.n, self.k)
    }

    pub fn same_state(&self, other: &Self) -> bool {
        self.k == other.k && self.n == other.n
    }
}

/// Unordered pair of single-particle states. `p1` is always the smaller of
/// the two under the `(|k|, n, k)` order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairLabel {
    pub p1: SingleParticleLabel,
    pub p2: SingleParticleLabel,
    pub exchange_degenerate: bool,
}

impl PairLabel {
    pub fn new(a: SingleParticleLabel, b: SingleParticleLabel) -> Self {
        let (p1, p2) = if a.canonical_key() <= b.canonical_key() { (a, b) } else { (b, a) };
        Self { p1, p2, exchange_degenerate: p1.same_state(&p2) }
    }

    pub fn l_z(&self) -> i32 {
        self.p1.k + self.p2.k
    }

    /// Unperturbed energy `lambda_1^2 + lambda_2^2`.
    pub fn energy(&self) -> f64 {
        self.p1.energy() + self.p2.energy()
    }

    fn sort_key(&self) -> (u32, u32, u32, u32, i32) {
        (self.p1.k.unsigned_abs(), self.p1.n, self.p2.k.unsigned_abs(), self.p2.n, self.p1.k)
    }

    pub fn same_pair(&self, other: &Self) -> bool {
        self.p1.same_state(&other.p1) && self.p2.same_state(&other.p2)
    }
}

fn basis_order(a: &PairLabel, b: &PairLabel) -> Ordering {
    a.energy().total_cmp(&b.energy()).then_with(|| a.sort_key().cmp(&b.sort_key()))
}

/// One `L_z` block of symmetrized two-disk labels, ascending in unperturbed
/// energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub l_z: i32,
    pub labels: Vec<PairLabel>,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Ascending pair energies: the exact spectrum of the same block
    /// without the hard core.
    pub fn free_spectrum(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.labels.iter().map(|l| l.energy()).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct single-particle states appearing in the block, in first-seen
    /// order.
    pub fn single_particle_states(&self) -> Vec<SingleParticleLabel> {
        let mut out: Vec<SingleParticleLabel> = Vec::new();
        for pair in &self.labels {
            for p in [pair.p1, pair.p2] {
                if !out.iter().any(|q| q.same_state(&p)) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Largest angular Fourier index `|k_a - k_b|` that assembly will request.
    pub fn max_fourier_index(&self) -> usize {
        let ks: Vec<i32> = self.labels.iter().flat_map(|p| [p.p1.k, p.p2.k]).collect();
        let lo = ks.iter().copied().min().unwrap_or(0);
        let hi = ks.iter().copied().max().unwrap_or(0);
        (hi - lo).unsigned_abs() as usize
    }

    pub fn index_of(&self, pair: &PairLabel) -> Option<usize> {
        self.labels.iter().position(|p| p.same_pair(pair))
    }

    /// The first `m` labels as a basis of their own.
    pub fn prefix(&self, m: usize) -> BasisSet {
        BasisSet { l_z: self.l_z, labels: self.labels[..m.min(self.len())].to_vec() }
    }
}

/// The `m` lowest unperturbed-energy unordered pairs with `k1 + k2 = l_z`
/// drawn from `|k| <= k_max`, `1 <= n <= n_max`.
///
/// A group of exactly degenerate labels is never split by the truncation:
/// if label `m` and `m + 1` tie, the whole tied group is dropped, so the
/// result may be slightly shorter than `m`. Fails when the rectangle cannot
/// guarantee that no lower pair lies outside it.
pub fn enumerate_basis(
    l_z: i32,
    m: usize,
    k_max: u32,
    n_max: u32,
    zeros: &BesselZeroTable,
) -> Result<BasisSet> {
    if m == 0 {
        return Err(Error::Config("basis size must be >= 1".into()));
    }
    if k_max > zeros.max_k || n_max > zeros.max_n {
        return Err(Error::Config(format!(
            "zero table ({}, {}) smaller than basis rectangle ({k_max}, {n_max})",
            zeros.max_k, zeros.max_n
        )));
    }
    let k_max_i = k_max as i32;
    let mut all = Vec::new();
    for k1 in -k_max_i..=k_max_i {
        let k2 = l_z - k1;
        if k2.abs() > k_max_i {
            continue;
        }
        for n1 in 1..=n_max {
            for n2 in 1..=n_max {
                let a = SingleParticleLabel::new(k1, n1, zeros);
                let b = SingleParticleLabel::new(k2, n2, zeros);
                let pair = PairLabel::new(a, b);
                // Each unordered pair is generated twice; keep the canonical one.
                if pair.p1.same_state(&a) {
                    all.push(pair);
                }
            }
        }
    }
    all.sort_by(basis_order);
    if all.len() < m {
        return Err(Error::InsufficientLabels(format!(
            "only {} pairs with L_z = {l_z} in |k| <= {k_max}, n <= {n_max}; need {m}",
            all.len()
        )));
    }
    let mut take = m;
    if take < all.len() && all[take - 1].energy() == all[take].energy() {
        let tie = all[take - 1].energy();
        while take > 0 && all[take - 1].energy() == tie {
            take -= 1;
        }
        if take == 0 {
            return Err(Error::InsufficientLabels("degenerate group exceeds basis size".into()));
        }
    }
    all.truncate(take);

    // Any pair with a member outside the rectangle has energy at least this.
    let outside_single = bessel_zero(k_max + 1, 1).min(bessel_zero(0, n_max + 1)).powi(2);
    let outside = outside_single + bessel_zero(0, 1).powi(2);
    let top = all.last().map(|p| p.energy()).unwrap_or(0.0);
    if top >= outside {
        return Err(Error::InsufficientLabels(format!(
            "highest kept energy {top:.4} reaches {outside:.4}, below which pairs outside |k| <= {k_max}, n <= {n_max} exist"
        )));
    }
    Ok(BasisSet { l_z, labels: all })
}

/// Smallest square-ish rectangle `(k_max, n_max)` for which
/// [`enumerate_basis`] succeeds, searched in unit steps.
pub fn auto_rectangle(l_z: i32, m: usize) -> (u32, u32) {
    let mut k_max = (l_z.unsigned_abs() + 4).max(8);
    let mut n_max = 6;
    loop {
        let zeros = BesselZeroTable::new(k_max, n_max);
        match enumerate_basis(l_z, m, k_max, n_max, &zeros) {
            Ok(_) => return (k_max, n_max),
            Err(_) => {
                // Grow whichever bound is binding.
                let by_k = bessel_zero(k_max + 1, 1);
                let by_n = bessel_zero(0, n_max + 1);
                if by_k <= by_n {
                    k_max += 2;
                } else {
                    n_max += 1;
                }
            }
        }
    }
}
