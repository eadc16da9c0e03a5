//! Dense energy, norm and squared-distance matrices over a basis block.
//!
//! Every matrix element is `direct + exchange`, each an integral of
//! conj(Phi') O Phi over both disk centers. The angular integrals are read
//! from [`KernelTables`], so an element costs one 2-D radial contraction per
//! kernel. The energy matrix applies the Hamiltonian to the ket in closed
//! form (kinetic energy of the Bessel product plus the terms generated by
//! derivatives of `f`), which is Hermitian only up to quadrature error; that
//! error is recorded before symmetrizing.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{precompute_kernels, BasisSet, Exclusion, Kernel, KernelTables, SingleParticleLabel};
use crate::error::{Error, Result};
use crate::special::{bessel_j_with_derivatives, GridSpec, QuadratureRule};

/// `max |A - A^T| / max |A|` of each matrix before symmetrization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryResidual {
    pub h: f64,
    pub n: f64,
    pub d: f64,
    /// Number of off-diagonal pairs the residual was measured on.
    pub pairs_checked: usize,
}

#[derive(Clone, Debug)]
pub struct MatrixTriple {
    pub h: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub asymmetry: AsymmetryResidual,
    pub basis: BasisSet,
    pub exclusion: Exclusion,
    pub grid: GridSpec,
}

impl MatrixTriple {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Restriction to the first `m` basis labels.
    pub fn leading_block(&self, m: usize) -> MatrixTriple {
        let m = m.min(self.dim());
        MatrixTriple {
            h: self.h.view((0, 0), (m, m)).into_owned(),
            n: self.n.view((0, 0), (m, m)).into_owned(),
            d: self.d.view((0, 0), (m, m)).into_owned(),
            asymmetry: self.asymmetry,
            basis: self.basis.prefix(m),
            exclusion: self.exclusion,
            grid: self.grid,
        }
    }
}

/// How much of the lower triangle is computed to measure asymmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HermiticityCheck {
    /// Compute every element on both sides of the diagonal.
    Full,
    /// Compute the transposed element for this many deterministic
    /// off-diagonal pairs.
    Sampled(usize),
    None,
}

impl Default for HermiticityCheck {
    fn default() -> Self {
        HermiticityCheck::Sampled(2048)
    }
}

/// `(A + A^T) / 2` and `max |A - A^T| / max |A|`.
pub fn hermitize(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    assert!(a.is_square(), "hermitize needs a square matrix");
    let scale = a.amax();
    let t = a.transpose();
    let residual = if scale > 0.0 { (a - &t).amax() / scale } else { 0.0 };
    (0.5 * (a + t), residual)
}

// Combinations of the raw kernels used by the contraction, per (m, i, j):
// norm, norm*d2, decay - beta decay*d2, r1 decay - r2 decay*cos,
// (r2/r1) sin-kernel, (r1/r2) sin-kernel, r2 decay - r1 decay*cos.
const COMBOS: usize = 7;

struct Contraction {
    n: usize,
    m_max: usize,
    // [m][combo][i][j]
    data: Vec<f64>,
}

impl Contraction {
    fn new(kernels: &KernelTables, beta: f64) -> Self {
        let n = kernels.n_radial();
        let m_max = kernels.m_max();
        let r = &kernels.radial_nodes;
        let mut data = vec![0.0; (m_max + 1) * COMBOS * n * n];
        for m in 0..=m_max {
            for i in 0..n {
                for j in 0..n {
                    let c = kernels.cell(m, i, j);
                    let (r1, r2) = (r[i], r[j]);
                    let decay = c[Kernel::Decay as usize];
                    let decay_cos = c[Kernel::DecayCos as usize];
                    let sin = c[Kernel::DecaySin as usize];
                    let vals = [
                        c[Kernel::Norm as usize],
                        c[Kernel::NormDist as usize],
                        decay - beta * c[Kernel::DecayDist as usize],
                        r1 * decay - r2 * decay_cos,
                        r2 / r1 * sin,
                        r1 / r2 * sin,
                        r2 * decay - r1 * decay_cos,
                    ];
                    for (combo, v) in vals.into_iter().enumerate() {
                        data[((m * COMBOS + combo) * n + i) * n + j] = v;
                    }
                }
            }
        }
        Self { n, m_max, data }
    }

    #[inline]
    fn row(&self, m: usize, combo: usize, i: usize) -> &[f64] {
        let start = ((m * COMBOS + combo) * self.n + i) * self.n;
        &self.data[start..start + self.n]
    }
}

/// Radial factors `J_k(lambda r)` and `d/dr J_k(lambda r)` on the nodes.
struct RadialTable {
    states: Vec<SingleParticleLabel>,
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    weight_r: Vec<f64>,
}

impl RadialTable {
    fn new(basis: &BasisSet, rule: &QuadratureRule) -> Self {
        let states = basis.single_particle_states();
        let nodes = &rule.radial.nodes;
        let mut values = Vec::with_capacity(states.len());
        let mut derivs = Vec::with_capacity(states.len());
        for s in &states {
            let order = s.k.unsigned_abs() as usize;
            let sign = if s.k < 0 && order % 2 == 1 { -1.0 } else { 1.0 };
            let (mut v, mut d) = (Vec::with_capacity(nodes.len()), Vec::with_capacity(nodes.len()));
            for &r in nodes {
                let (jv, jd) = bessel_j_with_derivatives(order, s.lambda * r);
                v.push(sign * jv[order]);
                d.push(sign * s.lambda * jd[order]);
            }
            values.push(v);
            derivs.push(d);
        }
        let weight_r = nodes.iter().zip(&rule.radial.weights).map(|(r, w)| r * w).collect();
        Self { states, values, derivs, weight_r }
    }

    fn index(&self, p: &SingleParticleLabel) -> usize {
        self.states.iter().position(|s| s.same_state(p)).expect("state tabulated")
    }
}

#[derive(Clone, Copy, Default)]
struct Element {
    h: f64,
    n: f64,
    d: f64,
}

impl std::ops::Add for Element {
    type Output = Element;
    fn add(self, o: Element) -> Element {
        Element { h: self.h + o.h, n: self.n + o.n, d: self.d + o.d }
    }
}

struct Assembler<'a> {
    radial: RadialTable,
    contraction: Contraction,
    beta: f64,
    pairs: Vec<(usize, usize)>,
    basis: &'a BasisSet,
}

impl<'a> Assembler<'a> {
    /// `<Phi_{bra}| O |Phi_{ket}>` for ordered labels (particle 1, particle 2).
    fn ordered(&self, bra: (usize, usize), ket: (usize, usize)) -> Element {
        let rt = &self.radial;
        let (bp, bq) = bra;
        let (kp, kq) = ket;
        let (sp, sq) = (&rt.states[kp], &rt.states[kq]);
        let shift = sq.k - rt.states[bq].k;
        let m = shift.unsigned_abs() as usize;
        let sign = shift.signum() as f64;
        debug_assert!(m <= self.contraction.m_max);

        let n = self.contraction.n;
        let w = &rt.weight_r;
        let mut v = vec![0.0; n];
        let mut dv = vec![0.0; n];
        for j in 0..n {
            let base = w[j] * rt.values[bq][j];
            v[j] = base * rt.values[kq][j];
            dv[j] = base * rt.derivs[kq][j];
        }

        let mut acc = [0.0f64; COMBOS];
        for i in 0..n {
            let base = w[i] * rt.values[bp][i];
            let u = base * rt.values[kp][i];
            let du = base * rt.derivs[kp][i];
            let row = |c| self.contraction.row(m, c, i);
            let sums = [
                dot(row(0), &v),
                dot(row(1), &v),
                dot(row(2), &v),
                dot(row(3), &v),
                dot(row(4), &v),
                dot(row(5), &v),
                dot(row(6), &dv),
            ];
            acc[0] += u * sums[0];
            acc[1] += u * sums[1];
            acc[2] += u * sums[2];
            acc[3] += du * sums[3];
            acc[4] += u * sums[4];
            acc[5] += u * sums[5];
            acc[6] += u * sums[6];
        }
        let norm = 2.0 * PI * acc[0];
        let dist = 2.0 * PI * acc[1];
        let correction = 2.0 * acc[2] + acc[3] + acc[6] + sign * (sp.k as f64 * acc[4] - sq.k as f64 * acc[5]);
        let h = (sp.energy() + sq.energy()) * norm - 8.0 * PI * self.beta * correction;
        Element { h, n: norm, d: dist }
    }

    fn element(&self, row: usize, col: usize) -> Element {
        let bra = self.pairs[row];
        let (p, q) = self.pairs[col];
        let direct = self.ordered(bra, (p, q));
        if self.basis.labels[col].exchange_degenerate {
            direct + direct
        } else {
            direct + self.ordered(bra, (q, p))
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        lanes[0] += a[k] * b[k];
        lanes[1] += a[k + 1] * b[k + 1];
        lanes[2] += a[k + 2] * b[k + 2];
        lanes[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Builds H, N and D over `basis`.
pub fn assemble(
    basis: &BasisSet,
    kernels: &KernelTables,
    rule: &QuadratureRule,
    check: HermiticityCheck,
) -> Result<MatrixTriple> {
    kernels.check_m(basis.max_fourier_index())?;
    if kernels.n_radial() != rule.grid.n_radial || kernels.key.grid != rule.grid {
        return Err(Error::Config("kernel tables were built on a different grid".into()));
    }
    let beta = match kernels.key.exclusion {
        Exclusion::HardCore { beta, .. } => beta,
        Exclusion::Off => 0.0,
    };
    let radial = RadialTable::new(basis, rule);
    let pairs = basis.labels.iter().map(|p| (radial.index(&p.p1), radial.index(&p.p2))).collect();
    let asm = Assembler { contraction: Contraction::new(kernels, beta), radial, beta, pairs, basis };

    let dim = basis.len();
    let upper: Vec<Vec<Element>> =
        (0..dim).into_par_iter().map(|row| (row..dim).map(|col| asm.element(row, col)).collect()).collect();

    let mut h = DMatrix::zeros(dim, dim);
    let mut n = DMatrix::zeros(dim, dim);
    let mut d = DMatrix::zeros(dim, dim);
    for (row, elems) in upper.into_iter().enumerate() {
        for (offset, e) in elems.into_iter().enumerate() {
            let col = row + offset;
            h[(row, col)] = e.h;
            n[(row, col)] = e.n;
            d[(row, col)] = e.d;
            h[(col, row)] = e.h;
            n[(col, row)] = e.n;
            d[(col, row)] = e.d;
        }
    }

    let lower_pairs = lower_triangle_sample(dim, check);
    let lower: Vec<Element> = lower_pairs.par_iter().map(|&(row, col)| asm.element(row, col)).collect();
    let mut asymmetry = AsymmetryResidual { pairs_checked: lower_pairs.len(), ..Default::default() };
    let (mut dh, mut dn, mut dd) = (0.0f64, 0.0f64, 0.0f64);
    for (&(row, col), e) in lower_pairs.iter().zip(&lower) {
        dh = dh.max((e.h - h[(col, row)]).abs());
        dn = dn.max((e.n - n[(col, row)]).abs());
        dd = dd.max((e.d - d[(col, row)]).abs());
        // Symmetrize with the computed transpose.
        let (sh, sn, sd) = (0.5 * (e.h + h[(col, row)]), 0.5 * (e.n + n[(col, row)]), 0.5 * (e.d + d[(col, row)]));
        h[(row, col)] = sh;
        h[(col, row)] = sh;
        n[(row, col)] = sn;
        n[(col, row)] = sn;
        d[(row, col)] = sd;
        d[(col, row)] = sd;
    }
    let rel = |delta: f64, m: &DMatrix<f64>| {
        let s = m.amax();
        if s > 0.0 {
            delta / s
        } else {
            0.0
        }
    };
    asymmetry.h = rel(dh, &h);
    asymmetry.n = rel(dn, &n);
    asymmetry.d = rel(dd, &d);

    Ok(MatrixTriple { h, n, d, asymmetry, basis: basis.clone(), exclusion: kernels.key.exclusion, grid: rule.grid })
}

/// Lower-triangle positions `(row > col)` whose element is recomputed.
fn lower_triangle_sample(dim: usize, check: HermiticityCheck) -> Vec<(usize, usize)> {
    let total = dim * dim.saturating_sub(1) / 2;
    match check {
        HermiticityCheck::None => Vec::new(),
        HermiticityCheck::Full => (1..dim).flat_map(|r| (0..r).map(move |c| (r, c))).collect(),
        HermiticityCheck::Sampled(count) if count >= total => lower_triangle_sample(dim, HermiticityCheck::Full),
        HermiticityCheck::Sampled(count) => {
            // Evenly strided through the packed lower triangle.
            let stride = total as f64 / count as f64;
            (0..count)
                .map(|s| {
                    let idx = (s as f64 * stride) as usize;
                    let mut r = ((1.0 + (1.0 + 8.0 * idx as f64).sqrt()) / 2.0).floor() as usize;
                    while r * (r - 1) / 2 > idx {
                        r -= 1;
                    }
                    while (r + 1) * r / 2 <= idx {
                        r += 1;
                    }
                    (r, idx - r * (r - 1) / 2)
                })
                .collect()
        }
    }
}

/// Kernel tables plus assembly in one call.
pub fn assemble_block(
    basis: &BasisSet,
    exclusion: Exclusion,
    grid: GridSpec,
    check: HermiticityCheck,
) -> Result<MatrixTriple> {
    let rule = QuadratureRule::new(grid);
    let kernels = precompute_kernels(&rule, exclusion, basis.max_fourier_index());
    assemble(basis, &kernels, &rule, check)
}

/// Assembles on `grid` and on the doubled grid and fails when any element
/// of H, N or D moves by more than `tol` relative to the largest element.
pub fn check_convergence(basis: &BasisSet, exclusion: Exclusion, grid: GridSpec, tol: f64) -> Result<f64> {
    let coarse = assemble_block(basis, exclusion, grid, HermiticityCheck::None)?;
    let fine = assemble_block(basis, exclusion, grid.doubled(), HermiticityCheck::None)?;
    let delta = [(&coarse.h, &fine.h), (&coarse.n, &fine.n), (&coarse.d, &fine.d)]
        .iter()
        .map(|(a, b)| (*a - *b).amax() / b.amax().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    if delta > tol {
        return Err(Error::NonconvergedQuadrature { delta, tol });
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::special::BesselZeroTable;

    #[test]
    fn hermitize_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let (s, r) = hermitize(&a);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
        assert_eq!(r, 1.0);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 3.0]);
        let (s, r) = hermitize(&b);
        assert_eq!(s, b);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn lower_sample_positions_are_valid_and_distinct() {
        let s = lower_triangle_sample(50, HermiticityCheck::Sampled(300));
        assert_eq!(s.len(), 300);
        assert!(s.iter().all(|&(r, c)| r < 50 && c < r));
        let mut sorted = s.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 300);
        assert_eq!(lower_triangle_sample(5, HermiticityCheck::Sampled(100)).len(), 10);
    }

    fn small_block(l_z: i32, m: usize, exclusion: Exclusion) -> MatrixTriple {
        let zeros = BesselZeroTable::new(30, 12);
        let basis = enumerate_basis(l_z, m, 30, 12, &zeros).unwrap();
        assemble_block(&basis, exclusion, GridSpec::default(), HermiticityCheck::Full).unwrap()
    }

    #[test]
    fn noninteracting_matrices_are_diagonal_in_energy() {
        let t = small_block(1, 30, Exclusion::Off);
        let scale = t.n.amax();
        for r in 0..t.dim() {
            let e = t.basis.labels[r].energy();
            for c in 0..t.dim() {
                if r != c {
                    assert!(t.n[(r, c)].abs() < 1e-12 * scale);
                }
                assert!((t.h[(r, c)] - e * t.n[(r, c)]).abs() < 1e-9 * e * scale);
            }
        }
    }

    #[test]
    fn interacting_block_is_nearly_symmetric_and_positive() {
        let t = small_block(1, 40, Exclusion::HardCore { beta: 1.5, l0: 0.5 });
        assert!(t.asymmetry.h < 1e-6, "asymmetry {:e}", t.asymmetry.h);
        assert!(t.asymmetry.n < 1e-12 && t.asymmetry.d < 1e-12);
        for i in 0..t.dim() {
            assert!(t.n[(i, i)] > 0.0);
            assert!(t.d[(i, i)] > 0.0 && t.d[(i, i)] <= 4.0 * t.n[(i, i)]);
        }
        let eig = t.n.clone().symmetric_eigenvalues();
        assert!(eig.min() > -1e-8 * eig.max());
    }

    #[test]
    fn swapping_labels_inside_a_pair_changes_nothing() {
        let zeros = BesselZeroTable::new(30, 12);
        let basis = enumerate_basis(2, 25, 30, 12, &zeros).unwrap();
        let mut swapped = basis.clone();
        for (i, p) in swapped.labels.iter_mut().enumerate() {
            if i % 2 == 0 {
                std::mem::swap(&mut p.p1, &mut p.p2);
            }
        }
        let ex = Exclusion::HardCore { beta: 1.5, l0: 0.4 };
        let grid = GridSpec { n_radial: 32, n_angular: 128 };
        let a = assemble_block(&basis, ex, grid, HermiticityCheck::None).unwrap();
        let b = assemble_block(&swapped, ex, grid, HermiticityCheck::None).unwrap();
        for (x, y) in [(&a.h, &b.h), (&a.n, &b.n), (&a.d, &b.d)] {
            assert!((x - y).amax() < 1e-12 * y.amax());
        }
    }
}
