//! Generalized eigenproblem `H C = E N C` solved by norm-kernel
//! regularization: diagonalize N, drop near-null directions, and solve the
//! standard problem in the retained orthonormalized subspace.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assembly::{hermitize, MatrixTriple};
use crate::error::{Error, Result};

pub const DEFAULT_NORM_CUTOFF: f64 = 1e-8;
/// Largest cutoff [`solve_block_guarded`] escalates to.
pub const MAX_GUARDED_CUTOFF: f64 = 1e-4;
const FLOOR_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub smallest_retained: f64,
    pub largest: f64,
    pub discarded: usize,
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// Ascending, scaled units.
    pub energies: Vec<f64>,
    /// Column `l` is level `l` in the original basis, `C^T N C = 1`.
    pub coefficients: DMatrix<f64>,
    pub retained_dim: usize,
    pub cutoff: f64,
    /// Decades the cutoff was raised above the requested one.
    pub escalations: u32,
    pub condition: ConditionReport,
    /// `|H C - E N C| / |H C|` per level, unprojected. Bounded below by the
    /// coupling of H to the discarded near-null directions of N.
    pub residuals: Vec<f64>,
    /// The same residual restricted to the retained subspace, which is the
    /// regularized problem actually solved.
    pub projected_residuals: Vec<f64>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_projected_residual(&self) -> f64 {
        self.projected_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Full symmetric decomposition with ascending eigenvalues.
pub(crate) fn sorted_eigen(a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = a.nrows();
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 1000 * dim.max(1)).ok_or(Error::EigenNonconvergence)?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn fix_phase(v: &mut DVector<f64>) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.neg_mut();
    }
}

pub fn solve_block(mats: &MatrixTriple, cutoff: f64) -> Result<SpectralResult> {
    solve_generalized(&mats.h, &mats.n, cutoff)
}

/// First level (0-based) whose energy lies below `floor`, with its energy.
pub fn floor_violation(energies: &[f64], floor: &[f64]) -> Option<(usize, f64, f64)> {
    energies
        .iter()
        .zip(floor)
        .position(|(&e, &f)| e < f - FLOOR_TOLERANCE * f.abs())
        .map(|l| (l, energies[l], floor[l]))
}

/// Hard-core exclusion restricts the free problem to a subdomain, so by
/// min-max every level sits at or above the free level of the same index,
/// and Ritz values only add to that. Quadrature error in H amplified through
/// near-null norm directions produces levels below that floor; the cutoff is
/// raised a decade at a time until none remain.
pub fn solve_block_guarded(mats: &MatrixTriple, cutoff: f64) -> Result<SpectralResult> {
    let floor = mats.basis.free_spectrum();
    let mut eps = cutoff;
    let mut escalations = 0;
    loop {
        let mut res = solve_block(mats, eps)?;
        match floor_violation(&res.energies, &floor) {
            None => {
                res.escalations = escalations;
                return Ok(res);
            }
            Some((level, energy, f)) => {
                if eps * 10.0 > MAX_GUARDED_CUTOFF * (1.0 + 1e-12) {
                    return Err(Error::BelowVariationalFloor { level, energy, floor: f, cutoff: eps });
                }
                log::debug!("level {} at {energy:.4} below floor {f:.4}; cutoff {eps:e} -> {:e}", level + 1, eps * 10.0);
                eps *= 10.0;
                escalations += 1;
            }
        }
    }
}

/// Same as [`solve_block`] on bare matrices.
pub fn solve_generalized(h: &DMatrix<f64>, n: &DMatrix<f64>, cutoff: f64) -> Result<SpectralResult> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::Config(format!("norm cutoff {cutoff} must lie in (0, 1)")));
    }
    if h.shape() != n.shape() || !h.is_square() {
        return Err(Error::Config("H and N must be square and of equal size".into()));
    }
    let (h, _) = hermitize(h);
    let (n, _) = hermitize(n);
    let (norm_values, norm_vectors) = sorted_eigen(n.clone())?;
    let largest = norm_values.last().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return Err(Error::EmptySubspace);
    }
    let keep: Vec<usize> = (0..norm_values.len()).filter(|&i| norm_values[i] >= cutoff * largest).collect();
    if keep.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let dim = h.nrows();
    let r = keep.len();
    let transform = DMatrix::from_fn(dim, r, |row, col| {
        let i = keep[col];
        norm_vectors[(row, i)] / norm_values[i].sqrt()
    });
    let reduced = transform.transpose() * &h * &transform;
    let (reduced, _) = hermitize(&reduced);
    let (energies, g) = sorted_eigen(reduced)?;
    let mut coefficients = &transform * g;
    for mut col in coefficients.column_iter_mut() {
        let mut v = col.clone_owned();
        fix_phase(&mut v);
        col.copy_from(&v);
    }

    let hc = &h * &coefficients;
    let mut defect = &n * &coefficients;
    for (l, mut col) in defect.column_iter_mut().enumerate() {
        col *= -energies[l];
        col += hc.column(l);
    }
    let retained = DMatrix::from_fn(dim, r, |row, col| norm_vectors[(row, keep[col])]);
    let projected = retained.transpose() * &defect;
    let relative = |num: f64, l: usize| {
        let den = hc.column(l).norm();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    };
    let residuals = (0..r).map(|l| relative(defect.column(l).norm(), l)).collect();
    let projected_residuals = (0..r).map(|l| relative(projected.column(l).norm(), l)).collect();

    Ok(SpectralResult {
        energies,
        coefficients,
        retained_dim: r,
        cutoff,
        escalations: 0,
        condition: ConditionReport { smallest_retained: norm_values[keep[0]], largest, discarded: dim - r },
        residuals,
        projected_residuals,
    })
}

/// `<d^2>` of a level: `C^T D C / C^T N C`.
pub fn expectation_d2(result: &SpectralResult, mats: &MatrixTriple, level: usize) -> Result<f64> {
    if level >= result.len() {
        return Err(Error::IndexOutOfRange { index: level, len: result.len() });
    }
    let c = result.coefficients.column(level);
    let num = (c.transpose() * &mats.d * c)[(0, 0)];
    let den = (c.transpose() * &mats.n * c)[(0, 0)];
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_block, HermiticityCheck};
    use crate::basis::{enumerate_basis, Exclusion};
    use crate::special::{BesselZeroTable, GridSpec};

    fn random_symmetric(dim: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.random::<f64>() - 0.5);
        &a + a.transpose()
    }

    #[test]
    fn identity_norm_is_plain_diagonalization() {
        let h = random_symmetric(12, 3);
        let res = solve_generalized(&h, &DMatrix::identity(12, 12), DEFAULT_NORM_CUTOFF).unwrap();
        let mut plain: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
        plain.sort_by(f64::total_cmp);
        for (a, b) in res.energies.iter().zip(&plain) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(res.max_residual() < 1e-12);
        assert_eq!(res.retained_dim, 12);
    }

    #[test]
    fn duplicated_row_is_projected_out() {
        let dim = 8;
        let a = random_symmetric(dim, 5);
        let b = DMatrix::from_fn(dim, dim, |r, c| if r == c { 1.0 + 0.1 * r as f64 } else { 0.0 });
        // Basis vector 0 repeated as a ninth function.
        let dup = |m: &DMatrix<f64>| {
            DMatrix::from_fn(dim + 1, dim + 1, |r, c| m[(if r == dim { 0 } else { r }, if c == dim { 0 } else { c })])
        };
        let base = solve_generalized(&a, &b, DEFAULT_NORM_CUTOFF).unwrap();
        let res = solve_generalized(&dup(&a), &dup(&b), DEFAULT_NORM_CUTOFF).unwrap();
        assert_eq!(res.retained_dim, dim);
        assert_eq!(res.condition.discarded, 1);
        for (x, y) in res.energies.iter().zip(&base.energies) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn guarded_solve_escalates_past_a_polluted_null_direction() {
        let zeros = BesselZeroTable::new(10, 6);
        let basis = enumerate_basis(1, 12, 10, 6, &zeros).unwrap();
        let mut t = assemble_block(&basis, Exclusion::Off, GridSpec { n_radial: 32, n_angular: 64 }, HermiticityCheck::None)
            .unwrap();
        assert!(solve_block_guarded(&t, DEFAULT_NORM_CUTOFF).unwrap().escalations == 0);
        // N is diagonal here; shrink one direction to 1e-7 of the largest and
        // give H an O(1e-3) error along it.
        let mut v = DVector::zeros(t.dim());
        v[0] = 1.0;
        let vvt = &v * v.transpose();
        let scale = t.n.diagonal().max();
        let (nv, hv) = ((v.transpose() * &t.n * &v)[(0, 0)], (v.transpose() * &t.h * &v)[(0, 0)]);
        t.n -= &vvt * (nv - 1e-7 * scale);
        t.h -= &vvt * (hv + 1e-3);
        let raw = solve_block(&t, DEFAULT_NORM_CUTOFF).unwrap();
        assert!(floor_violation(&raw.energies, &basis.free_spectrum()).is_some());
        let res = solve_block_guarded(&t, DEFAULT_NORM_CUTOFF).unwrap();
        assert_eq!(res.escalations, 2);
        assert!((res.cutoff - 1e-6).abs() < 1e-18);
        assert!(floor_violation(&res.energies, &basis.free_spectrum()).is_none());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let h = DMatrix::identity(3, 3);
        assert!(matches!(solve_generalized(&h, &h, 0.0), Err(Error::Config(_))));
        assert!(matches!(solve_generalized(&h, &DMatrix::zeros(3, 3), 1e-8), Err(Error::EmptySubspace)));
    }

    #[test]
    fn normalization_phase_and_bounds_on_a_real_block() {
        let zeros = BesselZeroTable::new(20, 10);
        let basis = enumerate_basis(1, 40, 20, 10, &zeros).unwrap();
        let ex = Exclusion::HardCore { beta: 1.5, l0: 0.5 };
        let t = assemble_block(&basis, ex, GridSpec { n_radial: 48, n_angular: 192 }, HermiticityCheck::None).unwrap();
        let res = solve_block(&t, DEFAULT_NORM_CUTOFF).unwrap();
        let norms = res.coefficients.transpose() * &t.n * &res.coefficients;
        assert!((norms - DMatrix::identity(res.len(), res.len())).amax() < 1e-9);
        for w in res.energies.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for l in 0..res.len() {
            let c = res.coefficients.column(l);
            let top = c.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(top > 0.0);
            let d2 = expectation_d2(&res, &t, l).unwrap();
            assert!(d2 > 0.25 - 1e-3 && d2 <= 4.0, "level {l}: {d2}");
        }
        assert!(matches!(expectation_d2(&res, &t, res.len()), Err(Error::IndexOutOfRange { .. })));
        assert!(res.max_projected_residual() < 1e-8);
        // Repulsion raises the ground level above the free pair.
        assert!(res.energies[0] > basis.labels[0].energy());
    }

    #[test]
    fn noninteracting_block_reproduces_zero_sums() {
        let zeros = BesselZeroTable::new(20, 10);
        let basis = enumerate_basis(1, 30, 20, 10, &zeros).unwrap();
        let t = assemble_block(&basis, Exclusion::Off, GridSpec { n_radial: 48, n_angular: 64 }, HermiticityCheck::None)
            .unwrap();
        let res = solve_block(&t, DEFAULT_NORM_CUTOFF).unwrap();
        for (e, p) in res.energies.iter().zip(&basis.labels) {
            assert!((e - p.energy()).abs() < 1e-9 * p.energy());
        }
    }
}
