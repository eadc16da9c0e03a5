//! The `L_z = 0` block commutes with the involution `T` that swaps the
//! radial indices across the `+-k` pair,
//! `{(k, n1), (-k, n2)} -> {(k, n2), (-k, n1)}`. On wavefunctions `T` is
//! complex conjugation, so it permutes basis functions without signs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::MatrixTriple;
use crate::basis::{BasisSet, PairLabel, SingleParticleLabel};
use crate::error::{Error, Result};
use crate::solver::SpectralResult;

pub const AMBIGUITY_THRESHOLD: f64 = 0.9;

/// `perm[i]` is the index of `T` applied to label `i`.
pub fn t_permutation(basis: &BasisSet) -> Result<Vec<usize>> {
    if basis.l_z != 0 {
        return Err(Error::ParityUnavailable(format!("T is defined for L_z = 0, not {}", basis.l_z)));
    }
    basis
        .labels
        .iter()
        .map(|p| {
            let image = PairLabel::new(
                SingleParticleLabel { n: p.p2.n, lambda: p.p2.lambda, ..p.p1 },
                SingleParticleLabel { n: p.p1.n, lambda: p.p1.lambda, ..p.p2 },
            );
            basis
                .index_of(&image)
                .ok_or_else(|| Error::ParityUnavailable(format!("T image of {p:?} is not in the basis")))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParitySplit {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
    /// Level indices (0-based) with `|<T>| < 0.9`.
    pub ambiguous: Vec<usize>,
    pub expectations: Vec<f64>,
    pub classes: Vec<Parity>,
    /// `|E T - T E|_F / |E|_F` in the eigenbasis of the retained subspace.
    pub commutator: f64,
}

pub fn classify(t: f64) -> Parity {
    if t.abs() < AMBIGUITY_THRESHOLD {
        Parity::Ambiguous
    } else if t > 0.0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

pub fn t_parity_split(mats: &MatrixTriple, result: &SpectralResult) -> Result<ParitySplit> {
    let perm = t_permutation(&mats.basis)?;
    let dim = perm.len();
    // (N P)_{a b} = N_{a, perm(b)}
    let np = DMatrix::from_fn(dim, dim, |a, b| mats.n[(a, perm[b])]);
    let c = &result.coefficients;
    let t = c.transpose() * np * c;
    let e = &result.energies;
    let r = e.len();
    let mut comm = 0.0;
    for l in 0..r {
        for m in 0..r {
            comm += ((e[l] - e[m]) * t[(l, m)]).powi(2);
        }
    }
    let scale = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    let expectations: Vec<f64> = (0..r).map(|l| t[(l, l)]).collect();
    let classes: Vec<Parity> = expectations.iter().map(|&x| classify(x)).collect();
    let pick = |want: Parity| (0..r).filter(|&l| classes[l] == want).map(|l| e[l]).collect::<Vec<_>>();
    Ok(ParitySplit {
        even: pick(Parity::Even),
        odd: pick(Parity::Odd),
        ambiguous: (0..r).filter(|&l| classes[l] == Parity::Ambiguous).collect(),
        expectations,
        classes,
        commutator: comm.sqrt() / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_block, HermiticityCheck};
    use crate::basis::{enumerate_basis, Exclusion};
    use crate::solver::solve_block;
    use crate::special::{BesselZeroTable, GridSpec};

    #[test]
    fn permutation_is_an_involution_with_radial_fixed_points() {
        let z = BesselZeroTable::new(30, 15);
        let b = enumerate_basis(0, 120, 30, 15, &z).unwrap();
        let p = t_permutation(&b).unwrap();
        for (i, &j) in p.iter().enumerate() {
            assert_eq!(p[j], i);
            let l = &b.labels[i];
            if l.p1.n == l.p2.n {
                assert_eq!(j, i);
            }
        }
        let b1 = enumerate_basis(1, 20, 30, 15, &z).unwrap();
        assert!(matches!(t_permutation(&b1), Err(Error::ParityUnavailable(_))));
    }

    #[test]
    fn eigenvectors_have_definite_parity() {
        let z = BesselZeroTable::new(30, 15);
        let basis = enumerate_basis(0, 60, 30, 15, &z).unwrap();
        let ex = Exclusion::HardCore { beta: 1.5, l0: 0.5 };
        let mats = assemble_block(&basis, ex, GridSpec::default(), HermiticityCheck::None).unwrap();
        let res = solve_block(&mats, 1e-8).unwrap();
        let split = t_parity_split(&mats, &res).unwrap();
        assert!(split.commutator < 1e-6, "commutator {:e}", split.commutator);
        assert_eq!(split.even.len() + split.odd.len() + split.ambiguous.len(), res.len());
        assert!(!split.even.is_empty() && !split.odd.is_empty());
        // The ground state (0,1),(0,1) is T-even.
        assert_eq!(split.classes[0], Parity::Even);
    }
}
