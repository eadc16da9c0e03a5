mod common;

use common::mc::mc_elements;
use twodisk::assembly::{assemble_block, HermiticityCheck};
use twodisk::basis::{enumerate_basis, Exclusion};
use twodisk::geometry::ScaledGeometry;
use twodisk::special::{BesselZeroTable, GridSpec};

#[test]
fn two_by_two_block_matches_monte_carlo() {
    let g = ScaledGeometry::from_sigma(0.2).unwrap();
    let ex = Exclusion::HardCore { beta: 1.5, l0: g.l0 };
    let zeros = BesselZeroTable::new(10, 5);
    let basis = enumerate_basis(1, 2, 10, 5, &zeros).unwrap();
    let t = assemble_block(&basis, ex, GridSpec::default(), HermiticityCheck::Full).unwrap();
    for r in 0..2 {
        for c in 0..2 {
            let mc = mc_elements(&basis.labels[r], &basis.labels[c], ex, 200_000, 17 + (2 * r + c) as u64);
            for (name, value, est) in [("H", t.h[(r, c)], mc.h), ("N", t.n[(r, c)], mc.n), ("D", t.d[(r, c)], mc.d)] {
                assert!(est.agrees(value, 3.0), "{name}[{r}{c}] = {value} vs MC {} +- {}", est.mean, est.stderr);
            }
        }
    }
}
