use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Complex;

use super::labels::{PairLabel, SingleParticleLabel};
use crate::special::bessel_j;

/// Void between the two disks, `r1^2 + r2^2 - 2 r1 r2 cos(phi) - l0^2`.
/// Positive when the disks do not overlap.
pub fn void_coordinate(r1: f64, r2: f64, phi: f64, l0: f64) -> f64 {
    r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * phi.cos() - l0 * l0
}

/// Excluded-volume factor `1 - exp(-beta X)` for `X > 0`, zero otherwise.
pub fn f_exclusion(x: f64, beta: f64) -> f64 {
    if x > 0.0 {
        -(-beta * x).exp_m1()
    } else {
        0.0
    }
}

/// How the two-disk basis treats the hard core.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Exclusion {
    /// `f(X)` with the given `beta` and contact distance `l0`.
    HardCore { beta: f64, l0: f64 },
    /// `f = 1`: two independent disks.
    Off,
}

impl Exclusion {
    pub fn factor(&self, x_without_core: f64) -> f64 {
        match *self {
            Exclusion::HardCore { beta, l0 } => f_exclusion(x_without_core - l0 * l0, beta),
            Exclusion::Off => 1.0,
        }
    }
}

pub(crate) fn single(p: &SingleParticleLabel, r: f64, theta: f64) -> Complex<f64> {
    let radial = bessel_j(p.k, p.lambda * r);
    Complex::from_polar(radial, p.k as f64 * theta)
}

/// Symmetrized basis function `(Phi(1,2) + Phi(2,1)) / sqrt 2` at the given
/// polar coordinates of both disk centers.
pub fn evaluate_basis(
    alpha: &PairLabel,
    (r1, theta1): (f64, f64),
    (r2, theta2): (f64, f64),
    exclusion: Exclusion,
) -> Complex<f64> {
    let d2 = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * (theta2 - theta1).cos();
    let f = exclusion.factor(d2);
    if f == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    let direct = single(&alpha.p1, r1, theta1) * single(&alpha.p2, r2, theta2);
    let swapped = single(&alpha.p1, r2, theta2) * single(&alpha.p2, r1, theta1);
    (direct + swapped) * (f * FRAC_1_SQRT_2)
}
