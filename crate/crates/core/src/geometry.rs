//! Physical parameters and the dimensionless scaling used everywhere else.
//!
//! Lengths are measured in units of `R - a` (the radius available to a disk
//! center) and energies in units of `hbar^2 / (2 m (R - a)^2)`. After scaling
//! each disk center lives in the closed unit disk and two centers may not come
//! closer than `l0 = 2 a / (R - a)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalGeometry {
    /// Cavity radius.
    pub cavity_radius: f64,
    /// Disk radius, strictly between 0 and half the cavity radius.
    pub disk_radius: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl PhysicalGeometry {
    pub fn new(cavity_radius: f64, disk_radius: f64) -> Self {
        Self {
            cavity_radius,
            disk_radius,
            mass: 1.0,
            hbar: 1.0,
        }
    }

    /// Geometry with unit disk radius and `R = 1/sigma`, the parameterization
    /// used for pressure-volume curves.
    pub fn unit_disk(sigma: f64) -> Self {
        Self::new(1.0 / sigma, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (r, a) = (self.cavity_radius, self.disk_radius);
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidGeometry(format!("cavity radius {r} must be > 0")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidGeometry(format!("disk radius {a} must be > 0")));
        }
        if a >= 0.5 * r {
            return Err(Error::InvalidGeometry(format!(
                "disk radius {a} must be < R/2 = {}",
                0.5 * r
            )));
        }
        if !(self.mass > 0.0 && self.hbar > 0.0) {
            return Err(Error::InvalidGeometry("mass and hbar must be > 0".into()));
        }
        Ok(())
    }
}

/// Dimensionless geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledGeometry {
    /// `a / R`.
    pub sigma: f64,
    /// `a / (R - a)`.
    pub a_prime: f64,
    /// `R / (R - a)`.
    pub r_prime: f64,
    /// Minimum center distance `2 a'`.
    pub l0: f64,
    /// `hbar^2 / (2 m (R - a)^2)` in physical energy units.
    pub energy_unit: f64,
    /// Cavity area `pi R^2`.
    pub volume: f64,
}

pub fn scale_geometry(g: &PhysicalGeometry) -> Result<ScaledGeometry> {
    g.validate()?;
    let (r, a) = (g.cavity_radius, g.disk_radius);
    let free = r - a;
    let a_prime = a / free;
    Ok(ScaledGeometry {
        sigma: a / r,
        a_prime,
        r_prime: r / free,
        l0: 2.0 * a_prime,
        energy_unit: g.hbar * g.hbar / (2.0 * g.mass * free * free),
        volume: cavity_volume(r),
    })
}

impl ScaledGeometry {
    /// Scaled geometry from `sigma` alone, with unit disk radius and unit
    /// mass and hbar.
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::InvalidGeometry(format!("sigma = {sigma} must lie in (0, 0.5)")));
        }
        scale_geometry(&PhysicalGeometry::unit_disk(sigma))
    }

    /// Contact distance expressed through sigma only: `2 sigma / (1 - sigma)`.
    pub fn l0_for_sigma(sigma: f64) -> f64 {
        2.0 * sigma / (1.0 - sigma)
    }

    pub fn to_physical_energy(&self, scaled: f64) -> f64 {
        scaled * self.energy_unit
    }

    pub fn to_scaled_energy(&self, physical: f64) -> f64 {
        physical / self.energy_unit
    }
}

pub fn cavity_volume(cavity_radius: f64) -> f64 {
    PI * cavity_radius * cavity_radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn half_radius_disk_is_rejected() {
        assert!(matches!(
            scale_geometry(&PhysicalGeometry::new(2.0, 1.0)),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(scale_geometry(&PhysicalGeometry::new(2.0, 0.0)).is_err());
        assert!(scale_geometry(&PhysicalGeometry::new(2.0, -0.1)).is_err());
    }

    #[test]
    fn quarter_ratio_arithmetic() {
        let s = scale_geometry(&PhysicalGeometry::new(2.0, 0.5)).unwrap();
        assert!((s.sigma - 0.25).abs() < 1e-15);
        assert!((s.a_prime - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.r_prime - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.l0 - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.sigma - s.a_prime / s.r_prime).abs() < 1e-15);
    }

    #[test]
    fn point_disk_limit() {
        let s = scale_geometry(&PhysicalGeometry::new(1.0, 1e-12)).unwrap();
        assert!(s.sigma < 1e-11 && s.a_prime < 1e-11 && s.l0 < 1e-11);
        assert!((s.r_prime - 1.0).abs() < 1e-11);
    }

    #[test]
    fn volumes() {
        assert!((cavity_volume(1.0) - PI).abs() < 1e-15);
        assert!((cavity_volume(2.0) - 4.0 * PI).abs() < 1e-14);
        let sigma = 0.2;
        let s = ScaledGeometry::from_sigma(sigma).unwrap();
        assert!((s.volume - PI / (sigma * sigma)).abs() < 1e-12);
        assert!((s.l0 - ScaledGeometry::l0_for_sigma(sigma)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn sigma_is_scale_invariant(r in 0.1f64..100.0, frac in 1e-6f64..0.499_999) {
            let g = PhysicalGeometry::new(r, frac * r);
            let s = scale_geometry(&g).unwrap();
            prop_assert!((s.sigma - s.a_prime / s.r_prime).abs() <= 4.0 * f64::EPSILON * s.sigma.max(1e-300) + 1e-300);
        }

        #[test]
        fn energy_unit_round_trip(r in 0.5f64..50.0, frac in 0.01f64..0.49, e in -1e4f64..1e4) {
            let s = scale_geometry(&PhysicalGeometry::new(r, frac * r)).unwrap();
            let back = s.to_scaled_energy(s.to_physical_energy(e));
            prop_assert!((back - e).abs() <= 4.0 * f64::EPSILON * e.abs());
        }
    }
}
