use rand::Rng;
use rand_distr::StandardNormal;

use super::dynamics::{Billiard, PhaseState, Vec2};
use crate::error::{Error, Result};

pub const MAX_REJECTION_ATTEMPTS: u64 = 10_000_000;

fn point_in_unit_disk<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    loop {
        let p = Vec2::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0);
        if p.norm_squared() <= 1.0 {
            return p;
        }
    }
}

/// Uniform admissible pair of centers by rejection, with the number of
/// candidate pairs drawn.
pub fn sample_configuration<R: Rng + ?Sized>(billiard: &Billiard, rng: &mut R) -> Result<([Vec2; 2], u64)> {
    for attempt in 1..=MAX_REJECTION_ATTEMPTS {
        let q1 = point_in_unit_disk(rng);
        let q2 = point_in_unit_disk(rng);
        if !billiard.interacting || (q1 - q2).norm() > billiard.l0 {
            return Ok(([q1, q2], attempt));
        }
    }
    Err(Error::SamplingFailure { attempts: MAX_REJECTION_ATTEMPTS as usize })
}

/// Random state with kinetic energy `energy` and zero angular momentum.
///
/// Velocities start isotropic on the energy sphere; the rigid-rotation part
/// `omega z x q_i` carrying all of `L_z` is removed and the speeds rescaled.
pub fn sample_initial_condition<R: Rng + ?Sized>(billiard: &Billiard, energy: f64, rng: &mut R) -> Result<PhaseState> {
    if !(energy > 0.0) {
        return Err(Error::Config(format!("energy {energy} must be positive")));
    }
    let (q, _) = sample_configuration(billiard, rng)?;
    let inertia = q[0].norm_squared() + q[1].norm_squared();
    loop {
        let mut v = [0; 2].map(|_| Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let lz = q[0].perp(&v[0]) + q[1].perp(&v[1]);
        let omega = lz / inertia;
        for i in 0..2 {
            v[i] -= Vec2::new(-q[i].y, q[i].x) * omega;
        }
        let ke = 0.5 * (v[0].norm_squared() + v[1].norm_squared());
        if ke > 1e-12 {
            let f = (energy / ke).sqrt();
            return Ok(PhaseState::new(q[0], q[1], v[0] * f, v[1] * f));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScaledGeometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constraints_energy_and_angular_momentum() {
        let b = Billiard::new(&ScaledGeometry::from_sigma(0.2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let s = sample_initial_condition(&b, 1.0, &mut rng).unwrap();
            assert!(s.q[0].norm() <= 1.0 && s.q[1].norm() <= 1.0);
            assert!(s.separation() > b.l0);
            assert!((s.energy() - 1.0).abs() < 1e-14);
            assert!(s.angular_momentum().abs() < 1e-12);
        }
    }

    #[test]
    fn dense_packing_is_rare_but_possible() {
        let b = Billiard::new(&ScaledGeometry::from_sigma(0.45).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut accepted, mut drawn) = (0u64, 0u64);
        for _ in 0..200 {
            let (_, n) = sample_configuration(&b, &mut rng).unwrap();
            accepted += 1;
            drawn += n;
        }
        let rate = accepted as f64 / drawn as f64;
        assert!(rate > 0.0 && rate < 0.05, "acceptance {rate}");
    }
}
