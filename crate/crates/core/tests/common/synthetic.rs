use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit-mean spacing laws with closed-form inverse CDFs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticLaw {
    Poisson,
    Wigner,
}

impl SyntheticLaw {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        match self {
            SyntheticLaw::Poisson => -(-u).ln_1p(),
            SyntheticLaw::Wigner => (-4.0 * (-u).ln_1p() / std::f64::consts::PI).sqrt(),
        }
    }
}

/// Ascending levels whose spacings are i.i.d. draws from `law`.
pub fn synthetic_levels(law: SyntheticLaw, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = 0.0;
    (0..n)
        .map(|_| {
            e += law.draw(&mut rng);
            e
        })
        .collect()
}
