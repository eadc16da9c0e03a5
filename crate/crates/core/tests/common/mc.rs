use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twodisk::basis::{evaluate_basis, Exclusion, PairLabel};

/// Monte Carlo estimate of one matrix element with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn agrees(&self, value: f64, sigmas: f64) -> bool {
        (value - self.mean).abs() <= sigmas * self.stderr
    }
}

pub struct McElements {
    pub h: McEstimate,
    pub n: McEstimate,
    pub d: McEstimate,
}

fn point_in_disk(rng: &mut ChaCha8Rng) -> [f64; 2] {
    loop {
        let x = 2.0 * rng.random::<f64>() - 1.0;
        let y = 2.0 * rng.random::<f64>() - 1.0;
        if x * x + y * y < 1.0 {
            return [x, y];
        }
    }
}

fn polar(p: [f64; 2]) -> (f64, f64) {
    (p[0].hypot(p[1]), p[1].atan2(p[0]))
}

fn psi(label: &PairLabel, q: [f64; 4], ex: Exclusion) -> Complex<f64> {
    evaluate_basis(label, polar([q[0], q[1]]), polar([q[2], q[3]]), ex)
}

fn gradient(label: &PairLabel, q: [f64; 4], ex: Exclusion, h: f64) -> [Complex<f64>; 4] {
    let mut g = [Complex::new(0.0, 0.0); 4];
    for (axis, slot) in g.iter_mut().enumerate() {
        let (mut plus, mut minus) = (q, q);
        plus[axis] += h;
        minus[axis] -= h;
        *slot = (psi(label, plus, ex) - psi(label, minus, ex)) / (2.0 * h);
    }
    g
}

/// Direct 4-D Monte Carlo over two independent uniform points of the unit
/// disk. The energy element uses the quadratic form
/// `int grad conj(psi_a) . grad psi_b` with central differences.
pub fn mc_elements(a: &PairLabel, b: &PairLabel, ex: Exclusion, samples: usize, seed: u64) -> McElements {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let volume = std::f64::consts::PI * std::f64::consts::PI;
    let mut acc = [[0.0f64; 2]; 3];
    let step = 1e-6;
    for _ in 0..samples {
        let p1 = point_in_disk(&mut rng);
        let p2 = point_in_disk(&mut rng);
        let q = [p1[0], p1[1], p2[0], p2[1]];
        let d2 = (q[0] - q[2]).powi(2) + (q[1] - q[3]).powi(2);
        let (va, vb) = (psi(a, q, ex), psi(b, q, ex));
        let n = (va.conj() * vb).re;
        let (ga, gb) = (gradient(a, q, ex, step), gradient(b, q, ex, step));
        let h: f64 = ga.iter().zip(&gb).map(|(x, y)| (x.conj() * y).re).sum();
        for (slot, v) in acc.iter_mut().zip([h, n, n * d2]) {
            slot[0] += v;
            slot[1] += v * v;
        }
    }
    let est = |s: [f64; 2]| {
        let mean = s[0] / samples as f64;
        let var = (s[1] / samples as f64 - mean * mean).max(0.0);
        McEstimate { mean: volume * mean, stderr: volume * (var / samples as f64).sqrt() }
    };
    McElements { h: est(acc[0]), n: est(acc[1]), d: est(acc[2]) }
}
