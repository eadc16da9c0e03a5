use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Gauss-Legendre nodes and weights on an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes ascending.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// The same rule mapped affinely onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Grid sizes for the radial and angular integrations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_radial: 64, n_angular: 256 }
    }
}

impl GridSpec {
    pub fn doubled(self) -> Self {
        Self { n_radial: 2 * self.n_radial, n_angular: 2 * self.n_angular }
    }
}

/// Radial Gauss-Legendre rule on `[0, 1]` plus the angular rule on
/// `[0, 2 pi)`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub grid: GridSpec,
    pub radial: GaussLegendre,
    reference_angular: GaussLegendre,
}

pub fn build_quadrature(n_radial: usize, n_angular: usize) -> QuadratureRule {
    QuadratureRule::new(GridSpec { n_radial, n_angular })
}

impl QuadratureRule {
    pub fn new(grid: GridSpec) -> Self {
        assert!(grid.n_radial >= 2 && grid.n_angular >= 2, "grid counts must be >= 2");
        Self {
            grid,
            radial: GaussLegendre::new(grid.n_radial).on_interval(0.0, 1.0),
            reference_angular: GaussLegendre::new((grid.n_angular / 2).max(2)),
        }
    }

    /// Uniform periodic (trapezoid) nodes on `[0, 2 pi)`, exact for
    /// `cos(m phi)` with `|m| < n_angular`.
    pub fn periodic(&self) -> (Vec<f64>, f64) {
        let n = self.grid.n_angular;
        let h = 2.0 * PI / n as f64;
        ((0..n).map(|i| i as f64 * h).collect(), h)
    }

    /// Gauss-Legendre rule with `n_angular / 2` nodes on `[a, b]`; used on
    /// the smooth pieces of a split angular domain.
    pub fn angular_segment(&self, a: f64, b: f64) -> GaussLegendre {
        self.reference_angular.on_interval(a, b)
    }

    /// Integrates `f` over `[0, 2 pi)` with the domain split at the given
    /// break angles. Without breaks the periodic rule is used.
    pub fn integrate_angular(&self, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        if breaks.is_empty() {
            let (nodes, h) = self.periodic();
            return h * nodes.iter().map(|&x| f(x)).sum::<f64>();
        }
        let mut cuts: Vec<f64> = breaks.iter().map(|b| b.rem_euclid(2.0 * PI)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for (i, &a) in cuts.iter().enumerate() {
            let b = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + 2.0 * PI };
            if b > a {
                total += self.angular_segment(a, b).integrate(&f);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{bessel_j, bessel_zero};

    #[test]
    fn weights_positive_nodes_interior() {
        for n in [2, 3, 7, 64, 128] {
            let g = GaussLegendre::new(n).on_interval(0.0, 1.0);
            assert!(g.weights.iter().all(|&w| w > 0.0));
            assert!(g.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn polynomial_exactness() {
        for n in 1..12 {
            let g = GaussLegendre::new(n).on_interval(0.0, 1.0);
            assert!((g.integrate(|x| x) - 0.5).abs() < 1e-15);
            let deg = 2 * n - 1;
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((g.integrate(|x| x.powi(deg as i32)) - want).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn periodic_rule_kills_low_harmonics() {
        let rule = build_quadrature(8, 32);
        for m in 1..16 {
            let v = rule.integrate_angular(&[], |p| (m as f64 * p).cos());
            assert!(v.abs() < 1e-13, "m={m}: {v}");
        }
        assert!((rule.integrate_angular(&[], |_| 1.0) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn split_rule_integrates_kinks() {
        let rule = build_quadrature(8, 64);
        // |cos| has kinks at pi/2 and 3 pi/2.
        let v = rule.integrate_angular(&[0.5 * PI, 1.5 * PI], |p| p.cos().abs());
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn bessel_normalization_integral() {
        // Closed form: int_0^1 J_0(l r)^2 r dr = J_1(l)^2 / 2 at a zero l of J_0.
        let l = bessel_zero(0, 1);
        let want = 0.5 * bessel_j(1, l).powi(2);
        let rule = build_quadrature(64, 8);
        let got = rule.radial.integrate(|r| bessel_j(0, l * r).powi(2) * r);
        assert!((got - want).abs() < 1e-10);
        assert!((want - 0.13475706197095846).abs() < 1e-15);
    }
}
