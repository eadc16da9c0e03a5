use twodisk::classical::{next_event, propagate_tangent, Billiard, PhaseState, TangentVector};

/// Accumulated log growth over one segment measured two ways.
#[derive(Clone, Copy, Debug)]
pub struct ShadowComparison {
    pub tangent: f64,
    pub twin: f64,
}

impl ShadowComparison {
    pub fn relative_gap(&self) -> f64 {
        (self.tangent - self.twin).abs() / self.twin.abs()
    }
}

fn difference(a: &PhaseState, b: &PhaseState) -> TangentVector {
    TangentVector { dq: [a.q[0] - b.q[0], a.q[1] - b.q[1]], dv: [a.v[0] - b.v[0], a.v[1] - b.v[1]] }
}

/// Compares tangent-map growth to a finite-offset twin trajectory over
/// `n_col` collisions. Both are sampled at the midpoint of every free
/// flight; the twin is pulled back to distance `eps` there. Returns `None`
/// if the twin's collision sequence departs from the reference.
pub fn shadow_segment(b: &Billiard, s0: &PhaseState, tau0: &TangentVector, n_col: usize, eps: f64) -> Option<ShadowComparison> {
    let mut s = *s0;
    let mut tau = tau0.scaled(1.0 / tau0.norm());
    let mut twin = tau.displace(&s, eps);
    let (mut log_tangent, mut log_twin) = (0.0, 0.0);
    for _ in 0..n_col {
        let e = next_event(&s, b).ok()?;
        tau = propagate_tangent(&s, &tau, &e, b).ok()?;
        b.step(&mut s).ok()?;
        let half = 0.5 * next_event(&s, b).ok()?.dt;
        s.free_flight(half);
        for k in 0..2 {
            tau.dq[k] += tau.dv[k] * half;
        }
        let mut kinds = Vec::new();
        b.advance_to(&mut twin, s.t, &mut kinds).ok()?;
        if kinds != [e.kind] {
            return None;
        }
        let delta = difference(&twin, &s);
        let grown = delta.norm();
        log_twin += (grown / eps).ln();
        twin = delta.scaled(1.0 / grown).displace(&s, eps);
        let n = tau.norm();
        log_tangent += n.ln();
        tau = tau.scaled(1.0 / n);
    }
    Some(ShadowComparison { tangent: log_tangent, twin: log_twin })
}
