use super::dynamics::{apply_collision, Billiard, CollisionEvent, EventKind, PhaseState, Vec2};
use crate::error::{Error, Result};

/// Collisions with `|n . v_rel|` below this make the linearized map singular.
pub const GRAZING_TOLERANCE: f64 = 1e-10;

/// Infinitesimal deviation of the 8-dimensional phase point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub dq: [Vec2; 2],
    pub dv: [Vec2; 2],
}

impl TangentVector {
    pub fn zero() -> Self {
        Self { dq: [Vec2::zeros(); 2], dv: [Vec2::zeros(); 2] }
    }

    pub fn from_components(c: [f64; 8]) -> Self {
        Self {
            dq: [Vec2::new(c[0], c[1]), Vec2::new(c[2], c[3])],
            dv: [Vec2::new(c[4], c[5]), Vec2::new(c[6], c[7])],
        }
    }

    pub fn components(&self) -> [f64; 8] {
        let [a, b] = self.dq;
        let [c, d] = self.dv;
        [a.x, a.y, b.x, b.y, c.x, c.y, d.x, d.y]
    }

    /// Deviation along the flow.
    pub fn along_flow(s: &PhaseState) -> Self {
        Self { dq: s.v, dv: [Vec2::zeros(); 2] }
    }

    pub fn norm(&self) -> f64 {
        self.components().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self { dq: [self.dq[0] * f, self.dq[1] * f], dv: [self.dv[0] * f, self.dv[1] * f] }
    }

    /// `s + eps * self`.
    pub fn displace(&self, s: &PhaseState, eps: f64) -> PhaseState {
        PhaseState {
            q: [s.q[0] + self.dq[0] * eps, s.q[1] + self.dq[1] * eps],
            v: [s.v[0] + self.dv[0] * eps, s.v[1] + self.dv[1] * eps],
            t: s.t,
        }
    }
}

fn tangential(n: Vec2, d: Vec2) -> Vec2 {
    d - n * n.dot(&d)
}

/// Carries `tau` through the free flight of `e.dt` starting from `s` and then
/// through the linearized collision `e`.
pub fn propagate_tangent(s: &PhaseState, tau: &TangentVector, e: &CollisionEvent, billiard: &Billiard) -> Result<TangentVector> {
    let mut at = *s;
    at.free_flight(e.dt);
    let post = apply_collision(&at, e, billiard)?;
    let mut out = *tau;
    for i in 0..2 {
        out.dq[i] += tau.dv[i] * e.dt;
    }
    let n = e.normal;
    match e.kind {
        EventKind::Wall(i) => {
            let w = at.v[i];
            let wn = n.dot(&w);
            if wn.abs() < GRAZING_TOLERANCE {
                return Err(Error::TangentialCollision { normal_speed: wn });
            }
            let dt = -n.dot(&out.dq[i]) / wn;
            let dx = out.dq[i] + w * dt;
            let dn = tangential(n, dx);
            let dv = out.dv[i];
            out.dq[i] += (w - post.v[i]) * dt;
            out.dv[i] = dv - (n * (dv.dot(&n) + w.dot(&dn)) + dn * wn) * 2.0;
        }
        EventKind::Pair => {
            let w = at.v[0] - at.v[1];
            let wn = n.dot(&w);
            if wn.abs() < GRAZING_TOLERANCE {
                return Err(Error::TangentialCollision { normal_speed: wn });
            }
            let dq_rel = out.dq[0] - out.dq[1];
            let dt = -n.dot(&dq_rel) / wn;
            let dn = tangential(n, dq_rel + w * dt) / billiard.l0;
            let dw = out.dv[0] - out.dv[1];
            let dj = n * (dw.dot(&n) + w.dot(&dn)) + dn * wn;
            for k in 0..2 {
                out.dq[k] += (at.v[k] - post.v[k]) * dt;
            }
            out.dv[0] -= dj;
            out.dv[1] += dj;
        }
    }
    Ok(out)
}
