use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScaledGeometry;

pub type Vec2 = Vector2<f64>;

/// Positions and velocities of both disk centers in scaled units: the
/// centers move inside the unit circle and touch each other at distance
/// `l0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState {
    pub q: [Vec2; 2],
    pub v: [Vec2; 2],
    pub t: f64,
}

impl PhaseState {
    pub fn new(q1: Vec2, q2: Vec2, v1: Vec2, v2: Vec2) -> Self {
        Self { q: [q1, q2], v: [v1, v2], t: 0.0 }
    }

    /// Kinetic energy with unit mass.
    pub fn energy(&self) -> f64 {
        0.5 * (self.v[0].norm_squared() + self.v[1].norm_squared())
    }

    pub fn angular_momentum(&self) -> f64 {
        self.q[0].perp(&self.v[0]) + self.q[1].perp(&self.v[1])
    }

    pub fn separation(&self) -> f64 {
        (self.q[0] - self.q[1]).norm()
    }

    pub fn free_flight(&mut self, dt: f64) {
        for i in 0..2 {
            self.q[i] += self.v[i] * dt;
        }
        self.t += dt;
    }

    pub fn reversed(&self) -> Self {
        Self { q: self.q, v: [-self.v[0], -self.v[1]], t: self.t }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Wall(usize),
    Pair,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionEvent {
    pub kind: EventKind,
    pub dt: f64,
    /// Outward wall normal, or `(q1 - q2) / |q1 - q2|` for the pair.
    pub normal: Vec2,
}

/// The cavity plus the pair contact distance. With `interacting = false`
/// the disks pass through each other: two independent circle billiards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Billiard {
    pub l0: f64,
    pub interacting: bool,
}

/// Relative tolerance on the contact-surface residual in [`apply_collision`].
pub const CONTACT_TOLERANCE: f64 = 1e-9;

impl Billiard {
    pub fn new(g: &ScaledGeometry) -> Self {
        Self { l0: g.l0, interacting: true }
    }

    pub fn without_interaction(self) -> Self {
        Self { interacting: false, ..self }
    }

    /// Advances `s` to the next collision and resolves it.
    pub fn step(&self, s: &mut PhaseState) -> Result<CollisionEvent> {
        let e = next_event(s, self)?;
        s.free_flight(e.dt);
        *s = apply_collision(s, &e, self)?;
        Ok(e)
    }

    /// Runs until `t_end`, leaving `s` in free flight at exactly `t_end`.
    pub fn advance_to(&self, s: &mut PhaseState, t_end: f64, events: &mut Vec<EventKind>) -> Result<()> {
        loop {
            let e = next_event(s, self)?;
            if s.t + e.dt > t_end {
                s.free_flight(t_end - s.t);
                s.t = t_end;
                return Ok(());
            }
            s.free_flight(e.dt);
            *s = apply_collision(s, &e, self)?;
            events.push(e.kind);
        }
    }
}

// Larger root of |q + t v| = 1 for a point inside the unit circle.
fn wall_time(q: &Vec2, v: &Vec2) -> Option<f64> {
    let a = v.norm_squared();
    if a == 0.0 {
        return None;
    }
    let b = q.dot(v);
    let c = q.norm_squared() - 1.0;
    let disc = (b * b - a * c).max(0.0).sqrt();
    let t = if b <= 0.0 { (disc - b) / a } else { -c / (b + disc) };
    Some(t.max(0.0))
}

// Smaller root of |dq + t dv| = l0 when approaching.
fn pair_time(dq: &Vec2, dv: &Vec2, l0: f64) -> Option<f64> {
    let b = dq.dot(dv);
    if b >= 0.0 {
        return None;
    }
    let a = dv.norm_squared();
    let c = dq.norm_squared() - l0 * l0;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    Some((c / (disc.sqrt() - b)).max(0.0))
}

pub fn next_event(s: &PhaseState, billiard: &Billiard) -> Result<CollisionEvent> {
    let mut best: Option<(EventKind, f64)> = None;
    let mut consider = |kind, t: Option<f64>| {
        if let Some(t) = t {
            if t.is_finite() && best.is_none_or(|(_, b)| t < b) {
                best = Some((kind, t));
            }
        }
    };
    for i in 0..2 {
        consider(EventKind::Wall(i), wall_time(&s.q[i], &s.v[i]));
    }
    if billiard.interacting {
        consider(EventKind::Pair, pair_time(&(s.q[0] - s.q[1]), &(s.v[0] - s.v[1]), billiard.l0));
    }
    let (kind, dt) = best.ok_or(Error::NoEvent)?;
    let mut at = *s;
    at.free_flight(dt);
    Ok(CollisionEvent { kind, dt, normal: contact_normal(&at, kind) })
}

fn contact_normal(s: &PhaseState, kind: EventKind) -> Vec2 {
    match kind {
        EventKind::Wall(i) => s.q[i].normalize(),
        EventKind::Pair => (s.q[0] - s.q[1]).normalize(),
    }
}

/// Elastic reflection of a state already advanced to the contact surface.
/// The state is re-projected exactly onto that surface.
pub fn apply_collision(s: &PhaseState, e: &CollisionEvent, billiard: &Billiard) -> Result<PhaseState> {
    let mut out = *s;
    match e.kind {
        EventKind::Wall(i) => {
            let r = s.q[i].norm();
            if (r - 1.0).abs() > CONTACT_TOLERANCE {
                return Err(Error::NotAtContact { residual: r - 1.0 });
            }
            let n = s.q[i] / r;
            out.q[i] = n;
            out.v[i] = s.v[i] - n * (2.0 * s.v[i].dot(&n));
        }
        EventKind::Pair => {
            let dq = s.q[0] - s.q[1];
            let d = dq.norm();
            if (d - billiard.l0).abs() > CONTACT_TOLERANCE * billiard.l0.max(1.0) {
                return Err(Error::NotAtContact { residual: d - billiard.l0 });
            }
            let n = dq / d;
            let center = (s.q[0] + s.q[1]) * 0.5;
            out.q[0] = center + n * (0.5 * billiard.l0);
            out.q[1] = center - n * (0.5 * billiard.l0);
            let j = (s.v[0] - s.v[1]).dot(&n);
            out.v[0] = s.v[0] - n * j;
            out.v[1] = s.v[1] + n * j;
        }
    }
    Ok(out)
}
