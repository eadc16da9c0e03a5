//! Event-driven dynamics of two hard disks in the unit circle (scaled
//! units) and the maximum Lyapunov exponent from the linearized flow.

mod dynamics;
mod lyapunov;
mod sampling;
mod tangent;

pub use dynamics::{
    apply_collision, next_event, Billiard, CollisionEvent, EventKind, PhaseState, Vec2, CONTACT_TOLERANCE,
};
pub use lyapunov::{
    lyapunov_ensemble, lyapunov_exponent, member_rng, EnsembleConfig, LyapunovEstimate, OrbitExponent,
    TorusThreshold, DEFAULT_RENORM_EVERY,
};
pub use sampling::{sample_configuration, sample_initial_condition, MAX_REJECTION_ATTEMPTS};
pub use tangent::{propagate_tangent, TangentVector, GRAZING_TOLERANCE};
