//! Symmetrized two-disk basis with the excluded-volume factor, and the
//! angular kernel tables used to integrate it.

mod kernels;
mod labels;
mod wavefunction;

pub use kernels::{contact_angle, precompute_kernels, Kernel, KernelKey, KernelTables, KERNEL_COUNT};
pub(crate) use kernels::hex;
pub use labels::{auto_rectangle, enumerate_basis, BasisSet, PairLabel, SingleParticleLabel};
pub use wavefunction::{evaluate_basis, f_exclusion, void_coordinate, Exclusion};
