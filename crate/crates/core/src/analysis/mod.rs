//! Sweeps over sigma and the statistics built on top of them: level
//! spacing distributions, the T-parity split of the `L_z = 0` block, single
//! level equations of states and squared-distance curves.

mod eos;
mod parity;
mod spacing;
mod sweep;

pub use eos::{
    avoided_crossings, derivative, distance_curve, find_peaks, physical_energy, pressure_curve,
    pressure_distance_correlation, pressure_from_volume, AvoidedCrossing, CorrelationReport, CrossingOptions,
    DistanceCurve, EnergyScale, EosCurve, EosPoint, JumpPair, Peak, PeakOptions,
};
pub use parity::{classify, t_parity_split, t_permutation, Parity, ParitySplit, AMBIGUITY_THRESHOLD};
pub use spacing::{
    histogram, ks_critical_5pct, ks_statistic, spacing_statistics, unfold, Histogram, KsResult, LevelWindow,
    Reference, SpacingEnsemble, SpacingOptions, Unfolded, DEFAULT_FIT_DEGREE, MIN_UNFOLD_LEVELS,
};
pub use sweep::{
    solve_point, sweep, BlockConfig, SolvedPoint, SpectrumPoint, SpectrumRow, SpectrumTable, SweepFailure,
    SweepStats,
};
