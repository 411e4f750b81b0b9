//! Driven three-level cascade atom with incoherent pumping: master-equation
//! generator, steady states, probe absorption spectra, two-time intensity
//! correlations, and a Monte Carlo wave-function cross-check.

pub mod cli;
pub mod correlations;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod lindblad;
mod linalg;
pub mod params;
pub mod spectra;
pub mod steady;
pub mod trajectory;

pub use correlations::{
    classify_regions, g2, g2_with_method, reset_state, CorrelationCurve, Region, RegionLabel,
    Transition,
};
pub use density::DensityMatrix;
pub use dynamics::{matrix_exponential, propagate, Method, PropagationResult};
pub use error::{Error, Result};
pub use lindblad::{apply_generator, build_liouvillian, devectorize, vectorize, Liouvillian};
pub use params::SystemParams;
pub use spectra::{
    default_detuning_grid, dip_metrics, integrated_absorption, local_maxima, sweep_probe_detuning,
    to_physical_units, DipMetrics, QuantityKind, SpectrumCurve,
};
pub use steady::{
    population_difference, solve_steady_state, two_level_excited_population, SteadyStateSolution,
};
pub use trajectory::{
    channel_rate_statistics, equilibrium_populations, g2_and_steady_from_trajectories,
    g2_from_trajectories, jump_channels, run_trajectories, ChannelStatistics, JumpChannel,
    Quantity, TrajectoryEstimate,
};
