//! Detection statistics for a heralded photon-pair source.
//!
//! A source emits photon pairs into a heralding channel H and a signal
//! channel that a 50/50 splitter routes to detectors A and B. This crate
//! models the per-window joint click statistics of the three detectors
//! (transmission losses, dark counts, optional spectral correlations),
//! inverts measured singles and coincidence probabilities back to the
//! channel transmissions and source brightness, bounds the brightness
//! from the correlation strength alone, predicts the heralded
//! autocorrelation `g2`, and cross-checks everything against a
//! brute-force Monte Carlo click simulator.

pub mod characterize;
pub mod error;
pub mod forward;
pub mod io;
pub mod matrix;
pub mod montecarlo;
pub mod outcome;
mod rootfind;
pub mod setup;

pub use characterize::{
    brightness_from_heralding, brightness_from_p1, brightness_upper_bound, correlation_curve,
    g2_low_brightness_approx, multipair_ratio, predict_g2, predict_g2_at_heralding,
    solve_transmissions, BrightnessBound, CharacterizedSource, Estimate, MeasuredProbabilities,
};
pub use error::{Error, Result};
pub use forward::{correlation_strength, detection_statistics, DEFAULT_TAIL_TOL, MAX_PAIR_TERMS};
pub use matrix::{
    correlated_detection_matrix, dark_count_matrix, detection_matrix, TransitionMatrix,
};
pub use montecarlo::{
    estimate_probabilities, propagate_uncertainty, simulate_heralded_g2, simulate_windows,
    ClickCounts,
};
pub use outcome::{DetectorOutcome, MarginalSet, ProbabilityVector, OUTCOMES};
pub use setup::{ChannelTransmissions, DarkCountRates, PairDistribution, PairKind, SetupModel};
