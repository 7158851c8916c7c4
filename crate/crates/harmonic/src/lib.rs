mod conservation;
mod dimension;
mod doob;
mod error;
mod hitting;
mod rn;
mod sample;

pub use conservation::{
    dimension_conservation_report, stationarity_check, ConservationParams, ConservationReport,
    StationarityEvent, StationarityReport,
};
pub use dimension::{
    ball_mass_and_dimension_fit, conditional_dimension_estimate, exact_dimension_fit, fit_window,
    pair_ball_mass_and_dimension_fit, pair_dimension_summary, point_dimension_summary,
    ConditionalParams, DimensionFit, DimensionSummary,
};
pub use doob::{
    doob_limit_points, doob_trajectory, DoobSampler, DoobTrajectory, DoobTransition, DoobWalk,
    DoobWalkSpec,
};
pub use error::HarmonicError;
pub use hitting::ExactHittingMeasure;
pub use rn::{rn_cocycle_step, rn_derivative, RnDerivative};
pub use sample::{boundary_sample, sample_boundary_pairs, sample_boundary_points, BoundarySample};
