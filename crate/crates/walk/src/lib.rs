//! Random walks on free groups and their products: step measures, sampling,
//! exact radial laws, and drift/entropy estimation.
//!
//! Everything downstream leans on two facts. Isotropic factor walks have a
//! radial law computable exactly by a birth-death recursion, which turns
//! entropy and pointwise log-likelihoods into one-dimensional sums. And all
//! Monte Carlo here is seeded per trial through a splitmix-derived stream,
//! so estimates are reproducible and independent of rayon's thread count.

pub mod conditional;
pub mod drift;
pub mod entropy;
mod error;
pub mod joint;
pub mod measure;
pub mod radial;
pub mod rng;
pub mod stats;
pub mod trajectory;

pub use conditional::{conditional_entropy_estimate, ConditionalEntropyReport};
pub use drift::{drift_estimate, DriftReport, Estimate};
pub use entropy::{entropy_estimate, EntropyMethod, EntropyReport};
pub use error::WalkError;
pub use joint::{joint_distribution, JointDistribution};
pub use measure::{
    marginal_chi_square, FactorMeasure, MeasureSpec, PreparedMeasure, RadialLaw, MASS_TOLERANCE,
};
pub use radial::{radial_profile, sphere_size_log, RadialEvolution, RadialProfile, RadialTable};
pub use rng::{mix_seed, trial_rng};
pub use stats::{
    chi_square_p_value, kahan_sum, log_add_exp, log_add_exp3, KahanSum, RunningStat,
};
pub use trajectory::{sample_trajectory, Trajectory, Walker};
