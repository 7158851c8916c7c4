//! Pivotal-time machinery for random walks on trees: chains, chain shadows,
//! Schottky sets, the pivotal-time induction with its resampling classes,
//! and the entropy-gap statistics built on top of them.

mod chain;
mod class;
mod error;
mod pivot;
mod schottky;
mod shadow;
mod stats;

pub use chain::{is_chain, ChainCheck, ChainParams, ChainViolation};
pub use class::{enumerate_class, pivoted_class, ClassEnumeration, PivotedClass};
pub use error::PivotalError;
pub use pivot::{pivotal_times, PivotConstants, PivotEngine, PivotMarker, PivotalState};
pub use schottky::{
    demo_schottky_set, schottky_certify, SchottkyCertificate, SchottkyRefutation,
    SchottkyVerdict, DEMO_SCHOTTKY_C, DEMO_SCHOTTKY_D, DEMO_SCHOTTKY_EPSILON,
    DEMO_SCHOTTKY_SIZE,
};
pub use shadow::{chain_shadow_contains, chain_shadow_search};
pub use stats::{
    pivotal_gap_report, product_component, schottky_from_factor, GapParams, HorizonStat,
    PivotalGapReport, GAP_EPSILON,
};
