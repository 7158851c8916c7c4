//! Exact algebra and geometry of free groups and their two-factor products.
//!
//! Free groups act on their Cayley trees, which are 0-hyperbolic, so every
//! coarse quantity of hyperbolic geometry (Gromov products, shadows, Busemann
//! cocycles, boundary quasi-metrics) collapses to exact integer arithmetic on
//! reduced words. This crate supplies that arithmetic: words and the word
//! metric, boundary points as stabilized prefixes that refuse to answer
//! beyond their depth, the max metric on products, and the kill-last-generator
//! homomorphism.

mod boundary;
mod error;
mod hom;
mod product;
mod word;

pub use boundary::{
    boundary_translate, busemann, gromov_product, quasi_metric, shadow_contains, BoundaryApprox,
    Gromov, PointRef, QValue,
};
pub use error::GroupError;
pub use hom::KillLastGenerator;
pub use product::{
    pair_boundary_quasi_metric, product_quasi_metric, PairBoundary, ProductElement,
};
pub use word::{word_gromov, FreeGroupSpec, ReducedWord};
