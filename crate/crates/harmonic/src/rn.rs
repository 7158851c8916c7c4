//! Radon-Nikodym derivatives of translated hitting measures.
//!
//! For the SRW hitting measure ν on ∂F_m the translate x·ν is absolutely
//! continuous with density d(x·ν)/dν(η) = (2m-1)^{-β_η(x)}. The Busemann
//! value is an integer on a tree, so the density is an exact power and we
//! keep it as one; converting to f64 only happens at the caller's request.

use free_group::{boundary_translate, busemann, BoundaryApprox, ReducedWord};

use crate::error::{invalid, HarmonicError};
use crate::hitting::check_group;

/// An exact positive real of the form base^exponent with integer exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RnDerivative {
    base: u64,
    exponent: i64,
}

impl RnDerivative {
    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn value(&self) -> f64 {
        (self.base as f64).powi(self.exponent as i32)
    }

    pub fn log_value(&self) -> f64 {
        self.exponent as f64 * (self.base as f64).ln()
    }

    /// Exact product; the factors must share a base.
    pub fn mul(&self, rhs: &RnDerivative) -> Result<RnDerivative, HarmonicError> {
        if self.base != rhs.base {
            return Err(invalid(format!(
                "cannot multiply densities over different groups (bases {} and {})",
                self.base, rhs.base
            )));
        }
        Ok(RnDerivative { base: self.base, exponent: self.exponent + rhs.exponent })
    }
}

/// d(x·ν)/dν(η) for the SRW hitting measure of x's group.
///
/// Needs depth(η) ≥ 2|x| + 2 so the Busemann value is certain; shallower
/// approximations are refused rather than extrapolated.
pub fn rn_derivative(x: &ReducedWord, eta: &BoundaryApprox) -> Result<RnDerivative, HarmonicError> {
    check_group(x.group(), eta.group())?;
    let beta = busemann(x, eta)?;
    Ok(RnDerivative {
        base: (x.group().letter_count() - 1) as u64,
        exponent: -beta,
    })
}

/// The chain-rule factorization d(xy·ν)/dν(η) = d(x·ν)/dν(η) · d(y·ν)/dν(x⁻¹η),
/// returned as (left factor, translated point) for callers that walk a product
/// one letter group element at a time.
pub fn rn_cocycle_step(
    x: &ReducedWord,
    eta: &BoundaryApprox,
) -> Result<(RnDerivative, BoundaryApprox), HarmonicError> {
    let d = rn_derivative(x, eta)?;
    let moved = boundary_translate(&x.inverse(), eta)?;
    Ok((d, moved))
}
