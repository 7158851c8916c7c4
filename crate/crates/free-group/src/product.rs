//! Two-factor products Γ × Γ* with the max metric and the max quasi-metric on
//! the product boundary ∂Γ × ∂Γ*.

use std::fmt;

use crate::boundary::{quasi_metric, BoundaryApprox, Gromov, QValue};
use crate::error::GroupError;
use crate::word::{FreeGroupSpec, ReducedWord};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductElement {
    first: ReducedWord,
    second: ReducedWord,
}

impl ProductElement {
    pub fn new(first: ReducedWord, second: ReducedWord) -> Self {
        ProductElement { first, second }
    }

    pub fn identity(first: FreeGroupSpec, second: FreeGroupSpec) -> Self {
        ProductElement {
            first: ReducedWord::identity(first),
            second: ReducedWord::identity(second),
        }
    }

    pub fn first(&self) -> &ReducedWord {
        &self.first
    }

    pub fn second(&self) -> &ReducedWord {
        &self.second
    }

    pub fn into_parts(self) -> (ReducedWord, ReducedWord) {
        (self.first, self.second)
    }

    pub fn mul(&self, rhs: &ProductElement) -> Result<ProductElement, GroupError> {
        Ok(ProductElement {
            first: self.first.mul(&rhs.first)?,
            second: self.second.mul(&rhs.second)?,
        })
    }

    pub fn push_mul(&mut self, rhs: &ProductElement) {
        self.first.push_mul(&rhs.first);
        self.second.push_mul(&rhs.second);
    }

    pub fn inverse(&self) -> ProductElement {
        ProductElement { first: self.first.inverse(), second: self.second.inverse() }
    }

    /// d̄(o, x̄) = max of the factor word lengths.
    pub fn norm(&self) -> usize {
        self.first.len().max(self.second.len())
    }

    /// d̄(x̄, ȳ) = max of the factor distances.
    pub fn distance(&self, other: &ProductElement) -> Result<usize, GroupError> {
        Ok(self.first.distance(&other.first)?.max(self.second.distance(&other.second)?))
    }

    pub fn is_identity(&self) -> bool {
        self.first.is_identity() && self.second.is_identity()
    }
}

impl fmt::Display for ProductElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

/// A point of the product boundary, both coordinates as stabilized prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairBoundary {
    first: BoundaryApprox,
    second: BoundaryApprox,
}

impl PairBoundary {
    pub fn new(first: BoundaryApprox, second: BoundaryApprox) -> Self {
        PairBoundary { first, second }
    }

    pub fn first(&self) -> &BoundaryApprox {
        &self.first
    }

    pub fn second(&self) -> &BoundaryApprox {
        &self.second
    }

    /// The product Gromov scale: q̄ = max q means the effective product is the
    /// minimum of the factor products. A minimum taken on an exact factor that
    /// is no larger than the other factor's lower bound is itself exact.
    pub fn min_gromov(g1: Gromov, g2: Gromov) -> Gromov {
        let value = g1.value().min(g2.value());
        let exact = (g1.value() <= g2.value() && g1.is_exact())
            || (g2.value() <= g1.value() && g2.is_exact());
        if exact {
            Gromov::exact(value)
        } else {
            Gromov::lower_bound(value)
        }
    }
}

/// q̄(x̄, ȳ) = max of the factor quasi-metrics. An inexact factor value is an
/// upper bound, so the max is exact when the winning side is exact.
pub fn product_quasi_metric(
    a: (&ReducedWord, &ReducedWord),
    b: (&ReducedWord, &ReducedWord),
) -> Result<QValue, GroupError> {
    let q1 = quasi_metric(a.0.into(), b.0.into())?;
    let q2 = quasi_metric(a.1.into(), b.1.into())?;
    Ok(max_qvalue(q1, q2))
}

pub fn pair_boundary_quasi_metric(a: &PairBoundary, b: &PairBoundary) -> Result<QValue, GroupError> {
    let q1 = quasi_metric(a.first().into(), b.first().into())?;
    let q2 = quasi_metric(a.second().into(), b.second().into())?;
    Ok(max_qvalue(q1, q2))
}

fn max_qvalue(q1: QValue, q2: QValue) -> QValue {
    let value = q1.value.max(q2.value);
    let exact =
        (q1.value >= q2.value && q1.exact) || (q2.value >= q1.value && q2.exact);
    QValue { value, exact }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FreeGroupSpec {
        FreeGroupSpec::new(2).unwrap()
    }

    fn w(text: &str) -> ReducedWord {
        ReducedWord::parse(f2(), text).unwrap()
    }

    #[test]
    fn max_metric() {
        let x = ProductElement::new(w("ab"), w("e"));
        let y = ProductElement::new(w("ab"), w("aB"));
        assert_eq!(x.distance(&y).unwrap(), 2);
        assert_eq!(x.norm(), 2);
        assert_eq!(y.norm(), 2);
        let z = ProductElement::new(w("bbb"), w("a"));
        assert_eq!(z.norm(), 3);
    }

    #[test]
    fn componentwise_algebra() {
        let x = ProductElement::new(w("ab"), w("a"));
        let y = ProductElement::new(w("BA"), w("b"));
        let xy = x.mul(&y).unwrap();
        assert_eq!(xy.first(), &w("e"));
        assert_eq!(xy.second(), &w("ab"));
        assert!(x.mul(&x.inverse()).unwrap().is_identity());
        assert_eq!(x.to_string(), "(ab, a)");
    }

    #[test]
    fn product_quasi_is_max_of_factors() {
        let a = (&w("abab"), &w("bb"));
        let b = (&w("abba"), &w("bbaa"));
        let q = product_quasi_metric(a, b).unwrap();
        let q1 = quasi_metric(a.0.into(), b.0.into()).unwrap().value;
        let q2 = quasi_metric(a.1.into(), b.1.into()).unwrap().value;
        assert_eq!(q.value, q1.max(q2));
        assert!((q.value - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn min_gromov_exactness() {
        let e3 = Gromov::exact(3);
        let lb5 = Gromov::lower_bound(5);
        let out = PairBoundary::min_gromov(e3, lb5);
        assert_eq!(out.value(), 3);
        assert!(out.is_exact());

        let lb3 = Gromov::lower_bound(3);
        let e5 = Gromov::exact(5);
        let out = PairBoundary::min_gromov(lb3, e5);
        assert_eq!(out.value(), 3);
        assert!(!out.is_exact());

        let out = PairBoundary::min_gromov(Gromov::lower_bound(4), Gromov::exact(4));
        assert_eq!(out.value(), 4);
        assert!(out.is_exact());
    }
}
