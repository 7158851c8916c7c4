//! The tree boundary and its exact geometry.
//!
//! A boundary point of a free group is an infinite reduced word; we only ever
//! hold a finite stabilized prefix of explicit depth. Every operation tracks
//! whether the prefix determines the answer exactly. When it does not, the
//! operation fails with `InsufficientDepth` rather than extrapolating, which
//! keeps all downstream boundary computations exact.

use crate::error::GroupError;
use crate::word::{word_gromov, FreeGroupSpec, ReducedWord};

/// A boundary point known up to a reduced prefix; stands for the cylinder of
/// infinite reduced words extending `prefix`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryApprox {
    prefix: ReducedWord,
}

impl BoundaryApprox {
    pub fn new(prefix: ReducedWord) -> Result<Self, GroupError> {
        if prefix.is_identity() {
            return Err(GroupError::EmptyBoundaryPrefix);
        }
        Ok(BoundaryApprox { prefix })
    }

    pub fn parse(group: FreeGroupSpec, text: &str) -> Result<Self, GroupError> {
        Self::new(ReducedWord::parse(group, text)?)
    }

    /// The point `letter^∞`, approximated to the given depth.
    pub fn axis(group: FreeGroupSpec, letter: i8, depth: usize) -> Result<Self, GroupError> {
        group.check_letter(letter)?;
        if depth == 0 {
            return Err(GroupError::EmptyBoundaryPrefix);
        }
        let word = ReducedWord::from_letters(group, vec![letter; depth])?;
        Self::new(word)
    }

    pub fn prefix(&self) -> &ReducedWord {
        &self.prefix
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn group(&self) -> FreeGroupSpec {
        self.prefix.group()
    }

    pub fn truncated(&self, depth: usize) -> Result<Self, GroupError> {
        if depth == 0 {
            return Err(GroupError::EmptyBoundaryPrefix);
        }
        if depth > self.depth() {
            return Err(GroupError::InsufficientDepth { depth: self.depth(), needed: depth });
        }
        Ok(BoundaryApprox { prefix: self.prefix.prefix(depth) })
    }
}

/// A Gromov product value. On a tree all products are integers; `exact: false`
/// means the boundary approximations ran out before the geodesics separated,
/// in which case `value` is only a lower bound for the true product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gromov {
    value: i64,
    exact: bool,
}

impl Gromov {
    pub fn exact(value: i64) -> Self {
        Gromov { value, exact: true }
    }

    pub fn lower_bound(value: i64) -> Self {
        Gromov { value, exact: false }
    }

    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// The quasi-metric scale exp(-product). When the product is inexact this
    /// is an upper bound for the true quasi-distance.
    pub fn quasi_value(&self) -> f64 {
        (-(self.value as f64)).exp()
    }
}

/// Either a group element or a boundary approximation; lets the geometric
/// operations accept both, as the definitions do.
#[derive(Debug, Clone, Copy)]
pub enum PointRef<'a> {
    Word(&'a ReducedWord),
    Boundary(&'a BoundaryApprox),
}

impl<'a> From<&'a ReducedWord> for PointRef<'a> {
    fn from(w: &'a ReducedWord) -> Self {
        PointRef::Word(w)
    }
}

impl<'a> From<&'a BoundaryApprox> for PointRef<'a> {
    fn from(b: &'a BoundaryApprox) -> Self {
        PointRef::Boundary(b)
    }
}

impl<'a> PointRef<'a> {
    fn group(&self) -> FreeGroupSpec {
        match self {
            PointRef::Word(w) => w.group(),
            PointRef::Boundary(b) => b.group(),
        }
    }
}

fn check_groups(a: FreeGroupSpec, b: FreeGroupSpec) -> Result<(), GroupError> {
    if a != b {
        return Err(GroupError::GroupMismatch { left: a.rank() as u8, right: b.rank() as u8 });
    }
    Ok(())
}

/// Gromov product of a word and a boundary point at the identity.
///
/// The product equals the common prefix length `c` of `x` and the ray. It is
/// exact when the divergence is visible (`c < depth`) or when all of `x` lies
/// on the ray (`c = |x|`); otherwise the approximation ran out first and `c`
/// is only a lower bound.
fn word_boundary_gromov(x: &ReducedWord, eta: &BoundaryApprox) -> Result<Gromov, GroupError> {
    check_groups(x.group(), eta.group())?;
    let c = x.common_prefix_len(eta.prefix());
    let exact = c < eta.depth() || c == x.len();
    Ok(Gromov { value: c as i64, exact })
}

fn boundary_boundary_gromov(xi: &BoundaryApprox, eta: &BoundaryApprox) -> Result<Gromov, GroupError> {
    check_groups(xi.group(), eta.group())?;
    let c = xi.prefix().common_prefix_len(eta.prefix());
    let exact = c < xi.depth() && c < eta.depth();
    Ok(Gromov { value: c as i64, exact })
}

/// Gromov product `(x|y)_base`. Boundary arguments are supported only at the
/// identity base point, where the product is the common-prefix length.
pub fn gromov_product(x: PointRef, y: PointRef, base: &ReducedWord) -> Result<Gromov, GroupError> {
    check_groups(x.group(), base.group())?;
    match (x, y) {
        (PointRef::Word(a), PointRef::Word(b)) => {
            Ok(Gromov::exact(word_gromov(a, b, base)? as i64))
        }
        (a, b) => {
            if !base.is_identity() {
                return Err(GroupError::UnsupportedBasePoint);
            }
            match (a, b) {
                (PointRef::Word(w), PointRef::Boundary(eta))
                | (PointRef::Boundary(eta), PointRef::Word(w)) => word_boundary_gromov(w, eta),
                (PointRef::Boundary(xi), PointRef::Boundary(eta)) => {
                    boundary_boundary_gromov(xi, eta)
                }
                (PointRef::Word(_), PointRef::Word(_)) => unreachable!(),
            }
        }
    }
}

/// Quasi-distance at the base point. `value` carries exp(-gromov) with the
/// convention q(ξ,ξ) = 0 for genuinely equal arguments; an inexact result is
/// an upper bound (the true points may agree deeper than the approximations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValue {
    pub value: f64,
    pub exact: bool,
}

pub fn quasi_metric(x: PointRef, y: PointRef) -> Result<QValue, GroupError> {
    if let (PointRef::Word(a), PointRef::Word(b)) = (x, y) {
        check_groups(a.group(), b.group())?;
        if a == b {
            return Ok(QValue { value: 0.0, exact: true });
        }
    }
    let base = ReducedWord::identity(x.group());
    let g = gromov_product(x, y, &base)?;
    Ok(QValue { value: g.quasi_value(), exact: g.is_exact() })
}

/// Shadow membership: is `p` in O(x, r) = { η : (o|η)_x < r }?
///
/// Uses the identity (o|p)_x = |x| - (x|p)_o, valid at every point of a tree.
/// For an inexact product the truth value is still determined whenever the
/// full range of possible values falls on one side of `r`.
pub fn shadow_contains(x: &ReducedWord, r: f64, p: PointRef) -> Result<bool, GroupError> {
    check_groups(x.group(), p.group())?;
    let base = ReducedWord::identity(x.group());
    let g = gromov_product(PointRef::Word(x), p, &base)?;
    let seen_from_x = (x.len() as i64 - g.value()) as f64;
    if g.is_exact() {
        return Ok(seen_from_x < r);
    }
    // The true product lies in [g, |x|], so (o|p)_x lies in [0, |x| - g].
    if seen_from_x < r {
        return Ok(true);
    }
    if r <= 0.0 {
        return Ok(false);
    }
    let depth = match p {
        PointRef::Boundary(b) => b.depth(),
        PointRef::Word(w) => w.len(),
    };
    Err(GroupError::InsufficientDepth { depth, needed: x.len() })
}

/// Busemann value β_η(x): the stabilized limit of d(x, w) - d(o, w) along
/// w → η. On a tree it equals |x| - 2 (x|η)_o. The depth requirement is the
/// conservative stabilization bound; the product itself is already exact once
/// depth exceeds |x|.
pub fn busemann(x: &ReducedWord, eta: &BoundaryApprox) -> Result<i64, GroupError> {
    check_groups(x.group(), eta.group())?;
    let needed = 2 * x.len() + 2;
    if eta.depth() < needed {
        return Err(GroupError::InsufficientDepth { depth: eta.depth(), needed });
    }
    let g = word_boundary_gromov(x, eta)?;
    debug_assert!(g.is_exact());
    Ok(x.len() as i64 - 2 * g.value())
}

/// Left translation of a boundary point: an approximation of x·η.
///
/// Multiplying the prefix may cancel; the result is a genuine prefix of x·η
/// as long as at least one letter of η survives, because the junction letter
/// that stopped the cancellation pins everything after it.
pub fn boundary_translate(x: &ReducedWord, eta: &BoundaryApprox) -> Result<BoundaryApprox, GroupError> {
    check_groups(x.group(), eta.group())?;
    let product = x.mul(eta.prefix())?;
    let cancelled = (x.len() + eta.depth() - product.len()) / 2;
    if cancelled >= eta.depth() {
        return Err(GroupError::InsufficientDepth { depth: eta.depth(), needed: x.len() + 1 });
    }
    BoundaryApprox::new(product)
}
