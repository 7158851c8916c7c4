//! Boundary sampling by stabilized prefixes.
//!
//! A transient walk on a free group converges to an end; what a simulation
//! can certify is a finite prefix of that end. The sampler runs the walk
//! until the position is `slack` past the requested depth, records the
//! depth-prefix, then keeps walking until the position is `2·slack` past it.
//! A nearest-geodesic argument shows the recorded prefix can only change if
//! some intermediate position comes back within a step of the depth, so the
//! confirmation window watches for exactly that dip. A dip doubles the slack
//! and retries on the same walk; only the overall step budget running out
//! produces an error, never a silently unverified prefix.
//!
//! For a walk whose marginals branch (rank ≥ 2), the chance that a
//! confirmation window of width `slack` passes and the prefix later changes
//! anyway decays like (2m-1)^{-slack}. Rank-1 marginals get no such
//! guarantee; shipped specs do not use them.

use free_group::{BoundaryApprox, PairBoundary, ProductElement};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use walk::{trial_rng, MeasureSpec, PreparedMeasure, Walker};

use crate::error::{invalid, HarmonicError};

/// One sampled limit point: a single boundary point for factor specs, a
/// coordinate pair for pair specs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundarySample {
    Point(BoundaryApprox),
    Pair(PairBoundary),
}

const MAX_SLACK_DOUBLINGS: usize = 6;

fn step_budget(depth: usize, slack: usize) -> usize {
    4000 + 600 * (depth + 2 * slack)
}

/// Anything that can advance a product-valued position one random step.
/// Plain walks never fail to advance; conditioned walks may run out of
/// target depth.
pub(crate) trait BoundaryWalk {
    fn advance(&mut self) -> Result<(), HarmonicError>;
    fn position(&self) -> &ProductElement;
    fn max_step(&self) -> usize;
}

struct PlainWalk<'a> {
    walker: Walker<'a>,
    max_step: usize,
}

impl BoundaryWalk for PlainWalk<'_> {
    fn advance(&mut self) -> Result<(), HarmonicError> {
        self.walker.step();
        Ok(())
    }

    fn position(&self) -> &ProductElement {
        self.walker.position()
    }

    fn max_step(&self) -> usize {
        self.max_step
    }
}

fn long_enough(pos: &ProductElement, want: usize, track_second: bool) -> bool {
    pos.first().len() >= want && (!track_second || pos.second().len() >= want)
}

fn dipped(pos: &ProductElement, threshold: usize, track_second: bool) -> bool {
    pos.first().len() <= threshold || (track_second && pos.second().len() <= threshold)
}

pub(crate) fn stabilized_prefixes<W: BoundaryWalk>(
    walk: &mut W,
    depth: usize,
    track_second: bool,
) -> Result<(BoundaryApprox, Option<BoundaryApprox>), HarmonicError> {
    let max_step = walk.max_step().max(1);
    let mut slack = 2 * max_step + 2;
    let mut steps_used = 0usize;
    let mut round = 0usize;

    loop {
        let budget = step_budget(depth, slack);

        while !long_enough(walk.position(), depth + slack, track_second) {
            if steps_used >= budget {
                return Err(HarmonicError::NotStabilized { depth, steps: steps_used, rounds: round });
            }
            walk.advance()?;
            steps_used += 1;
        }

        let first = walk.position().first().prefix(depth);
        let second = track_second.then(|| walk.position().second().prefix(depth));

        let confirmed = loop {
            if long_enough(walk.position(), depth + 2 * slack, track_second) {
                break true;
            }
            if steps_used >= budget {
                return Err(HarmonicError::NotStabilized { depth, steps: steps_used, rounds: round });
            }
            walk.advance()?;
            steps_used += 1;
            if dipped(walk.position(), depth + max_step - 1, track_second) {
                break false;
            }
        };

        if confirmed {
            debug_assert!(first.is_prefix_of(walk.position().first()));
            debug_assert!(second
                .as_ref()
                .is_none_or(|s| s.is_prefix_of(walk.position().second())));
            let first = BoundaryApprox::new(first)?;
            let second = second.map(BoundaryApprox::new).transpose()?;
            return Ok((first, second));
        }

        round += 1;
        if round > MAX_SLACK_DOUBLINGS {
            return Err(HarmonicError::NotStabilized {
                depth,
                steps: steps_used,
                rounds: round - 1,
            });
        }
        slack *= 2;
    }
}

fn stabilized_walk_prefixes(
    prepared: &PreparedMeasure,
    depth: usize,
    track_second: bool,
    rng: ChaCha8Rng,
) -> Result<(BoundaryApprox, Option<BoundaryApprox>), HarmonicError> {
    let mut walk =
        PlainWalk { walker: Walker::new(prepared, rng), max_step: prepared.max_step() };
    stabilized_prefixes(&mut walk, depth, track_second)
}

/// Samples one boundary limit of the walk, certified to the given depth.
pub fn boundary_sample(
    spec: &MeasureSpec,
    depth: usize,
    seed: u64,
) -> Result<BoundarySample, HarmonicError> {
    if depth == 0 {
        return Err(invalid("boundary sampling needs depth >= 1"));
    }
    let prepared = spec.prepare()?;
    let pair = spec.is_pair();
    let (first, second) = stabilized_walk_prefixes(&prepared, depth, pair, trial_rng(seed, 0))?;
    Ok(match second {
        Some(second) => BoundarySample::Pair(PairBoundary::new(first, second)),
        None => BoundarySample::Point(first),
    })
}

/// A pool of independent limit points for a single-factor spec. Trial i uses
/// its own stream derived from (seed, i), so the pool is reproducible and
/// indifferent to thread count.
pub fn sample_boundary_points(
    spec: &MeasureSpec,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundaryApprox>, HarmonicError> {
    if depth == 0 || count == 0 {
        return Err(invalid("boundary sampling needs depth >= 1 and count >= 1"));
    }
    if spec.is_pair() {
        return Err(invalid(format!(
            "{} is a pair spec; sample pairs instead of single points",
            spec.describe()
        )));
    }
    let prepared = spec.prepare()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            stabilized_walk_prefixes(&prepared, depth, false, trial_rng(seed, i as u64))
                .map(|(first, _)| first)
        })
        .collect()
}

/// A pool of independent limit pairs for a pair spec.
pub fn sample_boundary_pairs(
    spec: &MeasureSpec,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<PairBoundary>, HarmonicError> {
    if depth == 0 || count == 0 {
        return Err(invalid("boundary sampling needs depth >= 1 and count >= 1"));
    }
    if !spec.is_pair() {
        return Err(invalid(format!(
            "{} has a single coordinate; sample points instead of pairs",
            spec.describe()
        )));
    }
    let prepared = spec.prepare()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (first, second) =
                stabilized_walk_prefixes(&prepared, depth, true, trial_rng(seed, i as u64))?;
            Ok(PairBoundary::new(first, second.expect("pair specs track both coordinates")))
        })
        .collect()
}
