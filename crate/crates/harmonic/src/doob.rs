//! The walk conditioned to converge to a prescribed boundary point.
//!
//! For a pair spec whose second marginal is SRW-shaped, conditioning the
//! second coordinate on its limit η is a Doob transform: the one-step kernel
//! from x̄ reweights each step s̄ by the density d(ȳ*·ν*)/d(x̄*·ν*)(η) with
//! ȳ = x̄s̄, which by the cocycle is (2m*-1)^{-β_ζ(s*)} against the relative
//! target ζ = (x̄*)⁻¹η. Stationarity of ν* makes every row sum to one, and
//! along any path the reweighting telescopes to a single density at the
//! endpoint.
//!
//! η is held as a finite approximation. Each step consumes at most |s*| of
//! its depth, every Busemann evaluation needs a fixed reserve, and running
//! out raises `TargetExhausted` instead of guessing.

use free_group::{boundary_translate, busemann, BoundaryApprox, ProductElement};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use walk::{trial_rng, MeasureSpec, PreparedMeasure};

use crate::error::{invalid, unsupported, HarmonicError};
use crate::hitting::check_group;
use crate::sample::{stabilized_prefixes, BoundaryWalk};

/// A pair walk together with the boundary point its second coordinate is
/// conditioned on.
#[derive(Debug, Clone)]
pub struct DoobWalkSpec {
    pub base: MeasureSpec,
    pub target: BoundaryApprox,
}

/// Validated spec plus the prepared step table; hands out conditioned walks.
pub struct DoobSampler {
    prepared: PreparedMeasure,
    target: BoundaryApprox,
    base: u64,
    max_second_step: usize,
}

/// One audited row entry of the conditioned kernel at the current state.
#[derive(Debug, Clone)]
pub struct DoobTransition {
    pub step: ProductElement,
    pub mass: f64,
    pub exponent: i64,
    pub weight: f64,
}

impl DoobSampler {
    pub fn new(spec: &DoobWalkSpec) -> Result<Self, HarmonicError> {
        if !spec.base.is_pair() {
            return Err(invalid(format!(
                "{} walks a single coordinate; there is no second marginal to condition",
                spec.base.describe()
            )));
        }
        let radial = spec.base.second_marginal_radial().ok_or_else(|| {
            unsupported(
                "Doob conditioning",
                format!(
                    "the second marginal of {} has no exact hitting measure",
                    spec.base.describe()
                ),
            )
        })?;
        if radial.rank < 2 {
            return Err(unsupported(
                "Doob conditioning",
                "a rank-1 second marginal has a two-point boundary and no density cocycle",
            ));
        }
        let prepared = spec.base.prepare()?;
        check_group(prepared.second_group(), spec.target.group())?;
        let max_second_step =
            prepared.entries().iter().map(|(s, _)| s.second().len()).max().unwrap_or(0);
        Ok(DoobSampler {
            prepared,
            target: spec.target.clone(),
            base: (2 * radial.rank - 1) as u64,
            max_second_step,
        })
    }

    pub fn target(&self) -> &BoundaryApprox {
        &self.target
    }

    /// Depth of η a single step may need: a Busemann value for every
    /// candidate plus the translation the chosen step performs.
    fn per_step_reserve(&self) -> usize {
        3 * self.max_second_step + 2
    }

    pub fn walk(&self, rng: ChaCha8Rng) -> DoobWalk<'_> {
        DoobWalk {
            sampler: self,
            position: ProductElement::identity(
                self.prepared.first_group(),
                self.prepared.second_group(),
            ),
            relative_target: self.target.clone(),
            time: 0,
            rng,
            scratch: Vec::with_capacity(self.prepared.support_size()),
        }
    }
}

pub struct DoobWalk<'a> {
    sampler: &'a DoobSampler,
    position: ProductElement,
    relative_target: BoundaryApprox,
    time: usize,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
}

impl DoobWalk<'_> {
    pub fn position(&self) -> &ProductElement {
        &self.position
    }

    pub fn time(&self) -> usize {
        self.time
    }

    /// Depth of the target approximation not yet consumed.
    pub fn target_depth_left(&self) -> usize {
        self.relative_target.depth()
    }

    fn exhausted(&self) -> HarmonicError {
        let consumed = self.sampler.target.depth() - self.relative_target.depth();
        HarmonicError::TargetExhausted {
            depth: self.relative_target.depth(),
            steps: self.time,
            needed: consumed + self.sampler.per_step_reserve(),
        }
    }

    fn fill_weights(&mut self) -> Result<f64, HarmonicError> {
        if self.relative_target.depth() < self.sampler.per_step_reserve() {
            return Err(self.exhausted());
        }
        self.scratch.clear();
        let mut total = 0.0;
        for (step, mass) in self.sampler.prepared.entries() {
            let beta = busemann(step.second(), &self.relative_target)?;
            let w = mass * (self.sampler.base as f64).powi(-beta as i32);
            self.scratch.push(w);
            total += w;
        }
        Ok(total)
    }

    /// The conditioned kernel row at the current state, with exact exponents.
    pub fn kernel_row(&mut self) -> Result<Vec<DoobTransition>, HarmonicError> {
        if self.relative_target.depth() < self.sampler.per_step_reserve() {
            return Err(self.exhausted());
        }
        self.sampler
            .prepared
            .entries()
            .iter()
            .map(|(step, mass)| {
                let beta = busemann(step.second(), &self.relative_target)?;
                Ok(DoobTransition {
                    step: step.clone(),
                    mass: *mass,
                    exponent: -beta,
                    weight: mass * (self.sampler.base as f64).powi(-beta as i32),
                })
            })
            .collect()
    }

    fn apply(&mut self, index: usize) -> Result<(), HarmonicError> {
        let (step, _) = &self.sampler.prepared.entries()[index];
        self.relative_target = boundary_translate(&step.second().inverse(), &self.relative_target)
            .map_err(|_| self.exhausted())?;
        self.position.push_mul(step);
        self.time += 1;
        Ok(())
    }

    /// Advances one conditioned step and returns the increment's index in
    /// the prepared support.
    pub fn step(&mut self) -> Result<usize, HarmonicError> {
        let total = self.fill_weights()?;
        let mut u = self.rng.gen::<f64>() * total;
        let mut chosen = self.scratch.len() - 1;
        for (i, w) in self.scratch.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                chosen = i;
                break;
            }
        }
        self.apply(chosen)?;
        Ok(chosen)
    }
}

impl BoundaryWalk for DoobWalk<'_> {
    fn advance(&mut self) -> Result<(), HarmonicError> {
        self.step().map(|_| ())
    }

    fn position(&self) -> &ProductElement {
        &self.position
    }

    fn max_step(&self) -> usize {
        self.sampler.prepared.max_step()
    }
}

/// A full conditioned path, positions[0] = identity.
#[derive(Debug, Clone)]
pub struct DoobTrajectory {
    steps: Vec<ProductElement>,
    positions: Vec<ProductElement>,
    target_depth_left: usize,
}

impl DoobTrajectory {
    pub fn steps(&self) -> &[ProductElement] {
        &self.steps
    }

    pub fn positions(&self) -> &[ProductElement] {
        &self.positions
    }

    pub fn endpoint(&self) -> &ProductElement {
        self.positions.last().expect("positions never empty")
    }

    pub fn target_depth_left(&self) -> usize {
        self.target_depth_left
    }
}

/// Runs the conditioned walk for n steps. The target must carry enough depth
/// for the whole run up front; the bound n·max|s*| + reserve is conservative
/// because steps away from η give depth back.
pub fn doob_trajectory(
    spec: &DoobWalkSpec,
    n: usize,
    seed: u64,
) -> Result<DoobTrajectory, HarmonicError> {
    let sampler = DoobSampler::new(spec)?;
    let needed = n * sampler.max_second_step + sampler.per_step_reserve();
    if spec.target.depth() < needed {
        return Err(HarmonicError::TargetExhausted {
            depth: spec.target.depth(),
            steps: 0,
            needed,
        });
    }
    let mut walk = sampler.walk(trial_rng(seed, 0));
    let mut steps = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(walk.position().clone());
    for _ in 0..n {
        let i = walk.step()?;
        steps.push(sampler.prepared.entries()[i].0.clone());
        positions.push(walk.position().clone());
    }
    Ok(DoobTrajectory { steps, positions, target_depth_left: walk.target_depth_left() })
}

/// K independent conditioned walks sharing one target; each returns its
/// first coordinate's limit, stabilized to `depth` by the same certificate
/// the unconditioned sampler uses. These are draws from the conditional
/// measure on the first boundary given η.
pub fn doob_limit_points(
    spec: &DoobWalkSpec,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundaryApprox>, HarmonicError> {
    if depth == 0 || count == 0 {
        return Err(invalid("conditioned sampling needs depth >= 1 and count >= 1"));
    }
    let sampler = DoobSampler::new(spec)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut walk = sampler.walk(trial_rng(seed, i as u64));
            stabilized_prefixes(&mut walk, depth, false).map(|(first, _)| first)
        })
        .collect()
}
