//! Trajectory sampling. `Trajectory` materializes the whole path for the
//! small-n exact tests; the estimators stream through `Walker`, which keeps
//! only the current position so long runs stay linear in time and memory.

use free_group::ProductElement;
use rand_chacha::ChaCha8Rng;

use crate::error::WalkError;
use crate::measure::{MeasureSpec, PreparedMeasure};
use crate::rng::trial_rng;

#[derive(Debug, Clone)]
pub struct Trajectory {
    steps: Vec<ProductElement>,
    positions: Vec<ProductElement>,
    seed: u64,
}

impl Trajectory {
    pub fn steps(&self) -> &[ProductElement] {
        &self.steps
    }

    /// positions[k] = x̄_1 ⋯ x̄_k, with positions[0] the identity.
    pub fn positions(&self) -> &[ProductElement] {
        &self.positions
    }

    pub fn endpoint(&self) -> &ProductElement {
        self.positions.last().expect("positions never empty")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

pub fn sample_trajectory(spec: &MeasureSpec, n: usize, seed: u64) -> Result<Trajectory, WalkError> {
    let prepared = spec.prepare()?;
    let mut walker = Walker::new(&prepared, trial_rng(seed, 0));
    let mut steps = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(walker.position().clone());
    for _ in 0..n {
        steps.push(walker.step().clone());
        positions.push(walker.position().clone());
    }
    Ok(Trajectory { steps, positions, seed })
}

/// Streaming walk: holds the current position only.
pub struct Walker<'a> {
    prepared: &'a PreparedMeasure,
    rng: ChaCha8Rng,
    position: ProductElement,
    time: usize,
}

impl<'a> Walker<'a> {
    pub fn new(prepared: &'a PreparedMeasure, rng: ChaCha8Rng) -> Self {
        let position = ProductElement::identity(prepared.first_group(), prepared.second_group());
        Walker { prepared, rng, position, time: 0 }
    }

    /// Advances one step and returns the increment that was applied.
    pub fn step(&mut self) -> &ProductElement {
        let inc = self.prepared.sample(&mut self.rng);
        self.position.push_mul(inc);
        self.time += 1;
        inc
    }

    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn position(&self) -> &ProductElement {
        &self.position
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
