//! Resampling classes of the pivotal-time induction.
//!
//! Two step sequences over the same relays are equivalent when they share
//! their pivotal times, all second halves b_i, and the first halves a_i at
//! non-pivotal times. The class of a trace is then a product set: at each
//! pivotal time i there is a candidate set A_i of first halves, any
//! combination of which reproduces the same pivotal times, and at every
//! other time the candidate set is the singleton {a_i}. Replacing a single
//! pivotal a_i by any alphabet member that keeps the local geodesic
//! condition at time i stays in the class, and on a Schottky alphabet at
//! most 2 epsilon #S members can break it (the middle condition constrains
//! a_i through its inverse, the first through its forward direction, and
//! the last does not involve a_i at all), so each pivotal candidate set
//! holds at least (1-2 epsilon)#S members.
//!
//! Enumerating a class makes two structural facts checkable: every product
//! combination really does reproduce the pivotal times, and distinct
//! combinations land the trajectory at distinct endpoints. Both are
//! asserted during enumeration; the endpoint injectivity is what turns
//! class counting into entropy below the walk.

use std::collections::HashSet;

use free_group::ReducedWord;

use crate::error::PivotalError;
use crate::pivot::{pivotal_times, PivotConstants};

/// A trace's equivalence class, described by its candidate sets.
#[derive(Debug, Clone)]
pub struct PivotedClass {
    /// Number of steps in the underlying trace.
    pub time: usize,
    /// Pivotal times of the trace (and of every member).
    pub pivots: Vec<usize>,
    /// Candidate first halves per time, index 0 holding A_1. Non-pivotal
    /// entries are singletons.
    pub candidates: Vec<Vec<ReducedWord>>,
}

impl PivotedClass {
    /// Number of members: the product of the candidate set sizes.
    pub fn member_count(&self) -> u128 {
        self.candidates.iter().map(|c| c.len() as u128).product()
    }
}

/// Endpoints collected while walking a class exhaustively.
#[derive(Debug, Clone)]
pub struct ClassEnumeration {
    pub members: u64,
    pub endpoints: Vec<ReducedWord>,
}

fn final_pivots(
    steps: &[(ReducedWord, ReducedWord)],
    relays: &[ReducedWord],
    consts: PivotConstants,
) -> Result<Vec<usize>, PivotalError> {
    let states = pivotal_times(steps, relays, consts)?;
    Ok(states.last().map(|s| s.pivots.clone()).unwrap_or_default())
}

/// Computes the candidate sets of the class of `steps` over `alphabet`.
/// Every first and second half of `steps` must come from `alphabet`; the
/// meaningful size guarantees additionally need the alphabet to be a
/// certified Schottky set, which is the caller's responsibility.
pub fn pivoted_class(
    steps: &[(ReducedWord, ReducedWord)],
    relays: &[ReducedWord],
    alphabet: &[ReducedWord],
    consts: PivotConstants,
) -> Result<PivotedClass, PivotalError> {
    if alphabet.is_empty() {
        return Err(PivotalError::Invalid("empty alphabet".into()));
    }
    let known: HashSet<&[i8]> = alphabet.iter().map(ReducedWord::letters).collect();
    for (a, b) in steps {
        if !known.contains(a.letters()) || !known.contains(b.letters()) {
            return Err(PivotalError::Invalid(
                "step half outside the supplied alphabet".into(),
            ));
        }
    }
    let base = final_pivots(steps, relays, consts)?;
    let pivotal: HashSet<usize> = base.iter().copied().collect();

    let mut candidates = Vec::with_capacity(steps.len());
    for i in 1..=steps.len() {
        if !pivotal.contains(&i) {
            candidates.push(vec![steps[i - 1].0.clone()]);
            continue;
        }
        let mut set = Vec::new();
        for a in alphabet {
            let mut varied = steps.to_vec();
            varied[i - 1].0 = a.clone();
            if final_pivots(&varied, relays, consts)? == base {
                set.push(a.clone());
            }
        }
        assert!(
            set.iter().any(|a| a.letters() == steps[i - 1].0.letters()),
            "a trace must belong to its own class"
        );
        candidates.push(set);
    }
    Ok(PivotedClass { time: steps.len(), pivots: base, candidates })
}

/// Walks every member of the class, re-running the induction each time.
/// Asserts the product structure (every combination reproduces the pivotal
/// times) and endpoint injectivity (no two members end at the same point),
/// both of which are theorems for admissible inputs with d >= 10 c0 + 1.
/// Refuses classes larger than `budget` members.
pub fn enumerate_class(
    steps: &[(ReducedWord, ReducedWord)],
    relays: &[ReducedWord],
    class: &PivotedClass,
    consts: PivotConstants,
    budget: u64,
) -> Result<ClassEnumeration, PivotalError> {
    if class.time != steps.len() {
        return Err(PivotalError::Invalid(
            "class was computed for a different trace length".into(),
        ));
    }
    let total = class.member_count();
    if total > budget as u128 {
        return Err(PivotalError::Budget(format!(
            "class holds {total} members, budget allows {budget}"
        )));
    }

    let mut endpoints = Vec::with_capacity(total as usize);
    let mut seen: HashSet<Vec<i8>> = HashSet::with_capacity(total as usize);
    let mut odometer = vec![0usize; class.candidates.len()];
    let mut varied = steps.to_vec();
    loop {
        for (i, &pick) in odometer.iter().enumerate() {
            varied[i].0 = class.candidates[i][pick].clone();
        }
        let states = pivotal_times(&varied, relays, consts)?;
        let pivots = states.last().map(|s| s.pivots.clone()).unwrap_or_default();
        assert_eq!(
            pivots, class.pivots,
            "class member changed the pivotal times"
        );
        let endpoint = endpoint_of(&varied, relays)?;
        assert!(
            seen.insert(endpoint.letters().to_vec()),
            "two class members share an endpoint"
        );
        endpoints.push(endpoint);

        let mut place = 0;
        loop {
            if place == odometer.len() {
                return Ok(ClassEnumeration { members: endpoints.len() as u64, endpoints });
            }
            odometer[place] += 1;
            if odometer[place] < class.candidates[place].len() {
                break;
            }
            odometer[place] = 0;
            place += 1;
        }
    }
}

fn endpoint_of(
    steps: &[(ReducedWord, ReducedWord)],
    relays: &[ReducedWord],
) -> Result<ReducedWord, PivotalError> {
    let mut g = relays[0].clone();
    for ((a, b), u) in steps.iter().zip(&relays[1..]) {
        g = g.mul(a)?;
        g = g.mul(b)?;
        g = g.mul(u)?;
    }
    Ok(g)
}
