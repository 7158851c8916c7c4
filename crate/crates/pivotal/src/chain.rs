//! Chains: point sequences with long hops and small turns.
//!
//! A sequence x_0, ..., x_n is a (C, D)-chain when every interior Gromov
//! product (x_{i-1}|x_{i+1})_{x_i} is at most C and every hop d(x_{i-1}, x_i)
//! is at least D. On a tree, once D >= 2C+1 such a sequence makes linear
//! progress: d(x_0, x_n) >= sum_i (d(x_i, x_{i+1}) - 2C) >= n, and the whole
//! tail stays in sight of the first hop, (x_0|x_n)_{x_1} <= C.

use free_group::{word_gromov, ReducedWord};

use crate::error::PivotalError;

/// Chain constants. Trees are 0-hyperbolic, so the slack terms of the general
/// theory vanish and both constants are plain integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainParams {
    pub c: u64,
    pub d: u64,
}

impl ChainParams {
    pub fn new(c: u64, d: u64) -> Self {
        ChainParams { c, d }
    }

    /// Smallest D for which the progress consequences are guaranteed.
    pub fn consequence_threshold(&self) -> u64 {
        2 * self.c + 1
    }
}

/// What broke, and where. The index points at the first offending position:
/// for a short hop, the hop ending at that index; for a large turn, the
/// interior point where the sequence bends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainViolation {
    HopTooShort { index: usize, length: u64 },
    TurnTooLarge { index: usize, product: u64 },
}

impl ChainViolation {
    pub fn index(&self) -> usize {
        match self {
            ChainViolation::HopTooShort { index, .. } => *index,
            ChainViolation::TurnTooLarge { index, .. } => *index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainCheck {
    verdict: bool,
    violation: Option<ChainViolation>,
}

impl ChainCheck {
    pub fn holds(&self) -> bool {
        self.verdict
    }

    pub fn first_violation(&self) -> Option<ChainViolation> {
        self.violation
    }
}

pub(crate) fn dist(x: &ReducedWord, y: &ReducedWord) -> u64 {
    x.distance(y).expect("chain points live in one group") as u64
}

pub(crate) fn turn(left: &ReducedWord, right: &ReducedWord, at: &ReducedWord) -> u64 {
    word_gromov(left, right, at).expect("chain points live in one group") as u64
}

/// Checks the chain conditions, scanning hops and turns in order and
/// reporting the first violation. On success with D past the consequence
/// threshold, the progress guarantees are theorems of tree geometry, so they
/// are asserted outright; a failure there is a bug in this crate, not bad
/// input.
pub fn is_chain(points: &[ReducedWord], params: ChainParams) -> Result<ChainCheck, PivotalError> {
    if points.len() < 2 {
        return Err(PivotalError::Invalid(format!(
            "a chain needs at least two points, got {}",
            points.len()
        )));
    }
    let group = points[0].group();
    if points.iter().any(|p| p.group() != group) {
        return Err(PivotalError::Invalid(
            "chain points come from different groups".into(),
        ));
    }

    let mut violation = None;
    'scan: {
        for i in 1..points.len() {
            let length = dist(&points[i - 1], &points[i]);
            if length < params.d {
                violation = Some(ChainViolation::HopTooShort { index: i, length });
                break 'scan;
            }
            if i + 1 < points.len() {
                let product = turn(&points[i - 1], &points[i + 1], &points[i]);
                if product > params.c {
                    violation = Some(ChainViolation::TurnTooLarge { index: i, product });
                    break 'scan;
                }
            }
        }
    }

    let verdict = violation.is_none();
    if verdict && params.d >= params.consequence_threshold() {
        let steps = (points.len() - 1) as u64;
        let total: u64 = (1..points.len())
            .map(|i| dist(&points[i - 1], &points[i]))
            .sum();
        let progress = total - 2 * params.c * steps;
        let span = dist(&points[0], &points[points.len() - 1]);
        assert!(
            span >= progress && progress >= steps,
            "chain progress bound failed: span {span}, hop sum {total}, steps {steps}"
        );
        let sight = turn(&points[0], &points[points.len() - 1], &points[1]);
        assert!(
            sight <= params.c,
            "chain endpoint left the first hop's sight: product {sight} > {}",
            params.c
        );
    }

    Ok(ChainCheck { verdict, violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use free_group::FreeGroupSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> FreeGroupSpec {
        FreeGroupSpec::new(2).unwrap()
    }

    fn power(letter: i8, n: usize) -> ReducedWord {
        ReducedWord::from_letters(f2(), vec![letter; n]).unwrap()
    }

    #[test]
    fn straight_corner_is_a_chain_at_c_zero() {
        let d = 9usize;
        let o = ReducedWord::identity(f2());
        let first = power(1, d);
        let mut second = first.clone();
        for _ in 0..d {
            second.push_letter(2);
        }
        let check = is_chain(&[o, first, second], ChainParams::new(0, d as u64)).unwrap();
        assert!(check.holds());
        assert!(check.first_violation().is_none());
    }

    #[test]
    fn backtracking_middle_point_turns_too_hard() {
        // The third point retraces half the first hop before branching, so the
        // turn at index 1 has Gromov product d/2 > 0.
        let d = 8usize;
        let o = ReducedWord::identity(f2());
        let ahead = power(1, d);
        let mut bent = power(1, d / 2);
        bent.push_letter(2);
        let check = is_chain(&[o, ahead, bent], ChainParams::new(0, 1)).unwrap();
        assert!(!check.holds());
        assert_eq!(
            check.first_violation(),
            Some(ChainViolation::TurnTooLarge { index: 1, product: (d / 2) as u64 })
        );
    }

    #[test]
    fn short_hop_is_reported_with_its_length() {
        let o = ReducedWord::identity(f2());
        let near = power(1, 3);
        let check = is_chain(&[o, near], ChainParams::new(0, 5)).unwrap();
        assert!(!check.holds());
        assert_eq!(
            check.first_violation(),
            Some(ChainViolation::HopTooShort { index: 1, length: 3 })
        );
    }

    #[test]
    fn single_point_is_rejected() {
        let o = ReducedWord::identity(f2());
        assert!(matches!(
            is_chain(&[o], ChainParams::new(0, 1)),
            Err(PivotalError::Invalid(_))
        ));
    }

    /// Random chains built to satisfy the local conditions: every one must
    /// pass, and the progress consequences asserted inside is_chain must hold
    /// along the way (the call itself would panic otherwise).
    #[test]
    fn random_constructed_chains_always_pass_and_make_progress() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let c = rng.gen_range(0..3u64);
            let d = 2 * c + 1 + rng.gen_range(0..4u64);
            let mut points = vec![ReducedWord::identity(f2())];
            let mut cur = ReducedWord::identity(f2());
            for _ in 0..rng.gen_range(1..6usize) {
                // Backtrack at most c letters, then push fresh ones; the next
                // point keeps the turn at the previous one within c.
                let back = rng.gen_range(0..=c.min(cur.len() as u64)) as usize;
                let mut next = cur.prefix(cur.len() - back);
                let fresh = (d as usize) + back + rng.gen_range(0..3usize);
                for _ in 0..fresh {
                    let banned = next.last().map(|l| -l);
                    let mut letter;
                    loop {
                        letter = *[1i8, -1, 2, -2].iter().nth(rng.gen_range(0..4)).unwrap();
                        if Some(letter) != banned {
                            break;
                        }
                    }
                    next.push_letter(letter);
                }
                points.push(next.clone());
                cur = next;
            }
            let check = is_chain(&points, ChainParams::new(c, d)).unwrap();
            assert!(check.holds(), "constructed chain rejected: c={c} d={d}");
            let span = dist(&points[0], &points[points.len() - 1]);
            assert!(span >= (points.len() - 1) as u64);
        }
    }
}
