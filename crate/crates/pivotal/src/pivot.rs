//! The pivotal-time induction.
//!
//! A trajectory is driven by an alternating product
//! u_0 s_1 u_1 s_2 ... s_n u_n, where each step s_i = a_i b_i splits into
//! two halves that each move the origin by at least D, and the relays u_i
//! are arbitrary. Writing g = u_0 s_1 u_1 ... s_{i-1} u_{i-1}, the marked
//! points of step i are
//!
//!   y_i^- = g.o,   y_i = g a_i.o,   y_i^+ = g a_i b_i.o.
//!
//! The record of pivotal times P_n grows by n when the local geodesic
//! condition holds at time n, with k the latest recorded time (k = 0 and
//! y_k = o when the record is empty):
//!
//!   (y_k|y_n)_{y_n^-} <= C_0,  (y_n^-|y_n^+)_{y_n} <= C_0,  (y_n|y_{n+1}^-)_{y_n^+} <= C_0.
//!
//! Otherwise the record is cut back to the latest recorded m whose outgoing
//! direction still sees the new position, meaning y_{n+1}^- lies in the
//! chain shadow of y_m^+ seen from y_m with constant C_0, and to the empty
//! record when no recorded time survives. The construction's source states
//! the acceptance rule only for a nonempty record; extending it to the
//! empty record with the origin as anchor is an inference, and everything
//! downstream relies on it.
//!
//! The payoff is geometric: after every step, the points
//! o, y_{k_1}, y_{k_2}^-, y_{k_2}, ..., y_{k_p}^-, y_{k_p}, y_{n+1}^-
//! along the recorded times form a (2C_0, D-2C_0)-chain, and each suffix
//! y_{k_i}^-, y_{k_i}, y_{n+1}^- for i >= 2 is a (2C_0, D-6C_0)-chain.
//! Those are theorems for any input whose step halves clear D, so the
//! engine asserts them outright; a failure is a bug, not bad data. After a
//! full truncation the record is empty and nothing is claimed, so the audit
//! is skipped rather than weakened.

use free_group::ReducedWord;

use crate::chain::{is_chain, turn, ChainParams};
use crate::error::PivotalError;
use crate::shadow::chain_shadow_contains;

/// Turning and displacement constants for the induction. The requirement
/// d >= 20 c0 + 1 is what the downstream resampling theory needs; the chain
/// audits alone would settle for less.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotConstants {
    c0: u64,
    d: u64,
}

impl PivotConstants {
    pub fn new(c0: u64, d: u64) -> Result<Self, PivotalError> {
        if d < 20 * c0 + 1 {
            return Err(PivotalError::Constants(format!(
                "displacement bound too small: need d >= 20*c0+1, got c0={c0} d={d}"
            )));
        }
        Ok(PivotConstants { c0, d })
    }

    pub fn c0(&self) -> u64 {
        self.c0
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// Chain constants guaranteed for the full marker chain.
    pub fn audit_params(&self) -> ChainParams {
        ChainParams::new(2 * self.c0, self.d - 2 * self.c0)
    }

    /// Chain constants guaranteed for each marker's two-hop suffix chain.
    pub fn subchain_params(&self) -> ChainParams {
        ChainParams::new(2 * self.c0, self.d - 6 * self.c0)
    }
}

/// The three marked points of a recorded pivotal time.
#[derive(Debug, Clone)]
pub struct PivotMarker {
    pub time: usize,
    pub y_minus: ReducedWord,
    pub y: ReducedWord,
    pub y_plus: ReducedWord,
}

/// Outcome of one step of the induction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotalState {
    pub time: usize,
    /// The record P_n, strictly increasing.
    pub pivots: Vec<usize>,
    /// Whether the local geodesic condition held at this time.
    pub lgc: bool,
    /// On failure, the latest recorded time whose shadow caught the new
    /// position; None when the record was emptied (or grew).
    pub truncated_to: Option<usize>,
}

pub struct PivotEngine {
    consts: PivotConstants,
    origin: ReducedWord,
    position: ReducedWord,
    markers: Vec<PivotMarker>,
    time: usize,
    audit_each_step: bool,
}

impl PivotEngine {
    /// Starts a trajectory at u_0.o. With `audit_each_step` the marker
    /// chains are re-verified after every step, which is affordable for
    /// short traces; long runs audit at the end via `audit_markers`.
    pub fn new(consts: PivotConstants, u0: &ReducedWord, audit_each_step: bool) -> Self {
        PivotEngine {
            consts,
            origin: ReducedWord::identity(u0.group()),
            position: u0.clone(),
            markers: Vec::new(),
            time: 0,
            audit_each_step,
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    /// The current point y_{n+1}^-, one relay past the last step.
    pub fn position(&self) -> &ReducedWord {
        &self.position
    }

    pub fn markers(&self) -> &[PivotMarker] {
        &self.markers
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.markers.iter().map(|m| m.time).collect()
    }

    /// Advances by one step s = a.b followed by the relay u. Both halves
    /// must displace the origin by at least d; the relay is unconstrained.
    pub fn step(
        &mut self,
        a: &ReducedWord,
        b: &ReducedWord,
        u: &ReducedWord,
    ) -> Result<PivotalState, PivotalError> {
        let group = self.origin.group();
        if a.group() != group || b.group() != group || u.group() != group {
            return Err(PivotalError::Invalid(
                "step words come from a different group".into(),
            ));
        }
        if (a.len() as u64) < self.consts.d || (b.len() as u64) < self.consts.d {
            return Err(PivotalError::Invalid(format!(
                "step halves must displace the origin by at least {}, got {} and {}",
                self.consts.d,
                a.len(),
                b.len()
            )));
        }
        self.time += 1;
        let n = self.time;
        let c0 = self.consts.c0;

        let y_minus = self.position.clone();
        let y = y_minus.mul(a)?;
        let y_plus = y.mul(b)?;
        let next = y_plus.mul(u)?;

        let anchor = match self.markers.last() {
            Some(m) => m.y.clone(),
            None => self.origin.clone(),
        };
        let lgc = turn(&anchor, &y, &y_minus) <= c0
            && turn(&y_minus, &y_plus, &y) <= c0
            && turn(&y, &next, &y_plus) <= c0;

        let mut truncated_to = None;
        if lgc {
            self.markers.push(PivotMarker { time: n, y_minus, y, y_plus });
        } else {
            while let Some(top) = self.markers.last() {
                if chain_shadow_contains(&top.y, &top.y_plus, c0, &next)? {
                    truncated_to = Some(top.time);
                    break;
                }
                self.markers.pop();
            }
        }
        self.position = next;

        if self.audit_each_step {
            self.audit_markers();
        }
        Ok(PivotalState { time: n, pivots: self.pivots(), lgc, truncated_to })
    }

    /// Re-verifies the chain guarantees of the current record against the
    /// current position. Panics on violation: the guarantees hold for any
    /// admissible input, so a failure here is an implementation bug.
    pub fn audit_markers(&self) {
        let p = self.markers.len();
        assert!(
            self.markers.windows(2).all(|w| w[0].time < w[1].time),
            "recorded times must increase strictly"
        );
        if p == 0 {
            // An emptied record promises nothing about the position.
            return;
        }
        let mut points = Vec::with_capacity(2 * p + 1);
        points.push(self.origin.clone());
        points.push(self.markers[0].y.clone());
        for m in &self.markers[1..] {
            points.push(m.y_minus.clone());
            points.push(m.y.clone());
        }
        points.push(self.position.clone());
        let check = is_chain(&points, self.consts.audit_params())
            .expect("marker points share one group");
        assert!(
            check.holds(),
            "marker chain audit failed at time {}: {:?}",
            self.time,
            check.first_violation()
        );
        for m in &self.markers[1..] {
            let suffix = [m.y_minus.clone(), m.y.clone(), self.position.clone()];
            let check = is_chain(&suffix, self.consts.subchain_params())
                .expect("marker points share one group");
            assert!(
                check.holds(),
                "marker suffix audit failed at time {} for recorded time {}: {:?}",
                self.time,
                m.time,
                check.first_violation()
            );
        }
    }
}

/// Runs the whole induction for steps (a_i, b_i) and relays u_0, ..., u_n,
/// auditing the marker chains after every step, and returns the state
/// sequence. `relays` must be one longer than `steps`.
pub fn pivotal_times(
    steps: &[(ReducedWord, ReducedWord)],
    relays: &[ReducedWord],
    consts: PivotConstants,
) -> Result<Vec<PivotalState>, PivotalError> {
    if relays.len() != steps.len() + 1 {
        return Err(PivotalError::Invalid(format!(
            "need exactly one more relay than steps, got {} steps and {} relays",
            steps.len(),
            relays.len()
        )));
    }
    let mut engine = PivotEngine::new(consts, &relays[0], true);
    steps
        .iter()
        .zip(&relays[1..])
        .map(|((a, b), u)| engine.step(a, b, u))
        .collect()
}
