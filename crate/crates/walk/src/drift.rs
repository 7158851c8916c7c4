//! Monte Carlo escape-rate estimation, one coordinate at a time.

use rayon::prelude::*;

use crate::error::WalkError;
use crate::measure::MeasureSpec;
use crate::rng::trial_rng;
use crate::stats::RunningStat;
use crate::trajectory::Walker;

/// A sample mean with its standard error across independent trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub n: usize,
    pub trials: usize,
    pub first: Estimate,
    /// Present only when the spec genuinely moves the second coordinate.
    pub second: Option<Estimate>,
}

/// Estimates lim |w_n|/n per coordinate by running `trials` independent
/// walks of length `n`. Trials are farmed out to rayon but reduced in trial
/// order, so results do not depend on the thread count.
pub fn drift_estimate(
    spec: &MeasureSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DriftReport, WalkError> {
    if n == 0 || trials == 0 {
        return Err(WalkError::InvalidSpec(
            "drift estimation needs n >= 1 and trials >= 1".into(),
        ));
    }
    let prepared = spec.prepare()?;
    let track_second = spec.is_pair();

    let endpoints: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut walker = Walker::new(&prepared, trial_rng(seed, trial as u64));
            for _ in 0..n {
                walker.step();
            }
            let pos = walker.position();
            (
                pos.first().len() as f64 / n as f64,
                pos.second().len() as f64 / n as f64,
            )
        })
        .collect();

    let mut first = RunningStat::new();
    let mut second = RunningStat::new();
    for (a, b) in &endpoints {
        first.push(*a);
        second.push(*b);
    }

    Ok(DriftReport {
        n,
        trials,
        first: Estimate { value: first.mean(), stderr: first.stderr() },
        second: track_second
            .then(|| Estimate { value: second.mean(), stderr: second.stderr() }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FactorMeasure;
    use free_group::{FreeGroupSpec, ReducedWord};

    fn srw(rank: usize) -> MeasureSpec {
        MeasureSpec::Factor(FactorMeasure::Srw { rank })
    }

    #[test]
    fn point_mass_has_unit_drift_and_zero_spread() {
        let group = FreeGroupSpec::new(2).unwrap();
        let spec = MeasureSpec::Factor(FactorMeasure::PointMass {
            word: ReducedWord::parse(group, "a").unwrap(),
        });
        let report = drift_estimate(&spec, 50, 8, 7).unwrap();
        assert_eq!(report.first.value, 1.0);
        assert_eq!(report.first.stderr, 0.0);
        assert!(report.second.is_none());
    }

    #[test]
    fn srw_f3_matches_closed_form() {
        let report = drift_estimate(&srw(3), 2000, 64, 20260816).unwrap();
        let expected = 2.0 / 3.0;
        let tol = 4.0 * report.first.stderr + 2.0 / report.n as f64;
        assert!(
            (report.first.value - expected).abs() < tol,
            "{} vs {expected} (tol {tol})",
            report.first.value
        );
    }

    #[test]
    fn lazy_srw_matches_closed_form() {
        let spec = MeasureSpec::Factor(FactorMeasure::LazySrw { rank: 2, holding: 1.0 / 3.0 });
        let report = drift_estimate(&spec, 2000, 64, 11).unwrap();
        let expected = 1.0 / 3.0;
        let tol = 4.0 * report.first.stderr + 2.0 / report.n as f64;
        assert!((report.first.value - expected).abs() < tol);
    }

    #[test]
    fn product_reports_both_coordinates() {
        let spec = MeasureSpec::Product {
            first: FactorMeasure::Srw { rank: 2 },
            second: FactorMeasure::Srw { rank: 2 },
        };
        let report = drift_estimate(&spec, 1500, 48, 3).unwrap();
        let second = report.second.expect("pair spec");
        for est in [report.first, second] {
            let tol = 4.0 * est.stderr + 2.0 / report.n as f64;
            assert!((est.value - 0.5).abs() < tol, "{}", est.value);
        }
    }

    #[test]
    fn diagonal_push_second_coordinate_is_lazy_image() {
        let spec = MeasureSpec::DiagonalPush { base: FactorMeasure::Srw { rank: 3 } };
        let report = drift_estimate(&spec, 1500, 48, 5).unwrap();
        let second = report.second.expect("pair spec");
        let tol1 = 4.0 * report.first.stderr + 2.0 / report.n as f64;
        let tol2 = 4.0 * second.stderr + 2.0 / report.n as f64;
        assert!((report.first.value - 2.0 / 3.0).abs() < tol1);
        // Killing the last generator leaves a 1/3-lazy SRW on F_2.
        assert!((second.value - 1.0 / 3.0).abs() < tol2);
    }

    #[test]
    fn normalized_distance_decreases_with_horizon() {
        let short = drift_estimate(&srw(2), 200, 48, 99).unwrap();
        let long = drift_estimate(&srw(2), 2000, 48, 99).unwrap();
        let slack = 3.0 * (short.first.stderr + long.first.stderr);
        assert!(short.first.value + slack >= long.first.value);
    }

    #[test]
    fn deterministic_across_repeat_runs() {
        let a = drift_estimate(&srw(2), 300, 16, 42).unwrap();
        let b = drift_estimate(&srw(2), 300, 16, 42).unwrap();
        assert_eq!(a.first.value, b.first.value);
        assert_eq!(a.first.stderr, b.first.stderr);
    }
}
