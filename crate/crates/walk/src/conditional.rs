//! Conditional entropy H(w_n | w*_n) by bridge sampling.
//!
//! The conditional mass P(w | w*) is an expectation over second-coordinate
//! step paths Y conditioned to end at w*, of q(Y) = P(first path multiplies
//! to w | Y), because the step pairs are iid, so the first coordinate given the whole
//! second path is an inhomogeneous product of one-step conditionals, and
//! q(Y) comes out of a remaining-word DP. Sampling Y straight from the
//! bridge law P(Y | w*) is correct but useless when the coordinates are
//! strongly coupled: most bridges then have q(Y) = 0 and the rare all-zero
//! trials would have to be censored, which throws away exactly the
//! lowest-probability endpoints. Instead each step of Y is drawn with a
//! one-step lookahead weight, bridge probability times the fraction of DP
//! mass that would survive that step, and the product of the per-step
//! normalizers is the importance-weighted estimate of P(w | w*). It is
//! unbiased, never exceeds one, and degenerates to an exact computation
//! whenever the first coordinate is locally determined by the second.
//! Averaging bridges and taking -log still carries a Jensen bias upward;
//! the leading term Var/(2R P^2) is subtracted.

use std::collections::BTreeMap;

use rayon::prelude::*;

use free_group::ReducedWord;

use crate::error::{unsupported, WalkError};
use crate::measure::{MeasureSpec, PreparedMeasure};
use crate::radial::RadialTable;
use crate::rng::trial_rng;
use crate::stats::{KahanSum, RunningStat};
use crate::trajectory::Walker;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

const BRIDGES_PER_TRIAL: usize = 32;
const ZERO_RETRY_ROUNDS: usize = 4;

#[derive(Debug, Clone)]
pub struct ConditionalEntropyReport {
    pub n: usize,
    pub trials: usize,
    pub bridges_per_trial: usize,
    /// Estimate of H(w_n | w*_n) / n.
    pub estimate: f64,
    pub stderr: f64,
    /// Mean Jensen correction already subtracted from `estimate`, per step.
    pub bias_correction: f64,
    pub diagnostics: Vec<(String, f64)>,
}

struct BridgeContext<'a> {
    prepared: &'a PreparedMeasure,
    second_support: Vec<(ReducedWord, f64)>,
    conditional_rows: Vec<Vec<(ReducedWord, f64)>>,
    radial: RadialTable,
    n: usize,
}

impl<'a> BridgeContext<'a> {
    /// One lookahead-weighted bridge; returns an unbiased estimate of
    /// P(first endpoint = target_first | second endpoint = target_second).
    fn bridge_mass(
        &self,
        target_first: &ReducedWord,
        target_second: &ReducedWord,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        let n = self.n;
        let support = self.second_support.len();
        let mut position = ReducedWord::identity(target_second.group());
        // Remaining-word distribution for the first coordinate: u = x^{-1} w,
        // so the walk hits target_first exactly when u ends at the identity.
        let mut states: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        if target_first.len() > n {
            return 0.0;
        }
        states.insert(target_first.clone(), 1.0);
        let mut state_mass = 1.0;
        let mut estimate = 1.0;

        for t in 0..n {
            let remaining = n - t - 1;
            let mut folds: Vec<Option<(BTreeMap<ReducedWord, f64>, f64)>> =
                Vec::with_capacity(support);
            let mut bridge_total = 0.0;
            let mut contrib = vec![0.0f64; support];
            let mut contrib_total = 0.0;
            for (i, (c, pc)) in self.second_support.iter().enumerate() {
                let after = position.mul(c).expect("same group");
                let k = after.distance(target_second).expect("same group");
                let bridge_weight = if k > remaining {
                    0.0
                } else {
                    pc * self.radial.at(remaining).log_point_mass(k).exp()
                };
                if bridge_weight <= 0.0 {
                    folds.push(None);
                    continue;
                }
                bridge_total += bridge_weight;
                // Fold this letter's one-step conditional into the DP,
                // pruning remainders too long to finish in time.
                let row = &self.conditional_rows[i];
                let mut next: BTreeMap<ReducedWord, f64> = BTreeMap::new();
                let mut survived = 0.0;
                for (u, mass) in &states {
                    for (x, px) in row {
                        let u2 = x.inverse().mul(u).expect("same group");
                        if u2.len() <= remaining {
                            *next.entry(u2).or_insert(0.0) += mass * px;
                            survived += mass * px;
                        }
                    }
                }
                contrib[i] = bridge_weight * survived;
                contrib_total += contrib[i];
                folds.push(Some((next, survived)));
            }
            debug_assert!(bridge_total > 0.0, "bridge ran out of admissible steps");
            if contrib_total <= 0.0 {
                // No admissible second letter keeps the first coordinate
                // alive; this bridge contributes zero.
                return 0.0;
            }
            // Per-step importance factor: sum of bridge prob times survival
            // fraction. Sampling proportional to contrib makes the factor
            // independent of the choice, which is what keeps this unbiased.
            estimate *= contrib_total / (bridge_total * state_mass);

            let mut pick = rng.gen_range(0.0..contrib_total);
            let mut chosen = support;
            for (i, w) in contrib.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                chosen = i;
                if pick < *w {
                    break;
                }
                pick -= w;
            }
            let (next, survived) = folds[chosen].take().expect("chosen fold exists");
            position = position.mul(&self.second_support[chosen].0).expect("same group");
            states = next;
            state_mass = survived;
        }
        debug_assert_eq!(&position, target_second);
        debug_assert!(states.len() == 1);
        estimate
    }
}

/// Estimates H(w_n | w*_n)/n for a pair spec whose second marginal is
/// radial. Trials are independent joint-walk endpoints; per endpoint the
/// conditional mass is averaged over `BRIDGES_PER_TRIAL` exact bridges,
/// doubling the bridge count a few times if every sampled bridge was
/// incompatible with the first coordinate.
pub fn conditional_entropy_estimate(
    spec: &MeasureSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ConditionalEntropyReport, WalkError> {
    if n == 0 || trials == 0 {
        return Err(WalkError::InvalidSpec(
            "conditional entropy needs n >= 1 and trials >= 1".into(),
        ));
    }
    if !spec.is_pair() {
        return Err(unsupported(
            "conditional entropy",
            "the second coordinate of a factor walk is frozen",
        ));
    }
    let law = spec.second_marginal_radial().ok_or_else(|| {
        unsupported(
            "conditional entropy",
            "bridge sampling needs a radial second marginal",
        )
    })?;
    let prepared = spec.prepare()?;
    let second_support = prepared.second_marginal();
    let conditional_rows: Vec<Vec<(ReducedWord, f64)>> = second_support
        .iter()
        .map(|(y, _)| prepared.first_given_second(y))
        .collect();
    let ctx = BridgeContext {
        prepared: &prepared,
        second_support,
        conditional_rows,
        radial: RadialTable::up_to(law, n),
        n,
    };

    struct TrialOutcome {
        loglik: f64,
        correction: f64,
        bridges: usize,
        failed: bool,
    }

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut walker = Walker::new(ctx.prepared, trial_rng(seed, trial as u64));
            for _ in 0..n {
                walker.step();
            }
            let endpoint = walker.position().clone();
            let (w, ws) = (endpoint.first(), endpoint.second());
            let rng = walker.rng_mut();

            let mut qs: Vec<f64> = Vec::with_capacity(BRIDGES_PER_TRIAL);
            let mut rounds = 0;
            loop {
                let want = BRIDGES_PER_TRIAL << rounds;
                while qs.len() < want {
                    qs.push(ctx.bridge_mass(w, ws, rng));
                }
                if qs.iter().any(|&q| q > 0.0) || rounds + 1 >= ZERO_RETRY_ROUNDS {
                    break;
                }
                rounds += 1;
            }
            let r = qs.len() as f64;
            let mut mean = KahanSum::new();
            for &q in &qs {
                mean.add(q / r);
            }
            let p_hat = mean.value();
            if p_hat <= 0.0 {
                return TrialOutcome { loglik: 0.0, correction: 0.0, bridges: qs.len(), failed: true };
            }
            let mut var = 0.0;
            for &q in &qs {
                var += (q - p_hat) * (q - p_hat);
            }
            var /= (r - 1.0).max(1.0);
            let correction = (var / (2.0 * r * p_hat * p_hat)).min(1.0);
            TrialOutcome {
                loglik: -p_hat.ln() - correction,
                correction,
                bridges: qs.len(),
                failed: false,
            }
        })
        .collect();

    let mut stat = RunningStat::new();
    let mut corr = KahanSum::new();
    let mut failed = 0usize;
    let mut extra_bridges = 0usize;
    for o in &outcomes {
        if o.failed {
            failed += 1;
            continue;
        }
        stat.push(o.loglik / n as f64);
        corr.add(o.correction / n as f64);
        extra_bridges += o.bridges - BRIDGES_PER_TRIAL;
    }
    if stat.count() == 0 {
        return Err(WalkError::InvalidSpec(
            "no trial produced a positive bridge-averaged conditional mass".into(),
        ));
    }

    Ok(ConditionalEntropyReport {
        n,
        trials,
        bridges_per_trial: BRIDGES_PER_TRIAL,
        estimate: stat.mean(),
        stderr: stat.stderr(),
        bias_correction: corr.value() / stat.count() as f64,
        diagnostics: vec![
            ("failed_trials".into(), failed as f64),
            ("extra_bridges".into(), extra_bridges as f64),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::joint_distribution;
    use crate::measure::FactorMeasure;
    use crate::radial::radial_profile;

    #[test]
    fn perfectly_correlated_pair_has_zero_conditional_entropy() {
        let spec = MeasureSpec::NoiseMixture { rho: 0.0, base: FactorMeasure::Srw { rank: 2 } };
        let report = conditional_entropy_estimate(&spec, 10, 8, 1).unwrap();
        assert_eq!(report.estimate, 0.0);
        assert_eq!(report.stderr, 0.0);
    }

    #[test]
    fn independent_product_recovers_marginal_entropy() {
        let spec = MeasureSpec::Product {
            first: FactorMeasure::Srw { rank: 2 },
            second: FactorMeasure::Srw { rank: 2 },
        };
        let n = 12;
        let report = conditional_entropy_estimate(&spec, n, 64, 2).unwrap();
        let exact = radial_profile(&FactorMeasure::Srw { rank: 2 }, n).unwrap().entropy() / n as f64;
        let tol = 4.0 * report.stderr + 5e-3;
        assert!(
            (report.estimate - exact).abs() < tol,
            "{} vs {exact} (tol {tol})",
            report.estimate
        );
    }

    #[test]
    fn diagonal_push_conditional_entropy_is_entropy_difference() {
        let base = FactorMeasure::Srw { rank: 3 };
        let spec = MeasureSpec::DiagonalPush { base: base.clone() };
        let n = 12;
        let report = conditional_entropy_estimate(&spec, n, 48, 3).unwrap();
        let h_first = radial_profile(&base, n).unwrap().entropy();
        let image = spec.second_marginal_radial().unwrap();
        let mut evo = crate::radial::RadialEvolution::new(image);
        evo.advance_to(n);
        let h_second = evo.profile().entropy();
        let exact = (h_first - h_second) / n as f64;
        let tol = 4.0 * report.stderr + 1e-2;
        assert!(
            (report.estimate - exact).abs() < tol,
            "{} vs {exact} (tol {tol})",
            report.estimate
        );
    }

    #[test]
    fn noise_mixture_matches_exact_joint_table() {
        let spec = MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } };
        let n = 6;
        let report = conditional_entropy_estimate(&spec, n, 128, 4).unwrap();
        let exact = joint_distribution(&spec, n).unwrap().conditional_entropy_given_second() / n as f64;
        let tol = 4.0 * report.stderr + 5e-3;
        assert!(
            (report.estimate - exact).abs() < tol,
            "{} vs {exact} (tol {tol})",
            report.estimate
        );
    }

    #[test]
    fn fully_noisy_mixture_matches_marginal_entropy() {
        let spec = MeasureSpec::NoiseMixture { rho: 1.0, base: FactorMeasure::Srw { rank: 2 } };
        let n = 8;
        let report = conditional_entropy_estimate(&spec, n, 64, 5).unwrap();
        let exact = radial_profile(&FactorMeasure::Srw { rank: 2 }, n).unwrap().entropy() / n as f64;
        let tol = 4.0 * report.stderr + 1e-2;
        assert!((report.estimate - exact).abs() < tol);
    }

    #[test]
    fn factor_spec_is_rejected() {
        let spec = MeasureSpec::Factor(FactorMeasure::Srw { rank: 2 });
        assert!(conditional_entropy_estimate(&spec, 5, 4, 0).is_err());
    }
}
