//! Entropy-gap statistics: couples a product-group walk to a Schottky
//! alphabet and counts pivotal times along the first coordinate.
//!
//! The chain of reductions, each step checkable on its own:
//!
//! 1. The step law must expose a product component: pi = alpha (lambda x
//!    lambda') + (1 - alpha) pi_0 with alpha > 0. Noise mixtures carry
//!    alpha = rho, independent products carry alpha = 1, and nothing else
//!    is accepted; there is no honest way to read a coupling weight off an
//!    opaque pair table.
//! 2. A Schottky alphabet S is extracted from the support of the first
//!    factor lambda and certified. The restriction of lambda to S must be
//!    uniform: the marked-pair extraction below conditions two increments
//!    on landing in S, and only a uniform restriction makes the result
//!    exactly the uniform law on S.
//! 3. Steps are grouped in consecutive pairs. A pair is marked when both
//!    steps took the product branch and both first-coordinate increments
//!    landed in S. Conditioned on the marks, the marked increments are
//!    i.i.d. uniform on S and everything between two marked pairs is an
//!    arbitrary relay word, so the trajectory z_n = u_0 s_1 u_1 ... s_j
//!    u(n) o feeds straight into the pivotal-time induction.
//! 4. Marks arrive at rate alpha^2 lambda(S)^2 per pair, the operative
//!    beta. The exact two-step convolution gives the largest coefficient
//!    beta with lambda^{*2} >= beta lambda_S^{*2}; the operative value can
//!    only be smaller, and both are reported.
//! 5. Pivotal counts grow linearly: a rate kappa is fitted as a low
//!    quantile of #P/n on calibration runs, then the frequency of
//!    {#P <= kappa n} is measured on fresh trials at each horizon. The
//!    theory predicts exponential decay in n; the report carries the
//!    measured frequencies so the decay is visible rather than assumed.
//! 6. The resulting dimension-gap bound kappa ln((1 - 2 eps)#S) is
//!    empirical: kappa is fitted, not proven. It is labeled as such
//!    everywhere downstream.
//!
//! Simple random walk factors fail step 2 honestly: their support (and any
//! convolution power that is still a single step's worth of coupling, up
//! to 8) consists of words far shorter than the displacement a certificate
//! demands at tolerance 1/100.

use std::collections::HashMap;

use free_group::ReducedWord;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use walk::{mix_seed, trial_rng, FactorMeasure, MeasureSpec};

use crate::error::PivotalError;
use crate::pivot::{PivotConstants, PivotEngine};
use crate::schottky::{schottky_certify, SchottkyCertificate, SchottkyVerdict};

/// Tolerance used by every certificate this module requests.
pub const GAP_EPSILON: f64 = 0.01;

const CONVOLUTION_REACH: u32 = 8;
const CALIBRATION_STREAM: u64 = 0xca11;
const HORIZON_STREAM: u64 = 0x40f1;

/// Sizes of the Monte Carlo design for the gap experiment.
#[derive(Debug, Clone)]
pub struct GapParams {
    /// Walk lengths, strictly increasing. The first is also the
    /// calibration horizon for fitting kappa.
    pub horizons: Vec<usize>,
    /// Fresh trials per horizon.
    pub trials: usize,
    /// Trials used to fit kappa; never reused for the frequencies.
    pub calibration_trials: usize,
    /// Quantile of #P/n the fit takes, e.g. 0.1.
    pub quantile: f64,
    pub seed: u64,
}

impl GapParams {
    fn validate(&self) -> Result<(), PivotalError> {
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PivotalError::Invalid(
                "horizons must be nonempty and strictly increasing".into(),
            ));
        }
        if self.horizons[0] < 4 {
            return Err(PivotalError::Invalid(
                "horizons shorter than two step pairs carry no signal".into(),
            ));
        }
        if self.trials < 2 || self.calibration_trials < 2 {
            return Err(PivotalError::Invalid("need at least two trials".into()));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(PivotalError::Invalid(format!(
                "quantile must lie in (0, 1), got {}",
                self.quantile
            )));
        }
        Ok(())
    }
}

/// Per-horizon aggregates of the pivotal count.
#[derive(Debug, Clone)]
pub struct HorizonStat {
    pub horizon: usize,
    pub mean_pivots: f64,
    /// mean_pivots / horizon.
    pub mean_slope: f64,
    /// Fraction of fresh trials with #P <= kappa_hat * horizon.
    pub tail_frequency: f64,
}

#[derive(Debug, Clone)]
pub struct PivotalGapReport {
    /// Weight of the product component of the step law.
    pub alpha: f64,
    /// Mass the first factor puts on the Schottky alphabet.
    pub lambda_mass: f64,
    /// alpha^2 lambda(S)^2: the mark rate the sampler actually realizes.
    pub beta_operative: f64,
    /// Largest beta with lambda^{*2} >= beta lambda_S^{*2}, computed from
    /// the exact convolution.
    pub beta_exact: f64,
    pub certificate: SchottkyCertificate,
    /// Fitted linear rate of pivotal counts; a measurement, not a theorem.
    pub kappa_hat: f64,
    pub horizons: Vec<HorizonStat>,
    /// kappa_hat * ln((1 - 2 eps) #S), in nats per step. Empirical-only:
    /// inherits kappa_hat's status.
    pub gap_lower_bound: f64,
}

/// Reads the product component off the step law: the coupling weight alpha
/// and the first-coordinate factor under the product branch.
pub fn product_component(spec: &MeasureSpec) -> Result<(f64, FactorMeasure), PivotalError> {
    match spec {
        MeasureSpec::NoiseMixture { rho, base } => {
            if !(*rho > 0.0) {
                return Err(PivotalError::Invalid(
                    "the product component has zero weight; no marks can ever occur".into(),
                ));
            }
            Ok((*rho, base.clone()))
        }
        MeasureSpec::Product { first, .. } => Ok((1.0, first.clone())),
        other => Err(PivotalError::Invalid(format!(
            "no product component is identifiable in {}; use an independent product \
             or a noise mixture",
            other.describe()
        ))),
    }
}

/// Extracts a certified Schottky alphabet from the support of one factor.
///
/// Candidates are the atoms of displacement at least l, for each distinct
/// length l from the longest down; the first candidate set that is large
/// enough, uniformly weighted, and certified wins. Returns the alphabet,
/// its lambda-mass, and the certificate.
pub fn schottky_from_factor(
    factor: &FactorMeasure,
) -> Result<(Vec<ReducedWord>, f64, SchottkyCertificate), PivotalError> {
    let atoms = factor.support()?;
    let group = factor.group()?;
    let rank = group.rank() as u64;

    let mut lengths: Vec<usize> =
        atoms.iter().map(|(w, _)| w.len()).filter(|&l| l > 0).collect();
    lengths.sort_unstable();
    lengths.dedup();

    // The sharp minimum: any alphabet certified at tolerance 1/100 has at
    // least 200 members with pairwise distinct length-(c+1) prefixes, both
    // forward and inverse, so the rank alone forces a turning constant and
    // with it a displacement floor.
    let slots = |c: u64| -> u64 {
        let mut s = 2 * rank;
        for _ in 0..c {
            s = s.saturating_mul(2 * rank - 1);
        }
        s
    };
    let c_floor = (0..).find(|&c| slots(c) >= 200).unwrap();
    let d_floor = 20 * c_floor + 1;
    let max_len = lengths.last().copied().unwrap_or(0);

    if (CONVOLUTION_REACH as usize) * max_len < d_floor as usize {
        return Err(PivotalError::NoCertificate(format!(
            "support words reach length {max_len}, and even {CONVOLUTION_REACH}-fold \
             convolutions stay below the displacement {d_floor} that rank {rank} \
             forces on a 200-member alphabet at tolerance {GAP_EPSILON}"
        )));
    }

    let mut last_reason = String::from("support holds no candidate alphabet");
    for &floor in lengths.iter().rev() {
        let members: Vec<&(ReducedWord, f64)> =
            atoms.iter().filter(|(w, _)| w.len() >= floor).collect();
        if members.len() < 200 {
            last_reason = format!(
                "only {} support words of length >= {floor}; tolerance {GAP_EPSILON} \
                 needs at least 200",
                members.len()
            );
            continue;
        }
        let p0 = members[0].1;
        if members.iter().any(|(_, p)| (p - p0).abs() > 1e-9 * p0) {
            last_reason = format!(
                "support words of length >= {floor} carry unequal weights; the \
                 marked-pair extraction needs a uniform restriction"
            );
            continue;
        }
        let words: Vec<ReducedWord> = members.iter().map(|(w, _)| w.clone()).collect();
        let mass: f64 = members.iter().map(|(_, p)| p).sum();
        let d = floor as u64;
        for c in 0..=((d - 1) / 20).min(8) {
            match schottky_certify(&words, GAP_EPSILON, c, d)? {
                SchottkyVerdict::Certified(cert) => return Ok((words, mass, cert)),
                SchottkyVerdict::Refuted(r) => {
                    last_reason = format!("candidate at c = {c}, d = {d} refuted: {r:?}");
                }
                SchottkyVerdict::Inconclusive { reason, .. } => {
                    last_reason = format!("candidate at c = {c}, d = {d}: {reason}");
                }
            }
        }
    }
    Err(PivotalError::NoCertificate(last_reason))
}

struct Coupler<'a> {
    atoms: &'a [(ReducedWord, f64)],
    picker: WeightedIndex<f64>,
    in_alphabet: Vec<bool>,
    alpha: f64,
    consts: PivotConstants,
}

/// One walk of length `n`: samples branch and increment per step, marks
/// step pairs, relays everything unmarked, and returns the pivotal count
/// at the horizon. The marker chains are audited once at the end.
fn run_trial(coupler: &Coupler, n: usize, rng: &mut ChaCha8Rng) -> Result<usize, PivotalError> {
    let group = coupler.atoms[0].0.group();
    let id = ReducedWord::identity(group);
    let mut block = id.clone();
    let mut engine: Option<PivotEngine> = None;
    let mut pending: Option<(ReducedWord, ReducedWord)> = None;
    let mut replay = if cfg!(debug_assertions) { Some(id.clone()) } else { None };
    let mut half: Option<(bool, usize)> = None;

    for _ in 0..n {
        let branch = rng.gen_bool(coupler.alpha);
        let idx = coupler.picker.sample(rng);
        let flag = branch && coupler.in_alphabet[idx];
        if let Some(r) = replay.as_mut() {
            *r = r.mul(&coupler.atoms[idx].0)?;
        }
        let Some((first_flag, first_idx)) = half.take() else {
            half = Some((flag, idx));
            continue;
        };
        if first_flag && flag {
            if let Some(e) = engine.as_mut() {
                let (a, b) = pending.take().expect("an engine always has a pending pair");
                e.step(&a, &b, &block)?;
            } else {
                engine = Some(PivotEngine::new(coupler.consts, &block, false));
            }
            pending = Some((
                coupler.atoms[first_idx].0.clone(),
                coupler.atoms[idx].0.clone(),
            ));
            block = id.clone();
        } else {
            block = block.mul(&coupler.atoms[first_idx].0)?;
            block = block.mul(&coupler.atoms[idx].0)?;
        }
    }
    if let Some((_, idx)) = half.take() {
        block = block.mul(&coupler.atoms[idx].0)?;
    }

    match engine.as_mut() {
        Some(e) => {
            let (a, b) = pending.take().expect("an engine always has a pending pair");
            e.step(&a, &b, &block)?;
            e.audit_markers();
            if let Some(r) = &replay {
                debug_assert_eq!(
                    r.letters(),
                    e.position().letters(),
                    "coupled replay drifted from the raw trajectory"
                );
            }
            Ok(e.markers().len())
        }
        None => {
            if let Some(r) = &replay {
                debug_assert_eq!(r.letters(), block.letters());
            }
            Ok(0)
        }
    }
}

fn pivot_counts(
    coupler: &Coupler,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<usize>, PivotalError> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(coupler, n, &mut trial_rng(seed, t as u64)))
        .collect()
}

/// Largest beta with lambda^{*2} >= beta lambda_S^{*2}, by exact
/// convolution over the factor's atoms.
fn exact_beta(
    atoms: &[(ReducedWord, f64)],
    in_alphabet: &[bool],
) -> Result<f64, PivotalError> {
    let mut conv: HashMap<Vec<i8>, f64> = HashMap::new();
    for (a, pa) in atoms {
        for (b, pb) in atoms {
            let w = a.mul(b)?;
            *conv.entry(w.letters().to_vec()).or_insert(0.0) += pa * pb;
        }
    }
    let size = in_alphabet.iter().filter(|&&x| x).count();
    let weight = 1.0 / (size as f64 * size as f64);
    let mut pair_law: HashMap<Vec<i8>, f64> = HashMap::new();
    for (i, (a, _)) in atoms.iter().enumerate() {
        if !in_alphabet[i] {
            continue;
        }
        for (j, (b, _)) in atoms.iter().enumerate() {
            if !in_alphabet[j] {
                continue;
            }
            let w = a.mul(b)?;
            *pair_law.entry(w.letters().to_vec()).or_insert(0.0) += weight;
        }
    }
    let mut beta = f64::INFINITY;
    for (w, q) in &pair_law {
        let p = conv.get(w).copied().unwrap_or(0.0);
        beta = beta.min(p / q);
    }
    Ok(beta)
}

/// Runs the coupled experiment end to end and reports the fitted rate,
/// the tail frequencies, and the resulting (empirical-only) gap bound.
pub fn pivotal_gap_report(
    spec: &MeasureSpec,
    params: &GapParams,
) -> Result<PivotalGapReport, PivotalError> {
    params.validate()?;
    let (alpha, factor) = product_component(spec)?;
    let (alphabet, lambda_mass, certificate) = schottky_from_factor(&factor)?;
    let consts = PivotConstants::new(certificate.c, certificate.d)?;

    let atoms = factor.support()?;
    let member: std::collections::HashSet<&[i8]> =
        alphabet.iter().map(ReducedWord::letters).collect();
    let in_alphabet: Vec<bool> =
        atoms.iter().map(|(w, _)| member.contains(w.letters())).collect();
    let picker = WeightedIndex::new(atoms.iter().map(|(_, p)| *p))
        .map_err(|e| PivotalError::Invalid(format!("unusable weights: {e}")))?;
    let coupler = Coupler { atoms: &atoms, picker, in_alphabet, alpha, consts };

    let beta_operative = (alpha * lambda_mass) * (alpha * lambda_mass);
    let beta_exact = exact_beta(&atoms, &coupler.in_alphabet)?;
    assert!(
        beta_operative <= beta_exact + 1e-9,
        "operative coupling rate {beta_operative} exceeds the exact coefficient {beta_exact}"
    );

    let n0 = params.horizons[0];
    let counts = pivot_counts(
        &coupler,
        n0,
        params.calibration_trials,
        mix_seed(params.seed, CALIBRATION_STREAM),
    )?;
    let mut slopes: Vec<f64> = counts.iter().map(|&p| p as f64 / n0 as f64).collect();
    slopes.sort_by(|a, b| a.total_cmp(b));
    let idx = ((slopes.len() - 1) as f64 * params.quantile).floor() as usize;
    let kappa_hat = slopes[idx];

    let mut horizons = Vec::with_capacity(params.horizons.len());
    for (h, &n) in params.horizons.iter().enumerate() {
        let seed = mix_seed(params.seed, HORIZON_STREAM + h as u64);
        let counts = pivot_counts(&coupler, n, params.trials, seed)?;
        let mean_pivots =
            counts.iter().map(|&p| p as f64).sum::<f64>() / counts.len() as f64;
        let tail = counts.iter().filter(|&&p| p as f64 <= kappa_hat * n as f64).count();
        horizons.push(HorizonStat {
            horizon: n,
            mean_pivots,
            mean_slope: mean_pivots / n as f64,
            tail_frequency: tail as f64 / counts.len() as f64,
        });
    }

    let gap_lower_bound = kappa_hat
        * ((1.0 - 2.0 * certificate.epsilon) * certificate.size as f64).ln();
    Ok(PivotalGapReport {
        alpha,
        lambda_mass,
        beta_operative,
        beta_exact,
        certificate,
        kappa_hat,
        horizons,
        gap_lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schottky::demo_schottky_set;

    fn demo_table() -> FactorMeasure {
        let (words, _) = demo_schottky_set(3).unwrap();
        let w = 1.0 / words.len() as f64;
        FactorMeasure::Table { entries: words.into_iter().map(|x| (x, w)).collect() }
    }

    #[test]
    fn srw_factor_has_no_certificate() {
        let err = schottky_from_factor(&FactorMeasure::Srw { rank: 2 }).unwrap_err();
        match err {
            PivotalError::NoCertificate(reason) => {
                assert!(reason.contains("displacement"), "unexpected reason: {reason}")
            }
            other => panic!("expected NoCertificate, got {other:?}"),
        }
    }

    #[test]
    fn opaque_and_degenerate_specs_are_rejected() {
        let diag = MeasureSpec::DiagonalPush { base: FactorMeasure::Srw { rank: 2 } };
        assert!(matches!(product_component(&diag), Err(PivotalError::Invalid(_))));
        let frozen = MeasureSpec::NoiseMixture { rho: 0.0, base: demo_table() };
        assert!(matches!(product_component(&frozen), Err(PivotalError::Invalid(_))));
    }

    #[test]
    fn demo_table_yields_the_expected_certificate() {
        let (words, mass, cert) = schottky_from_factor(&demo_table()).unwrap();
        assert_eq!(words.len(), 200);
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(cert.size, 200);
        assert_eq!(cert.d, 81);
        assert!(cert.c <= 4);
    }

    #[test]
    fn pure_product_walk_pivots_at_every_pair() {
        // With alpha = 1 and lambda supported exactly on the alphabet,
        // every pair is marked, relays vanish, and distinct-prefix
        // geometry makes every marked pair pivotal: #P = n/2 always.
        let spec = MeasureSpec::Product {
            first: demo_table(),
            second: FactorMeasure::Srw { rank: 2 },
        };
        let params = GapParams {
            horizons: vec![40, 80],
            trials: 8,
            calibration_trials: 8,
            quantile: 0.1,
            seed: 7,
        };
        let report = pivotal_gap_report(&spec, &params).unwrap();
        assert_eq!(report.alpha, 1.0);
        assert!((report.beta_operative - 1.0).abs() < 1e-12);
        assert!((report.beta_exact - 1.0).abs() < 1e-12);
        for h in &report.horizons {
            assert_eq!(h.mean_slope, 0.5, "horizon {}", h.horizon);
            assert_eq!(h.tail_frequency, 1.0);
        }
        assert_eq!(report.kappa_hat, 0.5);
        assert!(report.gap_lower_bound > 2.6);
    }

    #[test]
    fn noise_mixture_tail_frequencies_decay() {
        // At rho = 1/2 marks arrive at rate 1/4 per pair and every marked
        // pair is pivotal, so #P is binomial and the fitted tail must
        // thin out as horizons grow.
        let spec = MeasureSpec::NoiseMixture { rho: 0.5, base: demo_table() };
        let params = GapParams {
            horizons: vec![60, 120, 240],
            trials: 120,
            calibration_trials: 120,
            quantile: 0.1,
            seed: 11,
        };
        let report = pivotal_gap_report(&spec, &params).unwrap();
        assert!((report.alpha - 0.5).abs() < 1e-12);
        assert!((report.beta_operative - 0.25).abs() < 1e-12);
        assert!(report.kappa_hat > 0.0);
        assert!(report.gap_lower_bound > 0.0);
        let freqs: Vec<f64> =
            report.horizons.iter().map(|h| h.tail_frequency).collect();
        assert!(
            freqs.windows(2).all(|w| w[0] >= w[1]),
            "tail frequencies rose: {freqs:?}"
        );
        assert!(
            freqs[0] > freqs[freqs.len() - 1],
            "no visible decay: {freqs:?}"
        );
        let slope = report.horizons.last().unwrap().mean_slope;
        assert!((slope - 0.125).abs() < 0.02, "slope {slope} far from 1/8");
    }

    #[test]
    fn bad_designs_are_rejected() {
        let spec = MeasureSpec::Product {
            first: demo_table(),
            second: FactorMeasure::Srw { rank: 2 },
        };
        let base = GapParams {
            horizons: vec![40, 80],
            trials: 8,
            calibration_trials: 8,
            quantile: 0.1,
            seed: 7,
        };
        for bad in [
            GapParams { horizons: vec![], ..base.clone() },
            GapParams { horizons: vec![80, 40], ..base.clone() },
            GapParams { trials: 1, ..base.clone() },
            GapParams { quantile: 1.0, ..base.clone() },
        ] {
            assert!(matches!(
                pivotal_gap_report(&spec, &bad),
                Err(PivotalError::Invalid(_))
            ));
        }
    }
}
