//! Avalanche (asymptotic) entropy estimation.
//!
//! Two routes are kept deliberately separate so they can check each other:
//! an exact one through the radial law, whose entropy increment
//! H(mu_{n+1}) - H(mu_n) converges to h from above, and a Monte Carlo
//! plug-in route that averages -(1/n) log pi_n(w_n) over sampled endpoints.
//! The plug-in estimator is unbiased for H(mu_n)/n at the same horizon, so
//! comparisons are always made at matching n (H_n/n itself sits visibly
//! above h at any feasible horizon).

use rayon::prelude::*;

use crate::conditional::conditional_entropy_estimate;
use crate::error::{unsupported, WalkError};
use crate::joint::joint_distribution;
use crate::measure::{FactorMeasure, MeasureSpec};
use crate::radial::{radial_profile, RadialEvolution};
use crate::rng::trial_rng;
use crate::stats::RunningStat;
use crate::trajectory::Walker;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyMethod {
    /// Exact entropy increment of the radial law at horizon n.
    ExactRadial,
    /// Monte Carlo plug-in over sampled endpoints at horizon n.
    McPlugin,
}

#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub method: EntropyMethod,
    pub n: usize,
    pub estimate: f64,
    /// Absent for exact computations.
    pub stderr: Option<f64>,
    pub diagnostics: Vec<(String, f64)>,
}

/// Joint anchors are exact out to this horizon; beyond it the conditional
/// rate is bridged by Monte Carlo and extrapolated in 1/n.
const ANCHOR_TIMES: [usize; 2] = [5, 6];
const BRIDGE_TIMES: [usize; 3] = [12, 16, 20];

fn radial_increment(factor: &FactorMeasure, n: usize) -> Result<(f64, f64, f64), WalkError> {
    let law = factor
        .radial_law()
        .ok_or_else(|| unsupported("entropy", factor.describe()))?;
    let mut evo = RadialEvolution::new(law);
    evo.advance_to(n);
    let h_n = evo.profile().entropy();
    evo.advance();
    let h_next = evo.profile().entropy();
    Ok((h_next - h_n, h_n, h_n / n.max(1) as f64))
}

fn exact_radial(spec: &MeasureSpec, n: usize) -> Result<EntropyReport, WalkError> {
    let (estimate, diagnostics) = match spec {
        MeasureSpec::Factor(f) => {
            let (inc, h_n, rate) = radial_increment(f, n)?;
            (inc, vec![("entropy_at_n".into(), h_n), ("entropy_over_n".into(), rate)])
        }
        MeasureSpec::Product { first, second } => {
            let (i1, h1, _) = radial_increment(first, n)?;
            let (i2, h2, _) = radial_increment(second, n)?;
            (
                i1 + i2,
                vec![
                    ("entropy_at_n".into(), h1 + h2),
                    ("entropy_over_n".into(), (h1 + h2) / n.max(1) as f64),
                ],
            )
        }
        // The second coordinate is a function of the first, so the pair walk
        // carries exactly the entropy of its base.
        MeasureSpec::DiagonalPush { base } => {
            let (inc, h_n, rate) = radial_increment(base, n)?;
            (inc, vec![("entropy_at_n".into(), h_n), ("entropy_over_n".into(), rate)])
        }
        MeasureSpec::NoiseMixture { .. } => {
            return Err(unsupported(
                "entropy",
                "the mixture's joint law is not radial; use the plug-in route",
            ))
        }
        MeasureSpec::PairTable { .. } => {
            return Err(unsupported("entropy", "no closed radial form for a raw pair table"))
        }
    };
    Ok(EntropyReport { method: EntropyMethod::ExactRadial, n, estimate, stderr: None, diagnostics })
}

/// Ordinary least squares for y = intercept + slope * x, plus the hat-row
/// weights of the intercept so sampling noise can be pushed through the fit.
fn fit_intercept(xs: &[f64], ys: &[f64], sigmas: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let s_xx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let s_xy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let slope = s_xy / s_xx;
    let intercept = y_bar - slope * x_bar;
    let mut var = 0.0;
    let mut rss = 0.0;
    for ((x, y), sigma) in xs.iter().zip(ys).zip(sigmas) {
        let a = 1.0 / n - x_bar * (x - x_bar) / s_xx;
        var += a * a * sigma * sigma;
        let fitted = intercept + slope * x;
        rss += (y - fitted) * (y - fitted);
    }
    let model_rms = (rss / n.max(1.0)).sqrt();
    (intercept, slope, (var + model_rms * model_rms).sqrt())
}

/// h(pi) for the noise mixture as h(mu) plus the conditional rate
/// g = lim H(w_n | w*_n)/n, the latter extrapolated from exact joint tables
/// at small n and bridge estimates further out.
fn mixture_pipeline(
    spec: &MeasureSpec,
    base: &FactorMeasure,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<EntropyReport, WalkError> {
    let (base_inc, _, _) = radial_increment(base, n)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sigmas = Vec::new();
    let mut diagnostics: Vec<(String, f64)> = Vec::new();

    for &t in &ANCHOR_TIMES {
        let rate = joint_distribution(spec, t)?.conditional_entropy_given_second() / t as f64;
        xs.push(1.0 / t as f64);
        ys.push(rate);
        sigmas.push(0.0);
        diagnostics.push((format!("anchor_rate_{t}"), rate));
    }
    for (i, &t) in BRIDGE_TIMES.iter().enumerate() {
        let report = conditional_entropy_estimate(spec, t, trials, seed.wrapping_add(1 + i as u64))?;
        xs.push(1.0 / t as f64);
        ys.push(report.estimate);
        sigmas.push(report.stderr);
        diagnostics.push((format!("bridge_rate_{t}"), report.estimate));
        diagnostics.push((format!("bridge_stderr_{t}"), report.stderr));
    }

    let (g_hat, c_hat, g_err) = fit_intercept(&xs, &ys, &sigmas);
    diagnostics.push(("conditional_rate".into(), g_hat));
    diagnostics.push(("finite_size_slope".into(), c_hat));
    diagnostics.push(("base_increment".into(), base_inc));

    Ok(EntropyReport {
        method: EntropyMethod::McPlugin,
        n,
        estimate: base_inc + g_hat,
        stderr: Some(g_err),
        diagnostics,
    })
}

/// log pi_n evaluated at a sampled endpoint, when the law factorizes through
/// radial profiles.
fn mc_plugin(
    spec: &MeasureSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<EntropyReport, WalkError> {
    if let MeasureSpec::Factor(FactorMeasure::PointMass { .. }) = spec {
        return Ok(EntropyReport {
            method: EntropyMethod::McPlugin,
            n,
            estimate: 0.0,
            stderr: Some(0.0),
            diagnostics: vec![("entropy_over_n".into(), 0.0)],
        });
    }
    if let MeasureSpec::NoiseMixture { base, .. } = spec {
        return mixture_pipeline(spec, base, n, trials, seed);
    }
    if n == 0 || trials == 0 {
        return Err(WalkError::InvalidSpec("plug-in entropy needs n >= 1 and trials >= 1".into()));
    }

    enum PointLaw {
        First(crate::radial::RadialProfile),
        Both(crate::radial::RadialProfile, crate::radial::RadialProfile),
    }
    let (law, exact_rate) = match spec {
        MeasureSpec::Factor(f) => {
            let p = radial_profile(f, n)?;
            let rate = p.entropy() / n as f64;
            (PointLaw::First(p), rate)
        }
        MeasureSpec::DiagonalPush { base } => {
            let p = radial_profile(base, n)?;
            let rate = p.entropy() / n as f64;
            (PointLaw::First(p), rate)
        }
        MeasureSpec::Product { first, second } => {
            let p1 = radial_profile(first, n)?;
            let p2 = radial_profile(second, n)?;
            let rate = (p1.entropy() + p2.entropy()) / n as f64;
            (PointLaw::Both(p1, p2), rate)
        }
        MeasureSpec::PairTable { .. } => {
            return Err(unsupported("entropy", "no pointwise law for a raw pair table"))
        }
        _ => unreachable!("handled above"),
    };

    let prepared = spec.prepare()?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut walker = Walker::new(&prepared, trial_rng(seed, trial as u64));
            for _ in 0..n {
                walker.step();
            }
            let pos = walker.position();
            let log_mass = match &law {
                PointLaw::First(p) => p.log_point_mass(pos.first().len()),
                PointLaw::Both(p1, p2) => {
                    p1.log_point_mass(pos.first().len()) + p2.log_point_mass(pos.second().len())
                }
            };
            -log_mass / n as f64
        })
        .collect();

    let mut stat = RunningStat::new();
    for v in &values {
        stat.push(*v);
    }
    Ok(EntropyReport {
        method: EntropyMethod::McPlugin,
        n,
        estimate: stat.mean(),
        stderr: Some(stat.stderr()),
        diagnostics: vec![("entropy_over_n".into(), exact_rate)],
    })
}

pub fn entropy_estimate(
    spec: &MeasureSpec,
    method: EntropyMethod,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<EntropyReport, WalkError> {
    match method {
        EntropyMethod::ExactRadial => exact_radial(spec, n),
        EntropyMethod::McPlugin => mc_plugin(spec, n, trials, seed),
    }
}
