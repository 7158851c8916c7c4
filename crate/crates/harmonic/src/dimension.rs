//! Local dimension of a boundary measure from ball masses.
//!
//! The quasi-metric ball B(ξ, e⁻ʲ) is the cylinder of ξ's (j+1)-prefix, so
//! empirical ball masses are prefix-agreement counts and the local dimension
//! log ν(B(ξ,r))/log r is the slope of log mass against -j. Pair samples use
//! the max quasi-metric: a pair lies in the ball iff both coordinates agree
//! with the center to depth j+1.
//!
//! The smallest ball in the radius window must hold at least MIN_HITS
//! samples (own counts for a single-center fit, the median over centers for
//! a summary) or the window shrinks, and the shrink is reported rather than
//! hidden: a slope fitted through empty balls says nothing about the
//! measure. Summaries report the mean of per-level log-mass increments,
//! which stays unbiased when cell masses spread over several scales, and
//! keep the per-center fits only as spread diagnostics.

use free_group::{BoundaryApprox, PairBoundary};
use rayon::prelude::*;
use walk::{MeasureSpec, RunningStat};

use crate::doob::{doob_limit_points, DoobWalkSpec};
use crate::error::{invalid, HarmonicError};
use crate::hitting::ExactHittingMeasure;

const MIN_HITS: usize = 10;

/// Ball masses over a geometric radius grid and the fitted slope.
#[derive(Debug, Clone)]
pub struct DimensionFit {
    radii: Vec<f64>,
    masses: Vec<f64>,
    dimension: f64,
    residual: f64,
    sample_count: usize,
    window: (usize, usize),
    window_shrunk: bool,
}

impl DimensionFit {
    /// Radii e⁻ʲ, decreasing.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    /// Root mean square deviation of log mass from the fitted line.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Zero means the masses were computed in closed form, not sampled.
    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Exponent range (lo, hi) actually used, inclusive.
    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    pub fn window_shrunk(&self) -> bool {
        self.window_shrunk
    }
}

/// Per-center fits aggregated over many centers of one sample pool.
#[derive(Debug, Clone)]
pub struct DimensionSummary {
    dimension: f64,
    center_sd: f64,
    center_dimensions: Vec<f64>,
    half_window_dimension: f64,
    centers_dropped: usize,
    representative: DimensionFit,
}

impl DimensionSummary {
    /// Pooled slope estimate: the mean over window levels of the per-level
    /// increment of log ball mass, each increment averaged over centers.
    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    /// Spread of the per-center fitted slopes; small values are the
    /// exact-dimensionality diagnostic (the local dimension should not
    /// depend on the center), large values flag a multifractal spectrum.
    pub fn center_sd(&self) -> f64 {
        self.center_sd
    }

    /// Count-weighted per-center fits, kept for the spread diagnostics.
    /// Their mean is not the summary dimension; see `dimension`.
    pub fn center_dimensions(&self) -> &[f64] {
        &self.center_dimensions
    }

    /// Mean slope refitted on the coarse half of the window; agreement with
    /// `dimension` indicates the fit is not scale-sensitive.
    pub fn half_window_dimension(&self) -> f64 {
        self.half_window_dimension
    }

    /// Centers with an empty largest ball (no neighbor at the coarsest
    /// radius); they cannot carry a fit at any scale and are excluded.
    pub fn centers_dropped(&self) -> usize {
        self.centers_dropped
    }

    /// Full fit at the first usable center, for plotting.
    pub fn representative(&self) -> &DimensionFit {
        &self.representative
    }

    pub fn window(&self) -> (usize, usize) {
        self.representative.window
    }

    pub fn window_shrunk(&self) -> bool {
        self.representative.window_shrunk
    }

    pub fn sample_count(&self) -> usize {
        self.representative.sample_count
    }
}

/// The default exponent window for samples stabilized to `depth`,
/// j from 2 to depth-2.
pub fn fit_window(depth: usize) -> Result<(usize, usize), HarmonicError> {
    if depth < 5 {
        return Err(invalid(format!(
            "sample depth {depth} leaves no radius window; need depth >= 5"
        )));
    }
    Ok((2, depth - 2))
}

/// Weighted least squares slope of y against x, with weighted rms residual.
/// Points with weight 0 drop out entirely.
fn fit_weighted(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let wsum: f64 = points.iter().map(|p| p.2).sum();
    debug_assert!(wsum > 0.0);
    let x_mean = points.iter().map(|(x, _, w)| w * x).sum::<f64>() / wsum;
    let y_mean = points.iter().map(|(_, y, w)| w * y).sum::<f64>() / wsum;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y, w) in points {
        sxx += w * (x - x_mean) * (x - x_mean);
        sxy += w * (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let mut ss = 0.0;
    for (x, y, w) in points {
        let d = y - (y_mean + slope * (x - x_mean));
        ss += w * d * d;
    }
    (slope, (ss / wsum).sqrt())
}

/// Unweighted fit of log masses over the whole window, for closed-form
/// mass curves.
fn fit_log_log(window: (usize, usize), log_masses: &[f64]) -> (f64, f64) {
    debug_assert_eq!(log_masses.len(), window.1 - window.0 + 1);
    let points: Vec<(f64, f64, f64)> = (window.0..=window.1)
        .zip(log_masses)
        .map(|(j, &y)| (-(j as f64), y, 1.0))
        .collect();
    fit_weighted(&points)
}

fn check_window(window: (usize, usize)) -> Result<(), HarmonicError> {
    if window.0 < 1 || window.1 <= window.0 {
        return Err(invalid(format!(
            "radius window needs 1 <= lo < hi, got ({}, {})",
            window.0, window.1
        )));
    }
    Ok(())
}

/// Prefix agreement deciding membership of a sample in balls around a
/// center: the sample lies in B(center, e⁻ʲ) iff agreement >= j+1.
trait QBallPoint: Sync {
    fn agreement(&self, center: &Self) -> usize;
    fn resolution(&self) -> usize;
    fn compatible(&self, center: &Self) -> bool;
}

impl QBallPoint for BoundaryApprox {
    fn agreement(&self, center: &Self) -> usize {
        self.prefix().common_prefix_len(center.prefix())
    }

    fn resolution(&self) -> usize {
        self.depth()
    }

    fn compatible(&self, center: &Self) -> bool {
        self.group() == center.group()
    }
}

impl QBallPoint for PairBoundary {
    fn agreement(&self, center: &Self) -> usize {
        let first = self.first().prefix().common_prefix_len(center.first().prefix());
        let second = self.second().prefix().common_prefix_len(center.second().prefix());
        first.min(second)
    }

    fn resolution(&self) -> usize {
        self.first().depth().min(self.second().depth())
    }

    fn compatible(&self, center: &Self) -> bool {
        self.first().group() == center.first().group()
            && self.second().group() == center.second().group()
    }
}

/// Hits per exponent j in window, counting samples with agreement >= j+1.
/// One pass: bucket agreements, then suffix-sum.
fn ball_counts<P: QBallPoint>(
    samples: &[P],
    center: &P,
    skip: Option<usize>,
    window: (usize, usize),
) -> Vec<usize> {
    let (lo, hi) = window;
    let mut buckets = vec![0usize; hi + 2];
    for (i, s) in samples.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        buckets[s.agreement(center).min(hi + 1)] += 1;
    }
    let mut suffix = vec![0usize; hi + 2];
    let mut acc = 0usize;
    for a in (0..=hi + 1).rev() {
        acc += buckets[a];
        suffix[a] = acc;
    }
    (lo..=hi).map(|j| suffix[j + 1]).collect()
}

fn validate_pool<P: QBallPoint>(
    samples: &[P],
    center: &P,
    window: (usize, usize),
) -> Result<(), HarmonicError> {
    check_window(window)?;
    if samples.is_empty() {
        return Err(invalid("no samples to fit"));
    }
    if !samples.iter().all(|s| s.compatible(center)) {
        return Err(invalid("samples and center live on different boundaries"));
    }
    let need = window.1 + 1;
    let shallow = samples.iter().map(|s| s.resolution()).min().unwrap().min(center.resolution());
    if shallow < need {
        return Err(invalid(format!(
            "window top {} needs prefixes of depth {need}, but the pool only resolves {shallow}",
            window.1
        )));
    }
    Ok(())
}

/// Largest usable hi: smallest ball must hold at least MIN_HITS samples.
fn shrink_window(
    counts: &[usize],
    window: (usize, usize),
) -> Result<(usize, bool), HarmonicError> {
    let (lo, hi) = window;
    let mut new_hi = hi;
    while new_hi > lo && counts[new_hi - lo] < MIN_HITS {
        new_hi -= 1;
    }
    if new_hi == lo && counts[0] < MIN_HITS {
        return Err(invalid(format!(
            "radius window is empty: even the largest ball e^-{lo} holds only {} of the \
             required {MIN_HITS} samples",
            counts[0]
        )));
    }
    if new_hi == lo {
        return Err(invalid(format!(
            "radius window collapsed to the single exponent {lo}; no slope can be fitted"
        )));
    }
    Ok((new_hi, new_hi < hi))
}

/// Fits empirical counts with per-level weights proportional to the count,
/// the inverse variance of a log Poisson level. Thin levels then inform the
/// slope weakly instead of distorting it (the log of a conditioned small
/// count is badly biased), and empty levels drop out. None if fewer than
/// two levels are populated.
fn fit_counts(
    counts: &[usize],
    total: usize,
    window: (usize, usize),
    window_shrunk: bool,
) -> Option<DimensionFit> {
    let (lo, hi) = window;
    let used = &counts[..=hi - lo];
    for pair in used.windows(2) {
        assert!(pair[0] >= pair[1], "ball masses must be nondecreasing in the radius");
    }
    let points: Vec<(f64, f64, f64)> = used
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| {
            let mass = c as f64 / total as f64;
            (-((lo + k) as f64), mass.ln(), c as f64)
        })
        .collect();
    if points.len() < 2 {
        return None;
    }
    let (dimension, residual) = fit_weighted(&points);
    Some(DimensionFit {
        radii: (lo..=hi).map(|j| (-(j as f64)).exp()).collect(),
        masses: used.iter().map(|&c| c as f64 / total as f64).collect(),
        dimension,
        residual,
        sample_count: total,
        window,
        window_shrunk,
    })
}

fn fit_around<P: QBallPoint>(
    samples: &[P],
    center: &P,
    skip: Option<usize>,
    window: (usize, usize),
) -> Result<DimensionFit, HarmonicError> {
    validate_pool(samples, center, window)?;
    let counts = ball_counts(samples, center, skip, window);
    let (hi, shrunk) = shrink_window(&counts, window)?;
    let total = samples.len() - usize::from(skip.is_some());
    Ok(fit_counts(&counts, total, (window.0, hi), shrunk)
        .expect("window levels all hold MIN_HITS positive counts"))
}

/// Empirical ball masses around one center and the log-log slope.
pub fn ball_mass_and_dimension_fit(
    samples: &[BoundaryApprox],
    center: &BoundaryApprox,
    window: (usize, usize),
) -> Result<DimensionFit, HarmonicError> {
    fit_around(samples, center, None, window)
}

/// Same fit for boundary pairs; balls are products of factor balls.
pub fn pair_ball_mass_and_dimension_fit(
    samples: &[PairBoundary],
    center: &PairBoundary,
    window: (usize, usize),
) -> Result<DimensionFit, HarmonicError> {
    fit_around(samples, center, None, window)
}

/// Slope of the exact cylinder masses, no sampling anywhere.
pub fn exact_dimension_fit(
    measure: &ExactHittingMeasure,
    window: (usize, usize),
) -> Result<DimensionFit, HarmonicError> {
    check_window(window)?;
    let (lo, hi) = window;
    let log_masses: Vec<f64> =
        (lo..=hi).map(|j| measure.log_cylinder_mass_by_len(j + 1)).collect();
    let (dimension, residual) = fit_log_log(window, &log_masses);
    Ok(DimensionFit {
        radii: (lo..=hi).map(|j| (-(j as f64)).exp()).collect(),
        masses: log_masses.iter().map(|lm| lm.exp()).collect(),
        dimension,
        residual,
        sample_count: 0,
        window,
        window_shrunk: false,
    })
}

fn summarize<P: QBallPoint>(
    samples: &[P],
    centers: usize,
    window: (usize, usize),
) -> Result<DimensionSummary, HarmonicError> {
    if centers < 2 {
        return Err(invalid("a dimension summary needs at least 2 centers"));
    }
    if samples.len() < 2 * centers {
        return Err(invalid(format!(
            "{} samples cannot support {centers} centers",
            samples.len()
        )));
    }
    let stride = samples.len() / centers;
    let picks: Vec<usize> = (0..centers).map(|k| k * stride).collect();
    validate_pool(samples, &samples[0], window)?;

    let counted: Vec<Vec<usize>> = picks
        .par_iter()
        .map(|&i| ball_counts(samples, &samples[i], Some(i), window))
        .collect();

    // All centers share one window so their slopes stay comparable, and the
    // window reaches only as deep as a typical center still sees hits: hi
    // shrinks until the median count in the smallest ball is MIN_HITS. A
    // mean-count rule would let a few high-mass cells hold the window open
    // long after ordinary centers have run out of neighbors, and a
    // per-center threshold would keep only high-mass cells outright; both
    // bias the slope low on multifractal measures.
    let mut hi = window.1;
    loop {
        if hi == window.0 {
            return Err(invalid(format!(
                "radius window collapsed to the single exponent {}; no slope can be fitted",
                window.0
            )));
        }
        let at_hi = hi - window.0;
        let mut at: Vec<usize> = counted.iter().map(|c| c[at_hi]).collect();
        at.sort_unstable();
        if at[at.len() / 2] >= MIN_HITS {
            break;
        }
        hi -= 1;
    }

    let total = samples.len() - 1;
    let fits: Vec<DimensionFit> = counted
        .iter()
        .filter_map(|counts| fit_counts(counts, total, (window.0, hi), hi < window.1))
        .collect();
    let centers_dropped = centers - fits.len();
    if fits.len() < 2 {
        return Err(invalid(format!(
            "radius window is empty: {centers_dropped} of {centers} centers have no \
             neighbors at the coarsest radius e^-{}",
            window.0
        )));
    }
    let shrunk = hi < window.1 || centers_dropped > 0;

    let mut stat = RunningStat::new();
    for f in &fits {
        stat.push(f.dimension);
    }

    // The reported dimension is the mean over window levels of the quenched
    // increment E[log c_j - log c_(j+1)], each averaged over the centers
    // with a hit left in the smaller ball. Averaging per-center fitted
    // slopes looks natural but is biased low on multifractal measures: a
    // center in a high-mass cell keeps large counts deep into the window,
    // its count-weighted fit then leans on exactly the levels where its
    // local slope is smallest, and such centers dominate the mean. Level
    // increments carry no count weighting and track the typical slope.
    let increment_mean = |top: usize| -> f64 {
        let mut level_sum = 0.0;
        let mut levels = 0usize;
        for j in window.0..top {
            let mut s = 0.0;
            let mut m = 0usize;
            for counts in &counted {
                let big = counts[j - window.0];
                let small = counts[j + 1 - window.0];
                if small > 0 {
                    s += (big as f64 / small as f64).ln();
                    m += 1;
                }
            }
            debug_assert!(m > 0, "median rule keeps the smaller ball populated");
            level_sum += s / m as f64;
            levels += 1;
        }
        level_sum / levels as f64
    };
    let half_hi = (window.0 + 1).max(window.0 + (hi - window.0) / 2);

    let mut representative = fits[0].clone();
    representative.window_shrunk = shrunk;
    Ok(DimensionSummary {
        dimension: increment_mean(hi),
        center_sd: stat.stddev(),
        center_dimensions: fits.iter().map(|f| f.dimension).collect(),
        half_window_dimension: increment_mean(half_hi),
        centers_dropped,
        representative,
    })
}

/// Local dimension averaged over centers drawn from the pool itself; each
/// center is left out of its own counts.
pub fn point_dimension_summary(
    samples: &[BoundaryApprox],
    centers: usize,
    window: (usize, usize),
) -> Result<DimensionSummary, HarmonicError> {
    summarize(samples, centers, window)
}

pub fn pair_dimension_summary(
    samples: &[PairBoundary],
    centers: usize,
    window: (usize, usize),
) -> Result<DimensionSummary, HarmonicError> {
    summarize(samples, centers, window)
}

/// How many conditioned walks to run and how deep to certify them.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalParams {
    pub samples: usize,
    pub depth: usize,
    pub centers: usize,
    pub seed: u64,
}

/// Dimension of the conditional measure on the first boundary given the
/// second coordinate's limit: the law of the Doob-conditioned walk's first
/// coordinate, fitted like any other point pool.
pub fn conditional_dimension_estimate(
    base: &MeasureSpec,
    eta: &BoundaryApprox,
    params: &ConditionalParams,
) -> Result<DimensionSummary, HarmonicError> {
    let spec = DoobWalkSpec { base: base.clone(), target: eta.clone() };
    let points = doob_limit_points(&spec, params.depth, params.samples, params.seed)?;
    if points.iter().all(|p| p.prefix() == points[0].prefix()) {
        // Degenerate conditionals (all mass on one point) defeat the hit
        // threshold logic: every ball is full, the dimension is 0.
        let window = fit_window(params.depth)?;
        if points.len() < 3 {
            return Err(invalid("conditioned sampling needs at least 3 samples"));
        }
        let counts = vec![points.len() - 1; window.1 - window.0 + 1];
        let fit = fit_counts(&counts, points.len() - 1, window, false)
            .expect("full windows always fit");
        return Ok(DimensionSummary {
            dimension: fit.dimension,
            center_sd: 0.0,
            center_dimensions: vec![fit.dimension; params.centers.max(1)],
            half_window_dimension: fit.dimension,
            centers_dropped: 0,
            representative: fit,
        });
    }
    summarize(&points, params.centers, fit_window(params.depth)?)
}
