//! Dimension conservation: the full boundary measure against its conditional
//! and marginal pieces.
//!
//! For a pair-valued walk the harmonic measure lives on ∂Γ × ∂Γ*, the second
//! coordinate's limit law is the marginal ν*, and conditioning on that limit
//! leaves a measure on ∂Γ alone. Conservation says the three local dimensions
//! add up: dim ν = dim ν^η + dim ν*. The report estimates each piece from its
//! own sample pool and exposes the residual instead of asserting it away.
//!
//! The additivity statement assumes the first coordinate escapes at least as
//! fast as the second. When the input is ordered the other way round the
//! report swaps the coordinates itself and says so, rather than quietly
//! fitting a measure the statement does not cover.

use free_group::{boundary_translate, BoundaryApprox, PairBoundary, ProductElement, ReducedWord};
use walk::{drift_estimate, mix_seed, MeasureSpec, RadialLaw, RunningStat};

use crate::dimension::{
    conditional_dimension_estimate, fit_window, pair_dimension_summary, point_dimension_summary,
    ConditionalParams, DimensionSummary,
};
use crate::error::{invalid, unsupported, HarmonicError};
use crate::sample::sample_boundary_pairs;

/// Pool sizes and depths for one conservation report.
///
/// `samples` boundary pairs at stabilization depth `depth` feed the full and
/// marginal fits; `eta_count` conditioning targets of depth `eta_depth` are
/// drawn from the marginal, and each one gets `doob_samples` conditioned
/// walks stabilized to `doob_depth`. A conditioned walk consumes target
/// depth as it runs, so `eta_depth` should be several times `doob_depth`.
#[derive(Debug, Clone, Copy)]
pub struct ConservationParams {
    pub samples: usize,
    pub depth: usize,
    pub eta_count: usize,
    pub eta_depth: usize,
    pub doob_samples: usize,
    pub doob_depth: usize,
    pub centers: usize,
    pub seed: u64,
}

/// The three dimension estimates and their defect.
#[derive(Debug, Clone)]
pub struct ConservationReport {
    description: String,
    swapped: bool,
    first_drift: f64,
    second_drift: f64,
    full: DimensionSummary,
    marginal: DimensionSummary,
    conditional: Vec<f64>,
    conditional_mean: f64,
    eta_depth: usize,
    depth_check: (f64, f64),
    residual: f64,
}

impl ConservationReport {
    /// The measure actually analyzed, after any coordinate swap.
    pub fn description(&self) -> &str {
        &self.description
    }

    /// True when the input had the slower coordinate first and the report
    /// swapped them to restore the drift ordering l >= l*.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    /// Per-coordinate escape rates in the analyzed order, closed-form when
    /// the marginals are radial and sampled otherwise.
    pub fn drifts(&self) -> (f64, f64) {
        (self.first_drift, self.second_drift)
    }

    pub fn full(&self) -> &DimensionSummary {
        &self.full
    }

    pub fn marginal(&self) -> &DimensionSummary {
        &self.marginal
    }

    /// Conditional dimension per sampled target.
    pub fn conditional_dimensions(&self) -> &[f64] {
        &self.conditional
    }

    pub fn conditional_mean(&self) -> f64 {
        self.conditional_mean
    }

    pub fn eta_depth(&self) -> usize {
        self.eta_depth
    }

    /// Conditional dimension of the first target at full and at half target
    /// depth; a gap flags that the finite approximation of η is biting.
    pub fn depth_check(&self) -> (f64, f64) {
        self.depth_check
    }

    /// dim ν̂ − (mean dim ν̂^η + dim ν̂*); conservation predicts zero.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Escape rate of a radial walk: a non-holding step moves outward with
/// probability (rank−1)/rank once the current word is nonempty.
fn radial_drift(law: RadialLaw) -> f64 {
    (1.0 - law.holding) * (law.rank as f64 - 1.0) / law.rank as f64
}

fn coordinate_drifts(spec: &MeasureSpec, seed: u64) -> Result<(f64, f64), HarmonicError> {
    if let (Some(first), Some(second)) =
        (spec.first_marginal_radial(), spec.second_marginal_radial())
    {
        return Ok((radial_drift(first), radial_drift(second)));
    }
    let report = drift_estimate(spec, 400, 32, mix_seed(seed, 11))?;
    let second = report
        .second
        .ok_or_else(|| invalid("dimension conservation needs a pair-valued measure"))?;
    Ok((report.first.value, second.value))
}

fn swap_coordinates(spec: &MeasureSpec) -> Result<MeasureSpec, HarmonicError> {
    match spec {
        MeasureSpec::Product { first, second } => {
            Ok(MeasureSpec::Product { first: second.clone(), second: first.clone() })
        }
        MeasureSpec::PairTable { entries } => Ok(MeasureSpec::PairTable {
            entries: entries
                .iter()
                .map(|(x, p)| (ProductElement::new(x.second().clone(), x.first().clone()), *p))
                .collect(),
        }),
        // The mixture is coordinate-symmetric and the push is 1-Lipschitz
        // onto the second coordinate, so neither can have the faster walk
        // second; reaching this arm means the drift comparison was noise.
        MeasureSpec::NoiseMixture { .. } | MeasureSpec::DiagonalPush { .. } => Ok(spec.clone()),
        MeasureSpec::Factor(_) => {
            Err(unsupported("coordinate swap", "a single-factor walk has no second coordinate"))
        }
    }
}

/// Estimates all three dimensions of the conservation identity from fresh
/// pools and reports the residual. Coordinates are reordered first if the
/// second one escapes faster, and the swap is recorded in the report.
pub fn dimension_conservation_report(
    spec: &MeasureSpec,
    params: &ConservationParams,
) -> Result<ConservationReport, HarmonicError> {
    if !spec.is_pair() {
        return Err(invalid("dimension conservation needs a pair-valued measure"));
    }
    if params.eta_count == 0 {
        return Err(invalid("dimension conservation needs at least one conditioning target"));
    }
    let (l1, l2) = coordinate_drifts(spec, params.seed)?;
    let swapped = l2 > l1;
    let used = if swapped { swap_coordinates(spec)? } else { spec.clone() };
    let (first_drift, second_drift) = if swapped { (l2, l1) } else { (l1, l2) };

    let window = fit_window(params.depth)?;
    let pairs = sample_boundary_pairs(&used, params.depth, params.samples, mix_seed(params.seed, 5))?;
    let full = pair_dimension_summary(&pairs, params.centers, window)?;
    let seconds: Vec<BoundaryApprox> = pairs.iter().map(|p| p.second().clone()).collect();
    drop(pairs);
    let marginal = point_dimension_summary(&seconds, params.centers, window)?;
    drop(seconds);

    let targets =
        sample_boundary_pairs(&used, params.eta_depth, params.eta_count, mix_seed(params.seed, 7))?;
    let mut conditional = Vec::with_capacity(params.eta_count);
    for (i, target) in targets.iter().enumerate() {
        let cp = ConditionalParams {
            samples: params.doob_samples,
            depth: params.doob_depth,
            centers: params.centers,
            seed: mix_seed(params.seed, 100 + i as u64),
        };
        conditional.push(conditional_dimension_estimate(&used, target.second(), &cp)?.dimension());
    }
    let conditional_mean = conditional.iter().sum::<f64>() / conditional.len() as f64;

    let half_depth = (params.eta_depth / 2).max(8).min(params.eta_depth);
    let half_target = targets[0].second().truncated(half_depth)?;
    let half_params = ConditionalParams {
        samples: params.doob_samples,
        depth: params.doob_depth,
        centers: params.centers,
        seed: mix_seed(params.seed, 100),
    };
    let depth_check =
        (conditional[0], conditional_dimension_estimate(&used, &half_target, &half_params)?.dimension());

    let residual = full.dimension() - (conditional_mean + marginal.dimension());
    Ok(ConservationReport {
        description: used.describe(),
        swapped,
        first_drift,
        second_drift,
        full,
        marginal,
        conditional,
        conditional_mean,
        eta_depth: params.eta_depth,
        depth_check,
        residual,
    })
}

/// One cylinder event probed by the stationarity test.
#[derive(Debug, Clone)]
pub struct StationarityEvent {
    label: String,
    measure_mass: f64,
    convolved_mass: f64,
    z_score: f64,
}

impl StationarityEvent {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Empirical mass ν̂(E).
    pub fn measure_mass(&self) -> f64 {
        self.measure_mass
    }

    /// Empirical mass of the convolution Σ_s π(s)·ν̂(s⁻¹E).
    pub fn convolved_mass(&self) -> f64 {
        self.convolved_mass
    }

    /// |mean| / stderr of the paired per-sample difference.
    pub fn z_score(&self) -> f64 {
        self.z_score
    }
}

#[derive(Debug, Clone)]
pub struct StationarityReport {
    events: Vec<StationarityEvent>,
}

impl StationarityReport {
    pub fn events(&self) -> &[StationarityEvent] {
        &self.events
    }

    pub fn max_z(&self) -> f64 {
        self.events.iter().map(|e| e.z_score).fold(0.0, f64::max)
    }
}

struct Event {
    label: String,
    first: Option<ReducedWord>,
    second: Option<ReducedWord>,
}

fn word(group: free_group::FreeGroupSpec, letters: &[i8]) -> ReducedWord {
    ReducedWord::from_letters(group, letters.to_vec()).expect("event letters are reduced")
}

/// Depth ≤ 3 product cylinders: every depth-1 cylinder in each coordinate,
/// two genuinely joint events, and a few deeper single-coordinate ones.
fn cylinder_events(g1: free_group::FreeGroupSpec, g2: free_group::FreeGroupSpec) -> Vec<Event> {
    let mut events = Vec::new();
    let letters = |rank: usize| (1..=rank as i8).flat_map(|a| [a, -a]).collect::<Vec<i8>>();
    for l in letters(g1.rank()) {
        events.push(Event { label: format!("first [{l}]"), first: Some(word(g1, &[l])), second: None });
    }
    for l in letters(g2.rank()) {
        events.push(Event { label: format!("second [{l}]"), first: None, second: Some(word(g2, &[l])) });
    }
    for l in [1i8, -1] {
        events.push(Event {
            label: format!("first [1] x second [{l}]"),
            first: Some(word(g1, &[1])),
            second: Some(word(g2, &[l])),
        });
    }
    let deep: &[&[i8]] = if g1.rank() >= 2 {
        &[&[1, 1], &[1, 2], &[1, 2, -1]]
    } else {
        &[&[1, 1], &[1, 1, 1]]
    };
    for ls in deep {
        events.push(Event { label: format!("first {ls:?}"), first: Some(word(g1, ls)), second: None });
    }
    events
}

fn starts_with(point: &BoundaryApprox, prefix: &ReducedWord) -> bool {
    point.prefix().common_prefix_len(prefix) == prefix.len()
}

fn hits(pair: &PairBoundary, event: &Event) -> bool {
    event.first.as_ref().is_none_or(|u| starts_with(pair.first(), u))
        && event.second.as_ref().is_none_or(|v| starts_with(pair.second(), v))
}

fn paired_stationarity(
    entries: &[(ProductElement, f64)],
    pairs: &[PairBoundary],
    events: &[Event],
) -> Result<StationarityReport, HarmonicError> {
    let mut stats = vec![RunningStat::new(); events.len()];
    let mut direct_mass = vec![0.0f64; events.len()];
    let mut convolved_mass = vec![0.0f64; events.len()];
    for pair in pairs {
        let translated: Vec<PairBoundary> = entries
            .iter()
            .map(|(s, _)| {
                Ok(PairBoundary::new(
                    boundary_translate(s.first(), pair.first())?,
                    boundary_translate(s.second(), pair.second())?,
                ))
            })
            .collect::<Result<_, HarmonicError>>()?;
        for (k, event) in events.iter().enumerate() {
            let direct = f64::from(hits(pair, event));
            let convolved: f64 = entries
                .iter()
                .zip(&translated)
                .map(|((_, p), t)| p * f64::from(hits(t, event)))
                .sum();
            direct_mass[k] += direct;
            convolved_mass[k] += convolved;
            stats[k].push(direct - convolved);
        }
    }
    let n = pairs.len() as f64;
    let reports = events
        .iter()
        .zip(&stats)
        .zip(direct_mass.iter().zip(&convolved_mass))
        .map(|((event, stat), (direct, convolved))| {
            let stderr = stat.stddev() / n.sqrt();
            let z_score = if stderr > 0.0 {
                stat.mean().abs() / stderr
            } else if stat.mean().abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            StationarityEvent {
                label: event.label.clone(),
                measure_mass: direct / n,
                convolved_mass: convolved / n,
                z_score,
            }
        })
        .collect();
    Ok(StationarityReport { events: reports })
}

/// Paired one-step stationarity test of the empirical harmonic measure: for
/// each cylinder event E the per-sample difference 1{ξ̄ ∈ E} − Σ_s π(s)·1{s·ξ̄ ∈ E}
/// has mean zero under stationarity, and sharing the samples across both
/// terms cancels most of the Monte Carlo variance. Z-scores near zero are
/// consistent with stationarity; values beyond 3 are not.
pub fn stationarity_check(
    spec: &MeasureSpec,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<StationarityReport, HarmonicError> {
    let prepared = spec.prepare()?;
    if depth < prepared.max_step() + 4 {
        return Err(invalid(format!(
            "stationarity events reach depth 3 and translation by a step loses up to {} letters; \
             sample depth {depth} is too shallow",
            prepared.max_step()
        )));
    }
    let pairs = sample_boundary_pairs(spec, depth, samples, seed)?;
    let events = cylinder_events(prepared.first_group(), prepared.second_group());
    paired_stationarity(prepared.entries(), &pairs, &events)
}
