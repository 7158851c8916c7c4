//! Step distributions: single-factor laws and the product-group measures built
//! from them (independent products, noise mixtures, diagonal pushforwards,
//! explicit pair tables).

use std::collections::BTreeMap;

use free_group::{FreeGroupSpec, KillLastGenerator, ProductElement, ReducedWord};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::WalkError;
use crate::stats::chi_square_p_value;

pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finitely supported step law on one free group.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorMeasure {
    /// Uniform on the 2m signed generators.
    Srw { rank: usize },
    /// Holds in place with probability `holding`, otherwise steps uniformly.
    LazySrw { rank: usize, holding: f64 },
    PointMass { word: ReducedWord },
    Table { entries: Vec<(ReducedWord, f64)> },
}

/// The shape shared by SRW and LazySRW: isotropic nearest-neighbor steps, so
/// the law of the walk at any time is uniform on each sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialLaw {
    pub rank: usize,
    pub holding: f64,
}

impl FactorMeasure {
    pub fn group(&self) -> Result<FreeGroupSpec, WalkError> {
        match self {
            FactorMeasure::Srw { rank } | FactorMeasure::LazySrw { rank, .. } => {
                Ok(FreeGroupSpec::new(*rank)?)
            }
            FactorMeasure::PointMass { word } => Ok(word.group()),
            FactorMeasure::Table { entries } => entries
                .first()
                .map(|(w, _)| w.group())
                .ok_or_else(|| WalkError::InvalidSpec("empty table support".into())),
        }
    }

    /// Materialized support with weights; validates the measure axioms.
    pub fn support(&self) -> Result<Vec<(ReducedWord, f64)>, WalkError> {
        let entries = match self {
            FactorMeasure::Srw { rank } => {
                let group = FreeGroupSpec::new(*rank)?;
                let w = 1.0 / group.letter_count() as f64;
                group
                    .letters()
                    .map(|l| Ok((ReducedWord::letter(group, l)?, w)))
                    .collect::<Result<Vec<_>, WalkError>>()?
            }
            FactorMeasure::LazySrw { rank, holding } => {
                if !(0.0..1.0).contains(holding) {
                    return Err(WalkError::InvalidSpec(format!(
                        "holding probability must be in [0, 1), got {holding}"
                    )));
                }
                let group = FreeGroupSpec::new(*rank)?;
                let w = (1.0 - holding) / group.letter_count() as f64;
                let mut entries = Vec::with_capacity(group.letter_count() + 1);
                if *holding > 0.0 {
                    entries.push((ReducedWord::identity(group), *holding));
                }
                for l in group.letters() {
                    entries.push((ReducedWord::letter(group, l)?, w));
                }
                entries
            }
            FactorMeasure::PointMass { word } => vec![(word.clone(), 1.0)],
            FactorMeasure::Table { entries } => {
                let group = self.group()?;
                for (w, p) in entries {
                    if w.group() != group {
                        return Err(WalkError::InvalidSpec(
                            "table entries span different groups".into(),
                        ));
                    }
                    if !(*p > 0.0) {
                        return Err(WalkError::InvalidSpec(format!(
                            "non-positive weight {p} on {w}"
                        )));
                    }
                }
                let mut sorted: Vec<_> = entries.iter().map(|(w, _)| w.clone()).collect();
                sorted.sort();
                if sorted.windows(2).any(|p| p[0] == p[1]) {
                    return Err(WalkError::InvalidSpec("duplicate table entry".into()));
                }
                entries.clone()
            }
        };
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(WalkError::InvalidSpec(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(entries)
    }

    pub fn radial_law(&self) -> Option<RadialLaw> {
        match self {
            FactorMeasure::Srw { rank } => Some(RadialLaw { rank: *rank, holding: 0.0 }),
            FactorMeasure::LazySrw { rank, holding } => {
                Some(RadialLaw { rank: *rank, holding: *holding })
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FactorMeasure::Srw { rank } => format!("srw(F_{rank})"),
            FactorMeasure::LazySrw { rank, holding } => format!("lazy-srw(F_{rank}, {holding})"),
            FactorMeasure::PointMass { word } => format!("point({word})"),
            FactorMeasure::Table { entries } => format!("table({} entries)", entries.len()),
        }
    }
}

/// A step law on the product Γ × Γ*. Single-factor walks are carried as the
/// `Factor` variant with a frozen identity in the second coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Factor(FactorMeasure),
    Product { first: FactorMeasure, second: FactorMeasure },
    /// π^ρ = ρ·μ×μ + (1−ρ)·μ_diag.
    NoiseMixture { rho: f64, base: FactorMeasure },
    /// Steps (x, Π(x)) with x ~ base; Π kills the last generator.
    DiagonalPush { base: FactorMeasure },
    PairTable { entries: Vec<(ProductElement, f64)> },
}

impl MeasureSpec {
    pub fn groups(&self) -> Result<(FreeGroupSpec, FreeGroupSpec), WalkError> {
        match self {
            MeasureSpec::Factor(f) => {
                let g = f.group()?;
                Ok((g, g))
            }
            MeasureSpec::Product { first, second } => Ok((first.group()?, second.group()?)),
            MeasureSpec::NoiseMixture { base, .. } => {
                let g = base.group()?;
                Ok((g, g))
            }
            MeasureSpec::DiagonalPush { base } => {
                let g = base.group()?;
                let pi = KillLastGenerator::new(g)?;
                Ok((g, pi.target()))
            }
            MeasureSpec::PairTable { entries } => entries
                .first()
                .map(|(x, _)| (x.first().group(), x.second().group()))
                .ok_or_else(|| WalkError::InvalidSpec("empty pair table".into())),
        }
    }

    /// True when both coordinates carry a genuine walk.
    pub fn is_pair(&self) -> bool {
        !matches!(self, MeasureSpec::Factor(_))
    }

    pub fn first_marginal_radial(&self) -> Option<RadialLaw> {
        match self {
            MeasureSpec::Factor(f) => f.radial_law(),
            MeasureSpec::Product { first, .. } => first.radial_law(),
            MeasureSpec::NoiseMixture { base, .. } => base.radial_law(),
            MeasureSpec::DiagonalPush { base } => base.radial_law(),
            MeasureSpec::PairTable { .. } => None,
        }
    }

    /// Radial shape of the second-coordinate marginal, when it has one. The
    /// pushforward of a lazy walk under the kill-last-generator map is again
    /// lazy: the killed generator's mass moves onto the identity.
    pub fn second_marginal_radial(&self) -> Option<RadialLaw> {
        match self {
            MeasureSpec::Factor(_) => None,
            MeasureSpec::Product { second, .. } => second.radial_law(),
            MeasureSpec::NoiseMixture { base, .. } => base.radial_law(),
            MeasureSpec::DiagonalPush { base } => {
                let law = base.radial_law()?;
                if law.rank < 2 {
                    return None;
                }
                let m = law.rank - 1;
                Some(RadialLaw {
                    rank: m,
                    holding: law.holding + (1.0 - law.holding) / (m + 1) as f64,
                })
            }
            MeasureSpec::PairTable { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MeasureSpec::Factor(f) => f.describe(),
            MeasureSpec::Product { first, second } => {
                format!("product({}, {})", first.describe(), second.describe())
            }
            MeasureSpec::NoiseMixture { rho, base } => {
                format!("noise-mixture(rho={rho}, {})", base.describe())
            }
            MeasureSpec::DiagonalPush { base } => format!("diagonal-push({})", base.describe()),
            MeasureSpec::PairTable { entries } => format!("pair-table({} entries)", entries.len()),
        }
    }

    /// Flattens the spec into an explicit pair table ready for sampling and
    /// pointwise evaluation.
    pub fn prepare(&self) -> Result<PreparedMeasure, WalkError> {
        let (first_group, second_group) = self.groups()?;
        let mut mass: BTreeMap<ProductElement, f64> = BTreeMap::new();
        match self {
            MeasureSpec::Factor(f) => {
                let e = ReducedWord::identity(second_group);
                for (w, p) in f.support()? {
                    *mass.entry(ProductElement::new(w, e.clone())).or_insert(0.0) += p;
                }
            }
            MeasureSpec::Product { first, second } => {
                let s2 = second.support()?;
                for (w1, p1) in first.support()? {
                    for (w2, p2) in &s2 {
                        *mass
                            .entry(ProductElement::new(w1.clone(), w2.clone()))
                            .or_insert(0.0) += p1 * p2;
                    }
                }
            }
            MeasureSpec::NoiseMixture { rho, base } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(WalkError::InvalidSpec(format!(
                        "noise parameter must be in [0, 1], got {rho}"
                    )));
                }
                let support = base.support()?;
                for (w1, p1) in &support {
                    for (w2, p2) in &support {
                        let p = rho * p1 * p2;
                        if p > 0.0 {
                            *mass
                                .entry(ProductElement::new(w1.clone(), w2.clone()))
                                .or_insert(0.0) += p;
                        }
                    }
                    let p = (1.0 - rho) * p1;
                    if p > 0.0 {
                        *mass
                            .entry(ProductElement::new(w1.clone(), w1.clone()))
                            .or_insert(0.0) += p;
                    }
                }
            }
            MeasureSpec::DiagonalPush { base } => {
                let pi = KillLastGenerator::new(base.group()?)?;
                for (w, p) in base.support()? {
                    let image = pi.apply(&w)?;
                    *mass.entry(ProductElement::new(w, image)).or_insert(0.0) += p;
                }
            }
            MeasureSpec::PairTable { entries } => {
                for (x, p) in entries {
                    if x.first().group() != first_group || x.second().group() != second_group {
                        return Err(WalkError::InvalidSpec(
                            "pair table entries span different groups".into(),
                        ));
                    }
                    if !(*p > 0.0) {
                        return Err(WalkError::InvalidSpec(format!(
                            "non-positive weight {p} on {x}"
                        )));
                    }
                    if mass.insert(x.clone(), *p).is_some() {
                        return Err(WalkError::InvalidSpec(format!("duplicate pair entry {x}")));
                    }
                }
            }
        }

        let entries: Vec<(ProductElement, f64)> = mass.into_iter().collect();
        if entries.is_empty() {
            return Err(WalkError::InvalidSpec("empty support".into()));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(WalkError::InvalidSpec(format!(
                "pair weights sum to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        let mut max_step = 0;
        for (x, p) in &entries {
            acc += p;
            cumulative.push(acc);
            max_step = max_step.max(x.norm());
        }
        Ok(PreparedMeasure { first_group, second_group, entries, cumulative, max_step })
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        self.prepare().map(|_| ())
    }
}

/// A measure flattened to a sorted support table with cumulative weights.
#[derive(Debug, Clone)]
pub struct PreparedMeasure {
    first_group: FreeGroupSpec,
    second_group: FreeGroupSpec,
    entries: Vec<(ProductElement, f64)>,
    cumulative: Vec<f64>,
    max_step: usize,
}

impl PreparedMeasure {
    pub fn first_group(&self) -> FreeGroupSpec {
        self.first_group
    }

    pub fn second_group(&self) -> FreeGroupSpec {
        self.second_group
    }

    pub fn entries(&self) -> &[(ProductElement, f64)] {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// Largest step length in either coordinate.
    pub fn max_step(&self) -> usize {
        self.max_step
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> &ProductElement {
        let r: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= r);
        let idx = idx.min(self.entries.len() - 1);
        &self.entries[idx].0
    }

    /// Point mass of a single step; 0 off the support.
    pub fn mass(&self, x: &ProductElement) -> f64 {
        match self.entries.binary_search_by(|(e, _)| e.cmp(x)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    fn marginal(&self, pick: impl Fn(&ProductElement) -> &ReducedWord) -> Vec<(ReducedWord, f64)> {
        let mut out: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        for (x, p) in &self.entries {
            *out.entry(pick(x).clone()).or_insert(0.0) += p;
        }
        out.into_iter().collect()
    }

    pub fn first_marginal(&self) -> Vec<(ReducedWord, f64)> {
        self.marginal(|x| x.first())
    }

    pub fn second_marginal(&self) -> Vec<(ReducedWord, f64)> {
        self.marginal(|x| x.second())
    }

    /// Conditional law of the first coordinate given the second equals `y`.
    pub fn first_given_second(&self, y: &ReducedWord) -> Vec<(ReducedWord, f64)> {
        let mut out = Vec::new();
        let mut total = 0.0;
        for (x, p) in &self.entries {
            if x.second() == y {
                out.push((x.first().clone(), *p));
                total += p;
            }
        }
        for (_, p) in &mut out {
            *p /= total;
        }
        out
    }
}

/// Chi-square p-value for the empirical law of one coordinate of `samples`
/// i.i.d. steps against the declared marginal.
pub fn marginal_chi_square(
    spec: &MeasureSpec,
    coordinate: usize,
    samples: usize,
    seed: u64,
) -> Result<f64, WalkError> {
    let prepared = spec.prepare()?;
    let marginal = match coordinate {
        0 => prepared.first_marginal(),
        1 => prepared.second_marginal(),
        _ => return Err(WalkError::InvalidSpec("coordinate must be 0 or 1".into())),
    };
    if marginal.len() < 2 {
        return Ok(1.0);
    }
    let mut counts = vec![0u64; marginal.len()];
    let mut rng = crate::rng::trial_rng(seed, 0);
    for _ in 0..samples {
        let step = prepared.sample(&mut rng);
        let word = if coordinate == 0 { step.first() } else { step.second() };
        let idx = marginal
            .binary_search_by(|(w, _)| w.cmp(word))
            .expect("sampled step outside declared marginal");
        counts[idx] += 1;
    }
    let expected: Vec<f64> = marginal.iter().map(|(_, p)| p * samples as f64).collect();
    Ok(chi_square_p_value(&counts, &expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FreeGroupSpec {
        FreeGroupSpec::new(2).unwrap()
    }

    fn w(text: &str) -> ReducedWord {
        ReducedWord::parse(f2(), text).unwrap()
    }

    #[test]
    fn srw_support() {
        let entries = FactorMeasure::Srw { rank: 2 }.support().unwrap();
        assert_eq!(entries.len(), 4);
        assert!(entries.iter().all(|(x, p)| x.len() == 1 && (*p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn lazy_support_and_validation() {
        let entries = FactorMeasure::LazySrw { rank: 2, holding: 1.0 / 3.0 }.support().unwrap();
        assert_eq!(entries.len(), 5);
        assert!((entries[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(FactorMeasure::LazySrw { rank: 2, holding: 1.0 }.support().is_err());
        assert!(FactorMeasure::LazySrw { rank: 2, holding: -0.1 }.support().is_err());
        // holding 0 degenerates to SRW, with no identity atom.
        let entries = FactorMeasure::LazySrw { rank: 2, holding: 0.0 }.support().unwrap();
        assert_eq!(entries.len(), 4);
    }

    #[test]
    fn table_validation() {
        let bad = FactorMeasure::Table { entries: vec![(w("a"), 0.5), (w("a"), 0.5)] };
        assert!(bad.support().is_err());
        let bad = FactorMeasure::Table { entries: vec![(w("a"), 0.7), (w("b"), 0.7)] };
        assert!(bad.support().is_err());
        let good = FactorMeasure::Table { entries: vec![(w("a"), 0.5), (w("ab"), 0.5)] };
        assert!(good.support().is_ok());
    }

    #[test]
    fn noise_mixture_pair_masses() {
        let spec = MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } };
        let prepared = spec.prepare().unwrap();
        assert_eq!(prepared.support_size(), 16);
        for (x, p) in prepared.entries() {
            let expect = if x.first() == x.second() { 5.0 / 32.0 } else { 1.0 / 32.0 };
            assert!((p - expect).abs() < 1e-15, "mass of {x}");
        }
        assert_eq!(prepared.max_step(), 1);
    }

    #[test]
    fn noise_mixture_extremes() {
        let diag = MeasureSpec::NoiseMixture { rho: 0.0, base: FactorMeasure::Srw { rank: 2 } };
        assert_eq!(diag.prepare().unwrap().support_size(), 4);
        let indep = MeasureSpec::NoiseMixture { rho: 1.0, base: FactorMeasure::Srw { rank: 2 } };
        assert_eq!(indep.prepare().unwrap().support_size(), 16);
        assert!(MeasureSpec::NoiseMixture { rho: 1.5, base: FactorMeasure::Srw { rank: 2 } }
            .prepare()
            .is_err());
    }

    #[test]
    fn diagonal_push_entries() {
        let spec = MeasureSpec::DiagonalPush { base: FactorMeasure::Srw { rank: 3 } };
        let prepared = spec.prepare().unwrap();
        assert_eq!(prepared.support_size(), 6);
        let killed: Vec<_> = prepared
            .entries()
            .iter()
            .filter(|(x, _)| x.second().is_identity())
            .collect();
        assert_eq!(killed.len(), 2);
        assert_eq!(prepared.second_group().rank(), 2);

        let law = spec.second_marginal_radial().unwrap();
        assert_eq!(law.rank, 2);
        assert!((law.holding - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn factor_spec_freezes_second_coordinate() {
        let spec = MeasureSpec::Factor(FactorMeasure::Srw { rank: 3 });
        let prepared = spec.prepare().unwrap();
        assert!(prepared.entries().iter().all(|(x, _)| x.second().is_identity()));
        assert!(spec.second_marginal_radial().is_none());
        assert_eq!(spec.first_marginal_radial().unwrap().rank, 3);
    }

    #[test]
    fn conditional_rows_normalize() {
        let spec = MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } };
        let prepared = spec.prepare().unwrap();
        let row = prepared.first_given_second(&w("a"));
        assert_eq!(row.len(), 4);
        let total: f64 = row.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let diag = row.iter().find(|(x, _)| x == &w("a")).unwrap().1;
        assert!((diag - 5.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_matches_masses() {
        let spec = MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } };
        let prepared = spec.prepare().unwrap();
        let mut rng = crate::rng::trial_rng(40, 0);
        let n = 200_000usize;
        let mut counts = vec![0u64; prepared.support_size()];
        for _ in 0..n {
            let s = prepared.sample(&mut rng);
            let idx = prepared
                .entries()
                .binary_search_by(|(e, _)| e.cmp(s))
                .unwrap();
            counts[idx] += 1;
        }
        let expected: Vec<f64> =
            prepared.entries().iter().map(|(_, p)| p * n as f64).collect();
        let p = chi_square_p_value(&counts, &expected);
        assert!(p > 1e-3, "chi-square p = {p}");
    }

    #[test]
    fn marginals_are_declared_laws() {
        for spec in [
            MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } },
            MeasureSpec::DiagonalPush { base: FactorMeasure::Srw { rank: 3 } },
            MeasureSpec::Product {
                first: FactorMeasure::Srw { rank: 2 },
                second: FactorMeasure::LazySrw { rank: 2, holding: 1.0 / 3.0 },
            },
        ] {
            for coord in [0, 1] {
                let p = marginal_chi_square(&spec, coord, 100_000, 91).unwrap();
                assert!(p > 1e-3, "{} coord {coord}: p = {p}", spec.describe());
            }
        }
    }

    #[test]
    fn noise_mixture_disagreement_rate() {
        // Coordinates disagree exactly when the independent branch redraws a
        // different letter: probability ρ(1 - 1/2m).
        let spec = MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } };
        let prepared = spec.prepare().unwrap();
        let mut rng = crate::rng::trial_rng(17, 0);
        let n = 100_000usize;
        let mut unequal = 0usize;
        for _ in 0..n {
            let s = prepared.sample(&mut rng);
            if s.first() != s.second() {
                unequal += 1;
            }
        }
        let rate = unequal as f64 / n as f64;
        let expect = 0.5 * (1.0 - 0.25);
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (rate - expect).abs() < 4.0 * sigma,
            "rate {rate} vs {expect} (sigma {sigma})"
        );
    }
}
