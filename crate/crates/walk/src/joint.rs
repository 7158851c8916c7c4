//! Exact joint law of a pair-valued walk at small times.
//!
//! Every (first, second) endpoint pair is packed into a u128 key so the
//! distribution is a sorted vector rather than a hash map; convolution with
//! the step measure is then a deterministic generate-sort-merge pass. Entry
//! counts grow roughly tenfold per step for the mixtures studied here, which
//! is why this is an oracle for single-digit horizons and not an estimator.

use std::collections::BTreeMap;

use free_group::{FreeGroupSpec, ProductElement, ReducedWord};

use crate::error::{unsupported, WalkError};
use crate::measure::{MeasureSpec, PreparedMeasure};
use crate::stats::KahanSum;

const MAX_TIME: usize = 10;
const MAX_RANK: usize = 7;

fn encode_word(w: &ReducedWord) -> u64 {
    debug_assert!(w.len() <= 15);
    let mut bits = w.len() as u64;
    for (i, &letter) in w.letters().iter().enumerate() {
        let nibble = ((letter.unsigned_abs() as u64 - 1) << 1) | (letter < 0) as u64;
        bits |= nibble << (4 + 4 * i);
    }
    bits
}

fn decode_word(group: FreeGroupSpec, bits: u64) -> ReducedWord {
    let len = (bits & 0xf) as usize;
    let mut letters = Vec::with_capacity(len);
    for i in 0..len {
        let nibble = (bits >> (4 + 4 * i)) & 0xf;
        let magnitude = (nibble >> 1) as i8 + 1;
        letters.push(if nibble & 1 == 1 { -magnitude } else { magnitude });
    }
    ReducedWord::from_letters(group, letters).expect("encoded words are reduced")
}

fn encode_pair(p: &ProductElement) -> u128 {
    ((encode_word(p.first()) as u128) << 64) | encode_word(p.second()) as u128
}

/// The full joint distribution of (w_n, w*_n) as a sorted association list.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    first_group: FreeGroupSpec,
    second_group: FreeGroupSpec,
    t: usize,
    entries: Vec<(u128, f64)>,
}

impl JointDistribution {
    /// Point mass at the identity pair. Fails for ranks above 7, whose
    /// letters do not fit the nibble packing.
    pub fn initial(spec: &MeasureSpec) -> Result<Self, WalkError> {
        let (first_group, second_group) = spec.groups()?;
        for g in [first_group, second_group] {
            if g.rank() > MAX_RANK {
                return Err(unsupported(
                    "joint distribution",
                    format!("rank {} exceeds the packed-word limit {MAX_RANK}", g.rank()),
                ));
            }
        }
        Ok(JointDistribution {
            first_group,
            second_group,
            t: 0,
            entries: vec![(0, 1.0)],
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn advance(&mut self, prepared: &PreparedMeasure) -> Result<(), WalkError> {
        if self.t >= MAX_TIME {
            return Err(unsupported(
                "joint distribution",
                format!("horizon {MAX_TIME} reached; the table grows too fast beyond it"),
            ));
        }
        let steps: Vec<(ProductElement, f64)> = prepared.entries().to_vec();
        let mut next: Vec<(u128, f64)> = Vec::with_capacity(self.entries.len() * steps.len());
        for &(key, mass) in &self.entries {
            let pos = self.decode_pair(key);
            for (step, p) in &steps {
                let moved = pos.mul(step).map_err(WalkError::from)?;
                next.push((encode_pair(&moved), mass * p));
            }
        }
        next.sort_unstable_by_key(|&(key, _)| key);
        let mut merged: Vec<(u128, f64)> = Vec::with_capacity(next.len() / 2);
        for (key, mass) in next {
            match merged.last_mut() {
                Some((last, acc)) if *last == key => *acc += mass,
                _ => merged.push((key, mass)),
            }
        }
        self.entries = merged;
        self.t += 1;
        Ok(())
    }

    fn decode_pair(&self, key: u128) -> ProductElement {
        ProductElement::new(
            decode_word(self.first_group, (key >> 64) as u64),
            decode_word(self.second_group, key as u64),
        )
    }

    pub fn mass_of(&self, pair: &ProductElement) -> f64 {
        let key = encode_pair(pair);
        match self.entries.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &(_, p) in &self.entries {
            acc.add(p);
        }
        acc.value()
    }

    pub fn entropy(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &(_, p) in &self.entries {
            if p > 0.0 {
                acc.add(-p * p.ln());
            }
        }
        acc.value()
    }

    pub fn second_marginal(&self) -> BTreeMap<ReducedWord, f64> {
        let mut out: BTreeMap<ReducedWord, f64> = BTreeMap::new();
        for &(key, p) in &self.entries {
            let w = decode_word(self.second_group, key as u64);
            *out.entry(w).or_insert(0.0) += p;
        }
        out
    }

    pub fn second_marginal_entropy(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (_, p) in self.second_marginal() {
            if p > 0.0 {
                acc.add(-p * p.ln());
            }
        }
        acc.value()
    }

    /// H(w_n | w*_n) via the chain rule on the exact table.
    pub fn conditional_entropy_given_second(&self) -> f64 {
        self.entropy() - self.second_marginal_entropy()
    }
}

/// Convenience wrapper: evolve the joint law of `spec` out to time `t`.
pub fn joint_distribution(spec: &MeasureSpec, t: usize) -> Result<JointDistribution, WalkError> {
    let prepared = spec.prepare()?;
    let mut joint = JointDistribution::initial(spec)?;
    for _ in 0..t {
        joint.advance(&prepared)?;
    }
    Ok(joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FactorMeasure;
    use crate::radial::radial_profile;

    fn noise_half() -> MeasureSpec {
        MeasureSpec::NoiseMixture { rho: 0.5, base: FactorMeasure::Srw { rank: 2 } }
    }

    #[test]
    fn word_encoding_roundtrip() {
        let group = FreeGroupSpec::new(7).unwrap();
        for text in ["e", "a", "A", "abcdefg", "GFEDCBA", "agAGag"] {
            let w = ReducedWord::parse(group, text).unwrap();
            assert_eq!(decode_word(group, encode_word(&w)), w);
        }
    }

    #[test]
    fn matches_direct_two_step_enumeration() {
        let spec = noise_half();
        let prepared = spec.prepare().unwrap();
        let joint = joint_distribution(&spec, 2).unwrap();

        let mut direct: BTreeMap<ProductElement, f64> = BTreeMap::new();
        for (s1, p1) in prepared.entries() {
            for (s2, p2) in prepared.entries() {
                let end = s1.mul(s2).unwrap();
                *direct.entry(end).or_insert(0.0) += p1 * p2;
            }
        }
        assert_eq!(joint.support_size(), direct.len());
        for (pair, mass) in &direct {
            assert!((joint.mass_of(pair) - mass).abs() < 1e-15);
        }
        assert!((joint.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_marginal_is_radial_srw() {
        let joint = joint_distribution(&noise_half(), 4).unwrap();
        let profile = radial_profile(&FactorMeasure::Srw { rank: 2 }, 4).unwrap();
        let marginal = joint.second_marginal();
        let mut total = 0.0;
        for (w, p) in &marginal {
            let expected = profile.log_point_mass(w.len()).exp();
            assert!((p - expected).abs() < 1e-13, "{w}: {p} vs {expected}");
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_matches_path_enumeration() {
        let spec = noise_half();
        let prepared = spec.prepare().unwrap();
        let mut direct: BTreeMap<ProductElement, f64> = BTreeMap::new();
        for (s1, p1) in prepared.entries() {
            for (s2, p2) in prepared.entries() {
                for (s3, p3) in prepared.entries() {
                    let end = s1.mul(s2).unwrap().mul(s3).unwrap();
                    *direct.entry(end).or_insert(0.0) += p1 * p2 * p3;
                }
            }
        }
        let mut h = 0.0;
        for p in direct.values() {
            h -= p * p.ln();
        }
        let joint = joint_distribution(&spec, 3).unwrap();
        assert!((joint.entropy() - h).abs() < 1e-12);
    }

    #[test]
    fn perfectly_correlated_walk_has_zero_conditional_entropy() {
        let spec = MeasureSpec::NoiseMixture { rho: 0.0, base: FactorMeasure::Srw { rank: 2 } };
        let joint = joint_distribution(&spec, 5).unwrap();
        assert!(joint.conditional_entropy_given_second().abs() < 1e-12);
    }

    #[test]
    fn independent_walk_conditional_entropy_is_marginal_entropy() {
        let spec = MeasureSpec::NoiseMixture { rho: 1.0, base: FactorMeasure::Srw { rank: 2 } };
        let joint = joint_distribution(&spec, 4).unwrap();
        let radial = radial_profile(&FactorMeasure::Srw { rank: 2 }, 4).unwrap();
        assert!((joint.conditional_entropy_given_second() - radial.entropy()).abs() < 1e-11);
    }

    #[test]
    fn horizon_cap_is_enforced() {
        let spec = MeasureSpec::Factor(FactorMeasure::Srw { rank: 2 });
        let prepared = spec.prepare().unwrap();
        let mut joint = JointDistribution::initial(&spec).unwrap();
        for _ in 0..MAX_TIME {
            joint.advance(&prepared).unwrap();
        }
        assert!(joint.advance(&prepared).is_err());
    }
}
