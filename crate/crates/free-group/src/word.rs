//! Freely reduced words and the word metric.
//!
//! A letter is a nonzero `i8`: the generator with index `i` (1-based) is `i`,
//! its inverse is `-i`. A word is reduced when no letter is followed by its
//! inverse. The Cayley graph of a free group with respect to a free basis is a
//! tree, so `d(x, y) = |x| + |y| - 2 * common_prefix(x, y)` and all hyperbolic
//! quantities below are exact integers.

use std::fmt;

use crate::error::GroupError;

/// Marker for a finitely generated free group; two words interoperate only
/// when their specs agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreeGroupSpec {
    rank: u8,
}

impl FreeGroupSpec {
    pub fn new(rank: usize) -> Result<Self, GroupError> {
        if rank == 0 || rank > 126 {
            return Err(GroupError::InvalidRank(rank));
        }
        Ok(FreeGroupSpec { rank: rank as u8 })
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    /// Number of signed generators, i.e. the degree of the Cayley tree.
    pub fn letter_count(&self) -> usize {
        2 * self.rank as usize
    }

    pub fn check_letter(&self, letter: i8) -> Result<(), GroupError> {
        if letter == 0 || letter.unsigned_abs() > self.rank {
            return Err(GroupError::InvalidLetter { letter, rank: self.rank });
        }
        Ok(())
    }

    /// All signed generators, positive first: `1, -1, 2, -2, ...`
    pub fn letters(&self) -> impl Iterator<Item = i8> {
        (1..=self.rank as i8).flat_map(|g| [g, -g])
    }

    fn check_match(&self, other: &FreeGroupSpec) -> Result<(), GroupError> {
        if self != other {
            return Err(GroupError::GroupMismatch { left: self.rank, right: other.rank });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReducedWord {
    group: FreeGroupSpec,
    letters: Vec<i8>,
}

#[inline]
fn cancels(a: i8, b: i8) -> bool {
    a == -b
}

impl ReducedWord {
    pub fn identity(group: FreeGroupSpec) -> Self {
        ReducedWord { group, letters: Vec::new() }
    }

    pub fn letter(group: FreeGroupSpec, letter: i8) -> Result<Self, GroupError> {
        group.check_letter(letter)?;
        Ok(ReducedWord { group, letters: vec![letter] })
    }

    /// Validates that `letters` is in range and freely reduced.
    pub fn from_letters(group: FreeGroupSpec, letters: Vec<i8>) -> Result<Self, GroupError> {
        for &l in &letters {
            group.check_letter(l)?;
        }
        for (i, pair) in letters.windows(2).enumerate() {
            if cancels(pair[0], pair[1]) {
                return Err(GroupError::NotReduced(i));
            }
        }
        Ok(ReducedWord { group, letters })
    }

    /// Folds an arbitrary letter sequence into its reduced form.
    pub fn reduce(group: FreeGroupSpec, letters: impl IntoIterator<Item = i8>) -> Result<Self, GroupError> {
        let mut stack: Vec<i8> = Vec::new();
        for l in letters {
            group.check_letter(l)?;
            if stack.last().is_some_and(|&top| cancels(top, l)) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Ok(ReducedWord { group, letters: stack })
    }

    pub fn group(&self) -> FreeGroupSpec {
        self.group
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[i8] {
        &self.letters
    }

    pub fn first(&self) -> Option<i8> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<i8> {
        self.letters.last().copied()
    }

    pub fn inverse(&self) -> ReducedWord {
        let letters = self.letters.iter().rev().map(|&l| -l).collect();
        ReducedWord { group: self.group, letters }
    }

    /// Group multiplication. Cancellation happens only at the junction, so the
    /// result is reduced after popping matched letters there.
    pub fn mul(&self, rhs: &ReducedWord) -> Result<ReducedWord, GroupError> {
        self.group.check_match(&rhs.group)?;
        let mut out = self.clone();
        out.push_mul(rhs);
        Ok(out)
    }

    /// In-place `self <- self * rhs`. Amortized cost is the cancellation depth
    /// plus `|rhs|`, which keeps long random walks linear overall.
    pub fn push_mul(&mut self, rhs: &ReducedWord) {
        assert_eq!(self.group, rhs.group, "push_mul across different groups");
        let mut skip = 0;
        while skip < rhs.letters.len()
            && self.letters.last().is_some_and(|&top| cancels(top, rhs.letters[skip]))
        {
            self.letters.pop();
            skip += 1;
        }
        self.letters.extend_from_slice(&rhs.letters[skip..]);
    }

    /// In-place `self <- self * letter`.
    pub fn push_letter(&mut self, letter: i8) {
        debug_assert!(self.group.check_letter(letter).is_ok());
        if self.letters.last().is_some_and(|&top| cancels(top, letter)) {
            self.letters.pop();
        } else {
            self.letters.push(letter);
        }
    }

    pub fn pop_letter(&mut self) -> Option<i8> {
        self.letters.pop()
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        self.letters
            .iter()
            .zip(other.letters.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        let n = n.min(self.letters.len());
        ReducedWord { group: self.group, letters: self.letters[..n].to_vec() }
    }

    pub fn is_prefix_of(&self, other: &ReducedWord) -> bool {
        self.group == other.group
            && self.letters.len() <= other.letters.len()
            && self.letters == other.letters[..self.letters.len()]
    }

    /// Word-metric distance `|x^{-1} y|`. The junction cancellation of
    /// `x^{-1} * y` is exactly the common prefix, since both geodesics from the
    /// identity run together until they split.
    pub fn distance(&self, other: &ReducedWord) -> Result<usize, GroupError> {
        self.group.check_match(&other.group)?;
        let c = self.common_prefix_len(other);
        Ok(self.letters.len() + other.letters.len() - 2 * c)
    }

    pub fn parse(group: FreeGroupSpec, text: &str) -> Result<Self, GroupError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "e" {
            return Ok(ReducedWord::identity(group));
        }
        let mut letters = Vec::with_capacity(trimmed.len());
        for ch in trimmed.chars() {
            let letter = match ch {
                'a'..='z' => (ch as u8 - b'a' + 1) as i8,
                'A'..='Z' => -((ch as u8 - b'A' + 1) as i8),
                _ => {
                    return Err(GroupError::Parse(
                        text.to_owned(),
                        format!("unexpected character {ch:?}"),
                    ))
                }
            };
            group.check_letter(letter).map_err(|e| GroupError::Parse(text.to_owned(), e.to_string()))?;
            letters.push(letter);
        }
        Self::from_letters(group, letters)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        if self.group.rank() <= 26 {
            for &l in &self.letters {
                let ch = if l > 0 {
                    (b'a' + (l - 1) as u8) as char
                } else {
                    (b'A' + (-l - 1) as u8) as char
                };
                write!(f, "{ch}")?;
            }
            Ok(())
        } else {
            write!(f, "[")?;
            for (i, &l) in self.letters.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{l}")?;
            }
            write!(f, "]")
        }
    }
}

/// Gromov product `(x|y)_z = (d(x,z) + d(y,z) - d(x,y)) / 2` for words; in a
/// tree this is the distance from `z` to the geodesic `[x, y]`, an integer.
pub fn word_gromov(x: &ReducedWord, y: &ReducedWord, base: &ReducedWord) -> Result<usize, GroupError> {
    let dxz = x.distance(base)?;
    let dyz = y.distance(base)?;
    let dxy = x.distance(y)?;
    debug_assert_eq!((dxz + dyz - dxy) % 2, 0);
    Ok((dxz + dyz - dxy) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> FreeGroupSpec {
        FreeGroupSpec::new(2).unwrap()
    }

    fn w(text: &str) -> ReducedWord {
        ReducedWord::parse(f2(), text).unwrap()
    }

    #[test]
    fn rank_bounds() {
        assert!(FreeGroupSpec::new(0).is_err());
        assert!(FreeGroupSpec::new(127).is_err());
        assert!(FreeGroupSpec::new(126).is_ok());
        assert_eq!(f2().letter_count(), 4);
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for text in ["e", "a", "ab", "aBa", "Abba"] {
            let word = w(text);
            let expect = if text == "e" { "e" } else { text };
            assert_eq!(word.to_string(), expect);
        }
        assert_eq!(w("").len(), 0);
        assert!(ReducedWord::parse(f2(), "ac").is_err());
        assert!(ReducedWord::parse(f2(), "aA").is_err());
        assert!(ReducedWord::parse(f2(), "a b").is_err());
    }

    #[test]
    fn from_letters_rejects_cancellation() {
        assert_eq!(
            ReducedWord::from_letters(f2(), vec![1, 2, -2, 1]),
            Err(GroupError::NotReduced(1))
        );
        assert!(ReducedWord::from_letters(f2(), vec![1, 2, 1, -2]).is_ok());
    }

    #[test]
    fn multiplication_cancels_at_junction() {
        assert_eq!(w("ab").mul(&w("BA")).unwrap(), w("e"));
        assert_eq!(w("ab").mul(&w("Ba")).unwrap(), w("aa"));
        assert_eq!(w("aba").mul(&w("Ab")).unwrap(), w("abb"));
        assert!(w("a").mul(&ReducedWord::identity(FreeGroupSpec::new(3).unwrap())).is_err());
    }

    #[test]
    fn distances_and_products() {
        assert_eq!(w("ab").distance(&w("aba")).unwrap(), 1);
        assert_eq!(w("ab").distance(&w("ab")).unwrap(), 0);
        assert_eq!(w("a").distance(&w("A")).unwrap(), 2);
        let e = ReducedWord::identity(f2());
        assert_eq!(word_gromov(&w("ab"), &w("aba"), &e).unwrap(), 2);
        assert_eq!(word_gromov(&w("ab"), &w("aba"), &w("a")).unwrap(), 1);
        assert_eq!(w("ab").common_prefix_len(&w("aba")), 2);
    }

    #[test]
    fn inverse_involution() {
        let x = w("abAAb");
        assert_eq!(x.inverse().inverse(), x);
        assert_eq!(x.mul(&x.inverse()).unwrap(), ReducedWord::identity(f2()));
    }

    fn letter_strategy(rank: i8) -> impl Strategy<Value = i8> {
        (1..=rank).prop_flat_map(|g| prop_oneof![Just(g), Just(-g)])
    }

    fn word_strategy(rank: i8, max_len: usize) -> impl Strategy<Value = ReducedWord> {
        prop::collection::vec(letter_strategy(rank), 0..max_len).prop_map(move |ls| {
            ReducedWord::reduce(FreeGroupSpec::new(rank as usize).unwrap(), ls).unwrap()
        })
    }

    /// Reduction oracle that cancels pairs in a random order instead of a
    /// single left-to-right pass. Free reduction is confluent, so every order
    /// must land on the same normal form.
    fn reduce_random_order(letters: &[i8], rng: &mut ChaCha8Rng) -> Vec<i8> {
        let mut current: Vec<i8> = letters.to_vec();
        loop {
            let mut sites: Vec<usize> = (0..current.len().saturating_sub(1))
                .filter(|&i| cancels(current[i], current[i + 1]))
                .collect();
            if sites.is_empty() {
                return current;
            }
            sites.shuffle(rng);
            let i = sites[0];
            current.drain(i..i + 2);
        }
    }

    proptest! {
        #[test]
        fn reduction_is_confluent(
            letters in prop::collection::vec(letter_strategy(2), 0..64),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stack = ReducedWord::reduce(f2(), letters.clone()).unwrap();
            let oracle = reduce_random_order(&letters, &mut rng);
            prop_assert_eq!(stack.letters(), &oracle[..]);
        }

        #[test]
        fn mul_matches_reduce_of_concatenation(
            x in word_strategy(2, 32),
            y in word_strategy(2, 32),
        ) {
            let via_mul = x.mul(&y).unwrap();
            let concat: Vec<i8> = x.letters().iter().chain(y.letters().iter()).copied().collect();
            let via_reduce = ReducedWord::reduce(f2(), concat).unwrap();
            prop_assert_eq!(via_mul, via_reduce);
        }

        #[test]
        fn push_mul_matches_mul(x in word_strategy(3, 32), y in word_strategy(3, 32)) {
            let mut z = x.clone();
            z.push_mul(&y);
            prop_assert_eq!(z, x.mul(&y).unwrap());
        }

        #[test]
        fn metric_axioms(
            x in word_strategy(2, 24),
            y in word_strategy(2, 24),
            z in word_strategy(2, 24),
        ) {
            let dxy = x.distance(&y).unwrap();
            let dyx = y.distance(&x).unwrap();
            prop_assert_eq!(dxy, dyx);
            prop_assert_eq!(dxy == 0, x == y);
            prop_assert!(dxy <= x.distance(&z).unwrap() + z.distance(&y).unwrap());
        }

        /// Trees are 0-hyperbolic: the two smallest of the three pairwise
        /// Gromov products at any base agree, i.e. (x|y) >= min((x|z), (y|z)).
        #[test]
        fn zero_hyperbolic(
            x in word_strategy(2, 24),
            y in word_strategy(2, 24),
            z in word_strategy(2, 24),
            base in word_strategy(2, 24),
        ) {
            let xy = word_gromov(&x, &y, &base).unwrap();
            let xz = word_gromov(&x, &z, &base).unwrap();
            let yz = word_gromov(&y, &z, &base).unwrap();
            prop_assert!(xy >= xz.min(yz));
        }

        #[test]
        fn gromov_at_identity_is_common_prefix(
            x in word_strategy(2, 24),
            y in word_strategy(2, 24),
        ) {
            let e = ReducedWord::identity(f2());
            prop_assert_eq!(word_gromov(&x, &y, &e).unwrap(), x.common_prefix_len(&y));
        }

        #[test]
        fn display_parse_roundtrip(x in word_strategy(2, 24)) {
            let text = x.to_string();
            prop_assert_eq!(ReducedWord::parse(f2(), &text).unwrap(), x);
        }
    }

    #[test]
    fn long_walk_push_letter_matches_mul_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let group = f2();
        let mut fast = ReducedWord::identity(group);
        let mut slow = ReducedWord::identity(group);
        for _ in 0..4000 {
            let l = *[1i8, -1, 2, -2].choose(&mut rng).unwrap();
            fast.push_letter(l);
            slow = slow.mul(&ReducedWord::letter(group, l).unwrap()).unwrap();
            if rng.gen_bool(0.001) {
                assert_eq!(fast, slow);
            }
        }
        assert_eq!(fast, slow);
    }
}
