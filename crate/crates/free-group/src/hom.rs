//! The kill-last-generator homomorphism F_{m+1} -> F_m.

use crate::error::GroupError;
use crate::word::{FreeGroupSpec, ReducedWord};

/// Sends the last generator of the source group to the identity and every
/// other generator to itself; images are freely reduced in the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KillLastGenerator {
    source: FreeGroupSpec,
    target: FreeGroupSpec,
}

impl KillLastGenerator {
    pub fn new(source: FreeGroupSpec) -> Result<Self, GroupError> {
        if source.rank() < 2 {
            return Err(GroupError::InvalidRank(source.rank()));
        }
        let target = FreeGroupSpec::new(source.rank() - 1)?;
        Ok(KillLastGenerator { source, target })
    }

    pub fn source(&self) -> FreeGroupSpec {
        self.source
    }

    pub fn target(&self) -> FreeGroupSpec {
        self.target
    }

    pub fn apply(&self, x: &ReducedWord) -> Result<ReducedWord, GroupError> {
        if x.group() != self.source {
            return Err(GroupError::RankMismatch {
                expected: self.source.rank() as u8,
                got: x.group().rank() as u8,
            });
        }
        let killed = self.source.rank() as i8;
        let kept = x.letters().iter().copied().filter(|l| l.unsigned_abs() < killed as u8);
        ReducedWord::reduce(self.target, kept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f3() -> FreeGroupSpec {
        FreeGroupSpec::new(3).unwrap()
    }

    fn w3(text: &str) -> ReducedWord {
        ReducedWord::parse(f3(), text).unwrap()
    }

    #[test]
    fn kills_last_generator() {
        let pi = KillLastGenerator::new(f3()).unwrap();
        assert_eq!(pi.target().rank(), 2);
        assert_eq!(pi.apply(&w3("c")).unwrap().to_string(), "e");
        assert_eq!(pi.apply(&w3("ab")).unwrap().to_string(), "ab");
        assert_eq!(pi.apply(&w3("acA")).unwrap().to_string(), "e");
        assert_eq!(pi.apply(&w3("acbCA")).unwrap().to_string(), "abA");
    }

    #[test]
    fn rejects_wrong_rank() {
        let pi = KillLastGenerator::new(f3()).unwrap();
        let f2 = FreeGroupSpec::new(2).unwrap();
        let x = ReducedWord::parse(f2, "ab").unwrap();
        assert!(pi.apply(&x).is_err());
        assert!(KillLastGenerator::new(FreeGroupSpec::new(1).unwrap()).is_err());
    }

    #[test]
    fn is_a_homomorphism() {
        let pi = KillLastGenerator::new(f3()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        const LETTERS: [i8; 6] = [1, -1, 2, -2, 3, -3];
        let mut random_word = |len: usize| {
            let mut out = ReducedWord::identity(f3());
            while out.len() < len {
                out.push_letter(LETTERS[rng.gen_range(0..6)]);
            }
            out
        };
        for _ in 0..300 {
            let x = random_word(10);
            let y = random_word(10);
            let lhs = pi.apply(&x.mul(&y).unwrap()).unwrap();
            let rhs = pi.apply(&x).unwrap().mul(&pi.apply(&y).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
