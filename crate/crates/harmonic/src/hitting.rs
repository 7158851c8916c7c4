//! The exact harmonic measure of SRW on a free group.
//!
//! An SRW on F_m converges to a boundary end, and by symmetry plus the
//! renewal structure of last exits, the limit's prefix distribution is the
//! uniform Markov measure on the tree: first letter uniform among 2m choices,
//! every further letter uniform among the 2m-1 non-backtracking ones. The
//! tests re-derive cylinder masses from a first-step linear system instead of
//! trusting that formula.

use free_group::{BoundaryApprox, FreeGroupSpec, GroupError, ReducedWord};

use crate::error::{invalid, HarmonicError};

pub(crate) fn check_group(expected: FreeGroupSpec, got: FreeGroupSpec) -> Result<(), HarmonicError> {
    if expected != got {
        return Err(GroupError::GroupMismatch {
            left: expected.rank() as u8,
            right: got.rank() as u8,
        }
        .into());
    }
    Ok(())
}

/// ν for the simple random walk on a free group, with exact cylinder masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactHittingMeasure {
    group: FreeGroupSpec,
}

impl ExactHittingMeasure {
    pub fn new(group: FreeGroupSpec) -> Self {
        ExactHittingMeasure { group }
    }

    pub fn group(&self) -> FreeGroupSpec {
        self.group
    }

    /// ν(cyl(w)) = (1/2m) (2m-1)^{-(|w|-1)} for nonempty w; cyl(e) = ∂F.
    pub fn cylinder_mass(&self, w: &ReducedWord) -> Result<f64, HarmonicError> {
        check_group(self.group, w.group())?;
        Ok(self.log_cylinder_mass_by_len(w.len()).exp())
    }

    pub fn log_cylinder_mass(&self, w: &ReducedWord) -> Result<f64, HarmonicError> {
        check_group(self.group, w.group())?;
        Ok(self.log_cylinder_mass_by_len(w.len()))
    }

    pub(crate) fn log_cylinder_mass_by_len(&self, len: usize) -> f64 {
        if len == 0 {
            return 0.0;
        }
        let l = self.group.letter_count() as f64;
        -l.ln() - (len as f64 - 1.0) * (l - 1.0).ln()
    }

    /// Mass of the open quasi-metric ball of radius e^{-j} around ξ, which
    /// on the tree is exactly the cylinder of ξ's (j+1)-prefix.
    pub fn log_ball_mass(&self, xi: &BoundaryApprox, j: usize) -> Result<f64, HarmonicError> {
        check_group(self.group, xi.group())?;
        if xi.depth() < j + 1 {
            return Err(invalid(format!(
                "ball of radius e^-{j} needs a boundary prefix of depth {}, have {}",
                j + 1,
                xi.depth()
            )));
        }
        Ok(self.log_cylinder_mass_by_len(j + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;
    use num::{BigInt, One, ToPrimitive};

    fn measure(rank: usize) -> ExactHittingMeasure {
        ExactHittingMeasure::new(FreeGroupSpec::new(rank).unwrap())
    }

    /// One cylinder's exact rational mass under the product formula.
    fn rational_mass(rank: usize, depth: usize) -> BigRational {
        let l = 2 * rank;
        BigRational::new(
            BigInt::one(),
            BigInt::from(l) * BigInt::from(l - 1).pow(depth as u32 - 1),
        )
    }

    #[test]
    fn sphere_masses_sum_to_one() {
        for rank in [2usize, 3, 5] {
            let nu = measure(rank);
            let group = FreeGroupSpec::new(rank).unwrap();
            let l = 2 * rank;
            for depth in 1..=12usize {
                let count = BigInt::from(l) * BigInt::from(l - 1).pow(depth as u32 - 1);
                let total = BigRational::from_integer(count) * rational_mass(rank, depth);
                assert!(total.is_one());

                let w = ReducedWord::parse(group, &"a".repeat(depth)).unwrap();
                let expected = rational_mass(rank, depth).to_f64().unwrap();
                let got = nu.cylinder_mass(&w).unwrap();
                assert!((got - expected).abs() <= 1e-14 * expected);
            }
        }
    }

    #[test]
    fn frozen_small_cylinders() {
        let nu = measure(2);
        let group = FreeGroupSpec::new(2).unwrap();
        let a = ReducedWord::parse(group, "a").unwrap();
        let ab = ReducedWord::parse(group, "ab").unwrap();
        assert!((nu.cylinder_mass(&a).unwrap() - 0.25).abs() < 1e-15);
        assert!((nu.cylinder_mass(&ab).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let e = ReducedWord::identity(group);
        assert_eq!(nu.cylinder_mass(&e).unwrap(), 1.0);
    }

    /// Independent derivation of cylinder masses. h(g) is the probability
    /// that the walk's boundary limit lies in cyl(w), started from the vertex
    /// at distance g along the geodesic from o toward w, for |w| = d.
    /// Off-geodesic excursions enter through the return probability x solving
    /// the first-step equation x = 1/(2m) + (2m-1)/(2m) x², found here by
    /// bisection rather than by the closed root. Conditioning on the first
    /// step and collapsing excursions gives a tridiagonal system whose h(0)
    /// is ν(cyl(w)), with no reference to the product formula.
    fn first_step_oracle(rank: usize, depth: usize) -> f64 {
        let l = (2 * rank) as f64;
        let f = |x: f64| 1.0 / l + (l - 1.0) / l * x * x - x;
        let (mut lo, mut hi) = (0.0, 1.0 - 1e-9);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);

        // From an interior vertex the 2m first steps split as one toward o,
        // one toward w, and 2m-2 off the geodesic (each returning w.p. x,
        // else the limit escapes outside cyl(w)):
        //   2m h(g) = h(g-1) + h(g+1) + (2m-2) x h(g)
        // At the root every off-step except the one toward w must return:
        //   2m h(0) = h(1) + (2m-1) x h(0)
        // At w itself the 2m-1 outgoing steps stay in cyl(w) unless the walk
        // returns to w (w.p. x) and continues, while the backtracking step
        // drops to h(d-1):
        //   2m h(d) = h(d-1) + (2m-1)(1 - x) + (2m-1) x h(d)
        let d = depth;
        let mut sub = vec![0.0; d + 1];
        let mut diag = vec![0.0; d + 1];
        let mut sup = vec![0.0; d + 1];
        let mut rhs = vec![0.0; d + 1];
        diag[0] = l - (l - 1.0) * x;
        sup[0] = -1.0;
        for g in 1..d {
            sub[g] = -1.0;
            diag[g] = l - (l - 2.0) * x;
            sup[g] = -1.0;
        }
        sub[d] = -1.0;
        diag[d] = l - (l - 1.0) * x;
        rhs[d] = (l - 1.0) * (1.0 - x);

        for g in 1..=d {
            let m = sub[g] / diag[g - 1];
            diag[g] -= m * sup[g - 1];
            rhs[g] -= m * rhs[g - 1];
        }
        let mut h = vec![0.0; d + 1];
        h[d] = rhs[d] / diag[d];
        for g in (0..d).rev() {
            h[g] = (rhs[g] - sup[g] * h[g + 1]) / diag[g];
        }
        h[0]
    }

    #[test]
    fn cylinder_masses_match_first_step_system() {
        for rank in [2usize, 3, 4] {
            let nu = measure(rank);
            let group = FreeGroupSpec::new(rank).unwrap();
            for depth in 1..=6usize {
                let text: String = ["a", "b", "A", "b", "a", "B"][..depth].concat();
                let w = ReducedWord::parse(group, &text).unwrap();
                let direct = nu.cylinder_mass(&w).unwrap();
                let oracle = first_step_oracle(rank, depth);
                assert!(
                    (direct - oracle).abs() < 1e-10,
                    "rank {rank} depth {depth}: {direct} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn ball_mass_is_next_cylinder() {
        let nu = measure(2);
        let group = FreeGroupSpec::new(2).unwrap();
        let xi = BoundaryApprox::axis(group, 1, 8).unwrap();
        // Radius e^-2 ball = cylinder of the 3-prefix.
        let got = nu.log_ball_mass(&xi, 2).unwrap().exp();
        assert!((got - 0.25 / 9.0).abs() < 1e-15);
        assert!(nu.log_ball_mass(&xi, 8).is_err());
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let nu = measure(2);
        let other = FreeGroupSpec::new(3).unwrap();
        let w = ReducedWord::parse(other, "c").unwrap();
        assert!(nu.cylinder_mass(&w).is_err());
    }
}
