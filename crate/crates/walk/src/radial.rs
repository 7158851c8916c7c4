//! Exact distribution of |w_n| for isotropic nearest-neighbor walks.
//!
//! SRW and LazySRW are invariant under the tree automorphisms fixing the
//! identity, so w_n is uniform on each sphere and its law is determined by
//! the birth-death chain of the word length: from length k ≥ 1 the walk steps
//! out with probability (1-h)(L-1)/L and in with probability (1-h)/L, where
//! L = 2m is the alphabet size and h the holding probability; from 0 every
//! non-hold step goes out. Masses are kept in log space because p(n, k)
//! underflows near k ≈ n long before the entropy sums stop caring.

use crate::error::{unsupported, WalkError};
use crate::measure::{FactorMeasure, RadialLaw};
use crate::stats::{log_add_exp3, KahanSum};

/// Number of reduced words of length k in F_m.
pub fn sphere_size_log(rank: usize, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let l = (2 * rank) as f64;
    l.ln() + (k as f64 - 1.0) * (l - 1.0).ln()
}

/// The law of |w_n| at a fixed time, as log masses indexed by length.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    law: RadialLaw,
    n: usize,
    log_masses: Vec<f64>,
}

impl RadialProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn law(&self) -> RadialLaw {
        self.law
    }

    pub fn log_mass(&self, k: usize) -> f64 {
        self.log_masses.get(k).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.log_mass(k).exp()
    }

    /// log μ_n(w) for any reduced word of length k (uniform on the sphere).
    pub fn log_point_mass(&self, k: usize) -> f64 {
        self.log_mass(k) - sphere_size_log(self.law.rank, k)
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &lp in &self.log_masses {
            if lp > f64::NEG_INFINITY {
                acc.add(lp.exp());
            }
        }
        acc.value()
    }

    /// Shannon entropy H(μ_n) of the walk's position (not of its length).
    pub fn entropy(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (k, &lp) in self.log_masses.iter().enumerate() {
            if lp > f64::NEG_INFINITY {
                let p = lp.exp();
                if p > 0.0 {
                    acc.add(-p * (lp - sphere_size_log(self.law.rank, k)));
                }
            }
        }
        acc.value()
    }
}

/// Steps the radial law forward one unit of time at a time.
#[derive(Debug, Clone)]
pub struct RadialEvolution {
    law: RadialLaw,
    n: usize,
    log_masses: Vec<f64>,
    log_out_root: f64,
    log_out: f64,
    log_in: f64,
    log_hold: f64,
}

impl RadialEvolution {
    pub fn new(law: RadialLaw) -> Self {
        let l = (2 * law.rank) as f64;
        let stay = law.holding;
        let move_mass = 1.0 - stay;
        RadialEvolution {
            law,
            n: 0,
            log_masses: vec![0.0],
            log_out_root: move_mass.ln(),
            log_out: (move_mass * (l - 1.0) / l).ln(),
            log_in: (move_mass / l).ln(),
            log_hold: if stay > 0.0 { stay.ln() } else { f64::NEG_INFINITY },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn advance(&mut self) {
        let old = &self.log_masses;
        let mut new = vec![f64::NEG_INFINITY; old.len() + 1];
        let get = |k: isize| -> f64 {
            if k < 0 {
                f64::NEG_INFINITY
            } else {
                old.get(k as usize).copied().unwrap_or(f64::NEG_INFINITY)
            }
        };
        for (k, slot) in new.iter_mut().enumerate() {
            let k = k as isize;
            let from_below = if k == 1 {
                get(0) + self.log_out_root
            } else {
                get(k - 1) + self.log_out
            };
            let from_same = get(k) + self.log_hold;
            let from_above = get(k + 1) + self.log_in;
            *slot = log_add_exp3(from_below, from_same, from_above);
        }
        self.log_masses = new;
        self.n += 1;
    }

    pub fn advance_to(&mut self, n: usize) {
        while self.n < n {
            self.advance();
        }
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile { law: self.law, n: self.n, log_masses: self.log_masses.clone() }
    }
}

pub fn radial_profile(factor: &FactorMeasure, n: usize) -> Result<RadialProfile, WalkError> {
    let law = factor
        .radial_law()
        .ok_or_else(|| unsupported("radial_profile", factor.describe()))?;
    factor.support()?;
    let mut evo = RadialEvolution::new(law);
    evo.advance_to(n);
    Ok(evo.profile())
}

/// All radial profiles for times 0..=n at once; the bridge sampler evaluates
/// point masses at every remaining-time horizon, so it wants the full table.
#[derive(Debug, Clone)]
pub struct RadialTable {
    rows: Vec<RadialProfile>,
}

impl RadialTable {
    pub fn up_to(law: RadialLaw, n: usize) -> Self {
        let mut evo = RadialEvolution::new(law);
        let mut rows = Vec::with_capacity(n + 1);
        rows.push(evo.profile());
        for _ in 0..n {
            evo.advance();
            rows.push(evo.profile());
        }
        RadialTable { rows }
    }

    pub fn at(&self, n: usize) -> &RadialProfile {
        &self.rows[n]
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }
}
