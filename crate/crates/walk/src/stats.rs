//! Numeric helpers shared by the estimators: compensated summation, running
//! moments, log-space addition, and a chi-square goodness-of-fit p-value.

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStat {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn new() -> Self {
        RunningStat::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n-1 denominator); 0 for fewer than two points.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stddev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// log(exp(a) + exp(b)) without overflow; NEG_INFINITY encodes zero mass.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_add_exp3(a: f64, b: f64, c: f64) -> f64 {
    log_add_exp(log_add_exp(a, b), c)
}

/// ln Γ(x) for x > 0, Lanczos approximation (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "ln_gamma domain");
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(s, x) by series expansion; valid and
/// fast for x < s + 1.
fn gamma_p_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut k = s;
    for _ in 0..500 {
        k += 1.0;
        term *= x / k;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + s * x.ln() - ln_gamma(s)).exp()
}

/// Regularized upper incomplete gamma Q(s, x) by Lentz continued fraction;
/// valid for x >= s + 1.
fn gamma_q_cf(s: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + s * x.ln() - ln_gamma(s)).exp()
}

/// Upper-tail probability Q(s, x) = P(Gamma(s) > x), regularized.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    assert!(s > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < s + 1.0 {
        1.0 - gamma_p_series(s, x)
    } else {
        gamma_q_cf(s, x)
    }
}

/// Pearson chi-square goodness-of-fit p-value against expected counts.
/// Degrees of freedom = number of cells - 1.
pub fn chi_square_p_value(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    assert!(observed.len() >= 2);
    let mut stat = KahanSum::new();
    for (&o, &e) in observed.iter().zip(expected.iter()) {
        assert!(e > 0.0, "expected count must be positive");
        let d = o as f64 - e;
        stat.add(d * d / e);
    }
    let dof = (observed.len() - 1) as f64;
    gamma_q(dof / 2.0, stat.value() / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_direct() {
        let xs = [1.5, 2.0, -0.5, 4.0, 0.25];
        let mut st = RunningStat::new();
        for &x in &xs {
            st.push(x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((st.mean() - mean).abs() < 1e-14);
        assert!((st.variance() - var).abs() < 1e-14);
        assert!((st.stderr() - (var / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn kahan_beats_naive() {
        // 1 followed by many tiny values that a naive sum drops entirely.
        let n = 10_000_000usize;
        let tiny = 1e-16;
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..n {
            acc.add(tiny);
        }
        let expect = 1.0 + n as f64 * tiny;
        assert!((acc.value() - expect).abs() < 1e-12);
    }

    #[test]
    fn log_add_exp_basics() {
        assert!((log_add_exp(0.0, 0.0) - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, -3.0), -3.0);
        let v = log_add_exp3(-1000.0, -1000.0, -1000.0);
        assert!((v - (-1000.0 + 3.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_reference_values() {
        // Γ(1/2) = sqrt(π), Γ(6) = 120.
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
        assert!((ln_gamma(6.0) - 120.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(1.0)).abs() < 1e-13);
    }

    #[test]
    fn chi_square_reference_values() {
        // Even dof admit the closed form Q = e^{-x/2} Σ_{j<k/2} (x/2)^j / j!.
        // dof 2 at x=2: e^{-1}.
        assert!((gamma_q(1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-10);
        // dof 4 at x=8: e^{-4} (1 + 4).
        assert!((gamma_q(2.0, 4.0) - 5.0 * (-4.0f64).exp()).abs() < 1e-10);
        // dof 10 at x=10: e^{-5} Σ_{j=0}^{4} 5^j/j! = 0.4404932...
        assert!((gamma_q(5.0, 5.0) - 0.440_493_285_065_212_6).abs() < 1e-9);
        // dof 1 at x=4: 2(1 - Φ(2)) = 0.04550026...
        assert!((gamma_q(0.5, 2.0) - 0.045_500_263_896_358).abs() < 1e-9);
    }

    #[test]
    fn chi_square_on_counts() {
        // Perfect fit gives p = 1; a gross misfit gives p near 0.
        let p = chi_square_p_value(&[25, 25, 25, 25], &[25.0, 25.0, 25.0, 25.0]);
        assert!((p - 1.0).abs() < 1e-12);
        let p = chi_square_p_value(&[100, 0, 0, 0], &[25.0, 25.0, 25.0, 25.0]);
        assert!(p < 1e-10);
    }
}
