use crate::error::{Error, Result};

/// Natural log of the binomial coefficient `C(n, k)`.
fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum()
}

/// One-tailed probability `P(X >= k)` for `X ~ Binomial(n, p)`.
///
/// Terms are accumulated in log space with a running log-sum-exp, so large
/// `n` does not overflow the coefficients.
pub fn binomial_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let ln_odds = ln_p - ln_q;
    let mut term = ln_choose(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q;
    let mut acc = term;
    for i in k..n {
        // pmf(i + 1) / pmf(i) = (n - i) / (i + 1) * p / q
        term += ((n - i) as f64 / (i + 1) as f64).ln() + ln_odds;
        let (hi, lo) = if acc >= term { (acc, term) } else { (term, acc) };
        acc = hi + (lo - hi).exp().ln_1p();
    }
    Ok(acc.exp().min(1.0))
}

/// Normal approximation of `P(X >= k)` with a continuity correction:
/// `P(Z >= (k - 0.5 - np) / sqrt(np(1 - p)))`.
pub fn binomial_tail_normal_approx(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    let var = n as f64 * p * (1.0 - p);
    if var == 0.0 {
        return binomial_tail(k, n, p);
    }
    let z = (k as f64 - 0.5 - n as f64 * p) / var.sqrt();
    Ok(statrs::distribution::ContinuousCDF::sf(&statrs::distribution::Normal::standard(), z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_tail_58_of_90() {
        // sum_{i=58}^{90} C(90, i) / 2^90
        assert_abs_diff_eq!(binomial_tail(58, 90, 0.5).unwrap(), 0.004_022_964_066_612_5, epsilon = 1e-15);
    }

    #[test]
    fn normal_approx_58_of_90() {
        assert_abs_diff_eq!(binomial_tail_normal_approx(58, 90, 0.5).unwrap(), 0.004_204, epsilon = 5e-6);
        assert_abs_diff_eq!(binomial_tail_normal_approx(58, 90, 0.5).unwrap(), 0.004_203_997_3, epsilon = 1e-9);
        assert!(binomial_tail_normal_approx(91, 90, 0.5).is_err());
    }

    #[test]
    fn trivial_tails() {
        assert_eq!(binomial_tail(0, 17, 0.3).unwrap(), 1.0);
        assert_abs_diff_eq!(binomial_tail(5, 5, 0.5).unwrap(), 0.03125, epsilon = 1e-15);
        assert_eq!(binomial_tail(3, 5, 0.0).unwrap(), 0.0);
        assert_eq!(binomial_tail(3, 5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(binomial_tail(6, 5, 0.5).is_err());
        assert!(binomial_tail(1, 5, 1.5).is_err());
        assert!(binomial_tail(1, 5, f64::NAN).is_err());
    }

    #[test]
    fn large_n_stays_finite() {
        let v = binomial_tail(5200, 10_000, 0.5).unwrap();
        assert!(v > 0.0 && v < 1e-4, "{v}");
        assert_abs_diff_eq!(binomial_tail(1, 10_000, 0.5).unwrap(), 1.0, epsilon = 1e-12);
    }
}
