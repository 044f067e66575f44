//! Numerically stable elementary distributions: binomial pmf, strict lower
//! cdf, upper tail, and the negative binomial waiting-time term.
//!
//! The pmf works in log space through the Stirling correction
//! stirlerr(n) = ln n! - ln(sqrt(2 pi n) (n/e)^n) and the binomial deviance
//! bd0(x, M) = x ln(x/M) + M - x, instead of differencing three large
//! log-gamma values whose rounding alone costs ~n ulp. Counts up to 10^4
//! neither overflow nor lose the 1e-12 normalization guarantee. The
//! endpoints p = 0, p = 1, k = 0, and k = n short-circuit to exact values
//! before any logarithm is taken.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check_probability(p: f64, name: &str) -> Result<()> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "{name} must be a probability in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// stirlerr(n) for n >= 1: exact through n = 20 (factorials held in f64 at
/// full precision), then a five-term Stirling series whose truncation error
/// is below 3e-18.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 20 {
        static TABLE: OnceLock<[f64; 21]> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            let mut t = [0.0; 21];
            let mut factorial = 1.0f64;
            for m in 1..=20u64 {
                factorial *= m as f64;
                let mf = m as f64;
                t[m as usize] = factorial.ln() - (0.5 * LN_2PI + (mf + 0.5) * mf.ln() - mf);
            }
            t
        });
        return table[n as usize];
    }
    let nf = n as f64;
    let nn = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Binomial deviance x ln(x/M) + M - x, evaluated by series when x is close
/// to M so the two nearly cancelling pieces never meet in floating point.
fn binom_deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let d = x - m;
        let v = d / (x + m);
        let v2 = v * v;
        let mut sum = 0.5 * d * v;
        let mut term = x * v;
        let mut odd = 1.0;
        loop {
            term *= v2;
            odd += 2.0;
            let prev = sum;
            sum += term / odd;
            if sum == prev {
                return 2.0 * sum;
            }
        }
    }
    x * (x / m).ln() + m - x
}

/// Pr[X = k] for X ~ Binomial(n, p).
pub fn binom_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    check_probability(p, "p")?;
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    if k == 0 {
        return Ok((n as f64 * (-p).ln_1p()).exp());
    }
    if k == n {
        return Ok((n as f64 * p.ln()).exp());
    }
    let (nf, kf) = (n as f64, k as f64);
    let q = 1.0 - p;
    let lc = stirlerr(n)
        - stirlerr(k)
        - stirlerr(n - k)
        - binom_deviance(kf, nf * p)
        - binom_deviance(nf - kf, nf * q);
    let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
    Ok((lc - 0.5 * lf).exp())
}

/// Pr[X < r] for X ~ Binomial(n, p), with 0 <= r <= n + 1.
///
/// This is the strict lower tail used by the early-termination rule; r = 0
/// gives 0 and r = n + 1 gives 1. The sum accumulates whichever tail has
/// fewer terms and complements when that is the upper one.
pub fn binom_cdf_lt(n: u64, r: u64, p: f64) -> Result<f64> {
    check_probability(p, "p")?;
    if r > n + 1 {
        return Err(Error::Domain(format!("r = {r} exceeds n + 1 = {}", n + 1)));
    }
    if r == 0 {
        return Ok(0.0);
    }
    if r == n + 1 {
        return Ok(1.0);
    }
    // lower tail has r terms (k = 0..r-1), upper has n - r + 1 (k = r..n)
    if r <= n + 1 - r {
        let mut sum = 0.0;
        for k in 0..r {
            sum += binom_pmf(n, k, p)?;
        }
        Ok(sum)
    } else {
        let mut sum = 0.0;
        for k in r..=n {
            sum += binom_pmf(n, k, p)?;
        }
        Ok(1.0 - sum)
    }
}

/// Pr[X >= r] for X ~ Binomial(n, p). Any r <= 0 gives 1; r > n gives 0.
pub fn binom_tail_ge(n: u64, r: i64, p: f64) -> Result<f64> {
    check_probability(p, "p")?;
    if r <= 0 {
        return Ok(1.0);
    }
    let r = r as u64;
    if r > n {
        return Ok(0.0);
    }
    if n + 1 - r <= r {
        let mut sum = 0.0;
        for k in r..=n {
            sum += binom_pmf(n, k, p)?;
        }
        Ok(sum)
    } else {
        let mut sum = 0.0;
        for k in 0..r {
            sum += binom_pmf(n, k, p)?;
        }
        Ok(1.0 - sum)
    }
}

/// Probability that the s-th success lands on trial s + j in a Bernoulli(p)
/// sequence: C(s+j-1, s-1) p^s (1-p)^j.
pub fn nbinom_term(s: u64, j: u64, p: f64) -> Result<f64> {
    check_probability(p, "p")?;
    if s == 0 {
        return Err(Error::Domain("s must be at least 1".into()));
    }
    if p == 1.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    // the trial before the final success holds j failures among s + j - 1
    // draws, so the term is p times a binomial pmf in the failure count
    Ok(p * binom_pmf(s + j - 1, j, 1.0 - p)?)
}

/// Dense pmf table for Binomial(n, p): entry k holds Pr[X = k].
pub(crate) fn binom_pmf_table(n: u64, p: f64) -> Result<Vec<f64>> {
    (0..=n).map(|k| binom_pmf(n, k, p)).collect()
}

/// Upper-tail table for Binomial(n, p): entry r holds Pr[X >= r] for
/// r = 0..=n+1 (the last entry is 0).
pub(crate) fn binom_tail_table(n: u64, p: f64) -> Result<Vec<f64>> {
    let pmf = binom_pmf_table(n, p)?;
    let mut tail = vec![0.0; n as usize + 2];
    for r in (0..=n as usize).rev() {
        tail[r] = tail[r + 1] + pmf[r];
    }
    tail[0] = 1.0;
    Ok(tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pmf_exact_endpoints() {
        assert_eq!(binom_pmf(5, 0, 0.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(5, 3, 0.0).unwrap(), 0.0);
        assert_eq!(binom_pmf(5, 5, 1.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(0, 0, 0.37).unwrap(), 1.0);
    }

    #[test]
    fn pmf_matches_direct_factorial_arithmetic() {
        // C(5,2) * 0.8^2 * 0.2^3 = 10 * 0.64 * 0.008
        let expect = 10.0 * 0.64 * 0.008;
        assert!((binom_pmf(5, 2, 0.8).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn pmf_sums_to_one() {
        let total: f64 = (0..=5).map(|k| binom_pmf(5, k, 0.8).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_sums_to_one_at_stress_scale() {
        for &p in &[1e-4, 0.3, 0.5, 0.97] {
            let total: f64 = (0..=10_000).map(|k| binom_pmf(10_000, k, p).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12, "p={p}: sum={total}");
        }
    }

    #[test]
    fn pmf_rejects_bad_arguments() {
        assert!(binom_pmf(5, 6, 0.5).is_err());
        assert!(binom_pmf(5, 2, -0.1).is_err());
        assert!(binom_pmf(5, 2, 1.5).is_err());
        assert!(binom_pmf(5, 2, f64::NAN).is_err());
    }

    #[test]
    fn cdf_lt_examples() {
        assert!((binom_cdf_lt(5, 3, 0.8).unwrap() - 0.05792).abs() < 1e-15);
        assert_eq!(binom_cdf_lt(5, 0, 0.8).unwrap(), 0.0);
        assert_eq!(binom_cdf_lt(5, 6, 0.8).unwrap(), 1.0);
        assert!(binom_cdf_lt(5, 7, 0.8).is_err());
    }

    #[test]
    fn tail_ge_examples() {
        // Pr[Binomial(36, 0.2) >= 11]
        let t = binom_tail_ge(36, 11, 0.2).unwrap();
        assert!((t - 0.08891278153876336).abs() < 1e-12);
        assert_eq!(binom_tail_ge(36, 0, 0.2).unwrap(), 1.0);
        assert_eq!(binom_tail_ge(36, -4, 0.2).unwrap(), 1.0);
        assert_eq!(binom_tail_ge(36, 37, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn nbinom_examples() {
        assert!((nbinom_term(3, 0, 0.8).unwrap() - 0.512).abs() < 1e-15);
        assert_eq!(nbinom_term(1, 0, 1.0).unwrap(), 1.0);
        assert!((nbinom_term(3, 1, 0.8).unwrap() - 0.3072).abs() < 1e-15);
        assert!(nbinom_term(0, 2, 0.5).is_err());
    }

    #[test]
    fn nbinom_normalizes_over_j() {
        for &(s, p) in &[(1u64, 0.3), (3, 0.8), (5, 0.05), (4, 1.0)] {
            let mut total = 0.0;
            let mut j = 0;
            while total < 1.0 - 1e-12 {
                total += nbinom_term(s, j, p).unwrap();
                j += 1;
                assert!(j < 2_000_000, "tail did not close for s={s} p={p}");
            }
            assert!(total <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tail_table_matches_pointwise_tail() {
        let table = binom_tail_table(36, 0.2).unwrap();
        for r in 0..=37i64 {
            let direct = binom_tail_ge(36, r, 0.2).unwrap();
            assert!((table[r as usize] - direct).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn pmf_normalizes(n in 0u64..200, p in 0.0f64..=1.0) {
            let total: f64 = (0..=n).map(|k| binom_pmf(n, k, p).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn cdf_and_tail_complement(n in 0u64..200, r_frac in 0.0f64..=1.0, p in 0.0f64..=1.0) {
            let r = (r_frac * (n + 1) as f64).round() as u64;
            let lower = binom_cdf_lt(n, r, p).unwrap();
            let upper = binom_tail_ge(n, r as i64, p).unwrap();
            prop_assert!((lower + upper - 1.0).abs() < 1e-12);
        }

        #[test]
        fn cdf_nonincreasing_in_p(n in 1u64..100, r_frac in 0.0f64..=1.0) {
            let r = 1 + (r_frac * n as f64) as u64;
            let mut prev = f64::INFINITY;
            for i in 0..=20 {
                let p = i as f64 / 20.0;
                let c = binom_cdf_lt(n, r, p).unwrap();
                prop_assert!(c <= prev + 1e-12);
                prev = c;
            }
        }
    }
}
