use std::f64::consts::PI;

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Iteration cap for the incomplete gamma series and continued fraction.
const INC_GAMMA_MAX_ITER: usize = 100_000;
/// Products of this many terms or fewer are summed directly in `log_pochhammer`.
const POCHHAMMER_DIRECT_MAX: u64 = 256;

/// Natural log of the gamma function, Lanczos approximation (g = 7, 9 terms).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("log_gamma", format!("x must be positive and finite, got {x}")));
    }
    Ok(lanczos_ln_gamma(x))
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - lanczos_ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln (a)_k = ln Γ(a + k) - ln Γ(a)`, the log rising factorial.
///
/// Short products are evaluated as an exact sum of logs; long ones fall back
/// to the log-gamma difference.
pub fn log_pochhammer(a: f64, k: u64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 {
        return Err(domain("log_pochhammer", format!("a must be positive and finite, got {a}")));
    }
    if k <= POCHHAMMER_DIRECT_MAX {
        return Ok((0..k).map(|i| (a + i as f64).ln()).sum());
    }
    Ok(lanczos_ln_gamma(a + k as f64) - lanczos_ln_gamma(a))
}

/// Regularized lower incomplete gamma: `P(X <= x)` for `X ~ Ga(shape, rate)`.
pub fn reg_gamma_cdf(shape: f64, rate: f64, x: f64) -> Result<f64> {
    check_gamma_args("reg_gamma_cdf", shape, rate, x)?;
    Ok(inc_gamma_pair(shape, rate * x).0)
}

/// Upper tail `P(X > x)` for `X ~ Ga(shape, rate)`, without cancellation.
pub fn reg_gamma_sf(shape: f64, rate: f64, x: f64) -> Result<f64> {
    check_gamma_args("reg_gamma_sf", shape, rate, x)?;
    Ok(inc_gamma_pair(shape, rate * x).1)
}

fn check_gamma_args(func: &'static str, shape: f64, rate: f64, x: f64) -> Result<()> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(domain(func, format!("shape must be positive, got {shape}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(domain(func, format!("rate must be positive, got {rate}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain(func, format!("x must be nonnegative, got {x}")));
    }
    Ok(())
}

/// Returns `(P(a, z), Q(a, z))`. Series for `z < a + 1`, Lentz continued
/// fraction otherwise; the complement is formed from whichever is small.
fn inc_gamma_pair(a: f64, z: f64) -> (f64, f64) {
    if z == 0.0 {
        return (0.0, 1.0);
    }
    if z.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefactor = a * z.ln() - z - lanczos_ln_gamma(a);
    if z < a + 1.0 {
        let p = (log_prefactor + series_sum(a, z).ln()).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let q = (log_prefactor + continued_fraction(a, z).ln()).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// `Σ_{n≥0} z^n / (a (a+1) ... (a+n))`.
fn series_sum(a: f64, z: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..INC_GAMMA_MAX_ITER {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term < sum * f64::EPSILON {
            break;
        }
    }
    sum
}

/// Modified Lentz evaluation of `1 / (z + 1 - a - 1(1-a)/(z + 3 - a - ...))`.
fn continued_fraction(a: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..INC_GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}

/// `ln Σ exp(v_i)`, shifted by the maximum. `-inf` entries are allowed.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(domain("log_sum_exp", "empty input"));
    }
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v.is_nan() || v == f64::INFINITY {
            return Err(domain("log_sum_exp", format!("invalid entry {v}")));
        }
        max = max.max(v);
    }
    if max == f64::NEG_INFINITY {
        return Err(domain("log_sum_exp", "all entries are -inf"));
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - Φ(z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Lookup table of `ln m` for small nonnegative integers, with a direct
/// fallback beyond the table. Used by the collapsed label update, whose
/// Pochhammer arguments are always integers.
#[derive(Debug, Clone)]
pub struct LnIntTable {
    table: Vec<f64>,
}

impl LnIntTable {
    /// Largest table this type will allocate (entries).
    pub const MAX_LEN: usize = 1 << 22;

    pub fn new(len: usize) -> Self {
        let len = len.min(Self::MAX_LEN);
        let table = (0..len)
            .map(|m| if m == 0 { f64::NEG_INFINITY } else { (m as f64).ln() })
            .collect();
        LnIntTable { table }
    }

    #[inline]
    pub fn ln(&self, m: u64) -> f64 {
        match self.table.get(m as usize) {
            Some(&v) => v,
            None => (m as f64).ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn erlang_sf(j: u32, x: f64) -> f64 {
        let mut term = (-x).exp();
        let mut sum = term;
        for i in 1..j {
            term *= x / i as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn log_gamma_fixed_points() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-14);
        let half = log_gamma(0.5).unwrap();
        assert!((half - PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn log_gamma_rejects_bad_input() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
        assert!(log_gamma(f64::INFINITY).is_err());
    }

    #[test]
    fn log_gamma_matches_factorials() {
        let mut ln_fact = 0.0_f64;
        for n in 1..=170u32 {
            // ln Γ(n+1) = ln n!
            ln_fact += (n as f64).ln();
            let got = log_gamma(n as f64 + 1.0).unwrap();
            assert!((got - ln_fact).abs() <= 1e-12 * ln_fact.max(1.0), "n = {n}");
        }
    }

    #[test]
    fn log_gamma_against_libm() {
        let mut x = 0.5;
        while x < 1e6 {
            let want = libm::lgamma(x);
            let got = log_gamma(x).unwrap();
            // absolute 1e-12 near the origin, relative beyond
            let tol = 1e-12 * want.abs().max(1.0);
            assert!((got - want).abs() <= tol, "x = {x}: {got} vs {want}");
            x *= 1.07;
        }
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(log_pochhammer(7.5, 0).unwrap(), 0.0);
        assert!((log_pochhammer(3.0, 2).unwrap() - 12f64.ln()).abs() < 1e-14);
        let direct = (10.0f64 * 11.0 * 12.0 * 13.0 * 14.0).ln();
        assert!((log_pochhammer(10.0, 5).unwrap() - direct).abs() < 1e-13);
        assert!(log_pochhammer(0.0, 3).is_err());
    }

    #[test]
    fn pochhammer_long_products_use_gamma_difference() {
        let a = 3.0;
        let k = 1_000;
        let direct: f64 = (0..k).map(|i| (a + i as f64).ln()).sum();
        assert!((log_pochhammer(a, k).unwrap() - direct).abs() < 1e-8);
    }

    #[test]
    fn gamma_cdf_examples() {
        let theta: f64 = 0.7;
        for &x in &[0.0, 0.1, 1.0, 5.0, 40.0] {
            let want = 1.0 - (-theta * x).exp();
            assert!((reg_gamma_cdf(1.0, theta, x).unwrap() - want).abs() < 1e-14);
        }
        assert_eq!(reg_gamma_cdf(4.0, 2.0, 0.0).unwrap(), 0.0);
        let erlang = 1.0 - 2.0 * (-1.0f64).exp();
        assert!((reg_gamma_cdf(2.0, 1.0, 1.0).unwrap() - erlang).abs() < 1e-10);
        assert!((erlang - 0.264_241_1).abs() < 1e-7);
    }

    #[test]
    fn gamma_cdf_domain_errors() {
        assert!(reg_gamma_cdf(0.0, 1.0, 1.0).is_err());
        assert!(reg_gamma_cdf(1.0, -1.0, 1.0).is_err());
        assert!(reg_gamma_cdf(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn gamma_sf_keeps_small_tails() {
        // Q(1, 800) = e^-800 is far below 1 - P in double precision.
        let q = reg_gamma_sf(1.0, 1.0, 700.0).unwrap();
        assert!((q.ln() + 700.0).abs() < 1e-9);
        for j in [1u32, 5, 30] {
            for &x in &[0.5, 10.0, 60.0] {
                let want = erlang_sf(j, x);
                let got = reg_gamma_sf(j as f64, 1.0, x).unwrap();
                assert!((got - want).abs() < 1e-12, "j={j} x={x}");
            }
        }
    }

    #[test]
    fn log_sum_exp_cases() {
        assert_eq!(log_sum_exp(&[0.0]).unwrap(), 0.0);
        let a = -3.25;
        assert!((log_sum_exp(&[a, a]).unwrap() - (a + 2f64.ln())).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[0.0, f64::NEG_INFINITY]).unwrap(), 0.0);
        assert!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).is_err());
        assert!(log_sum_exp(&[]).is_err());
        // no overflow for large magnitudes
        assert!((log_sum_exp(&[1000.0, 1000.0]).unwrap() - 1000.0 - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Φ(1.6448536269514722) = 0.95
        assert!((normal_cdf(1.644_853_626_951_472_2) - 0.95).abs() < 1e-14);
        let z = -8.0;
        // relative accuracy deep in the tail
        let want = 6.220_960_574_271_785e-16;
        assert!(((normal_cdf(z) - want) / want).abs() < 1e-12);
        assert!((normal_sf(-z) - normal_cdf(z)).abs() < 1e-30);
    }

    #[test]
    fn ln_table_falls_back_past_its_end() {
        let t = LnIntTable::new(10);
        assert_eq!(t.ln(0), f64::NEG_INFINITY);
        assert_eq!(t.ln(7), 7f64.ln());
        assert_eq!(t.ln(12345), 12345f64.ln());
    }
}
