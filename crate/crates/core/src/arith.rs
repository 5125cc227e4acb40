//! Exact integer/rational arithmetic and the combinatorial primitives built on it.

use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type BigRat = num_rational::BigRational;

static FACTORIALS: OnceLock<RwLock<Vec<BigInt>>> = OnceLock::new();

fn table() -> &'static RwLock<Vec<BigInt>> {
    FACTORIALS.get_or_init(|| RwLock::new(vec![BigInt::one()]))
}

/// Extends the shared factorial table to cover `0..=n`.
///
/// Call this before a parallel section so that workers only ever take the read lock.
pub fn prepare_factorials(n: usize) {
    let t = table();
    if t.read().unwrap().len() > n {
        return;
    }
    let mut w = t.write().unwrap();
    while w.len() <= n {
        let k = w.len();
        let next = &w[k - 1] * BigInt::from(k);
        w.push(next);
    }
}

pub fn factorial(n: usize) -> BigInt {
    prepare_factorials(n);
    table().read().unwrap()[n].clone()
}

/// C(n, k), zero outside 0 <= k <= n.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// (sum parts)! / prod(parts!).
pub fn multinomial(parts: &[usize]) -> BigInt {
    assert!(!parts.is_empty(), "multinomial of an empty list");
    let total: usize = parts.iter().sum();
    prepare_factorials(total);
    let t = table().read().unwrap();
    let den = parts.iter().fold(BigInt::one(), |acc, &p| acc * &t[p]);
    &t[total] / den
}

/// n!/(n+m)!, for any integer m with n + m >= 0.
pub fn falling_quotient(n: u64, m: i64) -> Result<BigRat> {
    let top = n as i64 + m;
    if top < 0 {
        return Err(Error::invalid(format!("n + m = {top} is negative")));
    }
    let lo = n.min(top as u64);
    let hi = n.max(top as u64);
    let mut prod = BigInt::one();
    for j in lo + 1..=hi {
        prod *= j;
    }
    Ok(if m <= 0 {
        BigRat::from_integer(prod)
    } else {
        BigRat::new(BigInt::one(), prod)
    })
}

pub fn pow(base: &BigInt, exp: usize) -> BigInt {
    num_traits::pow(base.clone(), exp)
}

pub fn rat(num: i64, den: i64) -> BigRat {
    BigRat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: impl Into<BigInt>) -> BigRat {
    BigRat::from_integer(v.into())
}

pub fn rat_pow(base: &BigRat, exp: i32) -> BigRat {
    num_traits::Pow::pow(base, exp)
}

/// Natural log of a positive integer, accurate for values far beyond f64 range.
pub fn ln_big(x: &BigInt) -> f64 {
    assert!(x.sign() == Sign::Plus, "ln of a nonpositive integer");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rat(x: &BigRat) -> f64 {
    ln_big(x.numer()) - ln_big(x.denom())
}

/// Nearest f64 to a rational, including huge or tiny magnitudes when they fit.
pub fn rat_to_f64(x: &BigRat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64())
        && n.is_finite()
        && d.is_finite()
        && n.abs() < 1e300
        && d < 1e300
    {
        return n / d;
    }
    let s = if x.is_negative() { -1.0 } else { 1.0 };
    s * ln_rat(&x.abs()).exp()
}

/// Exact rational with the same value as a finite f64.
pub fn f64_to_rat(x: f64) -> Result<BigRat> {
    BigRat::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not finite")))
}

/// Parses "p/q", an integer, or a decimal literal such as "0.25" into an exact rational.
pub fn parse_rat(s: &str) -> Result<BigRat> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse rational {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRat::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let ip: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().map_err(|_| bad())? };
        let fv: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = pow(&BigInt::from(10), fp.len());
        let v = BigRat::new(ip * &scale + fv, scale);
        return Ok(if neg { -v } else { v });
    }
    s.parse::<BigInt>().map(BigRat::from_integer).map_err(|_| bad())
}

pub fn rat_to_string(x: &BigRat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Exact division; panics if `b` does not divide `a`.
pub fn exact_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    assert!(r.is_zero(), "inexact division");
    q
}

const STIRLING: [(f64, f64); 4] = [
    (1.0, 12.0),
    (1.0, 288.0),
    (-139.0, 51840.0),
    (-571.0, 2488320.0),
];

/// Stirling correction bracket 1 + 1/(12n) + ... truncated after `order` terms.
pub fn stirling_bracket(n: f64, order: usize) -> f64 {
    let mut s = 1.0;
    for (j, (p, q)) in STIRLING.iter().take(order).enumerate() {
        s += p / (q * n.powi(j as i32 + 1));
    }
    s
}

pub fn stirling_coefficients() -> [(i64, i64); 4] {
    STIRLING.map(|(p, q)| (p as i64, q as i64))
}

/// ln of the Stirling approximant to n!.
pub fn stirling_factorial_ln(n: u64, order: usize) -> f64 {
    assert!(n >= 1 && order <= 4);
    let x = n as f64;
    0.5 * (2.0 * std::f64::consts::PI * x).ln() + x * (x.ln() - 1.0) + stirling_bracket(x, order).ln()
}

pub fn stirling_factorial(n: u64, order: usize) -> f64 {
    stirling_factorial_ln(n, order).exp()
}

const CENTRAL_BINOMIAL: [(f64, f64); 4] = [(-1.0, 8.0), (1.0, 128.0), (5.0, 1024.0), (-21.0, 32768.0)];

pub fn central_binomial_bracket() -> [(i64, i64); 4] {
    CENTRAL_BINOMIAL.map(|(p, q)| (p as i64, q as i64))
}

/// ln of the asymptotic value of C(2n, n).
pub fn central_binomial_asymptotic_ln(n: u64) -> f64 {
    assert!(n >= 1);
    let x = n as f64;
    let mut br = 1.0;
    for (j, (p, q)) in CENTRAL_BINOMIAL.iter().enumerate() {
        br += p / (q * x.powi(j as i32 + 1));
    }
    2.0 * x * std::f64::consts::LN_2 - 0.5 * (std::f64::consts::PI * x).ln() + br.ln()
}

pub fn central_binomial_asymptotic(n: u64) -> f64 {
    central_binomial_asymptotic_ln(n).exp()
}

/// ln of the asymptotic value of (n^2)!/(n!)^n.
pub fn central_multinomial_asymptotic_ln(n: u64) -> f64 {
    assert!(n >= 1);
    let x = n as f64;
    let br = 1.0 + 31.0 / (360.0 * x * x) + 5287.0 / (181440.0 * x.powi(4));
    (x * x - x / 2.0 + 1.0) * x.ln() - (x - 1.0) / 2.0 * (2.0 * std::f64::consts::PI).ln() - 1.0 / 12.0
        + br.ln()
}

pub fn central_multinomial_asymptotic(n: u64) -> f64 {
    central_multinomial_asymptotic_ln(n).exp()
}

/// Serde helpers writing big numbers as decimal strings ("p/q" for non-integral rationals).
pub mod ser {
    use super::{BigInt, BigRat, rat_to_string};
    use serde::Serializer;

    pub fn int<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn rat<S: Serializer>(v: &BigRat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(v))
    }

    pub fn opt_rat<S: Serializer>(v: &Option<BigRat>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&rat_to_string(v)),
            None => s.serialize_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(4), BigInt::from(24));
        let mut p = BigInt::one();
        for i in 1..=10u32 {
            p *= i;
        }
        assert_eq!(factorial(10), p);
        for n in 0..60usize {
            assert_eq!(factorial(n + 1), factorial(n) * (n + 1));
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(0, -1), BigInt::zero());
        assert_eq!(binomial(4, 5), BigInt::zero());
        assert_eq!(binomial(10, 5), factorial(10) / (factorial(5) * factorial(5)));
        for n in 1..=12i64 {
            let c = binomial(2 * n, n);
            for i in 0..=2 * n {
                if i != n {
                    assert!(binomial(2 * n, i) < c);
                }
            }
        }
        for n in 1..30i64 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), binomial(n, n - k));
                assert_eq!(binomial(n, k), binomial(n - 1, k) + binomial(n - 1, k - 1));
            }
        }
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&[2, 2]), BigInt::from(6));
        assert_eq!(multinomial(&[4, 0]), BigInt::one());
        assert_eq!(multinomial(&[1, 1, 1, 1]), BigInt::from(24));
        for n in 1..7usize {
            let parts = vec![n; n];
            let back = multinomial(&parts) * num_traits::pow(factorial(n), n);
            assert_eq!(back, factorial(n * n));
        }
    }

    #[test]
    fn falling_quotients() {
        assert_eq!(falling_quotient(2, -1).unwrap(), rat(2, 1));
        assert_eq!(falling_quotient(7, 0).unwrap(), rat(1, 1));
        assert_eq!(falling_quotient(2, 2).unwrap(), rat(1, 12));
        assert!(falling_quotient(2, -3).is_err());
        for n in 0..12u64 {
            for m in -(n as i64)..8 {
                let a = falling_quotient(n, m).unwrap();
                let b = falling_quotient((n as i64 + m) as u64, -m).unwrap();
                assert_eq!(a * b, rat(1, 1));
            }
        }
    }

    #[test]
    fn stirling() {
        let exact = factorial(10).to_f64().unwrap();
        assert!((stirling_factorial(10, 4) / exact - 1.0).abs() < 1e-8);
        let s1 = stirling_factorial(1, 0);
        assert!((s1 - (2.0 * std::f64::consts::PI).sqrt() / std::f64::consts::E).abs() < 1e-12);
        assert!((s1 - 0.922).abs() < 1e-3);
        assert_eq!(stirling_coefficients()[0], (1, 12));
        assert_eq!(stirling_coefficients()[1], (1, 288));
        let mut prev = f64::INFINITY;
        for n in 5..=50u64 {
            let err = (ln_big(&factorial(n as usize)) - stirling_factorial_ln(n, 0)).abs();
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn central_asymptotics() {
        let c = binomial(40, 20).to_f64().unwrap();
        assert!((c / central_binomial_asymptotic(20) - 1.0).abs() < 1e-4);
        assert_eq!(central_binomial_bracket()[0], (-1, 8));
        assert_eq!(central_binomial_bracket()[1], (1, 128));
        let exact = ln_big(&multinomial(&[4, 4, 4, 4]));
        assert!((exact - central_multinomial_asymptotic_ln(4)).abs() < 1e-2);
        let exact10 = ln_big(&multinomial(&[10; 10]));
        assert!((exact10 - central_multinomial_asymptotic_ln(10)).abs() < 1e-5);
    }

    #[test]
    fn logs_and_conversions() {
        let big = factorial(400);
        let want: f64 = (1..=400).map(|i| (i as f64).ln()).sum();
        assert!((ln_big(&big) - want).abs() < 1e-9 * want);
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("7").unwrap(), rat(7, 1));
        assert!(parse_rat("1/0").is_err());
        assert_eq!(rat_to_string(&rat(262, 243)), "262/243");
        assert!((rat_to_f64(&BigRat::new(factorial(300), factorial(299))) - 300.0).abs() < 1e-9);
    }
}
