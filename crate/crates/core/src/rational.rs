//! Exact rational helpers shared by the analytic modules.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `4^(-k)`.
pub fn pow4_inv(k: u64) -> Q {
    Q::new(BigInt::one(), BigInt::one() << (2 * k as usize))
}

/// `2^(-k)`.
pub fn pow2_inv(k: u64) -> Q {
    Q::new(BigInt::one(), BigInt::one() << (k as usize))
}

/// Smallest `k >= 0` with `4^(-k) <= d`, for `0 < d`.
pub fn log4_ceil_inv(d: &Q) -> u64 {
    debug_assert!(d.is_positive());
    let num = d.numer();
    let den = d.denom();
    let gap = den.bits() as i64 - num.bits() as i64;
    let mut k = (gap / 2 - 1).max(0) as u64;
    while (num << (2 * k as usize)) < *den {
        k += 1;
    }
    k
}

/// Parse `n`, `-n`, `n/d` or a finite decimal such as `0.25`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((i, f)) = s.split_once('.') {
        if f.is_empty() || !f.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = i.starts_with('-');
        let whole: BigInt = if i.is_empty() || i == "-" { BigInt::zero() } else { i.parse().map_err(|_| bad())? };
        let frac: BigInt = f.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), f.len());
        let frac = Q::new(frac, scale);
        let whole = Q::from_integer(whole.abs());
        let v = whole + frac;
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

/// Always `num/den`, so integers print as `n/1`.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Serde adapter printing a rational as `num/den`.
pub fn ser_q<S: serde::Serializer>(x: &Q, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&fmt_q(x))
}

/// Approximate decimal rendering for CSV columns and diagnostics.
pub fn to_f64(x: &Q) -> f64 {
    let (n, d) = (x.numer(), x.denom());
    let shift = (n.bits().max(d.bits()) as i64 - 60).max(0) as usize;
    let n = (n >> shift).to_string().parse::<f64>().unwrap_or(f64::NAN);
    let d = (d >> shift).to_string().parse::<f64>().unwrap_or(f64::NAN);
    n / d
}

/// Floor of a rational as a big integer.
pub fn floor(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn min_q(a: &Q, b: &Q) -> Q {
    if a <= b { a.clone() } else { b.clone() }
}

pub fn max_q(a: &Q, b: &Q) -> Q {
    if a >= b { a.clone() } else { b.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing_and_printing() {
        assert_eq!(parse_q("1/4").unwrap(), q(1, 4));
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-3").unwrap(), int(-3));
        assert_eq!(fmt_q(&int(2)), "2/1");
        assert_eq!(fmt_q(&q(6, 8)), "3/4");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn log4() {
        assert_eq!(log4_ceil_inv(&q(1, 1)), 0);
        assert_eq!(log4_ceil_inv(&q(1, 4)), 1);
        assert_eq!(log4_ceil_inv(&q(1, 5)), 2);
        assert_eq!(log4_ceil_inv(&q(1, 16)), 2);
        assert_eq!(log4_ceil_inv(&pow4_inv(40)), 40);
        assert_eq!(log4_ceil_inv(&int(7)), 0);
    }
}
