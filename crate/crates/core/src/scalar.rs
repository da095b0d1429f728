//! Arithmetic abstraction shared by the float and exact-rational code paths.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// A field element usable by every generic formula in the crate.
///
/// `f64` gives the fast path; [`Rational`] gives literal-zero identity checks.
pub trait Scalar:
    Clone + Debug + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    fn int(k: i64) -> Self {
        Self::from_i64(k).expect("integer conversion")
    }

    /// Integer power, negative exponents allowed.
    fn ipow(&self, k: i64) -> Self {
        if k < 0 {
            return Self::one() / self.ipow(-k);
        }
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn ipow(&self, k: i64) -> Self {
        if k.unsigned_abs() < i32::MAX as u64 {
            self.powi(k as i32)
        } else {
            self.powf(k as f64)
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

/// Exact binary value of a finite float.
pub fn rational_from_f64(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite float")
}

fn ln_bigint(b: &BigInt) -> f64 {
    let bits = b.bits();
    if bits <= 1000 {
        return b.to_f64().unwrap().abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = b.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of |r|; `-inf` for zero. Works far outside the f64 range.
pub fn ln_abs_rational(r: &Rational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// Sign of a scalar as -1, 0 or 1.
pub fn sign_of<S: Scalar>(x: &S) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Parses `3/10`, `-2`, `0.25`, `1.5e-3` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let num: BigInt = a.trim().parse().map_err(|_| bad())?;
        let den: BigInt = b.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32 - 1;
    let ten = Rational::from_integer(BigInt::from(10));
    let mut r = Rational::from_integer(digits) * ten.ipow(scale as i64);
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Renders a rational as `p/q` (or `p` when integral).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn parses_fraction_and_decimal_literals() {
        assert_eq!(parse_rational("3/10").unwrap(), q(3, 10));
        assert_eq!(parse_rational("0.3").unwrap(), q(3, 10));
        assert_eq!(parse_rational("-1.25").unwrap(), q(-5, 4));
        assert_eq!(parse_rational("25e-2").unwrap(), q(1, 4));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn ipow_handles_negative_exponents() {
        assert_eq!(q(2, 3).ipow(-2), q(9, 4));
        assert_eq!(q(2, 3).ipow(0), q(1, 1));
        assert!((0.5f64.ipow(-3) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn log_of_huge_rationals() {
        let r = q(1, 3).ipow(2000);
        let expected = -2000.0 * 3f64.ln();
        assert!((ln_abs_rational(&r) - expected).abs() < 1e-9);
        assert_eq!(ln_abs_rational(&q(0, 1)), f64::NEG_INFINITY);
    }

    #[test]
    fn binary_value_is_exact() {
        let r = rational_from_f64(0.1);
        assert_eq!(r.to_f64().unwrap(), 0.1);
        assert_ne!(r, q(1, 10));
    }
}
