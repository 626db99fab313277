//! Exact rational scalars and their text form.
//!
//! Text form is either an integer (`-3`), a fraction (`7/4`) or a finite
//! decimal (`-1.25`). Formatting always produces the first two forms, so
//! `parse(format(x)) == x` for every value.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn frac(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn parse(text: &str) -> Result<Rational> {
    let err = || Error::ParseRational(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = parse_int(num.trim()).ok_or_else(err)?;
        let den: BigInt = parse_int(den.trim()).ok_or_else(err)?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, fraction) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && fraction.is_empty() {
        return Err(err());
    }
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(whole) || !all_digits(fraction) {
        return Err(err());
    }
    let digits = format!("{whole}{fraction}");
    let mut numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| err())?
    };
    if negative {
        numer = -numer;
    }
    let denom = num_traits::pow(BigInt::from(10), fraction.len());
    Ok(Rational::new(numer, denom))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// `p` for integers, `p/q` otherwise.
pub fn format(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Rounds to the nearest integer, halves away from zero.
pub fn round_half_away(value: &Rational) -> BigInt {
    value.round().to_integer()
}

/// Returns `Some(n)` when `value == n * unit` for an integer `n`.
pub fn integer_multiple(value: &Rational, unit: &Rational) -> Option<BigInt> {
    if unit.is_zero() {
        return None;
    }
    let q = value / unit;
    q.is_integer().then(|| q.to_integer())
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

pub fn is_negative(value: &Rational) -> bool {
    value.is_negative()
}
