//! Exact rational helpers on top of [`num_rational::BigRational`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision fraction, always in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: impl Into<BigInt>) -> Rational {
    Rational::from_integer(value.into())
}

/// Parses `p/q` or a bare integer. No whitespace, no decimals, nonzero
/// denominator.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::arg(format!("expected a rational `p/q` or an integer, got {text:?}"));
    let parse_int = |s: &str| -> Result<BigInt> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        s.parse::<BigInt>().map_err(|_| bad())
    };
    match text.split_once('/') {
        Some((n, d)) => {
            let numer = parse_int(n)?;
            let denom = parse_int(d)?;
            if denom.is_zero() {
                return Err(Error::arg(format!("zero denominator in {text:?}")));
            }
            Ok(Rational::new(numer, denom))
        }
        None => Ok(Rational::from_integer(parse_int(text)?)),
    }
}

/// Always `p/q`, including integers (`1/1`, `0/1`).
pub fn exact(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering rounded half-up to `sig` significant digits, without an
/// exponent.
pub fn decimal(r: &Rational, sig: usize) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return "0".to_string();
    }
    let negative = r.is_negative();
    let mag = r.abs();

    // exponent e with 10^e <= mag < 10^(e+1)
    let ten = int(10);
    let mut e: i64 = 0;
    let mut probe = Rational::one();
    if mag >= probe {
        while mag >= &probe * &ten {
            probe *= &ten;
            e += 1;
        }
    } else {
        while mag < probe {
            probe /= &ten;
            e -= 1;
        }
    }

    let shift = sig as i64 - 1 - e;
    let scaled = if shift >= 0 {
        &mag * int(BigInt::from(10).pow(shift as u32))
    } else {
        &mag / int(BigInt::from(10).pow((-shift) as u32))
    };
    let twice: BigInt = scaled.numer() * 2 + scaled.denom();
    let mut digits = twice.div_floor(&(scaled.denom() * 2));
    let mut shift = shift;
    if digits.to_string().len() > sig {
        // rounding carried into a new leading digit
        digits /= 10;
        shift -= 1;
    }

    let mut text = digits.to_string();
    if shift > 0 {
        let shift = shift as usize;
        if text.len() <= shift {
            text = format!("{}{}", "0".repeat(shift - text.len() + 1), text);
        }
        let point = text.len() - shift;
        text.insert(point, '.');
        let trimmed = text.trim_end_matches('0').trim_end_matches('.');
        text = trimmed.to_string();
    } else {
        text.push_str(&"0".repeat((-shift) as usize));
    }
    if negative {
        text.insert(0, '-');
    }
    text
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapters rendering rationals as `p/q` strings.
pub mod serde_exact {
    use super::{exact, parse_rational, Rational};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&exact(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(rs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(rs.len()))?;
            for r in rs {
                seq.serialize_element(&exact(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let texts = Vec::<String>::deserialize(d)?;
            texts
                .iter()
                .map(|t| parse_rational(t).map_err(D::Error::custom))
                .collect()
        }
    }
}
