//! Exact rationals used for lattice scales.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Numerator/denominator pair in lowest terms.
pub type Rational = Ratio<i128>;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v as i128)
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(numer as i128, denom as i128)
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Largest rational `g` such that both `a / g` and `b / g` are integers.
pub fn gcd(a: &Rational, b: &Rational) -> Rational {
    let num = (a.numer() * b.denom()).gcd(&(b.numer() * a.denom()));
    Rational::new(num, a.denom() * b.denom())
}

/// `Some(k)` when `a / b` is the integer `k`.
pub fn integer_ratio(a: &Rational, b: &Rational) -> Option<i128> {
    if b.is_zero() {
        return None;
    }
    let q = a / b;
    q.is_integer().then(|| q.to_integer())
}

/// Parses `"5"`, `"-3/2"` or a plain decimal such as `"0.25"`.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::InvalidParameter(format!("cannot parse rational {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_abs = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() || frac.len() > 30 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let w: i128 = if whole_abs.is_empty() { 0 } else { whole_abs.parse().map_err(|_| bad())? };
        let f: i128 = frac.parse().map_err(|_| bad())?;
        let den = 10i128.pow(frac.len() as u32);
        let mag = Rational::new(w * den + f, den);
        return Ok(if negative { -mag } else { mag });
    }
    text.parse::<i128>().map(Rational::from_integer).map_err(|_| bad())
}

pub fn format(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter writing rationals as `"n/d"` strings.
pub mod as_string {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for vectors of rationals, each written as a string.
pub mod vec_as_string {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(super::format).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|t| super::parse(t).map_err(serde::de::Error::custom)).collect()
    }
}
