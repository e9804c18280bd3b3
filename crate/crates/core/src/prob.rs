//! Exact probabilities.
//!
//! Every probability in a correlation model or box table is kept as an
//! arbitrary-precision rational. Inputs that arrive as floats are embedded
//! exactly (every finite `f64` is a rational), so table arithmetic —
//! conditioning, marginals, CHSH sums, polytope membership — never loses
//! precision, and dyadic paper values like 1/2 or 3/8 stay exact end to end.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::Error;

/// An exact rational number used for probabilities and table sums.
///
/// `Prob` is not clamped to [0,1]; sums and signed quantities (CHSH values,
/// violation magnitudes) use the same type. Range checks live with the
/// tables that need them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Prob(BigRational);

impl Prob {
    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    /// p/q from machine integers. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Prob(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: i64) -> Self {
        Prob(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact embedding of a finite float: the returned rational equals the
    /// binary value of `v` bit for bit.
    pub fn from_f64(v: f64) -> Result<Self, Error> {
        BigRational::from_float(v)
            .map(Prob)
            .ok_or_else(|| Error::BadProbability(format!("{v}")))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Prob(self.0.abs())
    }

    pub fn in_unit_interval(&self) -> bool {
        !self.0.is_negative() && self.0 <= BigRational::one()
    }

    /// |self - 1| <= tol, with `tol` itself exact.
    pub fn is_one_within(&self, tol: &Prob) -> bool {
        (self.clone() - Prob::one()).abs() <= *tol
    }

    pub fn rational(&self) -> &BigRational {
        &self.0
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Prob {
    type Err = Error;

    /// Accepts `p/q`, an integer, or a plain decimal such as `0.375`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::BadProbability(s.to_string());
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: BigInt = num.trim().parse().map_err(|_| bad())?;
            let d: BigInt = den.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Prob(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let int = if int.is_empty() { "0" } else { int };
            let neg = int.starts_with('-');
            let whole: BigInt = int.parse().map_err(|_| bad())?;
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits: BigInt = frac.parse().map_err(|_| bad())?;
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            let frac_part = BigRational::new(digits, scale);
            let whole_part = BigRational::from_integer(whole);
            let value = if neg { whole_part - frac_part } else { whole_part + frac_part };
            return Ok(Prob(value));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Prob(BigRational::from_integer(n)))
    }
}

impl Add for Prob {
    type Output = Prob;
    fn add(self, rhs: Prob) -> Prob {
        Prob(self.0 + rhs.0)
    }
}

impl AddAssign for Prob {
    fn add_assign(&mut self, rhs: Prob) {
        self.0 += rhs.0;
    }
}

impl Sub for Prob {
    type Output = Prob;
    fn sub(self, rhs: Prob) -> Prob {
        Prob(self.0 - rhs.0)
    }
}

impl Mul for Prob {
    type Output = Prob;
    fn mul(self, rhs: Prob) -> Prob {
        Prob(self.0 * rhs.0)
    }
}

impl Div for Prob {
    type Output = Prob;
    fn div(self, rhs: Prob) -> Prob {
        Prob(self.0 / rhs.0)
    }
}

impl Neg for Prob {
    type Output = Prob;
    fn neg(self) -> Prob {
        Prob(-self.0)
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

struct ProbVisitor;

impl<'de> Visitor<'de> for ProbVisitor {
    type Value = Prob;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a probability as a string like \"3/4\" or a number")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Prob, E> {
        v.parse().map_err(|e| E::custom(format!("{e}")))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Prob, E> {
        Prob::from_f64(v).map_err(|e| E::custom(format!("{e}")))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Prob, E> {
        Ok(Prob(BigRational::from_integer(BigInt::from(v))))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Prob, E> {
        Ok(Prob::from_int(v))
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Prob, D::Error> {
        deserializer.deserialize_any(ProbVisitor)
    }
}

/// 10^-12 as an exact rational, the tolerance used by table validation.
pub fn table_tolerance() -> Prob {
    Prob::ratio(1, 1_000_000_000_000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!("3/4".parse::<Prob>().unwrap(), Prob::ratio(3, 4));
        assert_eq!("1".parse::<Prob>().unwrap(), Prob::one());
        assert_eq!("0.375".parse::<Prob>().unwrap(), Prob::ratio(3, 8));
        assert_eq!("-0.5".parse::<Prob>().unwrap(), Prob::ratio(-1, 2));
        assert_eq!("6/8".parse::<Prob>().unwrap(), Prob::ratio(3, 4));
        assert!("1/0".parse::<Prob>().is_err());
        assert!("abc".parse::<Prob>().is_err());
    }

    #[test]
    fn dyadic_floats_embed_exactly() {
        assert_eq!(Prob::from_f64(0.375).unwrap(), Prob::ratio(3, 8));
        assert_eq!(Prob::from_f64(0.5).unwrap(), Prob::ratio(1, 2));
        assert!(Prob::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        let three_fourths = Prob::ratio(3, 4);
        let one_fourth = Prob::ratio(1, 4);
        assert_eq!(three_fourths.clone() + one_fourth.clone(), Prob::one());
        assert_eq!(three_fourths.clone() * one_fourth, Prob::ratio(3, 16));
        assert_eq!(three_fourths / Prob::ratio(3, 2), Prob::ratio(1, 2));
    }

    #[test]
    fn display_round_trips() {
        for s in ["0", "1", "3/4", "-3/8"] {
            let p: Prob = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
            assert_eq!(p.to_string().parse::<Prob>().unwrap(), p);
        }
    }

    #[test]
    fn serde_accepts_both_forms() {
        let from_str: Prob = serde_json::from_str("\"3/8\"").unwrap();
        let from_num: Prob = serde_json::from_str("0.375").unwrap();
        assert_eq!(from_str, from_num);
        assert_eq!(serde_json::to_string(&from_str).unwrap(), "\"3/8\"");
    }
}
