use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact utility value.
///
/// JSON numbers are read through their shortest decimal representation, so
/// `0.1` is exactly one tenth and boundary comparisons such as
/// `u'_i >= 2 u^i_y` are decided without rounding. Strings of the form
/// `"7/3"` are accepted for values with no finite decimal expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Payoff(pub Ratio<i128>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid utility value `{0}`")]
pub struct PayoffParseError(pub String);

impl Payoff {
    pub const ZERO: Payoff = Payoff(Ratio::new_raw(0, 1));

    pub fn int(v: i64) -> Self {
        Payoff(Ratio::from_integer(v as i128))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Payoff(Ratio::new(num as i128, den as i128))
    }

    pub fn from_f64(v: f64) -> Result<Self, PayoffParseError> {
        if !v.is_finite() {
            return Err(PayoffParseError(v.to_string()));
        }
        parse_decimal(&v.to_string()).ok_or_else(|| PayoffParseError(v.to_string()))
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(self) -> bool {
        self.0.is_integer()
    }

    pub fn scale(self, num: i64, den: i64) -> Self {
        Payoff(self.0 * Ratio::new(num as i128, den as i128))
    }
}

fn pow10(exp: u32) -> Option<i128> {
    10i128.checked_pow(exp)
}

fn parse_decimal(s: &str) -> Option<Payoff> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num: i128 = if all.is_empty() { 0 } else { all.parse().ok()? };
    let mut scale = frac_part.len() as i32 - exp;
    let mut den: i128 = 1;
    if scale > 0 {
        den = pow10(scale as u32)?;
    } else if scale < 0 {
        scale = -scale;
        num = num.checked_mul(pow10(scale as u32)?)?;
    }
    if neg {
        num = -num;
    }
    Some(Payoff(Ratio::new(num, den)))
}

impl FromStr for Payoff {
    type Err = PayoffParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PayoffParseError(s.to_owned());
        if let Some((n, d)) = s.split_once('/') {
            let n: i128 = n.trim().parse().map_err(|_| err())?;
            let d: i128 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            return Ok(Payoff(Ratio::new(n, d)));
        }
        parse_decimal(s).ok_or_else(err)
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            return write!(f, "{}", self.0.numer());
        }
        // Finite decimal if the reduced denominator is 2^a 5^b.
        let mut d = *self.0.denom();
        let mut digits = 0u32;
        while d % 10 == 0 {
            d /= 10;
            digits += 1;
        }
        while d % 2 == 0 || d % 5 == 0 {
            d /= if d % 2 == 0 { 2 } else { 5 };
            digits += 1;
        }
        if d == 1 && digits <= 30 {
            let scaled = self.0 * Ratio::from_integer(10i128.pow(digits));
            let n = scaled.to_integer();
            let sign = if n < 0 { "-" } else { "" };
            let abs = n.unsigned_abs();
            let p = 10u128.pow(digits);
            let frac = format!("{:0width$}", abs % p, width = digits as usize);
            write!(f, "{sign}{}.{}", abs / p, frac.trim_end_matches('0'))
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Payoff {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Ok(v) = i64::try_from(*self.0.numer()) {
                return s.serialize_i64(v);
            }
        }
        let f = self.to_f64();
        if Payoff::from_f64(f).ok() == Some(*self) {
            s.serialize_f64(f)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

struct PayoffVisitor;

impl Visitor<'_> for PayoffVisitor {
    type Value = Payoff;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a string such as \"7/3\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Payoff, E> {
        Ok(Payoff::int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Payoff, E> {
        Ok(Payoff(Ratio::from_integer(v as i128)))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Payoff, E> {
        Payoff::from_f64(v).map_err(E::custom)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Payoff, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Payoff {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(PayoffVisitor)
    }
}

impl Add for Payoff {
    type Output = Payoff;
    fn add(self, o: Payoff) -> Payoff {
        Payoff(self.0 + o.0)
    }
}

impl AddAssign for Payoff {
    fn add_assign(&mut self, o: Payoff) {
        self.0 += o.0;
    }
}

impl Sub for Payoff {
    type Output = Payoff;
    fn sub(self, o: Payoff) -> Payoff {
        Payoff(self.0 - o.0)
    }
}

impl Mul for Payoff {
    type Output = Payoff;
    fn mul(self, o: Payoff) -> Payoff {
        Payoff(self.0 * o.0)
    }
}

impl Neg for Payoff {
    type Output = Payoff;
    fn neg(self) -> Payoff {
        Payoff(-self.0)
    }
}

impl Sum for Payoff {
    fn sum<I: Iterator<Item = Payoff>>(iter: I) -> Payoff {
        iter.fold(Payoff::ZERO, |a, b| a + b)
    }
}

impl Zero for Payoff {
    fn zero() -> Self {
        Payoff::ZERO
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl From<i64> for Payoff {
    fn from(v: i64) -> Self {
        Payoff::int(v)
    }
}
