//! Exact rational numbers.
//!
//! Every probability, weight and threshold in the crate is a [`Rat`]. The
//! representation is always normalized (positive denominator, lowest terms),
//! so structural equality is numeric equality.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatParseError {
    #[error("malformed rational `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    /// `num / den`, normalized. Panics on a zero denominator.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Rat(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rat(BigRational::from_integer(n.into()))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn pow(&self, exp: u32) -> Rat {
        Rat(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn recip(&self) -> Rat {
        Rat(self.0.recip())
    }

    /// Lossy conversion for display and statistical comparisons only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal rendering with `digits` fractional digits, truncated toward zero.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = (self.0.numer().abs() * &scale) / self.0.denom();
        let (int, frac) = scaled.div_rem(&scale);
        let sign = if self.is_negative() { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{:0>width$}", frac, width = digits)
        }
    }

    /// `num / den` from unsigned parts. Panics on a zero denominator.
    pub fn from_biguints(num: BigUint, den: BigUint) -> Self {
        Rat(BigRational::new(
            BigInt::from_biguint(Sign::Plus, num),
            BigInt::from_biguint(Sign::Plus, den),
        ))
    }
}

/// Least common multiple of the denominators of `xs` (1 for an empty slice).
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Rat>) -> BigUint {
    xs.into_iter().fold(BigUint::one(), |acc, r| {
        let d = r.denom().magnitude();
        acc.lcm(d)
    })
}

/// Numerator of `r` once rescaled to the denominator `d`. `d` must be a
/// multiple of `r`'s denominator and `r` must be nonnegative.
pub fn scaled_numerator(r: &Rat, d: &BigUint) -> BigUint {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    num * (d / den)
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rat {
    type Err = RatParseError;

    /// Accepts `a`, `a/b` and an optional leading `-`. No decimals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || RatParseError::Malformed(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let parse_nat = |x: &str| -> Result<BigInt, RatParseError> {
            if x.is_empty() || !x.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            BigInt::from_str(x).map_err(|_| malformed())
        };
        let (n, d) = match body.split_once('/') {
            Some((n, d)) => (parse_nat(n.trim())?, parse_nat(d.trim())?),
            None => (parse_nat(body)?, BigInt::one()),
        };
        if d.is_zero() {
            return Err(RatParseError::ZeroDenominator(s.to_string()));
        }
        let n = if neg { -n } else { n };
        Ok(Rat::new(n, d))
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat(r)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                Rat(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$m(&rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $m(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$m(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

impl serde::Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
