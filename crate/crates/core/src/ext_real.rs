//! Nonnegative extended reals with exact rational arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A value in `[0, ∞]`.
///
/// Infinity absorbs both operations, including `∞ · 0 = ∞`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtReal {
    Finite(BigRational),
    Infinity,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(BigRational::zero())
    }

    pub fn one() -> Self {
        ExtReal::Finite(BigRational::one())
    }

    pub fn infinity() -> Self {
        ExtReal::Infinity
    }

    /// Panics on a negative argument.
    pub fn from_int(n: i64) -> Self {
        assert!(n >= 0, "ExtReal must be nonnegative, got {n}");
        ExtReal::Finite(BigRational::from_integer(BigInt::from(n)))
    }

    /// Panics on a negative or zero-denominator argument.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Panics on a negative argument.
    pub fn from_rational(q: BigRational) -> Self {
        assert!(!q.is_negative(), "ExtReal must be nonnegative, got {q}");
        ExtReal::Finite(q)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtReal::Finite(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, ExtReal::Finite(q) if q.is_one())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_infinite()
    }

    /// True for finite integers.
    pub fn is_natural(&self) -> bool {
        matches!(self, ExtReal::Finite(q) if q.is_integer())
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            ExtReal::Finite(q) => Some(q),
            ExtReal::Infinity => None,
        }
    }

    /// Truncated subtraction of one; `∞ - 1 = ∞`.
    pub fn pred(&self) -> ExtReal {
        match self {
            ExtReal::Infinity => ExtReal::Infinity,
            ExtReal::Finite(q) => {
                let d = q - BigRational::one();
                if d.is_negative() {
                    ExtReal::zero()
                } else {
                    ExtReal::Finite(d)
                }
            }
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Infinity => f64::INFINITY,
            ExtReal::Finite(q) => q.to_f64().unwrap_or(f64::INFINITY),
        }
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => Ordering::Equal,
            (ExtReal::Infinity, _) => Ordering::Greater,
            (_, ExtReal::Infinity) => Ordering::Less,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinity,
        }
    }
}

impl<'a> Add<&'a ExtReal> for &'a ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: &ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinity,
        }
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: ExtReal) -> ExtReal {
        &self * &rhs
    }
}

impl<'a> Mul<&'a ExtReal> for &'a ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: &ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a * b),
            _ => ExtReal::Infinity,
        }
    }
}

impl From<u64> for ExtReal {
    fn from(n: u64) -> Self {
        ExtReal::Finite(BigRational::from_integer(BigInt::from(n)))
    }
}

/// Formats a rational as `n` or `p/q`.
pub fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Infinity => f.write_str("inf"),
            ExtReal::Finite(q) => f.write_str(&fmt_rational(q)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_zero() {
        assert_eq!(ExtReal::Infinity * ExtReal::zero(), ExtReal::Infinity);
        assert_eq!(ExtReal::zero() * ExtReal::Infinity, ExtReal::Infinity);
        assert_eq!(ExtReal::Infinity + ExtReal::zero(), ExtReal::Infinity);
    }

    #[test]
    fn order_puts_infinity_on_top() {
        assert!(ExtReal::from_int(1_000_000) < ExtReal::Infinity);
        assert!(ExtReal::from_ratio(1, 2) < ExtReal::one());
        assert_eq!(ExtReal::Infinity.cmp(&ExtReal::Infinity), Ordering::Equal);
    }

    #[test]
    fn pred_truncates() {
        assert_eq!(ExtReal::from_int(3).pred(), ExtReal::from_int(2));
        assert_eq!(ExtReal::from_ratio(1, 2).pred(), ExtReal::zero());
        assert_eq!(ExtReal::Infinity.pred(), ExtReal::Infinity);
    }

    #[test]
    fn display() {
        assert_eq!(ExtReal::from_ratio(6, 4).to_string(), "3/2");
        assert_eq!(ExtReal::from_int(7).to_string(), "7");
        assert_eq!(ExtReal::Infinity.to_string(), "inf");
    }
}
