//! Exact monetary amounts.
//!
//! All mechanism arithmetic runs on integer minor units so utility
//! comparisons in the truthfulness tester are exact.

use core::cmp::Ordering;
use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Neg, Sub};

/// A non-negative amount in minor units (e.g. cents).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn new(amount: u64) -> Self {
        Money(amount)
    }

    pub const fn amount(self) -> u64 {
        self.0
    }

    pub fn signed(self) -> SignedMoney {
        SignedMoney(self.0 as i64)
    }

    pub fn saturating_sub(self, other: Money) -> Money {
        Money(self.0.saturating_sub(other.0))
    }

    pub fn checked_sub(self, other: Money) -> Option<Money> {
        self.0.checked_sub(other.0).map(Money)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Money {
    fn from(v: u64) -> Self {
        Money(v)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

/// Signed amount: utilities and deficits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SignedMoney(pub i64);

impl SignedMoney {
    pub const ZERO: SignedMoney = SignedMoney(0);

    pub const fn value(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for SignedMoney {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for SignedMoney {
    type Output = SignedMoney;
    fn add(self, rhs: SignedMoney) -> SignedMoney {
        SignedMoney(self.0 + rhs.0)
    }
}

impl AddAssign for SignedMoney {
    fn add_assign(&mut self, rhs: SignedMoney) {
        self.0 += rhs.0;
    }
}

impl Sub for SignedMoney {
    type Output = SignedMoney;
    fn sub(self, rhs: SignedMoney) -> SignedMoney {
        SignedMoney(self.0 - rhs.0)
    }
}

impl Neg for SignedMoney {
    type Output = SignedMoney;
    fn neg(self) -> SignedMoney {
        SignedMoney(-self.0)
    }
}

impl Sum for SignedMoney {
    fn sum<I: Iterator<Item = SignedMoney>>(iter: I) -> SignedMoney {
        iter.fold(SignedMoney::ZERO, Add::add)
    }
}

/// Money extended with `+∞`, used for the "no unmatched ask" sentinel in
/// seller payments. The "no unmatched bid" sentinel is plain `Money::ZERO`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtendedMoney {
    Finite(Money),
    PlusInfinity,
}

impl ExtendedMoney {
    pub fn finite(self) -> Option<Money> {
        match self {
            ExtendedMoney::Finite(m) => Some(m),
            ExtendedMoney::PlusInfinity => None,
        }
    }

    pub fn min(self, other: ExtendedMoney) -> ExtendedMoney {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: ExtendedMoney) -> ExtendedMoney {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl From<Money> for ExtendedMoney {
    fn from(m: Money) -> Self {
        ExtendedMoney::Finite(m)
    }
}

impl From<Option<Money>> for ExtendedMoney {
    /// `None` maps to `+∞`.
    fn from(m: Option<Money>) -> Self {
        m.map_or(ExtendedMoney::PlusInfinity, ExtendedMoney::Finite)
    }
}

impl PartialOrd for ExtendedMoney {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedMoney {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedMoney::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), PlusInfinity) => Ordering::Less,
            (PlusInfinity, Finite(_)) => Ordering::Greater,
            (PlusInfinity, PlusInfinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedMoney {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedMoney::Finite(m) => m.fmt(f),
            ExtendedMoney::PlusInfinity => f.write_str("+inf"),
        }
    }
}
