//! Extended valuations and three-valued certificates.
//!
//! Valuations are stored in units of `v(ϖ) = 1/2`, so every valuation on
//! `Q_p(ϖ)` is an integer here, and `v_{R_2}(Σ a_i u^i) = inf (i + 2 v_p(a_i))`
//! is the integer `inf (i + val(a_i))` in the same scale.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use serde::{Serialize, Serializer};

/// A valuation in half-units, with `±∞`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Val(i64);

impl Val {
    pub const INF: Val = Val(i64::MAX);
    pub const NEG_INF: Val = Val(i64::MIN);
    pub const ZERO: Val = Val(0);

    pub const fn new(half_units: i64) -> Val {
        Val(half_units)
    }

    /// From a valuation in whole `p`-units.
    pub const fn from_p_units(v: i64) -> Val {
        Val(2 * v)
    }

    pub fn is_finite(self) -> bool {
        self != Val::INF && self != Val::NEG_INF
    }

    pub fn finite(self) -> Option<i64> {
        self.is_finite().then_some(self.0)
    }

    /// Raw half-unit value; `i64::MAX`/`i64::MIN` for the infinities.
    pub fn raw(self) -> i64 {
        self.0
    }

    /// The valuation in `p`-units as an exact rational.
    pub fn as_ratio(self) -> Option<Ratio<i64>> {
        self.finite().map(|n| Ratio::new(n, 2))
    }

    pub fn scale(self, k: i64) -> Val {
        match self {
            Val::INF if k > 0 => Val::INF,
            Val::INF if k < 0 => Val::NEG_INF,
            Val::NEG_INF if k > 0 => Val::NEG_INF,
            Val::NEG_INF if k < 0 => Val::INF,
            _ if k == 0 => Val::ZERO,
            Val(n) => Val(n.saturating_mul(k)),
        }
    }
}

impl Add for Val {
    type Output = Val;
    /// Lower-bound addition: `-∞` absorbs everything.
    fn add(self, rhs: Val) -> Val {
        if self == Val::NEG_INF || rhs == Val::NEG_INF {
            Val::NEG_INF
        } else if self == Val::INF || rhs == Val::INF {
            Val::INF
        } else {
            Val(self.0 + rhs.0)
        }
    }
}

impl Add<i64> for Val {
    type Output = Val;
    fn add(self, rhs: i64) -> Val {
        self + Val(rhs)
    }
}

impl Sub<i64> for Val {
    type Output = Val;
    fn sub(self, rhs: i64) -> Val {
        self + Val(-rhs)
    }
}

impl Neg for Val {
    type Output = Val;
    fn neg(self) -> Val {
        match self {
            Val::INF => Val::NEG_INF,
            Val::NEG_INF => Val::INF,
            Val(n) => Val(-n),
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Val::INF => write!(f, "inf"),
            Val::NEG_INF => write!(f, "-inf"),
            Val(n) if n % 2 == 0 => write!(f, "{}", n / 2),
            Val(n) => write!(f, "{}/2", n),
        }
    }
}

impl Serialize for Val {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Outcome of a bound check carried out at finite precision.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Verdict::True
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::False, _) | (_, Verdict::False) => Verdict::False,
            (Verdict::True, Verdict::True) => Verdict::True,
            _ => Verdict::Unknown,
        }
    }

    pub fn all<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        it.into_iter().fold(Verdict::True, Verdict::and)
    }

    /// `lower > t` where `lower` is a certified lower bound and `exact`
    /// says whether it is attained.
    pub fn gt(lower: Val, exact: bool, t: Val) -> Verdict {
        if lower > t {
            Verdict::True
        } else if exact {
            Verdict::False
        } else {
            Verdict::Unknown
        }
    }

    /// `lower >= t`, same conventions as [`Verdict::gt`].
    pub fn ge(lower: Val, exact: bool, t: Val) -> Verdict {
        if lower >= t {
            Verdict::True
        } else if exact {
            Verdict::False
        } else {
            Verdict::Unknown
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}
