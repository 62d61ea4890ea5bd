//! Exact values of the form `linear + base^(num/den)`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// A non-negative value `linear + base^(num/den)` with integer `linear` and
/// `base`. Every expansion bound evaluates to one of these, and all
/// comparisons are carried out on integer powers.
#[derive(Debug, Clone)]
pub struct ExpansionValue {
    linear: BigUint,
    base: BigUint,
    num: u32,
    den: u32,
}

// precision ceiling when separating two values that differ in both parts
const MAX_BITS: u64 = 4096;

impl ExpansionValue {
    /// `base^(num/den)`; the exponent is reduced to lowest terms.
    pub fn power(base: impl Into<BigUint>, num: u32, den: u32) -> Self {
        assert!(den > 0, "zero denominator in exponent");
        let g = num.gcd(&den).max(1);
        ExpansionValue {
            linear: BigUint::zero(),
            base: base.into(),
            num: num / g,
            den: den / g,
        }
    }

    pub fn integer(x: impl Into<BigUint>) -> Self {
        Self::power(x, 1, 1)
    }

    /// Adds an integer to the value.
    pub fn plus(mut self, x: impl Into<BigUint>) -> Self {
        self.linear += x.into();
        self
    }

    pub fn linear(&self) -> &BigUint {
        &self.linear
    }

    pub fn base(&self) -> &BigUint {
        &self.base
    }

    /// Exponent as `(num, den)` in lowest terms.
    pub fn exponent(&self) -> (u32, u32) {
        (self.num, self.den)
    }

    /// `base^num`, the integer whose `den`-th root is the power part.
    fn radicand(&self) -> BigUint {
        self.base.pow(self.num)
    }

    /// The power part as an integer, if it is one.
    fn power_if_integer(&self) -> Option<BigUint> {
        let r = self.radicand();
        let root = r.nth_root(self.den);
        (root.pow(self.den) == r).then_some(root)
    }

    /// Whether the integer `x` is at most this value.
    pub fn admits(&self, x: &BigUint) -> bool {
        if x <= &self.linear {
            return true;
        }
        let excess = x - &self.linear;
        excess.pow(self.den) <= self.radicand()
    }

    pub fn admits_u64(&self, x: u64) -> bool {
        self.admits(&BigUint::from(x))
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigUint {
        &self.linear + self.radicand().nth_root(self.den)
    }

    /// `floor(value * 2^bits)`.
    fn floor_scaled(&self, bits: u64) -> BigUint {
        let scaled = self.radicand() << (bits * self.den as u64);
        (&self.linear << bits) + scaled.nth_root(self.den)
    }

    pub fn to_f64(&self) -> f64 {
        let base = self.base.to_f64().unwrap_or(f64::INFINITY);
        self.linear.to_f64().unwrap_or(f64::INFINITY) + base.powf(self.num as f64 / self.den as f64)
    }

    fn cmp_power(&self, other: &Self) -> Ordering {
        // a^(p/q) vs b^(r/s)  <=>  a^(p s) vs b^(r q)
        let lhs = self.base.pow(self.num * other.den);
        let rhs = other.base.pow(other.num * self.den);
        lhs.cmp(&rhs)
    }
}

impl Ord for ExpansionValue {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_power = self.cmp_power(other);
        let by_linear = self.linear.cmp(&other.linear);
        if by_linear == Ordering::Equal {
            return by_power;
        }
        if by_power == Ordering::Equal || by_power == by_linear {
            return by_linear;
        }
        if let (Some(x), Some(y)) = (self.power_if_integer(), other.power_if_integer()) {
            return (&self.linear + x).cmp(&(&other.linear + y));
        }
        // The parts pull in opposite directions and at least one power is
        // irrational, so the two values differ; refine until they separate.
        let mut bits = 32;
        while bits <= MAX_BITS {
            let lo = self.floor_scaled(bits);
            let hi = other.floor_scaled(bits);
            // each true value lies in [floor, floor + 1) at this scale
            if lo > hi {
                return Ordering::Greater;
            }
            if hi > lo {
                return Ordering::Less;
            }
            bits *= 2;
        }
        Ordering::Equal
    }
}

// equality is numeric: 64^(1/2) equals 8
impl PartialEq for ExpansionValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExpansionValue {}

impl PartialOrd for ExpansionValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExpansionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let power = match self.power_if_integer() {
            Some(x) => x.to_string(),
            None if self.num == 1 => format!("{}^(1/{})", self.base, self.den),
            None => format!("{}^({}/{})", self.base, self.num, self.den),
        };
        if self.linear.is_zero() {
            write!(f, "{power}")
        } else if self.power_if_integer().is_some() {
            write!(f, "{}", self.floor())
        } else {
            write!(f, "{} + {power}", self.linear)
        }
    }
}

impl From<u64> for ExpansionValue {
    fn from(x: u64) -> Self {
        ExpansionValue::integer(x)
    }
}

/// Picks the smallest of a nonempty list of values.
pub(crate) fn min_value(values: impl IntoIterator<Item = ExpansionValue>) -> ExpansionValue {
    values.into_iter().min().expect("at least one term")
}
