//! Exact non-negative values `coeff * base^(num/den)` with rational parts.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

#[derive(Debug, Clone)]
pub struct Radical {
    coeff: BigRational,
    base: BigRational,
    num: u32,
    den: u32,
}

fn nth_root_exact(x: &BigInt, n: u32) -> Option<BigInt> {
    let r = x.nth_root(n);
    (r.pow(n) == *x).then_some(r)
}

impl Radical {
    /// `coeff * base^(num/den)`. Both rationals must be non-negative. When the
    /// power is rational it is folded into the coefficient.
    pub fn new(coeff: BigRational, base: BigRational, num: u32, den: u32) -> Self {
        assert!(den > 0, "zero denominator in exponent");
        assert!(
            !coeff.is_negative() && !base.is_negative(),
            "negative radical part"
        );
        let g = num.gcd(&den).max(1);
        let mut r = Radical {
            coeff,
            base,
            num: num / g,
            den: den / g,
        };
        if r.num == 0 || r.coeff.is_zero() {
            r.base = BigRational::one();
            r.num = 0;
            r.den = 1;
        } else {
            let powered = r.base.pow(r.num as i32);
            if let (Some(a), Some(b)) = (
                nth_root_exact(powered.numer(), r.den),
                nth_root_exact(powered.denom(), r.den),
            ) {
                r.coeff *= BigRational::new(a, b);
                r.base = BigRational::one();
                r.num = 0;
                r.den = 1;
            }
        }
        r
    }

    pub fn rational(x: BigRational) -> Self {
        Radical::new(x, BigRational::one(), 0, 1)
    }

    pub fn integer(x: impl Into<BigUint>) -> Self {
        Radical::rational(BigRational::from_integer(BigInt::from(x.into())))
    }

    /// `base^(num/den)`.
    pub fn power(base: BigRational, num: u32, den: u32) -> Self {
        Radical::new(BigRational::one(), base, num, den)
    }

    /// The value, when it is rational.
    pub fn exact(&self) -> Option<&BigRational> {
        (self.num == 0).then_some(&self.coeff)
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn base(&self) -> &BigRational {
        &self.base
    }

    pub fn exponent(&self) -> (u32, u32) {
        (self.num, self.den)
    }

    /// `value^k`, exact.
    fn raised(&self, k: u32) -> BigRational {
        debug_assert_eq!(k % self.den, 0);
        self.coeff.pow(k as i32) * self.base.pow((self.num * (k / self.den)) as i32)
    }

    pub fn to_f64(&self) -> f64 {
        let c = self.coeff.to_f64().unwrap_or(f64::INFINITY);
        if self.num == 0 {
            return c;
        }
        let b = self.base.to_f64().unwrap_or(f64::INFINITY);
        c * b.powf(self.num as f64 / self.den as f64)
    }
}

impl Ord for Radical {
    fn cmp(&self, other: &Self) -> Ordering {
        // both sides are non-negative, so x -> x^L preserves order
        let l = self.den.lcm(&other.den);
        self.raised(l).cmp(&other.raised(l))
    }
}

impl PartialOrd for Radical {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Radical {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Radical {}

impl fmt::Display for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            return write!(f, "{}", self.coeff);
        }
        let base = if self.base.is_integer() {
            self.base.to_string()
        } else {
            format!("({})", self.base)
        };
        let power = format!("{base}^({}/{})", self.num, self.den);
        if self.coeff.is_one() {
            write!(f, "{power}")
        } else {
            write!(f, "{} * {power}", self.coeff)
        }
    }
}

impl Serialize for Radical {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Radical", 2)?;
        s.serialize_field("exact", &self.to_string())?;
        s.serialize_field("approx", &self.to_f64())?;
        s.end()
    }
}
