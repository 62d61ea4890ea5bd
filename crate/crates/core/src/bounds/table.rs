//! Leading-order summary of rank and communication bounds per contraction
//! shape, valid for `n ≥ p ≫ 1` and `H ≤ n²`.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::combinatorics::factorial_u64;
use crate::error::{precondition, Result};

/// The eight concrete shapes of the published summary table.
pub const SUMMARY_TABLE_SHAPES: [(usize, usize, usize); 8] = [
    (1, 1, 0),
    (2, 1, 0),
    (3, 1, 0),
    (2, 2, 0),
    (1, 1, 1),
    (2, 1, 1),
    (2, 2, 1),
    (2, 2, 2),
];

// factorials past 20! leave i64
const MAX_OMEGA: usize = 20;

/// `coeff · n^n · H^h · p^p` with rational exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: Rational64,
    pub n: Rational64,
    pub h: Rational64,
    pub p: Rational64,
}

fn int(x: i64) -> Rational64 {
    Rational64::from_integer(x)
}

fn frac(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

impl Monomial {
    pub fn n_pow(n: Rational64) -> Self {
        Monomial {
            coeff: Rational64::one(),
            n,
            h: Rational64::zero(),
            p: Rational64::zero(),
        }
    }

    fn with_h(self, h: Rational64) -> Self {
        Monomial { h, ..self }
    }

    fn with_p(self, p: Rational64) -> Self {
        Monomial { p, ..self }
    }

    fn with_coeff(self, coeff: Rational64) -> Self {
        Monomial { coeff, ..self }
    }

    /// Exponent of `n` after substituting `p = n`.
    fn exponent_at_p_equal_n(&self) -> Rational64 {
        self.n + self.p
    }

    /// At least as large as `other` for both `p = 1` and `p = n`, the ends of
    /// the range the table covers.
    fn dominates(&self, other: &Monomial) -> bool {
        self.n >= other.n && self.exponent_at_p_equal_n() >= other.exponent_at_p_equal_n()
    }
}

fn power(var: &str, e: Rational64) -> Option<String> {
    if e.is_zero() {
        None
    } else if e.is_one() {
        Some(var.to_string())
    } else if e.is_integer() {
        Some(format!("{var}^{e}"))
    } else {
        Some(format!("{var}^{{{e}}}"))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut top = Vec::new();
        let mut bottom = Vec::new();
        if *self.coeff.numer() != 1 {
            top.push(self.coeff.numer().to_string());
        }
        if *self.coeff.denom() != 1 {
            bottom.push(self.coeff.denom().to_string());
        }
        for (var, e) in [("n", self.n), ("H", self.h), ("p", self.p)] {
            if e > Rational64::zero() {
                top.extend(power(var, e));
            } else {
                bottom.extend(power(var, -e));
            }
        }
        let top = if top.is_empty() {
            "1".to_string()
        } else {
            top.join(" ")
        };
        match bottom.len() {
            0 => write!(f, "{top}"),
            1 => write!(f, "{top}/{}", bottom[0]),
            _ => write!(f, "{top}/({})", bottom.join(" ")),
        }
    }
}

impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Monomial", 5)?;
        s.serialize_field("text", &self.to_string())?;
        s.serialize_field("coefficient", &self.coeff.to_string())?;
        s.serialize_field("n_exponent", &self.n.to_string())?;
        s.serialize_field("h_exponent", &self.h.to_string())?;
        s.serialize_field("p_exponent", &self.p.to_string())?;
        s.end()
    }
}

/// The maximum of several monomials, none dominating another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leading(pub Vec<Monomial>);

impl Leading {
    fn max_of(candidates: Vec<Monomial>) -> Self {
        let mut kept: Vec<Monomial> = Vec::new();
        for (i, m) in candidates.iter().enumerate() {
            let beaten = candidates
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && o.dominates(m) && (!m.dominates(o) || j < i));
            if !beaten {
                kept.push(*m);
            }
        }
        Leading(kept)
    }
}

impl fmt::Display for Leading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [single] => write!(f, "{single}"),
            many => {
                let parts: Vec<String> = many.iter().map(Monomial::to_string).collect();
                write!(f, "max({})", parts.join(", "))
            }
        }
    }
}

impl Serialize for Leading {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Leading", 2)?;
        s.serialize_field("text", &self.to_string())?;
        s.serialize_field("terms", &self.0)?;
        s.end()
    }
}

/// One row of the summary: leading rank terms `F`, vertical costs `Q` and
/// horizontal costs `W` for the three algorithms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AsymptoticRecord {
    pub s: usize,
    pub t: usize,
    pub v: usize,
    pub f_nonsym: Monomial,
    pub f_direct: Monomial,
    pub f_sympres: Monomial,
    /// Shared by the symmetry-oblivious and direct algorithms.
    pub q_nonsym_direct: Monomial,
    pub q_sympres: Monomial,
    pub w_nonsym: Monomial,
    pub w_direct: Leading,
    /// Absent for contractions with two or more zero index groups.
    pub w_sympres: Option<Monomial>,
}

/// Either the flop term `n^ω / H^e` or the operand term `n^κ`, whichever is
/// larger at the largest cache `H = n²`.
fn vertical(omega: i64, kappa: i64, e: Rational64) -> Monomial {
    if int(omega) - e * 2 >= int(kappa) {
        Monomial::n_pow(int(omega)).with_h(-e)
    } else {
        Monomial::n_pow(int(kappa))
    }
}

/// Leading term of the piecewise matrix bound on `n^a, n^b, n^c`.
fn orthotope(exponents: [usize; 3]) -> Monomial {
    let mut e = exponents.map(|x| x as i64);
    e.sort_unstable();
    let [a, b, c] = e;
    if c - b >= 1 {
        Monomial::n_pow(int(a + b))
    } else if b + c - 2 * a >= 1 {
        Monomial::n_pow(int(a) + frac(b + c, 2)).with_p(frac(-1, 2))
    } else {
        Monomial::n_pow(frac(2 * (a + b + c), 3)).with_p(frac(-2, 3))
    }
}

/// `(n^ω / p)^(k/ω)`.
fn balanced(omega: i64, k: i64) -> Monomial {
    Monomial::n_pow(int(k)).with_p(frac(-k, omega))
}

fn record(s: usize, t: usize, v: usize) -> AsymptoticRecord {
    let omega = (s + t + v) as i64;
    let kappa = (s + v).max(v + t).max(s + t) as i64;
    let largest = s.max(t).max(v) as i64;
    let zeros = [s, t, v].iter().filter(|&&x| x == 0).count();
    let full = Monomial::n_pow(int(omega));
    let fact = |d: usize| factorial_u64(d) as i64;
    let sympres_exponent = if kappa == 0 {
        Rational64::zero()
    } else {
        frac(omega, kappa) - 1
    };
    let w_nonsym = orthotope([s, t, v]);
    let mut w_direct = vec![w_nonsym];
    if zeros == 1 {
        w_direct.push(balanced(omega, largest));
    }
    AsymptoticRecord {
        s,
        t,
        v,
        f_nonsym: full,
        f_direct: full.with_coeff(frac(1, fact(s) * fact(t) * fact(v))),
        f_sympres: full.with_coeff(frac(1, fact(s + t + v))),
        q_nonsym_direct: vertical(omega, kappa, frac(1, 2)),
        q_sympres: vertical(omega, kappa, sympres_exponent),
        w_nonsym,
        w_direct: Leading::max_of(w_direct),
        w_sympres: match zeros {
            0 => Some(balanced(omega, kappa)),
            1 => Some(balanced(omega, largest)),
            _ => None,
        },
    }
}

/// Computes the summary row of each `(s, t, v)` shape. Shapes with
/// `s + t + v > 20` are rejected.
pub fn asymptotic_table(shapes: &[(usize, usize, usize)]) -> Result<Vec<AsymptoticRecord>> {
    shapes
        .iter()
        .map(|&(s, t, v)| {
            if s + t + v > MAX_OMEGA {
                return Err(precondition(format!(
                    "s + t + v = {} exceeds {MAX_OMEGA}",
                    s + t + v
                )));
            }
            Ok(record(s, t, v))
        })
        .collect()
}

pub const CSV_HEADER: [&str; 11] = [
    "s",
    "t",
    "v",
    "F_nonsym",
    "F_direct",
    "F_sympres",
    "Q_nonsym_direct",
    "Q_sympres",
    "W_nonsym",
    "W_direct",
    "W_sympres",
];

/// Renders records as CSV, one row per shape.
pub fn table_csv(records: &[AsymptoticRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.s.to_string(),
            r.t.to_string(),
            r.v.to_string(),
            r.f_nonsym.to_string(),
            r.f_direct.to_string(),
            r.f_sympres.to_string(),
            r.q_nonsym_direct.to_string(),
            r.q_sympres.to_string(),
            r.w_nonsym.to_string(),
            r.w_direct.to_string(),
            r.w_sympres
                .map_or_else(|| "-".to_string(), |m| m.to_string()),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: usize, t: usize, v: usize) -> AsymptoticRecord {
        asymptotic_table(&[(s, t, v)]).unwrap().remove(0)
    }

    #[test]
    fn rendering() {
        let m = Monomial::n_pow(int(4)).with_p(frac(-4, 5));
        assert_eq!(m.to_string(), "n^4/p^{4/5}");
        assert_eq!(
            Monomial::n_pow(int(3)).with_coeff(frac(1, 2)).to_string(),
            "n^3/2"
        );
        assert_eq!(Monomial::n_pow(int(1)).to_string(), "n");
        assert_eq!(Monomial::n_pow(int(0)).to_string(), "1");
        assert_eq!(
            Monomial::n_pow(int(4)).with_h(frac(-1, 3)).to_string(),
            "n^4/H^{1/3}"
        );
    }

    #[test]
    fn matrix_vector_row() {
        let r = row(3, 1, 0);
        assert_eq!(r.f_direct.to_string(), "n^4/6");
        assert_eq!(r.f_sympres.to_string(), "n^4/24");
        assert_eq!(r.w_direct.to_string(), "n^3/p^{3/4}");
        assert_eq!(r.w_nonsym.to_string(), "n");
    }

    #[test]
    fn degenerate_row_has_no_sympres_parallel_bound() {
        let r = row(2, 0, 0);
        assert_eq!(r.w_sympres, None);
        assert!(table_csv(&[r]).lines().nth(1).unwrap().ends_with(",-"));
    }

    #[test]
    fn oversized_shape_is_rejected() {
        assert!(asymptotic_table(&[(10, 10, 1)]).is_err());
    }
}
