//! Closed-form communication lower bounds.
//!
//! `q_*` functions bound the words moved between a cache of `H` words and
//! slow memory. `w_*` functions bound the words one of `p` processors must
//! send or receive. The parallel bounds hold up to a constant factor, which
//! [`BoundValue::constant_free`] flags.

mod radical;
mod table;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::Serialize;

pub use radical::Radical;
pub use table::{
    asymptotic_table, table_csv, AsymptoticRecord, Leading, Monomial, CSV_HEADER,
    SUMMARY_TABLE_SHAPES,
};

use crate::combinatorics::{binomial, count_multisets, ContractionClass, ContractionSpec};
use crate::error::{precondition, Error, Result};
use crate::expansion::ExpansionBound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    QMm,
    WMm,
    QNonsym,
    WNonsym,
    QDirect,
    WDirect,
    QSympres,
    WSympres,
}

impl Formula {
    pub fn name(self) -> &'static str {
        match self {
            Formula::QMm => "q_mm",
            Formula::WMm => "w_mm",
            Formula::QNonsym => "q_nonsym",
            Formula::WNonsym => "w_nonsym",
            Formula::QDirect => "q_direct",
            Formula::WDirect => "w_direct",
            Formula::QSympres => "q_sympres",
            Formula::WSympres => "w_sympres",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which piece of the piecewise parallel matrix-product bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "1D")]
    OneD,
    #[serde(rename = "2D")]
    TwoD,
    #[serde(rename = "3D")]
    ThreeD,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::OneD => "1D",
            Regime::TwoD => "2D",
            Regime::ThreeD => "3D",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundTerm {
    pub name: &'static str,
    pub value: Radical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundValue {
    /// The largest of `terms`.
    pub value: Radical,
    pub formula: Formula,
    pub regime: Option<Regime>,
    pub terms: Vec<BoundTerm>,
    /// True when the bound only holds up to an unstated constant factor.
    pub constant_free: bool,
}

impl BoundValue {
    fn max_of(
        formula: Formula,
        terms: Vec<BoundTerm>,
        regime: Option<Regime>,
        constant_free: bool,
    ) -> Self {
        let value = terms
            .iter()
            .map(|t| &t.value)
            .max()
            .expect("at least one term")
            .clone();
        BoundValue {
            value,
            formula,
            regime,
            terms,
            constant_free,
        }
    }

    pub fn approx(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn term(&self, name: &str) -> Option<&Radical> {
        self.terms.iter().find(|t| t.name == name).map(|t| &t.value)
    }

    fn relabel(mut self, formula: Formula) -> Self {
        self.formula = formula;
        self
    }
}

fn int(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

fn ratio(a: &BigUint, b: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

fn positive(values: &[(&str, &BigUint)]) -> Result<()> {
    match values.iter().find(|(_, v)| *v == &BigUint::from(0u32)) {
        Some((name, _)) => Err(precondition(format!("{name} must be positive"))),
        None => Ok(()),
    }
}

fn io_term(value: BigUint) -> BoundTerm {
    BoundTerm {
        name: "io",
        value: Radical::integer(value),
    }
}

fn q_mm_big(m: &BigUint, n: &BigUint, k: &BigUint, cache: &BigUint) -> Result<BoundValue> {
    positive(&[("m", m), ("n", n), ("k", k), ("H", cache)])?;
    // 2mnk / sqrt(H) = 2mnk * (1/H)^(1/2)
    let flops = Radical::new(
        int(&(m * n * k * 2u32)),
        ratio(&BigUint::one(), cache),
        1,
        2,
    );
    let terms = vec![
        BoundTerm {
            name: "flops",
            value: flops,
        },
        io_term(m * k + k * n + m * n),
    ];
    Ok(BoundValue::max_of(Formula::QMm, terms, None, false))
}

/// Vertical bound for multiplying an `m × k` by a `k × n` matrix with a cache
/// of `cache` words: `max(2mnk / sqrt(H), mk + kn + mn)`.
pub fn q_mm(m: u64, n: u64, k: u64, cache: u64) -> Result<BoundValue> {
    q_mm_big(&m.into(), &n.into(), &k.into(), &cache.into())
}

/// The piecewise horizontal bound on dimensions `x ≤ y ≤ z`.
fn orthotope(dims: [&BigUint; 3], p: &BigUint) -> (Regime, Radical) {
    let mut d = dims;
    d.sort();
    let [x, y, z] = d;
    if p * x * x > y * z {
        (Regime::ThreeD, Radical::power(ratio(&(x * y * z), p), 2, 3))
    } else if p * y > *z {
        (Regime::TwoD, Radical::new(int(x), ratio(&(y * z), p), 1, 2))
    } else {
        (Regime::OneD, Radical::integer(x * y))
    }
}

fn w_mm_big(m: &BigUint, n: &BigUint, k: &BigUint, p: &BigUint) -> Result<BoundValue> {
    positive(&[("m", m), ("n", n), ("k", k), ("p", p)])?;
    let (regime, value) = orthotope([m, n, k], p);
    let terms = vec![BoundTerm {
        name: "orthotope",
        value,
    }];
    Ok(BoundValue::max_of(Formula::WMm, terms, Some(regime), true))
}

/// Horizontal bound for the same product on `p` processors. With the
/// dimensions sorted as `x ≤ y ≤ z` it is `(xyz/p)^(2/3)` when `p > yz/x²`,
/// `x (yz/p)^(1/2)` when `p > z/y`, and `xy` otherwise.
pub fn w_mm(m: u64, n: u64, k: u64, p: u64) -> Result<BoundValue> {
    w_mm_big(&m.into(), &n.into(), &k.into(), &p.into())
}

fn power_of_n(spec: &ContractionSpec, e: usize) -> BigUint {
    BigUint::from(spec.n).pow(e)
}

fn multisets(spec: &ContractionSpec, d: usize) -> BigUint {
    count_multisets(spec.n as u64, d as u64)
}

fn packed_io(spec: &ContractionSpec) -> BigUint {
    multisets(spec, spec.order_a())
        + multisets(spec, spec.order_b())
        + multisets(spec, spec.order_c())
}

/// Vertical bound for the symmetry-oblivious algorithm: the matrix bound on
/// dimensions `n^s`, `n^t`, `n^v`.
pub fn q_nonsym(spec: &ContractionSpec, cache: u64) -> Result<BoundValue> {
    let [s, t, v] = [spec.s, spec.t, spec.v].map(|e| power_of_n(spec, e));
    Ok(q_mm_big(&s, &t, &v, &cache.into())?.relabel(Formula::QNonsym))
}

pub fn w_nonsym(spec: &ContractionSpec, p: u64) -> Result<BoundValue> {
    let [s, t, v] = [spec.s, spec.t, spec.v].map(|e| power_of_n(spec, e));
    Ok(w_mm_big(&s, &t, &v, &p.into())?.relabel(Formula::WNonsym))
}

/// Vertical bound for the direct algorithm: the flop term
/// `2 C̄(n,s) C̄(n,t) C̄(n,v) / (q sqrt(H))` against the packed operand and
/// result sizes, where `C̄` counts multisets and `q²` is the product of the
/// three binomials of the operand orders.
pub fn q_direct(spec: &ContractionSpec, cache: u64) -> Result<BoundValue> {
    let cache = BigUint::from(cache);
    positive(&[("H", &cache)])?;
    let products =
        multisets(spec, spec.s) * multisets(spec, spec.t) * multisets(spec, spec.v) * 2u32;
    let q_squared = BigUint::from(ExpansionBound::direct_q_squared(spec));
    let flops = Radical::new(
        int(&products),
        ratio(&BigUint::one(), &(q_squared * cache)),
        1,
        2,
    );
    let terms = vec![
        BoundTerm {
            name: "flops",
            value: flops,
        },
        io_term(packed_io(spec)),
    ];
    Ok(BoundValue::max_of(Formula::QDirect, terms, None, false))
}

fn mv_term(spec: &ContractionSpec, p: &BigUint) -> BoundTerm {
    let largest = spec.s.max(spec.t).max(spec.v);
    BoundTerm {
        name: "matrix_vector",
        value: Radical::power(
            ratio(&power_of_n(spec, spec.omega()), p),
            largest as u32,
            spec.omega() as u32,
        ),
    }
}

/// Horizontal bound for the direct algorithm. The piecewise matrix bound on
/// `n^min, n^median, n^max` always applies; matrix-vector-like contractions
/// also get `(n^ω/p)^(max(s,t,v)/ω)`. The value is the larger of the two.
pub fn w_direct(spec: &ContractionSpec, p: u64) -> Result<BoundValue> {
    let p = BigUint::from(p);
    positive(&[("p", &p)])?;
    let [s, t, v] = [spec.s, spec.t, spec.v].map(|e| power_of_n(spec, e));
    let (regime, value) = orthotope([&s, &t, &v], &p);
    let mut terms = vec![BoundTerm {
        name: "orthotope",
        value,
    }];
    if spec.class() == ContractionClass::MatrixVector {
        terms.push(mv_term(spec, &p));
    }
    Ok(BoundValue::max_of(
        Formula::WDirect,
        terms,
        Some(regime),
        true,
    ))
}

/// Vertical bound for the symmetry-preserving algorithm:
/// `2 C̄(n,ω) H / (3 C(ω,κ) H)^(ω/κ)` against the packed sizes. When `ω = 0`
/// only the packed sizes remain.
pub fn q_sympres(spec: &ContractionSpec, cache: u64) -> Result<BoundValue> {
    let cache = BigUint::from(cache);
    positive(&[("H", &cache)])?;
    let (omega, kappa) = (spec.omega(), spec.kappa());
    let mut terms = Vec::new();
    if kappa > 0 {
        let coeff = multisets(spec, omega) * &cache * 2u32;
        let denom = binomial(omega as u64, kappa as u64) * &cache * 3u32;
        terms.push(BoundTerm {
            name: "flops",
            value: Radical::new(
                int(&coeff),
                ratio(&BigUint::one(), &denom),
                omega as u32,
                kappa as u32,
            ),
        });
    }
    terms.push(io_term(packed_io(spec)));
    Ok(BoundValue::max_of(Formula::QSympres, terms, None, false))
}

/// Horizontal bound for the symmetry-preserving algorithm:
/// `(n^ω/p)^(κ/ω)` when `s, t, v` are all positive and
/// `(n^ω/p)^(max(s,t,v)/ω)` when exactly one is zero.
pub fn w_sympres(spec: &ContractionSpec, p: u64) -> Result<BoundValue> {
    let p = BigUint::from(p);
    positive(&[("p", &p)])?;
    let base = ratio(&power_of_n(spec, spec.omega()), &p);
    let omega = spec.omega() as u32;
    let term = match spec.class() {
        ContractionClass::MatrixMatrix => BoundTerm {
            name: "matrix_matrix",
            value: Radical::power(base, spec.kappa() as u32, omega),
        },
        ContractionClass::MatrixVector => mv_term(spec, &p),
        ContractionClass::Degenerate => {
            return Err(Error::Precondition(format!(
                "no parallel bound for the degenerate contraction {spec}"
            )))
        }
    };
    Ok(BoundValue::max_of(
        Formula::WSympres,
        vec![term],
        None,
        true,
    ))
}
