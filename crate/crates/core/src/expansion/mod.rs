//! Expansion bounds: how many products a subset of a bilinear algorithm can
//! hold given the ranks of its three restricted matrices.
//!
//! Besides the bound families themselves this module verifies them on
//! concrete encodings ([`verify_expansion`]), checks the projection
//! inequalities behind them ([`loomis_whitney_check`]) and does the same on
//! execution DAGs ([`ExecutionDag`]).

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial_u64, count_multisets_usize, ContractionClass, ContractionSpec,
};
use crate::contraction::AlgorithmId;
use crate::error::{precondition, Error, Result};

mod dag;
mod value;
mod verify;

pub use dag::{
    build_dag_naive, check_dag_expansion, zeta, DagVertex, ExecutionDag, Side, VertexKind, Zeta,
};
pub use value::ExpansionValue;
pub use verify::{
    column_subsets, loomis_whitney_check, subset_projection_check, verify_expansion,
    LoomisWhitneyReport, VerificationMode, VerificationReport, Violation, EXHAUSTIVE_LIMIT,
};

use value::min_value;

fn choose(n: usize, k: usize) -> u64 {
    binomial_u64(n as u64, k as u64).expect("binomial fits in u64")
}

/// Largest `H` accepted by the brute-force simplex search.
pub const BRUTE_FORCE_LIMIT: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFamily {
    Mm,
    Direct,
    DirectMv,
    #[serde(rename = "sympres")]
    SymPres,
}

impl BoundFamily {
    pub fn name(self) -> &'static str {
        match self {
            BoundFamily::Mm => "mm",
            BoundFamily::Direct => "direct",
            BoundFamily::DirectMv => "direct-mv",
            BoundFamily::SymPres => "sympres",
        }
    }
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An expansion bound, nondecreasing in each of its three arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionBound {
    /// `C = A B` with `A` of size `m x k` and `B` of size `k x n`.
    Mm {
        m: usize,
        n: usize,
        k: usize,
    },
    Direct(ContractionSpec),
    DirectMv(ContractionSpec),
    SymPres(ContractionSpec),
}

/// `sqrt(dA dB dC)`.
pub fn bound_mm(m: usize, n: usize, k: usize) -> Result<ExpansionBound> {
    if m == 0 || n == 0 || k == 0 {
        return Err(precondition(format!(
            "matrix dimensions must be positive, got ({m}, {n}, {k})"
        )));
    }
    Ok(ExpansionBound::Mm { m, n, k })
}

/// `q sqrt(dA dB dC)` with `q^2 = C(s+v, s) C(v+t, v) C(s+t, s)`.
pub fn bound_direct(spec: &ContractionSpec) -> ExpansionBound {
    ExpansionBound::Direct(*spec)
}

/// The linear-plus-power bound for the direct algorithm; needs exactly one of
/// `s, t, v` to be zero.
pub fn bound_direct_mv(spec: &ContractionSpec) -> Result<ExpansionBound> {
    if spec.class() != ContractionClass::MatrixVector {
        return Err(precondition(format!("{spec} is not matrix-vector-like")));
    }
    Ok(ExpansionBound::DirectMv(*spec))
}

/// Minimum of the three powered terms of the symmetry-preserving algorithm;
/// needs at most one of `s, t, v` to be zero.
pub fn bound_sympres(spec: &ContractionSpec) -> Result<ExpansionBound> {
    if spec.class() == ContractionClass::Degenerate {
        return Err(precondition(format!("{spec} has more than one zero order")));
    }
    Ok(ExpansionBound::SymPres(*spec))
}

impl ExpansionBound {
    pub fn family(&self) -> BoundFamily {
        match self {
            ExpansionBound::Mm { .. } => BoundFamily::Mm,
            ExpansionBound::Direct(_) => BoundFamily::Direct,
            ExpansionBound::DirectMv(_) => BoundFamily::DirectMv,
            ExpansionBound::SymPres(_) => BoundFamily::SymPres,
        }
    }

    pub fn spec(&self) -> Option<&ContractionSpec> {
        match self {
            ExpansionBound::Mm { .. } => None,
            ExpansionBound::Direct(s)
            | ExpansionBound::DirectMv(s)
            | ExpansionBound::SymPres(s) => Some(s),
        }
    }

    /// `q^2` for the direct family.
    pub fn direct_q_squared(spec: &ContractionSpec) -> u64 {
        let (s, t, v) = (spec.s, spec.t, spec.v);
        choose(s + v, s) * choose(v + t, v) * choose(s + t, s)
    }

    /// Row counts `(A, B, C)` of encodings this bound is meant for.
    pub fn expected_dims(&self) -> (usize, usize, usize) {
        match *self {
            ExpansionBound::Mm { m, n, k } => (m * k, k * n, m * n),
            ExpansionBound::Direct(s)
            | ExpansionBound::DirectMv(s)
            | ExpansionBound::SymPres(s) => (
                count_multisets_usize(s.n, s.order_a()),
                count_multisets_usize(s.n, s.order_b()),
                count_multisets_usize(s.n, s.order_c()),
            ),
        }
    }

    pub fn evaluate(&self, da: u64, db: u64, dc: u64) -> ExpansionValue {
        let product = BigUint::from(da) * db * dc;
        match *self {
            ExpansionBound::Mm { .. } => ExpansionValue::power(product, 1, 2),
            ExpansionBound::Direct(spec) => {
                ExpansionValue::power(product * Self::direct_q_squared(&spec), 1, 2)
            }
            ExpansionBound::DirectMv(spec) => {
                let (s, t, v) = (spec.s, spec.t, spec.v);
                let w = spec.omega();
                let linear = (choose(w, s.min(v)) - 1) * da
                    + (choose(w, v.min(t)) - 1) * db
                    + (choose(w, s.min(t)) - 1) * dc;
                min_value(
                    [(da, s + v), (db, v + t), (dc, s + t)]
                        .into_iter()
                        .map(|(d, order)| ExpansionValue::power(d, w as u32, order as u32)),
                )
                .plus(linear)
            }
            ExpansionBound::SymPres(spec) => {
                let (s, t, v) = (spec.s, spec.t, spec.v);
                let w = spec.omega();
                min_value(
                    [(da, t, s + v), (db, s, v + t), (dc, v, s + t)]
                        .into_iter()
                        .map(|(d, other, order)| {
                            ExpansionValue::power(
                                BigUint::from(choose(w, other)) * d,
                                w as u32,
                                order as u32,
                            )
                        }),
                )
            }
        }
    }
}

impl fmt::Display for ExpansionBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpansionBound::Mm { m, n, k } => write!(f, "mm({m}, {n}, {k})"),
            ExpansionBound::Direct(s) => write!(f, "direct{s}"),
            ExpansionBound::DirectMv(s) => write!(f, "direct-mv{s}"),
            ExpansionBound::SymPres(s) => write!(f, "sympres{s}"),
        }
    }
}

/// The expansion bounds that apply to `algorithm`'s canonical encoding on
/// `spec`.
///
/// The nonsymmetric algorithm is matrix multiplication with dimensions
/// `(n^s, n^t, n^v)`. The direct algorithm gets the linear-plus-power bound as
/// well when it is matrix-vector-like. The symmetry-preserving algorithm
/// falls back to the direct one on degenerate shapes, and so do its bounds.
pub fn matching_bounds(algorithm: AlgorithmId, spec: &ContractionSpec) -> Vec<ExpansionBound> {
    let side = |d: usize| spec.n.pow(d as u32);
    match algorithm {
        AlgorithmId::Nonsym => vec![ExpansionBound::Mm {
            m: side(spec.s),
            n: side(spec.t),
            k: side(spec.v),
        }],
        AlgorithmId::SymPres if spec.class() != ContractionClass::Degenerate => {
            vec![ExpansionBound::SymPres(*spec)]
        }
        AlgorithmId::Direct | AlgorithmId::SymPres => {
            let mut bounds = vec![ExpansionBound::Direct(*spec)];
            if spec.class() == ContractionClass::MatrixVector {
                bounds.push(ExpansionBound::DirectMv(*spec));
            }
            bounds
        }
    }
}

/// Largest value of the bound over non-negative integer arguments summing to
/// `3H`.
///
/// Closed forms are used where one exists: `H^(3/2)` for matrix
/// multiplication, `q H^(3/2)` for the direct algorithm and the bound at
/// `(3H, 3H, 3H)` for the symmetry-preserving one. The last is an upper bound
/// on the true maximum, not the maximum itself. The linear-plus-power family
/// has no closed form here and falls back to [`brute_force_max`].
pub fn max_over_simplex(bound: &ExpansionBound, h: u64) -> Result<ExpansionValue> {
    if h == 0 {
        return Err(precondition("cache size must be at least 1"));
    }
    match bound {
        ExpansionBound::Mm { .. } | ExpansionBound::Direct(_) => Ok(bound.evaluate(h, h, h)),
        ExpansionBound::SymPres(_) => Ok(bound.evaluate(3 * h, 3 * h, 3 * h)),
        ExpansionBound::DirectMv(_) if h <= BRUTE_FORCE_LIMIT => brute_force_max(bound, h),
        ExpansionBound::DirectMv(_) => Err(Error::Unsupported(format!(
            "no closed form for the {} family and H = {h} exceeds the search limit {BRUTE_FORCE_LIMIT}",
            bound.family()
        ))),
    }
}

/// Exhaustive integer search over the simplex, for `H` up to
/// [`BRUTE_FORCE_LIMIT`].
pub fn brute_force_max(bound: &ExpansionBound, h: u64) -> Result<ExpansionValue> {
    if h == 0 || h > BRUTE_FORCE_LIMIT {
        return Err(precondition(format!(
            "H must lie in [1, {BRUTE_FORCE_LIMIT}], got {h}"
        )));
    }
    let total = 3 * h;
    let best = (0..=total)
        .flat_map(|a| (0..=total - a).map(move |b| (a, b, total - a - b)))
        .map(|(a, b, c)| bound.evaluate(a, b, c))
        .max()
        .expect("simplex is nonempty");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, s: usize, t: usize, v: usize) -> ContractionSpec {
        ContractionSpec::new(n, s, t, v).unwrap()
    }

    #[test]
    fn mm_values() {
        let b = bound_mm(2, 2, 2).unwrap();
        assert_eq!(b.evaluate(4, 4, 4), ExpansionValue::integer(8u64));
        assert_eq!(b.evaluate(1, 1, 1), ExpansionValue::integer(1u64));
        assert_eq!(b.evaluate(4, 4, 1), ExpansionValue::integer(4u64));
        assert!(bound_mm(0, 1, 1).is_err());
    }

    #[test]
    fn direct_q() {
        assert_eq!(ExpansionBound::direct_q_squared(&spec(2, 1, 1, 1)), 8);
        assert_eq!(ExpansionBound::direct_q_squared(&spec(2, 2, 1, 0)), 3);
        let b = bound_direct(&spec(2, 1, 1, 1));
        assert_eq!(b.evaluate(0, 5, 5), ExpansionValue::integer(0u64));
        assert_eq!(b.evaluate(1, 1, 1), ExpansionValue::power(8u64, 1, 2));
    }

    #[test]
    fn direct_mv_values() {
        let b = bound_direct_mv(&spec(2, 2, 1, 0)).unwrap();
        for d in [1u64, 4, 9] {
            assert_eq!(b.evaluate(d, d, d), ExpansionValue::integer(3 * d));
        }
        assert_eq!(b.evaluate(0, 0, 0), ExpansionValue::integer(0u64));
        // (1,1,0): only the output rank carries a linear coefficient
        let b = bound_direct_mv(&spec(2, 1, 1, 0)).unwrap();
        assert_eq!(b.evaluate(5, 0, 0), ExpansionValue::integer(0u64));
        assert_eq!(b.evaluate(0, 0, 5), ExpansionValue::integer(5u64));
        assert!(bound_direct_mv(&spec(2, 1, 1, 1)).is_err());
    }

    #[test]
    fn sympres_values() {
        let b = bound_sympres(&spec(2, 1, 1, 1)).unwrap();
        assert_eq!(b.evaluate(2, 2, 2), ExpansionValue::power(6u64, 3, 2));
        assert_eq!(b.evaluate(1, 1000, 1000), ExpansionValue::power(3u64, 3, 2));
        let b = bound_sympres(&spec(2, 2, 1, 1)).unwrap();
        // exponents 4/3 on A and C, 2 on B
        assert_eq!(b.evaluate(1, 1000, 1000), ExpansionValue::power(4u64, 4, 3));
        assert_eq!(b.evaluate(1000, 1, 1000), ExpansionValue::integer(36u64));
        assert!(bound_sympres(&spec(2, 2, 0, 0)).is_err());
    }

    #[test]
    fn simplex_maximum() {
        let mm = bound_mm(3, 3, 3).unwrap();
        assert_eq!(
            max_over_simplex(&mm, 4).unwrap(),
            ExpansionValue::integer(8u64)
        );
        let direct = bound_direct(&spec(2, 1, 1, 1));
        assert_eq!(
            max_over_simplex(&direct, 1).unwrap(),
            ExpansionValue::power(8u64, 1, 2)
        );
        let mv = bound_direct_mv(&spec(3, 2, 1, 0)).unwrap();
        assert!(max_over_simplex(&mv, 5).is_ok());
        assert!(matches!(
            max_over_simplex(&mv, 41),
            Err(Error::Unsupported(_))
        ));
        assert!(max_over_simplex(&mm, 0).is_err());
    }

    #[test]
    fn sympres_upper_form_matches_kappa_expression() {
        for (s, t, v) in [
            (1, 1, 1),
            (2, 1, 1),
            (1, 2, 1),
            (2, 2, 1),
            (2, 1, 0),
            (1, 0, 3),
        ] {
            let sp = spec(4, s, t, v);
            let b = bound_sympres(&sp).unwrap();
            for h in [1u64, 3, 10] {
                let w = sp.omega() as u32;
                let kappa = sp.kappa();
                let closed =
                    ExpansionValue::power(3 * h * choose(sp.omega(), kappa), w, kappa as u32);
                assert_eq!(max_over_simplex(&b, h).unwrap(), closed, "{sp} H={h}");
            }
        }
    }
}
