//! Empirical checks of expansion bounds and projection inequalities.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExpansionBound;
use crate::bilinear::BilinearAlg;
use crate::combinatorics::{binomial_u64, combinations};
use crate::error::{precondition, Error, Result};

/// Largest column count verified exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationMode {
    /// Every subset of columns.
    Exhaustive,
    /// Random subsets: a uniform size, then a uniform subset of that size.
    Sampled,
}

/// A column subset holding more products than the bound allows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub columns: Vec<usize>,
    /// Ranks of the restricted `A`, `B` and `C` matrices.
    pub ranks: [usize; 3],
    /// The bound at those ranks, exact.
    pub bound: String,
    pub bound_approx: f64,
    /// Number of products in the subset.
    pub actual: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub bound: String,
    pub mode: VerificationMode,
    pub seed: Option<u64>,
    pub subsets_checked: u64,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The column subsets a verification run visits, in order.
///
/// Exhaustive mode lists all `2^columns` subsets and refuses more than
/// [`EXHAUSTIVE_LIMIT`] columns. Sampled mode draws `trials` subsets from a
/// generator seeded with `seed`.
pub fn column_subsets(
    columns: usize,
    mode: VerificationMode,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    match mode {
        VerificationMode::Exhaustive => {
            if columns > EXHAUSTIVE_LIMIT {
                return Err(Error::TooLarge {
                    columns,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            Ok((0u32..1 << columns)
                .map(|mask| (0..columns).filter(|&c| mask >> c & 1 == 1).collect())
                .collect())
        }
        VerificationMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..trials)
                .map(|_| {
                    let size = rng.gen_range(0..=columns);
                    let mut picked = sample(&mut rng, columns, size).into_vec();
                    picked.sort_unstable();
                    picked
                })
                .collect())
        }
    }
}

/// Checks `|R| <= bound(rank FA_R, rank FB_R, rank FC_R)` on column subsets
/// `R` of `alg`.
pub fn verify_expansion(
    alg: &BilinearAlg,
    bound: &ExpansionBound,
    mode: VerificationMode,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if alg.dims() != bound.expected_dims() {
        return Err(precondition(format!(
            "encoding has row counts {:?} but {bound} expects {:?}",
            alg.dims(),
            bound.expected_dims()
        )));
    }
    let subsets = column_subsets(alg.rank_cols(), mode, trials, seed)?;
    let checked = subsets.len() as u64;
    let violations: Vec<Violation> = subsets
        .into_par_iter()
        .map(|columns| -> Result<Option<Violation>> {
            let (ra, rb, rc) = alg.subset(&columns)?.ranks();
            let value = bound.evaluate(ra as u64, rb as u64, rc as u64);
            Ok(
                (!value.admits_u64(columns.len() as u64)).then(|| Violation {
                    actual: columns.len(),
                    columns,
                    ranks: [ra, rb, rc],
                    bound: value.to_string(),
                    bound_approx: value.to_f64(),
                }),
            )
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(VerificationReport {
        bound: bound.to_string(),
        mode,
        seed: (mode == VerificationMode::Sampled).then_some(seed),
        subsets_checked: checked,
        violations,
    })
}

/// Outcome of both projection inequalities on one tuple set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoomisWhitneyReport {
    pub size: usize,
    pub tuple_len: usize,
    pub order: usize,
    /// `|L_S|` for every `order`-subset `S` of positions, lexicographic.
    pub projection_sizes: Vec<usize>,
    /// Size of the union of all projections.
    pub union_size: usize,
    /// `|V| <= (prod |L_S|)^(1 / C(m-1, r-1))`.
    pub product_form_holds: bool,
    /// `|V| <= |L|^(m / r)`.
    pub union_form_holds: bool,
}

impl LoomisWhitneyReport {
    pub fn passed(&self) -> bool {
        self.product_form_holds && self.union_form_holds
    }
}

/// Evaluates the generalized Loomis-Whitney inequality and its union form on
/// a set of `m`-tuples with projections of order `r`.
pub fn loomis_whitney_check(tuples: &[Vec<usize>], r: usize) -> Result<LoomisWhitneyReport> {
    let set: BTreeSet<&[usize]> = tuples.iter().map(Vec::as_slice).collect();
    let m = tuples.first().map_or(r, Vec::len);
    if let Some(bad) = tuples.iter().find(|t| t.len() != m) {
        return Err(precondition(format!(
            "tuple of length {} among tuples of length {m}",
            bad.len()
        )));
    }
    if r == 0 || r > m {
        return Err(precondition(format!(
            "projection order {r} outside [1, {m}]"
        )));
    }
    let mut union: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut projection_sizes = Vec::new();
    for positions in combinations(m, r) {
        let projected: BTreeSet<Vec<usize>> = set
            .iter()
            .map(|t| positions.iter().map(|&p| t[p]).collect())
            .collect();
        projection_sizes.push(projected.len());
        union.extend(projected);
    }
    let size = BigUint::from(set.len());
    let exponent = binomial_u64(m as u64 - 1, r as u64 - 1).expect("small binomial") as u32;
    let product: BigUint = projection_sizes.iter().map(|&x| BigUint::from(x)).product();
    let product_form_holds = size.pow(exponent) <= product;
    let union_form_holds = size.pow(r as u32) <= BigUint::from(union.len()).pow(m as u32);
    Ok(LoomisWhitneyReport {
        size: set.len(),
        tuple_len: m,
        order: r,
        projection_sizes,
        union_size: union.len(),
        product_form_holds,
        union_form_holds,
    })
}

/// Runs [`loomis_whitney_check`] for every projection order on the index
/// tuples naming the given columns. Unlabelled columns are skipped.
pub fn subset_projection_check(
    alg: &BilinearAlg,
    columns: &[usize],
) -> Result<Vec<LoomisWhitneyReport>> {
    let tuples: Vec<Vec<usize>> = columns
        .iter()
        .map(|&c| {
            alg.labels
                .get(c)
                .ok_or_else(|| precondition(format!("column {c} out of range")))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|label| !label.is_empty())
        .map(|label| {
            label
                .iter()
                .flat_map(|t| t.entries().iter().copied())
                .collect()
        })
        .collect();
    let Some(m) = tuples.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    (1..=m).map(|r| loomis_whitney_check(&tuples, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example() {
        let v = vec![vec![1, 1], vec![1, 2], vec![2, 1]];
        let rep = loomis_whitney_check(&v, 1).unwrap();
        assert_eq!(rep.projection_sizes, vec![2, 2]);
        assert_eq!(rep.union_size, 2);
        assert!(rep.passed());
    }

    #[test]
    fn cube_is_tight() {
        let k = 3;
        let cube: Vec<Vec<usize>> = (0..k * k * k)
            .map(|x| vec![x / 9, x / 3 % 3, x % 3])
            .collect();
        for r in 1..=3 {
            let rep = loomis_whitney_check(&cube, r).unwrap();
            assert!(rep.passed());
            assert_eq!(rep.union_size, k.pow(r as u32));
        }
    }

    #[test]
    fn ragged_and_bad_order() {
        assert!(loomis_whitney_check(&[vec![1, 2], vec![1]], 1).is_err());
        assert!(loomis_whitney_check(&[vec![1, 2]], 3).is_err());
        assert!(loomis_whitney_check(&[vec![1, 2]], 0).is_err());
    }

    #[test]
    fn exhaustive_subsets() {
        assert_eq!(
            column_subsets(3, VerificationMode::Exhaustive, 0, 0)
                .unwrap()
                .len(),
            8
        );
        assert!(matches!(
            column_subsets(15, VerificationMode::Exhaustive, 0, 0),
            Err(Error::TooLarge {
                columns: 15,
                limit: 14
            })
        ));
        let a = column_subsets(20, VerificationMode::Sampled, 50, 7).unwrap();
        assert_eq!(
            a,
            column_subsets(20, VerificationMode::Sampled, 50, 7).unwrap()
        );
        assert!(a.iter().all(|s| s.windows(2).all(|w| w[0] < w[1])));
    }
}
