//! Bilinear-algorithm encodings.
//!
//! A bilinear algorithm is a triple of matrices `(FA, FB, FC)` sharing a
//! column count, its rank. Column `c` describes one product: the linear
//! combination `FA[:, c]` of `A` entries times the combination `FB[:, c]`
//! of `B` entries, scattered into the output by `FC[:, c]`. So
//! `c = FC ((FA^T a) .* (FB^T b))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    count_multisets_usize, enumerate_cube, enumerate_increasing, factorial_u64, flatten,
    multiplicity_factor, unique_partitions, ContractionClass, ContractionSpec, IndexTuple,
    TupleSpace,
};
use crate::contraction::{AlgorithmId, SymPresPlan};
use crate::error::{precondition, Result};
use crate::tensors::{scalar, Scalar};

mod sparse;

pub use sparse::{exact_rank, SparseExactMatrix};

/// Which index set an axis of an encoding enumerates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Domain {
    /// Every tuple of `[1, n]^order`, row-major.
    Cube { n: usize, order: usize },
    /// Increasing tuples of the given order, lexicographic.
    Increasing { n: usize, order: usize },
    /// Triples `(j, l, k)` of tuples with orders `(s, t, v)`, lexicographic
    /// in the concatenation; each part full-cube or increasing.
    Triples {
        n: usize,
        s: usize,
        t: usize,
        v: usize,
        increasing: bool,
    },
    /// Increasing `ω`-tuples followed by correction products.
    Corrected {
        n: usize,
        omega: usize,
        corrections: usize,
    },
    /// Columns picked from another domain.
    Subset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domains {
    pub a: Domain,
    pub b: Domain,
    pub c: Domain,
    pub products: Domain,
}

/// The index tuples naming one product column.
///
/// For the nonsymmetric and direct encodings this is `[j, l, k]`; for the
/// symmetry-preserving one it is the single `ω`-tuple. Correction columns
/// carry no label.
pub type ColumnLabel = Vec<IndexTuple>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilinearAlg {
    pub fa: SparseExactMatrix,
    pub fb: SparseExactMatrix,
    pub fc: SparseExactMatrix,
    pub domains: Domains,
    pub labels: Vec<ColumnLabel>,
}

impl BilinearAlg {
    pub fn new(
        fa: SparseExactMatrix,
        fb: SparseExactMatrix,
        fc: SparseExactMatrix,
        domains: Domains,
        labels: Vec<ColumnLabel>,
    ) -> Result<Self> {
        if fa.cols() != fb.cols() || fb.cols() != fc.cols() || labels.len() != fa.cols() {
            return Err(precondition(format!(
                "column counts differ: FA {}, FB {}, FC {}, labels {}",
                fa.cols(),
                fb.cols(),
                fc.cols(),
                labels.len()
            )));
        }
        for c in 0..fa.cols() {
            if fa.column(c).is_empty() || fb.column(c).is_empty() {
                return Err(precondition(format!("product column {c} lacks an operand")));
            }
        }
        Ok(BilinearAlg {
            fa,
            fb,
            fc,
            domains,
            labels,
        })
    }

    /// Row counts `(r_A, r_B, r_C)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.fa.rows(), self.fb.rows(), self.fc.rows())
    }

    /// Number of products.
    pub fn rank_cols(&self) -> usize {
        self.fa.cols()
    }

    /// `FC ((FA^T a) .* (FB^T b))`.
    pub fn apply(&self, a: &[Scalar], b: &[Scalar]) -> Result<Vec<Scalar>> {
        let x = self.fa.transpose_mul(a)?;
        let y = self.fb.transpose_mul(b)?;
        let z: Vec<Scalar> = x.into_iter().zip(y).map(|(p, q)| p * q).collect();
        self.fc.mul(&z)
    }

    /// Restriction to the listed columns, in the given order.
    pub fn subset(&self, columns: &[usize]) -> Result<BilinearAlg> {
        let mut seen = vec![false; self.rank_cols()];
        for &c in columns {
            if c >= seen.len() {
                return Err(precondition(format!(
                    "column {c} out of range for rank {}",
                    seen.len()
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(precondition(format!("column {c} selected twice")));
            }
        }
        Ok(BilinearAlg {
            fa: self.fa.select_columns(columns),
            fb: self.fb.select_columns(columns),
            fc: self.fc.select_columns(columns),
            domains: Domains {
                products: Domain::Subset,
                ..self.domains.clone()
            },
            labels: columns.iter().map(|&c| self.labels[c].clone()).collect(),
        })
    }

    /// Exact ranks of the three matrices.
    pub fn ranks(&self) -> (usize, usize, usize) {
        (
            exact_rank(&self.fa),
            exact_rank(&self.fb),
            exact_rank(&self.fc),
        )
    }

    /// All three matrices have full row rank.
    pub fn is_irreducible(&self) -> bool {
        self.ranks() == self.dims()
    }
}

fn unit() -> Scalar {
    scalar(1)
}

/// The canonical encoding of `alg` on `spec`.
///
/// For the symmetry-preserving algorithm this is its main stage only, so
/// applying it yields the intermediate `Z` (prefactor included) rather than
/// the contraction; see [`build_full_encoding`]. Degenerate shapes use the
/// direct encoding, as the algorithms coincide there.
pub fn build_encoding(alg: AlgorithmId, spec: &ContractionSpec) -> Result<BilinearAlg> {
    match alg {
        AlgorithmId::Nonsym => Ok(nonsym_encoding(spec)),
        AlgorithmId::Direct => Ok(direct_encoding(spec)),
        AlgorithmId::SymPres => {
            if spec.class() == ContractionClass::Degenerate {
                Ok(direct_encoding(spec))
            } else {
                Ok(sympres_encoding(spec))
            }
        }
    }
}

/// Like [`build_encoding`], but for the symmetry-preserving algorithm the
/// correction products are appended as extra columns, so that `apply`
/// returns the contraction itself.
pub fn build_full_encoding(alg: AlgorithmId, spec: &ContractionSpec) -> Result<BilinearAlg> {
    let base = build_encoding(alg, spec)?;
    if alg != AlgorithmId::SymPres || spec.class() == ContractionClass::Degenerate {
        return Ok(base);
    }
    let plan = SymPresPlan::new(spec)?;
    let extend = |m: &SparseExactMatrix, pick: &dyn Fn(usize) -> Vec<(usize, i64)>| {
        let mut cols: Vec<Vec<(usize, Scalar)>> =
            (0..m.cols()).map(|c| m.column(c).to_vec()).collect();
        for i in 0..plan.corrections().len() {
            cols.push(pick(i).into_iter().map(|(r, w)| (r, scalar(w))).collect());
        }
        SparseExactMatrix::from_columns(m.rows(), cols)
    };
    let corr = plan.corrections();
    let fa = extend(&base.fa, &|i| corr[i].a.clone())?;
    let fb = extend(&base.fb, &|i| corr[i].b.clone())?;
    let fc = extend(&base.fc, &|i| corr[i].c.clone())?;
    let mut labels = base.labels;
    labels.extend(std::iter::repeat(Vec::new()).take(corr.len()));
    BilinearAlg::new(
        fa,
        fb,
        fc,
        Domains {
            products: Domain::Corrected {
                n: spec.n,
                omega: spec.omega(),
                corrections: corr.len(),
            },
            ..base.domains
        },
        labels,
    )
}

fn nonsym_encoding(spec: &ContractionSpec) -> BilinearAlg {
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let mut labels = Vec::new();
    let (mut fa, mut fb, mut fc) = (Vec::new(), Vec::new(), Vec::new());
    for full in enumerate_cube(n, spec.omega()) {
        let e = full.entries();
        let (j, rest) = e.split_at(s);
        let (l, k) = rest.split_at(t);
        let jk: Vec<usize> = j.iter().chain(k).copied().collect();
        let kl: Vec<usize> = k.iter().chain(l).copied().collect();
        let jl: Vec<usize> = j.iter().chain(l).copied().collect();
        fa.push(vec![(flatten(&jk, n), unit())]);
        fb.push(vec![(flatten(&kl, n), unit())]);
        fc.push(vec![(flatten(&jl, n), unit())]);
        labels.push(vec![
            IndexTuple::from(j),
            IndexTuple::from(l),
            IndexTuple::from(k),
        ]);
    }
    let cube = |order: usize| Domain::Cube { n, order };
    BilinearAlg::new(
        SparseExactMatrix::from_columns(n.pow((s + v) as u32), fa).expect("rows in range"),
        SparseExactMatrix::from_columns(n.pow((v + t) as u32), fb).expect("rows in range"),
        SparseExactMatrix::from_columns(n.pow((s + t) as u32), fc).expect("rows in range"),
        Domains {
            a: cube(s + v),
            b: cube(v + t),
            c: cube(s + t),
            products: Domain::Triples {
                n,
                s,
                t,
                v,
                increasing: false,
            },
        },
        labels,
    )
    .expect("well-formed encoding")
}

/// Number of times the split `(j, l)` occurs among the order-preserving
/// splits of `sort(j l)`.
fn split_multiplicity(j: &IndexTuple, l: &IndexTuple) -> u64 {
    let mut counts: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for &x in j.entries() {
        counts.entry(x).or_default().0 += 1;
    }
    for &x in l.entries() {
        counts.entry(x).or_default().1 += 1;
    }
    counts
        .values()
        .map(|&(a, b)| crate::combinatorics::binomial_u64(a + b, a).expect("small"))
        .product()
}

fn direct_encoding(spec: &ContractionSpec) -> BilinearAlg {
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let sa = TupleSpace::new(n, s + v);
    let sb = TupleSpace::new(n, v + t);
    let sc = TupleSpace::new(n, s + t);
    let prefactor = factorial_u64(s) * factorial_u64(t);
    let ks = enumerate_increasing(n, v);
    let ls = enumerate_increasing(n, t);
    let mut labels = Vec::new();
    let (mut fa, mut fb, mut fc) = (Vec::new(), Vec::new(), Vec::new());
    for j in enumerate_increasing(n, s) {
        for l in &ls {
            let jl = j.merge(l);
            let repeats = split_multiplicity(&j, l);
            for k in &ks {
                fa.push(vec![(sa.rank_unchecked(j.merge(k).entries()), unit())]);
                fb.push(vec![(sb.rank_unchecked(k.merge(l).entries()), unit())]);
                let w = prefactor * multiplicity_factor(k) * repeats;
                fc.push(vec![(sc.rank_unchecked(jl.entries()), scalar(w as i64))]);
                labels.push(vec![j.clone(), l.clone(), k.clone()]);
            }
        }
    }
    let inc = |order: usize| Domain::Increasing { n, order };
    BilinearAlg::new(
        SparseExactMatrix::from_columns(sa.size(), fa).expect("rows in range"),
        SparseExactMatrix::from_columns(sb.size(), fb).expect("rows in range"),
        SparseExactMatrix::from_columns(sc.size(), fc).expect("rows in range"),
        Domains {
            a: inc(s + v),
            b: inc(v + t),
            c: inc(s + t),
            products: Domain::Triples {
                n,
                s,
                t,
                v,
                increasing: true,
            },
        },
        labels,
    )
    .expect("well-formed encoding")
}

fn sympres_encoding(spec: &ContractionSpec) -> BilinearAlg {
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let sa = TupleSpace::new(n, s + v);
    let sb = TupleSpace::new(n, v + t);
    let sc = TupleSpace::new(n, s + t);
    let fs = factorial_u64(s) as i64;
    let ft = factorial_u64(t) as i64;
    let mut labels = Vec::new();
    let (mut fa, mut fb, mut fc) = (Vec::new(), Vec::new(), Vec::new());
    for i in enumerate_increasing(n, spec.omega()) {
        let col = |space: &TupleSpace,
                   keep: usize,
                   drop: usize,
                   weight: &dyn Fn(&IndexTuple) -> Scalar| {
            unique_partitions(&i, keep, drop)
                .expect("sizes match")
                .into_iter()
                .map(|(kept, rest)| (space.rank_unchecked(kept.entries()), weight(&rest)))
                .collect::<Vec<_>>()
        };
        fa.push(col(&sa, s + v, t, &|a| {
            Scalar::new(ft.into(), (multiplicity_factor(a) as i64).into())
        }));
        fb.push(col(&sb, v + t, s, &|b| {
            Scalar::new(fs.into(), (multiplicity_factor(b) as i64).into())
        }));
        fc.push(col(&sc, s + t, v, &|c| {
            scalar(fs * ft * multiplicity_factor(c) as i64)
        }));
        labels.push(vec![i.clone()]);
    }
    let inc = |order: usize| Domain::Increasing { n, order };
    BilinearAlg::new(
        SparseExactMatrix::from_columns(count_multisets_usize(n, s + v), fa)
            .expect("rows in range"),
        SparseExactMatrix::from_columns(count_multisets_usize(n, v + t), fb)
            .expect("rows in range"),
        SparseExactMatrix::from_columns(count_multisets_usize(n, s + t), fc)
            .expect("rows in range"),
        Domains {
            a: inc(s + v),
            b: inc(v + t),
            c: inc(s + t),
            products: inc(spec.omega()),
        },
        labels,
    )
    .expect("well-formed encoding")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{contract_direct, contract_nonsym, contract_sympres_traced};
    use crate::tensors::{random_symmetric, DenseTensor};
    use num_traits::Zero;

    fn spec(n: usize, s: usize, t: usize, v: usize) -> ContractionSpec {
        ContractionSpec::new(n, s, t, v).unwrap()
    }

    #[test]
    fn table_sizes() {
        let e = build_encoding(AlgorithmId::Direct, &spec(2, 1, 0, 1)).unwrap();
        assert_eq!(e.dims(), (3, 2, 2));
        assert_eq!(e.rank_cols(), 4);
        let e = build_encoding(AlgorithmId::SymPres, &spec(2, 1, 1, 1)).unwrap();
        assert_eq!(e.rank_cols(), 4);
        let e = build_encoding(AlgorithmId::Nonsym, &spec(2, 1, 1, 1)).unwrap();
        assert_eq!(e.rank_cols(), 8);
        for c in 0..8 {
            assert_eq!(e.fa.column(c).len(), 1);
            assert_eq!(e.fb.column(c).len(), 1);
            assert_eq!(e.fc.column(c).len(), 1);
        }
    }

    #[test]
    fn apply_matches_algorithms() {
        let sp = spec(3, 1, 1, 1);
        let a = random_symmetric(3, 2, 1);
        let b = random_symmetric(3, 2, 2);
        let direct = build_encoding(AlgorithmId::Direct, &sp).unwrap();
        assert_eq!(
            direct.apply(a.values(), b.values()).unwrap(),
            contract_direct(&a, &b, &sp).unwrap().values()
        );
        let trace = contract_sympres_traced(&a, &b, &sp).unwrap();
        let phi = build_encoding(AlgorithmId::SymPres, &sp).unwrap();
        assert_eq!(
            phi.apply(a.values(), b.values()).unwrap(),
            trace.z_stage.values()
        );
        let full = build_full_encoding(AlgorithmId::SymPres, &sp).unwrap();
        assert_eq!(
            full.apply(a.values(), b.values()).unwrap(),
            trace.result.values()
        );

        let da = DenseTensor::random(3, 2, 5);
        let db = DenseTensor::random(3, 2, 6);
        let nonsym = build_encoding(AlgorithmId::Nonsym, &sp).unwrap();
        assert_eq!(
            nonsym.apply(da.values(), db.values()).unwrap(),
            contract_nonsym(&da, &db, &sp).unwrap().values()
        );
        let zeros = vec![Scalar::zero(); 6];
        assert!(direct
            .apply(&zeros, &zeros)
            .unwrap()
            .iter()
            .all(Zero::is_zero));
        assert!(direct.apply(&zeros[..5], &zeros).is_err());
    }

    #[test]
    fn subsets() {
        let e = build_encoding(AlgorithmId::Nonsym, &spec(2, 1, 1, 1)).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let same = e.subset(&all).unwrap();
        assert_eq!(
            (same.fa.clone(), same.fb.clone(), same.fc.clone()),
            (e.fa.clone(), e.fb.clone(), e.fc.clone())
        );
        let empty = e.subset(&[]).unwrap();
        assert_eq!(empty.rank_cols(), 0);
        assert_eq!(empty.dims(), e.dims());
        assert_eq!(empty.ranks(), (0, 0, 0));
        let one = e.subset(&[5]).unwrap();
        assert_eq!((one.fa.nnz(), one.fb.nnz(), one.fc.nnz()), (1, 1, 1));
        assert!(e.subset(&[1, 1]).is_err());
        assert!(e.subset(&[8]).is_err());
    }

    #[test]
    fn canonical_encodings_are_irreducible() {
        for alg in AlgorithmId::ALL {
            for (s, t, v) in [(1, 0, 1), (1, 1, 0), (1, 1, 1), (2, 1, 0), (2, 1, 1)] {
                let e = build_encoding(alg, &spec(3, s, t, v)).unwrap();
                assert!(e.is_irreducible(), "{alg} ({s},{t},{v})");
            }
        }
    }
}
