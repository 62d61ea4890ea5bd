//! Plan for the symmetry-preserving algorithm.
//!
//! The main stage forms one product per increasing `ω`-tuple `i`: a weighted
//! sum of the `A` entries indexed by sub-multisets of `i` times a weighted sum
//! of the `B` entries indexed the same way. Each product is then scattered to
//! every output entry indexed by a sub-multiset of `i`.
//!
//! That stage also produces unwanted cross terms. The plan finds them by
//! expanding both the main stage and the exact contraction into weighted
//! `(output, A entry, B entry)` triples and subtracting. The signed residual
//! is grouped into as few products as the grouping heuristics allow and
//! applied afterwards.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_integer::Integer;
use num_traits::Zero;

use super::{check_packed, Counted, MultCount};
use crate::combinatorics::{
    enumerate_increasing, factorial_u64, multiplicity_factor, partitions, unique_partitions,
    ContractionSpec, IndexTuple, TupleSpace,
};
use crate::error::Result;
use crate::tensors::{scalar, Scalar, SymTensor};

/// One main-stage product: `(sum a) * (sum b)` scattered by `c`.
/// Row indices are packed ranks of `A`, `B` and `C` respectively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZStageColumn {
    pub tuple: IndexTuple,
    pub a: Vec<(usize, i64)>,
    pub b: Vec<(usize, i64)>,
    pub c: Vec<(usize, i64)>,
}

/// One correction product, same layout as [`ZStageColumn`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionProduct {
    pub a: Vec<(usize, i64)>,
    pub b: Vec<(usize, i64)>,
    pub c: Vec<(usize, i64)>,
}

/// Output of a traced symmetry-preserving run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPresTrace {
    /// The contraction result.
    pub result: SymTensor,
    /// Output of the main stage alone, factorial prefactor included.
    pub z_stage: SymTensor,
    pub mults: MultCount,
}

/// Precomputed main stage and correction for one [`ContractionSpec`].
#[derive(Debug, Clone)]
pub struct SymPresPlan {
    spec: ContractionSpec,
    columns: Vec<ZStageColumn>,
    corrections: Vec<CorrectionProduct>,
}

type Triple = (usize, usize, usize); // (C rank, A rank, B rank)

fn to_i64(x: i128) -> i64 {
    i64::try_from(x).expect("coefficient overflow")
}

impl SymPresPlan {
    pub fn new(spec: &ContractionSpec) -> Result<Self> {
        let columns = main_stage(spec);
        let residual = residual(spec, &columns);
        let corrections = group_residual(spec, residual);
        Ok(SymPresPlan {
            spec: *spec,
            columns,
            corrections,
        })
    }

    pub fn spec(&self) -> &ContractionSpec {
        &self.spec
    }

    pub fn columns(&self) -> &[ZStageColumn] {
        &self.columns
    }

    pub fn corrections(&self) -> &[CorrectionProduct] {
        &self.corrections
    }

    pub fn evaluate(&self, a: &SymTensor, b: &SymTensor) -> Result<SymPresTrace> {
        check_packed(a, b, &self.spec)?;
        let out_len = crate::combinatorics::count_multisets_usize(self.spec.n, self.spec.order_c());
        let mut z = vec![Scalar::zero(); out_len];
        let mut high = 0u64;
        for col in &self.columns {
            let p = combine(&col.a, a.values()) * combine(&col.b, b.values());
            high += 1;
            scatter(&col.c, &p, &mut z);
        }
        let mut c = z.clone();
        let mut low = 0u64;
        for corr in &self.corrections {
            let p = combine(&corr.a, a.values()) * combine(&corr.b, b.values());
            low += 1;
            scatter(&corr.c, &p, &mut c);
        }
        let d = self.spec.order_c();
        Ok(SymPresTrace {
            result: SymTensor::from_values(self.spec.n, d, c)?,
            z_stage: SymTensor::from_values(self.spec.n, d, z)?,
            mults: MultCount {
                high_order: high,
                correction: low,
            },
        })
    }

    /// Runs the plan and reports the result with its counts.
    pub fn run(&self, a: &SymTensor, b: &SymTensor) -> Result<Counted<SymTensor>> {
        let trace = self.evaluate(a, b)?;
        Ok(Counted {
            value: trace.result,
            mults: trace.mults,
        })
    }
}

fn combine(terms: &[(usize, i64)], values: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero();
    for &(r, w) in terms {
        if w == 1 {
            acc += &values[r];
        } else {
            acc += values[r].clone() * scalar(w);
        }
    }
    acc
}

fn scatter(terms: &[(usize, i64)], p: &Scalar, out: &mut [Scalar]) {
    for &(r, w) in terms {
        out[r] += p.clone() * scalar(w);
    }
}

/// Main-stage columns with the canonical coefficients: `t!/rho(a)` on the
/// `A` side, `s!/rho(b)` on the `B` side and `s! t! rho(c)` on the output.
pub(crate) fn main_stage(spec: &ContractionSpec) -> Vec<ZStageColumn> {
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let sa = TupleSpace::new(n, s + v);
    let sb = TupleSpace::new(n, v + t);
    let sc = TupleSpace::new(n, s + t);
    let fs = factorial_u64(s) as i64;
    let ft = factorial_u64(t) as i64;
    enumerate_increasing(n, spec.omega())
        .into_iter()
        .map(|i| {
            let a = unique_partitions(&i, s + v, t)
                .expect("sizes match")
                .into_iter()
                .map(|(j, rest)| {
                    (
                        sa.rank_unchecked(j.entries()),
                        ft / multiplicity_factor(&rest) as i64,
                    )
                })
                .collect();
            let b = unique_partitions(&i, v + t, s)
                .expect("sizes match")
                .into_iter()
                .map(|(l, rest)| {
                    (
                        sb.rank_unchecked(l.entries()),
                        fs / multiplicity_factor(&rest) as i64,
                    )
                })
                .collect();
            let c = unique_partitions(&i, s + t, v)
                .expect("sizes match")
                .into_iter()
                .map(|(h, rest)| {
                    (
                        sc.rank_unchecked(h.entries()),
                        fs * ft * multiplicity_factor(&rest) as i64,
                    )
                })
                .collect();
            ZStageColumn { tuple: i, a, b, c }
        })
        .collect()
}

/// Main-stage triples minus the exact contraction's triples.
fn residual(spec: &ContractionSpec, columns: &[ZStageColumn]) -> BTreeMap<Triple, i128> {
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let mut acc: BTreeMap<Triple, i128> = BTreeMap::new();
    for col in columns {
        for &(h, wc) in &col.c {
            for &(j, wa) in &col.a {
                for &(l, wb) in &col.b {
                    *acc.entry((h, j, l)).or_default() += wc as i128 * wa as i128 * wb as i128;
                }
            }
        }
    }
    let sa = TupleSpace::new(n, s + v);
    let sb = TupleSpace::new(n, v + t);
    let prefactor = (factorial_u64(s) * factorial_u64(t)) as i128;
    let ks = enumerate_increasing(n, v);
    for (h, out) in enumerate_increasing(n, s + t).iter().enumerate() {
        for (j, l) in partitions(out, s, t).expect("sizes match") {
            for k in &ks {
                let key = (
                    h,
                    sa.rank_unchecked(j.merge(k).entries()),
                    sb.rank_unchecked(k.merge(&l).entries()),
                );
                *acc.entry(key).or_default() -= prefactor * multiplicity_factor(k) as i128;
            }
        }
    }
    acc.retain(|_, w| *w != 0);
    acc
}

/// Equality pattern of a triple: for each distinct index value, how often it
/// occurs in the output, `A` and `B` tuples.
fn pattern(h: &[usize], j: &[usize], l: &[usize]) -> Vec<[u8; 3]> {
    let mut counts: BTreeMap<usize, [u8; 3]> = BTreeMap::new();
    for (slot, tuple) in [h, j, l].iter().enumerate() {
        for &x in tuple.iter() {
            counts.entry(x).or_default()[slot] += 1;
        }
    }
    let mut p: Vec<[u8; 3]> = counts.into_values().collect();
    p.sort_unstable();
    p
}

type Pattern = Vec<[u8; 3]>;
type Classes = BTreeMap<Pattern, Vec<(Triple, i128)>>;

/// Which factor a residual class keeps as a single tensor entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Anchor {
    A,
    B,
}

// strategies are chosen on a reference size at least this large
fn reference_size(spec: &ContractionSpec) -> usize {
    spec.n.max(2 * spec.omega() + 2)
}

// skip the local search when the reference residual is bigger than this
const SEARCH_LIMIT: usize = 200_000;

/// Splits the residual into classes by equality pattern. The residual is
/// invariant under relabelling index values, so one anchor per class is
/// enough and the choice does not depend on `n`.
fn classify_residual(spec: &ContractionSpec, residual: BTreeMap<Triple, i128>) -> Classes {
    let hs = enumerate_increasing(spec.n, spec.order_c());
    let js = enumerate_increasing(spec.n, spec.order_a());
    let ls = enumerate_increasing(spec.n, spec.order_b());
    let mut classes = Classes::new();
    for ((h, j, l), w) in residual {
        let p = pattern(hs[h].entries(), js[j].entries(), ls[l].entries());
        classes.entry(p).or_default().push(((h, j, l), w));
    }
    classes
}

/// Turns residual triples into correction products.
fn group_residual(
    spec: &ContractionSpec,
    residual: BTreeMap<Triple, i128>,
) -> Vec<CorrectionProduct> {
    let classes = classify_residual(spec, residual);
    let anchors = cached_anchors(spec, &classes);
    group_with(&classes, &|p| anchors.get(p).copied().unwrap_or(Anchor::A))
}

fn cached_anchors(spec: &ContractionSpec, classes: &Classes) -> BTreeMap<Pattern, Anchor> {
    type Cache = Mutex<HashMap<(usize, usize, usize), BTreeMap<Pattern, Anchor>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = (spec.s, spec.t, spec.v);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&key) {
        return hit.clone();
    }
    let n_ref = reference_size(spec);
    let anchors = if n_ref == spec.n {
        choose_anchors(classes)
    } else {
        let reference = spec.with_n(n_ref);
        choose_anchors(&classify_residual(
            &reference,
            residual(&reference, &main_stage(&reference)),
        ))
    };
    cache
        .lock()
        .expect("cache poisoned")
        .insert(key, anchors.clone());
    anchors
}

/// Tries all-A and all-B, keeps the cheaper, then flips single classes while
/// that lowers the product count.
fn choose_anchors(classes: &Classes) -> BTreeMap<Pattern, Anchor> {
    let count = |a: &BTreeMap<Pattern, Anchor>| group_with(classes, &|p| a[p]).len();
    let uniform = |x: Anchor| -> BTreeMap<Pattern, Anchor> {
        classes.keys().map(|p| (p.clone(), x)).collect()
    };
    let (mut anchors, mut best) = [Anchor::A, Anchor::B]
        .into_iter()
        .map(|x| {
            let a = uniform(x);
            let c = count(&a);
            (a, c)
        })
        .min_by_key(|(_, c)| *c)
        .expect("two candidates");
    if classes.values().map(Vec::len).sum::<usize>() > SEARCH_LIMIT {
        return anchors;
    }
    let patterns: Vec<Pattern> = classes.keys().cloned().collect();
    loop {
        let mut improved = false;
        for p in &patterns {
            let current = anchors[p];
            anchors.insert(p.clone(), flip(current));
            let c = count(&anchors);
            if c < best {
                best = c;
                improved = true;
            } else {
                anchors.insert(p.clone(), current);
            }
        }
        if improved {
            continue;
        }
        // single flips are stuck; try flipping two classes together
        'pairs: for (i, p) in patterns.iter().enumerate() {
            for q in &patterns[i + 1..] {
                let (cp, cq) = (anchors[p], anchors[q]);
                anchors.insert(p.clone(), flip(cp));
                anchors.insert(q.clone(), flip(cq));
                let c = count(&anchors);
                if c < best {
                    best = c;
                    improved = true;
                    break 'pairs;
                }
                anchors.insert(p.clone(), cp);
                anchors.insert(q.clone(), cq);
            }
        }
        if !improved {
            return anchors;
        }
    }
}

fn flip(x: Anchor) -> Anchor {
    match x {
        Anchor::A => Anchor::B,
        Anchor::B => Anchor::A,
    }
}

/// For a fixed anchor entry the residual is a matrix over (output, other
/// entry). Grouping proportional rows or proportional columns each give a
/// valid set of rank-one products; the smaller set is used.
fn group_with(classes: &Classes, anchor_of: &dyn Fn(&Pattern) -> Anchor) -> Vec<CorrectionProduct> {
    // (anchor side, anchor entry) -> (output, other entry) -> weight
    let mut blocks: BTreeMap<(Anchor, usize), BTreeMap<(usize, usize), i128>> = BTreeMap::new();
    for (p, terms) in classes {
        let side = anchor_of(p);
        for &((h, j, l), w) in terms {
            let (x, y) = match side {
                Anchor::A => (j, l),
                Anchor::B => (l, j),
            };
            *blocks
                .entry((side, x))
                .or_default()
                .entry((h, y))
                .or_default() += w;
        }
    }
    let mut products = Vec::new();
    for ((side, x), block) in blocks {
        let mut rows: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        let mut cols: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        for ((h, y), w) in block {
            if w != 0 {
                rows.entry(h).or_default().push((y, to_i64(w)));
                cols.entry(y).or_default().push((h, to_i64(w)));
            }
        }
        // proportional rows share one factor over the other side
        let by_rows = proportional_groups(rows);
        // proportional columns share one scatter over the outputs
        let by_cols = proportional_groups(cols);
        let rank_one: Vec<(LinearForm, LinearForm)> = if by_rows.len() <= by_cols.len() {
            by_rows
        } else {
            by_cols
                .into_iter()
                .map(|(outputs, other)| (other, outputs))
                .collect()
        };
        for (other, outputs) in rank_one {
            let anchor = vec![(x, 1)];
            let (a, b) = match side {
                Anchor::A => (anchor, other),
                Anchor::B => (other, anchor),
            };
            // the correction subtracts the residual
            let c = outputs.into_iter().map(|(h, w)| (h, -w)).collect();
            products.push(CorrectionProduct { a, b, c });
        }
    }
    merge_products(products)
}

/// Sparse integer combination of packed entries or outputs.
type LinearForm = Vec<(usize, i64)>;

/// Groups vectors keyed by `k` by direction. Each group is returned as the
/// normalised direction together with the scale of every member.
fn proportional_groups(vectors: BTreeMap<usize, LinearForm>) -> Vec<(LinearForm, LinearForm)> {
    let mut groups: BTreeMap<LinearForm, LinearForm> = BTreeMap::new();
    for (k, v) in vectors {
        let (dir, scale) = normalise(&v);
        groups.entry(dir).or_default().push((k, scale));
    }
    groups.into_iter().collect()
}

/// Divides out the gcd of a linear form and fixes the sign of its first
/// coefficient, returning the normalised form and the factor taken out.
fn normalise(form: &[(usize, i64)]) -> (LinearForm, i64) {
    let g = form.iter().fold(0i64, |g, &(_, w)| g.gcd(&w));
    let g = if form[0].1 < 0 { -g } else { g };
    (form.iter().map(|&(r, w)| (r, w / g)).collect(), g)
}

/// Products whose two factors agree up to scaling are computed once and
/// scattered to the union of their outputs.
fn merge_products(products: Vec<CorrectionProduct>) -> Vec<CorrectionProduct> {
    let mut merged: BTreeMap<(LinearForm, LinearForm), BTreeMap<usize, i128>> = BTreeMap::new();
    for p in products {
        let (a, fa) = normalise(&p.a);
        let (b, fb) = normalise(&p.b);
        let out = merged.entry((a, b)).or_default();
        for (h, w) in p.c {
            *out.entry(h).or_default() += (fa * fb) as i128 * w as i128;
        }
    }
    merged
        .into_iter()
        .filter_map(|((a, b), c)| {
            let c: Vec<(usize, i64)> = c
                .into_iter()
                .filter(|&(_, w)| w != 0)
                .map(|(h, w)| (h, to_i64(w)))
                .collect();
            (!c.is_empty()).then_some(CorrectionProduct { a, b, c })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::contract_direct;
    use crate::tensors::random_symmetric;

    #[test]
    fn matrix_vector_correction_is_one_product_per_output() {
        let spec = ContractionSpec::new(5, 1, 0, 1).unwrap();
        let plan = SymPresPlan::new(&spec).unwrap();
        assert_eq!(plan.columns().len(), 15);
        assert_eq!(plan.corrections().len(), 5);
        let a = random_symmetric(5, 2, 3);
        let b = random_symmetric(5, 1, 4);
        let run = plan.evaluate(&a, &b).unwrap();
        assert_eq!(run.result, contract_direct(&a, &b, &spec).unwrap());
    }

    #[test]
    fn main_stage_coefficients_on_a_diagonal_tuple() {
        // i = (1,1,2) for (s,t,v) = (1,1,1): A side sums A_(1,1) and A_(1,2)
        // with weights 1, B side likewise, outputs get weight rho(c) = 1
        let spec = ContractionSpec::new(2, 1, 1, 1).unwrap();
        let cols = main_stage(&spec);
        let col = cols
            .iter()
            .find(|c| c.tuple.entries() == [1, 1, 2])
            .unwrap();
        assert_eq!(col.a, vec![(0, 1), (1, 1)]);
        assert_eq!(col.b, vec![(0, 1), (1, 1)]);
        assert_eq!(col.c, vec![(0, 1), (1, 1)]);
    }
}
