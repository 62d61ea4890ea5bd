//! The three contraction algorithms and the brute-force reference they are
//! checked against.
//!
//! * [`contract_nonsym`] ignores symmetry and multiplies unfolded matrices.
//! * [`contract_direct`] computes each distinct product of packed entries once.
//! * [`contract_sympres`] forms one product per increasing `ω`-tuple and then
//!   subtracts a lower-order correction.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    count_multisets_u64, enumerate_cube, enumerate_increasing, factorial_u64, flatten,
    multiplicity_factor, partitions, ContractionClass, ContractionSpec, TupleSpace,
};
use crate::error::{precondition, Result};
use crate::tensors::{scalar, DenseTensor, Scalar, SymTensor};

mod check;
mod sympres;

pub use check::{check_spec, check_spec_with_fault, AlgorithmCheck, SpecCheck};
pub use sympres::{CorrectionProduct, SymPresPlan, SymPresTrace, ZStageColumn};

/// The three algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmId {
    /// Symmetry-oblivious evaluation over the full index cube.
    Nonsym,
    /// Direct evaluation of the distinct products of packed entries.
    Direct,
    /// Symmetry-preserving evaluation with a correction stage.
    SymPres,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 3] = [
        AlgorithmId::Nonsym,
        AlgorithmId::Direct,
        AlgorithmId::SymPres,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmId::Nonsym => "nonsym",
            AlgorithmId::Direct => "direct",
            AlgorithmId::SymPres => "sympres",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nonsym" => Some(AlgorithmId::Nonsym),
            "direct" => Some(AlgorithmId::Direct),
            "sympres" => Some(AlgorithmId::SymPres),
            _ => None,
        }
    }
}

impl std::fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of scalar products an algorithm performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MultCount {
    pub high_order: u64,
    pub correction: u64,
}

impl MultCount {
    pub fn total(&self) -> u64 {
        self.high_order + self.correction
    }
}

/// A result together with the products spent computing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counted<T> {
    pub value: T,
    pub mults: MultCount,
}

pub fn classify(spec: &ContractionSpec) -> ContractionClass {
    spec.class()
}

fn check_dense(a: &DenseTensor, b: &DenseTensor, spec: &ContractionSpec) -> Result<()> {
    check_shapes(a.n(), a.order(), b.n(), b.order(), spec)
}

fn check_shapes(an: usize, ad: usize, bn: usize, bd: usize, spec: &ContractionSpec) -> Result<()> {
    if an != spec.n || bn != spec.n {
        return Err(precondition(format!(
            "operand dimensions {an} and {bn} do not match n = {}",
            spec.n
        )));
    }
    if ad != spec.order_a() || bd != spec.order_b() {
        return Err(precondition(format!(
            "operand orders ({ad}, {bd}) do not match s+v = {} and v+t = {}",
            spec.order_a(),
            spec.order_b()
        )));
    }
    Ok(())
}

/// All permutations of `0..k` in lexicographic order.
pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..k).collect();
    let mut out = vec![cur.clone()];
    while let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) {
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Reference contraction by explicit summation over the full index cube.
///
/// Without `symmetrize`, `C[j l] = sum_k A[j k] B[k l]`. With `symmetrize`,
/// every output entry is additionally summed over all `(s+t)!` reorderings
/// of its index, repeats included.
pub fn contract_oracle(
    a: &DenseTensor,
    b: &DenseTensor,
    spec: &ContractionSpec,
    symmetrize: bool,
) -> Result<DenseTensor> {
    check_dense(a, b, spec)?;
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let ks = enumerate_cube(n, v);
    let inner = |idx: &[usize]| -> Scalar {
        let (j, l) = idx.split_at(s);
        let mut acc = Scalar::zero();
        let mut ai = Vec::with_capacity(s + v);
        let mut bi = Vec::with_capacity(v + t);
        for k in &ks {
            ai.clear();
            ai.extend_from_slice(j);
            ai.extend_from_slice(k.entries());
            bi.clear();
            bi.extend_from_slice(k.entries());
            bi.extend_from_slice(l);
            acc += a.values()[flatten(&ai, n)].clone() * &b.values()[flatten(&bi, n)];
        }
        acc
    };
    let perms = if symmetrize {
        permutations(s + t)
    } else {
        vec![(0..s + t).collect()]
    };
    let values = enumerate_cube(n, s + t)
        .iter()
        .map(|i| {
            let e = i.entries();
            let mut acc = Scalar::zero();
            let mut p_idx = vec![0; e.len()];
            for p in &perms {
                for (slot, &src) in p_idx.iter_mut().zip(p) {
                    *slot = e[src];
                }
                acc += inner(&p_idx);
            }
            acc
        })
        .collect();
    DenseTensor::from_values(n, s + t, values)
}

/// Contraction as one matrix product of the unfolded operands: `A` as an
/// `n^s x n^v` matrix times `B` as an `n^v x n^t` matrix.
pub fn contract_nonsym(
    a: &DenseTensor,
    b: &DenseTensor,
    spec: &ContractionSpec,
) -> Result<DenseTensor> {
    Ok(contract_nonsym_counted(a, b, spec)?.value)
}

pub fn contract_nonsym_counted(
    a: &DenseTensor,
    b: &DenseTensor,
    spec: &ContractionSpec,
) -> Result<Counted<DenseTensor>> {
    check_dense(a, b, spec)?;
    let n = spec.n;
    let rows = n.pow(spec.s as u32);
    let inner = n.pow(spec.v as u32);
    let cols = n.pow(spec.t as u32);
    let (av, bv) = (a.values(), b.values());
    let mut out = vec![Scalar::zero(); rows * cols];
    let mut products = 0u64;
    for r in 0..rows {
        for k in 0..inner {
            let x = &av[r * inner + k];
            for c in 0..cols {
                out[r * cols + c] += x.clone() * &bv[k * cols + c];
                products += 1;
            }
        }
    }
    Ok(Counted {
        value: DenseTensor::from_values(n, spec.s + spec.t, out)?,
        mults: MultCount {
            high_order: products,
            correction: 0,
        },
    })
}

fn check_packed(a: &SymTensor, b: &SymTensor, spec: &ContractionSpec) -> Result<()> {
    check_shapes(a.n(), a.order(), b.n(), b.order(), spec)
}

/// Direct evaluation on packed operands. Each product of a packed `A` entry
/// and a packed `B` entry sharing the contracted group `k` is formed once,
/// weighted by the multiplicity of `k`, and then distributed to the outputs.
pub fn contract_direct(a: &SymTensor, b: &SymTensor, spec: &ContractionSpec) -> Result<SymTensor> {
    Ok(contract_direct_counted(a, b, spec)?.value)
}

pub fn contract_direct_counted(
    a: &SymTensor,
    b: &SymTensor,
    spec: &ContractionSpec,
) -> Result<Counted<SymTensor>> {
    check_packed(a, b, spec)?;
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let js = enumerate_increasing(n, s);
    let ls = enumerate_increasing(n, t);
    let ks = enumerate_increasing(n, v);
    let sa = TupleSpace::new(n, s + v);
    let sb = TupleSpace::new(n, v + t);
    let weights: Vec<Scalar> = ks
        .iter()
        .map(|k| scalar(multiplicity_factor(k) as i64))
        .collect();
    let a_at: Vec<Vec<usize>> = js
        .iter()
        .map(|j| {
            ks.iter()
                .map(|k| sa.rank_unchecked(j.merge(k).entries()))
                .collect()
        })
        .collect();
    let b_at: Vec<Vec<usize>> = ks
        .iter()
        .map(|k| {
            ls.iter()
                .map(|l| sb.rank_unchecked(k.merge(l).entries()))
                .collect()
        })
        .collect();

    // unique products, accumulated per (j, l)
    let mut cbar = vec![Scalar::zero(); js.len() * ls.len()];
    let mut products = 0u64;
    for ji in 0..js.len() {
        for ki in 0..ks.len() {
            let wa = weights[ki].clone() * &a.values()[a_at[ji][ki]];
            for li in 0..ls.len() {
                cbar[ji * ls.len() + li] += wa.clone() * &b.values()[b_at[ki][li]];
                products += 1;
            }
        }
    }

    let prefactor = scalar((factorial_u64(s) * factorial_u64(t)) as i64);
    let space_j = TupleSpace::new(n, s);
    let space_l = TupleSpace::new(n, t);
    let values = enumerate_increasing(n, s + t)
        .iter()
        .map(|i| {
            let mut acc = Scalar::zero();
            for (j, l) in partitions(i, s, t).expect("sizes match") {
                let ji = space_j.rank_unchecked(j.entries());
                let li = space_l.rank_unchecked(l.entries());
                acc += &cbar[ji * ls.len() + li];
            }
            acc * &prefactor
        })
        .collect();
    Ok(Counted {
        value: SymTensor::from_values(n, s + t, values)?,
        mults: MultCount {
            high_order: products,
            correction: 0,
        },
    })
}

/// Symmetry-preserving evaluation. Degenerate shapes (two or more of
/// `s`, `t`, `v` zero) fall back to [`contract_direct`], which coincides
/// with it there.
pub fn contract_sympres(a: &SymTensor, b: &SymTensor, spec: &ContractionSpec) -> Result<SymTensor> {
    Ok(contract_sympres_traced(a, b, spec)?.result)
}

/// [`contract_sympres`] together with its intermediate `Z` stage and the
/// measured product counts.
pub fn contract_sympres_traced(
    a: &SymTensor,
    b: &SymTensor,
    spec: &ContractionSpec,
) -> Result<SymPresTrace> {
    check_packed(a, b, spec)?;
    if spec.class() == ContractionClass::Degenerate {
        let run = contract_direct_counted(a, b, spec)?;
        return Ok(SymPresTrace {
            z_stage: run.value.clone(),
            result: run.value,
            mults: run.mults,
        });
    }
    SymPresPlan::new(spec)?.evaluate(a, b)
}

/// Product counts for `alg` on `spec`. The correction count of the
/// symmetry-preserving algorithm is measured by building its plan.
pub fn count_multiplications(alg: AlgorithmId, spec: &ContractionSpec) -> Result<MultCount> {
    let n = spec.n as u64;
    let overflow = || precondition(format!("product count for {spec} overflows u64"));
    match alg {
        AlgorithmId::Nonsym => Ok(MultCount {
            high_order: n.checked_pow(spec.omega() as u32).ok_or_else(overflow)?,
            correction: 0,
        }),
        AlgorithmId::Direct => {
            let mut p: u64 = 1;
            for d in [spec.s, spec.t, spec.v] {
                let c = count_multisets_u64(n, d as u64).ok_or_else(overflow)?;
                p = p.checked_mul(c).ok_or_else(overflow)?;
            }
            Ok(MultCount {
                high_order: p,
                correction: 0,
            })
        }
        AlgorithmId::SymPres => {
            let high = count_multisets_u64(n, spec.omega() as u64).ok_or_else(overflow)?;
            let correction = if spec.class() == ContractionClass::Degenerate {
                0
            } else {
                SymPresPlan::new(spec)?.corrections().len() as u64
            };
            Ok(MultCount {
                high_order: high,
                correction,
            })
        }
    }
}
