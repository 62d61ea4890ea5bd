//! Execution DAGs of bilinear algorithms and their expansion.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::verify::{VerificationMode, VerificationReport, Violation};
use super::ExpansionBound;
use crate::bilinear::BilinearAlg;
use crate::error::{precondition, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    /// Entry `row` of an input tensor.
    Input { row: usize },
    /// Binary addition of its two in-neighbours.
    Sum,
    /// The product of column `column`.
    Product { column: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagVertex {
    pub side: Side,
    pub kind: VertexKind,
    /// Sources of the in-edges.
    pub inputs: Vec<usize>,
}

/// Vertices are stored in a topological order: every in-edge comes from a
/// lower index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionDag {
    pub vertices: Vec<DagVertex>,
    /// Product vertex of each column.
    pub products: Vec<usize>,
    /// Vertex holding each output entry, if any product reaches it.
    pub outputs: Vec<Option<usize>>,
}

/// Expansion of a vertex subset on the three sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zeta {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl ExecutionDag {
    fn push(&mut self, side: Side, kind: VertexKind, inputs: Vec<usize>) -> usize {
        self.vertices.push(DagVertex { side, kind, inputs });
        self.vertices.len() - 1
    }

    /// Left-to-right binary summation over `terms`; a single term is passed
    /// through unchanged.
    fn sum_tree(&mut self, side: Side, terms: &[usize]) -> Option<usize> {
        let (&first, rest) = terms.split_first()?;
        Some(rest.iter().fold(first, |acc, &t| {
            self.push(side, VertexKind::Sum, vec![acc, t])
        }))
    }

    pub fn product_count(&self) -> usize {
        self.products.len()
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.iter().map(|v| v.inputs.len()).sum()
    }

    pub fn is_input(&self, v: usize) -> bool {
        matches!(self.vertices[v].kind, VertexKind::Input { .. })
    }

    /// Every edge points forward in the vertex order, so the graph is
    /// acyclic.
    pub fn is_topologically_ordered(&self) -> bool {
        self.vertices
            .iter()
            .enumerate()
            .all(|(w, v)| v.inputs.iter().all(|&u| u < w))
    }
}

/// Builds an execution DAG with one summation tree per operand and per output
/// entry, each summing left to right in row (respectively column) order.
pub fn build_dag_naive(alg: &BilinearAlg) -> ExecutionDag {
    let (ra, rb, rc) = alg.dims();
    let mut dag = ExecutionDag {
        vertices: Vec::new(),
        products: Vec::with_capacity(alg.rank_cols()),
        outputs: vec![None; rc],
    };
    let a_inputs: Vec<usize> = (0..ra)
        .map(|row| dag.push(Side::A, VertexKind::Input { row }, vec![]))
        .collect();
    let b_inputs: Vec<usize> = (0..rb)
        .map(|row| dag.push(Side::B, VertexKind::Input { row }, vec![]))
        .collect();
    for column in 0..alg.rank_cols() {
        let a_terms: Vec<usize> = alg
            .fa
            .column(column)
            .iter()
            .map(|(r, _)| a_inputs[*r])
            .collect();
        let b_terms: Vec<usize> = alg
            .fb
            .column(column)
            .iter()
            .map(|(r, _)| b_inputs[*r])
            .collect();
        let a = dag
            .sum_tree(Side::A, &a_terms)
            .expect("operands are nonempty");
        let b = dag
            .sum_tree(Side::B, &b_terms)
            .expect("operands are nonempty");
        let p = dag.push(Side::C, VertexKind::Product { column }, vec![a, b]);
        dag.products.push(p);
    }
    let mut contributors: Vec<Vec<usize>> = vec![Vec::new(); rc];
    for column in 0..alg.rank_cols() {
        for (row, _) in alg.fc.column(column) {
            contributors[*row].push(dag.products[column]);
        }
    }
    for (row, terms) in contributors.iter().enumerate() {
        dag.outputs[row] = dag.sum_tree(Side::C, terms);
    }
    dag
}

/// Counts the three expansions of `z`, which must not contain inputs.
///
/// `a` and `b` count vertices of that side outside `z` with an edge into
/// `z`. `c` counts the `C`-side vertices of `z` together with those vertices
/// of `z` that feed a `C`-side vertex outside it.
pub fn zeta(dag: &ExecutionDag, z: &[usize]) -> Result<Zeta> {
    let mut in_z = vec![false; dag.vertices.len()];
    for &v in z {
        if v >= dag.vertices.len() {
            return Err(precondition(format!("vertex {v} out of range")));
        }
        if dag.is_input(v) {
            return Err(precondition(format!("vertex {v} is an input")));
        }
        in_z[v] = true;
    }
    let mut outer_a = BTreeSet::new();
    let mut outer_b = BTreeSet::new();
    let mut inner_c = BTreeSet::new();
    for (w, vertex) in dag.vertices.iter().enumerate() {
        if in_z[w] {
            if vertex.side == Side::C {
                inner_c.insert(w);
            }
            for &u in &vertex.inputs {
                if !in_z[u] {
                    match dag.vertices[u].side {
                        Side::A => outer_a.insert(u),
                        Side::B => outer_b.insert(u),
                        Side::C => false,
                    };
                }
            }
        } else if vertex.side == Side::C {
            inner_c.extend(vertex.inputs.iter().copied().filter(|&u| in_z[u]));
        }
    }
    Ok(Zeta {
        a: outer_a.len(),
        b: outer_b.len(),
        c: inner_c.len(),
    })
}

/// Samples vertex subsets and checks that the number of products in each is
/// within the bound evaluated at its expansion.
///
/// Each subset takes a random set of products (uniform size, then uniform
/// subset), all non-input vertices of their operand trees, and then each
/// output-side sum whose operands are all inside with probability one half.
pub fn check_dag_expansion(
    dag: &ExecutionDag,
    bound: &ExpansionBound,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for _ in 0..trials {
        let count = rng.gen_range(0..=dag.product_count());
        let mut columns = sample(&mut rng, dag.product_count(), count).into_vec();
        columns.sort_unstable();
        let mut in_z = vec![false; dag.vertices.len()];
        let mut stack: Vec<usize> = columns.iter().map(|&c| dag.products[c]).collect();
        while let Some(v) = stack.pop() {
            if in_z[v] || dag.is_input(v) {
                continue;
            }
            in_z[v] = true;
            stack.extend(dag.vertices[v].inputs.iter().copied());
        }
        for (v, vertex) in dag.vertices.iter().enumerate() {
            if vertex.side == Side::C
                && vertex.kind == VertexKind::Sum
                && vertex.inputs.iter().all(|&u| in_z[u])
                && rng.gen_bool(0.5)
            {
                in_z[v] = true;
            }
        }
        let z: Vec<usize> = (0..dag.vertices.len()).filter(|&v| in_z[v]).collect();
        let e = zeta(dag, &z)?;
        let value = bound.evaluate(e.a as u64, e.b as u64, e.c as u64);
        if !value.admits_u64(columns.len() as u64) {
            violations.push(Violation {
                actual: columns.len(),
                columns,
                ranks: [e.a, e.b, e.c],
                bound: value.to_string(),
                bound_approx: value.to_f64(),
            });
        }
    }
    Ok(VerificationReport {
        bound: bound.to_string(),
        mode: VerificationMode::Sampled,
        seed: Some(seed),
        subsets_checked: trials as u64,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::build_encoding;
    use crate::combinatorics::ContractionSpec;
    use crate::contraction::AlgorithmId;
    use crate::expansion::bound_mm;

    fn mm_dag() -> (BilinearAlg, ExecutionDag) {
        let spec = ContractionSpec::new(2, 1, 1, 1).unwrap();
        let alg = build_encoding(AlgorithmId::Nonsym, &spec).unwrap();
        let dag = build_dag_naive(&alg);
        (alg, dag)
    }

    #[test]
    fn matrix_product_dag_shape() {
        let (alg, dag) = mm_dag();
        assert_eq!(dag.product_count(), alg.rank_cols());
        assert!(dag.is_topologically_ordered());
        // 4 + 4 inputs, 8 products, 4 output sums
        assert_eq!(dag.vertices.len(), 20);
        assert!(dag.outputs.iter().all(Option::is_some));
    }

    #[test]
    fn single_product_expansion() {
        let (_, dag) = mm_dag();
        let e = zeta(&dag, &[dag.products[0]]).unwrap();
        assert_eq!(e, Zeta { a: 1, b: 1, c: 1 });
    }

    #[test]
    fn whole_graph_expansion() {
        let (_, dag) = mm_dag();
        let z: Vec<usize> = (0..dag.vertices.len())
            .filter(|&v| !dag.is_input(v))
            .collect();
        let e = zeta(&dag, &z).unwrap();
        // every input feeds some product
        assert_eq!((e.a, e.b), (4, 4));
        assert!(e.c >= dag.outputs.len());
    }

    #[test]
    fn inputs_are_rejected() {
        let (_, dag) = mm_dag();
        assert!(zeta(&dag, &[0]).is_err());
    }

    #[test]
    fn sampled_subsets_respect_the_bound() {
        let (_, dag) = mm_dag();
        let rep = check_dag_expansion(&dag, &bound_mm(2, 2, 2).unwrap(), 200, 1).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
    }
}
