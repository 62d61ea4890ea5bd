use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{precondition, Error, Result};
use crate::tensors::{format_scalar, parse_scalar, Scalar};

/// Sparse matrix with exact entries, stored column by column with rows
/// ascending inside each column. Zeros are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseExactMatrix {
    rows: usize,
    cols: usize,
    columns: Vec<Vec<(usize, Scalar)>>,
}

impl SparseExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseExactMatrix {
            rows,
            cols,
            columns: vec![Vec::new(); cols],
        }
    }

    /// Builds from `(row, col, value)` triplets. Zero values are dropped;
    /// repeated positions are an error.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, Scalar)>,
    ) -> Result<Self> {
        let mut columns: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); cols];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(precondition(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_zero() {
                columns[c].push((r, v));
            }
        }
        Self::from_columns(rows, columns)
    }

    /// Builds from per-column `(row, value)` lists.
    pub fn from_columns(rows: usize, mut columns: Vec<Vec<(usize, Scalar)>>) -> Result<Self> {
        for (c, col) in columns.iter_mut().enumerate() {
            col.retain(|(_, v)| !v.is_zero());
            col.sort_by_key(|(r, _)| *r);
            if let Some(&(r, _)) = col.iter().find(|(r, _)| *r >= rows) {
                return Err(precondition(format!(
                    "entry ({r}, {c}) outside a matrix with {rows} rows"
                )));
            }
            if col.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(precondition(format!("column {c} has a repeated row")));
            }
        }
        Ok(SparseExactMatrix {
            rows,
            cols: columns.len(),
            columns,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column(&self, c: usize) -> &[(usize, Scalar)] {
        &self.columns[c]
    }

    /// Triplets in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &Scalar)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (*r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Scalar {
        self.columns[c]
            .iter()
            .find(|(row, _)| *row == r)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Scalar::zero)
    }

    /// `self^T x`.
    pub fn transpose_mul(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        if x.len() != self.rows {
            return Err(precondition(format!(
                "vector of length {} does not match {} rows",
                x.len(),
                self.rows
            )));
        }
        Ok(self
            .columns
            .iter()
            .map(|col| {
                let mut acc = Scalar::zero();
                for (r, v) in col {
                    acc += v.clone() * &x[*r];
                }
                acc
            })
            .collect())
    }

    /// `self y`.
    pub fn mul(&self, y: &[Scalar]) -> Result<Vec<Scalar>> {
        if y.len() != self.cols {
            return Err(precondition(format!(
                "vector of length {} does not match {} columns",
                y.len(),
                self.cols
            )));
        }
        let mut out = vec![Scalar::zero(); self.rows];
        for (col, yc) in self.columns.iter().zip(y) {
            if yc.is_zero() {
                continue;
            }
            for (r, v) in col {
                out[*r] += v.clone() * yc;
            }
        }
        Ok(out)
    }

    /// The listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> SparseExactMatrix {
        SparseExactMatrix {
            rows: self.rows,
            cols: cols.len(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("sparsemat {} {}\n", self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            let _ = writeln!(out, "{r} {c} {}", format_scalar(v));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad = |line: usize, message: String| Error::Parse { line, message };
        if parts.len() != 3 || parts[0] != "sparsemat" {
            return Err(bad(
                hline,
                format!("expected `sparsemat rows cols`, found `{header}`"),
            ));
        }
        let rows: usize = parts[1]
            .parse()
            .map_err(|_| bad(hline, "bad row count".into()))?;
        let cols: usize = parts[2]
            .parse()
            .map_err(|_| bad(hline, "bad column count".into()))?;
        let mut triplets = Vec::new();
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad(line, "expected `r c num/den`".into()));
            }
            let r: usize = f[0]
                .parse()
                .map_err(|_| bad(line, format!("bad row `{}`", f[0])))?;
            let c: usize = f[1]
                .parse()
                .map_err(|_| bad(line, format!("bad column `{}`", f[1])))?;
            let v = parse_scalar(f[2]).ok_or_else(|| bad(line, format!("bad value `{}`", f[2])))?;
            triplets.push((r, c, v));
        }
        SparseExactMatrix::from_triplets(rows, cols, triplets)
    }
}

/// Rank over the rationals.
///
/// Matrices whose columns (or rows) each hold at most one nonzero are
/// counted directly; everything else goes through fraction-free
/// elimination on an integer-scaled dense copy.
pub fn exact_rank(m: &SparseExactMatrix) -> usize {
    if m.columns.iter().all(|c| c.len() <= 1) {
        let rows: BTreeSet<usize> = m.columns.iter().flatten().map(|(r, _)| *r).collect();
        return rows.len();
    }
    let mut row_counts = vec![0usize; m.rows];
    for (r, _, _) in m.triplets() {
        row_counts[r] += 1;
    }
    if row_counts.iter().all(|&k| k <= 1) {
        return m.columns.iter().filter(|c| !c.is_empty()).count();
    }

    // compact to nonzero rows and columns
    let live_rows: Vec<usize> = (0..m.rows).filter(|&r| row_counts[r] > 0).collect();
    let mut row_pos = vec![usize::MAX; m.rows];
    for (i, &r) in live_rows.iter().enumerate() {
        row_pos[r] = i;
    }
    let live_cols: Vec<&Vec<(usize, Scalar)>> =
        m.columns.iter().filter(|c| !c.is_empty()).collect();
    let (nr, nc) = (live_rows.len(), live_cols.len());

    // dense rational copy, then clear denominators row by row
    let mut dense: Vec<Vec<Scalar>> = vec![vec![Scalar::zero(); nc]; nr];
    for (j, col) in live_cols.iter().enumerate() {
        for (r, v) in col.iter() {
            dense[row_pos[*r]][j] = v.clone();
        }
    }
    let mut mat: Vec<Vec<BigInt>> = dense
        .into_iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.into_iter()
                .map(|x| x.numer() * (&l / x.denom()))
                .collect()
        })
        .collect();

    // eliminate along the shorter side
    if nc > nr {
        mat = (0..nc)
            .map(|j| (0..nr).map(|i| mat[i][j].clone()).collect())
            .collect();
    }
    bareiss_rank(mat)
}

fn bareiss_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        let (top, below) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in below {
            let factor = row[c].clone();
            for j in c + 1..cols {
                let updated = &row[j] * &pivot - &factor * &pivot_row[j];
                row[j] = updated / &prev;
            }
            row[c] = BigInt::zero();
        }
        prev = pivot.abs();
        if prev.is_zero() {
            prev = BigInt::one();
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensors::scalar;

    fn dense(rows: &[&[i64]]) -> SparseExactMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                t.push((i, j, scalar(x)));
            }
        }
        SparseExactMatrix::from_triplets(r, c, t).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(exact_rank(&dense(&[&[1, 2], &[2, 4]])), 1);
        let id: Vec<Vec<i64>> = (0..5)
            .map(|i| (0..5).map(|j| (i == j) as i64).collect())
            .collect();
        let rows: Vec<&[i64]> = id.iter().map(|r| r.as_slice()).collect();
        assert_eq!(exact_rank(&dense(&rows)), 5);
        assert_eq!(exact_rank(&dense(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(
            exact_rank(&dense(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, -1]])),
            2
        );
        assert_eq!(
            exact_rank(&dense(&[&[2, 4, 1], &[1, 2, 0], &[3, 6, 1], &[0, 0, 5]])),
            2
        );
        assert_eq!(exact_rank(&SparseExactMatrix::zeros(3, 0)), 0);
    }

    #[test]
    fn rank_with_fractions() {
        let half = Scalar::new(1.into(), 2.into());
        let m = SparseExactMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, half.clone()),
                (0, 1, scalar(1)),
                (1, 0, scalar(1)),
                (1, 1, scalar(2)),
            ],
        )
        .unwrap();
        assert_eq!(exact_rank(&m), 1);
    }

    #[test]
    fn storage_invariants() {
        let m = SparseExactMatrix::from_triplets(2, 2, vec![(1, 0, scalar(0)), (0, 1, scalar(3))])
            .unwrap();
        assert_eq!(m.nnz(), 1);
        assert!(SparseExactMatrix::from_triplets(2, 2, vec![(2, 0, scalar(1))]).is_err());
        assert!(
            SparseExactMatrix::from_triplets(2, 2, vec![(0, 0, scalar(1)), (0, 0, scalar(2))])
                .is_err()
        );
    }

    #[test]
    fn text_round_trip() {
        let m = dense(&[&[1, 0, 2], &[0, -3, 0]]);
        let txt = m.to_text();
        assert!(txt.starts_with("sparsemat 2 3\n0 0 1/1\n"));
        assert_eq!(SparseExactMatrix::from_text(&txt).unwrap(), m);
        assert!(SparseExactMatrix::from_text("sparsemat 2\n").is_err());
    }

    #[test]
    fn products() {
        let m = dense(&[&[1, 2], &[3, 4], &[5, 6]]);
        let x = vec![scalar(1), scalar(0), scalar(-1)];
        assert_eq!(m.transpose_mul(&x).unwrap(), vec![scalar(-4), scalar(-4)]);
        assert_eq!(
            m.mul(&[scalar(1), scalar(1)]).unwrap(),
            vec![scalar(3), scalar(7), scalar(11)]
        );
        assert!(m.mul(&x).is_err());
    }
}
