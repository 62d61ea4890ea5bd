//! Packed symmetric tensors and dense tensors over exact rationals.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{
    count_multisets_usize, enumerate_increasing, flatten, unflatten, IndexTuple, TupleSpace,
};
use crate::error::{precondition, Error, Result};

/// Exact scalar type used everywhere.
pub type Scalar = BigRational;

pub fn scalar(x: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(x))
}

/// Formats a scalar as `num/den`, always with an explicit denominator.
pub fn format_scalar(x: &Scalar) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse_scalar(s: &str) -> Option<Scalar> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let num: BigInt = a.trim().parse().ok()?;
            let den: BigInt = b.trim().parse().ok()?;
            if den.is_zero() {
                return None;
            }
            Some(BigRational::new(num, den))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// A symmetric tensor stored by increasing index tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymTensor {
    n: usize,
    d: usize,
    values: Vec<Scalar>,
}

impl SymTensor {
    /// All-zero tensor.
    pub fn zeros(n: usize, d: usize) -> Self {
        SymTensor {
            n,
            d,
            values: vec![Scalar::zero(); count_multisets_usize(n, d)],
        }
    }

    pub fn from_values(n: usize, d: usize, values: Vec<Scalar>) -> Result<Self> {
        let want = count_multisets_usize(n, d);
        if values.len() != want {
            return Err(precondition(format!(
                "packed tensor of dimension {n} and order {d} needs {want} values, got {}",
                values.len()
            )));
        }
        Ok(SymTensor { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.d
    }

    /// Packed values in rank order.
    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Scalar] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Scalar> {
        self.values
    }

    fn locate(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.d {
            return Err(precondition(format!(
                "index has length {}, tensor order is {}",
                idx.len(),
                self.d
            )));
        }
        if idx.iter().any(|&x| x == 0 || x > self.n) {
            return Err(precondition(format!(
                "index {} outside [1, {}]",
                IndexTuple::from(idx),
                self.n
            )));
        }
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        Ok(TupleSpace::new(self.n, self.d).rank_unchecked(&sorted))
    }

    /// Entry at any permutation of `idx`.
    pub fn get(&self, idx: &[usize]) -> Result<&Scalar> {
        let r = self.locate(idx)?;
        Ok(&self.values[r])
    }

    /// Writes the entry for the sorted representative of `idx`.
    pub fn set(&mut self, idx: &[usize], value: Scalar) -> Result<()> {
        let r = self.locate(idx)?;
        self.values[r] = value;
        Ok(())
    }

    /// Expands to the full index cube.
    pub fn unpack(&self) -> DenseTensor {
        let space = TupleSpace::new(self.n, self.d);
        let total = self.n.pow(self.d as u32);
        let mut sorted = vec![0; self.d];
        let values = (0..total)
            .map(|flat| {
                let idx = unflatten(flat, self.n, self.d);
                sorted.copy_from_slice(&idx);
                sorted.sort_unstable();
                self.values[space.rank_unchecked(&sorted)].clone()
            })
            .collect();
        DenseTensor {
            n: self.n,
            d: self.d,
            values,
        }
    }

    /// Deterministic tensor with integer entries in `[-9, 9]`.
    pub fn random(n: usize, d: usize, seed: u64) -> Self {
        random_symmetric(n, d, seed)
    }

    /// Writes the line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut out = format!("symtensor {} {}\n", self.n, self.d);
        for (r, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{r} {}", format_scalar(v));
        }
        out
    }

    /// Parses the text form. Ranks that are not listed are zero.
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
        let bad_header = || Error::Parse {
            line: hline,
            message: format!("expected `symtensor n d`, found `{header}`"),
        };
        if parts.len() != 3 || parts[0] != "symtensor" {
            return Err(bad_header());
        }
        let n: usize = parts[1].parse().map_err(|_| bad_header())?;
        let d: usize = parts[2].parse().map_err(|_| bad_header())?;
        if n == 0 {
            return Err(bad_header());
        }
        let mut t = SymTensor::zeros(n, d);
        for (line, l) in lines {
            let (r, v) = l.split_once(char::is_whitespace).ok_or(Error::Parse {
                line,
                message: "expected `rank value`".into(),
            })?;
            let r: usize = r.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad rank `{r}`"),
            })?;
            if r >= t.values.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("rank {r} out of range"),
                });
            }
            t.values[r] = parse_scalar(v).ok_or(Error::Parse {
                line,
                message: format!("bad value `{}`", v.trim()),
            })?;
        }
        Ok(t)
    }
}

/// A tensor over the full index cube `[1, n]^d`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseTensor {
    n: usize,
    d: usize,
    values: Vec<Scalar>,
}

impl DenseTensor {
    pub fn zeros(n: usize, d: usize) -> Self {
        DenseTensor {
            n,
            d,
            values: vec![Scalar::zero(); n.pow(d as u32)],
        }
    }

    pub fn from_values(n: usize, d: usize, values: Vec<Scalar>) -> Result<Self> {
        let want = n.pow(d as u32);
        if values.len() != want {
            return Err(precondition(format!(
                "dense tensor of dimension {n} and order {d} needs {want} values, got {}",
                values.len()
            )));
        }
        Ok(DenseTensor { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> Result<&Scalar> {
        if idx.len() != self.d || idx.iter().any(|&x| x == 0 || x > self.n) {
            return Err(precondition(format!(
                "index {} invalid for a dense tensor of dimension {} and order {}",
                IndexTuple::from(idx),
                self.n,
                self.d
            )));
        }
        Ok(&self.values[flatten(idx, self.n)])
    }

    pub fn set(&mut self, idx: &[usize], value: Scalar) -> Result<()> {
        self.get(idx)?;
        let f = flatten(idx, self.n);
        self.values[f] = value;
        Ok(())
    }

    /// First asymmetric pair of entries, if any.
    pub fn symmetry_violation(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let space = TupleSpace::new(self.n, self.d);
        let mut reps: Vec<Option<usize>> = vec![None; space.size()];
        for flat in 0..self.values.len() {
            let idx = unflatten(flat, self.n, self.d);
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            let r = space.rank_unchecked(&sorted);
            match reps[r] {
                None => reps[r] = Some(flat),
                Some(first) => {
                    if self.values[first] != self.values[flat] {
                        return Some((unflatten(first, self.n, self.d), idx));
                    }
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_violation().is_none()
    }

    /// Packs a symmetric tensor.
    pub fn pack(&self) -> Result<SymTensor> {
        if let Some((first, second)) = self.symmetry_violation() {
            return Err(Error::NotSymmetric { first, second });
        }
        let values = enumerate_increasing(self.n, self.d)
            .iter()
            .map(|t| self.values[flatten(t.entries(), self.n)].clone())
            .collect();
        Ok(SymTensor {
            n: self.n,
            d: self.d,
            values,
        })
    }

    /// Deterministic tensor with independent integer entries in `[-9, 9]`.
    pub fn random(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n.pow(d as u32))
            .map(|_| scalar(rng.gen_range(-9..=9)))
            .collect();
        DenseTensor { n, d, values }
    }
}

/// Deterministic symmetric tensor with integer entries in `[-9, 9]`.
pub fn random_symmetric(n: usize, d: usize, seed: u64) -> SymTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_0000_0000);
    let values = (0..count_multisets_usize(n, d))
        .map(|_| scalar(rng.gen_range(-9..=9)))
        .collect();
    SymTensor { n, d, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_and_set_follow_symmetry() {
        let mut t = SymTensor::zeros(3, 2);
        assert!(t.values().iter().all(Zero::is_zero));
        t.set(&[2, 1], scalar(5)).unwrap();
        assert_eq!(t.get(&[1, 2]).unwrap(), &scalar(5));
        let mut u = SymTensor::zeros(3, 3);
        u.set(&[1, 1, 2], scalar(-4)).unwrap();
        assert_eq!(u.get(&[2, 1, 1]).unwrap(), &scalar(-4));
        assert!(u.get(&[1, 2]).is_err());
        assert!(u.get(&[1, 2, 4]).is_err());
    }

    #[test]
    fn unpack_matrix() {
        let t = SymTensor::from_values(2, 2, vec![scalar(1), scalar(2), scalar(3)]).unwrap();
        let d = t.unpack();
        assert_eq!(d.values(), &[scalar(1), scalar(2), scalar(2), scalar(3)]);
        assert_eq!(d.pack().unwrap(), t);
    }

    #[test]
    fn scalar_and_vector_edge_cases() {
        let s = SymTensor::from_values(4, 0, vec![scalar(7)]).unwrap();
        assert_eq!(s.unpack().values(), &[scalar(7)]);
        assert_eq!(s.unpack().pack().unwrap(), s);
        let v = random_symmetric(4, 1, 3);
        assert_eq!(v.unpack().values(), v.values());
    }

    #[test]
    fn asymmetric_input_names_the_pair() {
        let d = DenseTensor::from_values(2, 2, vec![scalar(0), scalar(1), scalar(2), scalar(0)])
            .unwrap();
        match d.pack() {
            Err(Error::NotSymmetric { first, second }) => {
                assert_eq!(first, vec![1, 2]);
                assert_eq!(second, vec![2, 1]);
            }
            other => panic!("expected asymmetry error, got {other:?}"),
        }
    }

    #[test]
    fn symmetrized_dense_round_trip() {
        // symmetrize a random dense tensor by summing over permutations
        let n = 3;
        let raw = DenseTensor::random(n, 3, 11);
        let mut sym = DenseTensor::zeros(n, 3);
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for flat in 0..27 {
            let idx = unflatten(flat, n, 3);
            let mut acc = Scalar::zero();
            for p in &perms {
                let q: Vec<usize> = p.iter().map(|&i| idx[i]).collect();
                acc += raw.get(&q).unwrap();
            }
            sym.set(&idx, acc).unwrap();
        }
        let packed = sym.pack().unwrap();
        assert_eq!(packed.unpack(), sym);
    }

    #[test]
    fn random_is_deterministic_and_bounded() {
        assert_eq!(random_symmetric(3, 3, 9), random_symmetric(3, 3, 9));
        let differing = (0..100u64)
            .filter(|&s| random_symmetric(3, 3, s) != random_symmetric(3, 3, s + 1000))
            .count();
        assert_eq!(differing, 100);
        let t = random_symmetric(5, 2, 1);
        assert!(t
            .values()
            .iter()
            .all(|x| x.is_integer() && *x >= scalar(-9) && *x <= scalar(9)));
        assert_eq!(random_symmetric(1, 4, 2).values().len(), 1);
    }

    #[test]
    fn text_round_trip() {
        let mut t = random_symmetric(3, 2, 4);
        t.values_mut()[1] = BigRational::new(BigInt::from(-3), BigInt::from(7));
        let txt = t.to_text();
        assert!(txt.starts_with("symtensor 3 2\n0 "));
        assert_eq!(SymTensor::from_text(&txt).unwrap(), t);
        assert!(SymTensor::from_text("tensor 3 2\n").is_err());
        assert!(SymTensor::from_text("symtensor 2 1\n5 1/1\n").is_err());
        assert!(SymTensor::from_text("symtensor 2 1\n0 1/0\n").is_err());
    }
}
