//! Checks of the three algorithms on random inputs against the reference
//! summation, their product counts, and their bilinear encodings.

use num_traits::Zero;
use serde::Serialize;

use super::{
    contract_direct_counted, contract_nonsym_counted, contract_oracle, contract_sympres_traced,
    count_multiplications, AlgorithmId, MultCount,
};
use crate::bilinear::{build_encoding, build_full_encoding};
use crate::combinatorics::ContractionSpec;
use crate::error::Result;
use crate::tensors::{random_symmetric, DenseTensor, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgorithmCheck {
    pub algorithm: AlgorithmId,
    /// Output equals the reference exactly.
    pub matches_reference: bool,
    /// Products actually performed.
    pub mults: MultCount,
    /// Products predicted by the closed-form count.
    pub expected: MultCount,
    /// Applying the encoding reproduces the algorithm's output.
    pub encoding_matches: bool,
    /// The canonical encoding's three matrices have full row rank.
    pub encoding_irreducible: bool,
}

impl AlgorithmCheck {
    pub fn passed(&self) -> bool {
        self.matches_reference
            && self.mults == self.expected
            && self.encoding_matches
            && self.encoding_irreducible
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecCheck {
    pub spec: ContractionSpec,
    pub seed: u64,
    pub algorithms: Vec<AlgorithmCheck>,
}

impl SpecCheck {
    pub fn passed(&self) -> bool {
        self.algorithms.iter().all(AlgorithmCheck::passed)
    }
}

fn flip_first(values: &mut [Scalar]) {
    if let Some(x) = values.iter_mut().find(|x| !x.is_zero()) {
        *x = -x.clone();
    }
}

/// Runs every algorithm on random inputs drawn from `seed`.
pub fn check_spec(spec: &ContractionSpec, seed: u64) -> Result<SpecCheck> {
    check_spec_with_fault(spec, seed, None)
}

/// Like [`check_spec`], but negates one output entry of `fault` before it is
/// compared with the reference. Used to confirm that failures are reported.
pub fn check_spec_with_fault(
    spec: &ContractionSpec,
    seed: u64,
    fault: Option<AlgorithmId>,
) -> Result<SpecCheck> {
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let mut algorithms = Vec::with_capacity(3);

    let a = DenseTensor::random(n, s + v, seed);
    let b = DenseTensor::random(n, v + t, seed.wrapping_add(1));
    let reference = contract_oracle(&a, &b, spec, false)?;
    let run = contract_nonsym_counted(&a, &b, spec)?;
    let mut out = run.value.values().to_vec();
    if fault == Some(AlgorithmId::Nonsym) {
        flip_first(&mut out);
    }
    let enc = build_encoding(AlgorithmId::Nonsym, spec)?;
    algorithms.push(AlgorithmCheck {
        algorithm: AlgorithmId::Nonsym,
        matches_reference: out == reference.values(),
        mults: run.mults,
        expected: count_multiplications(AlgorithmId::Nonsym, spec)?,
        encoding_matches: enc.apply(a.values(), b.values())? == run.value.values(),
        encoding_irreducible: enc.is_irreducible(),
    });

    let a = random_symmetric(n, s + v, seed);
    let b = random_symmetric(n, v + t, seed.wrapping_add(1));
    let reference = contract_oracle(&a.unpack(), &b.unpack(), spec, true)?.pack()?;

    let run = contract_direct_counted(&a, &b, spec)?;
    let mut out = run.value.values().to_vec();
    if fault == Some(AlgorithmId::Direct) {
        flip_first(&mut out);
    }
    let enc = build_encoding(AlgorithmId::Direct, spec)?;
    algorithms.push(AlgorithmCheck {
        algorithm: AlgorithmId::Direct,
        matches_reference: out == reference.values(),
        mults: run.mults,
        expected: count_multiplications(AlgorithmId::Direct, spec)?,
        encoding_matches: enc.apply(a.values(), b.values())? == run.value.values(),
        encoding_irreducible: enc.is_irreducible(),
    });

    let trace = contract_sympres_traced(&a, &b, spec)?;
    let mut out = trace.result.values().to_vec();
    if fault == Some(AlgorithmId::SymPres) {
        flip_first(&mut out);
    }
    // the canonical encoding is the main stage; the full one adds corrections
    let enc = build_encoding(AlgorithmId::SymPres, spec)?;
    let full = build_full_encoding(AlgorithmId::SymPres, spec)?;
    let encoding_matches = enc.apply(a.values(), b.values())? == trace.z_stage.values()
        && full.apply(a.values(), b.values())? == trace.result.values();
    algorithms.push(AlgorithmCheck {
        algorithm: AlgorithmId::SymPres,
        matches_reference: out == reference.values(),
        mults: trace.mults,
        expected: count_multiplications(AlgorithmId::SymPres, spec)?,
        encoding_matches,
        encoding_irreducible: enc.is_irreducible(),
    });

    Ok(SpecCheck {
        spec: *spec,
        seed,
        algorithms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_specs_pass() {
        for (s, t, v) in [(1, 1, 1), (2, 1, 0), (1, 0, 1), (0, 0, 0)] {
            let spec = ContractionSpec::new(3, s, t, v).unwrap();
            let check = check_spec(&spec, 4).unwrap();
            assert!(check.passed(), "{check:?}");
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let spec = ContractionSpec::new(3, 1, 1, 1).unwrap();
        let check = check_spec_with_fault(&spec, 4, Some(AlgorithmId::Direct)).unwrap();
        assert!(!check.passed());
        assert!(!check.algorithms[1].matches_reference);
        assert!(check.algorithms[2].matches_reference);
    }
}
