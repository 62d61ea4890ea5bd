#![allow(dead_code)]

use tclb::combinatorics::ContractionSpec;

/// All `(s, t, v)` with `s + t + v <= max_omega`.
pub fn shapes(max_omega: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for s in 0..=max_omega {
        for t in 0..=max_omega - s {
            for v in 0..=max_omega - s - t {
                out.push((s, t, v));
            }
        }
    }
    out
}

pub fn specs(max_omega: usize, ns: std::ops::RangeInclusive<usize>) -> Vec<ContractionSpec> {
    shapes(max_omega)
        .into_iter()
        .flat_map(|(s, t, v)| {
            ns.clone()
                .map(move |n| ContractionSpec::new(n, s, t, v).unwrap())
        })
        .collect()
}
