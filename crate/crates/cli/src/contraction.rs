//! `verify-contraction`: every algorithm against the reference on a sweep of
//! shapes, sizes and seeds.

use std::fmt::Write;

use rayon::prelude::*;
use serde::Serialize;
use tclb::combinatorics::ContractionSpec;
use tclb::contraction::{check_spec_with_fault, AlgorithmCheck, AlgorithmId, SpecCheck};

use crate::error::CliError;
use crate::output;
use crate::settings::{Format, Settings};

#[derive(Serialize)]
struct Report {
    passed: bool,
    checks: Vec<SpecCheck>,
}

/// Shapes with `s + t + v <= max_omega` drawn from the three lists, ordered
/// by `s + t + v` and then lexicographically, crossed with the sizes in `ns`.
pub fn sweep_specs(
    settings: &Settings,
    ns_default: &[usize],
    omega_default: usize,
) -> Result<Vec<ContractionSpec>, CliError> {
    let max_omega: usize = settings.parsed("max-omega", omega_default)?;
    let all: Vec<usize> = (0..=max_omega).collect();
    let ss = settings.list("s", &all)?;
    let ts = settings.list("t", &all)?;
    let vs = settings.list("v", &all)?;
    let ns = settings.list("n", ns_default)?;
    if let Some(0) = ns.iter().min() {
        return Err(CliError::Usage("--n: sizes must be positive".into()));
    }
    let mut shapes: Vec<(usize, usize, usize)> = Vec::new();
    for &s in &ss {
        for &t in &ts {
            for &v in &vs {
                if s + t + v <= max_omega && !shapes.contains(&(s, t, v)) {
                    shapes.push((s, t, v));
                }
            }
        }
    }
    shapes.sort_by_key(|&(s, t, v)| (s + t + v, s, t, v));
    let mut specs = Vec::new();
    for (s, t, v) in shapes {
        for &n in &ns {
            specs.push(ContractionSpec::new(n, s, t, v)?);
        }
    }
    if specs.is_empty() {
        return Err(CliError::Usage(format!(
            "no shapes with s + t + v <= {max_omega} selected"
        )));
    }
    Ok(specs)
}

fn problems(c: &AlgorithmCheck) -> Vec<String> {
    let mut out = Vec::new();
    if !c.matches_reference {
        out.push("output differs from reference".to_string());
    }
    if c.mults != c.expected {
        out.push(format!(
            "{}+{} products, expected {}+{}",
            c.mults.high_order, c.mults.correction, c.expected.high_order, c.expected.correction
        ));
    }
    if !c.encoding_matches {
        out.push("encoding output differs".to_string());
    }
    if !c.encoding_irreducible {
        out.push("encoding is not full rank".to_string());
    }
    out
}

fn text(checks: &[SpecCheck]) -> String {
    let mut out = String::new();
    for check in checks {
        let status = if check.passed() { "ok  " } else { "FAIL" };
        let counts: Vec<String> = check
            .algorithms
            .iter()
            .map(|a| format!("{}={}", a.algorithm, a.mults.total()))
            .collect();
        writeln!(
            out,
            "{status} {} seed={} products {}",
            check.spec,
            check.seed,
            counts.join(" ")
        )
        .unwrap();
        for a in &check.algorithms {
            for p in problems(a) {
                writeln!(out, "     {}: {p}", a.algorithm).unwrap();
            }
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    writeln!(out, "{} checks, {failed} failed", checks.len()).unwrap();
    out
}

fn csv(checks: &[SpecCheck]) -> String {
    let header = [
        "n",
        "s",
        "t",
        "v",
        "seed",
        "algorithm",
        "matches_reference",
        "high_order",
        "correction",
        "expected_high_order",
        "expected_correction",
        "encoding_matches",
        "encoding_irreducible",
        "passed",
    ];
    let rows = checks.iter().flat_map(|c| {
        c.algorithms.iter().map(move |a| {
            vec![
                c.spec.n.to_string(),
                c.spec.s.to_string(),
                c.spec.t.to_string(),
                c.spec.v.to_string(),
                c.seed.to_string(),
                a.algorithm.to_string(),
                a.matches_reference.to_string(),
                a.mults.high_order.to_string(),
                a.mults.correction.to_string(),
                a.expected.high_order.to_string(),
                a.expected.correction.to_string(),
                a.encoding_matches.to_string(),
                a.encoding_irreducible.to_string(),
                a.passed().to_string(),
            ]
        })
    });
    output::csv(&header, rows)
}

pub fn run(settings: &Settings) -> Result<bool, CliError> {
    let specs = sweep_specs(settings, &[2, 3, 4], 4)?;
    let trials: u64 = settings.parsed("trials", 5)?;
    let seed: u64 = settings.parsed("seed", 0)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let fault = settings
        .get("inject-fault")
        .map(|name| {
            AlgorithmId::parse(name)
                .ok_or_else(|| CliError::Usage(format!("unknown algorithm {name:?}")))
        })
        .transpose()?;
    let format = settings.format(Format::Text)?;

    let cells: Vec<(ContractionSpec, u64)> = specs
        .iter()
        .flat_map(|&spec| (0..trials).map(move |i| (spec, seed + i)))
        .collect();
    let checks = cells
        .into_par_iter()
        .map(|(spec, seed)| check_spec_with_fault(&spec, seed, fault))
        .collect::<tclb::Result<Vec<_>>>()?;
    let passed = checks.iter().all(SpecCheck::passed);

    for c in checks.iter().filter(|c| !c.passed()) {
        let names: Vec<&str> = c
            .algorithms
            .iter()
            .filter(|a| !a.passed())
            .map(|a| a.algorithm.name())
            .collect();
        eprintln!(
            "mismatch: {} seed={} in {}",
            c.spec,
            c.seed,
            names.join(", ")
        );
    }
    let rendered = match format {
        Format::Json => output::json(&Report { passed, checks }),
        Format::Csv => csv(&checks),
        Format::Text => text(&checks),
    };
    output::emit(settings.get("out"), &rendered)?;
    Ok(passed)
}
