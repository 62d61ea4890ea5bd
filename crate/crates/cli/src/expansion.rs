//! `verify-expansion`: expansion bounds on column subsets of each
//! algorithm's encoding, and optionally on execution DAGs.

use std::fmt::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tclb::bilinear::build_encoding;
use tclb::combinatorics::ContractionSpec;
use tclb::contraction::AlgorithmId;
use tclb::expansion::{
    build_dag_naive, check_dag_expansion, matching_bounds, verify_expansion, BoundFamily,
    ExpansionBound, VerificationMode, VerificationReport, EXHAUSTIVE_LIMIT,
};

use crate::contraction::sweep_specs;
use crate::error::CliError;
use crate::output;
use crate::settings::{Format, Settings};

const DAG_SAMPLES: usize = 200;

const FAMILIES: [BoundFamily; 4] = [
    BoundFamily::Mm,
    BoundFamily::Direct,
    BoundFamily::DirectMv,
    BoundFamily::SymPres,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Target {
    /// Column subsets of the encoding.
    Subsets,
    /// Vertex subsets of the execution DAG.
    Dag,
}

#[derive(Serialize)]
struct CellReport {
    algorithm: AlgorithmId,
    spec: ContractionSpec,
    family: BoundFamily,
    target: Target,
    rank_cols: usize,
    report: VerificationReport,
}

impl CellReport {
    fn file_name(&self) -> String {
        let s = &self.spec;
        let suffix = if self.target == Target::Dag {
            "-dag"
        } else {
            ""
        };
        format!(
            "{}-n{}-s{}t{}v{}-{}{suffix}.json",
            self.algorithm, s.n, s.s, s.t, s.v, self.family
        )
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    passed: bool,
    cells: &'a [CellReport],
}

fn parse_families(settings: &Settings) -> Result<Vec<BoundFamily>, CliError> {
    let names: Vec<String> = settings.list("bound", &FAMILIES.map(|f| f.name().to_string()))?;
    names
        .iter()
        .map(|name| {
            FAMILIES
                .into_iter()
                .find(|f| f.name() == name)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown bound family {name:?}; expected mm, direct, direct-mv or sympres"
                    ))
                })
        })
        .collect()
}

fn parse_algorithms(settings: &Settings) -> Result<Vec<AlgorithmId>, CliError> {
    let names: Vec<String> = settings.list(
        "alg",
        &["nonsym".to_string(), "direct".into(), "sympres".into()],
    )?;
    names
        .iter()
        .map(|name| {
            AlgorithmId::parse(name)
                .ok_or_else(|| CliError::Usage(format!("unknown algorithm {name:?}")))
        })
        .collect()
}

fn check_cell(
    algorithm: AlgorithmId,
    spec: ContractionSpec,
    bounds: &[ExpansionBound],
    dag: bool,
    trials: usize,
    seed: u64,
) -> tclb::Result<Vec<CellReport>> {
    let enc = build_encoding(algorithm, &spec)?;
    let rank_cols = enc.rank_cols();
    let mode = if rank_cols <= EXHAUSTIVE_LIMIT {
        VerificationMode::Exhaustive
    } else {
        VerificationMode::Sampled
    };
    let graph = dag.then(|| build_dag_naive(&enc));
    let mut out = Vec::new();
    for bound in bounds {
        out.push(CellReport {
            algorithm,
            spec,
            family: bound.family(),
            target: Target::Subsets,
            rank_cols,
            report: verify_expansion(&enc, bound, mode, trials, seed)?,
        });
        if let Some(graph) = &graph {
            out.push(CellReport {
                algorithm,
                spec,
                family: bound.family(),
                target: Target::Dag,
                rank_cols,
                report: check_dag_expansion(graph, bound, DAG_SAMPLES, seed)?,
            });
        }
    }
    Ok(out)
}

fn text(cells: &[CellReport]) -> String {
    let mut out = String::new();
    for c in cells {
        let status = if c.report.passed() { "ok  " } else { "FAIL" };
        let mode = match (c.target, c.report.mode) {
            (Target::Dag, _) => "dag",
            (_, VerificationMode::Exhaustive) => "exhaustive",
            (_, VerificationMode::Sampled) => "sampled",
        };
        writeln!(
            out,
            "{status} {:<8} {} bound={:<9} {mode:<10} subsets={} violations={}",
            c.algorithm.name(),
            c.spec,
            c.family.name(),
            c.report.subsets_checked,
            c.report.violations.len()
        )
        .unwrap();
    }
    out
}

fn csv(cells: &[CellReport]) -> String {
    let header = [
        "algorithm",
        "n",
        "s",
        "t",
        "v",
        "bound",
        "target",
        "mode",
        "rank_cols",
        "subsets_checked",
        "violations",
    ];
    let rows = cells.iter().map(|c| {
        vec![
            c.algorithm.name().to_string(),
            c.spec.n.to_string(),
            c.spec.s.to_string(),
            c.spec.t.to_string(),
            c.spec.v.to_string(),
            c.family.name().to_string(),
            format!("{:?}", c.target).to_lowercase(),
            format!("{:?}", c.report.mode).to_lowercase(),
            c.rank_cols.to_string(),
            c.report.subsets_checked.to_string(),
            c.report.violations.len().to_string(),
        ]
    });
    output::csv(&header, rows)
}

pub fn run(settings: &Settings) -> Result<bool, CliError> {
    let families = parse_families(settings)?;
    let algorithms = parse_algorithms(settings)?;
    let specs = sweep_specs(settings, &[2, 3], 3)?;
    let trials: usize = settings.parsed("trials", 2000)?;
    let seed: u64 = settings.parsed("seed", 0)?;
    let dag = settings.flag("dag")?;
    let format = settings.format(Format::Text)?;

    let mut cells = Vec::new();
    for &spec in &specs {
        for &alg in &algorithms {
            let bounds: Vec<ExpansionBound> = matching_bounds(alg, &spec)
                .into_iter()
                .filter(|b| families.contains(&b.family()))
                .collect();
            if !bounds.is_empty() {
                cells.push((alg, spec, bounds));
            }
        }
    }
    if cells.is_empty() {
        return Err(CliError::Usage(
            "no (algorithm, shape, bound) combination selected".into(),
        ));
    }
    let reports: Vec<CellReport> = cells
        .into_par_iter()
        .map(|(alg, spec, bounds)| check_cell(alg, spec, &bounds, dag, trials, seed))
        .collect::<tclb::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let passed = reports.iter().all(|c| c.report.passed());

    for c in reports.iter().filter(|c| !c.report.passed()) {
        eprintln!(
            "violation: {} {} bound {} ({} subsets)",
            c.algorithm,
            c.spec,
            c.family,
            c.report.violations.len()
        );
    }
    let rendered = match format {
        Format::Json => output::json(&Summary {
            passed,
            cells: &reports,
        }),
        Format::Csv => csv(&reports),
        Format::Text => text(&reports),
    };
    match settings.get("out") {
        // a directory: one report per cell plus the summary
        Some(dir) => {
            let dir = Path::new(dir);
            for c in &reports {
                output::write_file(&dir.join(c.file_name()), &output::json(c))?;
            }
            let ext = match format {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Text => "txt",
            };
            output::write_file(&dir.join(format!("summary.{ext}")), &rendered)?;
        }
        None => output::emit(None, &rendered)?,
    }
    Ok(passed)
}
