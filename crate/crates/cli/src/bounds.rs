//! `bounds table`: asymptotic summary rows, optionally crossed with numeric
//! bounds on an `(n, H, p)` grid.

use std::fmt::Write;

use serde::Serialize;
use tclb::bounds::{
    asymptotic_table, q_direct, q_nonsym, q_sympres, w_direct, w_nonsym, w_sympres,
    AsymptoticRecord, BoundValue, CSV_HEADER, SUMMARY_TABLE_SHAPES,
};
use tclb::combinatorics::{ContractionClass, ContractionSpec};

use crate::error::CliError;
use crate::output;
use crate::settings::{Format, Settings};

const NUMERIC_HEADER: [&str; 15] = [
    "n",
    "H",
    "p",
    "q_nonsym",
    "q_nonsym_approx",
    "q_direct",
    "q_direct_approx",
    "q_sympres",
    "q_sympres_approx",
    "w_nonsym",
    "w_nonsym_approx",
    "w_direct",
    "w_direct_approx",
    "w_sympres",
    "w_sympres_approx",
];

#[derive(Serialize)]
struct Report {
    records: Vec<AsymptoticRecord>,
    /// The same cells as the csv rendering, keyed by column name.
    rows: Vec<serde_json::Map<String, serde_json::Value>>,
}

fn shapes(settings: &Settings) -> Result<Vec<(usize, usize, usize)>, CliError> {
    let listed = settings.has("s") || settings.has("t") || settings.has("v");
    match settings.get("preset") {
        Some("paper-table") => Ok(SUMMARY_TABLE_SHAPES.to_vec()),
        Some(other) => Err(CliError::Usage(format!(
            "unknown preset {other:?}; the only preset is paper-table"
        ))),
        None if !listed => Ok(SUMMARY_TABLE_SHAPES.to_vec()),
        None => {
            let ss = settings.list("s", &[1])?;
            let ts = settings.list("t", &[1])?;
            let vs = settings.list("v", &[1])?;
            let mut out = Vec::new();
            for &s in &ss {
                for &t in &ts {
                    for &v in &vs {
                        out.push((s, t, v));
                    }
                }
            }
            Ok(out)
        }
    }
}

fn cell(bound: Option<tclb::Result<BoundValue>>) -> Result<[String; 2], CliError> {
    Ok(match bound {
        None => [String::new(), String::new()],
        Some(b) => {
            let b = b?;
            [b.value.to_string(), format!("{:.6}", b.approx())]
        }
    })
}

fn numeric_cells(
    spec: &ContractionSpec,
    cache: Option<u64>,
    p: Option<u64>,
) -> Result<Vec<String>, CliError> {
    let mut out = vec![
        spec.n.to_string(),
        cache.map(|h| h.to_string()).unwrap_or_default(),
        p.map(|p| p.to_string()).unwrap_or_default(),
    ];
    out.extend(cell(cache.map(|h| q_nonsym(spec, h)))?);
    out.extend(cell(cache.map(|h| q_direct(spec, h)))?);
    out.extend(cell(cache.map(|h| q_sympres(spec, h)))?);
    out.extend(cell(p.map(|p| w_nonsym(spec, p)))?);
    out.extend(cell(p.map(|p| w_direct(spec, p)))?);
    let sympres = p.filter(|_| spec.class() != ContractionClass::Degenerate);
    out.extend(cell(sympres.map(|p| w_sympres(spec, p)))?);
    Ok(out)
}

fn record_cells(r: &AsymptoticRecord) -> Vec<String> {
    vec![
        r.s.to_string(),
        r.t.to_string(),
        r.v.to_string(),
        r.f_nonsym.to_string(),
        r.f_direct.to_string(),
        r.f_sympres.to_string(),
        r.q_nonsym_direct.to_string(),
        r.q_sympres.to_string(),
        r.w_nonsym.to_string(),
        r.w_direct.to_string(),
        r.w_sympres
            .map(|m| m.to_string())
            .unwrap_or_else(|| "-".into()),
    ]
}

fn text(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in std::iter::once(header.iter().map(|h| h.to_string()).collect::<Vec<_>>())
        .chain(rows.iter().cloned())
    {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
    }
    out
}

pub fn run(settings: &Settings) -> Result<bool, CliError> {
    let format = settings.format(Format::Text)?;
    let records = asymptotic_table(&shapes(settings)?)?;

    let numeric = settings.has("n");
    let ns: Vec<usize> = settings.list("n", &[])?;
    if ns.contains(&0) {
        return Err(CliError::Usage("--n: sizes must be positive".into()));
    }
    let caches: Vec<Option<u64>> = settings
        .list::<u64>("H", &[])?
        .into_iter()
        .map(Some)
        .collect();
    let procs: Vec<Option<u64>> = settings
        .list::<u64>("p", &[])?
        .into_iter()
        .map(Some)
        .collect();
    let caches = if caches.is_empty() {
        vec![None]
    } else {
        caches
    };
    let procs = if procs.is_empty() { vec![None] } else { procs };

    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    let mut rows = Vec::new();
    if numeric {
        header.extend(NUMERIC_HEADER);
        for r in &records {
            for &n in &ns {
                let spec = ContractionSpec::new(n, r.s, r.t, r.v)?;
                for &h in &caches {
                    for &p in &procs {
                        let mut row = record_cells(r);
                        row.extend(numeric_cells(&spec, h, p)?);
                        rows.push(row);
                    }
                }
            }
        }
    } else {
        rows = records.iter().map(record_cells).collect();
    }

    let rendered = match format {
        Format::Csv => output::csv(&header, &rows),
        Format::Text => text(&header, &rows),
        Format::Json => {
            let rows = rows
                .iter()
                .map(|row| {
                    header
                        .iter()
                        .zip(row)
                        .map(|(h, c)| (h.to_string(), serde_json::Value::String(c.clone())))
                        .collect()
                })
                .collect();
            output::json(&Report { records, rows })
        }
    };
    output::emit(settings.get("out"), &rendered)?;
    Ok(true)
}
