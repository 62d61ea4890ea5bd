//! `simulate cache` and `simulate parallel`: reference schedules run through
//! the simulators with the matching lower bound attached.

use std::fmt::Write;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tclb::bounds::{q_direct, q_mm, q_sympres, w_mm};
use tclb::combinatorics::{count_multisets_u64, ContractionSpec};
use tclb::sim::{
    fit_block, grid_for, mm_block_for_cache, schedule_blocked_direct, schedule_blocked_mm,
    schedule_mm_grid, schedule_sympres_seq, simulate_cache, simulate_parallel, CacheSchedule,
    GridShape, ParSchedule, SimReport,
};

use crate::contraction::sweep_specs;
use crate::error::CliError;
use crate::output;
use crate::settings::{Format, Settings};

#[derive(Debug, Clone, Serialize)]
struct Cell {
    alg: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<ContractionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cache: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    block: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    procs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<[usize; 3]>,
    report: SimReport,
}

impl Cell {
    fn label(&self) -> String {
        let mut s = self.alg.clone();
        if let Some([m, n, k]) = self.dims {
            write!(s, "-{m}x{n}x{k}").unwrap();
        }
        if let Some(spec) = self.spec {
            write!(s, "-n{}-s{}t{}v{}", spec.n, spec.s, spec.t, spec.v).unwrap();
        }
        if let Some(h) = self.cache {
            write!(s, "-H{h}").unwrap();
        }
        if let Some(p) = self.procs {
            write!(s, "-p{p}").unwrap();
        }
        s
    }
}

#[derive(Serialize)]
struct Report<'a> {
    passed: bool,
    runs: &'a [Cell],
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|x| x.to_string()).unwrap_or_default()
}

fn csv(cells: &[Cell]) -> String {
    let header = [
        "alg",
        "m",
        "n",
        "k",
        "s",
        "t",
        "v",
        "H",
        "block",
        "p",
        "measured_cost",
        "mult_count",
        "add_count",
        "loads",
        "stores",
        "peak_residency",
        "bound",
        "bound_approx",
        "bound_ratio",
        "bound_respected",
        "partial_sums_reused",
    ];
    let rows = cells.iter().map(|c| {
        let r = &c.report;
        let dim = |i: usize| opt(c.dims.map(|d| d[i]));
        vec![
            c.alg.clone(),
            dim(0),
            c.dims
                .map(|d| d[1].to_string())
                .or_else(|| c.spec.map(|s| s.n.to_string()))
                .unwrap_or_default(),
            dim(2),
            opt(c.spec.map(|s| s.s)),
            opt(c.spec.map(|s| s.t)),
            opt(c.spec.map(|s| s.v)),
            opt(c.cache),
            opt(c.block),
            opt(c.procs),
            r.measured_cost.to_string(),
            r.mult_count.to_string(),
            r.add_count.to_string(),
            r.loads.to_string(),
            r.stores.to_string(),
            r.peak_residency.to_string(),
            opt(r.bound.as_ref().map(|b| b.value.to_string())),
            opt(r.bound.as_ref().map(|b| format!("{:.6}", b.approx()))),
            opt(r.bound_ratio),
            opt(r.bound_respected),
            r.partial_sums_reused.to_string(),
        ]
    });
    output::csv(&header, rows)
}

fn text(cells: &[Cell]) -> String {
    let mut out = String::new();
    for c in cells {
        let r = &c.report;
        let status = match r.bound_respected {
            Some(false) => "BELOW",
            _ => "ok   ",
        };
        let bound = r
            .bound
            .as_ref()
            .map(|b| format!("{:.3}", b.approx()))
            .unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{status} {} cost={} bound={bound} ratio={} mults={} adds={} peak={}",
            c.label(),
            r.measured_cost,
            opt(r.bound_ratio),
            r.mult_count,
            r.add_count,
            r.peak_residency
        )
        .unwrap();
        if !r.traffic.is_empty() {
            writeln!(out, "      proc      sent  received     total").unwrap();
            for (q, t) in r.traffic.iter().enumerate() {
                writeln!(
                    out,
                    "      {q:>4}  {:>8}  {:>8}  {:>8}",
                    t.sent,
                    t.received,
                    t.total()
                )
                .unwrap();
            }
        }
    }
    out
}

fn finish(
    settings: &Settings,
    cells: Vec<Cell>,
    schedules: Vec<(String, String)>,
) -> Result<bool, CliError> {
    let format = settings.format(Format::Text)?;
    let passed = cells
        .iter()
        .all(|c| c.report.bound_respected != Some(false));
    for c in cells
        .iter()
        .filter(|c| c.report.bound_respected == Some(false))
    {
        eprintln!("below bound: {} cost {}", c.label(), c.report.measured_cost);
    }
    if let Some(dir) = settings.get("schedule-out") {
        for (name, text) in &schedules {
            output::write_file(&Path::new(dir).join(format!("{name}.sched")), text)?;
        }
    }
    let rendered = match format {
        Format::Json => output::json(&Report {
            passed,
            runs: &cells,
        }),
        Format::Csv => csv(&cells),
        Format::Text => text(&cells),
    };
    output::emit(settings.get("out"), &rendered)?;
    Ok(passed)
}

fn read_schedule(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_string(),
        source,
    })
}

fn positive(name: &str, values: &[usize]) -> Result<(), CliError> {
    if values.contains(&0) {
        return Err(CliError::Usage(format!(
            "--{name}: values must be positive"
        )));
    }
    Ok(())
}

struct CacheJob {
    alg: &'static str,
    dims: Option<[usize; 3]>,
    spec: Option<ContractionSpec>,
    cache: u64,
}

fn cache_job(
    job: &CacheJob,
    fixed_block: Option<usize>,
) -> Result<(Cell, CacheSchedule), CliError> {
    let h = job.cache;
    let (block, schedule, bound) = match (job.alg, job.dims, job.spec) {
        ("mm", Some([m, n, k]), _) => {
            let block = fixed_block.unwrap_or_else(|| mm_block_for_cache(h));
            let bound = q_mm(m as u64, n as u64, k as u64, h)?;
            (block, schedule_blocked_mm(m, n, k, block)?, bound)
        }
        ("direct", _, Some(spec)) => {
            let largest = [spec.s, spec.t, spec.v]
                .iter()
                .map(|&d| count_multisets_u64(spec.n as u64, d as u64).unwrap_or(u64::MAX) as usize)
                .max()
                .unwrap_or(1);
            let (block, schedule) = match fixed_block {
                Some(b) => (b, schedule_blocked_direct(&spec, b)?),
                None => fit_block(h, largest, |b| schedule_blocked_direct(&spec, b))?,
            };
            (block, schedule, q_direct(&spec, h)?)
        }
        ("sympres", _, Some(spec)) => {
            let (block, schedule) = match fixed_block {
                Some(b) => (b, schedule_sympres_seq(&spec, b)?),
                None => fit_block(h, spec.n, |b| schedule_sympres_seq(&spec, b))?,
            };
            (block, schedule, q_sympres(&spec, h)?)
        }
        _ => unreachable!("jobs are built per algorithm"),
    };
    let report = simulate_cache(&schedule, h)
        .map_err(tclb::Error::from)?
        .with_bound(bound);
    Ok((
        Cell {
            alg: job.alg.to_string(),
            dims: job.dims,
            spec: job.spec,
            cache: Some(h),
            block: Some(block),
            procs: None,
            grid: None,
            report,
        },
        schedule,
    ))
}

pub fn run_cache(settings: &Settings) -> Result<bool, CliError> {
    let caches: Vec<u64> = settings.list("H", &[27])?;
    if caches.contains(&0) {
        return Err(CliError::Usage("--H: cache sizes must be positive".into()));
    }
    if let Some(path) = settings.get("schedule") {
        let schedule = CacheSchedule::parse(&read_schedule(path)?)?;
        let cells = caches
            .iter()
            .map(|&h| {
                let report = simulate_cache(&schedule, h).map_err(tclb::Error::from)?;
                Ok(Cell {
                    alg: "file".into(),
                    dims: None,
                    spec: None,
                    cache: Some(h),
                    block: None,
                    procs: None,
                    grid: None,
                    report,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        return finish(settings, cells, Vec::new());
    }

    let fixed_block: Option<usize> = settings.optional("block")?;
    if fixed_block == Some(0) {
        return Err(CliError::Usage("--block must be positive".into()));
    }
    let alg = settings.get("alg").unwrap_or("mm");
    let mut jobs = Vec::new();
    match alg {
        "mm" => {
            let ms: Vec<usize> = settings.list("m", &[8])?;
            let ns: Vec<usize> = settings.list("n", &[8])?;
            let ks: Vec<usize> = settings.list("k", &[8])?;
            positive("m", &ms)?;
            positive("n", &ns)?;
            positive("k", &ks)?;
            for &m in &ms {
                for &n in &ns {
                    for &k in &ks {
                        for &cache in &caches {
                            jobs.push(CacheJob {
                                alg: "mm",
                                dims: Some([m, n, k]),
                                spec: None,
                                cache,
                            });
                        }
                    }
                }
            }
        }
        "direct" | "sympres" => {
            let alg = if alg == "direct" { "direct" } else { "sympres" };
            for spec in sweep_specs(settings, &[4], 3)? {
                for &cache in &caches {
                    jobs.push(CacheJob {
                        alg,
                        dims: None,
                        spec: Some(spec),
                        cache,
                    });
                }
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "--alg: expected mm, direct or sympres, got {other:?}"
            )))
        }
    }
    let results = jobs
        .par_iter()
        .map(|job| cache_job(job, fixed_block))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (cells, schedules): (Vec<Cell>, Vec<CacheSchedule>) = results.into_iter().unzip();
    let named = cells
        .iter()
        .map(Cell::label)
        .zip(schedules.iter().map(CacheSchedule::to_text))
        .collect();
    finish(settings, cells, named)
}

pub fn run_parallel(settings: &Settings) -> Result<bool, CliError> {
    let memory: Option<u64> = settings.optional("memory")?;
    if let Some(path) = settings.get("schedule") {
        let schedule = ParSchedule::parse(&read_schedule(path)?)?;
        let report = simulate_parallel(&schedule, memory).map_err(tclb::Error::from)?;
        let cell = Cell {
            alg: "file".into(),
            dims: None,
            spec: None,
            cache: None,
            block: None,
            procs: Some(schedule.procs),
            grid: None,
            report,
        };
        return finish(settings, vec![cell], Vec::new());
    }

    match settings.get("alg").unwrap_or("mm") {
        "mm" => {}
        other => {
            return Err(CliError::Usage(format!(
                "--alg: only mm has a parallel schedule, got {other:?}"
            )))
        }
    }
    let grid_name = settings.get("grid").unwrap_or("3d");
    let shape = GridShape::parse(grid_name).ok_or_else(|| {
        CliError::Usage(format!("--grid: expected 1d, 2d or 3d, got {grid_name:?}"))
    })?;
    let ms: Vec<usize> = settings.list("m", &[8])?;
    let ns: Vec<usize> = settings.list("n", &[8])?;
    let ks: Vec<usize> = settings.list("k", &[8])?;
    let ps: Vec<usize> = settings.list("p", &[8])?;
    positive("m", &ms)?;
    positive("n", &ns)?;
    positive("k", &ks)?;
    positive("p", &ps)?;

    let mut jobs = Vec::new();
    for &m in &ms {
        for &n in &ns {
            for &k in &ks {
                for &p in &ps {
                    // divisibility problems surface here, before anything runs
                    jobs.push(([m, n, k], p, grid_for(shape, m, n, k, p)?));
                }
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(
            |&([m, n, k], p, grid)| -> Result<(Cell, ParSchedule), CliError> {
                let schedule = schedule_mm_grid(m, n, k, grid)?;
                let report = simulate_parallel(&schedule, memory)
                    .map_err(tclb::Error::from)?
                    .with_bound(w_mm(m as u64, n as u64, k as u64, p as u64)?);
                let cell = Cell {
                    alg: "mm".into(),
                    dims: Some([m, n, k]),
                    spec: None,
                    cache: None,
                    block: None,
                    procs: Some(p),
                    grid: Some(grid),
                    report,
                };
                Ok((cell, schedule))
            },
        )
        .collect::<Result<Vec<_>, CliError>>()?;
    let (cells, schedules): (Vec<Cell>, Vec<ParSchedule>) = results.into_iter().unzip();
    let named = cells
        .iter()
        .map(Cell::label)
        .zip(schedules.iter().map(ParSchedule::to_text))
        .collect();
    finish(settings, cells, named)
}
