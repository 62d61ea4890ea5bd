use rayon::prelude::*;
use tclb::bounds::{q_direct, q_mm, q_sympres, w_mm};
use tclb::combinatorics::{count_multisets_u64, ContractionSpec};
use tclb::contraction::{count_multiplications, AlgorithmId};
use tclb::sim::{
    fit_block, grid_for, mm_block_for_cache, peak_residency, schedule_blocked_direct,
    schedule_blocked_mm, schedule_mm_grid, schedule_sympres_seq, simulate_cache, simulate_parallel,
    CacheEvent, CacheSchedule, GridShape, OpKind, ParSchedule, ScheduleError,
};
use tclb::Error;

const DIMS: [usize; 3] = [8, 12, 16];
const CACHES: [u64; 3] = [12, 27, 48];

fn mm_grid() -> Vec<(usize, usize, usize, u64)> {
    let mut out = Vec::new();
    for m in DIMS {
        for n in DIMS {
            for k in DIMS {
                for h in CACHES {
                    out.push((m, n, k, h));
                }
            }
        }
    }
    out
}

#[test]
fn blocked_mm_respects_bound_and_reuses_blocks() {
    mm_grid().par_iter().for_each(|&(m, n, k, h)| {
        let schedule = schedule_blocked_mm(m, n, k, mm_block_for_cache(h)).unwrap();
        let report = simulate_cache(&schedule, h)
            .unwrap()
            .with_bound(q_mm(m as u64, n as u64, k as u64, h).unwrap());
        assert_eq!(report.mult_count, (m * n * k) as u64);
        assert_eq!(report.bound_respected, Some(true), "{m}x{n}x{k} H={h}");
        let ratio = report.bound_ratio.unwrap();
        assert!(
            (1.0..=8.0).contains(&ratio),
            "{m}x{n}x{k} H={h}: ratio {ratio}"
        );
        let reuse = report.measured_cost as f64 * (h as f64).sqrt() / (2 * m * n * k) as f64;
        assert!(
            (1.0..=8.0).contains(&reuse),
            "{m}x{n}x{k} H={h}: reuse {reuse}"
        );
    });
}

#[test]
fn parallel_mm_respects_bound() {
    let mut cases = Vec::new();
    for m in DIMS {
        for n in DIMS {
            for k in DIMS {
                for p in [2, 4, 8] {
                    for shape in [GridShape::OneD, GridShape::TwoD, GridShape::ThreeD] {
                        cases.push((m, n, k, p, shape));
                    }
                }
            }
        }
    }
    let runs: usize = cases
        .par_iter()
        .map(|&(m, n, k, p, shape)| {
            let grid = match grid_for(shape, m, n, k, p) {
                Ok(g) => g,
                Err(Error::Schedule(ScheduleError::Indivisible { .. })) => return 0,
                Err(e) => panic!("{e}"),
            };
            let schedule = schedule_mm_grid(m, n, k, grid).unwrap();
            let report = simulate_parallel(&schedule, None)
                .unwrap()
                .with_bound(w_mm(m as u64, n as u64, k as u64, p as u64).unwrap());
            assert_eq!(report.mult_count, (m * n * k) as u64);
            assert_eq!(
                report.bound_respected,
                Some(true),
                "{m}x{n}x{k} p={p} {shape:?}"
            );
            if shape == GridShape::ThreeD {
                let ratio = report.bound_ratio.unwrap();
                assert!(ratio <= 8.0, "{m}x{n}x{k} p={p}: ratio {ratio}");
            }
            1
        })
        .sum();
    assert!(runs > 200);
}

#[test]
fn divisibility_is_reported() {
    assert!(matches!(
        grid_for(GridShape::ThreeD, 8, 8, 8, 7),
        Err(Error::Schedule(ScheduleError::Indivisible {
            size: 8,
            parts: 7
        }))
    ));
}

fn first(schedule: &CacheSchedule, pred: impl Fn(&CacheEvent) -> bool) -> usize {
    schedule
        .events
        .iter()
        .position(pred)
        .expect("event present")
}

#[test]
fn mutations_are_caught() {
    let schedule = schedule_blocked_mm(8, 8, 8, 3).unwrap();
    let peak = peak_residency(&schedule).unwrap();
    assert!(simulate_cache(&schedule, peak).is_ok());

    let mut dropped = schedule.clone();
    let i = first(&dropped, |e| matches!(e, CacheEvent::Load(_)));
    dropped.events.remove(i);
    assert!(matches!(
        simulate_cache(&dropped, peak),
        Err(ScheduleError::OperandNotCached { .. } | ScheduleError::NotCached { .. })
    ));

    let mut doubled = schedule.clone();
    let i = first(&doubled, |e| matches!(e, CacheEvent::Compute { .. }));
    let event = doubled.events[i].clone();
    doubled.events.insert(i + 1, event);
    assert!(matches!(
        simulate_cache(&doubled, peak),
        Err(ScheduleError::Recomputation { .. })
    ));

    assert!(matches!(
        simulate_cache(&schedule, peak - 1),
        Err(ScheduleError::CapacityExceeded { .. })
    ));
}

#[test]
fn schedule_files_roundtrip() {
    let schedule = schedule_blocked_mm(4, 4, 4, 2).unwrap();
    let parsed = CacheSchedule::parse(&schedule.to_text()).unwrap();
    assert_eq!(parsed, schedule);
    let par = schedule_mm_grid(4, 4, 4, [2, 2, 2]).unwrap();
    let parsed = ParSchedule::parse(&par.to_text()).unwrap();
    assert_eq!(
        simulate_parallel(&parsed, None).unwrap(),
        simulate_parallel(&par, None).unwrap()
    );
}

fn symmetric_specs() -> Vec<ContractionSpec> {
    [
        (1, 1, 1),
        (2, 1, 1),
        (1, 1, 0),
        (2, 1, 0),
        (1, 0, 1),
        (2, 2, 0),
    ]
    .into_iter()
    .flat_map(|(s, t, v)| [3, 4, 6].map(|n| ContractionSpec::new(n, s, t, v).unwrap()))
    .collect()
}

#[test]
fn symmetric_schedules_count_products_and_respect_bounds() {
    symmetric_specs().par_iter().for_each(|spec| {
        for h in [27u64, 48, 200] {
            let largest = [spec.s, spec.t, spec.v]
                .map(|d| count_multisets_u64(spec.n as u64, d as u64).unwrap() as usize)
                .into_iter()
                .max()
                .unwrap();
            let (_, direct) = fit_block(h, largest, |b| schedule_blocked_direct(spec, b)).unwrap();
            assert_eq!(
                direct.count(OpKind::Mul),
                count_multiplications(AlgorithmId::Direct, spec)
                    .unwrap()
                    .total()
            );
            let report = simulate_cache(&direct, h)
                .unwrap()
                .with_bound(q_direct(spec, h).unwrap());
            assert_eq!(report.bound_respected, Some(true), "direct {spec} H={h}");
            assert!(!report.partial_sums_reused);

            let (_, sympres) = fit_block(h, spec.n, |b| schedule_sympres_seq(spec, b)).unwrap();
            assert_eq!(
                sympres.count(OpKind::Mul),
                count_multiplications(AlgorithmId::SymPres, spec)
                    .unwrap()
                    .total()
            );
            let report = simulate_cache(&sympres, h)
                .unwrap()
                .with_bound(q_sympres(spec, h).unwrap());
            assert_eq!(report.bound_respected, Some(true), "sympres {spec} H={h}");
            assert!(!report.partial_sums_reused);
        }
    });
}
