//! Owner-computes matrix-product schedules on processor grids.

use serde::{Deserialize, Serialize};

use super::parallel::{ParEvent, ParSchedule};
use super::{Addr, OpKind, ScheduleError};
use crate::error::{precondition, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridShape {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

impl GridShape {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1d" => Some(GridShape::OneD),
            "2d" => Some(GridShape::TwoD),
            "3d" => Some(GridShape::ThreeD),
            _ => None,
        }
    }
}

/// Axes sorted by decreasing size, ties broken by axis order.
fn axes_by_size(dims: [usize; 3]) -> [usize; 3] {
    let mut axes = [0, 1, 2];
    axes.sort_by_key(|&a| (std::cmp::Reverse(dims[a]), a));
    axes
}

/// Splits `p` into as even a product of `parts` factors as possible, largest
/// first.
fn balanced_factors(p: usize, parts: usize) -> Vec<usize> {
    fn search(
        p: usize,
        parts: usize,
        min: usize,
        acc: &mut Vec<usize>,
        best: &mut Option<Vec<usize>>,
    ) {
        if parts == 1 {
            if p >= min {
                acc.push(p);
                let better = match best {
                    None => true,
                    Some(b) => acc.iter().max() < b.iter().max(),
                };
                if better {
                    *best = Some(acc.clone());
                }
                acc.pop();
            }
            return;
        }
        for f in min..=p {
            if p % f == 0 {
                acc.push(f);
                search(p / f, parts - 1, f, acc, best);
                acc.pop();
            }
        }
    }
    let mut best = None;
    search(p, parts, 1, &mut Vec::new(), &mut best);
    let mut f = best.expect("p = p * 1 * 1 always works");
    f.sort_unstable_by(|a, b| b.cmp(a));
    f
}

/// Processor counts along the `(m, n, k)` axes for a grid of the given shape.
/// The largest factors go to the largest dimensions; every dimension must be
/// divisible by its count.
pub fn grid_for(shape: GridShape, m: usize, n: usize, k: usize, p: usize) -> Result<[usize; 3]> {
    if p == 0 {
        return Err(precondition("processor count must be positive"));
    }
    let dims = [m, n, k];
    let parts = match shape {
        GridShape::OneD => 1,
        GridShape::TwoD => 2,
        GridShape::ThreeD => 3,
    };
    let mut grid = [1; 3];
    for (axis, f) in axes_by_size(dims)
        .into_iter()
        .zip(balanced_factors(p, parts))
    {
        grid[axis] = f;
    }
    for axis in 0..3 {
        if dims[axis] % grid[axis] != 0 {
            return Err(ScheduleError::Indivisible {
                size: dims[axis],
                parts: grid[axis],
            }
            .into());
        }
    }
    Ok(grid)
}

/// Owner-computes schedule on a `grid[0] × grid[1] × grid[2]` processor grid
/// splitting the `m`, `n` and `k` axes of the product cube.
///
/// Processor `(a, b, c)` multiplies block `(a, c)` of `A` by block `(c, b)`
/// of `B`. Each block of `A` is spread evenly over the processors that use
/// it, and likewise for `B` and the partial results of `C`. A processor
/// first gathers its operand blocks, then forms its local partial sums, and
/// finally the partials of each `C` entry are sent to its owner and added.
///
/// Addresses: `A` row-major from 0, then `B`, then `C`, then temporaries.
pub fn schedule_mm_grid(m: usize, n: usize, k: usize, grid: [usize; 3]) -> Result<ParSchedule> {
    if m == 0 || n == 0 || k == 0 {
        return Err(precondition("dimensions must be positive"));
    }
    let [gm, gn, gk] = grid;
    for (size, parts) in [(m, gm), (n, gn), (k, gk)] {
        if parts == 0 || size % parts != 0 {
            return Err(ScheduleError::Indivisible { size, parts }.into());
        }
    }
    let (bm, bn, bk) = (m / gm, n / gn, k / gk);
    let procs = gm * gn * gk;
    let proc_at = |a: usize, b: usize, c: usize| (a * gn + b) * gk + c;
    let (b_base, c_base) = (m * k, m * k + k * n);
    let a_addr = |i: usize, l: usize| i * k + l;
    let b_addr = |l: usize, j: usize| b_base + l * n + j;
    let c_addr = |i: usize, j: usize| c_base + i * n + j;
    // position of an entry within its block, row-major
    let a_owner = |i: usize, l: usize| {
        let e = (i % bm) * bk + l % bk;
        proc_at(i / bm, e % gn, l / bk)
    };
    let b_owner = |l: usize, j: usize| {
        let e = (l % bk) * bn + j % bn;
        proc_at(e % gm, j / bn, l / bk)
    };
    let c_owner = |i: usize, j: usize| {
        let e = (i % bm) * bn + j % bn;
        proc_at(i / bm, j / bn, e % gk)
    };

    let mut schedule = ParSchedule {
        procs,
        inputs: vec![
            (0..m)
                .flat_map(|i| (0..k).map(move |l| (i, l)))
                .map(|(i, l)| (a_addr(i, l), a_owner(i, l)))
                .collect(),
            (0..k)
                .flat_map(|l| (0..n).map(move |j| (l, j)))
                .map(|(l, j)| (b_addr(l, j), b_owner(l, j)))
                .collect(),
        ],
        outputs: (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (c_addr(i, j), c_owner(i, j)))
            .collect(),
        events: Vec::new(),
    };
    let mut next: Addr = c_base + m * n;
    let mut fresh = || {
        next += 1;
        next - 1
    };
    let procs_in_order =
        || (0..gm).flat_map(|a| (0..gn).flat_map(move |b| (0..gk).map(move |c| (a, b, c))));

    // gather operand blocks
    for (a, b, c) in procs_in_order() {
        let q = proc_at(a, b, c);
        for i in a * bm..(a + 1) * bm {
            for l in c * bk..(c + 1) * bk {
                let from = a_owner(i, l);
                if from != q {
                    schedule.events.push(ParEvent::Send {
                        elem: a_addr(i, l),
                        from,
                        to: q,
                    });
                }
            }
        }
        for l in c * bk..(c + 1) * bk {
            for j in b * bn..(b + 1) * bn {
                let from = b_owner(l, j);
                if from != q {
                    schedule.events.push(ParEvent::Send {
                        elem: b_addr(l, j),
                        from,
                        to: q,
                    });
                }
            }
        }
    }

    // local partial sums; with one slice of k they are the results
    let mut partials = vec![vec![0; m * n]; gk];
    for (a, b, c) in procs_in_order() {
        let q = proc_at(a, b, c);
        for i in a * bm..(a + 1) * bm {
            for j in b * bn..(b + 1) * bn {
                let mut acc = None;
                for l in c * bk..(c + 1) * bk {
                    let last = l + 1 == (c + 1) * bk;
                    let product = if last && gk == 1 && bk == 1 {
                        c_addr(i, j)
                    } else {
                        fresh()
                    };
                    schedule.events.push(ParEvent::Compute {
                        proc: q,
                        out: product,
                        operands: vec![a_addr(i, l), b_addr(l, j)],
                        kind: OpKind::Mul,
                    });
                    acc = Some(match acc {
                        None => product,
                        Some(x) => {
                            let sum = if last && gk == 1 {
                                c_addr(i, j)
                            } else {
                                fresh()
                            };
                            schedule.events.push(ParEvent::Compute {
                                proc: q,
                                out: sum,
                                operands: vec![x, product],
                                kind: OpKind::Add,
                            });
                            sum
                        }
                    });
                }
                partials[c][i * n + j] = acc.expect("blocks are nonempty");
            }
        }
    }

    // reduce partials on the owners
    if gk > 1 {
        for i in 0..m {
            for j in 0..n {
                let owner = c_owner(i, j);
                let own_slice = owner % gk;
                let mut acc = partials[own_slice][i * n + j];
                let others: Vec<usize> = (0..gk).filter(|&c| c != own_slice).collect();
                for (idx, &c) in others.iter().enumerate() {
                    let x = partials[c][i * n + j];
                    schedule.events.push(ParEvent::Send {
                        elem: x,
                        from: proc_at(i / bm, j / bn, c),
                        to: owner,
                    });
                    let sum = if idx + 1 == others.len() {
                        c_addr(i, j)
                    } else {
                        fresh()
                    };
                    schedule.events.push(ParEvent::Compute {
                        proc: owner,
                        out: sum,
                        operands: vec![acc, x],
                        kind: OpKind::Add,
                    });
                    acc = sum;
                }
            }
        }
    }
    Ok(schedule)
}

pub fn schedule_mm_1d(m: usize, n: usize, k: usize, p: usize) -> Result<ParSchedule> {
    schedule_mm_grid(m, n, k, grid_for(GridShape::OneD, m, n, k, p)?)
}

pub fn schedule_mm_2d(m: usize, n: usize, k: usize, p: usize) -> Result<ParSchedule> {
    schedule_mm_grid(m, n, k, grid_for(GridShape::TwoD, m, n, k, p)?)
}

pub fn schedule_mm_3d(m: usize, n: usize, k: usize, p: usize) -> Result<ParSchedule> {
    schedule_mm_grid(m, n, k, grid_for(GridShape::ThreeD, m, n, k, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::sim::simulate_parallel;

    #[test]
    fn grid_shapes() {
        assert_eq!(grid_for(GridShape::ThreeD, 8, 8, 8, 8).unwrap(), [2, 2, 2]);
        assert_eq!(grid_for(GridShape::TwoD, 2, 8, 8, 4).unwrap(), [1, 2, 2]);
        assert_eq!(grid_for(GridShape::OneD, 2, 4, 64, 2).unwrap(), [1, 1, 2]);
        assert!(matches!(
            grid_for(GridShape::ThreeD, 8, 8, 8, 7),
            Err(Error::Schedule(ScheduleError::Indivisible {
                size: 8,
                parts: 7
            }))
        ));
    }

    #[test]
    fn single_processor_has_no_traffic() {
        let r = simulate_parallel(&schedule_mm_3d(4, 4, 4, 1).unwrap(), None).unwrap();
        assert_eq!(r.measured_cost, 0);
        assert_eq!(r.mult_count, 64);
    }

    #[test]
    fn cube_traffic() {
        let r = simulate_parallel(&schedule_mm_3d(8, 8, 8, 8).unwrap(), None).unwrap();
        assert_eq!(r.mult_count, 512);
        assert!(r.traffic.iter().all(|t| t.total() == 48));
    }
}
