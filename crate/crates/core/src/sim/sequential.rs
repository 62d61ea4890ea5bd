//! Reference schedules for the cache simulator.

use std::collections::{BTreeMap, HashMap};

use num_integer::Roots;

use super::cache::{simulate_cache, CacheEvent, CacheSchedule};
use super::{Addr, OpKind};
use crate::combinatorics::{
    count_multisets_usize, enumerate_increasing, ContractionClass, ContractionSpec, TupleSpace,
};
use crate::contraction::SymPresPlan;
use crate::error::{precondition, Result};

/// Event writer with a fresh-address counter. Partial sums live at fresh
/// addresses; [`Emitter::finish`] renames each output's last partial to the
/// output's own address.
struct Emitter {
    events: Vec<CacheEvent>,
    next: Addr,
}

impl Emitter {
    fn new(first_free: Addr) -> Self {
        Emitter {
            events: Vec::new(),
            next: first_free,
        }
    }

    fn load(&mut self, a: Addr) {
        self.events.push(CacheEvent::Load(a));
    }

    fn store(&mut self, a: Addr) {
        self.events.push(CacheEvent::Store(a));
    }

    fn evict(&mut self, a: Addr) {
        self.events.push(CacheEvent::Evict(a));
    }

    fn compute(&mut self, kind: OpKind, operands: Vec<Addr>) -> Addr {
        let out = self.next;
        self.next += 1;
        self.events.push(CacheEvent::Compute {
            out,
            operands,
            kind,
        });
        out
    }

    /// `acc + x`, releasing both operands.
    fn accumulate(&mut self, acc: Addr, x: Addr) -> Addr {
        let sum = self.compute(OpKind::Add, vec![acc, x]);
        self.evict(acc);
        self.evict(x);
        sum
    }

    fn finish(self, inputs: Vec<Addr>, outputs: Vec<Addr>, last: &[Option<Addr>]) -> CacheSchedule {
        let rename: HashMap<Addr, Addr> = last
            .iter()
            .zip(&outputs)
            .filter_map(|(l, &o)| l.map(|l| (l, o)))
            .collect();
        let r = |a: Addr| rename.get(&a).copied().unwrap_or(a);
        let events = self
            .events
            .into_iter()
            .map(|e| match e {
                CacheEvent::Load(a) => CacheEvent::Load(r(a)),
                CacheEvent::Store(a) => CacheEvent::Store(r(a)),
                CacheEvent::Evict(a) => CacheEvent::Evict(r(a)),
                CacheEvent::Compute {
                    out,
                    operands,
                    kind,
                } => CacheEvent::Compute {
                    out: r(out),
                    operands: operands.into_iter().map(r).collect(),
                    kind,
                },
            })
            .collect();
        CacheSchedule {
            inputs,
            outputs,
            events,
        }
    }
}

fn dedup_in_order(items: impl IntoIterator<Item = Addr>) -> Vec<Addr> {
    let mut seen = std::collections::HashSet::new();
    items.into_iter().filter(|a| seen.insert(*a)).collect()
}

fn chunks(len: usize, block: usize) -> Vec<std::ops::Range<usize>> {
    (0..len)
        .step_by(block)
        .map(|lo| lo..(lo + block).min(len))
        .collect()
}

/// A product `C[out(i, j)] += A[a(i, l)] * B[b(l, j)]` over an
/// `rows × inner × cols` iteration cube.
struct Cube<'a> {
    rows: usize,
    inner: usize,
    cols: usize,
    a: &'a dyn Fn(usize, usize) -> Addr,
    b: &'a dyn Fn(usize, usize) -> Addr,
    out: &'a dyn Fn(usize, usize) -> usize,
}

/// Blocked traversal of a product cube. For each block of rows, columns and
/// inner indices the needed `A` and `B` entries are loaded once; each output
/// touched by the block is then loaded (if partially computed), updated with
/// every product of the block, stored and evicted. At most `2 block² + 3`
/// values are resident.
fn blocked_cube(
    cube: &Cube,
    block: usize,
    inputs: Vec<Addr>,
    outputs: Vec<Addr>,
    first_free: Addr,
) -> CacheSchedule {
    let mut em = Emitter::new(first_free);
    let mut partial: Vec<Option<Addr>> = vec![None; outputs.len()];
    for rows in chunks(cube.rows, block) {
        for cols in chunks(cube.cols, block) {
            // outputs of this block in first-touch order, with their cells
            let mut cells: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
            let mut order = Vec::new();
            for i in rows.clone() {
                for j in cols.clone() {
                    let o = (cube.out)(i, j);
                    let entry = cells.entry(o).or_default();
                    if entry.is_empty() {
                        order.push(o);
                    }
                    entry.push((i, j));
                }
            }
            for inner in chunks(cube.inner, block) {
                let a_block = dedup_in_order(
                    rows.clone()
                        .flat_map(|i| inner.clone().map(move |l| (i, l)))
                        .map(|(i, l)| (cube.a)(i, l)),
                );
                let b_block = dedup_in_order(
                    inner
                        .clone()
                        .flat_map(|l| cols.clone().map(move |j| (l, j)))
                        .map(|(l, j)| (cube.b)(l, j)),
                );
                a_block.iter().chain(&b_block).for_each(|&x| em.load(x));
                for &o in &order {
                    let mut acc = partial[o];
                    if let Some(x) = acc {
                        em.load(x);
                    }
                    for &(i, j) in &cells[&o] {
                        for l in inner.clone() {
                            let p = em.compute(OpKind::Mul, vec![(cube.a)(i, l), (cube.b)(l, j)]);
                            acc = Some(match acc {
                                None => p,
                                Some(x) => em.accumulate(x, p),
                            });
                        }
                    }
                    let x = acc.expect("every block cell has an inner index");
                    em.store(x);
                    em.evict(x);
                    partial[o] = acc;
                }
                a_block.iter().chain(&b_block).for_each(|&x| em.evict(x));
            }
        }
    }
    em.finish(inputs, outputs, &partial)
}

/// The classic blocked schedule for `C = A B` with `A` of size `m × k` and
/// `B` of size `k × n`, using square blocks of side `block`.
///
/// Addresses: `A` row-major from 0, then `B`, then `C`, then temporaries.
pub fn schedule_blocked_mm(m: usize, n: usize, k: usize, block: usize) -> Result<CacheSchedule> {
    if m == 0 || n == 0 || k == 0 || block == 0 {
        return Err(precondition("dimensions and block must be positive"));
    }
    let (b_base, c_base) = (m * k, m * k + k * n);
    let a = move |i: usize, l: usize| i * k + l;
    let b = move |l: usize, j: usize| b_base + l * n + j;
    let out = move |i: usize, j: usize| i * n + j;
    let cube = Cube {
        rows: m,
        inner: k,
        cols: n,
        a: &a,
        b: &b,
        out: &out,
    };
    let inputs = (0..c_base).collect();
    let outputs = (c_base..c_base + m * n).collect();
    Ok(blocked_cube(&cube, block, inputs, outputs, c_base + m * n))
}

/// Largest block side `b` with `3 b² ≤ H`.
pub fn mm_block_for_cache(cache: u64) -> usize {
    ((cache / 3).sqrt() as usize).max(1)
}

/// Packed input and output layout shared by the symmetric schedules:
/// `A` from 0, then `B`, then `C`.
struct PackedLayout {
    b_base: Addr,
    c_base: Addr,
    c_len: usize,
}

impl PackedLayout {
    fn new(spec: &ContractionSpec) -> Self {
        let a_len = count_multisets_usize(spec.n, spec.order_a());
        let b_len = count_multisets_usize(spec.n, spec.order_b());
        let c_len = count_multisets_usize(spec.n, spec.order_c());
        PackedLayout {
            b_base: a_len,
            c_base: a_len + b_len,
            c_len,
        }
    }

    fn inputs(&self) -> Vec<Addr> {
        (0..self.c_base).collect()
    }

    fn outputs(&self) -> Vec<Addr> {
        (self.c_base..self.c_base + self.c_len).collect()
    }

    fn first_free(&self) -> Addr {
        self.c_base + self.c_len
    }
}

/// Blocked schedule for the direct algorithm: the product cube over
/// increasing `s`-, `v`- and `t`-tuples, reading packed `A` and `B` entries
/// and accumulating straight into packed `C` entries.
pub fn schedule_blocked_direct(spec: &ContractionSpec, block: usize) -> Result<CacheSchedule> {
    if block == 0 {
        return Err(precondition("block must be positive"));
    }
    let (n, s, t, v) = (spec.n, spec.s, spec.t, spec.v);
    let layout = PackedLayout::new(spec);
    let js = enumerate_increasing(n, s);
    let ks = enumerate_increasing(n, v);
    let ls = enumerate_increasing(n, t);
    let (sa, sb, sc) = (
        TupleSpace::new(n, s + v),
        TupleSpace::new(n, v + t),
        TupleSpace::new(n, s + t),
    );
    let a_at: Vec<Vec<Addr>> = js
        .iter()
        .map(|j| {
            ks.iter()
                .map(|k| sa.rank_unchecked(j.merge(k).entries()))
                .collect()
        })
        .collect();
    let b_at: Vec<Vec<Addr>> = ks
        .iter()
        .map(|k| {
            ls.iter()
                .map(|l| layout.b_base + sb.rank_unchecked(k.merge(l).entries()))
                .collect()
        })
        .collect();
    let out_at: Vec<Vec<usize>> = js
        .iter()
        .map(|j| {
            ls.iter()
                .map(|l| sc.rank_unchecked(j.merge(l).entries()))
                .collect()
        })
        .collect();
    let a = |j: usize, k: usize| a_at[j][k];
    let b = |k: usize, l: usize| b_at[k][l];
    let out = |j: usize, l: usize| out_at[j][l];
    let cube = Cube {
        rows: js.len(),
        inner: ks.len(),
        cols: ls.len(),
        a: &a,
        b: &b,
        out: &out,
    };
    Ok(blocked_cube(
        &cube,
        block,
        layout.inputs(),
        layout.outputs(),
        layout.first_free(),
    ))
}

/// One product of linear combinations: `(sum a) * (sum b)` scattered to `c`.
struct Product<'a> {
    a: &'a [(usize, i64)],
    b: &'a [(usize, i64)],
    c: &'a [(usize, i64)],
}

/// Runs groups of products one group at a time. A group loads every `A` and
/// `B` entry and every partial output it touches, forms each product from
/// scratch, and writes the partial outputs back at the end.
fn grouped_products(groups: &[Vec<Product>], layout: &PackedLayout) -> CacheSchedule {
    let mut em = Emitter::new(layout.first_free());
    let mut partial: Vec<Option<Addr>> = vec![None; layout.c_len];
    let combine = |em: &mut Emitter, terms: &[(usize, i64)], base: Addr| -> (Addr, bool) {
        let mut it = terms.iter().map(|&(r, _)| base + r);
        let first = it.next().expect("nonempty combination");
        let mut acc = (first, false);
        for x in it {
            let sum = em.compute(OpKind::Add, vec![acc.0, x]);
            if acc.1 {
                em.evict(acc.0);
            }
            acc = (sum, true);
        }
        acc
    };
    for group in groups {
        let a_in = dedup_in_order(group.iter().flat_map(|p| p.a.iter().map(|&(r, _)| r)));
        let b_in = dedup_in_order(
            group
                .iter()
                .flat_map(|p| p.b.iter().map(|&(r, _)| layout.b_base + r)),
        );
        let touched = dedup_in_order(group.iter().flat_map(|p| p.c.iter().map(|&(r, _)| r)));
        a_in.iter().chain(&b_in).for_each(|&x| em.load(x));
        for &o in &touched {
            if let Some(x) = partial[o] {
                em.load(x);
            }
        }
        for p in group {
            let (ha, a_temp) = combine(&mut em, p.a, 0);
            let (hb, b_temp) = combine(&mut em, p.b, layout.b_base);
            let z = em.compute(OpKind::Mul, vec![ha, hb]);
            if a_temp {
                em.evict(ha);
            }
            if b_temp {
                em.evict(hb);
            }
            let mut z_kept = false;
            for &(o, _) in p.c {
                partial[o] = Some(match partial[o] {
                    Some(x) => {
                        let sum = em.compute(OpKind::Add, vec![x, z]);
                        em.evict(x);
                        sum
                    }
                    None if p.c.len() == 1 => {
                        z_kept = true;
                        z
                    }
                    // scaled copy
                    None => em.compute(OpKind::Add, vec![z]),
                });
            }
            if !z_kept {
                em.evict(z);
            }
        }
        for &o in &touched {
            let x = partial[o].expect("touched outputs have partials");
            em.store(x);
            em.evict(x);
        }
        a_in.iter().chain(&b_in).for_each(|&x| em.evict(x));
    }
    em.finish(layout.inputs(), layout.outputs(), &partial)
}

/// Schedule for the symmetry-preserving algorithm. Increasing `ω`-tuples are
/// grouped by which length-`block` range each index falls in; each group
/// loads the packed entries its sums need and flushes its partial outputs.
/// The correction products follow in groups of the average main-group size,
/// or join the single group when `block ≥ n`.
///
/// Degenerate shapes use the direct schedule, as the algorithm does.
pub fn schedule_sympres_seq(spec: &ContractionSpec, block: usize) -> Result<CacheSchedule> {
    if spec.class() == ContractionClass::Degenerate {
        return schedule_blocked_direct(spec, block);
    }
    schedule_sympres_plan(&SymPresPlan::new(spec)?, block)
}

/// [`schedule_sympres_seq`] for an already built plan.
pub fn schedule_sympres_plan(plan: &SymPresPlan, block: usize) -> Result<CacheSchedule> {
    if block == 0 {
        return Err(precondition("block must be positive"));
    }
    let layout = PackedLayout::new(plan.spec());
    let mut by_range: BTreeMap<Vec<usize>, Vec<Product>> = BTreeMap::new();
    for col in plan.columns() {
        // indices run over [1, n]
        let key = col
            .tuple
            .entries()
            .iter()
            .map(|&x| (x - 1) / block)
            .collect();
        by_range.entry(key).or_default().push(Product {
            a: &col.a,
            b: &col.b,
            c: &col.c,
        });
    }
    let mut groups: Vec<Vec<Product>> = by_range.into_values().collect();
    let corrections = plan.corrections().iter().map(|c| Product {
        a: &c.a,
        b: &c.b,
        c: &c.c,
    });
    if groups.len() == 1 {
        groups[0].extend(corrections);
    } else {
        let size = plan.columns().len().div_ceil(groups.len().max(1)).max(1);
        let corrections: Vec<Product> = corrections.collect();
        let mut rest = corrections.into_iter().peekable();
        while rest.peek().is_some() {
            groups.push(rest.by_ref().take(size).collect());
        }
    }
    Ok(grouped_products(&groups, &layout))
}

/// Largest number of values the schedule ever holds in cache.
pub fn peak_residency(schedule: &CacheSchedule) -> Result<u64> {
    Ok(simulate_cache(schedule, u64::MAX)?.peak_residency)
}

/// The largest block in `1..=max_block` whose schedule fits a cache of
/// `cache` words, with that schedule.
pub fn fit_block(
    cache: u64,
    max_block: usize,
    build: impl Fn(usize) -> Result<CacheSchedule>,
) -> Result<(usize, CacheSchedule)> {
    for block in (1..=max_block.max(1)).rev() {
        let schedule = build(block)?;
        if peak_residency(&schedule)? <= cache {
            return Ok((block, schedule));
        }
    }
    Err(precondition(format!(
        "no block size fits a cache of {cache} words"
    )))
}
