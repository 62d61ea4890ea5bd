//! Discrete simulators for a two-level memory with a cache of `H` words and
//! for `p` processors exchanging point-to-point messages, together with
//! reference schedules to run on them.
//!
//! Schedules are explicit: every load, store, eviction and message is an
//! event, so the simulators only validate and count. Values are abstract
//! addresses; every intermediate value gets a fresh one.

mod cache;
mod grid;
mod parallel;
mod sequential;

use serde::Serialize;
use thiserror::Error;

pub use cache::{simulate_cache, CacheEvent, CacheSchedule};
pub use grid::{
    grid_for, schedule_mm_1d, schedule_mm_2d, schedule_mm_3d, schedule_mm_grid, GridShape,
};
pub use parallel::{simulate_parallel, ParEvent, ParSchedule};
pub use sequential::{
    fit_block, mm_block_for_cache, peak_residency, schedule_blocked_direct, schedule_blocked_mm,
    schedule_sympres_plan, schedule_sympres_seq,
};

use crate::bounds::BoundValue;

/// An abstract element identifier.
pub type Addr = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Mul,
    Add,
}

impl OpKind {
    pub fn token(self) -> &'static str {
        match self {
            OpKind::Mul => "MUL",
            OpKind::Add => "ADD",
        }
    }

    pub(crate) fn parse(s: &str) -> Option<Self> {
        match s {
            "MUL" => Some(OpKind::Mul),
            "ADD" => Some(OpKind::Add),
            _ => None,
        }
    }
}

/// Why a schedule is invalid. Event indices are zero-based positions in the
/// schedule's event list.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("event {index}: residency would reach {residency}, above capacity {capacity}")]
    CapacityExceeded {
        index: usize,
        residency: u64,
        capacity: u64,
    },
    #[error("event {index}: operand {addr} is not in cache")]
    OperandNotCached { index: usize, addr: Addr },
    #[error("event {index}: {addr} was already computed")]
    Recomputation { index: usize, addr: Addr },
    #[error("event {index}: {addr} is an input and cannot be computed")]
    WritesInput { index: usize, addr: Addr },
    #[error("event {index}: {addr} is not in slow memory")]
    NotInMemory { index: usize, addr: Addr },
    #[error("event {index}: {addr} is not in cache")]
    NotCached { index: usize, addr: Addr },
    #[error("event {index}: {addr} is already in cache")]
    AlreadyCached { index: usize, addr: Addr },
    #[error("event {index}: {kind:?} with {operands} operands")]
    BadArity {
        index: usize,
        kind: OpKind,
        operands: usize,
    },
    #[error("output {addr} was never stored")]
    OutputNotStored { addr: Addr },
    #[error("event {index}: processor {proc} outside [0, {procs})")]
    ProcOutOfRange {
        index: usize,
        proc: usize,
        procs: usize,
    },
    #[error("event {index}: {addr} is not resident on processor {proc}")]
    NotResident {
        index: usize,
        proc: usize,
        addr: Addr,
    },
    #[error("{addr} is placed more than once")]
    DuplicatePlacement { addr: Addr },
    #[error("placement group {group}: processor {proc} owns {count} elements, above the balanced share {limit}")]
    Imbalance {
        group: usize,
        proc: usize,
        count: usize,
        limit: usize,
    },
    #[error("output {addr} does not end on its owner {owner}")]
    OutputMisplaced { addr: Addr, owner: usize },
    #[error("processor {proc} holds {residency} elements, above its memory {limit}")]
    MemoryExceeded {
        proc: usize,
        residency: u64,
        limit: u64,
    },
    #[error("dimension of size {size} cannot be split into {parts} equal parts")]
    Indivisible { size: usize, parts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ProcTraffic {
    pub sent: u64,
    pub received: u64,
}

impl ProcTraffic {
    pub fn total(&self) -> u64 {
        self.sent + self.received
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Cache,
    Parallel,
}

/// Outcome of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub model: Model,
    /// Loads plus stores, or the largest per-processor traffic.
    pub measured_cost: u64,
    pub mult_count: u64,
    pub add_count: u64,
    pub loads: u64,
    pub stores: u64,
    /// Largest number of values held at once, in the cache or on any
    /// processor.
    pub peak_residency: u64,
    /// Per-processor traffic; empty for cache runs.
    pub traffic: Vec<ProcTraffic>,
    /// Whether some sum is consumed by more than one later operation.
    pub partial_sums_reused: bool,
    pub bound: Option<BoundValue>,
    /// `measured_cost / bound`, rounded.
    pub bound_ratio: Option<f64>,
    /// Exact comparison of the measured cost against the bound.
    pub bound_respected: Option<bool>,
}

impl SimReport {
    /// Attaches a bound and the measured-to-bound ratio.
    pub fn with_bound(mut self, bound: BoundValue) -> Self {
        let measured = crate::bounds::Radical::integer(self.measured_cost);
        self.bound_respected = Some(measured >= bound.value);
        let ratio = self.measured_cost as f64 / bound.approx();
        // rounded so reports are stable across platforms
        self.bound_ratio = Some((ratio * 1e9).round() / 1e9);
        self.bound = Some(bound);
        self
    }
}

/// Counts of consumers per address, used to detect reused sums.
pub(crate) fn reused_sums<'a>(
    addr_space: usize,
    computes: impl Iterator<Item = (OpKind, Addr, &'a [Addr])>,
) -> bool {
    let mut is_sum = vec![false; addr_space];
    let mut uses = vec![0u32; addr_space];
    for (kind, out, operands) in computes {
        for &o in operands {
            uses[o] += 1;
        }
        is_sum[out] = kind == OpKind::Add;
    }
    is_sum.iter().zip(&uses).any(|(&s, &u)| s && u > 1)
}
