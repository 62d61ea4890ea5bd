//! The sequential two-level memory simulator and its schedule format.

use std::fmt::Write as _;

use serde::Serialize;

use super::{reused_sums, Addr, Model, OpKind, ScheduleError, SimReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CacheEvent {
    Load(Addr),
    Store(Addr),
    Evict(Addr),
    /// `out = op(operands)`. Multiplications take two operands; additions
    /// take two, or one for a scaled copy.
    Compute {
        out: Addr,
        operands: Vec<Addr>,
        kind: OpKind,
    },
}

/// A sequential schedule. `inputs` start in slow memory; every address in
/// `outputs` must be stored by the end.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CacheSchedule {
    pub inputs: Vec<Addr>,
    pub outputs: Vec<Addr>,
    pub events: Vec<CacheEvent>,
}

impl CacheSchedule {
    fn address_space(&self) -> usize {
        let events = self.events.iter().flat_map(|e| match e {
            CacheEvent::Load(a) | CacheEvent::Store(a) | CacheEvent::Evict(a) => vec![*a],
            CacheEvent::Compute { out, operands, .. } => {
                let mut v = operands.clone();
                v.push(*out);
                v
            }
        });
        self.inputs
            .iter()
            .chain(&self.outputs)
            .copied()
            .chain(events)
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn count(&self, kind: OpKind) -> u64 {
        self.events
            .iter()
            .filter(|e| matches!(e, CacheEvent::Compute { kind: k, .. } if *k == kind))
            .count() as u64
    }

    /// Text form: `IN`/`OUT` header lines listing addresses, then one event
    /// per line as `L a`, `S a`, `E a` or `C out <- a b MUL|ADD`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[Addr]| v.iter().map(Addr::to_string).collect::<Vec<_>>().join(" ");
        writeln!(s, "IN {}", list(&self.inputs)).unwrap();
        writeln!(s, "OUT {}", list(&self.outputs)).unwrap();
        for e in &self.events {
            match e {
                CacheEvent::Load(a) => writeln!(s, "L {a}"),
                CacheEvent::Store(a) => writeln!(s, "S {a}"),
                CacheEvent::Evict(a) => writeln!(s, "E {a}"),
                CacheEvent::Compute {
                    out,
                    operands,
                    kind,
                } => {
                    writeln!(s, "C {out} <- {} {}", list(operands), kind.token())
                }
            }
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut schedule = CacheSchedule::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| Error::Parse { line, message };
            let words: Vec<&str> = raw.split_whitespace().collect();
            let Some((&head, rest)) = words.split_first() else {
                continue;
            };
            let addrs = |ws: &[&str]| -> Result<Vec<Addr>> {
                ws.iter()
                    .map(|w| w.parse().map_err(|_| err(format!("bad address {w:?}"))))
                    .collect()
            };
            let single = |ws: &[&str]| -> Result<Addr> {
                match addrs(ws)?.as_slice() {
                    [a] => Ok(*a),
                    _ => Err(err(format!("{head} takes one address"))),
                }
            };
            match head {
                "IN" => schedule.inputs.extend(addrs(rest)?),
                "OUT" => schedule.outputs.extend(addrs(rest)?),
                "L" => schedule.events.push(CacheEvent::Load(single(rest)?)),
                "S" => schedule.events.push(CacheEvent::Store(single(rest)?)),
                "E" => schedule.events.push(CacheEvent::Evict(single(rest)?)),
                "C" => {
                    let (kind, body) = rest
                        .split_last()
                        .ok_or_else(|| err("empty compute".into()))?;
                    let kind = OpKind::parse(kind)
                        .ok_or_else(|| err(format!("unknown operation {kind:?}")))?;
                    if body.len() < 3 || body[1] != "<-" {
                        return Err(err("expected `C out <- operands KIND`".into()));
                    }
                    schedule.events.push(CacheEvent::Compute {
                        out: single(&body[..1])?,
                        operands: addrs(&body[2..])?,
                        kind,
                    });
                }
                other => return Err(err(format!("unknown record {other:?}"))),
            }
        }
        Ok(schedule)
    }
}

pub(crate) fn check_arity(
    index: usize,
    kind: OpKind,
    operands: usize,
) -> std::result::Result<(), ScheduleError> {
    let ok = match kind {
        OpKind::Mul => operands == 2,
        OpKind::Add => operands == 1 || operands == 2,
    };
    if ok {
        Ok(())
    } else {
        Err(ScheduleError::BadArity {
            index,
            kind,
            operands,
        })
    }
}

/// Runs `schedule` against a cache of `capacity` words.
///
/// Inputs start in slow memory and nothing starts in the cache. A load needs
/// the value in slow memory, an operation needs its operands in the cache and
/// a free word for its result, and no value may be computed twice. The cost
/// is the number of loads plus stores.
pub fn simulate_cache(
    schedule: &CacheSchedule,
    capacity: u64,
) -> std::result::Result<SimReport, ScheduleError> {
    let space = schedule.address_space();
    let mut is_input = vec![false; space];
    let mut in_memory = vec![false; space];
    let mut cached = vec![false; space];
    let mut computed = vec![false; space];
    for &a in &schedule.inputs {
        is_input[a] = true;
        in_memory[a] = true;
    }
    let (mut residency, mut peak) = (0u64, 0u64);
    let (mut loads, mut stores, mut muls, mut adds) = (0u64, 0u64, 0u64, 0u64);
    let mut grow = |index: usize, residency: &mut u64| {
        if *residency + 1 > capacity {
            return Err(ScheduleError::CapacityExceeded {
                index,
                residency: *residency + 1,
                capacity,
            });
        }
        *residency += 1;
        peak = peak.max(*residency);
        Ok(())
    };
    for (index, event) in schedule.events.iter().enumerate() {
        match event {
            CacheEvent::Load(a) => {
                let a = *a;
                if !in_memory[a] {
                    return Err(ScheduleError::NotInMemory { index, addr: a });
                }
                if cached[a] {
                    return Err(ScheduleError::AlreadyCached { index, addr: a });
                }
                grow(index, &mut residency)?;
                cached[a] = true;
                loads += 1;
            }
            CacheEvent::Store(a) => {
                if !cached[*a] {
                    return Err(ScheduleError::NotCached { index, addr: *a });
                }
                in_memory[*a] = true;
                stores += 1;
            }
            CacheEvent::Evict(a) => {
                if !cached[*a] {
                    return Err(ScheduleError::NotCached { index, addr: *a });
                }
                cached[*a] = false;
                residency -= 1;
            }
            CacheEvent::Compute {
                out,
                operands,
                kind,
            } => {
                check_arity(index, *kind, operands.len())?;
                if let Some(&a) = operands.iter().find(|&&a| !cached[a]) {
                    return Err(ScheduleError::OperandNotCached { index, addr: a });
                }
                if is_input[*out] {
                    return Err(ScheduleError::WritesInput { index, addr: *out });
                }
                if computed[*out] {
                    return Err(ScheduleError::Recomputation { index, addr: *out });
                }
                grow(index, &mut residency)?;
                computed[*out] = true;
                cached[*out] = true;
                match kind {
                    OpKind::Mul => muls += 1,
                    OpKind::Add => adds += 1,
                }
            }
        }
    }
    if let Some(&addr) = schedule
        .outputs
        .iter()
        .find(|&&a| !in_memory[a] || is_input[a])
    {
        return Err(ScheduleError::OutputNotStored { addr });
    }
    let computes = schedule.events.iter().filter_map(|e| match e {
        CacheEvent::Compute {
            out,
            operands,
            kind,
        } => Some((*kind, *out, operands.as_slice())),
        _ => None,
    });
    Ok(SimReport {
        model: Model::Cache,
        measured_cost: loads + stores,
        mult_count: muls,
        add_count: adds,
        loads,
        stores,
        peak_residency: peak,
        traffic: Vec::new(),
        partial_sums_reused: reused_sums(space, computes),
        bound: None,
        bound_ratio: None,
        bound_respected: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CacheSchedule {
        // c = a * b
        CacheSchedule {
            inputs: vec![0, 1],
            outputs: vec![2],
            events: vec![
                CacheEvent::Load(0),
                CacheEvent::Load(1),
                CacheEvent::Compute {
                    out: 2,
                    operands: vec![0, 1],
                    kind: OpKind::Mul,
                },
                CacheEvent::Store(2),
            ],
        }
    }

    #[test]
    fn counts_and_capacity() {
        let r = simulate_cache(&tiny(), 3).unwrap();
        assert_eq!((r.measured_cost, r.mult_count, r.peak_residency), (3, 1, 3));
        assert!(matches!(
            simulate_cache(&tiny(), 2),
            Err(ScheduleError::CapacityExceeded { index: 2, .. })
        ));
    }

    #[test]
    fn missing_load_and_store() {
        let mut s = tiny();
        s.events.remove(1);
        assert_eq!(
            simulate_cache(&s, 9),
            Err(ScheduleError::OperandNotCached { index: 1, addr: 1 })
        );
        let mut s = tiny();
        s.events.pop();
        assert_eq!(
            simulate_cache(&s, 9),
            Err(ScheduleError::OutputNotStored { addr: 2 })
        );
    }

    #[test]
    fn text_round_trip() {
        let s = tiny();
        let text = s.to_text();
        assert!(text.contains("C 2 <- 0 1 MUL"));
        assert_eq!(CacheSchedule::parse(&text).unwrap(), s);
        assert!(matches!(
            CacheSchedule::parse("IN 0\nC 1 <- 0 DIV"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
