//! The distributed-memory simulator and its schedule format.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use super::cache::check_arity;
use super::{reused_sums, Addr, Model, OpKind, ProcTraffic, ScheduleError, SimReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ParEvent {
    Send {
        elem: Addr,
        from: usize,
        to: usize,
    },
    Compute {
        proc: usize,
        out: Addr,
        operands: Vec<Addr>,
        kind: OpKind,
    },
}

/// A parallel schedule with its data placement. Each input group (one per
/// input tensor) is partitioned over the processors; `outputs` names the
/// owner each output must end on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ParSchedule {
    pub procs: usize,
    pub inputs: Vec<Vec<(Addr, usize)>>,
    pub outputs: Vec<(Addr, usize)>,
    pub events: Vec<ParEvent>,
}

impl ParSchedule {
    fn address_space(&self) -> usize {
        let placed = self
            .inputs
            .iter()
            .flatten()
            .chain(&self.outputs)
            .map(|&(a, _)| a);
        let used = self.events.iter().flat_map(|e| match e {
            ParEvent::Send { elem, .. } => vec![*elem],
            ParEvent::Compute { out, operands, .. } => {
                let mut v = operands.clone();
                v.push(*out);
                v
            }
        });
        placed.chain(used).max().map_or(0, |m| m + 1)
    }

    pub fn count(&self, kind: OpKind) -> u64 {
        self.events
            .iter()
            .filter(|e| matches!(e, ParEvent::Compute { kind: k, .. } if *k == kind))
            .count() as u64
    }

    /// Text form: `PROCS p`, one `IN group addr proc` line per input element,
    /// one `OUT addr proc` line per output, then events as
    /// `SND elem from to` or `CMP proc out <- a b MUL|ADD`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "PROCS {}", self.procs).unwrap();
        for (g, group) in self.inputs.iter().enumerate() {
            for (a, q) in group {
                writeln!(s, "IN {g} {a} {q}").unwrap();
            }
        }
        for (a, q) in &self.outputs {
            writeln!(s, "OUT {a} {q}").unwrap();
        }
        for e in &self.events {
            match e {
                ParEvent::Send { elem, from, to } => writeln!(s, "SND {elem} {from} {to}"),
                ParEvent::Compute {
                    proc,
                    out,
                    operands,
                    kind,
                } => {
                    let ops: Vec<String> = operands.iter().map(Addr::to_string).collect();
                    writeln!(s, "CMP {proc} {out} <- {} {}", ops.join(" "), kind.token())
                }
            }
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut schedule = ParSchedule::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| Error::Parse { line, message };
            let words: Vec<&str> = raw.split_whitespace().collect();
            let Some((&head, rest)) = words.split_first() else {
                continue;
            };
            let nums = |ws: &[&str]| -> Result<Vec<usize>> {
                ws.iter()
                    .map(|w| w.parse().map_err(|_| err(format!("bad number {w:?}"))))
                    .collect()
            };
            let exactly = |ws: &[&str], k: usize| -> Result<Vec<usize>> {
                let v = nums(ws)?;
                if v.len() == k {
                    Ok(v)
                } else {
                    Err(err(format!("{head} takes {k} numbers")))
                }
            };
            match head {
                "PROCS" => schedule.procs = exactly(rest, 1)?[0],
                "IN" => {
                    let v = exactly(rest, 3)?;
                    if schedule.inputs.len() <= v[0] {
                        schedule.inputs.resize(v[0] + 1, Vec::new());
                    }
                    schedule.inputs[v[0]].push((v[1], v[2]));
                }
                "OUT" => {
                    let v = exactly(rest, 2)?;
                    schedule.outputs.push((v[0], v[1]));
                }
                "SND" => {
                    let v = exactly(rest, 3)?;
                    schedule.events.push(ParEvent::Send {
                        elem: v[0],
                        from: v[1],
                        to: v[2],
                    });
                }
                "CMP" => {
                    let (kind, body) = rest
                        .split_last()
                        .ok_or_else(|| err("empty compute".into()))?;
                    let kind = OpKind::parse(kind)
                        .ok_or_else(|| err(format!("unknown operation {kind:?}")))?;
                    if body.len() < 4 || body[2] != "<-" {
                        return Err(err("expected `CMP proc out <- operands KIND`".into()));
                    }
                    let head = exactly(&body[..2], 2)?;
                    schedule.events.push(ParEvent::Compute {
                        proc: head[0],
                        out: head[1],
                        operands: nums(&body[3..])?,
                        kind,
                    });
                }
                other => return Err(err(format!("unknown record {other:?}"))),
            }
        }
        Ok(schedule)
    }
}

fn check_balance(
    group: usize,
    placement: &[(Addr, usize)],
    procs: usize,
) -> std::result::Result<(), ScheduleError> {
    let limit = placement.len().div_ceil(procs);
    let mut counts = vec![0usize; procs];
    for &(_, q) in placement {
        counts[q] += 1;
    }
    match counts.iter().enumerate().find(|(_, &c)| c > limit) {
        Some((proc, &count)) => Err(ScheduleError::Imbalance {
            group,
            proc,
            count,
            limit,
        }),
        None => Ok(()),
    }
}

/// Runs `schedule` on its `procs` processors, each holding at most `memory`
/// values if given.
///
/// Every input element starts on its owner only. Sending needs the element on
/// the sender; an operation needs its operands on the computing processor.
/// No value may be computed twice, and every output must end on its owner.
/// The cost is the largest number of elements sent plus received by one
/// processor.
pub fn simulate_parallel(
    schedule: &ParSchedule,
    memory: Option<u64>,
) -> std::result::Result<SimReport, ScheduleError> {
    let procs = schedule.procs;
    let space = schedule.address_space();
    let mut resident: Vec<HashSet<Addr>> = vec![HashSet::new(); procs];
    let mut placed = vec![false; space];
    let mut is_input = vec![false; space];
    let in_range = |index: usize, proc: usize| {
        if proc < procs {
            Ok(())
        } else {
            Err(ScheduleError::ProcOutOfRange { index, proc, procs })
        }
    };
    for (g, group) in schedule.inputs.iter().enumerate() {
        for &(a, q) in group {
            in_range(0, q)?;
            if placed[a] {
                return Err(ScheduleError::DuplicatePlacement { addr: a });
            }
            placed[a] = true;
            is_input[a] = true;
            resident[q].insert(a);
        }
        check_balance(g, group, procs)?;
    }
    let mut owner_of_output = vec![None; space];
    for &(a, q) in &schedule.outputs {
        in_range(0, q)?;
        if owner_of_output[a].replace(q).is_some() {
            return Err(ScheduleError::DuplicatePlacement { addr: a });
        }
    }
    check_balance(schedule.inputs.len(), &schedule.outputs, procs)?;

    let mut traffic = vec![ProcTraffic::default(); procs];
    let mut computed = vec![false; space];
    let mut peak = resident.iter().map(|r| r.len() as u64).max().unwrap_or(0);
    let (mut muls, mut adds) = (0u64, 0u64);
    let grow = |proc: usize, resident: &Vec<HashSet<Addr>>, peak: &mut u64| {
        let size = resident[proc].len() as u64;
        *peak = (*peak).max(size);
        match memory {
            Some(limit) if size > limit => Err(ScheduleError::MemoryExceeded {
                proc,
                residency: size,
                limit,
            }),
            _ => Ok(()),
        }
    };
    for (index, event) in schedule.events.iter().enumerate() {
        match event {
            ParEvent::Send { elem, from, to } => {
                in_range(index, *from)?;
                in_range(index, *to)?;
                if !resident[*from].contains(elem) {
                    return Err(ScheduleError::NotResident {
                        index,
                        proc: *from,
                        addr: *elem,
                    });
                }
                traffic[*from].sent += 1;
                traffic[*to].received += 1;
                resident[*to].insert(*elem);
                grow(*to, &resident, &mut peak)?;
            }
            ParEvent::Compute {
                proc,
                out,
                operands,
                kind,
            } => {
                in_range(index, *proc)?;
                check_arity(index, *kind, operands.len())?;
                if let Some(&a) = operands.iter().find(|a| !resident[*proc].contains(a)) {
                    return Err(ScheduleError::NotResident {
                        index,
                        proc: *proc,
                        addr: a,
                    });
                }
                if is_input[*out] {
                    return Err(ScheduleError::WritesInput { index, addr: *out });
                }
                if computed[*out] {
                    return Err(ScheduleError::Recomputation { index, addr: *out });
                }
                computed[*out] = true;
                resident[*proc].insert(*out);
                grow(*proc, &resident, &mut peak)?;
                match kind {
                    OpKind::Mul => muls += 1,
                    OpKind::Add => adds += 1,
                }
            }
        }
    }
    for &(addr, owner) in &schedule.outputs {
        if !resident[owner].contains(&addr) {
            return Err(ScheduleError::OutputMisplaced { addr, owner });
        }
    }
    let computes = schedule.events.iter().filter_map(|e| match e {
        ParEvent::Compute {
            out,
            operands,
            kind,
            ..
        } => Some((*kind, *out, operands.as_slice())),
        _ => None,
    });
    Ok(SimReport {
        model: Model::Parallel,
        measured_cost: traffic.iter().map(ProcTraffic::total).max().unwrap_or(0),
        mult_count: muls,
        add_count: adds,
        loads: 0,
        stores: 0,
        peak_residency: peak,
        partial_sums_reused: reused_sums(space, computes),
        traffic,
        bound: None,
        bound_ratio: None,
        bound_respected: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // proc 0 owns a, proc 1 owns b; proc 1 computes c = a * b and keeps it
    fn tiny() -> ParSchedule {
        ParSchedule {
            procs: 2,
            inputs: vec![vec![(0, 0)], vec![(1, 1)]],
            outputs: vec![(2, 1)],
            events: vec![
                ParEvent::Send {
                    elem: 0,
                    from: 0,
                    to: 1,
                },
                ParEvent::Compute {
                    proc: 1,
                    out: 2,
                    operands: vec![0, 1],
                    kind: OpKind::Mul,
                },
            ],
        }
    }

    #[test]
    fn traffic_is_counted_per_processor() {
        let r = simulate_parallel(&tiny(), None).unwrap();
        assert_eq!(
            r.traffic,
            vec![
                ProcTraffic {
                    sent: 1,
                    received: 0
                },
                ProcTraffic {
                    sent: 0,
                    received: 1
                }
            ]
        );
        assert_eq!(r.measured_cost, 1);
        assert!(matches!(
            simulate_parallel(&tiny(), Some(2)),
            Err(ScheduleError::MemoryExceeded { proc: 1, .. })
        ));
    }

    #[test]
    fn validation_errors() {
        let mut s = tiny();
        s.events.remove(0);
        assert_eq!(
            simulate_parallel(&s, None),
            Err(ScheduleError::NotResident {
                index: 0,
                proc: 1,
                addr: 0
            })
        );
        let mut s = tiny();
        s.outputs[0].1 = 0;
        assert_eq!(
            simulate_parallel(&s, None),
            Err(ScheduleError::OutputMisplaced { addr: 2, owner: 0 })
        );
        let mut s = tiny();
        s.inputs = vec![vec![(0, 0), (1, 0)]];
        assert!(matches!(
            simulate_parallel(&s, None),
            Err(ScheduleError::Imbalance { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let s = tiny();
        assert_eq!(ParSchedule::parse(&s.to_text()).unwrap(), s);
    }
}
