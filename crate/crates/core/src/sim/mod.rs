//! Cycle-accurate simulation of wired synchronous machines, with a protocol
//! monitor on every instance boundary and on the interface.

mod compile;
mod design;
mod env;
mod vcd;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::arena::MoveId;
use crate::plays::{SyncMonitor, Violation};
use crate::syncmin::MoveSet;

pub use compile::{compile, interface_type};
pub use design::{am_arena, am_machine, constant_machine, parse_wiring, Builder, Design, Device, Endpoint, Instance, Kind, Net};
pub use env::{parse_trace, resolve_rounds, Environment, Offer, RandomEnv, Reactive, Script};
pub use vcd::write_vcd;


#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("wiring line {line}: {msg}")]
    Wiring { line: usize, msg: String },
    #[error("net driven by several ports: {}", .0.join(", "))]
    MultipleDrivers(Vec<String>),
    #[error("unknown interface port `{0}`")]
    UnknownPort(String),
    #[error("combinational loop: nets did not settle in cycle {cycle}")]
    CombinationalLoop { cycle: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SimStatus {
    /// Stimulus consumed and nothing pending.
    Completed,
    /// Quiescent with questions pending, at the given cycle.
    Deadlock(usize),
    ProtocolViolation { violation: Violation, boundary: String },
    /// Both clients of an activation manager opened a session in one cycle.
    Race { cycle: usize, ports: Vec<String> },
}

impl fmt::Display for SimStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimStatus::Completed => f.write_str("Completed"),
            SimStatus::Deadlock(c) => write!(f, "Deadlock at cycle {c}"),
            SimStatus::ProtocolViolation { violation, boundary } => {
                write!(f, "ProtocolViolation: {violation} on {boundary}")
            }
            SimStatus::Race { cycle, ports } => write!(f, "Race at cycle {cycle} on {{{}}}", ports.join(",")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub status: SimStatus,
    /// Names of the nets pulsed in each cycle.
    pub trace: Vec<Vec<String>>,
    /// The same, as net indices.
    #[serde(skip)]
    pub nets: Vec<Vec<usize>>,
    /// Interface moves pulsed in each cycle.
    #[serde(skip)]
    pub iface: Vec<Vec<MoveId>>,
    pub cycles: usize,
    /// Every instance is back in its initial state.
    pub at_reset: bool,
}

impl SimReport {
    /// The observed moves, round by round, restricted to `keep`.
    pub fn restricted(&self, keep: impl Fn(&str) -> bool) -> Vec<Vec<String>> {
        self.trace
            .iter()
            .map(|r| r.iter().filter(|n| keep(n)).cloned().collect::<Vec<_>>())
            .filter(|r| !r.is_empty())
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("status: {}\ncycles: {}\n", self.status, self.cycles);
        for (k, r) in self.trace.iter().enumerate() {
            s += &format!("{:>4}: {{{}}}\n", k + 1, r.join(", "));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Whether `moves` is a linearization of `rounds`: consecutive chunks of it
/// are exactly the rounds, as sets.
pub fn is_linearization(rounds: &[Vec<String>], moves: &[&str]) -> bool {
    let mut at = 0;
    for r in rounds {
        let end = at + r.len();
        if end > moves.len() {
            return false;
        }
        let a: BTreeSet<&str> = r.iter().map(String::as_str).collect();
        let b: BTreeSet<&str> = moves[at..end].iter().copied().collect();
        if a != b {
            return false;
        }
        at = end;
    }
    at == moves.len()
}

#[derive(Clone, Debug)]
enum DevState {
    State(usize),
    Regs(Vec<bool>),
}

/// Output and next state of an instance on an input set. A machine with no
/// transition on exactly these inputs takes its largest defined subset.
fn react(inst: &Instance, st: &DevState, ins: &MoveSet) -> (MoveSet, DevState) {
    match (&inst.device, st) {
        (Device::Machine(m), DevState::State(s)) => {
            let row = &m.trans[*s];
            let hit = row.get_key_value(ins).or_else(|| {
                row.iter().filter(|(k, _)| k.is_subset(ins)).max_by_key(|(k, _)| k.len())
            });
            match hit {
                Some((_, (o, t))) => (o.clone(), DevState::State(*t)),
                None => (MoveSet::new(), st.clone()),
            }
        }
        (Device::Netlist(n), DevState::Regs(r)) => {
            let bits: Vec<bool> =
                n.inputs.iter().map(|p| ins.contains(&inst.arena.by_name(&p.move_name).unwrap())).collect();
            let (outs, next) = n.eval(&bits, r);
            let o = n
                .outputs
                .iter()
                .zip(outs)
                .filter(|(_, v)| *v)
                .map(|(p, _)| inst.arena.by_name(&p.move_name).unwrap())
                .collect();
            (o, DevState::Regs(next))
        }
        _ => unreachable!("device and state kinds agree"),
    }
}

/// What an instance has done so far within the current cycle.
#[derive(Clone, Debug)]
struct Progress {
    seen: MoveSet,
    out: MoveSet,
    state: DevState,
    /// Inputs whose reaction would pulse an output a second time; they are
    /// latched and taken next cycle.
    held: MoveSet,
}

/// Extends an instance's reaction to a grown input set. A transition on the
/// whole set from the cycle-start state is preferred; otherwise the newly
/// arrived inputs are taken from wherever the machine has got to, so inputs
/// caused by the machine's own outputs are handled in causal order.
fn advance(inst: &Instance, start: &DevState, p: &Progress, ins: &MoveSet) -> Progress {
    if *ins == p.seen {
        return p.clone();
    }
    let whole = match (&inst.device, start) {
        (Device::Machine(m), DevState::State(s)) => m.trans[*s].contains_key(ins),
        _ => true,
    };
    if whole || p.seen.is_empty() {
        let (out, state) = react(inst, start, ins);
        return Progress { seen: ins.clone(), out, state, held: MoveSet::new() };
    }
    let fresh: MoveSet = ins.difference(&p.seen).copied().collect();
    let (o, state) = react(inst, &p.state, &fresh);
    if !o.is_disjoint(&p.out) {
        return Progress { seen: ins.clone(), held: p.held.union(&fresh).copied().collect(), ..p.clone() };
    }
    Progress { seen: ins.clone(), out: p.out.union(&o).copied().collect(), state, held: p.held.clone() }
}

fn initial_state(inst: &Instance) -> DevState {
    match &inst.device {
        Device::Machine(m) => DevState::State(m.initial),
        Device::Netlist(n) => DevState::Regs((0..n.registers).map(|r| r == n.initial).collect()),
    }
}

fn at_initial(inst: &Instance, st: &DevState) -> bool {
    match (&inst.device, st) {
        (Device::Machine(m), DevState::State(s)) => *s == m.initial,
        (Device::Netlist(n), DevState::Regs(r)) => r.iter().enumerate().all(|(k, b)| *b == (k == n.initial)),
        _ => false,
    }
}

/// Runs `design` against `env` for at most `max_cycles` cycles.
///
/// Each cycle the environment's inputs are applied, instance outputs are
/// recomputed from the cycle-start states until the nets settle, and the
/// pulsed nets form one round. The run stops on completion, on a quiescent
/// cycle with questions pending (deadlock), on a protocol violation at any
/// boundary, or when both clients of a manager open sessions in one cycle.
pub fn simulate(design: &Design, env: &mut dyn Environment, max_cycles: usize) -> Result<SimReport, SimError> {
    let n_inst = design.instances.len();
    let mut states: Vec<DevState> = design.instances.iter().map(initial_state).collect();
    let mut top_mon = SyncMonitor::new(&design.iface);
    let mut mons: Vec<SyncMonitor> = design.instances.iter().map(|i| SyncMonitor::new(&i.arena)).collect();
    let mut report =
        SimReport { status: SimStatus::Completed, trace: vec![], nets: vec![], iface: vec![], cycles: 0, at_reset: true };
    let settle_limit = 2 * design.nets.len() + 4;
    let mut latched: Vec<MoveSet> = vec![MoveSet::new(); n_inst];

    for cycle in 1..=max_cycles {
        let offer = env.offer(&design.iface, &top_mon);
        let env_in: MoveSet = match &offer {
            Offer::Inputs(s) => s.clone(),
            _ => MoveSet::new(),
        };
        let env_nets: BTreeSet<usize> = env_in.iter().map(|m| design.net_of_top(*m)).collect();

        let idle = |st: &DevState| Progress { seen: MoveSet::new(), out: MoveSet::new(), state: st.clone(), held: MoveSet::new() };
        let mut prog: Vec<Progress> = states.iter().map(idle).collect();
        let arrived = |i: usize, pulsed: &BTreeSet<usize>| -> MoveSet {
            inputs_of(design, i, pulsed).union(&latched[i]).copied().collect()
        };
        let mut pulsed = env_nets.clone();
        let mut settled = false;
        for _ in 0..settle_limit {
            let next: Vec<Progress> = (0..n_inst)
                .map(|i| advance(&design.instances[i], &states[i], &prog[i], &arrived(i, &pulsed)))
                .collect();
            let mut now = env_nets.clone();
            for (i, p) in next.iter().enumerate() {
                now.extend(p.out.iter().map(|m| design.net_of(i, *m)));
            }
            prog = next;
            if now == pulsed {
                settled = true;
                break;
            }
            pulsed = now;
        }
        if !settled {
            return Err(SimError::CombinationalLoop { cycle });
        }
        let taken: Vec<MoveSet> = (0..n_inst).map(|i| arrived(i, &pulsed).difference(&prog[i].held).copied().collect()).collect();
        let raced = race(design, &states, &taken, cycle);
        for ((st, l), p) in states.iter_mut().zip(latched.iter_mut()).zip(prog) {
            *st = p.state;
            *l = p.held;
        }

        let iface_round: Vec<MoveId> = design.iface.ids().filter(|m| pulsed.contains(&design.net_of_top(*m))).collect();
        report.cycles = cycle;
        report.nets.push(pulsed.iter().copied().collect());
        report.trace.push(pulsed.iter().map(|n| design.nets[*n].name.clone()).collect());
        report.iface.push(iface_round.clone());

        if let Some(status) = raced {
            report.status = status;
            break;
        }
        if let Err(v) = top_mon.push(&iface_round) {
            report.status = SimStatus::ProtocolViolation { violation: v, boundary: "top".into() };
            break;
        }
        let mut violation = None;
        for (i, mon) in mons.iter_mut().enumerate() {
            let round: Vec<MoveId> =
                design.instances[i].arena.ids().filter(|m| pulsed.contains(&design.net_of(i, *m))).collect();
            if let Err(v) = mon.push(&round) {
                violation = Some(SimStatus::ProtocolViolation { violation: v, boundary: design.instances[i].name.clone() });
                break;
            }
        }
        if let Some(v) = violation {
            report.status = v;
            break;
        }
        env.observe(&design.iface, &iface_round);

        let pending = !top_mon.is_complete() || mons.iter().any(|m| !m.is_complete());
        let quiet = pulsed.is_empty() && latched.iter().all(|l| l.is_empty());
        if quiet && !matches!(offer, Offer::Inputs(_)) {
            // A cycle in which nobody acts only detects the outcome.
            report.trace.pop();
            report.nets.pop();
            report.iface.pop();
            report.cycles -= 1;
        }
        match offer {
            Offer::Done if !pending => {
                report.status = SimStatus::Completed;
                break;
            }
            Offer::Done | Offer::Wait if quiet => {
                report.status = SimStatus::Deadlock(cycle);
                break;
            }
            Offer::Blocked(v) if quiet => {
                report.status = if pending {
                    SimStatus::Deadlock(cycle)
                } else {
                    SimStatus::ProtocolViolation { violation: v, boundary: "stimulus".into() }
                };
                break;
            }
            _ => {}
        }
        if cycle == max_cycles {
            report.status = SimStatus::Deadlock(max_cycles);
        }
    }
    report.at_reset = design.instances.iter().zip(&states).all(|(i, s)| at_initial(i, s));
    Ok(report)
}

fn inputs_of(design: &Design, i: usize, pulsed: &BTreeSet<usize>) -> MoveSet {
    let inst = &design.instances[i];
    inst.arena.inputs().filter(|m| pulsed.contains(&design.net_of(i, *m))).collect()
}

/// Both projections of a manager receive their initial question in a cycle
/// whose inputs the manager cannot take together.
fn race(design: &Design, states: &[DevState], taken: &[MoveSet], cycle: usize) -> Option<SimStatus> {
    for (i, inst) in design.instances.iter().enumerate() {
        let Kind::Diagonal(t) = &inst.kind else { continue };
        let n = t.base_occurrences();
        let hits: Vec<MoveId> = inst
            .arena
            .initial_moves()
            .filter(|m| inst.arena.get(*m).occurrence < 2 * n && taken[i].contains(m))
            .collect();
        let sides: BTreeSet<usize> = hits.iter().map(|m| inst.arena.get(*m).occurrence / n).collect();
        let accepted = match (&inst.device, &states[i]) {
            (Device::Machine(m), DevState::State(s)) => m.step(*s, &taken[i]).is_some(),
            _ => false,
        };
        if sides.len() > 1 && !accepted {
            let ports = hits.iter().map(|m| design.nets[design.net_of(i, *m)].name.clone()).collect();
            return Some(SimStatus::Race { cycle, ports });
        }
    }
    None
}

#[cfg(test)]
mod tests;
