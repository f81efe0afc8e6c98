use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{MoveId, Polarity};
use crate::syncmin::{MoveSet, SyncMachine};

use super::logic::{minimize_sop, sop_expr, Expr};
use super::sanitize;

/// Two-level output logic is minimized up to this many relevant inputs.
pub const MAX_QM_VARS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("combinational cycle through {}", .0.join(" -> "))]
    CombinationalCycle(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    /// Move name in the arena this port realizes.
    pub move_name: String,
    pub dir: Direction,
}

/// One-hot realization of a synchronous machine. Expressions refer to
/// inputs by index into `inputs`, registers by state number, and wires by
/// index into `wires`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
    pub registers: usize,
    pub initial: usize,
    pub wires: Vec<(String, Expr)>,
    pub output_logic: Vec<Expr>,
    pub next_state: Vec<Expr>,
}

fn port(m: &crate::arena::Move) -> Port {
    Port {
        name: sanitize(&m.name.to_uppercase()),
        move_name: m.name.clone(),
        dir: if m.polarity == Polarity::O { Direction::Input } else { Direction::Output },
    }
}

/// Exact match of an input set over all inputs.
fn exact(set: &MoveSet, inputs: &[MoveId]) -> Expr {
    Expr::and(
        inputs
            .iter()
            .enumerate()
            .map(|(k, m)| if set.contains(m) { Expr::Input(k) } else { Expr::not(Expr::Input(k)) })
            .collect(),
    )
}

/// Output `o` as a function of the inputs relevant in state `s`; input sets
/// the machine leaves unspecified are don't-cares, except the empty set.
fn output_in_state(m: &SyncMachine, s: usize, o: MoveId, inputs: &[MoveId]) -> Expr {
    let row = &m.trans[s];
    let relevant: Vec<MoveId> = row.keys().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let var = |mv: &MoveId| Expr::Input(inputs.iter().position(|x| x == mv).unwrap());
    if relevant.len() > MAX_QM_VARS {
        let terms = row.iter().filter(|(_, (out, _))| out.contains(&o)).map(|(i, _)| exact(i, inputs)).collect();
        return Expr::or(terms);
    }
    let code = |set: &MoveSet| -> u32 {
        relevant.iter().enumerate().filter(|(_, m)| set.contains(m)).map(|(k, _)| 1u32 << k).sum()
    };
    let specified: BTreeMap<u32, bool> = row.iter().map(|(i, (out, _))| (code(i), out.contains(&o))).collect();
    let on: Vec<u32> = specified.iter().filter(|(_, v)| **v).map(|(k, _)| *k).collect();
    let dc: Vec<u32> = (1..1u32 << relevant.len()).filter(|k| !specified.contains_key(k)).collect();
    let vars: Vec<Expr> = relevant.iter().map(var).collect();
    sop_expr(&minimize_sop(relevant.len(), &on, &dc), &vars)
}

/// One register per state (none for a one-state machine); outputs are pulses
/// in the cycle their transition fires; unspecified input sets hold the state.
pub fn to_netlist(m: &SyncMachine) -> Result<Netlist, BackendError> {
    let inputs: Vec<MoveId> = m.arena.inputs().collect();
    let outputs: Vec<MoveId> = m.arena.outputs().collect();
    let comb = m.is_combinational();
    let reg = |s: usize| if comb { Expr::Const(true) } else { Expr::Reg(s) };
    let output_logic = outputs
        .iter()
        .map(|&o| Expr::or((0..m.num_states()).map(|s| Expr::and(vec![reg(s), output_in_state(m, s, o, &inputs)])).collect()))
        .collect();
    let next_state = if comb {
        Vec::new()
    } else {
        (0..m.num_states())
            .map(|t| {
                let mut terms = Vec::new();
                let mut leave = Vec::new();
                for (s, row) in m.trans.iter().enumerate() {
                    for (i, (_, to)) in row {
                        if *to == t && s != t {
                            terms.push(Expr::and(vec![Expr::Reg(s), exact(i, &inputs)]));
                        }
                        if s == t && *to != t {
                            leave.push(exact(i, &inputs));
                        }
                    }
                }
                terms.push(Expr::and(vec![Expr::Reg(t), Expr::not(Expr::or(leave))]));
                Expr::or(terms)
            })
            .collect()
    };
    let n = Netlist {
        inputs: inputs.iter().map(|&i| port(m.arena.get(i))).collect(),
        outputs: outputs.iter().map(|&o| port(m.arena.get(o))).collect(),
        registers: if comb { 0 } else { m.num_states() },
        initial: m.initial,
        wires: Vec::new(),
        output_logic,
        next_state,
    };
    n.check_acyclic()?;
    Ok(n)
}

impl Netlist {
    pub fn is_combinational(&self) -> bool {
        self.registers == 0
    }

    /// Wires must be ordered by dependency: no wire depends on itself.
    pub fn check_acyclic(&self) -> Result<(), BackendError> {
        fn visit(n: &Netlist, w: usize, stack: &mut Vec<usize>, done: &mut BTreeSet<usize>) -> Result<(), BackendError> {
            if done.contains(&w) {
                return Ok(());
            }
            if let Some(pos) = stack.iter().position(|x| *x == w) {
                let mut path: Vec<String> = stack[pos..].iter().map(|k| n.wires[*k].0.clone()).collect();
                path.push(n.wires[w].0.clone());
                return Err(BackendError::CombinationalCycle(path));
            }
            stack.push(w);
            let mut deps = BTreeSet::new();
            n.wires[w].1.wires(&mut deps);
            for d in deps {
                visit(n, d, stack, done)?;
            }
            stack.pop();
            done.insert(w);
            Ok(())
        }
        let mut done = BTreeSet::new();
        for w in 0..self.wires.len() {
            visit(self, w, &mut Vec::new(), &mut done)?;
        }
        Ok(())
    }

    fn eval_wires(&self, inputs: &[bool], regs: &[bool]) -> Vec<bool> {
        // Fixpoint over wires; acyclic nets settle within |wires| passes.
        let mut wires = vec![false; self.wires.len()];
        for _ in 0..=self.wires.len() {
            let next: Vec<bool> = self.wires.iter().map(|(_, e)| e.eval(inputs, regs, &wires)).collect();
            if next == wires {
                break;
            }
            wires = next;
        }
        wires
    }

    /// Outputs and next register values for one clock cycle.
    pub fn eval(&self, inputs: &[bool], regs: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let wires = self.eval_wires(inputs, regs);
        let outs = self.output_logic.iter().map(|e| e.eval(inputs, regs, &wires)).collect();
        let next = self.next_state.iter().map(|e| e.eval(inputs, regs, &wires)).collect();
        (outs, next)
    }

    pub fn gate_count(&self) -> usize {
        self.output_logic.iter().chain(&self.next_state).chain(self.wires.iter().map(|(_, e)| e)).map(Expr::gate_count).sum()
    }
}

/// Cycle-by-cycle interpreter for a netlist.
#[derive(Clone, Debug)]
pub struct NetlistSim<'a> {
    net: &'a Netlist,
    regs: Vec<bool>,
}

impl<'a> NetlistSim<'a> {
    pub fn new(net: &'a Netlist) -> Self {
        let mut s = NetlistSim { net, regs: Vec::new() };
        s.reset();
        s
    }

    pub fn reset(&mut self) {
        self.regs = (0..self.net.registers).map(|r| r == self.net.initial).collect();
    }

    pub fn registers(&self) -> &[bool] {
        &self.regs
    }

    /// Applies one cycle of input pulses (by port name) and returns the
    /// names of the output ports pulsed.
    pub fn cycle(&mut self, pulsed: &BTreeSet<String>) -> BTreeSet<String> {
        let inputs: Vec<bool> = self.net.inputs.iter().map(|p| pulsed.contains(&p.move_name)).collect();
        let (outs, next) = self.net.eval(&inputs, &self.regs);
        self.regs = next;
        self.net.outputs.iter().zip(outs).filter(|(_, v)| *v).map(|(p, _)| p.move_name.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plays::protocol_automaton;
    use crate::strategy::denote_constant;
    use crate::syncmin::{minimize_under_protocol, round_abstract};
    use crate::syntax::Constant;

    fn machine(c: Constant) -> SyncMachine {
        let m = round_abstract(&denote_constant(c).automaton).unwrap();
        minimize_under_protocol(&m, &protocol_automaton(&m.arena))
    }

    #[test]
    fn true_is_a_wire() {
        let n = to_netlist(&machine(Constant::True)).unwrap();
        assert_eq!(n.registers, 0);
        let t = n.outputs.iter().position(|p| p.name == "T1").unwrap();
        assert_eq!(n.output_logic[t], Expr::Input(0));
    }

    #[test]
    fn seq_is_three_wires() {
        let n = to_netlist(&machine(Constant::Seq)).unwrap();
        assert!(n.is_combinational());
        let find = |name: &str| n.inputs.iter().position(|p| p.name == name).unwrap();
        for (out, inp) in [("Q2", "Q1"), ("Q3", "A2"), ("A1", "A3")] {
            let k = n.outputs.iter().position(|p| p.name == out).unwrap();
            assert_eq!(n.output_logic[k], Expr::Input(find(inp)), "{out}");
        }
    }

    #[test]
    fn sequential_machine_agrees_with_netlist() {
        assert_eq!(machine(Constant::While).num_states(), 1);
        let m = machine(Constant::Newvar);
        let n = to_netlist(&m).unwrap();
        assert_eq!(n.registers, m.num_states());
        let mut sim = NetlistSim::new(&n);
        let mut s = m.initial;
        for round in [["q1"], ["q3"], ["wt3"], ["q3"], ["a2"], ["q1"], ["q3"]] {
            let set: MoveSet = round.iter().map(|x| m.arena.by_name(x).unwrap()).collect();
            let (o, t) = m.step_or_stay(s, &set);
            s = t;
            let names: BTreeSet<String> = round.iter().map(|x| x.to_string()).collect();
            let expect: BTreeSet<String> = o.iter().map(|x| m.arena.name(*x).to_string()).collect();
            assert_eq!(sim.cycle(&names), expect);
        }
    }

    #[test]
    fn cycles_are_reported() {
        let mut n = to_netlist(&machine(Constant::Skip)).unwrap();
        n.wires = vec![("w0".into(), Expr::Wire(1)), ("w1".into(), Expr::Wire(0))];
        assert!(matches!(n.check_acyclic(), Err(BackendError::CombinationalCycle(p)) if p.len() == 3));
    }
}
