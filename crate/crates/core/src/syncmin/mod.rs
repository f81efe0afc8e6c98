//! Synchronous machines: round abstraction of asynchronous transducers and
//! minimization, optionally exploiting protocol-illegal inputs as don't-cares.

mod abstraction;
mod minimize;
mod protocol;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{Arena, MoveId};
use crate::plays::LimitExceeded;

pub use abstraction::{round_abstract, round_abstract_strict};
pub use minimize::minimize;
pub use protocol::{equivalent_under_protocol, minimize_under_protocol, Difference, MAX_EQUIV_LEN};

/// The ports pulsed in one clock cycle.
pub type MoveSet = BTreeSet<MoveId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyncError {
    #[error("round abstraction is not confluent at state {state} on inputs {{{inputs}}}")]
    NonConfluent { state: usize, inputs: String },
    #[error("machines are over different arenas")]
    ArenaMismatch,
    #[error(transparent)]
    LimitExceeded(#[from] LimitExceeded),
}

/// Mealy machine over sets of moves. An input set with no transition leaves
/// the state unchanged and emits nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncMachine {
    pub arena: Arena,
    pub initial: usize,
    pub trans: Vec<BTreeMap<MoveSet, (MoveSet, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct JsonTransition {
    from: usize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    to: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonMachine {
    arena: Arena,
    states: usize,
    initial: usize,
    combinational: bool,
    transitions: Vec<JsonTransition>,
}

impl SyncMachine {
    pub fn new(arena: Arena, states: usize) -> Self {
        SyncMachine { arena, initial: 0, trans: vec![BTreeMap::new(); states] }
    }

    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.trans.iter().map(|t| t.len()).sum()
    }

    /// One state: realizable with wires and gates alone.
    pub fn is_combinational(&self) -> bool {
        self.num_states() == 1
    }

    pub fn step(&self, s: usize, inputs: &MoveSet) -> Option<(&MoveSet, usize)> {
        self.trans[s].get(inputs).map(|(o, t)| (o, *t))
    }

    /// Like [`step`](Self::step) but with the stay-silent default.
    pub fn step_or_stay(&self, s: usize, inputs: &MoveSet) -> (MoveSet, usize) {
        match self.step(s, inputs) {
            Some((o, t)) => (o.clone(), t),
            None => (MoveSet::new(), s),
        }
    }

    /// Runs a sequence of input rounds, returning the output rounds.
    pub fn run(&self, rounds: &[MoveSet]) -> Vec<MoveSet> {
        let mut s = self.initial;
        rounds
            .iter()
            .map(|i| {
                let (o, t) = self.step_or_stay(s, i);
                s = t;
                o
            })
            .collect()
    }

    pub fn inputs(&self) -> Vec<MoveId> {
        self.arena.inputs().collect()
    }

    pub fn outputs(&self) -> Vec<MoveId> {
        self.arena.outputs().collect()
    }

    pub fn set_names(&self, set: &MoveSet) -> String {
        set.iter().map(|m| self.arena.name(*m)).collect::<Vec<_>>().join(",")
    }

    pub(crate) fn parse_set(&self, names: &[String]) -> Option<MoveSet> {
        names.iter().map(|n| self.arena.by_name(n)).collect()
    }

    /// Drops unreachable states, renumbering in BFS order.
    pub fn trim(&self) -> SyncMachine {
        let mut index = BTreeMap::new();
        let mut order = vec![self.initial];
        index.insert(self.initial, 0usize);
        let mut i = 0;
        while i < order.len() {
            for (_, t) in self.trans[order[i]].values() {
                if !index.contains_key(t) {
                    index.insert(*t, order.len());
                    order.push(*t);
                }
            }
            i += 1;
        }
        let trans = order
            .iter()
            .map(|&s| self.trans[s].iter().map(|(i, (o, t))| (i.clone(), (o.clone(), index[t]))).collect())
            .collect();
        SyncMachine { arena: self.arena.clone(), initial: 0, trans }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph sync {\n  rankdir=LR;\n");
        s += &format!("  init [shape=point];\n  init -> s{};\n", self.initial);
        for st in 0..self.num_states() {
            s += &format!("  s{st} [shape=circle,label=\"{st}\"];\n");
        }
        for (from, row) in self.trans.iter().enumerate() {
            for (i, (o, to)) in row {
                s += &format!("  s{from} -> s{to} [label=\"{{{}}}/{{{}}}\"];\n", self.set_names(i), self.set_names(o));
            }
        }
        s + "}\n"
    }

    pub fn to_json(&self) -> String {
        let names = |set: &MoveSet| set.iter().map(|m| self.arena.name(*m).to_string()).collect();
        let transitions = self
            .trans
            .iter()
            .enumerate()
            .flat_map(|(from, row)| {
                row.iter().map(move |(i, (o, to))| JsonTransition { from, inputs: names(i), outputs: names(o), to: *to })
            })
            .collect();
        let j = JsonMachine {
            arena: self.arena.clone(),
            states: self.num_states(),
            initial: self.initial,
            combinational: self.is_combinational(),
            transitions,
        };
        serde_json::to_string_pretty(&j).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<SyncMachine, String> {
        let j: JsonMachine = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut m = SyncMachine::new(j.arena, j.states);
        m.initial = j.initial;
        for t in j.transitions {
            let i = m.parse_set(&t.inputs).ok_or("unknown port")?;
            let o = m.parse_set(&t.outputs).ok_or("unknown port")?;
            if t.from >= j.states || t.to >= j.states {
                return Err("state out of range".into());
            }
            m.trans[t.from].insert(i, (o, t.to));
        }
        Ok(m)
    }
}
