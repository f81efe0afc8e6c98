use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::arena::{Arena, MoveId, Polarity};
use crate::plays::{protocol_automaton, ProtocolAutomaton};

/// A partial deterministic transducer over the moves of an arena. A
/// transition on an O-move reads an input; one on a P-move writes an output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    pub arena: Arena,
    pub initial: usize,
    pub delta: Vec<BTreeMap<MoveId, usize>>,
}

#[derive(Serialize)]
struct JsonTransition<'a> {
    from: usize,
    #[serde(rename = "move")]
    mv: &'a str,
    dir: &'static str,
    to: usize,
}

#[derive(Serialize)]
struct JsonAutomaton<'a> {
    states: usize,
    initial: usize,
    transitions: Vec<JsonTransition<'a>>,
}

impl Automaton {
    pub fn new(arena: Arena, states: usize) -> Self {
        Automaton { arena, initial: 0, delta: vec![BTreeMap::new(); states] }
    }

    /// Builds from `(from, move name, to)` triples.
    pub fn from_edges(arena: Arena, edges: &[(usize, &str, usize)]) -> Self {
        let n = edges.iter().map(|&(a, _, b)| a.max(b) + 1).max().unwrap_or(1);
        let mut a = Automaton::new(arena, n);
        for &(from, name, to) in edges {
            let m = a.arena.by_name(name).unwrap_or_else(|| panic!("no move {name}"));
            let prev = a.delta[from].insert(m, to);
            assert!(prev.is_none(), "duplicate transition {from} -{name}->");
        }
        a
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(|d| d.len()).sum()
    }

    pub fn step(&self, s: usize, m: MoveId) -> Option<usize> {
        self.delta[s].get(&m).copied()
    }

    pub fn run(&self, word: &[MoveId]) -> Option<usize> {
        word.iter().try_fold(self.initial, |s, &m| self.step(s, m))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, MoveId, usize)> + '_ {
        self.delta.iter().enumerate().flat_map(|(s, d)| d.iter().map(move |(&m, &t)| (s, m, t)))
    }

    pub fn is_output(&self, m: MoveId) -> bool {
        self.arena.get(m).polarity == Polarity::P
    }

    /// Every path from the initial state of length at most `max_len`.
    pub fn language(&self, max_len: usize) -> BTreeSet<Vec<MoveId>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(self.initial, Vec::new())];
        while let Some((s, w)) = stack.pop() {
            if w.len() < max_len {
                for (&m, &t) in &self.delta[s] {
                    let mut w2 = w.clone();
                    w2.push(m);
                    stack.push((t, w2));
                }
            }
            out.insert(w);
        }
        out
    }

    /// Drops unreachable states and renumbers in BFS order from the initial state.
    pub fn trim(&self) -> Automaton {
        let mut index = HashMap::new();
        let mut order = vec![self.initial];
        index.insert(self.initial, 0usize);
        let mut i = 0;
        while i < order.len() {
            for &t in self.delta[order[i]].values() {
                index.entry(t).or_insert_with(|| {
                    order.push(t);
                    order.len() - 1
                });
            }
            i += 1;
        }
        let delta = order.iter().map(|&s| self.delta[s].iter().map(|(&m, t)| (m, index[t])).collect()).collect();
        Automaton { arena: self.arena.clone(), initial: 0, delta }
    }

    /// Language-minimal equivalent: every state accepts, so states are
    /// distinguished only by which moves they allow, transitively.
    pub fn minimize(&self) -> Automaton {
        let a = self.trim();
        let n = a.num_states();
        let mut class: Vec<usize> = vec![0; n];
        let mut count = 1;
        loop {
            let mut sigs: HashMap<(usize, Vec<(MoveId, usize)>), usize> = HashMap::new();
            let mut next = vec![0; n];
            for s in 0..n {
                let sig = (class[s], a.delta[s].iter().map(|(&m, &t)| (m, class[t])).collect());
                let len = sigs.len();
                next[s] = *sigs.entry(sig).or_insert(len);
            }
            let new_count = sigs.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        let mut delta = vec![BTreeMap::new(); count];
        for s in 0..n {
            for (&m, &t) in &a.delta[s] {
                delta[class[s]].insert(m, class[t]);
            }
        }
        Automaton { arena: a.arena, initial: class[0], delta }.trim()
    }

    /// Same automaton over another arena; `map[m]` is the new id of move `m`.
    pub fn relabel(&self, arena: Arena, map: &[MoveId]) -> Automaton {
        let delta = self.delta.iter().map(|d| d.iter().map(|(m, &t)| (map[m.0], t)).collect()).collect();
        Automaton { arena, initial: self.initial, delta }
    }

    /// Reachable pairs of automaton state and protocol state; fails with the
    /// first path that leaves the protocol.
    fn protocol_product(&self, p: &ProtocolAutomaton) -> Result<Vec<(usize, usize)>, Vec<MoveId>> {
        let mut seen = HashMap::new();
        seen.insert((self.initial, ProtocolAutomaton::INITIAL), Vec::new());
        let mut queue = VecDeque::from([(self.initial, ProtocolAutomaton::INITIAL)]);
        let mut order = Vec::new();
        while let Some((s, q)) = queue.pop_front() {
            order.push((s, q));
            let path = seen[&(s, q)].clone();
            for (&m, &t) in &self.delta[s] {
                let mut p2 = path.clone();
                p2.push(m);
                let Some(q2) = p.step(q, m) else { return Err(p2) };
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry((t, q2)) {
                    e.insert(p2);
                    queue.push_back((t, q2));
                }
            }
        }
        Ok(order)
    }

    /// Every path spells a legal play. Returns the shortest offending path.
    pub fn check_protocol(&self) -> Result<(), Vec<MoveId>> {
        self.protocol_product(&protocol_automaton(&self.arena)).map(|_| ())
    }

    /// Every complete play ends in the initial state.
    pub fn check_reset(&self) -> bool {
        let p = protocol_automaton(&self.arena);
        match self.protocol_product(&p) {
            Ok(pairs) => pairs.iter().all(|&(s, q)| !p.is_complete(q) || s == self.initial),
            Err(_) => false,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph strategy {\n  rankdir=LR;\n");
        s += &format!("  init [shape=point];\n  init -> s{};\n", self.initial);
        for st in 0..self.num_states() {
            s += &format!("  s{st} [shape=circle,label=\"{st}\"];\n");
        }
        for (a, m, b) in self.edges() {
            let dir = if self.is_output(m) { "!" } else { "?" };
            s += &format!("  s{a} -> s{b} [label=\"{}{dir}\"];\n", self.arena.name(m));
        }
        s + "}\n"
    }

    pub fn to_json(&self) -> serde_json::Value {
        let transitions = self
            .edges()
            .map(|(from, m, to)| JsonTransition {
                from,
                mv: self.arena.name(m),
                dir: if self.is_output(m) { "out" } else { "in" },
                to,
            })
            .collect();
        serde_json::to_value(JsonAutomaton { states: self.num_states(), initial: self.initial, transitions })
            .expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_type;

    #[test]
    fn minimize_merges_duplicate_cycles() {
        let arena = Arena::of_type(&parse_type("com").unwrap());
        let a = Automaton::from_edges(arena, &[(0, "q1", 1), (1, "a1", 2), (2, "q1", 3), (3, "a1", 0)]);
        let m = a.minimize();
        assert_eq!(m.num_states(), 2);
        assert_eq!(a.language(6), m.language(6));
        assert!(a.check_protocol().is_ok());
        assert!(!a.check_reset());
        assert!(m.check_reset());
    }

    #[test]
    fn protocol_check_reports_path() {
        let arena = Arena::of_type(&parse_type("com").unwrap());
        let a = Automaton::from_edges(arena, &[(0, "q1", 1), (1, "q1", 0)]);
        let bad = a.check_protocol().unwrap_err();
        assert_eq!(bad.len(), 2);
    }
}
