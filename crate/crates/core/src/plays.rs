//! Legality of plays and the access protocol of an arena.
//!
//! A move sequence is legal when every occurrence can be justified by a
//! pending enabler and the three rules hold:
//!
//! * Fork: a move's justifying question is still pending when it is played;
//! * Wait: a question is answered only after every question it justified;
//! * Serial: a question is not played again while an earlier occurrence is pending.
//!
//! Traces carry no justifier links; they are reconstructed by choosing the
//! most recently opened pending enabler.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{Arena, MoveId, MoveKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Fork,
    Wait,
    Serial,
    Justification,
    /// The same port appears twice in one synchronous round.
    DuplicatePort,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The first rule broken and where. For asynchronous plays `index` is the
/// offending occurrence; for synchronous traces it is the round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{rule} violation at index {index}")]
pub struct Violation {
    pub rule: Rule,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("limit exceeded: {what} = {requested} (maximum {max})")]
pub struct LimitExceeded {
    pub what: &'static str,
    pub requested: usize,
    pub max: usize,
}

/// A legal play with reconstructed justifier links.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Play {
    pub moves: Vec<MoveId>,
    pub justifiers: Vec<Option<usize>>,
}

/// Incremental checker over occurrences; keeps the full history.
#[derive(Clone, Debug)]
pub struct PlayChecker<'a> {
    arena: &'a Arena,
    moves: Vec<MoveId>,
    justifiers: Vec<Option<usize>>,
    /// Pending question occurrences in opening order.
    pending: Vec<usize>,
}

impl<'a> PlayChecker<'a> {
    pub fn new(arena: &'a Arena) -> Self {
        PlayChecker { arena, moves: Vec::new(), justifiers: Vec::new(), pending: Vec::new() }
    }

    fn occurred(&self, m: MoveId) -> bool {
        self.moves.contains(&m)
    }

    fn most_recent_pending_enabler(&self, m: MoveId) -> Option<usize> {
        self.pending.iter().rev().copied().find(|&occ| self.arena.enables(self.moves[occ], m))
    }

    fn missing_enabler(&self, m: MoveId) -> Rule {
        if self.arena.enablers(m).iter().any(|e| self.occurred(*e)) {
            Rule::Fork
        } else {
            Rule::Justification
        }
    }

    pub fn step(&mut self, m: MoveId) -> Result<(), Rule> {
        let idx = self.moves.len();
        // A play is one session: nothing follows the answer that closes it.
        if idx > 0 && self.pending.is_empty() {
            return Err(Rule::Fork);
        }
        match self.arena.get(m).kind {
            MoveKind::Q => {
                if self.pending.iter().any(|&occ| self.moves[occ] == m) {
                    return Err(Rule::Serial);
                }
                let just = if self.arena.is_initial(m) {
                    None
                } else {
                    Some(self.most_recent_pending_enabler(m).ok_or_else(|| self.missing_enabler(m))?)
                };
                self.moves.push(m);
                self.justifiers.push(just);
                self.pending.push(idx);
            }
            MoveKind::A => {
                let q = self.most_recent_pending_enabler(m).ok_or_else(|| self.missing_enabler(m))?;
                if self.pending.iter().any(|&occ| self.justifiers[occ] == Some(q)) {
                    return Err(Rule::Wait);
                }
                self.pending.retain(|&occ| occ != q);
                self.moves.push(m);
                self.justifiers.push(Some(q));
            }
        }
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn into_play(self) -> Play {
        Play { moves: self.moves, justifiers: self.justifiers }
    }
}

/// Decides legality of a flat move sequence.
pub fn check_play(arena: &Arena, moves: &[MoveId]) -> Result<Play, Violation> {
    let mut c = PlayChecker::new(arena);
    for (index, &m) in moves.iter().enumerate() {
        c.step(m).map_err(|rule| Violation { rule, index })?;
    }
    Ok(c.into_play())
}

/// History-free protocol configuration: pending questions in opening order,
/// each with the pending question that justified it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProtocolState(pub Vec<(MoveId, Option<MoveId>)>);

impl ProtocolState {
    pub fn is_complete(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_pending(&self, m: MoveId) -> bool {
        self.0.iter().any(|(p, _)| *p == m)
    }

    pub fn step(&self, arena: &Arena, m: MoveId) -> Result<ProtocolState, Rule> {
        let enabler = || self.0.iter().rev().map(|(p, _)| *p).find(|p| arena.enables(*p, m));
        let mut next = self.0.clone();
        match arena.get(m).kind {
            MoveKind::Q => {
                if self.is_pending(m) {
                    return Err(Rule::Serial);
                }
                let parent = if arena.is_initial(m) { None } else { Some(enabler().ok_or(Rule::Justification)?) };
                next.push((m, parent));
            }
            MoveKind::A => {
                let q = enabler().ok_or(Rule::Justification)?;
                if self.0.iter().any(|(_, parent)| *parent == Some(q)) {
                    return Err(Rule::Wait);
                }
                next.retain(|(p, _)| *p != q);
            }
        }
        Ok(ProtocolState(next))
    }

    pub fn summary(&self, arena: &Arena) -> String {
        let names: Vec<&str> = self.0.iter().map(|(m, _)| arena.name(*m)).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// Deterministic automaton recognising exactly the legal plays of an arena.
/// Every state is accepting; complete states have nothing pending.
#[derive(Clone, Debug)]
pub struct ProtocolAutomaton {
    pub arena: Arena,
    pub states: Vec<ProtocolState>,
    pub transitions: Vec<Vec<Option<usize>>>,
}

impl ProtocolAutomaton {
    pub const INITIAL: usize = 0;

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn step(&self, s: usize, m: MoveId) -> Option<usize> {
        self.transitions[s][m.0]
    }

    pub fn is_complete(&self, s: usize) -> bool {
        self.states[s].is_complete()
    }

    pub fn run(&self, moves: &[MoveId]) -> Option<usize> {
        moves.iter().try_fold(Self::INITIAL, |s, &m| self.step(s, m))
    }

    /// Every legal play of length at most `max_len`. The automaton itself
    /// returns to its initial state so that sessions can follow each other;
    /// a play stops at the end of its session.
    pub fn language(&self, max_len: usize) -> BTreeSet<Vec<MoveId>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(Self::INITIAL, Vec::new())];
        while let Some((s, w)) = stack.pop() {
            if w.len() < max_len && (w.is_empty() || !self.is_complete(s)) {
                for m in self.arena.ids() {
                    if let Some(t) = self.step(s, m) {
                        let mut w2 = w.clone();
                        w2.push(m);
                        stack.push((t, w2));
                    }
                }
            }
            out.insert(w);
        }
        out
    }

    /// States reachable by playing every move of `round` in some order.
    pub fn round_successors(&self, from: &BTreeSet<usize>, round: &[MoveId]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let full = (1u64 << round.len()) - 1;
        let mut stack: Vec<(usize, u64)> = from.iter().map(|&s| (s, 0)).collect();
        while let Some((s, used)) = stack.pop() {
            if !seen.insert((s, used)) {
                continue;
            }
            if used == full {
                out.insert(s);
                continue;
            }
            for (i, &m) in round.iter().enumerate() {
                if used & (1 << i) == 0 {
                    if let Some(t) = self.step(s, m) {
                        stack.push((t, used | (1 << i)));
                    }
                }
            }
        }
        out
    }
}

/// Builds the protocol automaton by exploring pending configurations.
pub fn protocol_automaton(arena: &Arena) -> ProtocolAutomaton {
    let mut index: HashMap<ProtocolState, usize> = HashMap::new();
    let mut states = vec![ProtocolState::default()];
    index.insert(ProtocolState::default(), 0);
    let mut transitions: Vec<Vec<Option<usize>>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut row = vec![None; arena.len()];
        for m in arena.ids() {
            if let Ok(next) = states[i].step(arena, m) {
                let id = *index.entry(next.clone()).or_insert_with(|| {
                    states.push(next);
                    states.len() - 1
                });
                row[m.0] = Some(id);
            }
        }
        transitions.push(row);
        i += 1;
    }
    ProtocolAutomaton { arena: arena.clone(), states, transitions }
}

pub const MAX_ENUMERATION_LEN: usize = 14;

/// Brute-force enumeration of legal plays up to `max_len`, using only
/// [`check_play`] on candidate sequences.
pub fn enumerate_plays(arena: &Arena, max_len: usize) -> Result<BTreeSet<Vec<MoveId>>, LimitExceeded> {
    if max_len > MAX_ENUMERATION_LEN {
        return Err(LimitExceeded { what: "max_len", requested: max_len, max: MAX_ENUMERATION_LEN });
    }
    let mut out = BTreeSet::new();
    let mut frontier = vec![Vec::new()];
    while let Some(w) = frontier.pop() {
        if w.len() < max_len {
            for m in arena.ids() {
                let mut w2 = w.clone();
                w2.push(m);
                if check_play(arena, &w2).is_ok() {
                    frontier.push(w2);
                }
            }
        }
        out.insert(w);
    }
    Ok(out)
}

/// Incremental monitor for synchronous traces.
#[derive(Clone, Debug)]
pub struct SyncMonitor<'a> {
    arena: &'a Arena,
    states: BTreeSet<ProtocolState>,
    seen: BTreeSet<MoveId>,
    rounds: usize,
}

impl<'a> SyncMonitor<'a> {
    pub fn new(arena: &'a Arena) -> Self {
        SyncMonitor { arena, states: [ProtocolState::default()].into(), seen: BTreeSet::new(), rounds: 0 }
    }

    /// True when some linearization so far leaves nothing pending.
    pub fn is_complete(&self) -> bool {
        self.states.iter().any(|s| s.is_complete())
    }

    pub fn states(&self) -> &BTreeSet<ProtocolState> {
        &self.states
    }

    /// Would the round be accepted (without committing it)?
    pub fn accepts(&self, round: &[MoveId]) -> bool {
        self.clone().push(round).is_ok()
    }

    pub fn push(&mut self, round: &[MoveId]) -> Result<(), Violation> {
        let index = self.rounds;
        let distinct: BTreeSet<MoveId> = round.iter().copied().collect();
        if distinct.len() != round.len() {
            return Err(Violation { rule: Rule::DuplicatePort, index });
        }
        let mut out = BTreeSet::new();
        let mut worst: Option<(usize, Rule)> = None;
        let mut visited = BTreeSet::new();
        let full = if round.len() >= 64 { u64::MAX } else { (1u64 << round.len()) - 1 };
        let mut stack: Vec<(ProtocolState, u64, usize)> = self.states.iter().map(|s| (s.clone(), 0, 0)).collect();
        while let Some((s, used, depth)) = stack.pop() {
            if used == full {
                out.insert(s);
                continue;
            }
            if !visited.insert((s.clone(), used)) {
                continue;
            }
            for (i, &m) in round.iter().enumerate() {
                if used & (1 << i) != 0 {
                    continue;
                }
                match s.step(self.arena, m) {
                    Ok(t) => stack.push((t, used | (1 << i), depth + 1)),
                    Err(mut rule) => {
                        if rule == Rule::Justification
                            && self.arena.enablers(m).iter().any(|e| {
                                self.seen.contains(e)
                                    || round.iter().enumerate().any(|(j, r)| r == e && used & (1 << j) != 0)
                            })
                        {
                            rule = Rule::Fork;
                        }
                        if worst.is_none_or(|(d, _)| depth >= d) {
                            worst = Some((depth, rule));
                        }
                    }
                }
            }
        }
        self.rounds += 1;
        if out.is_empty() {
            let rule = worst.map(|(_, r)| r).unwrap_or(Rule::Justification);
            return Err(Violation { rule, index });
        }
        self.states = out;
        self.seen.extend(round.iter().copied());
        Ok(())
    }
}

/// Legal iff every round has a linearization (justifiers may occur earlier in
/// the same round) whose concatenation is a legal play.
pub fn check_sync_trace(arena: &Arena, rounds: &[Vec<MoveId>]) -> Result<(), Violation> {
    let mut mon = SyncMonitor::new(arena);
    for r in rounds {
        mon.push(r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_type;

    fn arena(src: &str) -> Arena {
        Arena::of_type(&parse_type(src).unwrap())
    }

    fn ms(a: &Arena, s: &str) -> Vec<MoveId> {
        s.split_whitespace().map(|n| a.by_name(n).unwrap()).collect()
    }

    #[test]
    fn violation_triad() {
        let a = arena("com -> com");
        for m in ["q1", "q2", "a1", "a2"] {
            let v = check_play(&a, &ms(&a, &format!("q1 a1 {m}"))).unwrap_err();
            assert_eq!(v, Violation { rule: Rule::Fork, index: 2 });
        }
        assert_eq!(check_play(&a, &ms(&a, "q1 q2 a1")).unwrap_err(), Violation { rule: Rule::Wait, index: 2 });
        assert_eq!(check_play(&a, &ms(&a, "q1 q2 q2")).unwrap_err(), Violation { rule: Rule::Serial, index: 2 });
        assert!(check_play(&a, &[]).is_ok());
        assert_eq!(check_play(&a, &ms(&a, "a2")).unwrap_err().rule, Rule::Justification);
    }

    #[test]
    fn justifiers_are_reconstructed() {
        let a = arena("com -> com");
        let p = check_play(&a, &ms(&a, "q1 q2 a2 q2 a2 a1")).unwrap();
        assert_eq!(p.justifiers, vec![None, Some(0), Some(1), Some(0), Some(3), Some(0)]);
    }

    #[test]
    fn protocol_state_counts() {
        assert_eq!(protocol_automaton(&arena("com -> com")).num_states(), 3);
        let p = protocol_automaton(&arena("com"));
        assert_eq!(p.num_states(), 2);
        let a = &p.arena;
        let lang = p.language(2);
        let expected: BTreeSet<Vec<MoveId>> = [vec![], ms(a, "q1"), ms(a, "q1 a1")].into();
        assert_eq!(lang, expected);
        assert!(p.is_complete(p.run(&ms(a, "q1 a1")).unwrap()));
    }

    #[test]
    fn enumeration_examples() {
        let a = arena("com -> com");
        let plays = enumerate_plays(&a, 5).unwrap();
        assert!(plays.contains(&ms(&a, "q1 q2 a2 q2 a2")));
        assert!(plays.contains(&ms(&a, "q1 q2 a2 a1")));
        assert!(!plays.contains(&ms(&a, "q1 q2 q2")));
        assert!(enumerate_plays(&a, 15).is_err());
    }

    #[test]
    fn sync_traces() {
        let a = arena("com -> com");
        let r = |s: &str| ms(&a, s);
        assert!(check_sync_trace(&a, &[r("q1 q2"), r("a2 a1")]).is_ok());
        assert!(check_sync_trace(&a, &[r("a1 q1")]).is_ok());
        assert_eq!(check_sync_trace(&a, &[r("a1")]).unwrap_err().index, 0);
        assert_eq!(check_sync_trace(&a, &[r("q1 q1")]).unwrap_err().rule, Rule::DuplicatePort);
        let v = check_sync_trace(&a, &[r("q1"), r("a1"), r("q2")]).unwrap_err();
        assert_eq!(v, Violation { rule: Rule::Fork, index: 2 });
    }
}
