use std::collections::VecDeque;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::arena::{Arena, MoveId, MoveKind, Polarity};
use crate::plays::{SyncMonitor, Violation};
use crate::syncmin::MoveSet;

use super::SimError;

/// What the environment does in a cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Offer {
    /// Pulse these interface inputs (possibly none: an idle cycle).
    Inputs(MoveSet),
    /// Waiting for the device; the stated violation is what presenting the
    /// next scripted round now would cause.
    Blocked(Violation),
    /// Waiting for the device.
    Wait,
    /// Nothing more to present.
    Done,
}

/// Drives the O-moves of a design's interface.
pub trait Environment {
    fn offer(&mut self, iface: &Arena, monitor: &SyncMonitor) -> Offer;

    /// The complete interface round of the cycle just simulated.
    fn observe(&mut self, _iface: &Arena, _round: &[MoveId]) {}
}

/// A fixed list of input rounds. Guarded scripts hold a round back until
/// the interface monitor accepts it; forced scripts present one round per
/// cycle regardless.
#[derive(Clone, Debug)]
pub struct Script {
    rounds: VecDeque<MoveSet>,
    forced: bool,
}

impl Script {
    pub fn new(rounds: Vec<MoveSet>, forced: bool) -> Script {
        Script { rounds: rounds.into(), forced }
    }
}

impl Environment for Script {
    fn offer(&mut self, _iface: &Arena, monitor: &SyncMonitor) -> Offer {
        let Some(head) = self.rounds.front() else { return Offer::Done };
        let moves: Vec<MoveId> = head.iter().copied().collect();
        if !self.forced {
            let mut probe = monitor.clone();
            if let Err(v) = probe.push(&moves) {
                return Offer::Blocked(v);
            }
        }
        Offer::Inputs(self.rounds.pop_front().unwrap())
    }
}

/// Open questions at the interface, tracked from observed rounds.
#[derive(Clone, Debug, Default)]
struct Pending {
    /// (question, asked by the environment, follow-up questions asked)
    open: Vec<(MoveId, bool, bool)>,
}

impl Pending {
    fn observe(&mut self, iface: &Arena, round: &[MoveId]) {
        let mut order: Vec<MoveId> = round.to_vec();
        order.sort_by_key(|m| (iface.get(*m).polarity == Polarity::P, iface.get(*m).kind == MoveKind::Q));
        for m in order {
            let mv = iface.get(m);
            if mv.kind == MoveKind::Q {
                for e in iface.enablers(m) {
                    if let Some(o) = self.open.iter_mut().rev().find(|o| o.0 == *e) {
                        o.2 = true;
                    }
                }
                self.open.push((m, mv.polarity == Polarity::O, false));
            } else if let Some(k) = self.open.iter().rposition(|o| iface.enables(o.0, m)) {
                self.open.remove(k);
            }
        }
    }

    fn is_empty(&self) -> bool {
        self.open.is_empty()
    }
}

/// A well-behaved context: starts a session by asking the initial
/// question(s) of the result, and answers every question the device asks,
/// first asking each question it enables once. Runs `sessions` sessions
/// back to back.
#[derive(Clone, Debug)]
pub struct Reactive {
    sessions: usize,
    started: usize,
    pending: Pending,
    seed: Option<u64>,
    rng: Option<StdRng>,
}

impl Reactive {
    /// Always picks the first answer.
    pub fn new(sessions: usize) -> Reactive {
        Reactive { sessions, started: 0, pending: Pending::default(), seed: None, rng: None }
    }

    /// Picks answers and follow-ups at random, making the same choices in
    /// every session.
    pub fn seeded(sessions: usize, seed: u64) -> Reactive {
        Reactive { seed: Some(seed), ..Reactive::new(sessions) }
    }

    fn pick(&mut self, options: Vec<MoveId>) -> Option<MoveId> {
        match &mut self.rng {
            None => options.first().copied(),
            Some(r) => options.choose(r).copied(),
        }
    }
}

/// Initial moves of the interface's result component: those the
/// environment may open a session with.
fn session_openers(iface: &Arena) -> Vec<MoveId> {
    iface.initial_moves().filter(|m| iface.get(*m).polarity == Polarity::O).collect()
}

impl Environment for Reactive {
    fn offer(&mut self, iface: &Arena, monitor: &SyncMonitor) -> Offer {
        if self.pending.is_empty() {
            if self.started == self.sessions {
                return Offer::Done;
            }
            self.rng = self.seed.map(StdRng::seed_from_u64);
            let Some(q) = self.pick(session_openers(iface)) else { return Offer::Done };
            self.started += 1;
            return Offer::Inputs([q].into());
        }
        // Serve the most recent device question.
        let Some(&(q, _, asked)) = self.pending.open.iter().rev().find(|o| !o.1) else { return Offer::Wait };
        let enabled: Vec<MoveId> = iface
            .ids()
            .filter(|m| iface.get(*m).polarity == Polarity::O && iface.enables(q, *m))
            .filter(|m| monitor.accepts(&[*m]))
            .collect();
        let (questions, answers): (Vec<MoveId>, Vec<MoveId>) =
            enabled.into_iter().partition(|m| iface.get(*m).kind == MoveKind::Q);
        let choice = if !asked && !questions.is_empty() { self.pick(questions) } else { self.pick(answers) };
        match choice {
            Some(m) => Offer::Inputs([m].into()),
            None => Offer::Wait,
        }
    }

    fn observe(&mut self, iface: &Arena, round: &[MoveId]) {
        self.pending.observe(iface, round);
    }
}

/// Random legal stimulus for a bounded number of rounds: idle cycles,
/// sessions opened one at a time, and any monitor-accepted combination of
/// other inputs.
#[derive(Clone, Debug)]
pub struct RandomEnv {
    rounds: usize,
    rng: StdRng,
    pending: Pending,
}

impl RandomEnv {
    pub fn new(rounds: usize, seed: u64) -> RandomEnv {
        RandomEnv { rounds, rng: StdRng::seed_from_u64(seed), pending: Pending::default() }
    }
}

impl Environment for RandomEnv {
    fn offer(&mut self, iface: &Arena, monitor: &SyncMonitor) -> Offer {
        if self.rounds == 0 {
            return Offer::Done;
        }
        self.rounds -= 1;
        let mut set = MoveSet::new();
        if self.rng.gen_bool(0.25) {
            return Offer::Inputs(set);
        }
        let openers = session_openers(iface);
        let mut cands: Vec<MoveId> = iface
            .ids()
            .filter(|m| iface.get(*m).polarity == Polarity::O)
            .filter(|m| !openers.contains(m) || self.pending.is_empty())
            .filter(|m| monitor.accepts(&[*m]))
            .collect();
        cands.shuffle(&mut self.rng);
        for m in cands {
            if openers.contains(&m) && set.iter().any(|x| openers.contains(x)) {
                continue;
            }
            if !set.is_empty() && self.rng.gen_bool(0.5) {
                continue;
            }
            set.insert(m);
            let v: Vec<MoveId> = set.iter().copied().collect();
            if !monitor.accepts(&v) {
                set.remove(&m);
            }
        }
        Offer::Inputs(set)
    }

    fn observe(&mut self, iface: &Arena, round: &[MoveId]) {
        self.pending.observe(iface, round);
    }
}

/// Parses a trace file: one round per line, moves separated by spaces or
/// commas, `.` for an idle round, `#` starting a comment.
pub fn parse_trace(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty() && *s != "." && *s != "-")
                .map(str::to_string)
                .collect()
        })
        .collect()
}

/// Resolves trace rounds against an interface, by port or net name.
pub fn resolve_rounds(
    rounds: &[Vec<String>],
    lookup: impl Fn(&str) -> Option<MoveId>,
) -> Result<Vec<MoveSet>, SimError> {
    rounds
        .iter()
        .map(|r| r.iter().map(|n| lookup(n).ok_or_else(|| SimError::UnknownPort(n.clone()))).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_files_parse() {
        let t = parse_trace("# header\nq1\n.\nQ0, A'0  # both\n\n");
        assert_eq!(t, vec![vec!["q1".to_string()], vec![], vec!["Q0".into(), "A'0".into()]]);
    }

    #[test]
    fn pending_questions_close_on_answers() {
        let a = Arena::of_type(&crate::parse::parse_type("com -> com").unwrap());
        let id = |n| a.by_name(n).unwrap();
        let mut p = Pending::default();
        p.observe(&a, &[id("q1"), id("q2")]);
        assert_eq!(p.open.len(), 2);
        p.observe(&a, &[id("a2"), id("a1")]);
        assert!(p.is_empty());
    }
}
