//! Arenas: the interface of a type as moves, labels and an enabling relation.
//!
//! Ports are numbered by a result-first traversal of the type tree: the
//! outer `com` of `com -> com` yields `q1`/`a1`, the argument `q2`/`a2`.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::syntax::Type;

/// Stable index of a move inside its arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoveId(pub usize);

impl fmt::Display for MoveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// Opponent: an input port.
    O,
    /// Proponent: an output port.
    P,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::O => Polarity::P,
            Polarity::P => Polarity::O,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Q,
    A,
}

/// The base action a move stems from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseMove {
    Q,
    A,
    T,
    F,
    WriteT,
    WriteF,
}

impl BaseMove {
    pub fn label(self) -> &'static str {
        match self {
            BaseMove::Q => "q",
            BaseMove::A => "a",
            BaseMove::T => "t",
            BaseMove::F => "f",
            BaseMove::WriteT => "wt",
            BaseMove::WriteF => "wf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub id: MoveId,
    pub name: String,
    pub polarity: Polarity,
    pub kind: MoveKind,
    pub base: BaseMove,
    /// Index of the base-type occurrence this move belongs to.
    pub occurrence: usize,
}

impl Move {
    pub fn is_input(&self) -> bool {
        self.polarity == Polarity::O
    }

    pub fn is_question(&self) -> bool {
        self.kind == MoveKind::Q
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arena {
    moves: Vec<Move>,
    /// `enablers[n]` lists every `m` with `m ⊢ n`.
    enablers: Vec<Vec<MoveId>>,
}

fn base_arena(t: &Type, occurrence: usize) -> Arena {
    use BaseMove::*;
    use MoveKind as K;
    use Polarity::{O, P};
    let (spec, edges): (Vec<(BaseMove, Polarity, MoveKind)>, Vec<(usize, usize)>) = match t {
        Type::Com => (vec![(Q, O, K::Q), (A, P, K::A)], vec![(0, 1)]),
        Type::Exp => (vec![(Q, O, K::Q), (T, P, K::A), (F, P, K::A)], vec![(0, 1), (0, 2)]),
        Type::Cell => (
            vec![(Q, O, K::Q), (T, P, K::A), (F, P, K::A), (WriteT, O, K::Q), (WriteF, O, K::Q), (A, P, K::A)],
            vec![(0, 1), (0, 2), (3, 5), (4, 5)],
        ),
        _ => unreachable!("not a base type"),
    };
    let moves = spec
        .into_iter()
        .enumerate()
        .map(|(i, (base, polarity, kind))| Move {
            id: MoveId(i),
            name: format!("{}{}", base.label(), occurrence + 1),
            polarity,
            kind,
            base,
            occurrence,
        })
        .collect::<Vec<_>>();
    let mut enablers = vec![Vec::new(); moves.len()];
    for (m, n) in edges {
        enablers[n].push(MoveId(m));
    }
    Arena { moves, enablers }
}

impl Arena {
    /// The arena of a type, ports numbered from 1.
    pub fn of_type(t: &Type) -> Arena {
        let mut next = 0;
        Arena::build(t, &mut next)
    }

    /// The arena of `ctx1 × ... × ctxn → result`, numbered result first.
    pub fn function(ctx: &[Type], result: &Type) -> Arena {
        let mut next = 0;
        let res = Arena::build(result, &mut next);
        if ctx.is_empty() {
            return res;
        }
        let parts = ctx.iter().map(|t| Arena::build(t, &mut next)).collect();
        Arena::arrow(Arena::tensor(parts), res)
    }

    fn build(t: &Type, next: &mut usize) -> Arena {
        match t {
            Type::Com | Type::Exp | Type::Cell => {
                let a = base_arena(t, *next);
                *next += 1;
                a
            }
            Type::Product(a, b) => {
                let a = Arena::build(a, next);
                let b = Arena::build(b, next);
                Arena::tensor(vec![a, b])
            }
            Type::Arrow(a, b) => {
                let res = Arena::build(b, next);
                let arg = Arena::build(a, next);
                Arena::arrow(arg, res)
            }
        }
    }

    /// Structure-preserving disjoint union, components in order.
    pub fn tensor(parts: Vec<Arena>) -> Arena {
        let mut moves = Vec::new();
        let mut enablers = Vec::new();
        for part in parts {
            let off = moves.len();
            for mut m in part.moves {
                m.id = MoveId(m.id.0 + off);
                moves.push(m);
            }
            for e in part.enablers {
                enablers.push(e.into_iter().map(|m| MoveId(m.0 + off)).collect());
            }
        }
        Arena { moves, enablers }
    }

    /// `arg → res`: result moves first, argument polarities flipped, every
    /// initial move of the argument enabled by every initial move of the result.
    pub fn arrow(arg: Arena, res: Arena) -> Arena {
        let res_initials: Vec<MoveId> = res.initial_moves().collect();
        let arg_initials: Vec<MoveId> = arg.initial_moves().collect();
        let off = res.moves.len();
        let mut flipped = arg;
        for m in &mut flipped.moves {
            m.polarity = m.polarity.flip();
        }
        let mut out = Arena::tensor(vec![res, flipped]);
        for n in arg_initials {
            out.enablers[n.0 + off].extend(res_initials.iter().copied());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn ids(&self) -> impl Iterator<Item = MoveId> + '_ {
        (0..self.moves.len()).map(MoveId)
    }

    pub fn get(&self, m: MoveId) -> &Move {
        &self.moves[m.0]
    }

    pub fn name(&self, m: MoveId) -> &str {
        &self.moves[m.0].name
    }

    pub fn by_name(&self, name: &str) -> Option<MoveId> {
        self.moves.iter().find(|m| m.name == name).map(|m| m.id)
    }

    pub fn enablers(&self, n: MoveId) -> &[MoveId] {
        &self.enablers[n.0]
    }

    pub fn enables(&self, m: MoveId, n: MoveId) -> bool {
        self.enablers[n.0].contains(&m)
    }

    pub fn is_initial(&self, m: MoveId) -> bool {
        self.enablers[m.0].is_empty()
    }

    pub fn initial_moves(&self) -> impl Iterator<Item = MoveId> + '_ {
        self.ids().filter(|m| self.is_initial(*m))
    }

    pub fn inputs(&self) -> impl Iterator<Item = MoveId> + '_ {
        self.ids().filter(|m| self.get(*m).is_input())
    }

    pub fn outputs(&self) -> impl Iterator<Item = MoveId> + '_ {
        self.ids().filter(|m| !self.get(*m).is_input())
    }

    /// All pairs `(m, n)` with `m ⊢ n`.
    pub fn enabling(&self) -> Vec<(MoveId, MoveId)> {
        let mut out = Vec::new();
        for n in self.ids() {
            for &m in &self.enablers[n.0] {
                out.push((m, n));
            }
        }
        out.sort();
        out
    }

    /// Same structure, new port names (ids are preserved).
    pub fn renamed(&self, mut name: impl FnMut(&Move) -> String) -> Arena {
        let mut out = self.clone();
        for m in &mut out.moves {
            m.name = name(m);
        }
        out
    }

    /// Flips every polarity. Used to view a context component from the inside.
    pub fn dual(&self) -> Arena {
        let mut out = self.clone();
        for m in &mut out.moves {
            m.polarity = m.polarity.flip();
        }
        out
    }

    /// Checks the three well-formedness conditions on arenas.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.moves {
            if !seen.insert(m.name.as_str()) {
                return Err(format!("duplicate move name {}", m.name));
            }
        }
        for n in self.ids() {
            let nm = self.get(n);
            if self.is_initial(n) && (nm.polarity != Polarity::O || nm.kind != MoveKind::Q) {
                return Err(format!("initial move {} is not an opponent question", nm.name));
            }
            for &m in self.enablers(n) {
                let mm = self.get(m);
                if mm.polarity == nm.polarity {
                    return Err(format!("{} enables {} with equal polarity", mm.name, nm.name));
                }
                if mm.kind != MoveKind::Q {
                    return Err(format!("answer {} enables {}", mm.name, nm.name));
                }
            }
        }
        Ok(())
    }

    /// Human-readable table of moves and the enabling relation.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<6} {:<4} {:<4} {:<8} enabled-by", "move", "O/P", "Q/A", "initial");
        for m in &self.moves {
            let en: Vec<&str> = self.enablers(m.id).iter().map(|e| self.name(*e)).collect();
            let _ = writeln!(
                s,
                "{:<6} {:<4} {:<4} {:<8} {}",
                m.name,
                format!("{:?}", m.polarity),
                format!("{:?}", m.kind),
                if self.is_initial(m.id) { "yes" } else { "" },
                en.join(",")
            );
        }
        s
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph arena {\n  rankdir=TB;\n");
        for m in &self.moves {
            let shape = if m.polarity == Polarity::O { "box" } else { "ellipse" };
            let _ = writeln!(s, "  \"{}\" [shape={shape}, label=\"{} ({:?}{:?})\"];", m.name, m.name, m.polarity, m.kind);
        }
        for (m, n) in self.enabling() {
            let _ = writeln!(s, "  \"{}\" -> \"{}\";", self.name(m), self.name(n));
        }
        s.push_str("}\n");
        s
    }
}
