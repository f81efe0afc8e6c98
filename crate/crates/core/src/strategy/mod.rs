//! Asynchronous transducers for constants and terms.
//!
//! A [`Strategy`] is an [`Automaton`] over the arena `Γ → T` of its
//! interface. The arena is laid out as the result component followed by one
//! component per context entry, contexts sorted by name.

mod automaton;
mod compose;
mod constants;
mod denote;
mod forward;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::arena::{Arena, MoveId};
use crate::plays::LimitExceeded;
use crate::syntax::Type;

pub use automaton::Automaton;
pub use compose::{apply, compose, compose_oracle, glue, pair, plug, project};
pub use constants::denote_constant;
pub use denote::{denote, denote_in};
pub use forward::{copycat, diagonal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("divergence detected: internal cycle with no observable exit")]
    DivergenceDetected,
    #[error(transparent)]
    LimitExceeded(#[from] LimitExceeded),
    #[error("interface mismatch: {0}")]
    Interface(String),
}

/// An automaton together with its typed interface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub ctx: Vec<(String, Type)>,
    pub result: Type,
    pub automaton: Automaton,
}

pub(crate) fn type_len(t: &Type) -> usize {
    Arena::of_type(t).len()
}

/// Position of a component within a strategy's arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Comp {
    Result,
    Ctx(usize),
}

impl Strategy {
    pub fn arena(&self) -> &Arena {
        &self.automaton.arena
    }

    pub fn interface_arena(ctx: &[(String, Type)], result: &Type) -> Arena {
        let types: Vec<Type> = ctx.iter().map(|(_, t)| t.clone()).collect();
        Arena::function(&types, result)
    }

    pub fn ctx_index(&self, x: &str) -> Option<usize> {
        self.ctx.iter().position(|(y, _)| y == x)
    }

    /// Offset of every component, result first.
    pub(crate) fn offsets(ctx: &[(String, Type)], result: &Type) -> Vec<usize> {
        let mut offs = vec![0];
        let mut next = type_len(result);
        for (_, t) in ctx {
            offs.push(next);
            next += type_len(t);
        }
        offs
    }

    pub(crate) fn global(&self, c: Comp, local: usize) -> MoveId {
        let offs = Strategy::offsets(&self.ctx, &self.result);
        MoveId(match c {
            Comp::Result => local,
            Comp::Ctx(i) => offs[i + 1] + local,
        })
    }

    pub(crate) fn address(&self, m: MoveId) -> (Comp, usize) {
        let offs = Strategy::offsets(&self.ctx, &self.result);
        let k = offs.iter().rposition(|&o| o <= m.0).unwrap();
        let c = if k == 0 { Comp::Result } else { Comp::Ctx(k - 1) };
        (c, m.0 - offs[k])
    }

    /// Moves the same transitions onto another interface; `place` maps each
    /// old (component, local) address to its new global id.
    pub(crate) fn reshape(
        &self,
        ctx: Vec<(String, Type)>,
        result: Type,
        place: impl Fn(Comp, usize) -> MoveId,
    ) -> Strategy {
        let arena = Strategy::interface_arena(&ctx, &result);
        let map: Vec<MoveId> = self
            .arena()
            .ids()
            .map(|m| {
                let (c, l) = self.address(m);
                place(c, l)
            })
            .collect();
        Strategy { automaton: self.automaton.relabel(arena, &map), ctx, result }
    }

    /// Renames context entries and restores the sorted order.
    pub fn rename_ctx(&self, f: impl Fn(&str) -> String) -> Strategy {
        let renamed: Vec<(String, Type)> = self.ctx.iter().map(|(x, t)| (f(x), t.clone())).collect();
        let mut ctx = renamed.clone();
        ctx.sort_by(|a, b| a.0.cmp(&b.0));
        let offs = Strategy::offsets(&ctx, &self.result);
        let pos: Vec<usize> = renamed.iter().map(|(x, _)| ctx.iter().position(|(y, _)| y == x).unwrap()).collect();
        self.reshape(ctx, self.result.clone(), |c, l| match c {
            Comp::Result => MoveId(l),
            Comp::Ctx(i) => MoveId(offs[pos[i] + 1] + l),
        })
    }

    /// Adds unused context entries (weakening).
    pub fn weaken(&self, extra: &[(String, Type)]) -> Strategy {
        let mut all: BTreeMap<String, Type> = self.ctx.iter().cloned().collect();
        for (x, t) in extra {
            all.entry(x.clone()).or_insert_with(|| t.clone());
        }
        let ctx: Vec<(String, Type)> = all.into_iter().collect();
        let offs = Strategy::offsets(&ctx, &self.result);
        let pos: Vec<usize> = self.ctx.iter().map(|(x, _)| ctx.iter().position(|(y, _)| y == x).unwrap()).collect();
        self.reshape(ctx, self.result.clone(), |c, l| match c {
            Comp::Result => MoveId(l),
            Comp::Ctx(i) => MoveId(offs[pos[i] + 1] + l),
        })
    }

    /// `Γ, x:A ⊢ B` to `Γ ⊢ A → B`. Only a relabelling of ports.
    pub fn curry(&self, x: &str, arg: &Type) -> Strategy {
        let result = Type::arrow(arg.clone(), self.result.clone());
        let ctx: Vec<(String, Type)> = self.ctx.iter().filter(|(y, _)| y != x).cloned().collect();
        let offs = Strategy::offsets(&ctx, &result);
        let blen = type_len(&self.result);
        let xi = self.ctx_index(x);
        let pos: Vec<Option<usize>> = self.ctx.iter().map(|(y, _)| ctx.iter().position(|(z, _)| z == y)).collect();
        self.reshape(ctx, result, |c, l| match c {
            Comp::Result => MoveId(l),
            Comp::Ctx(i) if Some(i) == xi => MoveId(blen + l),
            Comp::Ctx(i) => MoveId(offs[pos[i].unwrap() + 1] + l),
        })
    }

    /// `Γ ⊢ A → B` to `Γ, x:A ⊢ B`.
    pub fn uncurry(&self, x: &str) -> Result<Strategy, StrategyError> {
        let Type::Arrow(arg, res) = &self.result else {
            return Err(StrategyError::Interface(format!("{} is not a function type", self.result)));
        };
        if self.ctx_index(x).is_some() {
            return Err(StrategyError::Interface(format!("`{x}` already in context")));
        }
        let mut ctx = self.ctx.clone();
        ctx.push((x.to_string(), (**arg).clone()));
        ctx.sort_by(|a, b| a.0.cmp(&b.0));
        let result = (**res).clone();
        let offs = Strategy::offsets(&ctx, &result);
        let blen = type_len(&result);
        let xi = ctx.iter().position(|(y, _)| y == x).unwrap();
        let pos: Vec<usize> = self.ctx.iter().map(|(y, _)| ctx.iter().position(|(z, _)| z == y).unwrap()).collect();
        Ok(self.reshape(ctx, result, |c, l| match c {
            Comp::Result if l < blen => MoveId(l),
            Comp::Result => MoveId(offs[xi + 1] + l - blen),
            Comp::Ctx(i) => MoveId(offs[pos[i] + 1] + l),
        }))
    }

    pub fn minimize(&self) -> Strategy {
        Strategy { automaton: self.automaton.minimize(), ..self.clone() }
    }
}
