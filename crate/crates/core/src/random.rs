//! Random well-typed terms, for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::syntax::{BinOp, Constant, Term, Type};
use crate::typecheck::{typecheck, Context, TypedTerm};

/// Generates terms of `com`, `exp` and first-order function types over a
/// context of `com`, `exp`, `cell` and `com -> com` identifiers.
/// Application never shares an identifier, so every result is affine.
pub struct TermGen<'r, R: Rng> {
    rng: &'r mut R,
    fresh: usize,
}

type Ctx = Vec<(String, Type)>;

fn com_to_com() -> Type {
    Type::arrow(Type::Com, Type::Com)
}

fn without(ctx: &Ctx, used: &[String]) -> Ctx {
    ctx.iter().filter(|(x, _)| !used.contains(x)).cloned().collect()
}

fn vars_of(ctx: &Ctx, t: &Type) -> Vec<String> {
    ctx.iter().filter(|(_, ty)| ty == t).map(|(x, _)| x.clone()).collect()
}

impl<'r, R: Rng> TermGen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        TermGen { rng, fresh: 0 }
    }

    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn pick(&mut self, xs: &[String]) -> Option<String> {
        xs.choose(self.rng).cloned()
    }

    /// A term of type `ty` (com, exp, or an arrow between them) whose free
    /// identifiers come from `ctx`, nested at most `depth` deep.
    pub fn term(&mut self, ty: &Type, ctx: &Ctx, depth: usize) -> Term {
        match ty {
            Type::Arrow(a, b) => {
                let y = self.name("y");
                let mut inner = ctx.clone();
                inner.push((y.clone(), (**a).clone()));
                Term::lam(&y, (**a).clone(), self.term(b, &inner, depth))
            }
            Type::Exp => self.exp(ctx, depth),
            _ => self.com(ctx, depth),
        }
    }

    fn com(&mut self, ctx: &Ctx, depth: usize) -> Term {
        let coms = vars_of(ctx, &Type::Com);
        let cells = vars_of(ctx, &Type::Cell);
        let funs = vars_of(ctx, &com_to_com());
        let leaf = depth == 0 || self.rng.gen_bool(0.2);
        let choice = if leaf { self.rng.gen_range(0..4) } else { self.rng.gen_range(4..12) };
        match choice {
            1 if !coms.is_empty() => Term::Var(self.pick(&coms).unwrap()),
            2 if !cells.is_empty() => {
                let v = self.pick(&cells).unwrap();
                let b = Term::Const(if self.rng.gen() { Constant::True } else { Constant::False });
                Term::call(Constant::Asg, vec![Term::Var(v), b])
            }
            3 if !funs.is_empty() => {
                let f = self.pick(&funs).unwrap();
                Term::app(Term::Var(f), Term::Const(Constant::Skip))
            }
            4 | 5 => {
                let (a, b) = (self.com(ctx, depth - 1), self.com(ctx, depth - 1));
                Term::seq(a, b)
            }
            6 => {
                let a = self.com(ctx, depth - 1);
                let rest = without(ctx, &a.free_vars());
                let b = self.com(&rest, depth - 1);
                Term::par(a, b)
            }
            7 => {
                let e = self.exp(ctx, depth - 1);
                let (a, b) = (self.com(ctx, depth - 1), self.com(ctx, depth - 1));
                Term::call(Constant::If, vec![e, a, b])
            }
            8 => {
                // Conditions that can turn false, so loops need not diverge.
                let cond = match self.pick(&cells) {
                    Some(v) => Term::app(Term::Const(Constant::Der), Term::Var(v)),
                    None => Term::Const(Constant::False),
                };
                let body = self.com(ctx, depth - 1);
                Term::call(Constant::While, vec![cond, body])
            }
            9 => {
                let v = self.name("v");
                let mut inner = ctx.clone();
                inner.push((v.clone(), Type::Cell));
                let body = self.com(&inner, depth - 1);
                Term::app(Term::Const(Constant::Newvar), Term::lam(&v, Type::Cell, body))
            }
            10 if !cells.is_empty() => {
                let v = self.pick(&cells).unwrap();
                let e = self.exp(ctx, depth - 1);
                Term::call(Constant::Asg, vec![Term::Var(v), e])
            }
            11 if !funs.is_empty() => {
                let f = self.pick(&funs).unwrap();
                let arg = self.com(&without(ctx, std::slice::from_ref(&f)), depth - 1);
                Term::app(Term::Var(f), arg)
            }
            _ => Term::Const(Constant::Skip),
        }
    }

    fn exp(&mut self, ctx: &Ctx, depth: usize) -> Term {
        let exps = vars_of(ctx, &Type::Exp);
        let cells = vars_of(ctx, &Type::Cell);
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        let choice = if leaf { self.rng.gen_range(0..4) } else { self.rng.gen_range(4..6) };
        match choice {
            1 if !exps.is_empty() => Term::Var(self.pick(&exps).unwrap()),
            2 if !cells.is_empty() => Term::app(Term::Const(Constant::Der), Term::Var(self.pick(&cells).unwrap())),
            4 => {
                let op = *[BinOp::And, BinOp::Or, BinOp::Xor, BinOp::Eq].choose(self.rng).unwrap();
                let (a, b) = (self.exp(ctx, depth - 1), self.exp(ctx, depth - 1));
                Term::call(Constant::Op(op), vec![a, b])
            }
            5 => Term::app(Term::Const(Constant::Not), self.exp(ctx, depth - 1)),
            _ => Term::Const(if self.rng.gen() { Constant::True } else { Constant::False }),
        }
    }
}

/// A random term of type `ty` over `ctx`, typechecked.
pub fn random_term(rng: &mut impl Rng, ty: &Type, ctx: &Context, depth: usize) -> TypedTerm {
    let mut g = TermGen::new(rng);
    let c: Ctx = ctx.0.clone();
    loop {
        let t = g.term(ty, &c, depth);
        if let Ok(tt) = typecheck(&t, ctx) {
            return tt;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn generated_terms_typecheck_at_their_type() {
        let mut rng = StdRng::seed_from_u64(1);
        let ctx = Context::new().with("x", Type::Com).with("c", Type::Cell).with("f", com_to_com());
        for ty in [Type::Com, Type::Exp, com_to_com()] {
            for _ in 0..50 {
                let t = random_term(&mut rng, &ty, &ctx, 3);
                assert_eq!(t.ty, ty);
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = random_term(&mut StdRng::seed_from_u64(9), &Type::Com, &Context::new(), 3);
        let b = random_term(&mut StdRng::seed_from_u64(9), &Type::Com, &Context::new(), 3);
        assert_eq!(a, b);
    }
}
