//! Affine typing: pairs may share identifiers, applications may not.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::syntax::{Constant, Term, Type};

/// Ordered typing context `x1:T1, ..., xn:Tn`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context(pub Vec<(String, Type)>);

impl Context {
    pub fn new() -> Self {
        Context(Vec::new())
    }

    pub fn with(mut self, x: &str, ty: Type) -> Self {
        self.0.retain(|(y, _)| y != x);
        self.0.push((x.to_string(), ty));
        self
    }

    pub fn get(&self, x: &str) -> Option<&Type> {
        self.0.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(x, _)| x.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    Mismatch { context: String, expected: String, found: Type },
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("affinity violation: `{ident}` is used by both the function and the argument of `{term}`")]
    Affinity { ident: String, term: String },
    #[error("binder `{0}` needs a type annotation")]
    Unannotated(String),
}

impl TypeError {
    pub fn kind(&self) -> &'static str {
        match self {
            TypeError::Mismatch { .. } | TypeError::Unannotated(_) => "mismatch",
            TypeError::Unbound(_) => "unbound",
            TypeError::Affinity { .. } => "affinity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypedKind {
    Var(String),
    Const(Constant),
    Lam(String, Type, Box<TypedTerm>),
    App(Box<TypedTerm>, Box<TypedTerm>),
    Pair(Box<TypedTerm>, Box<TypedTerm>),
    Fst(Box<TypedTerm>),
    Snd(Box<TypedTerm>),
}

/// A term annotated with its type and the identifiers it uses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedTerm {
    pub kind: TypedKind,
    pub ty: Type,
    /// Identifiers occurring free in this node, with their types.
    pub ctx: BTreeMap<String, Type>,
}

impl TypedTerm {
    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TypedTerm)) {
        f(self);
        match &self.kind {
            TypedKind::Var(_) | TypedKind::Const(_) => {}
            TypedKind::Lam(_, _, b) | TypedKind::Fst(b) | TypedKind::Snd(b) => b.walk(f),
            TypedKind::App(a, b) | TypedKind::Pair(a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    pub fn erase(&self) -> Term {
        match &self.kind {
            TypedKind::Var(x) => Term::Var(x.clone()),
            TypedKind::Const(c) => Term::Const(*c),
            TypedKind::Lam(x, t, b) => Term::Lam(x.clone(), Some(t.clone()), Box::new(b.erase())),
            TypedKind::App(a, b) => Term::app(a.erase(), b.erase()),
            TypedKind::Pair(a, b) => Term::pair(a.erase(), b.erase()),
            TypedKind::Fst(a) => Term::Fst(Box::new(a.erase())),
            TypedKind::Snd(a) => Term::Snd(Box::new(a.erase())),
        }
    }
}

/// Checks `t` in context `ctx`. Unused context entries are allowed.
pub fn typecheck(t: &Term, ctx: &Context) -> Result<TypedTerm, TypeError> {
    check(t, ctx)
}

fn check(t: &Term, env: &Context) -> Result<TypedTerm, TypeError> {
    match t {
        Term::Var(x) => {
            let ty = env.get(x).cloned().ok_or_else(|| TypeError::Unbound(x.clone()))?;
            Ok(TypedTerm {
                kind: TypedKind::Var(x.clone()),
                ctx: [(x.clone(), ty.clone())].into(),
                ty,
            })
        }
        Term::Const(c) => Ok(TypedTerm { kind: TypedKind::Const(*c), ty: c.signature(), ctx: BTreeMap::new() }),
        Term::Lam(x, ann, body) => {
            let arg = ann.clone().ok_or_else(|| TypeError::Unannotated(x.clone()))?;
            let body = check(body, &env.clone().with(x, arg.clone()))?;
            let mut ctx = body.ctx.clone();
            ctx.remove(x);
            let ty = Type::arrow(arg.clone(), body.ty.clone());
            Ok(TypedTerm { kind: TypedKind::Lam(x.clone(), arg, Box::new(body)), ty, ctx })
        }
        Term::App(f, a) => {
            let f = check(f, env)?;
            let a = check(a, env)?;
            let Type::Arrow(dom, cod) = &f.ty else {
                return Err(TypeError::Mismatch {
                    context: format!("function position of `{}`", t.functional_form()),
                    expected: "a function type".into(),
                    found: f.ty.clone(),
                });
            };
            if **dom != a.ty {
                return Err(TypeError::Mismatch {
                    context: format!("argument of `{}`", t.functional_form()),
                    expected: dom.to_string(),
                    found: a.ty.clone(),
                });
            }
            if let Some(x) = f.ctx.keys().find(|x| a.ctx.contains_key(*x)) {
                return Err(TypeError::Affinity { ident: x.clone(), term: t.functional_form() });
            }
            let ty = (**cod).clone();
            let mut ctx = f.ctx.clone();
            ctx.extend(a.ctx.clone());
            Ok(TypedTerm { kind: TypedKind::App(Box::new(f), Box::new(a)), ty, ctx })
        }
        Term::Pair(a, b) => {
            let a = check(a, env)?;
            let b = check(b, env)?;
            let ty = Type::product(a.ty.clone(), b.ty.clone());
            let mut ctx = a.ctx.clone();
            ctx.extend(b.ctx.clone());
            Ok(TypedTerm { kind: TypedKind::Pair(Box::new(a), Box::new(b)), ty, ctx })
        }
        Term::Fst(p) | Term::Snd(p) => {
            let p = check(p, env)?;
            let Type::Product(l, r) = &p.ty else {
                return Err(TypeError::Mismatch {
                    context: format!("projection `{}`", t.functional_form()),
                    expected: "a product type".into(),
                    found: p.ty.clone(),
                });
            };
            let first = matches!(t, Term::Fst(_));
            let ty = if first { (**l).clone() } else { (**r).clone() };
            let ctx = p.ctx.clone();
            let kind = if first { TypedKind::Fst(Box::new(p)) } else { TypedKind::Snd(Box::new(p)) };
            Ok(TypedTerm { kind, ty, ctx })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn check_src(src: &str) -> Result<TypedTerm, TypeError> {
        typecheck(&parse(src).unwrap(), &Context::new())
    }

    #[test]
    fn sequential_reuse_is_legal() {
        let t = check_src("fn x: com -> x; x").unwrap();
        assert_eq!(t.ty, Type::arrow(Type::Com, Type::Com));
    }

    #[test]
    fn parallel_reuse_is_affinity_error() {
        let e = check_src("fn x: com -> x || x").unwrap_err();
        assert_eq!(e.kind(), "affinity");
    }

    #[test]
    fn nested_application_is_affinity_error() {
        let e = check_src("fn f: com -> com -> fn x: com -> f (f x)").unwrap_err();
        assert_eq!(e.kind(), "affinity");
    }

    #[test]
    fn unbound_and_mismatch() {
        assert_eq!(check_src("y").unwrap_err().kind(), "unbound");
        assert_eq!(check_src("seq<skip, 1>").unwrap_err().kind(), "mismatch");
        assert_eq!(check_src("skip skip").unwrap_err().kind(), "mismatch");
        assert_eq!(check_src("fst skip").unwrap_err().kind(), "mismatch");
    }

    #[test]
    fn projections_and_newvar() {
        let ctx = Context::new().with("p", Type::product(Type::Com, Type::Exp));
        let t = typecheck(&parse("snd p").unwrap(), &ctx).unwrap();
        assert_eq!(t.ty, Type::Exp);
        let t = check_src("new x in x := 1; if !x then skip else x := 0").unwrap();
        assert_eq!(t.ty, Type::Com);
        assert!(t.ctx.is_empty());
    }

    #[test]
    fn apply_contexts_are_disjoint() {
        let ctx = Context::new().with("f", Type::arrow(Type::Com, Type::Com)).with("y", Type::Com);
        let t = typecheck(&parse("f skip; f y").unwrap(), &ctx).unwrap();
        t.walk(&mut |n| {
            if let TypedKind::App(a, b) = &n.kind {
                assert!(a.ctx.keys().all(|k| !b.ctx.contains_key(k)));
            }
        });
    }

    #[test]
    fn weakening_keeps_annotation() {
        let t = parse("fn x: com -> x; y").unwrap();
        let small = Context::new().with("y", Type::Com);
        let big = small.clone().with("z", Type::Exp);
        assert_eq!(typecheck(&t, &small).unwrap(), typecheck(&t, &big).unwrap());
    }
}
