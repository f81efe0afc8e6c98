use std::collections::BTreeMap;

use crate::arena::Arena;
use crate::syntax::{Constant, Type};
use crate::typecheck::{TypedKind, TypedTerm};

use super::design::{Builder, Design, Instance, Kind};
use super::SimError;

/// Points of a sub-circuit: its result ports, and the ports each free
/// identifier is expected on, all in arena order.
struct Fragment {
    result: Vec<usize>,
    vars: BTreeMap<String, Vec<usize>>,
}

fn size(t: &Type) -> usize {
    Arena::of_type(t).len()
}

fn label(c: Constant) -> &'static str {
    match c {
        Constant::True => "true",
        Constant::False => "false",
        c => c.name(),
    }
}

struct Compiler {
    b: Builder,
    counts: BTreeMap<String, usize>,
}

impl Compiler {
    fn name(&mut self, base: &str) -> String {
        let n = self.counts.entry(base.to_string()).or_insert(0);
        *n += 1;
        format!("{base}{n}")
    }

    fn go(&mut self, t: &TypedTerm) -> Fragment {
        match &t.kind {
            TypedKind::Var(x) => {
                let pts = self.b.fresh(size(&t.ty));
                Fragment { result: pts.clone(), vars: BTreeMap::from([(x.clone(), pts)]) }
            }
            TypedKind::Const(c) => {
                let name = self.name(label(*c));
                let result = self.b.add(Instance::new(&name, Kind::Const(*c)));
                Fragment { result, vars: BTreeMap::new() }
            }
            TypedKind::Lam(x, ty, body) => {
                let mut f = self.go(body);
                let arg = f.vars.remove(x).unwrap_or_else(|| self.b.fresh(size(ty)));
                f.result.extend(arg);
                f
            }
            TypedKind::App(fun, arg) => {
                let mut f = self.go(fun);
                let a = self.go(arg);
                let split = size(&t.ty);
                self.b.connect_all(&f.result[split..], &a.result);
                f.result.truncate(split);
                f.vars.extend(a.vars);
                f
            }
            TypedKind::Pair(l, r) => {
                let mut f = self.go(l);
                let g = self.go(r);
                f.result.extend(g.result);
                for (x, pts) in g.vars {
                    match f.vars.remove(&x) {
                        None => {
                            f.vars.insert(x, pts);
                        }
                        Some(left) => {
                            let name = self.name("am");
                            let ty = t.ctx[&x].clone();
                            let n = left.len();
                            let am = self.b.add(Instance::new(&name, Kind::Diagonal(ty)));
                            self.b.connect_all(&am[..n], &left);
                            self.b.connect_all(&am[n..2 * n], &pts);
                            f.vars.insert(x, am[2 * n..].to_vec());
                        }
                    }
                }
                f
            }
            TypedKind::Fst(p) | TypedKind::Snd(p) => {
                let mut f = self.go(p);
                let n = size(&t.ty);
                if matches!(t.kind, TypedKind::Fst(_)) {
                    f.result.truncate(n);
                } else {
                    f.result.drain(..f.result.len() - n);
                }
                f
            }
        }
    }
}

/// The interface type of a term over its free identifiers (sorted by name):
/// `x1 × … × xn → t`, or `t` when closed.
pub fn interface_type(t: &TypedTerm) -> Type {
    let mut ctx: Vec<Type> = t.ctx.values().cloned().collect();
    match ctx.pop() {
        None => t.ty.clone(),
        Some(last) => Type::arrow(ctx.into_iter().rev().fold(last, |acc, x| Type::product(x, acc)), t.ty.clone()),
    }
}

/// Structural compilation: one instance per constant occurrence, function
/// application as wiring, and an activation manager wherever pairing shares
/// an identifier.
pub fn compile(t: &TypedTerm) -> Result<Design, SimError> {
    let mut c = Compiler { b: Builder::new(), counts: BTreeMap::new() };
    let mut f = c.go(t);
    let mut top = f.result;
    for x in t.ctx.keys() {
        top.extend(f.vars.remove(x).expect("free identifier has ports"));
    }
    c.b.finish(interface_type(t), &top)
}
