//! Abstract syntax: types, constants and terms.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A type of the language. Base types are `com`, `exp` and `cell`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Com,
    Exp,
    Cell,
    Product(Box<Type>, Box<Type>),
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn product(a: Type, b: Type) -> Type {
        Type::Product(Box::new(a), Box::new(b))
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Type::Com | Type::Exp | Type::Cell)
    }

    /// Number of base-type occurrences in the type tree.
    pub fn base_occurrences(&self) -> usize {
        match self {
            Type::Com | Type::Exp | Type::Cell => 1,
            Type::Product(a, b) | Type::Arrow(a, b) => a.base_occurrences() + b.base_occurrences(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // prec 0: arrow position, 1: product operand, 2: atom
        match self {
            Type::Com => write!(f, "com"),
            Type::Exp => write!(f, "exp"),
            Type::Cell => write!(f, "cell"),
            Type::Product(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Arrow(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, 0)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Binary logical operators available as `op<k>` constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Eq,
}

impl BinOp {
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Xor => a != b,
            BinOp::Eq => a == b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Eq => "eq",
        }
    }
}

/// The closed table of language constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constant {
    True,
    False,
    Skip,
    Asg,
    Der,
    Seq,
    Par,
    Op(BinOp),
    Not,
    If,
    While,
    Newvar,
}

impl Constant {
    pub const ALL: [Constant; 15] = [
        Constant::True,
        Constant::False,
        Constant::Skip,
        Constant::Asg,
        Constant::Der,
        Constant::Seq,
        Constant::Par,
        Constant::Op(BinOp::And),
        Constant::Op(BinOp::Or),
        Constant::Op(BinOp::Xor),
        Constant::Op(BinOp::Eq),
        Constant::Not,
        Constant::If,
        Constant::While,
        Constant::Newvar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constant::True => "1",
            Constant::False => "0",
            Constant::Skip => "skip",
            Constant::Asg => "asg",
            Constant::Der => "der",
            Constant::Seq => "seq",
            Constant::Par => "par",
            Constant::Op(op) => op.name(),
            Constant::Not => "not",
            Constant::If => "if",
            Constant::While => "while",
            Constant::Newvar => "newvar",
        }
    }

    /// Looks up a constant by its surface name. `true`/`false` alias `1`/`0`.
    pub fn from_name(name: &str) -> Option<Constant> {
        match name {
            "true" => return Some(Constant::True),
            "false" => return Some(Constant::False),
            _ => {}
        }
        Constant::ALL.iter().copied().find(|c| c.name() == name)
    }

    pub fn signature(self) -> Type {
        use Type::*;
        let t = Type::product;
        let arr = Type::arrow;
        match self {
            Constant::True | Constant::False => Exp,
            Constant::Skip => Com,
            Constant::Asg => arr(t(Cell, Exp), Com),
            Constant::Der => arr(Cell, Exp),
            Constant::Seq => arr(t(Com, Com), Com),
            Constant::Par => arr(Com, arr(Com, Com)),
            Constant::Op(_) => arr(t(Exp, Exp), Exp),
            Constant::Not => arr(Exp, Exp),
            Constant::If => arr(t(Exp, t(Com, Com)), Com),
            Constant::While => arr(t(Exp, Com), Com),
            Constant::Newvar => arr(arr(Cell, Com), Com),
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Untyped terms as produced by the parser. Binders carry an optional
/// annotation; the typechecker requires it to be present.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(Constant),
    Lam(String, Option<Type>, Box<Term>),
    App(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    pub fn lam(x: &str, ty: Type, body: Term) -> Term {
        Term::Lam(x.to_string(), Some(ty), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    /// `c<a1, ..., an>` with right-nested pairing.
    pub fn call(c: Constant, args: Vec<Term>) -> Term {
        Term::app(Term::Const(c), Term::tuple(args))
    }

    pub fn tuple(mut items: Vec<Term>) -> Term {
        assert!(!items.is_empty(), "empty tuple");
        let mut acc = items.pop().unwrap();
        while let Some(t) = items.pop() {
            acc = Term::pair(t, acc);
        }
        acc
    }

    pub fn seq(a: Term, b: Term) -> Term {
        Term::call(Constant::Seq, vec![a, b])
    }

    pub fn par(a: Term, b: Term) -> Term {
        Term::app(Term::app(Term::Const(Constant::Par), a), b)
    }

    /// Functional form with binder annotations omitted.
    pub fn functional_form(&self) -> String {
        let mut s = String::new();
        write_term(&mut s, self, 0, false);
        s
    }

    /// Concrete syntax that the parser accepts back (binders annotated).
    pub fn to_source(&self) -> String {
        let mut s = String::new();
        write_term(&mut s, self, 0, true);
        s
    }

    /// Free identifiers in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(t: &Term, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match t {
                Term::Var(x) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
                Term::Const(_) => {}
                Term::Lam(x, _, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Term::App(a, b) | Term::Pair(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Term::Fst(a) | Term::Snd(a) => go(a, bound, out),
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

fn tuple_items(t: &Term) -> Vec<&Term> {
    let mut items = Vec::new();
    let mut cur = t;
    while let Term::Pair(a, b) = cur {
        items.push(a.as_ref());
        cur = b;
    }
    items.push(cur);
    items
}

// prec: 0 = anywhere, 1 = function position, 2 = argument position
fn write_term(out: &mut String, t: &Term, prec: u8, annotate: bool) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Const(c) => out.push_str(c.name()),
        Term::Lam(x, ty, body) => {
            if prec > 0 {
                out.push('(');
            }
            out.push('λ');
            out.push_str(x);
            if let (true, Some(ty)) = (annotate, ty) {
                out.push(':');
                out.push_str(&ty.to_string());
            }
            out.push_str(". ");
            write_term(out, body, 0, annotate);
            if prec > 0 {
                out.push(')');
            }
        }
        Term::App(f, a) => {
            if let (Term::Const(c), Term::Pair(..)) = (f.as_ref(), a.as_ref()) {
                out.push_str(c.name());
                write_tuple(out, a, annotate);
                return;
            }
            if let (Term::Const(Constant::Newvar), Term::Lam(..)) = (f.as_ref(), a.as_ref()) {
                out.push_str("newvar(");
                write_term(out, a, 0, annotate);
                out.push(')');
                return;
            }
            if prec > 1 {
                out.push('(');
            }
            write_term(out, f, 1, annotate);
            out.push(' ');
            write_term(out, a, 2, annotate);
            if prec > 1 {
                out.push(')');
            }
        }
        Term::Pair(..) => write_tuple(out, t, annotate),
        Term::Fst(a) | Term::Snd(a) => {
            if prec > 1 {
                out.push('(');
            }
            out.push_str(if matches!(t, Term::Fst(_)) { "fst " } else { "snd " });
            write_term(out, a, 2, annotate);
            if prec > 1 {
                out.push(')');
            }
        }
    }
}

fn write_tuple(out: &mut String, t: &Term, annotate: bool) {
    out.push('⟨');
    for (i, item) in tuple_items(t).into_iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_term(out, item, 0, annotate);
    }
    out.push('⟩');
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source())
    }
}
