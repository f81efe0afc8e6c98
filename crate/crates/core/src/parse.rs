//! Surface syntax parser.
//!
//! ```text
//! term    ::= seq
//! seq     ::= par (';' seq)?                 C1; C2        => seq<C1, C2>
//! par     ::= assign ('||' assign)*          C1 || C2      => par C1 C2
//! assign  ::= app (':=' app)?                x := E        => asg<x, E>
//! app     ::= prefix prefix*                 juxtaposition
//! prefix  ::= '!' prefix | 'fst' prefix | 'snd' prefix | atom
//! atom    ::= ident | constant | '(' term ')' | '<' term (',' term)* '>'
//!           | 'fn' ident ':' type '->' term | 'λ' ident (':' type)? '.' term
//!           | 'new' ident 'in' term
//!           | 'if' term 'then' term 'else' assign
//!           | 'while' term 'do' assign
//! type    ::= prod ('->' type)?
//! prod    ::= tatom ('*' prod)?
//! tatom   ::= 'com' | 'exp' | 'cell' | '(' type ')'
//! ```
//!
//! `#` and `//` start line comments. `⟨⟩` and `×` are accepted for `<>` and `*`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Constant, Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: expected {}, found {found}", fmt_expected(expected))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: BTreeSet<String>,
    pub found: String,
}

fn fmt_expected(e: &BTreeSet<String>) -> String {
    e.iter().cloned().collect::<Vec<_>>().join(" | ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "fn", "new", "in", "if", "then", "else", "while", "do", "fst", "snd", "com", "exp", "cell",
];

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let bump = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            bump(1, &mut i, &mut col);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if (c.is_alphanumeric() && c != 'λ') || c == '_' {
            let start = i;
            while i < chars.len() && ((chars[i].is_alphanumeric() && chars[i] != 'λ') || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            out.push(Lexed { tok: Tok::Ident(word), line: l0, column: c0 });
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym2 = match two.as_str() {
            "||" => Some("||"),
            ":=" => Some(":="),
            "->" => Some("->"),
            _ => None,
        };
        if let Some(s) = sym2 {
            bump(2, &mut i, &mut col);
            out.push(Lexed { tok: Tok::Sym(s), line: l0, column: c0 });
            continue;
        }
        let sym = match c {
            '(' => "(",
            ')' => ")",
            '<' | '⟨' => "<",
            '>' | '⟩' => ">",
            ',' => ",",
            ';' => ";",
            '!' => "!",
            ':' => ":",
            '.' => ".",
            '*' | '×' => "*",
            'λ' | '\\' => "λ",
            _ => {
                return Err(ParseError {
                    line: l0,
                    column: c0,
                    expected: ["token".to_string()].into(),
                    found: format!("`{c}`"),
                })
            }
        };
        bump(1, &mut i, &mut col);
        out.push(Lexed { tok: Tok::Sym(sym), line: l0, column: c0 });
    }
    out.push(Lexed { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let l = &self.toks[self.pos];
        ParseError {
            line: l.line,
            column: l.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: l.tok.to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[&format!("`{k}`")]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && Constant::from_name(s).is_none() => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let first = self.par()?;
        if self.is_sym(";") {
            self.pos += 1;
            let rest = self.term()?;
            return Ok(Term::seq(first, rest));
        }
        Ok(first)
    }

    fn par(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.assign()?;
        while self.is_sym("||") {
            self.pos += 1;
            let rhs = self.assign()?;
            acc = Term::par(acc, rhs);
        }
        Ok(acc)
    }

    fn assign(&mut self) -> Result<Term, ParseError> {
        let lhs = self.app()?;
        if self.is_sym(":=") {
            self.pos += 1;
            let rhs = self.app()?;
            return Ok(Term::call(Constant::Asg, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn starts_prefix(&self) -> bool {
        match self.peek() {
            Tok::Sym(s) => matches!(*s, "!" | "(" | "<" | "λ"),
            Tok::Ident(s) => !matches!(s.as_str(), "in" | "then" | "else" | "do" | "com" | "exp" | "cell"),
            Tok::Eof => false,
        }
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.prefix()?;
        while self.starts_prefix() {
            let arg = self.prefix()?;
            acc = Term::app(acc, arg);
        }
        Ok(acc)
    }

    fn prefix(&mut self) -> Result<Term, ParseError> {
        if self.is_sym("!") {
            self.pos += 1;
            let t = self.prefix()?;
            return Ok(Term::app(Term::Const(Constant::Der), t));
        }
        if self.is_kw("fst") {
            self.pos += 1;
            return Ok(Term::Fst(Box::new(self.prefix()?)));
        }
        if self.is_kw("snd") {
            self.pos += 1;
            return Ok(Term::Snd(Box::new(self.prefix()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        const EXPECTED: &[&str] = &["identifier", "constant", "`(`", "`<`", "`fn`", "`new`", "`if`", "`while`", "`!`"];
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.pos += 1;
                let t = self.term()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Sym("<") => {
                self.pos += 1;
                let mut items = vec![self.term()?];
                while self.is_sym(",") {
                    self.pos += 1;
                    items.push(self.term()?);
                }
                self.expect_sym(">")?;
                if items.len() < 2 {
                    return Err(self.error(&["`,`"]));
                }
                Ok(Term::tuple(items))
            }
            Tok::Sym("λ") => {
                self.pos += 1;
                let x = self.ident()?;
                let ty = if self.is_sym(":") {
                    self.pos += 1;
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect_sym(".")?;
                let body = self.term()?;
                Ok(Term::Lam(x, ty, Box::new(body)))
            }
            Tok::Ident(w) => match w.as_str() {
                "fn" => {
                    self.pos += 1;
                    let x = self.ident()?;
                    self.expect_sym(":")?;
                    let ty = self.binder_ty()?;
                    self.expect_sym("->")?;
                    let body = self.term()?;
                    Ok(Term::lam(&x, ty, body))
                }
                "new" => {
                    self.pos += 1;
                    let x = self.ident()?;
                    self.expect_kw("in")?;
                    let body = self.term()?;
                    Ok(Term::app(Term::Const(Constant::Newvar), Term::lam(&x, Type::Cell, body)))
                }
                "if" | "while" if matches!(self.toks[self.pos + 1].tok, Tok::Sym("<")) => {
                    self.pos += 1;
                    Ok(Term::Const(if w == "if" { Constant::If } else { Constant::While }))
                }
                "if" => {
                    self.pos += 1;
                    let c = self.term()?;
                    self.expect_kw("then")?;
                    let t = self.term()?;
                    self.expect_kw("else")?;
                    let e = self.assign()?;
                    Ok(Term::call(Constant::If, vec![c, t, e]))
                }
                "while" => {
                    self.pos += 1;
                    let c = self.term()?;
                    self.expect_kw("do")?;
                    let b = self.assign()?;
                    Ok(Term::call(Constant::While, vec![c, b]))
                }
                _ => {
                    if let Some(c) = Constant::from_name(&w) {
                        self.pos += 1;
                        return Ok(Term::Const(c));
                    }
                    if KEYWORDS.contains(&w.as_str()) {
                        return Err(self.error(EXPECTED));
                    }
                    self.pos += 1;
                    Ok(Term::Var(w))
                }
            },
            _ => Err(self.error(EXPECTED)),
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let lhs = self.ty_prod()?;
        if self.is_sym("->") {
            self.pos += 1;
            let rhs = self.ty()?;
            return Ok(Type::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    /// Type of a `fn` binder: the last `->` not followed by a type
    /// separates the binder from the body.
    fn binder_ty(&mut self) -> Result<Type, ParseError> {
        let mut parts = vec![self.ty_prod()?];
        while self.is_sym("->") {
            let save = self.pos;
            self.pos += 1;
            match self.ty_prod() {
                Ok(t) if self.is_sym("->") => parts.push(t),
                _ => {
                    self.pos = save;
                    break;
                }
            }
        }
        let last = parts.pop().unwrap();
        Ok(parts.into_iter().rev().fold(last, |acc, t| Type::arrow(t, acc)))
    }

    fn ty_prod(&mut self) -> Result<Type, ParseError> {
        let lhs = self.ty_atom()?;
        if self.is_sym("*") {
            self.pos += 1;
            let rhs = self.ty_prod()?;
            return Ok(Type::product(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_atom(&mut self) -> Result<Type, ParseError> {
        let t = match self.peek() {
            Tok::Ident(w) if w == "com" => Type::Com,
            Tok::Ident(w) if w == "exp" => Type::Exp,
            Tok::Ident(w) if w == "cell" => Type::Cell,
            Tok::Sym("(") => {
                self.pos += 1;
                let t = self.ty()?;
                self.expect_sym(")")?;
                return Ok(t);
            }
            _ => return Err(self.error(&["`com`", "`exp`", "`cell`", "`(`"])),
        };
        self.pos += 1;
        Ok(t)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }
}

/// Parses a program into its (untyped) functional-form AST.
pub fn parse(source: &str) -> Result<Term, ParseError> {
    let mut p = Parser { toks: lex(source)?, pos: 0 };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses a type such as `(com -> com) * exp`.
pub fn parse_type(source: &str) -> Result<Type, ParseError> {
    let mut p = Parser { toks: lex(source)?, pos: 0 };
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Constant::*;

    fn c(k: Constant) -> Term {
        Term::Const(k)
    }

    #[test]
    fn single_constant() {
        assert_eq!(parse("skip").unwrap(), c(Skip));
    }

    #[test]
    fn newvar_sugar_desugars() {
        let t = parse("new x in x := 1; if !x then skip else x := 0").unwrap();
        let x = || Term::var("x");
        let expected = Term::app(
            c(Newvar),
            Term::lam(
                "x",
                Type::Cell,
                Term::seq(
                    Term::call(Asg, vec![x(), c(True)]),
                    Term::call(
                        If,
                        vec![Term::app(c(Der), x()), c(Skip), Term::call(Asg, vec![x(), c(False)])],
                    ),
                ),
            ),
        );
        assert_eq!(t, expected);
        assert_eq!(t.functional_form(), "newvar(λx. seq⟨asg⟨x, 1⟩, if⟨der x, skip, asg⟨x, 0⟩⟩⟩)");
        assert_eq!(parse(&t.to_source()).unwrap(), t);
    }

    #[test]
    fn application_is_juxtaposition() {
        let t = parse("f (f skip)").unwrap();
        assert_eq!(t, Term::app(Term::var("f"), Term::app(Term::var("f"), c(Skip))));
    }

    #[test]
    fn par_and_seq_sugar() {
        let t = parse("a || b; c").unwrap();
        assert_eq!(t, Term::seq(Term::par(Term::var("a"), Term::var("b")), Term::var("c")));
    }

    #[test]
    fn types_parse_with_precedence() {
        assert_eq!(
            parse_type("com * com -> com").unwrap(),
            Type::arrow(Type::product(Type::Com, Type::Com), Type::Com)
        );
        assert_eq!(
            parse_type("com -> com -> com").unwrap(),
            Type::arrow(Type::Com, Type::arrow(Type::Com, Type::Com))
        );
    }

    #[test]
    fn errors_carry_position_and_expectations() {
        let e = parse("fn x com -> x").unwrap_err();
        assert_eq!((e.line, e.column), (1, 6));
        assert!(e.expected.contains("`:`"));
        let e = parse("skip;\n  )").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert!(parse("skip $").is_err());
    }

    #[test]
    fn lambda_forms_agree() {
        let a = parse("fn x: com -> seq<x, x>").unwrap();
        let b = parse("λx:com. seq⟨x, x⟩").unwrap();
        assert_eq!(a, b);
    }
}
