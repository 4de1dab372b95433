//! Formulas: AST, text grammar, canonical printing and exact evaluation.
//!
//! Grammar (loosest first):
//!
//! ```text
//! or     := and   (("max" | "\/" | "∨") and)*
//! and    := add   (("min" | "/\" | "∧") add)*
//! add    := scale (("-." | "∸" | "−" | "+." | "∔") scale)*
//! scale  := NUM ("*" | "·") scale | unary
//! unary  := ("not" | "¬") unary | ("sup" | "inf") IDENT "." or | primary
//! primary:= NUM | "(" or ")" | "|" or "-" or "|" | "d" "(" term "," term ")"
//!         | PRED ["(" term ("," term)* ")"]
//! term   := IDENT ["(" term ("," term)* ")"]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::{format_rational, Rational, TruthValue};
use crate::structure::{FiniteStructure, Signature, METRIC_SYMBOL};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(String),
    Func(String, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Lit(TruthValue),
    Dist(Term, Term),
    Pred(String, Vec<Term>),
    Not(Box<Formula>),
    Min(Box<Formula>, Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
    Monus(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>, Box<Formula>),
    /// `q·φ` truncated at 1.
    Scale(Rational, Box<Formula>),
    AbsDiff(Box<Formula>, Box<Formula>),
    Sup(String, Box<Formula>),
    Inf(String, Box<Formula>),
}

pub type Assignment = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at offset {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("`{name}` expects {expected} argument(s), found {found} (offset {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownSymbol { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{0}` applied to the wrong number of arguments")]
    Arity(String),
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(Rational),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Pipe,
    Minus,
    Monus,
    Plus,
    Min,
    Max,
    Not,
    Star,
    Sup,
    Inf,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(q) => format!("number {}", format_rational(q)),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    let syntax = |offset: usize, message: String| ParseError::Syntax { offset, message };
    while let Some(&(i, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if d.is_ascii_digit() {
                    end = j + d.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            let num: num_bigint::BigInt = text[i..end].parse().expect("digits");
            let mut value = Rational::from_integer(num);
            // `k/n`; a slash not followed by a digit is left for `/\`
            let rest = &text[end..];
            if rest.starts_with('/') && rest[1..].starts_with(|d: char| d.is_ascii_digit()) {
                it.next();
                let start = end + 1;
                let mut stop = start;
                while let Some(&(j, d)) = it.peek() {
                    if d.is_ascii_digit() {
                        stop = j + 1;
                        it.next();
                    } else {
                        break;
                    }
                }
                let den: num_bigint::BigInt = text[start..stop].parse().expect("digits");
                if den.is_zero() {
                    return Err(syntax(i, "zero denominator".into()));
                }
                value /= Rational::from_integer(den);
            }
            out.push((Tok::Num(value), i));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if d.is_alphanumeric() || d == '_' || d == '\'' {
                    end = j + d.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            let word = &text[i..end];
            let tok = match word {
                "min" => Tok::Min,
                "max" => Tok::Max,
                "not" => Tok::Not,
                "sup" => Tok::Sup,
                "inf" => Tok::Inf,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, i));
            continue;
        }
        it.next();
        let two = |it: &mut std::iter::Peekable<std::str::CharIndices>, want: char| {
            if it.peek().map(|&(_, d)| d) == Some(want) {
                it.next();
                true
            } else {
                false
            }
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '|' => Tok::Pipe,
            '*' | '·' => Tok::Star,
            '∧' => Tok::Min,
            '∨' => Tok::Max,
            '¬' => Tok::Not,
            '∸' | '−' => Tok::Monus,
            '∔' => Tok::Plus,
            '-' => {
                if two(&mut it, '.') {
                    Tok::Monus
                } else {
                    Tok::Minus
                }
            }
            '+' => {
                if two(&mut it, '.') {
                    Tok::Plus
                } else {
                    return Err(syntax(i, "expected `+.`".into()));
                }
            }
            '/' => {
                if two(&mut it, '\\') {
                    Tok::Min
                } else {
                    return Err(syntax(i, "expected `/\\`".into()));
                }
            }
            '\\' => {
                if two(&mut it, '/') {
                    Tok::Max
                } else {
                    return Err(syntax(i, "expected `\\/`".into()));
                }
            }
            other => return Err(syntax(i, format!("unexpected character `{other}`"))),
        };
        out.push((tok, i));
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    bound: Vec<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Max {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::Max(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.add()?;
        while *self.peek() == Tok::Min {
            self.bump();
            let rhs = self.add()?;
            lhs = Formula::Min(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn add(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.scale()?;
        loop {
            match self.peek() {
                Tok::Monus => {
                    self.bump();
                    let rhs = self.scale()?;
                    lhs = Formula::Monus(Box::new(lhs), Box::new(rhs));
                }
                Tok::Plus => {
                    self.bump();
                    let rhs = self.scale()?;
                    lhs = Formula::Plus(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn scale(&mut self) -> Result<Formula, ParseError> {
        if let (Tok::Num(q), Tok::Star) = (self.peek().clone(), self.peek_at(1)) {
            self.bump();
            self.bump();
            let body = self.scale()?;
            return Ok(Formula::Scale(q, Box::new(body)));
        }
        self.unary()
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Tok::Sup | Tok::Inf => {
                let is_sup = *self.peek() == Tok::Sup;
                self.bump();
                let var = match self.bump() {
                    Tok::Ident(v) => v,
                    _ => {
                        self.pos -= 1;
                        return self.error("expected a variable after quantifier");
                    }
                };
                self.expect(Tok::Dot, "`.` after quantified variable")?;
                self.bound.push(var.clone());
                let body = self.or();
                self.bound.pop();
                let body = Box::new(body?);
                Ok(if is_sup {
                    Formula::Sup(var, body)
                } else {
                    Formula::Inf(var, body)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(q) => match TruthValue::new(q) {
                Ok(v) => Ok(Formula::Lit(v)),
                Err(_) => Err(ParseError::Syntax {
                    offset: at,
                    message: "literal outside [0,1] (use `q * e` for scaling)".into(),
                }),
            },
            Tok::LParen => {
                let f = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Pipe => {
                let a = self.or()?;
                self.expect(Tok::Minus, "`-` inside `|..|`")?;
                let b = self.or()?;
                self.expect(Tok::Pipe, "closing `|`")?;
                Ok(Formula::AbsDiff(Box::new(a), Box::new(b)))
            }
            Tok::Ident(name) if name == METRIC_SYMBOL => {
                let args = self.arguments(&name, at)?;
                if args.len() != 2 {
                    return Err(ParseError::Arity {
                        name,
                        expected: 2,
                        found: args.len(),
                        offset: at,
                    });
                }
                let mut it = args.into_iter();
                Ok(Formula::Dist(it.next().unwrap(), it.next().unwrap()))
            }
            Tok::Ident(name) => {
                let Some(decl) = self.sig.predicate(&name) else {
                    return Err(ParseError::UnknownSymbol { name, offset: at });
                };
                let expected = decl.arity;
                let args = if *self.peek() == Tok::LParen {
                    self.arguments(&name, at)?
                } else {
                    Vec::new()
                };
                if args.len() != expected {
                    return Err(ParseError::Arity {
                        name,
                        expected,
                        found: args.len(),
                        offset: at,
                    });
                }
                Ok(Formula::Pred(name, args))
            }
            other => {
                self.pos -= usize::from(other != Tok::Eof);
                self.error(format!("expected a formula, found {}", describe(&other)))
            }
        }
    }

    fn arguments(&mut self, _name: &str, _at: usize) -> Result<Vec<Term>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let at = self.offset();
        let name = match self.peek().clone() {
            Tok::Ident(n) => {
                self.bump();
                n
            }
            other => return self.error(format!("expected a term, found {}", describe(&other))),
        };
        if *self.peek() == Tok::LParen {
            let Some(decl) = self.sig.function(&name) else {
                return Err(ParseError::UnknownSymbol { name, offset: at });
            };
            let expected = decl.arity;
            let args = self.arguments(&name, at)?;
            if args.len() != expected {
                return Err(ParseError::Arity {
                    name,
                    expected,
                    found: args.len(),
                    offset: at,
                });
            }
            return Ok(Term::Func(name, args));
        }
        if self.bound.iter().any(|b| b == &name) {
            return Ok(Term::Var(name));
        }
        if self.sig.is_constant(&name) {
            return Ok(Term::Const(name));
        }
        if let Some(decl) = self.sig.function(&name) {
            if decl.arity == 0 {
                return Ok(Term::Func(name, Vec::new()));
            }
        }
        Ok(Term::Var(name))
    }
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig,
        bound: Vec::new(),
    };
    let f = p.or()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}

// ---------------------------------------------------------------- printing

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::Func(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    write_args(f, args)?;
                }
                Ok(())
            }
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit(v) => write!(f, "{v}"),
            Formula::Dist(a, b) => write!(f, "d({a}, {b})"),
            Formula::Pred(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    write_args(f, args)?;
                }
                Ok(())
            }
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::Min(a, b) => write!(f, "({a} min {b})"),
            Formula::Max(a, b) => write!(f, "({a} max {b})"),
            Formula::Monus(a, b) => write!(f, "({a} -. {b})"),
            Formula::Plus(a, b) => write!(f, "({a} +. {b})"),
            Formula::Scale(q, a) => write!(f, "({} * {a})", format_rational(q)),
            Formula::AbsDiff(a, b) => write!(f, "|{a} - {b}|"),
            Formula::Sup(v, a) => write!(f, "(sup {v}. {a})"),
            Formula::Inf(v, a) => write!(f, "(inf {v}. {a})"),
        }
    }
}

/// Canonical, fully parenthesised text; `parse_formula` inverts it.
pub fn format_formula(f: &Formula) -> String {
    f.to_string()
}

// ---------------------------------------------------------------- analysis

impl Term {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Func(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Lipschitz constant in `var`, if every function modulus is Lipschitz.
    fn lipschitz_in(&self, var: &str, sig: &Signature) -> Option<Rational> {
        match self {
            Term::Var(v) => Some(if v == var { Rational::one() } else { Rational::zero() }),
            Term::Const(_) => Some(Rational::zero()),
            Term::Func(name, args) => {
                let sum = sum_bounds(args.iter().map(|a| a.lipschitz_in(var, sig)))?;
                if sum.is_zero() {
                    return Some(sum);
                }
                match &sig.function(name)?.modulus {
                    crate::plmap::PLMap::Lipschitz(q) => Some(q * sum),
                    _ => None,
                }
            }
        }
    }
}

fn sum_bounds(it: impl Iterator<Item = Option<Rational>>) -> Option<Rational> {
    it.fold(Some(Rational::zero()), |acc, b| Some(acc? + b?))
}

impl Formula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit(_) => {}
            Formula::Dist(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Pred(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Formula::Not(a) | Formula::Scale(_, a) => a.collect_free(out),
            Formula::Min(a, b)
            | Formula::Max(a, b)
            | Formula::Monus(a, b)
            | Formula::Plus(a, b)
            | Formula::AbsDiff(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Sup(v, a) | Formula::Inf(v, a) => {
                let mut inner = BTreeSet::new();
                a.collect_free(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// A Lipschitz constant for the formula as a function of `var` alone,
    /// composed along the AST from the declared moduli. `None` when some
    /// modulus on the way is not of Lipschitz form.
    pub fn lipschitz_in(&self, var: &str, sig: &Signature) -> Option<Rational> {
        let pred_bound = |name: &str, args: &[Term]| -> Option<Rational> {
            let sum = sum_bounds(args.iter().map(|a| a.lipschitz_in(var, sig)))?;
            if sum.is_zero() {
                return Some(sum);
            }
            match &sig.predicate(name)?.modulus {
                crate::plmap::PLMap::Lipschitz(q) => Some(q * sum),
                _ => None,
            }
        };
        match self {
            Formula::Lit(_) => Some(Rational::zero()),
            Formula::Dist(a, b) => Some(a.lipschitz_in(var, sig)? + b.lipschitz_in(var, sig)?),
            Formula::Pred(name, args) => pred_bound(name, args),
            Formula::Not(a) => a.lipschitz_in(var, sig),
            Formula::Scale(q, a) => Some(q * a.lipschitz_in(var, sig)?),
            Formula::Min(a, b) | Formula::Max(a, b) => {
                let (x, y) = (a.lipschitz_in(var, sig)?, b.lipschitz_in(var, sig)?);
                Some(if x > y { x } else { y })
            }
            Formula::Monus(a, b) | Formula::Plus(a, b) | Formula::AbsDiff(a, b) => {
                Some(a.lipschitz_in(var, sig)? + b.lipschitz_in(var, sig)?)
            }
            Formula::Sup(v, a) | Formula::Inf(v, a) => {
                if v == var {
                    Some(Rational::zero())
                } else {
                    a.lipschitz_in(var, sig)
                }
            }
        }
    }
}

// ---------------------------------------------------------------- evaluation

fn eval_term(t: &Term, m: &FiniteStructure, a: &Assignment) -> Result<usize, EvalError> {
    match t {
        Term::Var(v) => a.get(v).copied().ok_or_else(|| EvalError::Unbound(v.clone())),
        Term::Const(c) => m
            .constants
            .get(c)
            .copied()
            .ok_or_else(|| EvalError::UnknownSymbol(c.clone())),
        Term::Func(name, args) => {
            let f = m
                .functions
                .get(name)
                .ok_or_else(|| EvalError::UnknownSymbol(name.clone()))?;
            if f.arity != args.len() {
                return Err(EvalError::Arity(name.clone()));
            }
            let vals = args
                .iter()
                .map(|x| eval_term(x, m, a))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(f.value(m.size(), &vals))
        }
    }
}

/// Exact value of `f` in `m` under `a`. Quantifiers range over the whole
/// universe; `sup` stops early at 1 and `inf` at 0.
pub fn eval_formula(f: &Formula, m: &FiniteStructure, a: &Assignment) -> Result<TruthValue, EvalError> {
    let mut scratch = a.clone();
    eval_in(f, m, &mut scratch)
}

fn eval_in(f: &Formula, m: &FiniteStructure, a: &mut Assignment) -> Result<TruthValue, EvalError> {
    Ok(match f {
        Formula::Lit(v) => v.clone(),
        Formula::Dist(x, y) => {
            let (i, j) = (eval_term(x, m, a)?, eval_term(y, m, a)?);
            m.d(i, j).clone()
        }
        Formula::Pred(name, args) => {
            let p = m
                .predicates
                .get(name)
                .ok_or_else(|| EvalError::UnknownSymbol(name.clone()))?;
            if p.arity != args.len() {
                return Err(EvalError::Arity(name.clone()));
            }
            let vals = args
                .iter()
                .map(|x| eval_term(x, m, a))
                .collect::<Result<Vec<_>, _>>()?;
            p.value(m.size(), &vals).clone()
        }
        Formula::Not(x) => eval_in(x, m, a)?.negate(),
        Formula::Min(x, y) => eval_in(x, m, a)?.meet(&eval_in(y, m, a)?),
        Formula::Max(x, y) => eval_in(x, m, a)?.join(&eval_in(y, m, a)?),
        Formula::Monus(x, y) => eval_in(x, m, a)?.monus(&eval_in(y, m, a)?),
        Formula::Plus(x, y) => eval_in(x, m, a)?.plus(&eval_in(y, m, a)?),
        Formula::Scale(q, x) => eval_in(x, m, a)?.scale(q),
        Formula::AbsDiff(x, y) => eval_in(x, m, a)?.abs_diff(&eval_in(y, m, a)?),
        Formula::Sup(v, body) => quantify(v, body, m, a, true)?,
        Formula::Inf(v, body) => quantify(v, body, m, a, false)?,
    })
}

fn quantify(
    v: &str,
    body: &Formula,
    m: &FiniteStructure,
    a: &mut Assignment,
    is_sup: bool,
) -> Result<TruthValue, EvalError> {
    let saved = a.get(v).copied();
    // sup ∅ = 0, inf ∅ = 1
    let mut acc = if is_sup { TruthValue::zero() } else { TruthValue::one() };
    let mut result = Ok(());
    for e in 0..m.size() {
        a.insert(v.to_string(), e);
        match eval_in(body, m, a) {
            Ok(val) => {
                acc = if is_sup { acc.join(&val) } else { acc.meet(&val) };
                if (is_sup && acc.is_one()) || (!is_sup && acc.is_zero()) {
                    break;
                }
            }
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    match saved {
        Some(e) => a.insert(v.to_string(), e),
        None => a.remove(v),
    };
    result.map(|_| acc)
}

/// Parses and evaluates a closed formula (or one whose free variables are
/// assigned) in one step.
pub fn eval_text(text: &str, m: &FiniteStructure, a: &Assignment) -> Result<TruthValue, FormulaError> {
    let f = parse_formula(text, &m.signature())?;
    Ok(eval_formula(&f, m, a)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
