//! First-order formulas over a finite signature, with a small parser.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::LogicError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LTerm {
    Const(String),
    Var(String),
    Fun(String, Vec<LTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String, Vec<LTerm>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: &str, consts: &[&str]) -> Formula {
        Formula::Atom(
            pred.into(),
            consts.iter().map(|c| LTerm::Const((*c).into())).collect(),
        )
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn term(t: &LTerm, bound: &[String], out: &mut BTreeSet<String>) {
            match t {
                LTerm::Const(_) => {}
                LTerm::Var(v) => {
                    if !bound.contains(v) {
                        out.insert(v.clone());
                    }
                }
                LTerm::Fun(_, args) => args.iter().for_each(|a| term(a, bound, out)),
            }
        }
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Atom(_, args) => args.iter().for_each(|a| term(a, bound, out)),
                Formula::Not(a) => go(a, bound, out),
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Forall(v, body) | Formula::Exists(v, body) => {
                    bound.push(v.clone());
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Replaces free occurrences of variable `x` by constant `c`.
    pub fn instantiate(&self, x: &str, c: &str) -> Formula {
        fn term(t: &LTerm, x: &str, c: &str) -> LTerm {
            match t {
                LTerm::Var(v) if v == x => LTerm::Const(c.into()),
                LTerm::Fun(g, args) => {
                    LTerm::Fun(g.clone(), args.iter().map(|a| term(a, x, c)).collect())
                }
                _ => t.clone(),
            }
        }
        let bin = |a: &Formula, b: &Formula| {
            (Box::new(a.instantiate(x, c)), Box::new(b.instantiate(x, c)))
        };
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(p, args) => {
                Formula::Atom(p.clone(), args.iter().map(|a| term(a, x, c)).collect())
            }
            Formula::Not(a) => Formula::Not(Box::new(a.instantiate(x, c))),
            Formula::And(a, b) => {
                let (a, b) = bin(a, b);
                Formula::And(a, b)
            }
            Formula::Or(a, b) => {
                let (a, b) = bin(a, b);
                Formula::Or(a, b)
            }
            Formula::Implies(a, b) => {
                let (a, b) = bin(a, b);
                Formula::Implies(a, b)
            }
            Formula::Forall(v, _) | Formula::Exists(v, _) if v == x => self.clone(),
            Formula::Forall(v, body) => {
                Formula::Forall(v.clone(), Box::new(body.instantiate(x, c)))
            }
            Formula::Exists(v, body) => {
                Formula::Exists(v.clone(), Box::new(body.instantiate(x, c)))
            }
        }
    }
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Forall(..) | Formula::Exists(..) => 0,
        Formula::Implies(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        _ => 4,
    }
}

impl fmt::Display for LTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LTerm::Const(c) | LTerm::Var(c) => write!(f, "{c}"),
            LTerm::Fun(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, g: &Formula, min: u8| {
            if precedence(g) < min {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(p, args) => {
                write!(f, "{p}")?;
                if !args.is_empty() {
                    write!(f, "{}", LTerm::Fun(String::new(), args.clone()))?;
                }
                Ok(())
            }
            Formula::Not(a) => {
                write!(f, "~")?;
                sub(f, a, 4)
            }
            Formula::And(a, b) => {
                sub(f, a, 3)?;
                write!(f, " & ")?;
                sub(f, b, 4)
            }
            Formula::Or(a, b) => {
                sub(f, a, 2)?;
                write!(f, " | ")?;
                sub(f, b, 3)
            }
            Formula::Implies(a, b) => {
                sub(f, a, 2)?;
                write!(f, " -> ")?;
                sub(f, b, 1)
            }
            Formula::Forall(v, body) => write!(f, "forall {v}. {body}"),
            Formula::Exists(v, body) => write!(f, "exists {v}. {body}"),
        }
    }
}

/// A function symbol interpreted by an explicit table over constant indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FunctionTable {
    pub arity: usize,
    pub table: HashMap<Vec<usize>, usize>,
}

/// Constants, predicates with arities and tabulated functions, each in
/// declaration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Signature {
    pub constants: Vec<String>,
    pub predicates: Vec<(String, usize)>,
    pub functions: Vec<(String, FunctionTable)>,
}

impl Signature {
    pub fn constant_index(&self, c: &str) -> Option<usize> {
        self.constants.iter().position(|k| k == c)
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.predicates
            .iter()
            .find(|(p, _)| p == pred)
            .map(|(_, a)| *a)
    }

    pub fn function(&self, g: &str) -> Option<&FunctionTable> {
        self.functions.iter().find(|(n, _)| n == g).map(|(_, t)| t)
    }

    fn declared(&self, name: &str) -> bool {
        self.constant_index(name).is_some()
            || self.arity(name).is_some()
            || self.function(name).is_some()
    }

    pub fn add_constant(&mut self, c: &str) -> Result<(), LogicError> {
        if self.declared(c) {
            return Err(LogicError::DuplicateName(c.into()));
        }
        self.constants.push(c.into());
        Ok(())
    }

    pub fn add_predicate(&mut self, p: &str, arity: usize) -> Result<(), LogicError> {
        if self.declared(p) {
            return Err(LogicError::DuplicateName(p.into()));
        }
        self.predicates.push((p.into(), arity));
        Ok(())
    }

    pub fn add_function(&mut self, g: &str, table: FunctionTable) -> Result<(), LogicError> {
        if self.declared(g) {
            return Err(LogicError::DuplicateName(g.into()));
        }
        self.functions.push((g.into(), table));
        Ok(())
    }

    /// Number of ground atoms, the sum over predicates of |C|^arity.
    pub fn ground_atom_count(&self) -> usize {
        self.predicates
            .iter()
            .map(|(_, a)| self.constants.len().pow(*a as u32))
            .sum()
    }

    /// Classifies bare names as constants or variables and checks every
    /// symbol against the signature.
    pub fn resolve(&self, f: &Formula) -> Result<Formula, LogicError> {
        self.resolve_in(f, &mut Vec::new())
    }

    fn resolve_term(&self, t: &LTerm, bound: &[String]) -> Result<LTerm, LogicError> {
        match t {
            LTerm::Var(v) | LTerm::Const(v) => {
                if bound.contains(v) {
                    Ok(LTerm::Var(v.clone()))
                } else if self.constant_index(v).is_some() {
                    Ok(LTerm::Const(v.clone()))
                } else if self.arity(v).is_some() || self.function(v).is_some() {
                    Err(LogicError::UnknownSymbol(format!("`{v}` used as a term")))
                } else {
                    Ok(LTerm::Var(v.clone()))
                }
            }
            LTerm::Fun(g, args) => {
                let table = self
                    .function(g)
                    .ok_or_else(|| LogicError::UnknownSymbol(format!("function `{g}`")))?;
                if table.arity != args.len() {
                    return Err(LogicError::ArityMismatch {
                        symbol: g.clone(),
                        expected: table.arity,
                        found: args.len(),
                    });
                }
                let args = args
                    .iter()
                    .map(|a| self.resolve_term(a, bound))
                    .collect::<Result<_, _>>()?;
                Ok(LTerm::Fun(g.clone(), args))
            }
        }
    }

    fn resolve_in(&self, f: &Formula, bound: &mut Vec<String>) -> Result<Formula, LogicError> {
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Atom(p, args) => {
                let arity = self
                    .arity(p)
                    .ok_or_else(|| LogicError::UnknownSymbol(format!("predicate `{p}`")))?;
                if arity != args.len() {
                    return Err(LogicError::ArityMismatch {
                        symbol: p.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                let args = args
                    .iter()
                    .map(|a| self.resolve_term(a, bound))
                    .collect::<Result<_, _>>()?;
                Formula::Atom(p.clone(), args)
            }
            Formula::Not(a) => Formula::not(self.resolve_in(a, bound)?),
            Formula::And(a, b) => {
                Formula::and(self.resolve_in(a, bound)?, self.resolve_in(b, bound)?)
            }
            Formula::Or(a, b) => {
                Formula::or(self.resolve_in(a, bound)?, self.resolve_in(b, bound)?)
            }
            Formula::Implies(a, b) => {
                Formula::implies(self.resolve_in(a, bound)?, self.resolve_in(b, bound)?)
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(v.clone());
                let body = self.resolve_in(body, bound);
                bound.pop();
                let body = Box::new(body?);
                match f {
                    Formula::Forall(..) => Formula::Forall(v.clone(), body),
                    _ => Formula::Exists(v.clone(), body),
                }
            }
        })
    }

    /// The constant a ground term denotes.
    pub fn eval_term(&self, t: &LTerm) -> Result<usize, LogicError> {
        match t {
            LTerm::Const(c) => self
                .constant_index(c)
                .ok_or_else(|| LogicError::UnknownSymbol(format!("constant `{c}`"))),
            LTerm::Var(v) => Err(LogicError::UnknownSymbol(format!("unbound variable `{v}`"))),
            LTerm::Fun(g, args) => {
                let table = self
                    .function(g)
                    .ok_or_else(|| LogicError::UnknownSymbol(format!("function `{g}`")))?;
                let key = args
                    .iter()
                    .map(|a| self.eval_term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                table.table.get(&key).copied().ok_or_else(|| {
                    let args: Vec<&str> = key.iter().map(|i| self.constants[*i].as_str()).collect();
                    LogicError::MissingFunctionTable(format!("{g}({})", args.join(", ")))
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Arrow,
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | ',' | '.' | '~' | '&' | '|' => {
                chars.next();
                out.push(match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '~' => Tok::Not,
                    '&' => Tok::And,
                    _ => Tok::Or,
                });
            }
            '-' => {
                chars.next();
                if chars.next() != Some('>') {
                    return Err("expected `->`".into());
                }
                out.push(Tok::Arrow);
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(s));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), String> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(format!("expected {t:?}, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.toks.get(self.pos) {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            other => Err(format!("expected identifier, found {other:?}")),
        }
    }

    fn formula(&mut self) -> Result<Formula, String> {
        if let Some(Tok::Ident(k)) = self.peek() {
            if k == "forall" || k == "exists" {
                let universal = k == "forall";
                self.pos += 1;
                let mut vars = vec![self.ident()?];
                while let Some(Tok::Ident(_)) = self.peek() {
                    vars.push(self.ident()?);
                }
                self.expect(&Tok::Dot)?;
                let body = self.formula()?;
                return Ok(vars.into_iter().rev().fold(body, |b, v| {
                    if universal {
                        Formula::Forall(v, Box::new(b))
                    } else {
                        Formula::Exists(v, Box::new(b))
                    }
                }));
            }
        }
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Arrow) {
            return Ok(Formula::implies(lhs, self.formula()?));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, String> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::Or) {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, String> {
        let mut f = self.unary()?;
        while self.eat(&Tok::And) {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, String> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        if let Some(Tok::Ident(k)) = self.peek() {
            if k == "forall" || k == "exists" {
                return self.formula();
            }
        }
        let p = self.ident()?;
        match p.as_str() {
            "true" => return Ok(Formula::True),
            "false" => return Ok(Formula::False),
            _ => {}
        }
        let args = if self.peek() == Some(&Tok::LParen) {
            self.args()?
        } else {
            Vec::new()
        };
        Ok(Formula::Atom(p, args))
    }

    fn args(&mut self) -> Result<Vec<LTerm>, String> {
        self.expect(&Tok::LParen)?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(&Tok::RParen)?;
        Ok(args)
    }

    fn term(&mut self) -> Result<LTerm, String> {
        let name = self.ident()?;
        if self.peek() == Some(&Tok::LParen) {
            return Ok(LTerm::Fun(name, self.args()?));
        }
        Ok(LTerm::Var(name))
    }
}

/// Parses a formula. Bare names in term position come back as variables;
/// [`Signature::resolve`] turns declared ones into constants.
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    let toks = lex(text).map_err(|m| LogicError::Parse {
        line: 0,
        message: m,
    })?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.formula().map_err(|m| LogicError::Parse {
        line: 0,
        message: m,
    })?;
    if p.pos != p.toks.len() {
        return Err(LogicError::Parse {
            line: 0,
            message: format!("trailing input at {:?}", p.peek()),
        });
    }
    Ok(f)
}
