//! Recursive-descent parser for the surface syntax.
//!
//! ```text
//! expr  := "\" x ":" expr "." expr | "Pi" x ":" expr "." expr
//!        | "Sigma" x ":" expr "." expr | "if" expr "then" expr "else" expr
//!        | "pair" "(" expr "," expr ")" ":" expr
//!        | "let" x [":" expr] "=" expr "in" expr
//!        | arrow
//! arrow := prod ["->" expr]
//! prod  := app ["*" prod]
//! app   := ("fst" | "snd") atom | atom atom*
//! atom  := x | "*" | "Box" | "Bool" | "Unit" | "unit" | "1" | "true" | "false"
//!        | "(" expr ")" | "random" "[" real "]" "(" expr ")"
//!        | "case" x "{" (expr "=>" expr ";")+ "}" "(" expr ")"
//! ```
//!
//! A program is a sequence of `assume x : T;` declarations followed by one
//! expression. `#` starts a line comment.

use std::sync::Arc;

use thiserror::Error;

use super::context::Context;
use super::expr::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: probability {value} is outside (0, 1)")]
    RhoOutOfRange { line: usize, col: usize, value: f64 },
}

/// Computes the possible types of a `let`-bound expression so the binding
/// can be desugared. One type yields `(\x:A. body) e`; several yield a
/// dispatch with one case per type.
pub trait LetTyper {
    fn binding_types(&self, ctx: &Context, bound: &Term) -> Result<Vec<Term>, String>;
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 16] = [
    "=>", "->", "\\", ":", ".", "(", ")", ",", "[", "]", "{", "}", ";", "*", "=", "_",
];

const KEYWORDS: [&str; 18] = [
    "Pi", "Sigma", "if", "then", "else", "fst", "snd", "pair", "random", "case", "let", "in",
    "Bool", "Unit", "unit", "true", "false", "Box",
];

struct Cursor {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek(0) {
            self.i += 1;
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
    }

    fn bump_while(&mut self, f: impl Fn(char) -> bool) {
        while self.peek(0).is_some_and(&f) {
            self.bump();
        }
    }

    fn text(&self, start: usize) -> String {
        self.chars[start..self.i].iter().collect()
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: src.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek(0) {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            cur.bump_while(|c| c != '\n');
            continue;
        }
        let (line, col, start) = (cur.line, cur.col, cur.i);
        if c.is_ascii_alphabetic() || (c == '_' && cur.peek(1).is_some_and(is_ident_char)) {
            cur.bump_while(is_ident_char);
            out.push(Token {
                tok: Tok::Ident(cur.text(start)),
                line,
                col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            cur.bump_while(|c| c.is_ascii_digit());
            if cur.peek(0) == Some('.') && cur.peek(1).is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
                cur.bump_while(|c| c.is_ascii_digit());
            }
            if matches!(cur.peek(0), Some('e' | 'E')) {
                let sign = usize::from(matches!(cur.peek(1), Some('-' | '+')));
                if cur.peek(1 + sign).is_some_and(|c| c.is_ascii_digit()) {
                    for _ in 0..=sign {
                        cur.bump();
                    }
                    cur.bump_while(|c| c.is_ascii_digit());
                }
            }
            out.push(Token {
                tok: Tok::Number(cur.text(start)),
                line,
                col,
            });
            continue;
        }
        let rest: String = [cur.peek(0), cur.peek(1)].into_iter().flatten().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                for _ in 0..s.len() {
                    cur.bump();
                }
                out.push(Token {
                    tok: Tok::Sym(s),
                    line,
                    col,
                });
            }
            None => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line: cur.line,
        col: cur.col,
    });
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Parses a closed expression. `let` bindings are typed with the
/// probabilistic kernel in the empty context.
pub fn parse(text: &str) -> Result<Term, ParseError> {
    parse_in(&Context::new(), text)
}

/// Parses an expression whose free variables are declared in `ctx`.
pub fn parse_in(ctx: &Context, text: &str) -> Result<Term, ParseError> {
    let typer = crate::prob::KernelLetTyper;
    let mut p = Parser::new(text, ctx.clone(), &typer)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses `assume x : T;` declarations followed by an expression.
pub fn parse_program(text: &str) -> Result<(Context, Term), ParseError> {
    let typer = crate::prob::KernelLetTyper;
    let mut p = Parser::new(text, Context::new(), &typer)?;
    while p.peek_ident("assume") {
        let at = p.pos;
        p.pos += 1;
        let v = p.ident()?;
        p.expect(":")?;
        let ty = p.expr()?;
        p.expect(";")?;
        if p.ctx.push(name(&v), ty).is_err() {
            return Err(p.error_at(at, format!("`{v}` declared twice")));
        }
    }
    let e = p.expr()?;
    p.expect_eof()?;
    Ok((p.ctx, e))
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    ctx: Context,
    // Binders in scope; `None` when the type is not statically known.
    scope: Vec<(Name, Option<Term>)>,
    typer: &'a dyn LetTyper,
}

impl<'a> Parser<'a> {
    fn new(text: &str, ctx: Context, typer: &'a dyn LetTyper) -> Result<Parser<'a>, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            ctx,
            scope: Vec::new(),
            typer,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn peek_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn error_at(&self, pos: usize, message: String) -> ParseError {
        let t = &self.toks[pos];
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.pos, message.into())
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.peek_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.describe())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.peek_ident(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.describe())))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.error(format!("unexpected {}", self.describe()))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            Tok::Sym("_") => {
                self.pos += 1;
                Ok("_".into())
            }
            _ => Err(self.error(format!("expected identifier, found {}", self.describe()))),
        }
    }

    fn with_binder<T>(
        &mut self,
        v: &str,
        ty: Option<Term>,
        f: impl FnOnce(&mut Self) -> Result<T, ParseError>,
    ) -> Result<T, ParseError> {
        self.scope.push((name(v), ty));
        let r = f(self);
        self.scope.pop();
        r
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        if self.peek_sym("\\") {
            self.pos += 1;
            let (v, dom, body) = self.binder_tail()?;
            return Ok(Arc::new(Expr::Lam {
                var: name(&v),
                domain: dom,
                body,
            }));
        }
        if self.peek_ident("Pi") || self.peek_ident("Sigma") {
            let is_pi = self.peek_ident("Pi");
            self.pos += 1;
            let (v, domain, body) = self.binder_tail()?;
            let var = name(&v);
            return Ok(Arc::new(if is_pi {
                Expr::Pi { var, domain, body }
            } else {
                Expr::Sigma { var, domain, body }
            }));
        }
        if self.peek_ident("if") {
            self.pos += 1;
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let then_branch = self.expr()?;
            self.expect_kw("else")?;
            let else_branch = self.expr()?;
            return Ok(if_then_else(cond, then_branch, else_branch));
        }
        if self.peek_ident("pair") {
            self.pos += 1;
            self.expect("(")?;
            let left = self.expr()?;
            self.expect(",")?;
            let right = self.expr()?;
            self.expect(")")?;
            self.expect(":")?;
            let tag = self.expr()?;
            return Ok(pair(left, right, tag));
        }
        if self.peek_ident("let") {
            return self.let_binding();
        }
        self.arrow()
    }

    fn binder_tail(&mut self) -> Result<(String, Term, Term), ParseError> {
        let v = self.ident()?;
        self.expect(":")?;
        let domain = self.expr()?;
        self.expect(".")?;
        let body = self.with_binder(&v, Some(domain.clone()), |p| p.expr())?;
        Ok((v, domain, body))
    }

    fn let_binding(&mut self) -> Result<Term, ParseError> {
        let at = self.pos;
        self.pos += 1;
        let v = self.ident()?;
        let annotation = if self.peek_sym(":") {
            self.pos += 1;
            Some(self.expr()?)
        } else {
            None
        };
        self.expect("=")?;
        let bound = self.expr()?;
        self.expect_kw("in")?;
        let types = match annotation {
            Some(t) => vec![t],
            None => {
                let ctx = self.scope_context().map_err(|m| self.error_at(at, m))?;
                self.typer
                    .binding_types(&ctx, &bound)
                    .map_err(|m| self.error_at(at, format!("cannot type let-binding `{v}`: {m}")))?
            }
        };
        match types.as_slice() {
            [] => Err(self.error_at(at, format!("let-binding `{v}` has no type"))),
            [ty] => {
                let ty = ty.clone();
                let body = self.with_binder(&v, Some(ty.clone()), |p| p.expr())?;
                Ok(app(
                    Arc::new(Expr::Lam {
                        var: name(&v),
                        domain: ty,
                        body,
                    }),
                    bound,
                ))
            }
            _ => {
                let body = self.with_binder(&v, None, |p| p.expr())?;
                let cases = types
                    .iter()
                    .map(|t| case(t.clone(), body.clone()))
                    .collect();
                Ok(dispatch(&v, cases, bound))
            }
        }
    }

    // Global context extended with the statically typed binders in scope.
    fn scope_context(&self) -> Result<Context, String> {
        let mut ctx = self.ctx.clone();
        for (v, ty) in &self.scope {
            match ty {
                Some(t) => {
                    if ctx.contains(v) {
                        return Err(format!("binder `{v}` shadows a declaration"));
                    }
                    ctx.push_unchecked(v.clone(), t.clone());
                }
                None => return Err(format!("type of `{v}` is not known here; annotate the let")),
            }
        }
        Ok(ctx)
    }

    fn arrow(&mut self) -> Result<Term, ParseError> {
        let lhs = self.product()?;
        if self.peek_sym("->") {
            self.pos += 1;
            let rhs = self.expr()?;
            return Ok(arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        let lhs = self.application()?;
        if self.peek_sym("*") {
            self.pos += 1;
            let rhs = self.product()?;
            return Ok(product(lhs, rhs));
        }
        Ok(lhs)
    }

    fn application(&mut self) -> Result<Term, ParseError> {
        let mut head = if self.peek_ident("fst") || self.peek_ident("snd") {
            let side = if self.peek_ident("fst") {
                Side::First
            } else {
                Side::Second
            };
            self.pos += 1;
            proj(side, self.atom()?)
        } else if self.peek_sym("*") {
            self.pos += 1;
            star()
        } else {
            self.atom()?
        };
        while self.starts_atom() {
            let arg = self.atom()?;
            head = app(head, arg);
        }
        Ok(head)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                !KEYWORDS.contains(&s.as_str())
                    || matches!(
                        s.as_str(),
                        "Bool" | "Unit" | "unit" | "true" | "false" | "Box" | "random" | "case"
                    )
            }
            Tok::Number(_) => true,
            Tok::Sym(s) => matches!(*s, "(" | "_"),
            Tok::Eof => false,
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let at = self.pos;
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.pos += 1;
                let e =
                    if self.peek_sym("*") && matches!(self.toks[self.pos + 1].tok, Tok::Sym(")")) {
                        self.pos += 1;
                        star()
                    } else {
                        self.expr()?
                    };
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym("*") => {
                self.pos += 1;
                Ok(star())
            }
            Tok::Number(n) if n == "1" => {
                self.pos += 1;
                Ok(one())
            }
            Tok::Ident(s) => match s.as_str() {
                "Bool" => self.bump(bool_ty()),
                "Unit" => self.bump(unit_ty()),
                "unit" => self.bump(one()),
                "true" => self.bump(tt()),
                "false" => self.bump(ff()),
                "Box" => self.bump(sort(Sort::Box)),
                "random" => self.random(),
                "case" => self.dispatch(),
                _ => {
                    let v = self.ident()?;
                    Ok(Arc::new(Expr::Var(name(&v))))
                }
            },
            Tok::Sym("_") => {
                self.pos += 1;
                Ok(var("_"))
            }
            _ => Err(self.error_at(
                at,
                format!("expected expression, found {}", self.describe()),
            )),
        }
    }

    fn bump(&mut self, e: Term) -> Result<Term, ParseError> {
        self.pos += 1;
        Ok(e)
    }

    fn random(&mut self) -> Result<Term, ParseError> {
        self.pos += 1;
        self.expect("[")?;
        let at = self.pos;
        let value: f64 = match self.peek().clone() {
            Tok::Number(n) => {
                self.pos += 1;
                n.parse()
                    .map_err(|_| self.error_at(at, format!("bad number `{n}`")))?
            }
            _ => return Err(self.error(format!("expected probability, found {}", self.describe()))),
        };
        let rho = Rho::new(value).ok_or_else(|| {
            let t = &self.toks[at];
            ParseError::RhoOutOfRange {
                line: t.line,
                col: t.col,
                value,
            }
        })?;
        self.expect("]")?;
        self.expect("(")?;
        let target = self.expr()?;
        self.expect(")")?;
        Ok(Arc::new(Expr::Random { rho, target }))
    }

    fn dispatch(&mut self) -> Result<Term, ParseError> {
        self.pos += 1;
        let v = self.ident()?;
        self.expect("{")?;
        let mut cases = Vec::new();
        while !self.peek_sym("}") {
            let ty = self.expr()?;
            self.expect("=>")?;
            let body = self.with_binder(&v, Some(ty.clone()), |p| p.expr())?;
            self.expect(";")?;
            cases.push(case(ty, body));
        }
        if cases.is_empty() {
            return Err(self.error("dispatch needs at least one case"));
        }
        self.expect("}")?;
        self.expect("(")?;
        let arg = self.expr()?;
        self.expect(")")?;
        Ok(dispatch(&v, cases, arg))
    }
}
