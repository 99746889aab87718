use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::syntax::{
    alpha_eq, bool_ty, free_vars, fresh_name, proj, sort, substitute, unit_ty, Const, Context,
    Expr, Name, Side, Sort, Term,
};

use super::reduce::normalize_strong;
use super::{KernelError, TYPE_FUEL};

/// The inference rule at which typing failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Axioms,
    Start,
    Formation,
    Application,
    Abstraction,
    If,
    Products1,
    Products2,
    Conversion,
    /// `random` or dispatch nodes have no type in the deterministic system.
    Fragment,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Axioms => "axioms",
            Rule::Start => "start",
            Rule::Formation => "type/kind formation",
            Rule::Application => "application",
            Rule::Abstraction => "abstraction",
            Rule::If => "if",
            Rule::Products1 => "products (1)",
            Rule::Products2 => "products (2)",
            Rule::Conversion => "type conversion",
            Rule::Fragment => "probabilistic construct",
        })
    }
}

fn fail<T>(rule: Rule, detail: impl Into<String>) -> Result<T, KernelError> {
    Err(KernelError::NotTypable {
        rule,
        detail: detail.into(),
    })
}

/// Full normal form of a type.
pub fn type_nf(t: &Term) -> Result<Term, KernelError> {
    normalize_strong(t, TYPE_FUEL)
}

/// Beta-equivalence of two expressions, decided by comparing full normal
/// forms up to alpha-equivalence.
pub fn beta_equiv(a: &Term, b: &Term, fuel: usize) -> Result<bool, KernelError> {
    Ok(alpha_eq(
        &*normalize_strong(a, fuel)?,
        &*normalize_strong(b, fuel)?,
    ))
}

/// Infers the type of `e` in `ctx`. The result is in full normal form.
pub fn infer_type(ctx: &Context, e: &Term) -> Result<Term, KernelError> {
    Checker { ctx: ctx.clone() }.infer(e)
}

/// Whether `ctx |- e : ty` is derivable.
pub fn check_judgment(ctx: &Context, e: &Term, ty: &Term) -> bool {
    match infer_type(ctx, e) {
        Ok(t) => type_nf(ty).map(|ty| alpha_eq(&t, &ty)).unwrap_or(false),
        Err(_) => false,
    }
}

/// The sort of a type: `Ok(s)` when `ctx |- t : s`.
pub fn sort_of(ctx: &Context, t: &Term) -> Result<Sort, KernelError> {
    Checker { ctx: ctx.clone() }.sort_of(t, Rule::Formation)
}

/// Checks that every declared type is well-sorted in the prefix before it
/// and that names are distinct.
pub fn check_context(ctx: &Context) -> Result<(), KernelError> {
    let mut prefix = Context::new();
    for (n, t) in ctx.iter() {
        sort_of(&prefix, t).map_err(|e| {
            KernelError::IllFormedContext(format!("type of `{n}` is not well-sorted: {e}"))
        })?;
        prefix
            .push(n.clone(), t.clone())
            .map_err(|n| KernelError::IllFormedContext(format!("`{n}` declared twice")))?;
    }
    Ok(())
}

/// A derivable statement `ctx |- term : ty`.
#[derive(Clone, Debug)]
pub struct Judgment {
    ctx: Context,
    term: Term,
    ty: Term,
}

impl Judgment {
    pub fn derive(ctx: &Context, term: &Term) -> Result<Judgment, KernelError> {
        let ty = infer_type(ctx, term)?;
        Ok(Judgment {
            ctx: ctx.clone(),
            term: term.clone(),
            ty,
        })
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn ty(&self) -> &Term {
        &self.ty
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {} : {}", self.ctx, self.term, self.ty)
    }
}

struct Checker {
    ctx: Context,
}

impl Checker {
    fn infer(&mut self, e: &Term) -> Result<Term, KernelError> {
        match &**e {
            Expr::Const(c) => Ok(match c {
                Const::One => unit_ty(),
                Const::True | Const::False => bool_ty(),
                Const::Unit | Const::Bool => sort(Sort::Star),
            }),
            Expr::Sort(Sort::Star) => Ok(sort(Sort::Box)),
            Expr::Sort(Sort::Box) => fail(Rule::Axioms, "Box has no type"),
            Expr::Var(v) => match self.ctx.lookup(v) {
                Some(t) => type_nf(&t.clone()),
                None => Err(KernelError::UnboundVariable(v.clone())),
            },
            Expr::Pi { var, domain, body } | Expr::Sigma { var, domain, body } => {
                self.expect_type(domain, Rule::Formation)?;
                let (_, s) = self.under(var, domain, body, |c, body| {
                    c.sort_of(body, Rule::Formation)
                })?;
                Ok(sort(s))
            }
            Expr::Lam { var, domain, body } => {
                self.expect_type(domain, Rule::Abstraction)?;
                let (v, b) = self.under(var, domain, body, |c, body| {
                    let b = c.infer(body)?;
                    if matches!(&*b, Expr::Sort(Sort::Box)) {
                        return fail(
                            Rule::Abstraction,
                            "body is a kind; its product is not formable",
                        );
                    }
                    c.sort_of(&b, Rule::Abstraction)?;
                    Ok(b)
                })?;
                Ok(Arc::new(Expr::Pi {
                    var: v,
                    domain: type_nf(domain)?,
                    body: b,
                }))
            }
            Expr::App(f, a) => {
                let tf = self.infer(f)?;
                let Expr::Pi { var, domain, body } = &*tf else {
                    return fail(
                        Rule::Application,
                        format!("`{f}` has non-product type `{tf}`"),
                    );
                };
                let ta = self.infer(a)?;
                if !alpha_eq(domain, &ta) {
                    return fail(
                        Rule::Application,
                        format!("argument `{a}` has type `{ta}`, expected `{domain}`"),
                    );
                }
                match substitute(body, var, a) {
                    Ok(t) => type_nf(&t),
                    Err(err) => fail(Rule::Application, err.to_string()),
                }
            }
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let tc = self.infer(cond)?;
                if !alpha_eq(&tc, &bool_ty()) {
                    return fail(Rule::If, format!("condition `{cond}` has type `{tc}`"));
                }
                let t1 = self.infer(then_branch)?;
                let t2 = self.infer(else_branch)?;
                if alpha_eq(&t1, &t2) {
                    return Ok(t1);
                }
                let s1 = self.sort_of(&t1, Rule::If)?;
                let s2 = self.sort_of(&t2, Rule::If)?;
                if s1 != s2 {
                    return fail(
                        Rule::If,
                        format!("branch types `{t1}` and `{t2}` differ in sort"),
                    );
                }
                type_nf(&Arc::new(Expr::If {
                    cond: cond.clone(),
                    then_branch: t1,
                    else_branch: t2,
                }))
            }
            Expr::Pair { left, right, tag } => {
                if !left.is_value() || !right.is_value() {
                    return fail(Rule::Products1, "pair components must be values");
                }
                self.sort_of(tag, Rule::Products1)?;
                let tag = type_nf(tag)?;
                let Expr::Sigma { var, domain, body } = &*tag else {
                    return fail(
                        Rule::Products1,
                        format!("pair tag `{tag}` is not a sum type"),
                    );
                };
                let tl = self.infer(left)?;
                if !alpha_eq(&tl, domain) {
                    return fail(
                        Rule::Products1,
                        format!("first component has type `{tl}`, expected `{domain}`"),
                    );
                }
                let expected = match substitute(body, var, left) {
                    Ok(t) => type_nf(&t)?,
                    Err(err) => return fail(Rule::Products1, err.to_string()),
                };
                let tr = self.infer(right)?;
                if !alpha_eq(&tr, &expected) {
                    return fail(
                        Rule::Products1,
                        format!("second component has type `{tr}`, expected `{expected}`"),
                    );
                }
                Ok(tag)
            }
            Expr::Proj(side, c) => {
                let tc = self.infer(c)?;
                let Expr::Sigma { var, domain, body } = &*tc else {
                    return fail(Rule::Products2, format!("`{c}` has non-sum type `{tc}`"));
                };
                match side {
                    Side::First => Ok(domain.clone()),
                    Side::Second => match substitute(body, var, &proj(Side::First, c.clone())) {
                        Ok(t) => type_nf(&t),
                        Err(err) => fail(Rule::Products2, err.to_string()),
                    },
                }
            }
            Expr::Random { .. } | Expr::Dispatch { .. } => fail(
                Rule::Fragment,
                format!("`{e}` is not a deterministic expression"),
            ),
        }
    }

    fn sort_of(&mut self, t: &Term, rule: Rule) -> Result<Sort, KernelError> {
        let k = self.infer(t)?;
        match &*k {
            Expr::Sort(s) => Ok(*s),
            _ => fail(rule, format!("`{t}` has type `{k}`, which is not a sort")),
        }
    }

    fn expect_type(&mut self, t: &Term, rule: Rule) -> Result<(), KernelError> {
        match self.sort_of(t, rule)? {
            Sort::Star => Ok(()),
            Sort::Box => fail(rule, format!("domain `{t}` must have sort *")),
        }
    }

    // Runs `f` on `body` with `var : domain` in scope, renaming the binder
    // when the context already declares it.
    fn under<T>(
        &mut self,
        var: &Name,
        domain: &Term,
        body: &Term,
        f: impl FnOnce(&mut Self, &Term) -> Result<T, KernelError>,
    ) -> Result<(Name, T), KernelError>
    where
        T: Sized,
    {
        let (v, body) = if self.ctx.contains(var) {
            let mut avoid: BTreeSet<Name> = self.ctx.names().cloned().collect();
            avoid.extend(free_vars(body));
            let fresh = fresh_name(var, &avoid);
            let renamed = substitute(body, var, &Arc::new(Expr::Var(fresh.clone())))
                .expect("variables are values");
            (fresh, renamed)
        } else {
            (var.clone(), body.clone())
        };
        self.ctx.push_unchecked(v.clone(), domain.clone());
        let r = f(self, &body);
        self.ctx.pop();
        Ok((v, r?))
    }
}
