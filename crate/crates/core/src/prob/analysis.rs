use std::collections::BTreeSet;
use std::sync::Arc;

use crate::kernel::{infer_type, normalize_bound, sort_of, type_nf, DEFAULT_FUEL};
use crate::syntax::{
    alpha_eq, app, bool_ty, ff, free_vars, fresh_name, occurs_free, proj, substitute, tt, Case,
    Context, Expr, ExprSet, Name, Side, Sort, Term,
};

/// The types an expression may reduce to. `NoType` is the sentinel for
/// expressions no rule assigns a type to.
#[derive(Clone, Debug)]
pub enum TypeSet {
    NoType,
    Types(ExprSet),
}

impl TypeSet {
    pub fn types(&self) -> Option<&ExprSet> {
        match self {
            TypeSet::NoType => None,
            TypeSet::Types(s) => Some(s),
        }
    }

    pub fn is_notype(&self) -> bool {
        matches!(self, TypeSet::NoType)
    }
}

/// Both operators computed together.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub types: TypeSet,
    pub reductions: ExprSet,
}

/// Computes the possible types and normal forms of `e` by the inductive
/// rules, without reducing it.
pub fn analyze(ctx: &Context, e: &Term) -> Analysis {
    let mut a = Analyzer {
        ctx: ctx.clone(),
        bound: Vec::new(),
    };
    match a.analyze(e) {
        Some((types, reductions)) => Analysis {
            types: TypeSet::Types(types),
            reductions,
        },
        None => Analysis {
            types: TypeSet::NoType,
            reductions: ExprSet::new(),
        },
    }
}

pub fn types_of(ctx: &Context, e: &Term) -> TypeSet {
    analyze(ctx, e).types
}

pub fn reductions_of(ctx: &Context, e: &Term) -> ExprSet {
    analyze(ctx, e).reductions
}

/// Sort level of a possible type: `Some(s)` when it has sort `s`; `None`
/// for `Box`, which has no type but is the type of the kinds.
fn level(ctx: &Context, t: &Term) -> Result<Option<Sort>, ()> {
    if matches!(&**t, Expr::Sort(Sort::Box)) {
        return Ok(None);
    }
    sort_of(ctx, t).map(Some).map_err(|_| ())
}

/// A legal expression has types, and they all live at one sort level.
pub fn is_legal(ctx: &Context, e: &Term) -> bool {
    let Some(types) = types_of(ctx, e).types().cloned() else {
        return false;
    };
    let mut levels = types.iter().map(|t| level(ctx, t));
    match levels.next() {
        None => false,
        Some(Err(())) => false,
        Some(Ok(first)) => levels.all(|l| l == Ok(first)),
    }
}

/// Whether some sub-expression that could be contracted while `x` is bound
/// depends on `x`, looking inside dispatch case lists too.
///
/// Deterministic redexes mentioning a bound variable are never free, so only
/// `random` nodes and dispatches with a deterministic argument count. A
/// dispatch depends on `x` through its argument or case types; its bodies
/// move unchanged into a beta redex that waits for `x` to be substituted.
pub fn mentions_in_redex(e: &Expr, x: &str) -> bool {
    let depends = match e {
        Expr::Random { .. } => occurs_free(x, e),
        Expr::Dispatch { cases, arg, .. } if arg.is_deterministic() => {
            occurs_free(x, arg) || cases.iter().any(|c| occurs_free(x, &c.ty))
        }
        _ => false,
    };
    if depends {
        return true;
    }
    match e {
        Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => false,
        Expr::Pair { left, right, tag } => {
            mentions_in_redex(left, x) || mentions_in_redex(right, x) || mentions_in_redex(tag, x)
        }
        Expr::App(f, a) => mentions_in_redex(f, x) || mentions_in_redex(a, x),
        Expr::Lam { var, domain, body }
        | Expr::Pi { var, domain, body }
        | Expr::Sigma { var, domain, body } => {
            mentions_in_redex(domain, x) || (&**var != x && mentions_in_redex(body, x))
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            mentions_in_redex(cond, x)
                || mentions_in_redex(then_branch, x)
                || mentions_in_redex(else_branch, x)
        }
        Expr::Proj(_, t) => mentions_in_redex(t, x),
        Expr::Random { target, .. } => mentions_in_redex(target, x),
        Expr::Dispatch { var, cases, arg } => {
            mentions_in_redex(arg, x)
                || cases.iter().any(|c| {
                    mentions_in_redex(&c.ty, x) || (&**var != x && mentions_in_redex(&c.body, x))
                })
        }
    }
}

/// Membership in the class of expressions with no reducible
/// sub-expression containing `x`.
pub fn in_t_x(e: &Expr, x: &str) -> bool {
    !mentions_in_redex(e, x)
}

type Sets = (ExprSet, ExprSet);

struct Analyzer {
    ctx: Context,
    // Binders entered by the abstraction and formation rules; normal forms
    // leave redexes mentioning them alone, as reduction of the whole would.
    bound: Vec<Name>,
}

impl Analyzer {
    fn norm(&self, e: &Term) -> Option<Term> {
        normalize_bound(e, &self.bound, DEFAULT_FUEL).ok()
    }

    fn analyze(&mut self, e: &Term) -> Option<Sets> {
        if e.is_deterministic() {
            let t = infer_type(&self.ctx, e).ok()?;
            let r = self.norm(e)?;
            return Some((ExprSet::singleton(t), ExprSet::singleton(r)));
        }
        match &**e {
            Expr::Random { target, .. } => self.random(target),
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => self.cond(cond, then_branch, else_branch),
            Expr::Lam { var, domain, body } => self.abstraction(var, domain, body),
            Expr::Pi { var, domain, body } => self.formation(var, domain, body, true),
            Expr::Sigma { var, domain, body } => self.formation(var, domain, body, false),
            Expr::App(f, a) => self.application(f, a),
            Expr::Dispatch { var, cases, arg } => self.dispatch(var, cases, arg),
            Expr::Proj(side, a) => self.projection(*side, a),
            _ => None,
        }
    }

    fn random(&mut self, target: &Term) -> Option<Sets> {
        let (tys, reds) = self.analyze(target)?;
        let mut types = ExprSet::new();
        for t in tys.iter() {
            let Expr::Pi { var, domain, body } = &**t else {
                return None;
            };
            if !alpha_eq(domain, &bool_ty()) {
                return None;
            }
            for b in [tt(), ff()] {
                types.insert(type_nf(&substitute(body, var, &b).ok()?).ok()?);
            }
        }
        let mut reductions = ExprSet::new();
        for r in reds.iter() {
            for b in [tt(), ff()] {
                reductions.insert(self.apply(r, &b)?);
            }
        }
        Some((types, reductions))
    }

    // Normal form of `r a`, contracting directly when `r` is an abstraction.
    fn apply(&self, r: &Term, a: &Term) -> Option<Term> {
        match &**r {
            Expr::Lam { var, body, .. } => self.norm(&substitute(body, var, a).ok()?),
            _ => self.norm(&app(r.clone(), a.clone())),
        }
    }

    fn cond(&mut self, cond: &Term, a1: &Term, a2: &Term) -> Option<Sets> {
        if !cond.is_deterministic() || !alpha_eq(&*infer_type(&self.ctx, cond).ok()?, &bool_ty()) {
            return None;
        }
        let (t1, r1) = self.analyze(a1)?;
        let (t2, r2) = self.analyze(a2)?;
        let mut types = ExprSet::new();
        for x in t1.iter() {
            for y in t2.iter() {
                if alpha_eq(x, y) {
                    types.insert(x.clone());
                    continue;
                }
                let (sx, sy) = (sort_of(&self.ctx, x).ok()?, sort_of(&self.ctx, y).ok()?);
                if sx != sy {
                    return None;
                }
                let motive = Arc::new(Expr::If {
                    cond: cond.clone(),
                    then_branch: x.clone(),
                    else_branch: y.clone(),
                });
                types.insert(type_nf(&motive).ok()?);
            }
        }
        let mut reductions = ExprSet::new();
        for x in r1.iter() {
            for y in r2.iter() {
                reductions.insert(self.norm(&Arc::new(Expr::If {
                    cond: cond.clone(),
                    then_branch: x.clone(),
                    else_branch: y.clone(),
                }))?);
            }
        }
        Some((types, reductions))
    }

    // Runs `f` with `var : domain` in scope, renaming the binder when the
    // context already declares the name.
    fn under<T>(
        &mut self,
        var: &Name,
        domain: &Term,
        body: &Term,
        f: impl FnOnce(&mut Self, &Term) -> Option<T>,
    ) -> Option<(Name, T)> {
        let (v, body) = if self.ctx.contains(var) {
            let mut avoid: BTreeSet<Name> = self.ctx.names().cloned().collect();
            avoid.extend(free_vars(body));
            let fresh = fresh_name(var, &avoid);
            (
                fresh.clone(),
                substitute(body, var, &Arc::new(Expr::Var(fresh))).ok()?,
            )
        } else {
            (var.clone(), body.clone())
        };
        self.ctx.push_unchecked(v.clone(), domain.clone());
        self.bound.push(v.clone());
        let r = f(self, &body);
        self.bound.pop();
        self.ctx.pop();
        Some((v, r?))
    }

    fn domain_ok(&self, domain: &Term) -> bool {
        domain.is_deterministic() && sort_of(&self.ctx, domain) == Ok(Sort::Star)
    }

    fn abstraction(&mut self, var: &Name, domain: &Term, body: &Term) -> Option<Sets> {
        if !self.domain_ok(domain) || !in_t_x(body, var) {
            return None;
        }
        let (v, (tys, reds)) = self.under(var, domain, body, |a, b| {
            let (tys, reds) = a.analyze(b)?;
            for t in tys.iter() {
                if matches!(&**t, Expr::Sort(Sort::Box)) || sort_of(&a.ctx, t).is_err() {
                    return None;
                }
            }
            Some((tys, reds))
        })?;
        let dom = type_nf(domain).ok()?;
        let types = tys
            .iter()
            .map(|t| {
                Arc::new(Expr::Pi {
                    var: v.clone(),
                    domain: dom.clone(),
                    body: t.clone(),
                })
            })
            .collect();
        let reductions = reds
            .iter()
            .map(|r| {
                Arc::new(Expr::Lam {
                    var: v.clone(),
                    domain: domain.clone(),
                    body: r.clone(),
                })
            })
            .collect();
        Some((types, reductions))
    }

    fn formation(&mut self, var: &Name, domain: &Term, body: &Term, is_pi: bool) -> Option<Sets> {
        if !self.domain_ok(domain) || !in_t_x(body, var) {
            return None;
        }
        let (v, (tys, reds)) = self.under(var, domain, body, |a, b| a.analyze(b))?;
        if tys.len() != 1 || !matches!(&**tys.iter().next()?, Expr::Sort(_)) {
            return None;
        }
        let reductions = reds
            .iter()
            .map(|r| {
                let (var, domain, body) = (v.clone(), domain.clone(), r.clone());
                Arc::new(if is_pi {
                    Expr::Pi { var, domain, body }
                } else {
                    Expr::Sigma { var, domain, body }
                })
            })
            .collect();
        Some((tys, reductions))
    }

    fn application(&mut self, f: &Term, a: &Term) -> Option<Sets> {
        let (ta, ra) = self.analyze(a)?;
        // An argument of several possible types would need a dispatch.
        if ta.len() != 1 {
            return None;
        }
        let arg_ty = ta.iter().next()?.clone();
        let (tf, rf) = self.analyze(f)?;
        let mut types = ExprSet::new();
        for t in tf.iter() {
            let Expr::Pi { var, domain, body } = &**t else {
                return None;
            };
            if !alpha_eq(domain, &arg_ty) {
                return None;
            }
            for a2 in ra.iter() {
                types.insert(type_nf(&substitute(body, var, a2).ok()?).ok()?);
            }
        }
        let mut reductions = ExprSet::new();
        for r in rf.iter() {
            for a2 in ra.iter() {
                reductions.insert(self.apply(r, a2)?);
            }
        }
        Some((types, reductions))
    }

    fn dispatch(&mut self, var: &Name, cases: &[Case], arg: &Term) -> Option<Sets> {
        let (ta, ra) = self.analyze(arg)?;
        let mut chosen: Vec<(Term, &Case)> = Vec::new();
        for t in ta.iter() {
            if sort_of(&self.ctx, t) != Ok(Sort::Star) {
                return None;
            }
            let mut matching = cases
                .iter()
                .filter(|c| type_nf(&c.ty).map(|ct| alpha_eq(&ct, t)).unwrap_or(false));
            let c = matching.next()?;
            if matching.any(|d| !alpha_eq(&d.body, &c.body)) || !in_t_x(&c.body, var) {
                return None;
            }
            chosen.push((t.clone(), c));
        }
        let mut types = ExprSet::new();
        let mut reductions = ExprSet::new();
        for a2 in ra.iter() {
            let t = infer_type(&self.ctx, a2).ok()?;
            let (_, c) = chosen.iter().find(|(ct, _)| alpha_eq(ct, &t))?;
            let (tb, rb) = self.analyze(&substitute(&c.body, var, a2).ok()?)?;
            for b in tb.iter() {
                level(&self.ctx, b).ok()?;
            }
            types.extend(&tb);
            reductions.extend(&rb);
        }
        Some((types, reductions))
    }

    fn projection(&mut self, side: Side, a: &Term) -> Option<Sets> {
        let (ta, ra) = self.analyze(a)?;
        if ta.len() != 1 {
            return None;
        }
        let t = ta.iter().next()?.clone();
        let Expr::Sigma { var, domain, body } = &*t else {
            return None;
        };
        let mut types = ExprSet::new();
        let mut reductions = ExprSet::new();
        for a2 in ra.iter() {
            reductions.insert(self.norm(&proj(side, a2.clone()))?);
            match side {
                Side::First => {
                    types.insert(domain.clone());
                }
                Side::Second => {
                    let b = substitute(body, var, &proj(Side::First, a2.clone())).ok()?;
                    types.insert(type_nf(&b).ok()?);
                }
            }
        }
        Some((types, reductions))
    }
}
