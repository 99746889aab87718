use std::sync::Arc;

use serde::Serialize;

use crate::kernel::{contract, infer_type, type_nf};
use crate::syntax::{alpha_eq, app, ff, occurs_free, tt, Case, Context, Expr, Name, Term};

use super::ProbError;

/// Path from the root to a sub-expression. Child indices follow the
/// printed order: pair left/right/tag, application function/argument,
/// binder domain/body, if condition/then/else; a dispatch exposes only its
/// argument (index 0).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Position(pub Vec<usize>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RedexKind {
    Random,
    Dispatch,
    Beta,
}

/// One alternative of a weighted reduction step.
#[derive(Clone, Debug)]
pub struct WeightedStep {
    pub probability: f64,
    pub result: Term,
}

/// Children reachable by the redex search, with the binder (if any) that
/// scopes over each.
pub(crate) fn children(e: &Expr) -> Vec<(&Term, Option<&Name>)> {
    match e {
        Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => vec![],
        Expr::Pair { left, right, tag } => vec![(left, None), (right, None), (tag, None)],
        Expr::App(f, a) => vec![(f, None), (a, None)],
        Expr::Lam { var, domain, body }
        | Expr::Pi { var, domain, body }
        | Expr::Sigma { var, domain, body } => vec![(domain, None), (body, Some(var))],
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            vec![(cond, None), (then_branch, None), (else_branch, None)]
        }
        Expr::Proj(_, t) => vec![(t, None)],
        Expr::Random { target, .. } => vec![(target, None)],
        Expr::Dispatch { arg, .. } => vec![(arg, None)],
    }
}

fn with_child(e: &Expr, i: usize, new: Term) -> Expr {
    match (e, i) {
        (Expr::Pair { right, tag, .. }, 0) => Expr::Pair {
            left: new,
            right: right.clone(),
            tag: tag.clone(),
        },
        (Expr::Pair { left, tag, .. }, 1) => Expr::Pair {
            left: left.clone(),
            right: new,
            tag: tag.clone(),
        },
        (Expr::Pair { left, right, .. }, 2) => Expr::Pair {
            left: left.clone(),
            right: right.clone(),
            tag: new,
        },
        (Expr::App(_, a), 0) => Expr::App(new, a.clone()),
        (Expr::App(f, _), 1) => Expr::App(f.clone(), new),
        (Expr::Lam { var, body, .. }, 0) => Expr::Lam {
            var: var.clone(),
            domain: new,
            body: body.clone(),
        },
        (Expr::Lam { var, domain, .. }, 1) => Expr::Lam {
            var: var.clone(),
            domain: domain.clone(),
            body: new,
        },
        (Expr::Pi { var, body, .. }, 0) => Expr::Pi {
            var: var.clone(),
            domain: new,
            body: body.clone(),
        },
        (Expr::Pi { var, domain, .. }, 1) => Expr::Pi {
            var: var.clone(),
            domain: domain.clone(),
            body: new,
        },
        (Expr::Sigma { var, body, .. }, 0) => Expr::Sigma {
            var: var.clone(),
            domain: new,
            body: body.clone(),
        },
        (Expr::Sigma { var, domain, .. }, 1) => Expr::Sigma {
            var: var.clone(),
            domain: domain.clone(),
            body: new,
        },
        (
            Expr::If {
                then_branch,
                else_branch,
                ..
            },
            0,
        ) => Expr::If {
            cond: new,
            then_branch: then_branch.clone(),
            else_branch: else_branch.clone(),
        },
        (
            Expr::If {
                cond, else_branch, ..
            },
            1,
        ) => Expr::If {
            cond: cond.clone(),
            then_branch: new,
            else_branch: else_branch.clone(),
        },
        (
            Expr::If {
                cond, then_branch, ..
            },
            2,
        ) => Expr::If {
            cond: cond.clone(),
            then_branch: then_branch.clone(),
            else_branch: new,
        },
        (Expr::Proj(side, _), 0) => Expr::Proj(*side, new),
        (Expr::Random { rho, .. }, 0) => Expr::Random {
            rho: *rho,
            target: new,
        },
        (Expr::Dispatch { var, cases, .. }, 0) => Expr::Dispatch {
            var: var.clone(),
            cases: Arc::<[Case]>::clone(cases),
            arg: new,
        },
        _ => panic!("no child {i} in {e}"),
    }
}

/// The sub-expression at `pos`.
pub fn subterm_at<'a>(e: &'a Term, pos: &Position) -> &'a Term {
    pos.0.iter().fold(e, |cur, &i| children(cur)[i].0)
}

/// `e` with the sub-expression at `pos` replaced; untouched subtrees are
/// shared.
pub fn replace_at(e: &Term, pos: &[usize], new: Term) -> Term {
    match pos.split_first() {
        None => new,
        Some((&i, rest)) => {
            let child = children(e)[i].0;
            Arc::new(with_child(e, i, replace_at(child, rest, new)))
        }
    }
}

fn find_priority(e: &Term, path: &mut Vec<usize>) -> Option<RedexKind> {
    match &**e {
        Expr::Random { .. } => return Some(RedexKind::Random),
        Expr::Dispatch { arg, .. } if arg.is_deterministic() => return Some(RedexKind::Dispatch),
        _ => {}
    }
    for (i, (c, _)) in children(e).into_iter().enumerate() {
        path.push(i);
        if let Some(k) = find_priority(c, path) {
            return Some(k);
        }
        path.pop();
    }
    None
}

fn find_beta(e: &Term, path: &mut Vec<usize>, bound: &mut Vec<Name>) -> Option<Term> {
    if !bound.iter().any(|b| occurs_free(b, e)) {
        if let Some(r) = contract(e) {
            return Some(r);
        }
    }
    for (i, (c, binder)) in children(e).into_iter().enumerate() {
        path.push(i);
        if let Some(b) = binder {
            bound.push(b.clone());
        }
        let found = find_beta(c, path, bound);
        if binder.is_some() {
            bound.pop();
        }
        if found.is_some() {
            return found;
        }
        path.pop();
    }
    None
}

/// The unique redex a weighted step may contract: the leftmost-outermost
/// `random` or dispatch with a deterministic argument if there is one,
/// otherwise the leftmost-outermost free beta redex. Dispatch case lists
/// are not searched.
pub fn select_redex(e: &Term) -> Option<(Position, RedexKind)> {
    let mut path = Vec::new();
    if let Some(k) = find_priority(e, &mut path) {
        return Some((Position(path), k));
    }
    let mut path = Vec::new();
    find_beta(e, &mut path, &mut Vec::new()).map(|_| (Position(path), RedexKind::Beta))
}

/// The case of a dispatch selected by the type of its argument.
pub fn resolve_dispatch<'a>(
    ctx: &Context,
    cases: &'a [Case],
    arg: &Term,
) -> Result<&'a Case, ProbError> {
    let ty = infer_type(ctx, arg)?;
    let mut found: Option<&Case> = None;
    for c in cases {
        if alpha_eq(&*type_nf(&c.ty)?, &ty) {
            match found {
                Some(prev) if !alpha_eq(&prev.body, &c.body) => {
                    return Err(ProbError::DispatchAmbiguous(ty.to_string()));
                }
                Some(_) => {}
                None => found = Some(c),
            }
        }
    }
    found.ok_or_else(|| ProbError::DispatchNoMatch(ty.to_string()))
}

/// All weighted one-step reducts of `e`; empty iff `e` is a normal form of
/// the deterministic system. Dispatch arguments are typed in `ctx`.
pub fn step_rho(ctx: &Context, e: &Term) -> Result<Vec<WeightedStep>, ProbError> {
    let mut path = Vec::new();
    if let Some(kind) = find_priority(e, &mut path) {
        let sub = subterm_at(e, &Position(path.clone()));
        let alternatives = match (&**sub, kind) {
            (Expr::Random { rho, target }, RedexKind::Random) => vec![
                (rho.get(), app(target.clone(), tt())),
                (1.0 - rho.get(), app(target.clone(), ff())),
            ],
            (Expr::Dispatch { var, cases, arg }, RedexKind::Dispatch) => {
                let c = resolve_dispatch(ctx, cases, arg)?;
                let lam = Arc::new(Expr::Lam {
                    var: var.clone(),
                    domain: c.ty.clone(),
                    body: c.body.clone(),
                });
                vec![(1.0, app(lam, arg.clone()))]
            }
            _ => unreachable!("priority search returns random or dispatch"),
        };
        return Ok(alternatives
            .into_iter()
            .map(|(p, r)| WeightedStep {
                probability: p,
                result: replace_at(e, &path, r),
            })
            .collect());
    }
    let mut path = Vec::new();
    Ok(match find_beta(e, &mut path, &mut Vec::new()) {
        Some(r) => vec![WeightedStep {
            probability: 1.0,
            result: replace_at(e, &path, r),
        }],
        None => vec![],
    })
}
