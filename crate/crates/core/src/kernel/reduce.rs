use std::sync::Arc;

use crate::syntax::{occurs_free, substitute, Case, Expr, Name, Side, Term};

use super::KernelError;

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Only redexes none of whose free variables is bound by an enclosing
    /// binder. This is the operational relation.
    Free,
    /// Any redex, including under binders. Used to compare types.
    Strong,
}

/// Contracts `e` if it is itself a redex. A lambda application whose
/// argument is not deterministic, or whose substitution would put a
/// non-value into a pair component, is not contracted.
pub(crate) fn contract(e: &Expr) -> Option<Term> {
    match e {
        Expr::Proj(side, target) => match &**target {
            Expr::Pair { left, right, .. } if left.is_value() && right.is_value() => {
                Some(match side {
                    Side::First => left.clone(),
                    Side::Second => right.clone(),
                })
            }
            _ => None,
        },
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => match cond.as_bool() {
            Some(true) => Some(then_branch.clone()),
            Some(false) => Some(else_branch.clone()),
            None => None,
        },
        Expr::App(fun, arg) => match &**fun {
            Expr::Lam { var, body, .. } if arg.is_deterministic() => {
                substitute(body, var, arg).ok()
            }
            _ => None,
        },
        _ => None,
    }
}

/// Leftmost-outermost search for a contractible redex. `bound` holds the
/// names bound above `e`; in free mode a redex mentioning one of them is
/// skipped. Dispatch case lists are never entered.
pub(crate) fn step_in(e: &Term, mode: Mode, bound: &mut Vec<Name>) -> Option<Term> {
    if mode == Mode::Strong || !bound.iter().any(|b| occurs_free(b, e)) {
        if let Some(r) = contract(e) {
            return Some(r);
        }
    }
    let rebuilt = match &**e {
        Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => return None,
        Expr::Pair { left, right, tag } => {
            if let Some(l) = step_in(left, mode, bound) {
                Expr::Pair {
                    left: l,
                    right: right.clone(),
                    tag: tag.clone(),
                }
            } else if let Some(r) = step_in(right, mode, bound) {
                Expr::Pair {
                    left: left.clone(),
                    right: r,
                    tag: tag.clone(),
                }
            } else {
                let t = step_in(tag, mode, bound)?;
                Expr::Pair {
                    left: left.clone(),
                    right: right.clone(),
                    tag: t,
                }
            }
        }
        Expr::App(f, a) => {
            if let Some(f2) = step_in(f, mode, bound) {
                Expr::App(f2, a.clone())
            } else {
                Expr::App(f.clone(), step_in(a, mode, bound)?)
            }
        }
        Expr::Lam { var, domain, body } => {
            let (domain, body) = step_binder(var, domain, body, mode, bound)?;
            Expr::Lam {
                var: var.clone(),
                domain,
                body,
            }
        }
        Expr::Pi { var, domain, body } => {
            let (domain, body) = step_binder(var, domain, body, mode, bound)?;
            Expr::Pi {
                var: var.clone(),
                domain,
                body,
            }
        }
        Expr::Sigma { var, domain, body } => {
            let (domain, body) = step_binder(var, domain, body, mode, bound)?;
            Expr::Sigma {
                var: var.clone(),
                domain,
                body,
            }
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            if let Some(c) = step_in(cond, mode, bound) {
                Expr::If {
                    cond: c,
                    then_branch: then_branch.clone(),
                    else_branch: else_branch.clone(),
                }
            } else if let Some(t) = step_in(then_branch, mode, bound) {
                Expr::If {
                    cond: cond.clone(),
                    then_branch: t,
                    else_branch: else_branch.clone(),
                }
            } else {
                let f = step_in(else_branch, mode, bound)?;
                Expr::If {
                    cond: cond.clone(),
                    then_branch: then_branch.clone(),
                    else_branch: f,
                }
            }
        }
        Expr::Proj(side, t) => Expr::Proj(*side, step_in(t, mode, bound)?),
        Expr::Random { rho, target } => Expr::Random {
            rho: *rho,
            target: step_in(target, mode, bound)?,
        },
        Expr::Dispatch { var, cases, arg } => Expr::Dispatch {
            var: var.clone(),
            cases: Arc::<[Case]>::clone(cases),
            arg: step_in(arg, mode, bound)?,
        },
    };
    Some(Arc::new(rebuilt))
}

fn step_binder(
    var: &Name,
    domain: &Term,
    body: &Term,
    mode: Mode,
    bound: &mut Vec<Name>,
) -> Option<(Term, Term)> {
    if let Some(d) = step_in(domain, mode, bound) {
        return Some((d, body.clone()));
    }
    bound.push(var.clone());
    let b = step_in(body, mode, bound);
    bound.pop();
    Some((domain.clone(), b?))
}

/// One step of beta reduction: contracts the leftmost-outermost free redex,
/// or returns `None` when `e` is in normal form.
pub fn step_beta(e: &Term) -> Option<Term> {
    step_in(e, Mode::Free, &mut Vec::new())
}

/// Iterates [`step_beta`] to a normal form.
pub fn normalize(e: &Term, fuel: usize) -> Result<Term, KernelError> {
    normalize_bound(e, &[], fuel)
}

/// Normal form treating the names in `bound` as bound by an enclosing
/// binder, so redexes mentioning them are left alone.
pub fn normalize_bound(e: &Term, bound: &[Name], fuel: usize) -> Result<Term, KernelError> {
    run(e, Mode::Free, bound, fuel)
}

/// Full normal form, reducing under binders as well.
pub fn normalize_strong(e: &Term, fuel: usize) -> Result<Term, KernelError> {
    run(e, Mode::Strong, &[], fuel)
}

fn run(e: &Term, mode: Mode, bound: &[Name], fuel: usize) -> Result<Term, KernelError> {
    let mut cur = e.clone();
    let mut stack = bound.to_vec();
    for _ in 0..fuel {
        match step_in(&cur, mode, &mut stack) {
            Some(next) => cur = next,
            None => return Ok(cur),
        }
    }
    match step_in(&cur, mode, &mut stack) {
        None => Ok(cur),
        Some(_) => Err(KernelError::FuelExhausted(fuel)),
    }
}
