use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use super::expr::{free_vars, fresh_name, occurs_free, Case, Expr, Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    /// The replacement is not a value but the target uses the variable as a
    /// pair component.
    #[error("cannot substitute non-value for `{0}`: it appears as a pair component")]
    PairSubstitutionViolation(Name),
}

/// Capture-avoiding substitution `e[x := v]`.
///
/// Bound variables of `e` are renamed when they would capture a free
/// variable of `v`. Subterms in which `x` is not free are shared, not copied.
pub fn substitute(e: &Term, x: &str, v: &Term) -> Result<Term, SubstError> {
    if !v.is_value() && pair_component_mentions(e, x) {
        return Err(SubstError::PairSubstitutionViolation(x.into()));
    }
    let fv = free_vars(v);
    Ok(subst(e, x, v, &fv))
}

/// Whether some pair sub-expression has the free variable `x` as a
/// component.
pub fn pair_component_mentions(e: &Expr, x: &str) -> bool {
    match e {
        Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => false,
        Expr::Pair { left, right, tag } => {
            matches!(&**left, Expr::Var(v) if &**v == x)
                || matches!(&**right, Expr::Var(v) if &**v == x)
                || pair_component_mentions(left, x)
                || pair_component_mentions(right, x)
                || pair_component_mentions(tag, x)
        }
        Expr::App(f, a) => pair_component_mentions(f, x) || pair_component_mentions(a, x),
        Expr::Lam { var, domain, body }
        | Expr::Pi { var, domain, body }
        | Expr::Sigma { var, domain, body } => {
            pair_component_mentions(domain, x) || (&**var != x && pair_component_mentions(body, x))
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            pair_component_mentions(cond, x)
                || pair_component_mentions(then_branch, x)
                || pair_component_mentions(else_branch, x)
        }
        Expr::Proj(_, t) => pair_component_mentions(t, x),
        Expr::Random { target, .. } => pair_component_mentions(target, x),
        Expr::Dispatch { var, cases, arg } => {
            pair_component_mentions(arg, x)
                || cases.iter().any(|c| {
                    pair_component_mentions(&c.ty, x)
                        || (&**var != x && pair_component_mentions(&c.body, x))
                })
        }
    }
}

fn subst(e: &Term, x: &str, v: &Term, fv: &BTreeSet<Name>) -> Term {
    if !occurs_free(x, e) {
        return e.clone();
    }
    match &**e {
        Expr::Var(_) => v.clone(),
        Expr::Const(_) | Expr::Sort(_) => e.clone(),
        Expr::Pair { left, right, tag } => Arc::new(Expr::Pair {
            left: subst(left, x, v, fv),
            right: subst(right, x, v, fv),
            tag: subst(tag, x, v, fv),
        }),
        Expr::App(f, a) => Arc::new(Expr::App(subst(f, x, v, fv), subst(a, x, v, fv))),
        Expr::Lam { var, domain, body } => {
            let (var, body) = under_binder(var, body, x, v, fv);
            Arc::new(Expr::Lam {
                var,
                domain: subst(domain, x, v, fv),
                body,
            })
        }
        Expr::Pi { var, domain, body } => {
            let (var, body) = under_binder(var, body, x, v, fv);
            Arc::new(Expr::Pi {
                var,
                domain: subst(domain, x, v, fv),
                body,
            })
        }
        Expr::Sigma { var, domain, body } => {
            let (var, body) = under_binder(var, body, x, v, fv);
            Arc::new(Expr::Sigma {
                var,
                domain: subst(domain, x, v, fv),
                body,
            })
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => Arc::new(Expr::If {
            cond: subst(cond, x, v, fv),
            then_branch: subst(then_branch, x, v, fv),
            else_branch: subst(else_branch, x, v, fv),
        }),
        Expr::Proj(side, t) => Arc::new(Expr::Proj(*side, subst(t, x, v, fv))),
        Expr::Random { rho, target } => Arc::new(Expr::Random {
            rho: *rho,
            target: subst(target, x, v, fv),
        }),
        Expr::Dispatch { var, cases, arg } => {
            let bodies_mention = &**var != x && cases.iter().any(|c| occurs_free(x, &c.body));
            let mut binder = var.clone();
            let mut renamed: Option<Vec<Term>> = None;
            if bodies_mention && fv.contains(var) {
                let mut avoid = fv.clone();
                avoid.insert(x.into());
                for c in cases.iter() {
                    avoid.extend(free_vars(&c.body));
                }
                binder = fresh_name(var, &avoid);
                let fresh = Arc::new(Expr::Var(binder.clone()));
                renamed = Some(
                    cases
                        .iter()
                        .map(|c| subst(&c.body, var, &fresh, &BTreeSet::from([binder.clone()])))
                        .collect(),
                );
            }
            let cases: Vec<Case> = cases
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let body = match &renamed {
                        Some(bodies) => &bodies[i],
                        None => &c.body,
                    };
                    Case {
                        ty: subst(&c.ty, x, v, fv),
                        body: if bodies_mention {
                            subst(body, x, v, fv)
                        } else {
                            body.clone()
                        },
                    }
                })
                .collect();
            Arc::new(Expr::Dispatch {
                var: binder,
                cases: cases.into(),
                arg: subst(arg, x, v, fv),
            })
        }
    }
}

fn under_binder(var: &Name, body: &Term, x: &str, v: &Term, fv: &BTreeSet<Name>) -> (Name, Term) {
    if &**var == x || !occurs_free(x, body) {
        return (var.clone(), body.clone());
    }
    if fv.contains(var) {
        let mut avoid = fv.clone();
        avoid.extend(free_vars(body));
        avoid.insert(x.into());
        let fresh = fresh_name(var, &avoid);
        let renamed = subst(
            body,
            var,
            &Arc::new(Expr::Var(fresh.clone())),
            &BTreeSet::from([fresh.clone()]),
        );
        (fresh, subst(&renamed, x, v, fv))
    } else {
        (var.clone(), subst(body, x, v, fv))
    }
}
