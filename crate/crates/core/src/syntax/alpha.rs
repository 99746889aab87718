use std::sync::Arc;

use indexmap::IndexMap;

use super::expr::{name, Case, Expr, Name, Term};

/// Equality up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    eq_in(a, b, &mut Vec::new(), &mut Vec::new())
}

// Binder stacks hold names innermost-last; a bound variable is identified by
// its distance from the top of the stack.
fn lookup(stack: &[&Name], v: &Name) -> Option<usize> {
    stack.iter().rev().position(|n| *n == v)
}

fn eq_in<'a>(a: &'a Expr, b: &'a Expr, sa: &mut Vec<&'a Name>, sb: &mut Vec<&'a Name>) -> bool {
    use Expr::*;
    match (a, b) {
        (Const(x), Const(y)) => x == y,
        (Sort(x), Sort(y)) => x == y,
        (Var(x), Var(y)) => match (lookup(sa, x), lookup(sb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (
            Pair {
                left: l1,
                right: r1,
                tag: t1,
            },
            Pair {
                left: l2,
                right: r2,
                tag: t2,
            },
        ) => eq_in(l1, l2, sa, sb) && eq_in(r1, r2, sa, sb) && eq_in(t1, t2, sa, sb),
        (App(f1, a1), App(f2, a2)) => eq_in(f1, f2, sa, sb) && eq_in(a1, a2, sa, sb),
        (
            Lam {
                var: v1,
                domain: d1,
                body: b1,
            },
            Lam {
                var: v2,
                domain: d2,
                body: b2,
            },
        )
        | (
            Pi {
                var: v1,
                domain: d1,
                body: b1,
            },
            Pi {
                var: v2,
                domain: d2,
                body: b2,
            },
        )
        | (
            Sigma {
                var: v1,
                domain: d1,
                body: b1,
            },
            Sigma {
                var: v2,
                domain: d2,
                body: b2,
            },
        ) => eq_in(d1, d2, sa, sb) && binder_eq(v1, b1, v2, b2, sa, sb),
        (
            If {
                cond: c1,
                then_branch: t1,
                else_branch: e1,
            },
            If {
                cond: c2,
                then_branch: t2,
                else_branch: e2,
            },
        ) => eq_in(c1, c2, sa, sb) && eq_in(t1, t2, sa, sb) && eq_in(e1, e2, sa, sb),
        (Proj(s1, t1), Proj(s2, t2)) => s1 == s2 && eq_in(t1, t2, sa, sb),
        (
            Random {
                rho: r1,
                target: t1,
            },
            Random {
                rho: r2,
                target: t2,
            },
        ) => r1 == r2 && eq_in(t1, t2, sa, sb),
        (
            Dispatch {
                var: v1,
                cases: c1,
                arg: a1,
            },
            Dispatch {
                var: v2,
                cases: c2,
                arg: a2,
            },
        ) => {
            c1.len() == c2.len()
                && c1.iter().zip(c2.iter()).all(|(x, y)| {
                    eq_in(&x.ty, &y.ty, sa, sb) && binder_eq(v1, &x.body, v2, &y.body, sa, sb)
                })
                && eq_in(a1, a2, sa, sb)
        }
        _ => false,
    }
}

fn binder_eq<'a>(
    v1: &'a Name,
    b1: &'a Expr,
    v2: &'a Name,
    b2: &'a Expr,
    sa: &mut Vec<&'a Name>,
    sb: &mut Vec<&'a Name>,
) -> bool {
    sa.push(v1);
    sb.push(v2);
    let r = eq_in(b1, b2, sa, sb);
    sa.pop();
    sb.pop();
    r
}

/// Representative of the alpha-equivalence class: every bound variable is
/// renamed to `#k`, where `k` is the number of enclosing binders. `#` never
/// occurs in parsed identifiers, so free variables cannot collide.
///
/// Two expressions are alpha-equivalent iff their canonical forms are
/// syntactically equal, which makes the canonical form usable as a hash key.
pub fn canonical(e: &Term) -> Term {
    canon(e, &mut Vec::new())
}

fn canon(e: &Term, stack: &mut Vec<(Name, Name)>) -> Term {
    let rebind = |stack: &mut Vec<(Name, Name)>, v: &Name| {
        let fresh = name(&format!("#{}", stack.len()));
        stack.push((v.clone(), fresh.clone()));
        fresh
    };
    match &**e {
        Expr::Const(_) | Expr::Sort(_) => e.clone(),
        Expr::Var(v) => match stack.iter().rev().find(|(n, _)| n == v) {
            Some((_, c)) => Arc::new(Expr::Var(c.clone())),
            None => e.clone(),
        },
        Expr::Pair { left, right, tag } => Arc::new(Expr::Pair {
            left: canon(left, stack),
            right: canon(right, stack),
            tag: canon(tag, stack),
        }),
        Expr::App(f, a) => Arc::new(Expr::App(canon(f, stack), canon(a, stack))),
        Expr::Lam { var, domain, body } => {
            let domain = canon(domain, stack);
            let var = rebind(stack, var);
            let body = canon(body, stack);
            stack.pop();
            Arc::new(Expr::Lam { var, domain, body })
        }
        Expr::Pi { var, domain, body } => {
            let domain = canon(domain, stack);
            let var = rebind(stack, var);
            let body = canon(body, stack);
            stack.pop();
            Arc::new(Expr::Pi { var, domain, body })
        }
        Expr::Sigma { var, domain, body } => {
            let domain = canon(domain, stack);
            let var = rebind(stack, var);
            let body = canon(body, stack);
            stack.pop();
            Arc::new(Expr::Sigma { var, domain, body })
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => Arc::new(Expr::If {
            cond: canon(cond, stack),
            then_branch: canon(then_branch, stack),
            else_branch: canon(else_branch, stack),
        }),
        Expr::Proj(side, t) => Arc::new(Expr::Proj(*side, canon(t, stack))),
        Expr::Random { rho, target } => Arc::new(Expr::Random {
            rho: *rho,
            target: canon(target, stack),
        }),
        Expr::Dispatch { var, cases, arg } => {
            let mut out = Vec::with_capacity(cases.len());
            let mut binder = var.clone();
            for c in cases.iter() {
                let ty = canon(&c.ty, stack);
                binder = rebind(stack, var);
                let body = canon(&c.body, stack);
                stack.pop();
                out.push(Case { ty, body });
            }
            if cases.is_empty() {
                binder = name(&format!("#{}", stack.len()));
            }
            Arc::new(Expr::Dispatch {
                var: binder,
                cases: out.into(),
                arg: canon(arg, stack),
            })
        }
    }
}

/// An insertion-ordered set of expressions modulo alpha-equivalence. The
/// first-inserted spelling of each class is kept for display.
#[derive(Clone, Debug, Default)]
pub struct ExprSet {
    items: IndexMap<Term, Term>,
}

impl ExprSet {
    pub fn new() -> ExprSet {
        ExprSet::default()
    }

    pub fn singleton(e: Term) -> ExprSet {
        let mut s = ExprSet::new();
        s.insert(e);
        s
    }

    /// Returns true when the class was not yet present.
    pub fn insert(&mut self, e: Term) -> bool {
        let key = canonical(&e);
        if self.items.contains_key(&key) {
            false
        } else {
            self.items.insert(key, e);
            true
        }
    }

    pub fn extend(&mut self, other: &ExprSet) {
        for e in other.iter() {
            self.insert(e.clone());
        }
    }

    pub fn contains(&self, e: &Term) -> bool {
        self.items.contains_key(&canonical(e))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.items.values()
    }

    pub fn is_subset(&self, other: &ExprSet) -> bool {
        self.items.keys().all(|k| other.items.contains_key(k))
    }

    pub fn same_elements(&self, other: &ExprSet) -> bool {
        self.len() == other.len() && self.is_subset(other)
    }
}

impl FromIterator<Term> for ExprSet {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        let mut s = ExprSet::new();
        for e in iter {
            s.insert(e);
        }
        s
    }
}
