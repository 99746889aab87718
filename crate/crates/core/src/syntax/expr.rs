use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Shared, immutable expression handle.
pub type Term = Arc<Expr>;

/// Variable names.
pub type Name = Arc<str>;

/// Base constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Const {
    /// The inhabitant of `Unit`, written `unit` (or `1`).
    One,
    True,
    False,
    Unit,
    Bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Star,
    Box,
}

/// Projection index for `fst` / `snd`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    First,
    Second,
}

/// A branching probability, strictly inside (0, 1).
#[derive(Clone, Copy, Debug)]
pub struct Rho(f64);

impl Rho {
    pub fn new(value: f64) -> Option<Rho> {
        (value > 0.0 && value < 1.0).then_some(Rho(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Rho {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Rho {}

impl Hash for Rho {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// One arm of a dispatch list: a case type and the body run when the
/// argument inhabits it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Case {
    pub ty: Term,
    pub body: Term,
}

/// Pseudo-expressions of the probabilistic calculus. The deterministic
/// fragment is everything except `Random` and `Dispatch`.
///
/// `PartialEq` is syntactic; use [`crate::syntax::alpha_eq`] for equality up
/// to renaming of bound variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Const),
    Sort(Sort),
    Var(Name),
    /// `pair(left, right) : tag`; components are values.
    Pair {
        left: Term,
        right: Term,
        tag: Term,
    },
    App(Term, Term),
    Lam {
        var: Name,
        domain: Term,
        body: Term,
    },
    If {
        cond: Term,
        then_branch: Term,
        else_branch: Term,
    },
    Proj(Side, Term),
    Pi {
        var: Name,
        domain: Term,
        body: Term,
    },
    Sigma {
        var: Name,
        domain: Term,
        body: Term,
    },
    Random {
        rho: Rho,
        target: Term,
    },
    /// `(\var. {cases}) arg`: applies the body of the unique case whose type
    /// the argument inhabits. `var` is bound in every case body.
    Dispatch {
        var: Name,
        cases: Arc<[Case]>,
        arg: Term,
    },
}

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

pub fn constant(c: Const) -> Term {
    Arc::new(Expr::Const(c))
}

pub fn sort(s: Sort) -> Term {
    Arc::new(Expr::Sort(s))
}

pub fn star() -> Term {
    sort(Sort::Star)
}

pub fn bool_ty() -> Term {
    constant(Const::Bool)
}

pub fn unit_ty() -> Term {
    constant(Const::Unit)
}

pub fn tt() -> Term {
    constant(Const::True)
}

pub fn ff() -> Term {
    constant(Const::False)
}

pub fn one() -> Term {
    constant(Const::One)
}

pub fn var(n: &str) -> Term {
    Arc::new(Expr::Var(name(n)))
}

pub fn app(fun: Term, arg: Term) -> Term {
    Arc::new(Expr::App(fun, arg))
}

pub fn lam(v: &str, domain: Term, body: Term) -> Term {
    Arc::new(Expr::Lam {
        var: name(v),
        domain,
        body,
    })
}

pub fn pi(v: &str, domain: Term, body: Term) -> Term {
    Arc::new(Expr::Pi {
        var: name(v),
        domain,
        body,
    })
}

pub fn sigma(v: &str, domain: Term, body: Term) -> Term {
    Arc::new(Expr::Sigma {
        var: name(v),
        domain,
        body,
    })
}

/// Non-dependent function type `a -> b`.
pub fn arrow(a: Term, b: Term) -> Term {
    let v = fresh_name("_", &free_vars(&b));
    Arc::new(Expr::Pi {
        var: v,
        domain: a,
        body: b,
    })
}

/// Non-dependent product type `a * b`.
pub fn product(a: Term, b: Term) -> Term {
    let v = fresh_name("_", &free_vars(&b));
    Arc::new(Expr::Sigma {
        var: v,
        domain: a,
        body: b,
    })
}

pub fn if_then_else(cond: Term, then_branch: Term, else_branch: Term) -> Term {
    Arc::new(Expr::If {
        cond,
        then_branch,
        else_branch,
    })
}

pub fn proj(side: Side, target: Term) -> Term {
    Arc::new(Expr::Proj(side, target))
}

pub fn pair(left: Term, right: Term, tag: Term) -> Term {
    Arc::new(Expr::Pair { left, right, tag })
}

/// Panics if `rho` is outside (0, 1); use [`Rho::new`] for checked input.
pub fn random(rho: f64, target: Term) -> Term {
    let rho = Rho::new(rho).unwrap_or_else(|| panic!("rho {rho} outside (0, 1)"));
    Arc::new(Expr::Random { rho, target })
}

pub fn dispatch(v: &str, cases: Vec<Case>, arg: Term) -> Term {
    Arc::new(Expr::Dispatch {
        var: name(v),
        cases: cases.into(),
        arg,
    })
}

pub fn case(ty: Term, body: Term) -> Case {
    Case { ty, body }
}

impl Expr {
    /// Values: constants, sorts, variables and pairs of values.
    pub fn is_value(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => true,
            Expr::Pair { left, right, .. } => left.is_value() && right.is_value(),
            _ => false,
        }
    }

    /// True when the expression contains no `Random` or `Dispatch` node,
    /// i.e. it belongs to the deterministic fragment.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Expr::Random { .. } | Expr::Dispatch { .. } => false,
            Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => true,
            Expr::Pair { left, right, tag } => {
                left.is_deterministic() && right.is_deterministic() && tag.is_deterministic()
            }
            Expr::App(f, a) => f.is_deterministic() && a.is_deterministic(),
            Expr::Lam { domain, body, .. }
            | Expr::Pi { domain, body, .. }
            | Expr::Sigma { domain, body, .. } => {
                domain.is_deterministic() && body.is_deterministic()
            }
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.is_deterministic()
                    && then_branch.is_deterministic()
                    && else_branch.is_deterministic()
            }
            Expr::Proj(_, t) => t.is_deterministic(),
        }
    }

    /// Number of nodes, counting dispatch case types and bodies.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => 0,
            Expr::Pair { left, right, tag } => left.size() + right.size() + tag.size(),
            Expr::App(f, a) => f.size() + a.size(),
            Expr::Lam { domain, body, .. }
            | Expr::Pi { domain, body, .. }
            | Expr::Sigma { domain, body, .. } => domain.size() + body.size(),
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => cond.size() + then_branch.size() + else_branch.size(),
            Expr::Proj(_, t) => t.size(),
            Expr::Random { target, .. } => target.size(),
            Expr::Dispatch { cases, arg, .. } => {
                arg.size()
                    + cases
                        .iter()
                        .map(|c| c.ty.size() + c.body.size())
                        .sum::<usize>()
            }
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Expr::Const(Const::True) => Some(true),
            Expr::Const(Const::False) => Some(false),
            _ => None,
        }
    }
}

/// Free variables, following the inductive definition: binders remove their
/// variable from the body's set. Dispatch case types are not under the
/// binder; case bodies are.
pub fn free_vars(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free<'a>(e: &'a Expr, bound: &mut Vec<&'a Name>, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Const(_) | Expr::Sort(_) => {}
        Expr::Var(v) => {
            if !bound.contains(&v) {
                out.insert(v.clone());
            }
        }
        Expr::Pair { left, right, tag } => {
            collect_free(left, bound, out);
            collect_free(right, bound, out);
            collect_free(tag, bound, out);
        }
        Expr::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
        Expr::Lam { var, domain, body }
        | Expr::Pi { var, domain, body }
        | Expr::Sigma { var, domain, body } => {
            collect_free(domain, bound, out);
            bound.push(var);
            collect_free(body, bound, out);
            bound.pop();
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => {
            collect_free(cond, bound, out);
            collect_free(then_branch, bound, out);
            collect_free(else_branch, bound, out);
        }
        Expr::Proj(_, t) => collect_free(t, bound, out),
        Expr::Random { target, .. } => collect_free(target, bound, out),
        Expr::Dispatch { var, cases, arg } => {
            for c in cases.iter() {
                collect_free(&c.ty, bound, out);
                bound.push(var);
                collect_free(&c.body, bound, out);
                bound.pop();
            }
            collect_free(arg, bound, out);
        }
    }
}

/// Whether `x` occurs free in `e`, without building the whole set.
pub fn occurs_free(x: &str, e: &Expr) -> bool {
    match e {
        Expr::Const(_) | Expr::Sort(_) => false,
        Expr::Var(v) => &**v == x,
        Expr::Pair { left, right, tag } => {
            occurs_free(x, left) || occurs_free(x, right) || occurs_free(x, tag)
        }
        Expr::App(f, a) => occurs_free(x, f) || occurs_free(x, a),
        Expr::Lam { var, domain, body }
        | Expr::Pi { var, domain, body }
        | Expr::Sigma { var, domain, body } => {
            occurs_free(x, domain) || (&**var != x && occurs_free(x, body))
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => occurs_free(x, cond) || occurs_free(x, then_branch) || occurs_free(x, else_branch),
        Expr::Proj(_, t) => occurs_free(x, t),
        Expr::Random { target, .. } => occurs_free(x, target),
        Expr::Dispatch { var, cases, arg } => {
            occurs_free(x, arg)
                || cases
                    .iter()
                    .any(|c| occurs_free(x, &c.ty) || (&**var != x && occurs_free(x, &c.body)))
        }
    }
}

/// First name of the form `base`, `base1`, `base2`, ... not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    if !avoid.contains(base) {
        return name(base);
    }
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|candidate| !avoid.contains(candidate.as_str()))
        .map(|s| name(&s))
        .expect("unbounded name supply")
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Const::One => "unit",
            Const::True => "true",
            Const::False => "false",
            Const::Unit => "Unit",
            Const::Bool => "Bool",
        })
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Star => "*",
            Sort::Box => "Box",
        })
    }
}
