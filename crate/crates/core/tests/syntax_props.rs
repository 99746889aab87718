use std::collections::BTreeSet;

use pdts_core::corpus::{corpus_context, Generator, Ty};
use pdts_core::syntax::*;
use proptest::prelude::*;

const TYPES: [Ty; 8] = [
    Ty::Bool,
    Ty::Unit,
    Ty::A,
    Ty::Pc,
    Ty::BoolUnit,
    Ty::BoolFn,
    Ty::Dep,
    Ty::DepSum,
];

fn det_term(seed: u64, ty: usize, depth: usize) -> Term {
    Generator::new(seed).det(TYPES[ty % TYPES.len()], depth, &[])
}

fn open_term(seed: u64, ty: usize) -> Term {
    Generator::new(seed).det(TYPES[ty % TYPES.len()], 3, &[("x".into(), Ty::Bool)])
}

// Renames every binder to a fresh name by walking the term independently of
// the library's own canonicalization.
fn rename_binders(e: &Term, counter: &mut usize) -> Term {
    fn go(e: &Term, counter: &mut usize, map: &mut Vec<(Name, Name)>) -> Term {
        let binder = |var: &Name,
                      domain: &Term,
                      body: &Term,
                      map: &mut Vec<(Name, Name)>,
                      counter: &mut usize| {
            let d = go(domain, counter, map);
            *counter += 1;
            let fresh = name(&format!("r{counter}_"));
            map.push((var.clone(), fresh.clone()));
            let b = go(body, counter, map);
            map.pop();
            (fresh, d, b)
        };
        match &**e {
            Expr::Var(v) => match map.iter().rev().find(|(old, _)| old == v) {
                Some((_, new)) => var(new),
                None => e.clone(),
            },
            Expr::Const(_) | Expr::Sort(_) => e.clone(),
            Expr::Lam { var, domain, body } => {
                let (v, d, b) = binder(var, domain, body, map, counter);
                lam(&v, d, b)
            }
            Expr::Pi { var, domain, body } => {
                let (v, d, b) = binder(var, domain, body, map, counter);
                pi(&v, d, b)
            }
            Expr::Sigma { var, domain, body } => {
                let (v, d, b) = binder(var, domain, body, map, counter);
                sigma(&v, d, b)
            }
            Expr::Pair { left, right, tag } => pair(
                go(left, counter, map),
                go(right, counter, map),
                go(tag, counter, map),
            ),
            Expr::App(f, a) => app(go(f, counter, map), go(a, counter, map)),
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => if_then_else(
                go(cond, counter, map),
                go(then_branch, counter, map),
                go(else_branch, counter, map),
            ),
            Expr::Proj(s, t) => proj(*s, go(t, counter, map)),
            Expr::Random { rho, target } => random(rho.get(), go(target, counter, map)),
            Expr::Dispatch { var: v, cases, arg } => {
                *counter += 1;
                let fresh = name(&format!("r{counter}_"));
                let new_arg = go(arg, counter, map);
                map.push((v.clone(), fresh.clone()));
                let cs = cases
                    .iter()
                    .map(|c| case(go(&c.ty, counter, map), go(&c.body, counter, map)))
                    .collect();
                map.pop();
                dispatch(&fresh, cs, new_arg)
            }
        }
    }
    go(e, counter, &mut Vec::new())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), ty in 0usize..8, depth in 0usize..4) {
        let e = det_term(seed, ty, depth);
        let back = parse(&e.to_string()).unwrap();
        prop_assert!(alpha_eq(&e, &back), "{e} reparsed as {back}");
    }

    #[test]
    fn probabilistic_round_trip(seed in any::<u64>()) {
        let e = Generator::new(seed).prob(2);
        let back = parse(&e.to_string()).unwrap();
        prop_assert!(alpha_eq(&e, &back), "{e} reparsed as {back}");
    }

    #[test]
    fn substituting_a_variable_for_itself(seed in any::<u64>(), ty in 0usize..8) {
        let e = open_term(seed, ty);
        let r = substitute(&e, "x", &var("x")).unwrap();
        prop_assert!(alpha_eq(&e, &r));
    }

    #[test]
    fn free_variables_after_substitution(seed in any::<u64>(), ty in 0usize..8, vseed in any::<u64>()) {
        let e = open_term(seed, ty);
        prop_assume!(free_vars(&e).contains("x"));
        // A value whose free variables may clash with binders in `e`.
        let v = match vseed % 3 {
            0 => tt(),
            1 => var("z1"),
            _ => var("x1"),
        };
        let r = substitute(&e, "x", &v).unwrap();
        let mut expected: BTreeSet<Name> = free_vars(&e);
        expected.remove("x");
        expected.extend(free_vars(&v));
        prop_assert_eq!(free_vars(&r), expected);
    }

    #[test]
    fn alpha_eq_is_an_equivalence(seed in any::<u64>(), ty in 0usize..8, other in any::<u64>()) {
        let a = det_term(seed, ty, 3);
        let mut n = 0;
        let b = rename_binders(&a, &mut n);
        let c = rename_binders(&b, &mut n);
        prop_assert!(alpha_eq(&a, &a));
        prop_assert!(alpha_eq(&a, &b) && alpha_eq(&b, &a));
        prop_assert!(alpha_eq(&b, &c) && alpha_eq(&a, &c));
        let d = det_term(other, ty, 3);
        prop_assert_eq!(alpha_eq(&a, &d), alpha_eq(&d, &a));
        prop_assert_eq!(alpha_eq(&a, &d), alpha_eq(&c, &d));
    }
}

#[test]
fn generated_context_round_trips() {
    let ctx = corpus_context();
    for (n, t) in ctx.iter() {
        let back = parse(&t.to_string()).unwrap();
        assert!(alpha_eq(t, &back), "{n}: {t}");
    }
}
