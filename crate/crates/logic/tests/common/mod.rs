//! Oracles shared by the logic integration tests. They work on surface
//! formulas directly and never call the crate's grounding code.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use pdts_logic::formula::{Formula, LTerm};
use proptest::prelude::*;

/// Truth of a ground atom, keyed `P(c1,c2)`.
pub type Assignment = HashMap<String, bool>;

fn term(t: &LTerm, env: &HashMap<String, String>) -> String {
    match t {
        LTerm::Const(c) | LTerm::Var(c) => env.get(c).cloned().unwrap_or_else(|| c.clone()),
        LTerm::Fun(..) => panic!("oracle formulas are function-free"),
    }
}

pub fn eval(
    f: &Formula,
    constants: &[&str],
    world: &Assignment,
    env: &mut HashMap<String, String>,
) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p, args) => {
            let args: Vec<String> = args.iter().map(|a| term(a, env)).collect();
            let key = if args.is_empty() {
                p.clone()
            } else {
                format!("{p}({})", args.join(","))
            };
            *world
                .get(&key)
                .unwrap_or_else(|| panic!("atom {key} missing from world"))
        }
        Formula::Not(a) => !eval(a, constants, world, env),
        Formula::And(a, b) => eval(a, constants, world, env) && eval(b, constants, world, env),
        Formula::Or(a, b) => eval(a, constants, world, env) || eval(b, constants, world, env),
        Formula::Implies(a, b) => !eval(a, constants, world, env) || eval(b, constants, world, env),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let saved = env.get(v).cloned();
            let mut results = constants.iter().map(|c| {
                env.insert(v.clone(), c.to_string());
                eval(body, constants, world, env)
            });
            let r = if matches!(f, Formula::Forall(..)) {
                results.all(|b| b)
            } else {
                results.any(|b| b)
            };
            match saved {
                Some(s) => env.insert(v.clone(), s),
                None => env.remove(v),
            };
            r
        }
    }
}

/// Variables of `f` not bound by a quantifier, given which names are
/// constants.
pub fn free_names(f: &Formula, constants: &[&str]) -> BTreeSet<String> {
    fn go(f: &Formula, constants: &[&str], bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Atom(_, args) => {
                for a in args {
                    if let LTerm::Var(v) | LTerm::Const(v) = a {
                        if !bound.contains(v) && !constants.contains(&v.as_str()) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Not(a) => go(a, constants, bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                go(a, constants, bound, out);
                go(b, constants, bound, out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(v.clone());
                go(body, constants, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(f, constants, &mut Vec::new(), &mut out);
    out
}

/// Number of assignments of constants to the free variables of `f` that
/// make it true.
pub fn satisfied_groundings(f: &Formula, constants: &[&str], world: &Assignment) -> usize {
    let vars: Vec<String> = free_names(f, constants).into_iter().collect();
    let n = constants.len();
    (0..n.pow(vars.len() as u32))
        .filter(|k| {
            let mut env = HashMap::new();
            let mut rest = *k;
            for v in vars.iter().rev() {
                env.insert(v.clone(), constants[rest % n].to_string());
                rest /= n;
            }
            eval(f, constants, world, &mut env)
        })
        .count()
}

/// All ground atom names of the predicates over the constants, in
/// declaration then row-major order.
pub fn atom_names(predicates: &[(&str, usize)], constants: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for (p, arity) in predicates {
        match arity {
            0 => out.push(p.to_string()),
            1 => out.extend(constants.iter().map(|c| format!("{p}({c})"))),
            2 => {
                for a in constants {
                    for b in constants {
                        out.push(format!("{p}({a},{b})"));
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    out
}

/// World number `code` over `atoms`, first atom most significant.
pub fn assignment(atoms: &[String], code: usize) -> Assignment {
    let n = atoms.len();
    atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), code >> (n - 1 - i) & 1 == 1))
        .collect()
}

/// Normalized distribution of an MLN computed by brute force.
pub fn mln_oracle(
    formulas: &[(Formula, f64)],
    predicates: &[(&str, usize)],
    constants: &[&str],
) -> Vec<f64> {
    let atoms = atom_names(predicates, constants);
    let w: Vec<f64> = (0..1usize << atoms.len())
        .map(|code| {
            let world = assignment(&atoms, code);
            formulas
                .iter()
                .map(|(f, w)| w * satisfied_groundings(f, constants, &world) as f64)
                .sum::<f64>()
                .exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Random formulas over the given atom shapes. Terms are drawn from
/// `terms`; quantifiers bind `y`.
pub fn formula(
    predicates: Vec<(&'static str, usize)>,
    terms: Vec<&'static str>,
    depth: u32,
) -> BoxedStrategy<Formula> {
    let term = proptest::sample::select(terms);
    let leaf = (proptest::sample::select(predicates), term.clone(), term)
        .prop_map(|((p, arity), a, b)| {
            let args = match arity {
                0 => vec![],
                1 => vec![a],
                _ => vec![a, b],
            };
            Formula::Atom(
                p.into(),
                args.into_iter().map(|s| LTerm::Var(s.into())).collect(),
            )
        })
        .boxed();
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            inner
                .clone()
                .prop_map(|b| Formula::Forall("y".into(), Box::new(b))),
            inner.prop_map(|b| Formula::Exists("y".into(), Box::new(b))),
        ]
    })
    .boxed()
}

/// Nonzero weights in [-2, 2].
pub fn weight() -> impl Strategy<Value = f64> {
    (-2.0f64..=2.0).prop_filter("nonzero weight", |w| *w != 0.0)
}
