//! Dependent Type Networks: a language context of domain, constants,
//! predicates and ground proof constants, weighted formula proofs, and the
//! canonical query program whose reductions sample possible worlds.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use pdts_core::kernel::check_judgment;
use pdts_core::prob::{sample_counts, KahanSum};
use pdts_core::syntax::{
    app, arrow, bool_ty, case, dispatch, free_vars, fresh_name, if_then_else, lam, name, one, pair,
    pi, product, random, sigma, star, unit_ty, var, Context, Name, Term,
};

use crate::formula::{parse_formula, Formula, LTerm, Signature};
use crate::ground::{ground, AtomIndex, GFormula, World, WorldTable};
use crate::mln::{parse_function, write_functions};
use crate::LogicError;

/// Name of the domain type.
pub const DOMAIN: &str = "A";
/// Name of the contradiction type.
pub const BOTTOM: &str = "Bot";
/// Largest number of ground atoms enumerated exactly.
pub const DEFAULT_ATOM_CAP: usize = 20;
/// Largest number of random choices (formulas plus ground atoms) in a
/// query program. The program has one branch per choice vector.
pub const PROGRAM_CAP: usize = 12;
/// Up to this many formulas world weights use the literal subset sum.
pub const SUBSET_SUM_MAX_FORMULAS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct DtnFormula {
    pub name: String,
    pub formula: Formula,
    pub p: f64,
}

/// A language (constants, unary and binary predicates, tabulated
/// functions) and weighted formulas. Unary predicates precede binary ones
/// in `signature.predicates`, which fixes the ground atom order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DtnSpec {
    pub signature: Signature,
    pub formulas: Vec<DtnFormula>,
}

impl DtnSpec {
    pub fn new() -> DtnSpec {
        DtnSpec::default()
    }

    pub fn add_constant(&mut self, c: &str) -> Result<(), LogicError> {
        self.signature.add_constant(c)
    }

    pub fn add_unary(&mut self, p: &str) -> Result<(), LogicError> {
        self.signature.add_predicate(p, 1)?;
        // Keep unary predicates ahead of binary ones.
        let at = self
            .signature
            .predicates
            .iter()
            .position(|(_, a)| *a == 2)
            .unwrap_or(self.signature.predicates.len() - 1);
        let last = self.signature.predicates.pop().expect("just pushed");
        self.signature.predicates.insert(at, last);
        Ok(())
    }

    pub fn add_binary(&mut self, p: &str) -> Result<(), LogicError> {
        self.signature.add_predicate(p, 2)
    }

    pub fn unary(&self) -> impl Iterator<Item = &str> {
        self.signature
            .predicates
            .iter()
            .filter(|(_, a)| *a == 1)
            .map(|(p, _)| p.as_str())
    }

    pub fn binary(&self) -> impl Iterator<Item = &str> {
        self.signature
            .predicates
            .iter()
            .filter(|(_, a)| *a == 2)
            .map(|(p, _)| p.as_str())
    }

    /// Adds `name : f` with probability `p`, which must lie in (0, 1).
    pub fn add_formula(&mut self, name: &str, f: &Formula, p: f64) -> Result<(), LogicError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(LogicError::InvalidWeight(format!(
                "probability {p} of `{name}` is outside (0, 1)"
            )));
        }
        if self.formulas.iter().any(|g| g.name == name) || self.signature.arity(name).is_some() {
            return Err(LogicError::DuplicateName(name.into()));
        }
        let formula = self.signature.resolve(f)?;
        if let Some(v) = formula.free_vars().into_iter().next() {
            return Err(LogicError::UnknownSymbol(format!(
                "free variable `{v}` in formula `{name}`"
            )));
        }
        self.formulas.push(DtnFormula {
            name: name.into(),
            formula,
            p,
        });
        Ok(())
    }

    /// Number of ground atoms, the size of a world.
    pub fn atom_count(&self) -> usize {
        self.signature.ground_atom_count()
    }

    pub fn ground(&self) -> Result<GroundDtn, LogicError> {
        if self.signature.constants.is_empty() {
            return Err(LogicError::EmptyDomain);
        }
        let index = AtomIndex::new(&self.signature);
        let formulas = self
            .formulas
            .iter()
            .map(|f| ground(&f.formula, &self.signature, &index))
            .collect::<Result<_, _>>()?;
        Ok(GroundDtn {
            index,
            formulas,
            probs: self.formulas.iter().map(|f| f.p).collect(),
        })
    }

    /// Resolves and grounds a closed query.
    pub fn ground_query(&self, index: &AtomIndex, q: &Formula) -> Result<GFormula, LogicError> {
        let q = self.signature.resolve(q)?;
        if let Some(v) = q.free_vars().into_iter().next() {
            return Err(LogicError::UnknownSymbol(format!(
                "free variable `{v}` in query"
            )));
        }
        ground(&q, &self.signature, index)
    }
}

/// Formulas of a spec grounded over its atoms.
#[derive(Clone, Debug)]
pub struct GroundDtn {
    pub index: AtomIndex,
    pub formulas: Vec<GFormula>,
    pub probs: Vec<f64>,
}

/// Whether formula `j` holds classically in `world`, the condition under
/// which its proof is consistent with the world.
pub fn consistent(g: &GroundDtn, world: &World, j: usize) -> bool {
    g.formulas[j].eval(world)
}

fn consistent_mask(g: &GroundDtn, world: &World) -> u64 {
    (0..g.formulas.len())
        .filter(|&j| consistent(g, world, j))
        .fold(0, |m, j| m | 1 << j)
}

/// Unnormalized world weight as a sum over formula subsets `H` all
/// consistent with the world of `prod_{j in H} p_j prod_{j not in H} (1 - p_j)`.
/// Subsets with an inconsistent member contribute zero and are skipped.
pub fn world_weight_subset(g: &GroundDtn, world: &World) -> f64 {
    let ok = consistent_mask(g, world);
    let mut sum = KahanSum::default();
    let mut h = ok;
    loop {
        let term: f64 = g
            .probs
            .iter()
            .enumerate()
            .map(|(j, p)| if h >> j & 1 == 1 { *p } else { 1.0 - p })
            .product();
        sum.add(term);
        if h == 0 {
            break;
        }
        h = (h - 1) & ok;
    }
    sum.total()
}

/// The same weight factorized per formula: `prod_j (p_j [consistent j] + 1 - p_j)`.
pub fn world_weight_factorized(g: &GroundDtn, world: &World) -> f64 {
    g.probs
        .iter()
        .enumerate()
        .map(|(j, p)| {
            if consistent(g, world, j) {
                1.0
            } else {
                1.0 - p
            }
        })
        .product()
}

pub fn world_weight(g: &GroundDtn, world: &World) -> f64 {
    if g.formulas.len() <= SUBSET_SUM_MAX_FORMULAS {
        world_weight_subset(g, world)
    } else {
        world_weight_factorized(g, world)
    }
}

fn check_atoms(spec: &DtnSpec, cap: usize) -> Result<(), LogicError> {
    if spec.atom_count() > cap {
        return Err(LogicError::TooManyAtoms {
            atoms: spec.atom_count(),
            cap,
        });
    }
    Ok(())
}

fn weights(g: &GroundDtn) -> (Vec<f64>, f64) {
    let w: Vec<f64> = World::all(g.index.len())
        .map(|x| world_weight(g, &x))
        .collect();
    let z = w.iter().copied().collect::<KahanSum>().total();
    (w, z)
}

/// The normalized distribution over worlds.
pub fn world_table(spec: &DtnSpec, cap: usize) -> Result<WorldTable, LogicError> {
    check_atoms(spec, cap)?;
    let g = spec.ground()?;
    let (w, z) = weights(&g);
    Ok(WorldTable {
        atoms: g.index.names().to_vec(),
        probs: w.iter().map(|x| x / z).collect(),
    })
}

/// Normalized probability of one world.
pub fn world_prob(spec: &DtnSpec, world: &World, cap: usize) -> Result<f64, LogicError> {
    check_atoms(spec, cap)?;
    let g = spec.ground()?;
    let (_, z) = weights(&g);
    Ok(world_weight(&g, world) / z)
}

/// Exact query probability: the mass of the worlds satisfying `q`.
pub fn query_exact(spec: &DtnSpec, q: &Formula, cap: usize) -> Result<f64, LogicError> {
    check_atoms(spec, cap)?;
    let g = spec.ground()?;
    let q = spec.ground_query(&g.index, q)?;
    let (w, z) = weights(&g);
    let hit: f64 = World::all(g.index.len())
        .zip(&w)
        .filter(|(x, _)| q.eval(x))
        .map(|(_, p)| *p)
        .collect::<KahanSum>()
        .total();
    Ok(hit / z)
}

/// Probability that the query program reduces to a proof of `Bot`: one
/// minus the average unnormalized world weight.
pub fn rejection_prob(spec: &DtnSpec, cap: usize) -> Result<f64, LogicError> {
    check_atoms(spec, cap)?;
    let g = spec.ground()?;
    let (_, z) = weights(&g);
    Ok(1.0 - z / (1u64 << g.index.len()) as f64)
}

fn proof_name(index: &AtomIndex, sig: &Signature, k: usize, polarity: u8) -> String {
    let (p, args) = index.atom(k);
    let mut s = format!("b_{}", sig.predicates[p].0);
    for a in args {
        s.push('_');
        s.push_str(&sig.constants[*a]);
    }
    format!("{s}_{polarity}")
}

fn domain() -> Term {
    var(DOMAIN)
}

fn domain_pair() -> Term {
    product(domain(), domain())
}

fn bottom() -> Term {
    var(BOTTOM)
}

/// Type of ground atom `k`: `P c` or `R (pair(c, d))`.
pub fn atom_type(spec: &DtnSpec, index: &AtomIndex, k: usize) -> Term {
    let (p, args) = index.atom(k);
    let args: Vec<Term> = args
        .iter()
        .map(|a| var(&spec.signature.constants[*a]))
        .collect();
    predicate_type(&spec.signature.predicates[p].0, args)
}

fn predicate_type(p: &str, mut args: Vec<Term>) -> Term {
    let arg = if args.len() == 1 {
        args.pop().expect("one argument")
    } else {
        let r = args.pop().expect("two arguments");
        let l = args.pop().expect("two arguments");
        pair(l, r, domain_pair())
    };
    app(var(p), arg)
}

/// The language context: domain, contradiction, constants, predicates,
/// functions, then two proof constants per ground atom, one for each
/// polarity.
pub fn build_language_context(spec: &DtnSpec) -> Result<Context, LogicError> {
    let mut ctx = Context::new();
    let push = |ctx: &mut Context, n: &str, t: Term| {
        ctx.push(name(n), t)
            .map_err(|n| LogicError::DuplicateName(n.to_string()))
    };
    push(&mut ctx, DOMAIN, star())?;
    push(&mut ctx, BOTTOM, star())?;
    let sig = &spec.signature;
    for c in &sig.constants {
        push(&mut ctx, c, domain())?;
    }
    for (p, a) in &sig.predicates {
        let t = match a {
            1 => arrow(domain(), star()),
            2 => arrow(domain_pair(), star()),
            _ => {
                return Err(LogicError::Unsupported(format!(
                    "predicate `{p}` has arity {a}; only 1 and 2 are allowed"
                )))
            }
        };
        push(&mut ctx, p, t)?;
    }
    for (g, t) in &sig.functions {
        let t = match t.arity {
            1 => arrow(domain(), domain()),
            2 => arrow(domain_pair(), domain()),
            a => {
                return Err(LogicError::Unsupported(format!(
                    "function `{g}` has arity {a}; only 1 and 2 are allowed"
                )))
            }
        };
        push(&mut ctx, g, t)?;
    }
    let index = AtomIndex::new(sig);
    for k in 0..index.len() {
        let ty = atom_type(spec, &index, k);
        push(&mut ctx, &proof_name(&index, sig, k, 1), ty.clone())?;
        push(
            &mut ctx,
            &proof_name(&index, sig, k, 0),
            arrow(ty, bottom()),
        )?;
    }
    Ok(ctx)
}

fn names_of(ctx: &Context) -> BTreeSet<Name> {
    ctx.names().cloned().collect()
}

fn term_to_expr(t: &LTerm, vars: &[(String, Name)]) -> Result<Term, LogicError> {
    Ok(match t {
        LTerm::Const(c) => var(c),
        LTerm::Var(v) => {
            let (_, k) = vars
                .iter()
                .rev()
                .find(|(f, _)| f == v)
                .ok_or_else(|| LogicError::UnknownSymbol(format!("unbound variable `{v}`")))?;
            var(k)
        }
        LTerm::Fun(g, args) => {
            let args = args
                .iter()
                .map(|a| term_to_expr(a, vars))
                .collect::<Result<Vec<_>, _>>()?;
            if args.len() == 2 && args.iter().any(|a| !a.is_value()) {
                return Err(LogicError::Unsupported(format!(
                    "nested function term inside `{g}`"
                )));
            }
            let mut args = args;
            let arg = if args.len() == 1 {
                args.pop().expect("one argument")
            } else {
                let r = args.pop().expect("two arguments");
                let l = args.pop().expect("two arguments");
                pair(l, r, domain_pair())
            };
            app(var(g), arg)
        }
    })
}

/// Formulae-as-types: `&` is a product, `|` a Bool-indexed sum, `->` a
/// function type, `~X` is `X -> Bot`, `forall` a dependent product and
/// `exists` a dependent sum over the domain. `true` is `Bot -> Bot` so that
/// no formula type coincides with `Unit`; `false` is `Bot`.
pub fn formula_to_type(spec: &DtnSpec, f: &Formula) -> Result<Term, LogicError> {
    let f = spec.signature.resolve(f)?;
    let ctx = build_language_context(spec)?;
    let mut avoid = names_of(&ctx);
    to_type(&f, &mut Vec::new(), &mut avoid)
}

fn to_type(
    f: &Formula,
    vars: &mut Vec<(String, Name)>,
    avoid: &mut BTreeSet<Name>,
) -> Result<Term, LogicError> {
    Ok(match f {
        Formula::True => arrow(bottom(), bottom()),
        Formula::False => bottom(),
        Formula::Atom(p, args) => {
            let args = args
                .iter()
                .map(|a| term_to_expr(a, vars))
                .collect::<Result<Vec<_>, _>>()?;
            if args.len() == 2 && args.iter().any(|a| !a.is_value()) {
                return Err(LogicError::Unsupported(format!(
                    "function term inside binary predicate `{p}`"
                )));
            }
            predicate_type(p, args)
        }
        Formula::Not(a) => arrow(to_type(a, vars, avoid)?, bottom()),
        Formula::And(a, b) => product(to_type(a, vars, avoid)?, to_type(b, vars, avoid)?),
        Formula::Implies(a, b) => arrow(to_type(a, vars, avoid)?, to_type(b, vars, avoid)?),
        Formula::Or(a, b) => {
            let (a, b) = (to_type(a, vars, avoid)?, to_type(b, vars, avoid)?);
            let mut used = free_vars(&a);
            used.extend(free_vars(&b));
            let x = fresh_name("x", &used);
            sigma(&x, bool_ty(), if_then_else(var(&x), a, b))
        }
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let k = fresh_name(v, avoid);
            avoid.insert(k.clone());
            vars.push((v.clone(), k.clone()));
            let body = to_type(body, vars, avoid);
            vars.pop();
            let body = body?;
            if matches!(f, Formula::Forall(..)) {
                pi(&k, domain(), body)
            } else {
                sigma(&k, domain(), body)
            }
        }
    })
}

/// The canonical query program and what is needed to read its results.
#[derive(Clone, Debug)]
pub struct QueryProgram {
    /// Language context, formula proofs and the three result witnesses.
    pub context: Context,
    /// `case z { t => witness; ... }(T)`.
    pub program: Term,
    /// The let-chain `T` producing the tuple of formula choices and world.
    pub chain: Term,
    /// Case types of the outer dispatch, one per choice vector.
    pub case_types: Vec<Term>,
    pub query_type: Term,
    pub negated_query_type: Term,
    pub bottom: Term,
}

struct Choice {
    ty: Term,
    // Formula included, or atom true.
    on: bool,
}

struct Component {
    var: Name,
    arg: Term,
    choices: [Choice; 2],
}

fn tuple(parts: &[(Name, Term)]) -> (Term, Term) {
    match parts {
        [] => (one(), unit_ty()),
        [(v, t)] => (var(v), t.clone()),
        [(v, t), rest @ ..] => {
            let (tail, tail_ty) = tuple(rest);
            let ty = product(t.clone(), tail_ty);
            (pair(var(v), tail, ty.clone()), ty)
        }
    }
}

fn chain(components: &[Component], path: &mut Vec<(Name, Term)>) -> Term {
    match components.split_first() {
        None => tuple(path).0,
        Some((c, rest)) => {
            let cases = c
                .choices
                .iter()
                .map(|choice| {
                    path.push((c.var.clone(), choice.ty.clone()));
                    let body = chain(rest, path);
                    path.pop();
                    case(choice.ty.clone(), body)
                })
                .collect();
            dispatch(&c.var, cases, c.arg.clone())
        }
    }
}

/// Builds the query program for `q`: one Bernoulli binding per formula
/// choosing its proof `f_i` or `unit`, one fair binding per ground atom
/// choosing `b_.._1` or `b_.._0`, and a dispatch over every possible type
/// of the resulting tuple. A choice vector whose included formulas are all
/// true in its world returns a proof of the query or of its negation;
/// otherwise it returns a proof of `Bot`.
pub fn build_query_program(spec: &DtnSpec, q: &Formula) -> Result<QueryProgram, LogicError> {
    let g = spec.ground()?;
    let n_f = spec.formulas.len();
    let n_d = g.index.len();
    if n_f + n_d > PROGRAM_CAP {
        return Err(LogicError::ProgramTooLarge {
            size: n_f + n_d,
            cap: PROGRAM_CAP,
        });
    }
    let gq = spec.ground_query(&g.index, q)?;
    let mut ctx = build_language_context(spec)?;
    let mut avoid = names_of(&ctx);
    let mut formula_types = Vec::new();
    for f in &spec.formulas {
        let t = to_type(&f.formula, &mut Vec::new(), &mut avoid.clone())?;
        ctx.push(name(&f.name), t.clone())
            .map_err(|n| LogicError::DuplicateName(n.to_string()))?;
        formula_types.push(t);
    }
    let query_type = to_type(
        &spec.signature.resolve(q)?,
        &mut Vec::new(),
        &mut avoid.clone(),
    )?;
    let negated_query_type = arrow(query_type.clone(), bottom());
    avoid = names_of(&ctx);
    let mut fresh = |base: &str| {
        let n = fresh_name(base, &avoid);
        avoid.insert(n.clone());
        n
    };
    let (wq, wnq, wbot) = (fresh("wq"), fresh("wnq"), fresh("wbot"));
    let selector = fresh("s");
    let mut components = Vec::new();
    for (i, (f, t)) in spec.formulas.iter().zip(&formula_types).enumerate() {
        let target = lam(
            &selector,
            bool_ty(),
            if_then_else(var(&selector), var(&f.name), one()),
        );
        components.push(Component {
            var: fresh(&format!("x{}", i + 1)),
            arg: random(f.p, target),
            choices: [
                Choice {
                    ty: t.clone(),
                    on: true,
                },
                Choice {
                    ty: unit_ty(),
                    on: false,
                },
            ],
        });
    }
    for k in 0..n_d {
        let ty = atom_type(spec, &g.index, k);
        let target = lam(
            &selector,
            bool_ty(),
            if_then_else(
                var(&selector),
                var(&proof_name(&g.index, &spec.signature, k, 1)),
                var(&proof_name(&g.index, &spec.signature, k, 0)),
            ),
        );
        components.push(Component {
            var: fresh(&format!("y{}", k + 1)),
            arg: random(0.5, target),
            choices: [
                Choice {
                    ty: ty.clone(),
                    on: true,
                },
                Choice {
                    ty: arrow(ty, bottom()),
                    on: false,
                },
            ],
        });
    }
    let z = fresh("z");
    ctx.push(wq.clone(), query_type.clone())
        .map_err(|n| LogicError::DuplicateName(n.to_string()))?;
    ctx.push(wnq.clone(), negated_query_type.clone())
        .map_err(|n| LogicError::DuplicateName(n.to_string()))?;
    ctx.push(wbot.clone(), bottom())
        .map_err(|n| LogicError::DuplicateName(n.to_string()))?;

    let chain_term = chain(&components, &mut Vec::new());
    let n = components.len();
    let mut cases = Vec::with_capacity(1 << n);
    let mut case_types = Vec::with_capacity(1 << n);
    // Choice vectors in the order the chain's branches list them: bit set
    // means the second choice.
    for code in 0..1u64 << n {
        let picks: Vec<&Choice> = components
            .iter()
            .enumerate()
            .map(|(i, c)| &c.choices[(code >> (n - 1 - i) & 1) as usize])
            .collect();
        let parts: Vec<(Name, Term)> = picks.iter().map(|c| (z.clone(), c.ty.clone())).collect();
        let ty = tuple(&parts).1;
        let world = World::from_bools(&picks[n_f..].iter().map(|c| c.on).collect::<Vec<_>>());
        let consistent = (0..n_f).all(|j| !picks[j].on || g.formulas[j].eval(&world));
        let witness = if !consistent {
            &wbot
        } else if gq.eval(&world) {
            &wq
        } else {
            &wnq
        };
        cases.push(case(ty.clone(), var(witness)));
        case_types.push(ty);
    }
    Ok(QueryProgram {
        context: ctx,
        program: dispatch(&z, cases, chain_term.clone()),
        chain: chain_term,
        case_types,
        query_type,
        negated_query_type,
        bottom: bottom(),
    })
}

/// Monte Carlo estimate of a query from sampled reductions of its program.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledQuery {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_rejected: usize,
}

/// Reduces the query program `n_samples` times, rejects runs ending in a
/// proof of `Bot`, and returns the fraction of the rest that prove the
/// query.
pub fn query_sampled(
    spec: &DtnSpec,
    q: &Formula,
    n_samples: usize,
    seed: u64,
    fuel: usize,
) -> Result<SampledQuery, LogicError> {
    let prog = build_query_program(spec, q)?;
    let (mut hits, mut misses, mut rejected) = (0usize, 0usize, 0usize);
    for (leaf, count) in sample_counts(&prog.context, &prog.program, n_samples, seed, fuel)? {
        if check_judgment(&prog.context, &leaf, &prog.bottom) {
            rejected += count;
        } else if check_judgment(&prog.context, &leaf, &prog.query_type) {
            hits += count;
        } else if check_judgment(&prog.context, &leaf, &prog.negated_query_type) {
            misses += count;
        } else {
            return Err(LogicError::Unsupported(format!(
                "query program reduced to `{leaf}` of unexpected type"
            )));
        }
    }
    let kept = hits + misses;
    if kept == 0 {
        return Err(LogicError::AllSamplesRejected);
    }
    let estimate = hits as f64 / kept as f64;
    Ok(SampledQuery {
        estimate,
        stderr: (estimate * (1.0 - estimate) / kept as f64).sqrt(),
        n_samples,
        n_rejected: rejected,
    })
}

/// Reads the DTN text format: `domain N` (constants `c1..cN`), `constant
/// a b`, `unary B1 B2`, `binary R`, `function g/1 { c1 -> c2 }` and
/// `formula f1 : B1(c1) -> B2(c1) @ 0.5`. A weight written `@w 1.2` means
/// `p = 1 - e^-1.2`. `#` starts a comment.
pub fn parse_dtn(text: &str) -> Result<DtnSpec, LogicError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let err = |line: usize, message: String| LogicError::Parse { line, message };
    let mut spec = DtnSpec::new();
    for &(line, l) in &lines {
        let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let at = |e: LogicError| e.at_line(line);
        match kw {
            "domain" => {
                let n: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| err(line, format!("bad domain size `{}`", rest.trim())))?;
                for i in 1..=n {
                    spec.add_constant(&format!("c{i}")).map_err(at)?;
                }
            }
            "constant" => {
                for c in rest.split_whitespace() {
                    spec.add_constant(c).map_err(at)?;
                }
            }
            "unary" => {
                for p in rest.split_whitespace() {
                    spec.add_unary(p).map_err(at)?;
                }
            }
            "binary" => {
                for p in rest.split_whitespace() {
                    spec.add_binary(p).map_err(at)?;
                }
            }
            "function" | "formula" => {}
            _ => return Err(err(line, format!("unrecognized line `{l}`"))),
        }
    }
    for &(line, l) in &lines {
        if let Some(rest) = l.strip_prefix("function ") {
            let (g, table) = parse_function(&spec.signature, rest, line)?;
            spec.signature
                .add_function(&g, table)
                .map_err(|e| e.at_line(line))?;
        }
    }
    for &(line, l) in &lines {
        let Some(rest) = l.strip_prefix("formula ") else {
            continue;
        };
        let (fname, rest) = rest
            .split_once(':')
            .ok_or_else(|| err(line, "expected `name : formula @ p`".into()))?;
        let (f, weight) = rest
            .rsplit_once('@')
            .ok_or_else(|| err(line, "missing `@ p`".into()))?;
        let p = match weight.strip_prefix('w') {
            Some(w) => {
                let w: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| err(line, format!("bad weight `{}`", w.trim())))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(err(line, format!("weight {w} must be positive and finite")));
                }
                -(-w).exp_m1()
            }
            None => weight
                .trim()
                .parse()
                .map_err(|_| err(line, format!("bad probability `{}`", weight.trim())))?,
        };
        let f = parse_formula(f).map_err(|e| e.at_line(line))?;
        spec.add_formula(fname.trim(), &f, p)
            .map_err(|e| e.at_line(line))?;
    }
    Ok(spec)
}

/// Writes `spec` in the format read by [`parse_dtn`].
pub fn to_text(spec: &DtnSpec) -> String {
    let mut out = String::new();
    let sig = &spec.signature;
    let numbered = sig
        .constants
        .iter()
        .enumerate()
        .all(|(i, c)| *c == format!("c{}", i + 1));
    if numbered && !sig.constants.is_empty() {
        let _ = writeln!(out, "domain {}", sig.constants.len());
    } else if !sig.constants.is_empty() {
        let _ = writeln!(out, "constant {}", sig.constants.join(" "));
    }
    let unary: Vec<&str> = spec.unary().collect();
    if !unary.is_empty() {
        let _ = writeln!(out, "unary {}", unary.join(" "));
    }
    let binary: Vec<&str> = spec.binary().collect();
    if !binary.is_empty() {
        let _ = writeln!(out, "binary {}", binary.join(" "));
    }
    write_functions(&mut out, sig);
    for f in &spec.formulas {
        let _ = writeln!(out, "formula {} : {} @ {}", f.name, f.formula, f.p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdts_core::prob::{is_legal, types_of};
    use pdts_core::syntax::alpha_eq;

    const EX1: &str =
        "domain 1\nunary B1 B2\nformula f1 : B1(c1) -> B2(c1) @ 0.5\nformula f2 : B1(c1) @ 0.75\n";

    fn spec(text: &str) -> DtnSpec {
        parse_dtn(text).unwrap()
    }

    #[test]
    fn proof_constant_counts() {
        let base = |text: &str| build_language_context(&spec(text)).unwrap().len();
        // A, Bot, constants, predicates, then proof constants.
        assert_eq!(base("domain 1\nunary B\n") - 4, 2);
        assert_eq!(base("domain 2\nunary B\n") - 5, 4);
        assert_eq!(base("domain 2\n"), 4);
        assert_eq!(base("domain 2\nbinary R\n") - 5, 8);
    }

    #[test]
    fn language_context_is_well_formed() {
        let ctx = build_language_context(&spec("domain 2\nunary B\nbinary R\n")).unwrap();
        pdts_core::kernel::check_context(&ctx).unwrap();
        assert!(matches!(
            build_language_context(&spec("constant A\n")),
            Err(LogicError::DuplicateName(_))
        ));
    }

    #[test]
    fn formulas_as_types() {
        let s = spec("domain 2\nunary B1 B2\n");
        let ty = |f: &str| {
            formula_to_type(&s, &parse_formula(f).unwrap())
                .unwrap()
                .to_string()
        };
        assert_eq!(ty("B1(c1) & B1(c2)"), "B1 c1 * B1 c2");
        assert_eq!(ty("exists x. B1(x)"), "Sigma x:A. B1 x");
        assert_eq!(ty("~B1(c1)"), "B1 c1 -> Bot");
        assert_eq!(ty("forall x. B1(x) -> B2(x)"), "Pi x:A. B1 x -> B2 x");
        assert_eq!(
            ty("B1(c1) | B2(c1)"),
            "Sigma x:Bool. if x then B1 c1 else B2 c1"
        );
    }

    #[test]
    fn bound_variables_avoid_language_names() {
        let s = spec("constant x\nunary B\n");
        let t = formula_to_type(&s, &parse_formula("exists y. B(y) & B(x)").unwrap()).unwrap();
        assert_eq!(t.to_string(), "Sigma y:A. B y * B x");
        let s = spec("domain 1\nunary B\n");
        let t = formula_to_type(&s, &parse_formula("exists A. B(A)").unwrap()).unwrap();
        assert_eq!(t.to_string(), "Sigma A1:A. B A1");
    }

    #[test]
    fn consistency_is_classical_evaluation() {
        let g = spec(EX1).ground().unwrap();
        assert!(consistent(&g, &World::from_bools(&[true, true]), 0));
        assert!(!consistent(&g, &World::from_bools(&[true, false]), 0));
        let g = spec("domain 1\nunary B\nformula t : B(c1) | ~B(c1) @ 0.3\n")
            .ground()
            .unwrap();
        assert!(World::all(1).all(|w| consistent(&g, &w, 0)));
    }

    #[test]
    fn example_world_weights() {
        let (p1, p2) = (0.5, 0.75);
        let g = spec(EX1).ground().unwrap();
        let w: Vec<f64> = World::all(2).map(|x| world_weight(&g, &x)).collect();
        // Worlds 00, 01, 10, 11.
        let expected = [1.0 - p2, 1.0 - p2, 1.0 - p1, 1.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn no_formulas_gives_uniform_worlds() {
        let t = world_table(&spec("domain 1\nunary B1 B2\n"), DEFAULT_ATOM_CAP).unwrap();
        assert!(t.probs.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn caps() {
        let s = spec("domain 5\nunary B\nbinary R\n");
        assert!(matches!(
            query_exact(&s, &Formula::True, DEFAULT_ATOM_CAP),
            Err(LogicError::TooManyAtoms { .. })
        ));
        assert!(matches!(
            build_query_program(&s, &Formula::True),
            Err(LogicError::ProgramTooLarge { .. })
        ));
    }

    #[test]
    fn query_program_is_legal_with_three_result_types() {
        let s = spec(EX1);
        let prog = build_query_program(&s, &parse_formula("B2(c1)").unwrap()).unwrap();
        assert!(is_legal(&prog.context, &prog.program));
        let types = types_of(&prog.context, &prog.program);
        let types = types.types().unwrap();
        assert_eq!(types.len(), 3);
        for t in [&prog.query_type, &prog.negated_query_type, &prog.bottom] {
            assert!(types.iter().any(|u| alpha_eq(u, t)));
        }
    }

    #[test]
    fn chain_types_are_the_case_types() {
        let s = spec("domain 1\nunary B\nformula f : B(c1) @ 0.5\n");
        let prog = build_query_program(&s, &parse_formula("B(c1)").unwrap()).unwrap();
        let types = types_of(&prog.context, &prog.chain);
        let types = types.types().unwrap();
        assert_eq!(types.len(), prog.case_types.len());
        for t in &prog.case_types {
            assert!(types.iter().any(|u| alpha_eq(u, t)), "{t}");
        }
    }

    #[test]
    fn text_round_trip() {
        let text = "constant a b\nunary P\nbinary R\nfunction g/1 { a -> b; b -> a }\nformula f : forall x. P(x) -> R(x, g(x)) @ 0.25\n";
        let s = spec(text);
        assert_eq!(spec(&to_text(&s)), s);
        let s = spec("domain 1\nunary B\nformula f : B(c1) @w 1.5\n");
        assert!((s.formulas[0].p - (1.0 - (-1.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn unary_predicates_come_first() {
        let s = spec("domain 1\nbinary R\nunary B\n");
        assert_eq!(s.ground().unwrap().index.names(), ["B(c1)", "R(c1,c1)"]);
    }

    #[test]
    fn invalid_probabilities() {
        assert!(parse_dtn("domain 1\nunary B\nformula f : B(c1) @ 1.0\n").is_err());
        assert!(parse_dtn("domain 1\nunary B\nformula f : B(c1) @w 0\n").is_err());
        assert!(parse_dtn("domain 1\nunary B\nformula f : B(x) @ 0.5\n").is_err());
    }
}
