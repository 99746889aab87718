//! Distribution-preserving translations between ground Markov Logic
//! Networks and Dependent Type Networks.

use crate::dtn::DtnSpec;
use crate::formula::{Formula, Signature};
use crate::ground::{groundings, WorldTable};
use crate::mln::Mln;
use crate::LogicError;

/// Result of [`mln_to_dtn`]. Formulas of weight zero do not affect the
/// distribution and cannot be given a probability in (0, 1); they are
/// listed in `dropped`.
#[derive(Clone, Debug, PartialEq)]
pub struct DtnTranslation {
    pub spec: DtnSpec,
    pub dropped: Vec<Formula>,
}

fn copy_language(sig: &Signature) -> Result<DtnSpec, LogicError> {
    let mut spec = DtnSpec::new();
    for c in &sig.constants {
        spec.add_constant(c)?;
    }
    for (p, a) in &sig.predicates {
        match a {
            1 => spec.add_unary(p)?,
            2 => spec.add_binary(p)?,
            _ => {
                return Err(LogicError::Unsupported(format!(
                    "predicate `{p}` has arity {a}; only 1 and 2 are allowed"
                )))
            }
        }
    }
    for (g, t) in &sig.functions {
        spec.signature.add_function(g, t.clone())?;
    }
    Ok(spec)
}

fn formula_name(spec: &DtnSpec, i: usize) -> String {
    let sig = &spec.signature;
    (i..)
        .map(|k| format!("f{k}"))
        .find(|n| {
            sig.constant_index(n).is_none() && sig.arity(n).is_none() && sig.function(n).is_none()
        })
        .expect("unbounded name supply")
}

/// Grounds every formula over its free variables, then maps `(F, w)` to a
/// DTN formula `F'' = F' -> false` with `p = 1 - e^{w'}`, where `F' = F`,
/// `w' = w` for negative `w` and `F' = ~F`, `w' = -w` for positive `w`.
/// With `simplify`, `~F -> false` is written `F` and `F -> false` is
/// written `~F`.
pub fn mln_to_dtn(m: &Mln, simplify: bool) -> Result<DtnTranslation, LogicError> {
    let mut spec = copy_language(&m.signature)?;
    let mut dropped = Vec::new();
    let mut next = 1;
    for (f, w) in &m.formulas {
        for g in groundings(f, &m.signature) {
            if *w == 0.0 {
                dropped.push(g);
                continue;
            }
            let (negated, w_prime) = if *w > 0.0 { (true, -w) } else { (false, *w) };
            let f2 = match (simplify, negated) {
                (true, true) => g,
                (true, false) => Formula::not(g),
                (false, true) => Formula::implies(Formula::not(g), Formula::False),
                (false, false) => Formula::implies(g, Formula::False),
            };
            let name = formula_name(&spec, next);
            next = name[1..].parse::<usize>().expect("generated name") + 1;
            spec.add_formula(&name, &f2, -w_prime.exp_m1())?;
        }
    }
    Ok(DtnTranslation { spec, dropped })
}

/// One MLN formula `(~F_i, ln(1 - p_i))` per DTN formula.
pub fn dtn_to_mln(d: &DtnSpec) -> Result<Mln, LogicError> {
    let mut m = Mln::new(d.signature.clone());
    for f in &d.formulas {
        m.add(&Formula::not(f.formula.clone()), (-f.p).ln_1p())?;
    }
    Ok(m)
}

/// Two world tables side by side in the source's atom order.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationReport {
    pub atoms: Vec<String>,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub max_deviation: f64,
}

/// Aligns `dst` to the atom order of `src` by name and reports the largest
/// absolute difference of world probabilities.
pub fn verify_translation(
    src: &WorldTable,
    dst: &WorldTable,
) -> Result<TranslationReport, LogicError> {
    let n = src.atoms.len();
    let shape_ok = dst.atoms.len() == n && src.probs.len() == 1 << n && dst.probs.len() == 1 << n;
    let perm: Option<Vec<usize>> = shape_ok
        .then(|| {
            src.atoms
                .iter()
                .map(|a| dst.atoms.iter().position(|b| b == a))
                .collect()
        })
        .flatten();
    let perm = perm.ok_or_else(|| {
        LogicError::DimensionMismatch(format!(
            "[{}] vs [{}]",
            src.atoms.join(", "),
            dst.atoms.join(", ")
        ))
    })?;
    let target: Vec<f64> = (0..1usize << n)
        .map(|code| {
            // Bit i of the source world (atom i, most significant first)
            // moves to the destination position of the same atom.
            let dst_code = (0..n)
                .filter(|i| code >> (n - 1 - i) & 1 == 1)
                .fold(0usize, |acc, i| acc | 1 << (n - 1 - perm[i]));
            dst.probs[dst_code]
        })
        .collect();
    let max_deviation = src
        .probs
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(TranslationReport {
        atoms: src.atoms.clone(),
        source: src.probs.clone(),
        target,
        max_deviation,
    })
}

/// An MLN over unary predicates `X1..Xn` and one constant `c1` whose world
/// distribution is `probs`, indexed with `X1(c1)` as the most significant
/// bit: one conjunction of literals per world, weighted by the log of its
/// probability.
pub fn universal_mln(probs: &[f64]) -> Result<Mln, LogicError> {
    let n = probs.len().trailing_zeros() as usize;
    if probs.len() != 1 << n || n == 0 {
        return Err(LogicError::DimensionMismatch(format!(
            "{} probabilities is not 2^n for n >= 1",
            probs.len()
        )));
    }
    let mut sig = Signature::default();
    sig.add_constant("c1")?;
    for i in 1..=n {
        sig.add_predicate(&format!("X{i}"), 1)?;
    }
    let mut m = Mln::new(sig);
    for (code, p) in probs.iter().enumerate() {
        if p.is_nan() || *p <= 0.0 {
            return Err(LogicError::InvalidWeight(format!(
                "world probability {p} is not positive"
            )));
        }
        let literal = |i: usize| {
            let a = Formula::atom(&format!("X{}", i + 1), &["c1"]);
            if code >> (n - 1 - i) & 1 == 1 {
                a
            } else {
                Formula::not(a)
            }
        };
        let world = (1..n).fold(literal(0), |acc, i| Formula::and(acc, literal(i)));
        m.add(&world, p.ln())?;
    }
    Ok(m)
}
