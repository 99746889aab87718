//! Ground atoms, ground formulas and possible worlds.

use std::fmt;

use crate::formula::{Formula, Signature};
use crate::LogicError;

/// Ground atoms of a signature: predicates in declaration order, arguments
/// row-major over the constants.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomIndex {
    atoms: Vec<(usize, Vec<usize>)>,
    offsets: Vec<usize>,
    names: Vec<String>,
}

impl AtomIndex {
    pub fn new(sig: &Signature) -> AtomIndex {
        let n = sig.constants.len();
        let mut atoms = Vec::new();
        let mut offsets = Vec::new();
        let mut names = Vec::new();
        for (p, (pred, arity)) in sig.predicates.iter().enumerate() {
            offsets.push(atoms.len());
            for k in 0..n.pow(*arity as u32) {
                let mut args = vec![0; *arity];
                let mut rest = k;
                for slot in args.iter_mut().rev() {
                    *slot = rest % n;
                    rest /= n;
                }
                let shown: Vec<&str> = args.iter().map(|i| sig.constants[*i].as_str()).collect();
                names.push(if shown.is_empty() {
                    pred.clone()
                } else {
                    format!("{pred}({})", shown.join(","))
                });
                atoms.push((p, args));
            }
        }
        AtomIndex {
            atoms,
            offsets,
            names,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Position of predicate number `pred` applied to constant indices
    /// `args`.
    pub fn index(&self, pred: usize, args: &[usize], n_constants: usize) -> usize {
        self.offsets[pred] + args.iter().fold(0, |acc, a| acc * n_constants + a)
    }

    /// Printed names such as `R(c1,c2)`.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn atom(&self, i: usize) -> (usize, &[usize]) {
        let (p, args) = &self.atoms[i];
        (*p, args)
    }
}

/// A truth assignment to `len` ground atoms. Atom 0 is the most
/// significant bit, so numeric order is lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct World {
    pub bits: u64,
    pub len: usize,
}

impl World {
    pub fn get(&self, atom: usize) -> bool {
        (self.bits >> (self.len - 1 - atom)) & 1 == 1
    }

    pub fn from_bools(values: &[bool]) -> World {
        let bits = values
            .iter()
            .fold(0u64, |acc, b| (acc << 1) | u64::from(*b));
        World {
            bits,
            len: values.len(),
        }
    }

    pub fn all(len: usize) -> impl Iterator<Item = World> {
        (0..1u64 << len).map(move |bits| World { bits, len })
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// A quantifier-free formula over ground atom indices.
#[derive(Clone, Debug, PartialEq)]
pub enum GFormula {
    True,
    False,
    Atom(usize),
    Not(Box<GFormula>),
    And(Vec<GFormula>),
    Or(Vec<GFormula>),
    Implies(Box<GFormula>, Box<GFormula>),
}

impl GFormula {
    pub fn eval(&self, w: &World) -> bool {
        match self {
            GFormula::True => true,
            GFormula::False => false,
            GFormula::Atom(i) => w.get(*i),
            GFormula::Not(a) => !a.eval(w),
            GFormula::And(xs) => xs.iter().all(|x| x.eval(w)),
            GFormula::Or(xs) => xs.iter().any(|x| x.eval(w)),
            GFormula::Implies(a, b) => !a.eval(w) || b.eval(w),
        }
    }
}

/// Grounds a closed formula: quantifiers become conjunctions or
/// disjunctions over the constants and function terms are evaluated
/// through their tables.
pub fn ground(f: &Formula, sig: &Signature, index: &AtomIndex) -> Result<GFormula, LogicError> {
    Ok(match f {
        Formula::True => GFormula::True,
        Formula::False => GFormula::False,
        Formula::Atom(p, args) => {
            let pred = sig
                .predicates
                .iter()
                .position(|(q, _)| q == p)
                .ok_or_else(|| LogicError::UnknownSymbol(format!("predicate `{p}`")))?;
            let args = args
                .iter()
                .map(|a| sig.eval_term(a))
                .collect::<Result<Vec<_>, _>>()?;
            GFormula::Atom(index.index(pred, &args, sig.constants.len()))
        }
        Formula::Not(a) => GFormula::Not(Box::new(ground(a, sig, index)?)),
        Formula::And(a, b) => GFormula::And(vec![ground(a, sig, index)?, ground(b, sig, index)?]),
        Formula::Or(a, b) => GFormula::Or(vec![ground(a, sig, index)?, ground(b, sig, index)?]),
        Formula::Implies(a, b) => GFormula::Implies(
            Box::new(ground(a, sig, index)?),
            Box::new(ground(b, sig, index)?),
        ),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let parts = sig
                .constants
                .iter()
                .map(|c| ground(&body.instantiate(v, c), sig, index))
                .collect::<Result<Vec<_>, _>>()?;
            if matches!(f, Formula::Forall(..)) {
                GFormula::And(parts)
            } else {
                GFormula::Or(parts)
            }
        }
    })
}

/// Every instance of `f` with constants substituted for its free
/// variables, taken in alphabetical order of the variables and row-major
/// over the constants.
pub fn groundings(f: &Formula, sig: &Signature) -> Vec<Formula> {
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    let mut out = vec![f.clone()];
    for v in &vars {
        out = out
            .into_iter()
            .flat_map(|g| {
                sig.constants
                    .iter()
                    .map(move |c| g.instantiate(v, c))
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// A probability for every world over named atoms, in [`World::all`]
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldTable {
    pub atoms: Vec<String>,
    pub probs: Vec<f64>,
}
