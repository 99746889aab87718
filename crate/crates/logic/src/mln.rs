//! Markov Logic Networks: grounding and exact inference by enumerating
//! possible worlds.

use std::fmt::Write as _;

use pdts_core::prob::KahanSum;

use crate::formula::{parse_formula, Formula, FunctionTable, Signature};
use crate::ground::{ground as ground_formula, groundings, AtomIndex, GFormula, World, WorldTable};
use crate::LogicError;

/// Largest number of ground atoms [`query_prob`] enumerates by default.
pub const DEFAULT_WORLD_CAP: usize = 24;

// Above this many atoms the partition function is accumulated in log space.
const LINEAR_SPACE_ATOMS: usize = 16;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mln {
    pub signature: Signature,
    pub formulas: Vec<(Formula, f64)>,
}

impl Mln {
    pub fn new(signature: Signature) -> Mln {
        Mln {
            signature,
            formulas: Vec::new(),
        }
    }

    /// Adds a weighted formula after resolving it against the signature.
    pub fn add(&mut self, f: &Formula, weight: f64) -> Result<(), LogicError> {
        if !weight.is_finite() {
            return Err(LogicError::InvalidWeight(weight.to_string()));
        }
        let f = self.signature.resolve(f)?;
        self.formulas.push((f, weight));
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundNetwork {
    pub signature: Signature,
    pub index: AtomIndex,
    pub formulas: Vec<(GFormula, f64)>,
}

impl GroundNetwork {
    pub fn atom_count(&self) -> usize {
        self.index.len()
    }

    /// Resolves and grounds a closed query or evidence formula.
    pub fn ground_query(&self, q: &Formula) -> Result<GFormula, LogicError> {
        let q = self.signature.resolve(q)?;
        if let Some(v) = q.free_vars().into_iter().next() {
            return Err(LogicError::UnknownSymbol(format!(
                "free variable `{v}` in query"
            )));
        }
        ground_formula(&q, &self.signature, &self.index)
    }
}

/// One weighted ground formula per instantiation of each formula's free
/// variables; quantifiers expand over the constants.
pub fn ground(m: &Mln) -> Result<GroundNetwork, LogicError> {
    if m.signature.constants.is_empty() {
        return Err(LogicError::EmptyDomain);
    }
    let index = AtomIndex::new(&m.signature);
    let mut formulas = Vec::new();
    for (f, w) in &m.formulas {
        for g in groundings(f, &m.signature) {
            formulas.push((ground_formula(&g, &m.signature, &index)?, *w));
        }
    }
    Ok(GroundNetwork {
        signature: m.signature.clone(),
        index,
        formulas,
    })
}

pub fn eval_formula(g: &GFormula, w: &World) -> bool {
    g.eval(w)
}

/// Sum of the weights of the ground formulas `w` satisfies.
pub fn world_log_weight(n: &GroundNetwork, w: &World) -> f64 {
    n.formulas
        .iter()
        .filter(|(g, _)| g.eval(w))
        .map(|(_, wt)| *wt)
        .collect::<KahanSum>()
        .total()
}

/// Unnormalized weight of a world: the product of `e^w` over satisfied
/// ground formulas.
pub fn world_weight(n: &GroundNetwork, w: &World) -> f64 {
    world_log_weight(n, w).exp()
}

// Running sum of exponentials kept as `scale * e^max`.
#[derive(Default)]
struct LogSum {
    max: Option<f64>,
    scaled: KahanSum,
}

impl LogSum {
    fn add(&mut self, lw: f64) {
        match self.max {
            None => {
                self.max = Some(lw);
                self.scaled.add(1.0);
            }
            Some(m) if lw > m => {
                let mut rescaled = KahanSum::default();
                rescaled.add(self.scaled.total() * (m - lw).exp());
                rescaled.add(1.0);
                self.scaled = rescaled;
                self.max = Some(lw);
            }
            Some(m) => self.scaled.add((lw - m).exp()),
        }
    }

    fn ln(&self) -> f64 {
        match self.max {
            None => f64::NEG_INFINITY,
            Some(m) => m + self.scaled.total().ln(),
        }
    }
}

fn check_cap(n: &GroundNetwork, cap: usize) -> Result<(), LogicError> {
    if n.atom_count() > cap {
        return Err(LogicError::TooManyWorlds {
            atoms: n.atom_count(),
            cap,
        });
    }
    Ok(())
}

/// Exact probability of `q`, optionally restricted to worlds satisfying
/// hard `evidence`.
pub fn query_prob(
    n: &GroundNetwork,
    q: &Formula,
    evidence: Option<&Formula>,
    cap: usize,
) -> Result<f64, LogicError> {
    check_cap(n, cap)?;
    let q = n.ground_query(q)?;
    let evidence = evidence.map(|e| n.ground_query(e)).transpose()?;
    let worlds = World::all(n.atom_count())
        .filter(|w| evidence.as_ref().is_none_or(|e| e.eval(w)))
        .map(|w| (q.eval(&w), world_log_weight(n, &w)));
    let ratio = if n.atom_count() <= LINEAR_SPACE_ATOMS {
        let (mut hit, mut all) = (KahanSum::default(), KahanSum::default());
        for (sat, lw) in worlds {
            let wt = lw.exp();
            all.add(wt);
            if sat {
                hit.add(wt);
            }
        }
        if all.total() == 0.0 {
            return Err(LogicError::InconsistentEvidence);
        }
        hit.total() / all.total()
    } else {
        let (mut hit, mut all) = (LogSum::default(), LogSum::default());
        for (sat, lw) in worlds {
            all.add(lw);
            if sat {
                hit.add(lw);
            }
        }
        if all.max.is_none() {
            return Err(LogicError::InconsistentEvidence);
        }
        (hit.ln() - all.ln()).exp()
    };
    Ok(ratio)
}

/// The normalized distribution over all worlds.
pub fn world_table(n: &GroundNetwork, cap: usize) -> Result<WorldTable, LogicError> {
    check_cap(n, cap)?;
    let logs: Vec<f64> = World::all(n.atom_count())
        .map(|w| world_log_weight(n, &w))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs
        .iter()
        .map(|l| (l - max).exp())
        .collect::<KahanSum>()
        .total();
    Ok(WorldTable {
        atoms: n.index.names().to_vec(),
        probs: logs.iter().map(|l| (l - max).exp() / z).collect(),
    })
}

fn parse_decl(rest: &str, line: usize) -> Result<(String, usize), LogicError> {
    let (name, arity) = rest.split_once('/').ok_or_else(|| LogicError::Parse {
        line,
        message: "expected `name/arity`".into(),
    })?;
    let arity = arity.trim().parse().map_err(|_| LogicError::Parse {
        line,
        message: format!("bad arity `{arity}`"),
    })?;
    Ok((name.trim().to_string(), arity))
}

/// Parses `{ c1 -> c2; c1, c2 -> c1 }` style function tables.
pub(crate) fn parse_function(
    sig: &Signature,
    rest: &str,
    line: usize,
) -> Result<(String, FunctionTable), LogicError> {
    let err = |m: String| LogicError::Parse { line, message: m };
    let (head, body) = rest
        .split_once('{')
        .ok_or_else(|| err("expected `{`".into()))?;
    let body = body
        .trim()
        .strip_suffix('}')
        .ok_or_else(|| err("expected `}`".into()))?;
    let (name, arity) = parse_decl(head, line)?;
    let constant = |c: &str| {
        sig.constant_index(c.trim())
            .ok_or_else(|| LogicError::UnknownSymbol(format!("constant `{}`", c.trim())))
    };
    let mut table = FunctionTable {
        arity,
        ..Default::default()
    };
    for entry in body.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let (args, value) = entry
            .split_once("->")
            .ok_or_else(|| err(format!("bad table entry `{entry}`")))?;
        let args = args
            .split(',')
            .map(constant)
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != arity {
            return Err(err(format!(
                "entry `{entry}` has {} arguments, expected {arity}",
                args.len()
            )));
        }
        table.table.insert(args, constant(value)?);
    }
    Ok((name, table))
}

/// Reads the MLN text format: `predicate A/1`, `constant c1 c2`,
/// `function g/1 { c1 -> c2 }` and weighted lines `w :: formula`. `#`
/// starts a comment.
pub fn parse_mln(text: &str) -> Result<Mln, LogicError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut sig = Signature::default();
    // Declarations first, so formulas and tables may precede them.
    for &(line, l) in &lines {
        if let Some(rest) = l.strip_prefix("predicate ") {
            let (name, arity) = parse_decl(rest, line)?;
            sig.add_predicate(&name, arity)?;
        } else if let Some(rest) = l.strip_prefix("constant ") {
            for c in rest.split_whitespace() {
                sig.add_constant(c)?;
            }
        }
    }
    for &(line, l) in &lines {
        if let Some(rest) = l.strip_prefix("function ") {
            let (name, table) = parse_function(&sig, rest, line)?;
            sig.add_function(&name, table)?;
        }
    }
    let mut m = Mln::new(sig);
    for &(line, l) in &lines {
        if l.starts_with("predicate ") || l.starts_with("constant ") || l.starts_with("function ") {
            continue;
        }
        let (w, f) = l.split_once("::").ok_or_else(|| LogicError::Parse {
            line,
            message: format!("unrecognized line `{l}`"),
        })?;
        let w: f64 = w.trim().parse().map_err(|_| LogicError::Parse {
            line,
            message: format!("bad weight `{}`", w.trim()),
        })?;
        let f = parse_formula(f).map_err(|e| e.at_line(line))?;
        m.add(&f, w).map_err(|e| e.at_line(line))?;
    }
    Ok(m)
}

pub(crate) fn write_functions(out: &mut String, sig: &Signature) {
    for (g, t) in &sig.functions {
        let mut entries: Vec<(&Vec<usize>, &usize)> = t.table.iter().collect();
        entries.sort();
        let body: Vec<String> = entries
            .iter()
            .map(|(args, v)| {
                let args: Vec<&str> = args.iter().map(|i| sig.constants[*i].as_str()).collect();
                format!("{} -> {}", args.join(", "), sig.constants[**v])
            })
            .collect();
        let _ = writeln!(out, "function {g}/{} {{ {} }}", t.arity, body.join("; "));
    }
}

/// Writes `m` in the format read by [`parse_mln`].
pub fn to_text(m: &Mln) -> String {
    let mut out = String::new();
    for (p, a) in &m.signature.predicates {
        let _ = writeln!(out, "predicate {p}/{a}");
    }
    if !m.signature.constants.is_empty() {
        let _ = writeln!(out, "constant {}", m.signature.constants.join(" "));
    }
    write_functions(&mut out, &m.signature);
    for (f, w) in &m.formulas {
        let _ = writeln!(out, "{w} :: {f}");
    }
    out
}
