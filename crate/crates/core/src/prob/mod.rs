//! The probabilistic system: weighted reduction, sampling, reduction trees,
//! the possible-types and possible-reductions operators, legality and
//! probabilistic type judgment.

mod analysis;
mod sample;
mod step;
mod tree;

use thiserror::Error;

use crate::kernel::{check_judgment, infer_type, type_nf, KernelError};
use crate::syntax::{alpha_eq, Context, LetTyper, Term};

pub use analysis::{
    analyze, in_t_x, is_legal, mentions_in_redex, reductions_of, types_of, Analysis, TypeSet,
};
pub use sample::{batch_rng, sample_counts, sample_many, sample_reduce, Sampler, BATCH_SIZE};
pub use step::{
    replace_at, resolve_dispatch, select_redex, step_rho, subterm_at, Position, RedexKind,
    WeightedStep,
};
pub use tree::{enumerate_tree, ReductionTree, TreeEdge, TreeNode};

/// Default cap on the number of leaves of an enumerated tree.
pub const DEFAULT_LEAF_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("no dispatch case matches argument type `{0}`")]
    DispatchNoMatch(String),
    #[error("several dispatch cases match argument type `{0}`")]
    DispatchAmbiguous(String),
    #[error("no normal form within {0} steps")]
    FuelExhausted(usize),
    #[error("reduction tree has more than {0} leaves")]
    LeafCapExceeded(usize),
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// How [`judge_prob`] evaluates the probability.
#[derive(Clone, Copy, Debug)]
pub enum JudgeMode {
    Exact {
        fuel: usize,
        leaf_cap: usize,
    },
    Sampled {
        n_samples: usize,
        seed: u64,
        fuel: usize,
    },
}

/// Probability that `e` reduces to a normal form of type `ty`.
pub fn judge_prob(ctx: &Context, e: &Term, ty: &Term, mode: JudgeMode) -> Result<f64, ProbError> {
    match mode {
        JudgeMode::Exact { fuel, leaf_cap } => {
            let tree = enumerate_tree(ctx, e, fuel, leaf_cap)?;
            Ok(tree
                .distribution()
                .into_iter()
                .filter(|(leaf, _)| check_judgment(ctx, leaf, ty))
                .map(|(_, p)| p)
                .collect::<KahanSum>()
                .total())
        }
        JudgeMode::Sampled {
            n_samples,
            seed,
            fuel,
        } => {
            if n_samples == 0 {
                return Ok(0.0);
            }
            let hits: usize = sample_counts(ctx, e, n_samples, seed, fuel)?
                .into_iter()
                .filter(|(leaf, _)| check_judgment(ctx, leaf, ty))
                .map(|(_, n)| n)
                .sum();
            Ok(hits as f64 / n_samples as f64)
        }
    }
}

/// Probability of each type of the normal forms of `e`, from the exact
/// reduction tree.
pub fn type_distribution(
    ctx: &Context,
    e: &Term,
    fuel: usize,
    leaf_cap: usize,
) -> Result<Vec<(Term, f64)>, ProbError> {
    let tree = enumerate_tree(ctx, e, fuel, leaf_cap)?;
    let mut out: Vec<(Term, KahanSum)> = Vec::new();
    for (leaf, p) in tree.distribution() {
        let t = type_nf(&infer_type(ctx, &leaf)?)?;
        match out.iter_mut().find(|(u, _)| alpha_eq(u, &t)) {
            Some(slot) => slot.1.add(p),
            None => out.push((t, [p].into_iter().collect())),
        }
    }
    Ok(out.into_iter().map(|(t, s)| (t, s.total())).collect())
}

/// Types `let` bindings with the possible-types operator.
pub struct KernelLetTyper;

impl LetTyper for KernelLetTyper {
    fn binding_types(&self, ctx: &Context, bound: &Term) -> Result<Vec<Term>, String> {
        match types_of(ctx, bound) {
            TypeSet::NoType => Err("expression has no type".into()),
            TypeSet::Types(s) => Ok(s.iter().cloned().collect()),
        }
    }
}
