//! The deterministic system: beta reduction, normal forms, type inference
//! and judgment checking.

mod reduce;
mod typing;

use thiserror::Error;

use crate::syntax::Name;

pub(crate) use reduce::contract;
pub use reduce::{normalize, normalize_bound, normalize_strong, step_beta};
pub use typing::{
    beta_equiv, check_context, check_judgment, infer_type, sort_of, type_nf, Judgment, Rule,
};

/// Step budget for normalizing types during inference.
pub const TYPE_FUEL: usize = 100_000;

/// Default step budget for normalizing terms.
pub const DEFAULT_FUEL: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("no normal form within {0} steps")]
    FuelExhausted(usize),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("not typable ({rule}): {detail}")]
    NotTypable { rule: Rule, detail: String },
    #[error("ill-formed context: {0}")]
    IllFormedContext(String),
}
