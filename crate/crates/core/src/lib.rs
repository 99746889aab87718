//! Probabilistic dependent type system: a deterministic kernel with
//! dependent products and sums over `Bool` and `Unit`, and a probabilistic
//! extension with Bernoulli choice and type-directed dispatch.

pub mod corpus;
pub mod kernel;
pub mod prob;
pub mod syntax;
