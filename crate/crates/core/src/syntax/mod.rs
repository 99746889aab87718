//! Abstract syntax, parsing, printing, alpha-equivalence and substitution.

mod alpha;
mod context;
mod expr;
mod parse;
mod print;
mod subst;

pub use alpha::{alpha_eq, canonical, ExprSet};
pub use context::Context;
pub use expr::*;
pub use parse::{parse, parse_in, parse_program, LetTyper, ParseError};
pub use subst::{pair_component_mentions, substitute, SubstError};
