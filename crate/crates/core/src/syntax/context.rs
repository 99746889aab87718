use std::fmt;

use super::expr::{Name, Term};

/// An ordered list of `name : type` statements. Later entries may mention
/// earlier ones; names are pairwise distinct.
#[derive(Clone, Debug, Default)]
pub struct Context {
    entries: Vec<(Name, Term)>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    /// Appends a statement; fails if the name is already declared.
    pub fn push(&mut self, var: Name, ty: Term) -> Result<(), Name> {
        if self.contains(&var) {
            return Err(var);
        }
        self.entries.push((var, ty));
        Ok(())
    }

    /// Appends without the distinctness check. Callers must have freshened
    /// the name already.
    pub(crate) fn push_unchecked(&mut self, var: Name, ty: Term) {
        self.entries.push((var, ty));
    }

    pub(crate) fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn with(&self, var: Name, ty: Term) -> Result<Context, Name> {
        let mut c = self.clone();
        c.push(var, ty)?;
        Ok(c)
    }

    pub fn lookup(&self, var: &str) -> Option<&Term> {
        self.entries
            .iter()
            .rev()
            .find(|(n, _)| &**n == var)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.entries.iter().any(|(n, _)| &**n == var)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.entries.iter().map(|(n, t)| (n, t))
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().map(|(n, _)| n)
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, (n, t)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n} : {t}")?;
        }
        f.write_str(">")
    }
}
