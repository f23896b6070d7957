//! Variable tables shared by polynomials, rational functions and operators.
//!
//! A [`VarTable`] is an ordered list of distinct variable names, fixed for a
//! session.  Every polynomial stores a handle to its table, and all binary
//! operations insist that both operands use the same table.  The table order
//! is the tie-breaking order of the graded-lexicographic monomial order.

use std::fmt;
use std::sync::Arc;

/// Maximum number of variables a table may hold.  Exponent vectors are dense
/// arrays of this width, so the cap keeps monomials `Copy` and cheap.
pub const MAX_VARS: usize = 12;

/// Index of a variable inside its [`VarTable`].
pub type VarId = usize;

/// An immutable, ordered collection of variable names.
#[derive(Debug, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
}

impl VarTable {
    /// Builds a table from the given names.
    ///
    /// Panics if there are more than [`MAX_VARS`] names, a duplicate name, or
    /// an empty name.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Arc<VarTable> {
        assert!(
            names.len() <= MAX_VARS,
            "variable table limited to {MAX_VARS} variables, got {}",
            names.len()
        );
        let mut seen: Vec<&str> = Vec::new();
        for n in names {
            let n = n.as_ref();
            assert!(!n.is_empty(), "empty variable name");
            assert!(!seen.contains(&n), "duplicate variable name {n:?}");
            seen.push(n);
        }
        Arc::new(VarTable {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
        })
    }

    /// Number of variables in the table.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True when the table holds no variables.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Name of variable `id`.
    pub fn name(&self, id: VarId) -> &str {
        &self.names[id]
    }

    /// Looks a variable up by name.
    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name)
    }

    /// Looks a variable up by name, panicking when absent.
    pub fn id(&self, name: &str) -> VarId {
        self.lookup(name)
            .unwrap_or_else(|| panic!("unknown variable {name:?}"))
    }

    /// Iterates over `(id, name)` pairs in table order.
    pub fn iter(&self) -> impl Iterator<Item = (VarId, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (i, n.as_str()))
    }
}

impl fmt::Display for VarTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.names.join(", "))
    }
}

/// Checks that two tables are the same (by pointer or by content).
pub fn same_table(a: &Arc<VarTable>, b: &Arc<VarTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_order() {
        let t = VarTable::new(&["x", "b", "m", "s"]);
        assert_eq!(t.len(), 4);
        assert_eq!(t.id("x"), 0);
        assert_eq!(t.id("s"), 3);
        assert_eq!(t.lookup("q"), None);
        assert_eq!(t.name(1), "b");
    }

    #[test]
    #[should_panic(expected = "duplicate")]
    fn rejects_duplicates() {
        let _ = VarTable::new(&["x", "x"]);
    }

    #[test]
    #[should_panic(expected = "limited")]
    fn rejects_oversized() {
        let names: Vec<String> = (0..13).map(|i| format!("v{i}")).collect();
        let _ = VarTable::new(&names);
    }

    #[test]
    fn content_equality() {
        let a = VarTable::new(&["n", "k"]);
        let b = VarTable::new(&["n", "k"]);
        assert!(same_table(&a, &b));
        let c = VarTable::new(&["k", "n"]);
        assert!(!same_table(&a, &c));
    }
}
