//! Compatibility of locations and the simulation preorder on context states.
//!
//! Two locations `(s, a)` and `(t, b)` are incompatible when some word
//! available from both `a` and `b` makes `s` and `t` produce different
//! outputs. For a fixed context state the relation `∼_a` is an equivalence
//! computed by [`compute_compat`].

mod simulation;
mod table;

pub use simulation::{direct_simulation, quotient_by_simulation, Preorder};
pub use table::{compute_compat, harmonized_identifiers, CompatTable, IdentifierFamily};

use crate::automata::Location;

/// A (possibly partial) decision procedure for incompatibility of locations.
///
/// Implementations must be sound: `incompatible(p, q)` may only return true
/// when `p` and `q` really are incompatible.
pub trait Separation {
    fn incompatible(&self, p: Location, q: Location) -> bool;
}

/// Incompatibility derived from the per-state tables and a preorder.
///
/// `(s, a)` and `(t, b)` are reported incompatible when some `c` with
/// `c ⊑ a` and `c ⊑ b` has `s ≁_c t`. This is exact whenever `a ⊑ b` or
/// `b ⊑ a`.
#[derive(Clone, Copy)]
pub struct CompatView<'a> {
    pub table: &'a CompatTable,
    pub preorder: &'a Preorder,
}

impl<'a> CompatView<'a> {
    pub fn new(table: &'a CompatTable, preorder: &'a Preorder) -> Self {
        CompatView { table, preorder }
    }

    /// A context state below both `a` and `b` at which `s` and `t` split, if any.
    /// Prefers `a` or `b` themselves, then the lowest index.
    pub fn common_split(&self, p: Location, q: Location) -> Option<usize> {
        let (s, a, t, b) = (p.mstate, p.astate, q.mstate, q.astate);
        if s == t {
            return None;
        }
        if self.preorder.leq(a, b) && self.table.incompatible(s, t, a) {
            return Some(a);
        }
        if self.preorder.leq(b, a) && self.table.incompatible(s, t, b) {
            return Some(b);
        }
        (0..self.preorder.len())
            .find(|&c| self.preorder.leq(c, a) && self.preorder.leq(c, b) && self.table.incompatible(s, t, c))
    }

    /// `(t, b) ⊒ (s, a)`: the locations are compatible and `b ⊒ a`.
    pub fn dominates(&self, dominator: Location, dominated: Location) -> bool {
        self.preorder.leq(dominated.astate, dominator.astate)
            && self.table.compatible(dominator.mstate, dominated.mstate, dominated.astate)
    }
}

impl Separation for CompatView<'_> {
    fn incompatible(&self, p: Location, q: Location) -> bool {
        self.common_split(p, q).is_some()
    }
}
