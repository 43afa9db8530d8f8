//! Cores of the reachable locations and the prefix-closed covers reaching them.

use std::collections::{BTreeSet, HashMap};

use crate::automata::{Location, ProductReach, Symbol, Word};
use crate::compat::{CompatTable, CompatView, Preorder};

/// One representative per class of reachable locations under `≅`
/// (same context state, compatible specification states). The
/// representative is the first location discovered by the product BFS.
pub fn weak_core(reach: &ProductReach, table: &CompatTable) -> Vec<Location> {
    let mut seen = BTreeSet::new();
    reach
        .locations()
        .iter()
        .copied()
        .filter(|loc| seen.insert((loc.astate, table.class_of(loc.mstate, loc.astate))))
        .collect()
}

/// Drops, in discovery order, every location dominated by another location
/// still present: `(s, a)` goes when some kept `(t, b)` has `(s, a) ∼ (t, b)`
/// and `a ⊑ b`. Domination is transitive, so the result is still a core.
pub fn reduce_core(core: &[Location], table: &CompatTable, preorder: &Preorder) -> Vec<Location> {
    let view = CompatView::new(table, preorder);
    let mut kept = vec![true; core.len()];
    for (j, &loc) in core.iter().enumerate() {
        let dominated = core
            .iter()
            .enumerate()
            .any(|(x, &other)| x != j && kept[x] && view.dominates(other, loc));
        if dominated {
            kept[j] = false;
        }
    }
    core.iter().zip(kept).filter_map(|(&loc, keep)| keep.then_some(loc)).collect()
}

/// A prefix-closed, well-founded set of context words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    /// Sorted by length, then lexicographically.
    words: Vec<Word>,
}

impl Cover {
    /// The prefix closure of the given words, always containing ε.
    pub fn from_words(words: impl IntoIterator<Item = Word>) -> Self {
        let mut set: BTreeSet<(usize, Word)> = BTreeSet::new();
        set.insert((0, Word::empty()));
        for w in words {
            for p in w.prefixes() {
                set.insert((p.len(), Word::from(p)));
            }
        }
        Cover { words: set.into_iter().map(|(_, w)| w).collect() }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn contains(&self, word: &[Symbol]) -> bool {
        self.words
            .binary_search_by(|w| w.len().cmp(&word.len()).then_with(|| w.as_slice().cmp(word)))
            .is_ok()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// `toCvr`: the cover word assigned to each core location.
pub type ToCover = HashMap<Location, Word>;

/// Breadth-first access words for the core locations, closed under prefixes.
///
/// Panics if a core location is not reachable, which would violate the
/// contract of every core constructor in this module.
pub fn cover(reach: &ProductReach, core: &[Location]) -> (Cover, ToCover) {
    let to_cvr: ToCover = core
        .iter()
        .map(|&loc| {
            let word = reach
                .access_word(loc)
                .unwrap_or_else(|| panic!("core location {loc} is not reachable"));
            (loc, word)
        })
        .collect();
    (Cover::from_words(to_cvr.values().cloned()), to_cvr)
}

/// `|α|_V`: length of the shortest suffix `γ` with `α = βγ` and `β ∈ V`.
pub fn v_norm(cover: &Cover, word: &[Symbol]) -> usize {
    (0..=word.len())
        .rev()
        .find(|&j| cover.contains(&word[..j]))
        .map(|j| word.len() - j)
        .expect("ε belongs to every cover")
}

/// `β ≤_V α`: `β` is a prefix of `α` and no cover word lies strictly between them.
pub fn v_leq(cover: &Cover, beta: &[Symbol], alpha: &[Symbol]) -> bool {
    alpha.starts_with(beta) && (beta.len() + 1..alpha.len()).all(|j| !cover.contains(&alpha[..j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{ContextNfa, MealyMachine};
    use crate::compat::compute_compat;

    fn chain(n: usize) -> MealyMachine {
        // 0 -> 1 -> ... -> n-1 on input 0, sticky at the end; input 1 reports the state.
        MealyMachine::from_fn(n, 2, n, 0, |s, i| if i == 0 { ((s + 1).min(n - 1), 0) } else { (s, s) }).unwrap()
    }

    #[test]
    fn weak_core_of_reduced_machine_in_universal_context() {
        let m = chain(4);
        let a = ContextNfa::universal(2);
        let reach = ProductReach::explore(&m, &a).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        let core = weak_core(&reach, &table);
        assert_eq!(core.len(), 4);
    }

    #[test]
    fn weak_core_of_single_state_machine() {
        let m = MealyMachine::from_fn(1, 2, 1, 0, |_, _| (0, 0)).unwrap();
        let a = ContextNfa::new(3, 2, 0, [(0, 0, 1), (1, 1, 2), (0, 1, 0)]).unwrap();
        let reach = ProductReach::explore(&m, &a).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        assert_eq!(weak_core(&reach, &table).len(), 3);
    }

    #[test]
    fn cover_of_chain_is_its_prefixes() {
        let m = chain(4);
        let a = ContextNfa::universal(2);
        let reach = ProductReach::explore(&m, &a).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        let core = weak_core(&reach, &table);
        let (v, to_cvr) = cover(&reach, &core);
        assert_eq!(v.words(), &[Word::empty(), Word::from(vec![0]), Word::from(vec![0, 0]), Word::from(vec![0, 0, 0])]);
        assert_eq!(to_cvr[&Location::new(3, 0)], Word::from(vec![0, 0, 0]));
    }

    #[test]
    fn cover_of_initial_location_only() {
        let m = chain(2);
        let a = ContextNfa::universal(2);
        let reach = ProductReach::explore(&m, &a).unwrap();
        let (v, to_cvr) = cover(&reach, &[Location::new(0, 0)]);
        assert_eq!(v.words(), &[Word::empty()]);
        assert_eq!(to_cvr[&Location::new(0, 0)], Word::empty());
    }

    #[test]
    fn reduce_with_identity_keeps_core() {
        let m = chain(3);
        let a = ContextNfa::new(2, 2, 0, [(0, 0, 1), (1, 1, 0), (0, 1, 0)]).unwrap();
        let reach = ProductReach::explore(&m, &a).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        let core = weak_core(&reach, &table);
        assert_eq!(reduce_core(&core, &table, &Preorder::identity(2)), core);
    }

    #[test]
    fn reduce_removes_dominated_location() {
        // Context: 0 -0-> 1, 0 -1-> 0; 1 -1-> 0. L(1) ⊆ L(0).
        let m = MealyMachine::from_fn(1, 2, 1, 0, |_, _| (0, 0)).unwrap();
        let a = ContextNfa::new(2, 2, 0, [(0, 0, 1), (0, 1, 0), (1, 1, 0)]).unwrap();
        let reach = ProductReach::explore(&m, &a).unwrap();
        let table = compute_compat(&m, &a).unwrap();
        let core = weak_core(&reach, &table);
        assert_eq!(core.len(), 2);
        let pre = Preorder::from_pairs(2, [(1, 0)]);
        assert_eq!(reduce_core(&core, &table, &pre), vec![Location::new(0, 0)]);
    }

    #[test]
    fn norms_and_order() {
        let v = Cover::from_words([Word::from(vec![0, 1]), Word::from(vec![1])]);
        assert_eq!(v_norm(&v, &[0, 1]), 0);
        assert_eq!(v_norm(&v, &[0, 1, 1, 0]), 2);
        assert_eq!(v_norm(&v, &[1, 1, 1]), 2);
        let eps = Cover::from_words([]);
        assert_eq!(v_norm(&eps, &[1, 0, 1]), 3);
        assert!(v_leq(&v, &[0, 1, 1], &[0, 1, 1, 0]));
        assert!(v_leq(&v, &[0, 1], &[0, 1]));
        // [0] < [0,1] < [0,1,1]: the cover word [0,1] sits in between
        assert!(!v_leq(&v, &[0], &[0, 1, 1]));
        assert!(v_leq(&eps, &[], &[1, 0]));
        assert!(!v_leq(&eps, &[1], &[0, 1]));
    }
}
