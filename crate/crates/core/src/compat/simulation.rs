use std::collections::HashMap;

use crate::automata::{ContextNfa, State};

/// A reflexive, transitive relation `⊑` on context states that
/// under-approximates language containment: `a ⊑ b` implies `L(a) ⊆ L(b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preorder {
    n: usize,
    rel: Vec<bool>,
}

impl Preorder {
    pub fn identity(n: usize) -> Self {
        let mut rel = vec![false; n * n];
        for a in 0..n {
            rel[a * n + a] = true;
        }
        Preorder { n, rel }
    }

    pub fn total(n: usize) -> Self {
        Preorder { n, rel: vec![true; n * n] }
    }

    /// The reflexive-transitive closure of the given pairs `(a, b)` meaning `a ⊑ b`.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (State, State)>) -> Self {
        let mut order = Self::identity(n);
        for (a, b) in pairs {
            order.rel[a * n + b] = true;
        }
        order.close();
        order
    }

    fn close(&mut self) {
        let n = self.n;
        for k in 0..n {
            for a in 0..n {
                if self.rel[a * n + k] {
                    for b in 0..n {
                        if self.rel[k * n + b] {
                            self.rel[a * n + b] = true;
                        }
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `a ⊑ b`
    #[inline]
    pub fn leq(&self, a: State, b: State) -> bool {
        self.rel[a * self.n + b]
    }

    /// Only the identity pairs are related.
    pub fn is_trivial(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| self.leq(a, b) == (a == b)))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|a| self.leq(a, a))
    }

    pub fn is_transitive(&self) -> bool {
        let n = self.n;
        (0..n).all(|a| (0..n).all(|b| !self.leq(a, b) || (0..n).all(|c| !self.leq(b, c) || self.leq(a, c))))
    }

    /// All related pairs `(a, b)` with `a ⊑ b` and `a ≠ b`.
    pub fn strict_pairs(&self) -> impl Iterator<Item = (State, State)> + '_ {
        (0..self.n).flat_map(move |a| (0..self.n).filter(move |&b| a != b && self.leq(a, b)).map(move |b| (a, b)))
    }
}

/// Greatest direct simulation: `a ⊑ b` iff every `x`-successor of `a` is
/// simulated by some `x`-successor of `b`, for every symbol `x`.
pub fn direct_simulation(a: &ContextNfa) -> Preorder {
    let n = a.num_states();
    let mut order = Preorder::total(n);
    let mut changed = true;
    while changed {
        changed = false;
        for p in 0..n {
            for q in 0..n {
                if !order.leq(p, q) {
                    continue;
                }
                let simulated = (0..a.num_symbols()).all(|x| {
                    a.successors(p, x)
                        .iter()
                        .all(|&p2| a.successors(q, x).iter().any(|&q2| order.leq(p2, q2)))
                });
                if !simulated {
                    order.rel[p * n + q] = false;
                    changed = true;
                }
            }
        }
    }
    order
}

/// Merges states that simulate each other and drops unreachable classes.
/// States of the result are numbered by first occurrence of their class.
pub fn quotient_by_simulation(a: &ContextNfa, order: &Preorder) -> ContextNfa {
    let n = a.num_states();
    let mut class = vec![usize::MAX; n];
    let mut count = 0;
    for p in 0..n {
        if class[p] != usize::MAX {
            continue;
        }
        for q in p..n {
            if class[q] == usize::MAX && order.leq(p, q) && order.leq(q, p) {
                class[q] = count;
            }
        }
        count += 1;
    }
    // Keep only classes reachable from the initial class, numbered in DFS discovery order.
    let mut renumber: HashMap<usize, usize> = HashMap::new();
    let members: Vec<Vec<State>> = (0..count).map(|c| (0..n).filter(|&p| class[p] == c).collect()).collect();
    let mut stack = vec![class[a.initial()]];
    renumber.insert(class[a.initial()], 0);
    let mut transitions = Vec::new();
    while let Some(c) = stack.pop() {
        for &p in &members[c] {
            for x in 0..a.num_symbols() {
                for &q in a.successors(p, x) {
                    let d = class[q];
                    let next = renumber.len();
                    let id = *renumber.entry(d).or_insert_with(|| {
                        stack.push(d);
                        next
                    });
                    transitions.push((renumber[&c], x, id));
                }
            }
        }
    }
    ContextNfa::new(renumber.len(), a.num_symbols(), 0, transitions).expect("quotient is well formed")
}
