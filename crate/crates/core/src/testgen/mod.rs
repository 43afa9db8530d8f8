//! Generation of `k`-complete suites in a context.
//!
//! [`simple`] and [`complex`] expand a cover of the reachable locations depth
//! first and stop on a branch as soon as every context state at its end has
//! a large enough redundancy certificate. [`baseline_tail`] is the classical
//! W-method applied to the composite machine of a cascade.

mod wmethod;

use std::time::Instant;

use thiserror::Error;

use crate::automata::{AutomataError, ContextNfa, Location, MealyMachine, ProductReach, State, StateSet, Symbol};
use crate::compat::{
    compute_compat, harmonized_identifiers, CompatTable, CompatView, IdentifierFamily, Preorder, Separation,
};
use crate::coverage::{cover, reduce_core, weak_core};
use crate::suite::{NodeId, SuiteError, SuiteTree, TreeNode};

pub use wmethod::{baseline_tail, baseline_tail_guarded, w_method, w_method_guarded, Baseline, WMethodStats};

/// Largest number of W-method tests materialized before giving up.
pub const DEFAULT_MAX_TESTS: usize = 250_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("bound k = {k} is too small (need at least {min})")]
    InvalidBound { k: usize, min: usize },
    #[error("deadline exceeded")]
    Timeout,
    #[error("estimated {estimated} tests exceed the limit of {limit}")]
    ResourceGuard { estimated: u128, limit: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Default)]
pub struct GenOptions {
    /// Check certificate invariants at emission and preservation after each exploit.
    pub check_invariants: bool,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenStats {
    /// `n_{M×A}`: number of classes of reachable locations.
    pub classes: usize,
    pub core_size: usize,
    pub cover_size: usize,
    /// `k|S_A| - n_{M×A}`
    pub extra: i64,
    /// Longest suffix `β` passed to the certificate search.
    pub max_depth: usize,
    pub searches: usize,
    pub certificates: usize,
}

/// A redundancy certificate for the node `(target, target_state)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub target: NodeId,
    pub target_state: State,
    /// Nodes with strictly increasing words and non-increasing context states.
    pub ranking: Vec<TreeNode>,
    pub basis: Vec<TreeNode>,
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.ranking.len() + self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = TreeNode> + '_ {
        self.ranking.iter().chain(&self.basis).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub suite: SuiteTree,
    pub stats: GenStats,
}

/// Called after every exploited certificate with the current suite.
pub type Observer<'o> = &'o mut dyn FnMut(&SuiteTree, &Certificate);

pub fn simple(m: &MealyMachine, a: &ContextNfa, k: usize) -> Result<SuiteTree, GenError> {
    simple_with(m, a, k, &GenOptions::default(), None).map(|g| g.suite)
}

pub fn complex(m: &MealyMachine, a: &ContextNfa, preorder: &Preorder, k: usize) -> Result<SuiteTree, GenError> {
    complex_with(m, a, preorder, k, &GenOptions::default(), None).map(|g| g.suite)
}

pub fn simple_with(
    m: &MealyMachine,
    a: &ContextNfa,
    k: usize,
    options: &GenOptions,
    observer: Option<Observer<'_>>,
) -> Result<Generated, GenError> {
    let identity = Preorder::identity(a.num_states());
    run(m, a, &identity, k, Variant::Simple, options, observer)
}

pub fn complex_with(
    m: &MealyMachine,
    a: &ContextNfa,
    preorder: &Preorder,
    k: usize,
    options: &GenOptions,
    observer: Option<Observer<'_>>,
) -> Result<Generated, GenError> {
    if preorder.len() != a.num_states() {
        return Err(AutomataError::AlphabetMismatch { expected: a.num_states(), found: preorder.len() }.into());
    }
    run(m, a, preorder, k, Variant::Complex, options, observer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Simple,
    Complex,
}

/// A ranking under construction: `(j, c)` stands for the node `c` at `α_V β_{≤j}`.
type Ranking = Vec<(usize, State)>;

struct Generator<'g, 'o> {
    m: &'g MealyMachine,
    a: &'g ContextNfa,
    k: usize,
    table: &'g CompatTable,
    preorder: &'g Preorder,
    variant: Variant,
    /// Core locations in discovery order, with their cover nodes.
    core: Vec<(Location, NodeId)>,
    /// Simple only: basis nodes per context state.
    flat_basis: Vec<Vec<TreeNode>>,
    identifiers: Option<IdentifierFamily>,
    suite: SuiteTree,
    stats: GenStats,
    options: &'g GenOptions,
    observer: Option<Observer<'o>>,
}

fn run(
    m: &MealyMachine,
    a: &ContextNfa,
    preorder: &Preorder,
    k: usize,
    variant: Variant,
    options: &GenOptions,
    observer: Option<Observer<'_>>,
) -> Result<Generated, GenError> {
    if k < 1 {
        return Err(GenError::InvalidBound { k, min: 1 });
    }
    let table = compute_compat(m, a)?;
    let reach = ProductReach::explore(m, a)?;
    let weak = weak_core(&reach, &table);
    let core = match variant {
        Variant::Simple => weak.clone(),
        Variant::Complex => reduce_core(&weak, &table, preorder),
    };
    let (v, to_cvr) = cover(&reach, &core);

    let mut suite = SuiteTree::new(m, a)?;
    for word in v.words() {
        let node = suite.add_test(word)?;
        suite.mark_cover(node);
    }
    let core: Vec<(Location, NodeId)> = core
        .iter()
        .map(|&loc| (loc, suite.find(&to_cvr[&loc]).expect("cover words are in the suite")))
        .collect();

    let mut flat_basis = vec![Vec::new(); a.num_states()];
    let identifiers = match variant {
        Variant::Simple => {
            let ids = harmonized_identifiers(m, a, &table);
            for &(loc, node) in &core {
                flat_basis[loc.astate].push(TreeNode::new(node, loc.astate));
                for w in ids.get(loc) {
                    suite.add_suffix(node, w)?;
                }
            }
            Some(ids)
        }
        Variant::Complex => None,
    };

    let stats = GenStats {
        classes: weak.len(),
        core_size: core.len(),
        cover_size: v.len(),
        extra: (k * a.num_states()) as i64 - weak.len() as i64,
        ..GenStats::default()
    };
    let mut generator = Generator {
        m,
        a,
        k,
        table: &table,
        preorder,
        variant,
        core,
        flat_basis,
        identifiers,
        suite,
        stats,
        options,
        observer,
    };
    for word in v.words() {
        let node = generator.suite.find(word).expect("cover words are in the suite");
        let mut path = vec![(node, 0)];
        generator.explore(&mut path)?;
    }
    Ok(Generated { suite: generator.suite, stats: generator.stats })
}

impl Generator<'_, '_> {
    fn view(&self) -> CompatView<'_> {
        CompatView::new(self.table, self.preorder)
    }

    /// `path[0]` is `α_V`; `path[j] = (node of α_V β_{≤j}, β_j)`.
    fn explore(&mut self, path: &mut Vec<(NodeId, Symbol)>) -> Result<(), GenError> {
        if self.options.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(GenError::Timeout);
        }
        let node = path.last().expect("path starts at a cover word").0;
        for i in 0..self.m.num_inputs() {
            if let Some(c) = self.suite.child(node, i) {
                if self.suite.in_cover(c) {
                    continue;
                }
            }
            // Added before the search so that dead ends stay in the suite.
            let Some(child) = self.suite.add_child(node, i) else { continue };
            path.push((child, i));
            self.stats.max_depth = self.stats.max_depth.max(path.len() - 1);
            self.stats.searches += 1;
            match self.search_certs(path) {
                Some(certs) => {
                    for cert in certs {
                        self.exploit(&cert)?;
                    }
                }
                None => self.explore(path)?,
            }
            path.pop();
        }
        Ok(())
    }

    /// `Ω_j`: the context states `c` at `α_V β_{≤j}` from which `a` is reached at the end of the path.
    fn omega(&self, path: &[(NodeId, Symbol)], a: State) -> Vec<StateSet> {
        let len = path.len();
        let mut omega = vec![StateSet::empty(self.a.num_states()); len];
        omega[len - 1] = StateSet::singleton(self.a.num_states(), a);
        for j in (1..len).rev() {
            let mut prev = self.a.pre_set(&omega[j], path[j].1);
            prev.intersect_with(self.suite.astates(path[j - 1].0));
            omega[j - 1] = prev;
        }
        omega
    }

    fn search_certs(&self, path: &[(NodeId, Symbol)]) -> Option<Vec<Certificate>> {
        let target = path.last().expect("non-empty path").0;
        let mut certs = Vec::new();
        for a in self.suite.astates(target).iter() {
            let omega = self.omega(path, a);
            let rankings = match self.variant {
                Variant::Simple => build_rankings_flat(&omega, self.a.num_states()),
                Variant::Complex => build_rankings_general(&omega, self.a.num_states(), self.preorder),
            };
            let mut best: Option<(Vec<TreeNode>, Vec<TreeNode>)> = None;
            for (b, ranking) in rankings.into_iter().enumerate() {
                let ranking: Vec<TreeNode> = ranking.iter().map(|&(j, c)| TreeNode::new(path[j].0, c)).collect();
                let basis = match self.variant {
                    Variant::Simple => self.flat_basis[b].clone(),
                    Variant::Complex => self.basis_general(&ranking),
                };
                if ranking.len() + basis.len() > self.k
                    && best.as_ref().is_none_or(|(_, best_basis)| basis.len() > best_basis.len())
                {
                    best = Some((ranking, basis));
                }
            }
            let (mut ranking, mut basis) = best?;
            if basis.len() > self.k + 1 {
                basis.truncate(self.k + 1);
                ranking.clear();
            } else {
                let excess = ranking.len() + basis.len() - (self.k + 1);
                ranking.drain(..excess);
            }
            certs.push(Certificate { target, target_state: a, ranking, basis });
        }
        Some(certs)
    }

    /// Greedy basis for a monotonous ranking. A core location is only taken
    /// when its incompatibility with every ranking node it does not dominate,
    /// and with every basis element chosen so far, is decidable from the
    /// tables and the preorder.
    fn basis_general(&self, ranking: &[TreeNode]) -> Vec<TreeNode> {
        let view = self.view();
        let ranking_locs: Vec<Location> = ranking.iter().map(|&t| self.suite.location(t)).collect();
        let mut chosen: Vec<(Location, NodeId)> = Vec::new();
        let mut states: Vec<State> = ranking_locs.iter().map(|l| l.astate).collect();
        states.dedup();
        for &c in &states {
            for s in 0..self.m.num_states() {
                let loc = Location::new(s, c);
                if chosen.iter().any(|&(q, _)| view.dominates(q, loc)) {
                    continue;
                }
                let candidate = self.core.iter().copied().find(|&(q, _)| {
                    view.dominates(q, loc)
                        && ranking_locs.iter().all(|&r| self.preorder.leq(r.astate, q.astate) || view.common_split(r, q).is_some())
                        && chosen.iter().all(|&(p, _)| view.common_split(p, q).is_some())
                });
                if let Some(found) = candidate {
                    chosen.push(found);
                }
            }
        }
        chosen.into_iter().map(|(q, node)| TreeNode::new(node, q.astate)).collect()
    }

    fn exploit(&mut self, cert: &Certificate) -> Result<(), GenError> {
        if self.options.check_invariants {
            self.check_certificate(cert)?;
        }
        match self.variant {
            Variant::Simple => self.exploit_flat(cert)?,
            Variant::Complex => self.exploit_general(cert)?,
        }
        self.stats.certificates += 1;
        if self.options.check_invariants {
            let nodes: Vec<TreeNode> = cert.nodes().collect();
            let missing = self.suite.incompat_preserving(&self.view(), &nodes);
            if let Some(&(p, q)) = missing.first() {
                return Err(GenError::Invariant(format!(
                    "nodes {} at {} and {} at {} are not separated after exploiting a certificate",
                    p.astate,
                    self.suite.word(p.node),
                    q.astate,
                    self.suite.word(q.node)
                )));
            }
        }
        if let Some(observer) = self.observer.as_mut() {
            observer(&self.suite, cert);
        }
        Ok(())
    }

    fn exploit_flat(&mut self, cert: &Certificate) -> Result<(), GenError> {
        let ids = self.identifiers.as_ref().expect("simple variant has identifiers");
        for &node in &cert.ranking {
            let loc = self.suite.location(node);
            for w in ids.get(loc) {
                self.suite.add_suffix(node.node, w)?;
            }
        }
        Ok(())
    }

    fn separate(&mut self, p: NodeId, q: NodeId, s: State, t: State, at: State) -> Result<(), GenError> {
        if self.suite.separable_nodes(p, q) {
            return Ok(());
        }
        let gamma = self.table.witness(s, t, at).expect("split state has a witness").clone();
        self.suite.add_suffix(p, &gamma)?;
        self.suite.add_suffix(q, &gamma)?;
        Ok(())
    }

    fn exploit_general(&mut self, cert: &Certificate) -> Result<(), GenError> {
        let pre = self.preorder;
        let table = self.table;
        let view = CompatView::new(table, pre);
        let rank: Vec<(NodeId, Location)> = cert.ranking.iter().map(|&t| (t.node, self.suite.location(t))).collect();
        let basis: Vec<(NodeId, Location)> = cert.basis.iter().map(|&t| (t.node, self.suite.location(t))).collect();
        let last_split = |from: usize, s: State, t: State, below: &[State]| {
            (from..rank.len())
                .rev()
                .map(|y| rank[y].1.astate)
                .find(|&c| below.iter().all(|&b| pre.leq(c, b)) && table.incompatible(s, t, c))
        };

        // Ranking against ranking: the later state is below the earlier one.
        for x in 0..rank.len() {
            for y in x + 1..rank.len() {
                let ((px, lx), (py, ly)) = (rank[x], rank[y]);
                if table.incompatible(lx.mstate, ly.mstate, ly.astate) {
                    self.separate(px, py, lx.mstate, ly.mstate, ly.astate)?;
                }
            }
        }
        // Ranking against basis.
        for (x, &(px, lx)) in rank.iter().enumerate() {
            for &(pb, lb) in &basis {
                let at = last_split(x, lx.mstate, lb.mstate, &[lb.astate]).or_else(|| view.common_split(lx, lb));
                if let Some(at) = at {
                    self.separate(px, pb, lx.mstate, lb.mstate, at)?;
                }
            }
        }
        // Basis against basis.
        for x in 0..basis.len() {
            for y in x + 1..basis.len() {
                let ((p1, l1), (p2, l2)) = (basis[x], basis[y]);
                let at = last_split(0, l1.mstate, l2.mstate, &[l1.astate, l2.astate]).or_else(|| view.common_split(l1, l2));
                if let Some(at) = at {
                    self.separate(p1, p2, l1.mstate, l2.mstate, at)?;
                }
            }
        }
        Ok(())
    }

    fn check_certificate(&self, cert: &Certificate) -> Result<(), GenError> {
        let fail = |msg: String| Err(GenError::Invariant(msg));
        let view = self.view();
        if cert.len() != self.k + 1 {
            return fail(format!("certificate has {} nodes, expected {}", cert.len(), self.k + 1));
        }
        let target_word = self.suite.word(cert.target);
        for pair in cert.ranking.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            if self.suite.depth(p.node) >= self.suite.depth(q.node) || !self.preorder.leq(q.astate, p.astate) {
                return fail(format!("ranking is not monotonous at {}", self.suite.word(q.node)));
            }
        }
        for &r in &cert.ranking {
            let word = self.suite.word(r.node);
            if self.suite.in_cover(r.node) || !word.is_prefix_of(&target_word) {
                return fail(format!("ranking node {word} is in the cover or not a prefix of the target"));
            }
            let rest = &target_word[word.len()..];
            if !self.a.reached_from(r.astate, rest).contains(cert.target_state) {
                return fail(format!("ranking node {} at {word} does not precede the target", r.astate));
            }
            if !self.suite.astates(r.node).contains(r.astate) {
                return fail(format!("ranking node {} at {word} is not in the context tree", r.astate));
            }
        }
        for (x, &b) in cert.basis.iter().enumerate() {
            if !self.suite.in_cover(b.node) || !self.suite.astates(b.node).contains(b.astate) {
                return fail(format!("basis node at {} is not a cover node", self.suite.word(b.node)));
            }
            for &c in &cert.basis[x + 1..] {
                if !view.incompatible(self.suite.location(b), self.suite.location(c)) {
                    return fail("basis nodes are not pairwise incompatible".into());
                }
            }
            for &r in &cert.ranking {
                let (lb, lr) = (self.suite.location(b), self.suite.location(r));
                if !view.incompatible(lb, lr) && !self.preorder.leq(lr.astate, lb.astate) {
                    return fail(format!("basis location {lb} does not dominate ranking location {lr}"));
                }
            }
        }
        Ok(())
    }
}

/// One flat ranking per context state: all nodes of that state in `Ω` below the cover word.
fn build_rankings_flat(omega: &[StateSet], num_astates: usize) -> Vec<Ranking> {
    let mut rankings = vec![Vec::new(); num_astates];
    for (j, set) in omega.iter().enumerate().skip(1) {
        for b in set.iter() {
            rankings[b].push((j, b));
        }
    }
    rankings
}

/// For each context state `b`, a longest monotonous ranking ending in state `b`.
fn build_rankings_general(omega: &[StateSet], num_astates: usize, preorder: &Preorder) -> Vec<Ranking> {
    let mut current: Vec<Ranking> = vec![Vec::new(); num_astates];
    for (j, set) in omega.iter().enumerate().skip(1) {
        let previous = current.clone();
        for b in set.iter() {
            let c = (0..num_astates)
                .filter(|&c| preorder.leq(b, c))
                .max_by_key(|&c| (previous[c].len(), std::cmp::Reverse(c)))
                .expect("b is related to itself");
            let mut ranking = previous[c].clone();
            ranking.push((j, b));
            current[b] = ranking;
        }
    }
    current
}
