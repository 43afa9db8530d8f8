//! Prefix-closed test suites stored as a trie.
//!
//! Every node records the specification state reached by its word, the set
//! of context states reached by it and the specification's output on the
//! incoming edge. Pairs `(node, a)` with `a` in the node's context set are
//! the nodes of the context tree over the suite.

use std::fmt::Write as _;

use thiserror::Error;

use crate::automata::{AutomataError, ContextNfa, MealyMachine, State, StateSet, Symbol, Word};
use crate::compat::Separation;

pub type NodeId = usize;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("word {word} leaves the context language at position {position}")]
    Blocked { word: Word, position: usize },
    #[error("word {0} is not in the suite")]
    Missing(Word),
    #[error(transparent)]
    Automata(#[from] AutomataError),
}

#[derive(Debug, Clone)]
struct Node {
    parent: u32,
    depth: u32,
    mstate: State,
    /// Output of the specification on the incoming edge (0 at the root).
    output: Symbol,
    astates: StateSet,
    in_cover: bool,
}

/// A node of the context tree: a suite word together with one context state it reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeNode {
    pub node: NodeId,
    pub astate: State,
}

impl TreeNode {
    pub fn new(node: NodeId, astate: State) -> Self {
        TreeNode { node, astate }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteTree {
    m: MealyMachine,
    a: ContextNfa,
    nodes: Vec<Node>,
    /// `children[id * |I| + i]`
    children: Vec<u32>,
}

impl SuiteTree {
    /// The suite `{ε}`.
    pub fn new(m: &MealyMachine, a: &ContextNfa) -> Result<Self, SuiteError> {
        if a.num_symbols() != m.num_inputs() {
            return Err(AutomataError::AlphabetMismatch { expected: m.num_inputs(), found: a.num_symbols() }.into());
        }
        let root = Node {
            parent: NONE,
            depth: 0,
            mstate: m.initial(),
            output: 0,
            astates: a.initial_set(),
            in_cover: false,
        };
        Ok(SuiteTree {
            m: m.clone(),
            a: a.clone(),
            nodes: vec![root],
            children: vec![NONE; m.num_inputs()],
        })
    }

    /// The prefix closure of `words`.
    pub fn from_words<W: AsRef<[Symbol]>>(
        m: &MealyMachine,
        a: &ContextNfa,
        words: impl IntoIterator<Item = W>,
    ) -> Result<Self, SuiteError> {
        let mut suite = Self::new(m, a)?;
        for w in words {
            suite.add_test(w.as_ref())?;
        }
        Ok(suite)
    }

    pub fn machine(&self) -> &MealyMachine {
        &self.m
    }

    pub fn context(&self) -> &ContextNfa {
        &self.a
    }

    pub const ROOT: NodeId = 0;

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn child(&self, node: NodeId, input: Symbol) -> Option<NodeId> {
        match self.children[node * self.m.num_inputs() + input] {
            NONE => None,
            c => Some(c as usize),
        }
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        match self.nodes[node].parent {
            NONE => None,
            p => Some(p as usize),
        }
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.nodes[node].depth as usize
    }

    pub fn mstate(&self, node: NodeId) -> State {
        self.nodes[node].mstate
    }

    /// Expected output on the edge into `node`.
    pub fn output(&self, node: NodeId) -> Symbol {
        self.nodes[node].output
    }

    pub fn astates(&self, node: NodeId) -> &StateSet {
        &self.nodes[node].astates
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        (0..self.m.num_inputs()).all(|i| self.child(node, i).is_none())
    }

    pub fn in_cover(&self, node: NodeId) -> bool {
        self.nodes[node].in_cover
    }

    pub fn mark_cover(&mut self, node: NodeId) {
        self.nodes[node].in_cover = true;
    }

    /// Word spelled by the path from the root to `node`.
    pub fn word(&self, node: NodeId) -> Word {
        let mut symbols = Vec::with_capacity(self.depth(node));
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            let i = (0..self.m.num_inputs()).find(|&i| self.child(p, i) == Some(cur)).expect("child of its parent");
            symbols.push(i);
            cur = p;
        }
        symbols.reverse();
        Word::from(symbols)
    }

    pub fn find(&self, word: &[Symbol]) -> Option<NodeId> {
        word.iter().try_fold(Self::ROOT, |node, &i| {
            if i >= self.m.num_inputs() {
                return None;
            }
            self.child(node, i)
        })
    }

    pub fn contains(&self, word: &[Symbol]) -> bool {
        self.find(word).is_some()
    }

    /// Adds `word` and all its prefixes. Idempotent. Returns the node of `word`.
    pub fn add_test(&mut self, word: &[Symbol]) -> Result<NodeId, SuiteError> {
        let ni = self.m.num_inputs();
        let mut node = Self::ROOT;
        for (position, &i) in word.iter().enumerate() {
            if i >= ni {
                return Err(AutomataError::SymbolOutOfRange { symbol: i, position, size: ni }.into());
            }
            node = self
                .add_child(node, i)
                .ok_or_else(|| SuiteError::Blocked { word: Word::from_slice(word), position })?;
        }
        Ok(node)
    }

    /// The child of `node` on `input`, created if missing. `None` if the
    /// extended word leaves the context language.
    pub fn add_child(&mut self, node: NodeId, input: Symbol) -> Option<NodeId> {
        if let Some(c) = self.child(node, input) {
            return Some(c);
        }
        let astates = self.a.step_set(&self.nodes[node].astates, input);
        if astates.is_empty() {
            return None;
        }
        let ni = self.m.num_inputs();
        let parent = &self.nodes[node];
        let child = Node {
            parent: node as u32,
            depth: parent.depth + 1,
            mstate: self.m.next(parent.mstate, input),
            output: self.m.output(parent.mstate, input),
            astates,
            in_cover: false,
        };
        let id = self.nodes.len();
        self.nodes.push(child);
        self.children.extend(std::iter::repeat_n(NONE, ni));
        self.children[node * ni + input] = id as u32;
        Some(id)
    }

    /// Adds `node`'s word followed by `suffix`.
    pub fn add_suffix(&mut self, node: NodeId, suffix: &[Symbol]) -> Result<NodeId, SuiteError> {
        let mut cur = node;
        for (position, &i) in suffix.iter().enumerate() {
            let ni = self.m.num_inputs();
            if i >= ni {
                return Err(AutomataError::SymbolOutOfRange { symbol: i, position, size: ni }.into());
            }
            cur = match self.add_child(cur, i) {
                Some(c) => c,
                None => {
                    let word = self.word(node).concat(suffix);
                    let position = self.depth(node) + position;
                    return Err(SuiteError::Blocked { word, position });
                }
            };
        }
        Ok(cur)
    }

    /// Whether `suffix` can be appended to `node` without leaving the context.
    pub fn extends(&self, node: NodeId, suffix: &[Symbol]) -> bool {
        self.a.run(self.astates(node), suffix).is_ok_and(|set| !set.is_empty())
    }

    /// Leaves in lexicographic order. The suite `{ε}` has no maximal tests.
    pub fn maximal_tests(&self) -> Vec<Word> {
        self.leaves().into_iter().map(|n| self.word(n)).collect()
    }

    /// Leaf nodes in lexicographic order of their words; empty for `{ε}`.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut leaves = Vec::new();
        let mut stack = vec![Self::ROOT];
        while let Some(node) = stack.pop() {
            let mut any = false;
            for i in (0..self.m.num_inputs()).rev() {
                if let Some(c) = self.child(node, i) {
                    stack.push(c);
                    any = true;
                }
            }
            if !any && node != Self::ROOT {
                leaves.push(node);
            }
        }
        leaves
    }

    pub fn num_tests(&self) -> usize {
        self.leaves().len()
    }

    /// Total length of the maximal tests.
    pub fn symbol_count(&self) -> usize {
        self.leaves().iter().map(|&n| self.depth(n)).sum()
    }

    /// Length of the longest test.
    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth as usize).max().unwrap_or(0)
    }

    /// All nodes `(node, a)` of the context tree over the suite.
    pub fn tree_nodes(&self) -> impl Iterator<Item = TreeNode> + '_ {
        (0..self.nodes.len()).flat_map(move |n| self.nodes[n].astates.iter().map(move |a| TreeNode::new(n, a)))
    }

    /// `x #_E y`: some common continuation inside the suite produces different outputs.
    pub fn separable_nodes(&self, x: NodeId, y: NodeId) -> bool {
        if x == y || self.mstate(x) == self.mstate(y) {
            return false;
        }
        let mut stack = vec![(x, y)];
        while let Some((p, q)) = stack.pop() {
            for i in 0..self.m.num_inputs() {
                if let (Some(p2), Some(q2)) = (self.child(p, i), self.child(q, i)) {
                    if self.output(p2) != self.output(q2) {
                        return true;
                    }
                    if self.mstate(p2) != self.mstate(q2) {
                        stack.push((p2, q2));
                    }
                }
            }
        }
        false
    }

    pub fn separable(&self, alpha: &[Symbol], beta: &[Symbol]) -> Result<bool, SuiteError> {
        let x = self.find(alpha).ok_or_else(|| SuiteError::Missing(Word::from_slice(alpha)))?;
        let y = self.find(beta).ok_or_else(|| SuiteError::Missing(Word::from_slice(beta)))?;
        Ok(self.separable_nodes(x, y))
    }

    /// Pairs of context-tree nodes whose locations are incompatible according
    /// to `sep` but whose words are not separable in the suite. Empty iff the
    /// suite is incompatibility-preserving with respect to `nodes`.
    pub fn incompat_preserving(&self, sep: &impl Separation, nodes: &[TreeNode]) -> Vec<(TreeNode, TreeNode)> {
        let mut missing = Vec::new();
        for (j, &p) in nodes.iter().enumerate() {
            for &q in &nodes[j + 1..] {
                let (lp, lq) = (self.location(p), self.location(q));
                if sep.incompatible(lp, lq) && !self.separable_nodes(p.node, q.node) {
                    missing.push((p, q));
                }
            }
        }
        missing
    }

    /// The location `(δ_M(α), a)` of a context-tree node.
    pub fn location(&self, t: TreeNode) -> crate::automata::Location {
        crate::automata::Location::new(self.mstate(t.node), t.astate)
    }

    /// Recomputes every annotation from scratch. Used by invariant checks.
    pub fn annotations_consistent(&self) -> bool {
        (0..self.nodes.len()).all(|n| {
            let w = self.word(n);
            let (state, outs) = self.m.run(self.m.initial(), &w).expect("suite words are over the input alphabet");
            state == self.mstate(n)
                && (w.is_empty() || outs.last() == Some(&self.output(n)))
                && self.a.reached(&w) == *self.astates(n)
                && !self.astates(n).is_empty()
        })
    }

    /// Writes one maximal test per line; with `outputs`, each test is followed
    /// by a `/`-prefixed line of expected outputs.
    pub fn to_text(&self, outputs: bool) -> String {
        let mut text = String::new();
        for leaf in self.leaves() {
            let w = self.word(leaf);
            let _ = writeln!(text, "{w}");
            if outputs {
                let _ = writeln!(text, "/ {}", self.m.outputs(&w));
            }
        }
        text
    }
}

/// Parses a suite file into its tests, ignoring expected-output lines,
/// comments and blank lines.
pub fn parse_suite(text: &str) -> Result<Vec<Word>, AutomataError> {
    let mut tests = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('/') {
            continue;
        }
        let word = line
            .split_whitespace()
            .map(|t| {
                t.parse::<Symbol>().map_err(|_| AutomataError::Parse {
                    line: n + 1,
                    message: format!("expected an input symbol, found `{t}`"),
                })
            })
            .collect::<Result<Word, _>>()?;
        tests.push(word);
    }
    Ok(tests)
}
