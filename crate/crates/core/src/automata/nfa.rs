use std::fmt;

use fixedbitset::FixedBitSet;

use super::{check_word, AutomataError, State, Symbol};

/// A set of NFA states stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet(FixedBitSet);

impl StateSet {
    pub fn empty(capacity: usize) -> Self {
        StateSet(FixedBitSet::with_capacity(capacity))
    }

    pub fn singleton(capacity: usize, state: State) -> Self {
        let mut set = Self::empty(capacity);
        set.insert(state);
        set
    }

    pub fn insert(&mut self, state: State) {
        self.0.insert(state);
    }

    pub fn contains(&self, state: State) -> bool {
        self.0.contains(state)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn iter(&self) -> impl Iterator<Item = State> + '_ {
        self.0.ones()
    }

    pub fn intersect_with(&mut self, other: &StateSet) {
        self.0.intersect_with(&other.0);
    }

    pub fn union_with(&mut self, other: &StateSet) {
        self.0.union_with(&other.0);
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// An NFA in which every state is accepting. The language of each state is
/// therefore prefix-closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextNfa {
    num_states: usize,
    num_symbols: usize,
    forward: Vec<Vec<State>>,
    backward: Vec<Vec<State>>,
    initial: State,
}

impl ContextNfa {
    /// Builds an NFA from a transition list `(from, symbol, to)`. Duplicate
    /// transitions are merged.
    pub fn new(
        num_states: usize,
        num_symbols: usize,
        initial: State,
        transitions: impl IntoIterator<Item = (State, Symbol, State)>,
    ) -> Result<Self, AutomataError> {
        if num_states == 0 {
            return Err(AutomataError::Empty);
        }
        if initial >= num_states {
            return Err(AutomataError::StateOutOfRange { state: initial, size: num_states });
        }
        let mut forward = vec![Vec::new(); num_states * num_symbols];
        let mut backward = vec![Vec::new(); num_states * num_symbols];
        for (from, x, to) in transitions {
            for state in [from, to] {
                if state >= num_states {
                    return Err(AutomataError::StateOutOfRange { state, size: num_states });
                }
            }
            if x >= num_symbols {
                return Err(AutomataError::SymbolOutOfRange { symbol: x, position: 0, size: num_symbols });
            }
            forward[from * num_symbols + x].push(to);
            backward[to * num_symbols + x].push(from);
        }
        for targets in forward.iter_mut().chain(backward.iter_mut()) {
            targets.sort_unstable();
            targets.dedup();
        }
        Ok(ContextNfa { num_states, num_symbols, forward, backward, initial })
    }

    /// The one-state NFA accepting every word.
    pub fn universal(num_symbols: usize) -> Self {
        Self::new(1, num_symbols, 0, (0..num_symbols).map(|x| (0, x, 0))).expect("valid universal NFA")
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    /// `Δ(state, symbol)`, sorted.
    #[inline]
    pub fn successors(&self, state: State, symbol: Symbol) -> &[State] {
        &self.forward[state * self.num_symbols + symbol]
    }

    /// States with a `symbol`-transition into `state`, sorted.
    #[inline]
    pub fn predecessors(&self, state: State, symbol: Symbol) -> &[State] {
        &self.backward[state * self.num_symbols + symbol]
    }

    pub fn transitions(&self) -> impl Iterator<Item = (State, Symbol, State)> + '_ {
        (0..self.num_states).flat_map(move |a| {
            (0..self.num_symbols)
                .flat_map(move |x| self.successors(a, x).iter().map(move |&b| (a, x, b)))
        })
    }

    pub fn empty_set(&self) -> StateSet {
        StateSet::empty(self.num_states)
    }

    pub fn initial_set(&self) -> StateSet {
        StateSet::singleton(self.num_states, self.initial)
    }

    pub fn step_set(&self, from: &StateSet, symbol: Symbol) -> StateSet {
        let mut result = self.empty_set();
        for a in from.iter() {
            for &b in self.successors(a, symbol) {
                result.insert(b);
            }
        }
        result
    }

    /// States with a `symbol`-transition into some member of `to`.
    pub fn pre_set(&self, to: &StateSet, symbol: Symbol) -> StateSet {
        let mut result = self.empty_set();
        for b in to.iter() {
            for &a in self.predecessors(b, symbol) {
                result.insert(a);
            }
        }
        result
    }

    /// `Δ` lifted to words and sets.
    pub fn run(&self, from: &StateSet, word: &[Symbol]) -> Result<StateSet, AutomataError> {
        check_word(word, self.num_symbols)?;
        Ok(self.run_unchecked(from, word))
    }

    pub(crate) fn run_unchecked(&self, from: &StateSet, word: &[Symbol]) -> StateSet {
        let mut current = from.clone();
        for &x in word {
            if current.is_empty() {
                break;
            }
            current = self.step_set(&current, x);
        }
        current
    }

    /// `Δ(r, word)`; symbols out of range yield the empty set.
    pub fn reached(&self, word: &[Symbol]) -> StateSet {
        self.reached_from(self.initial, word)
    }

    pub fn reached_from(&self, state: State, word: &[Symbol]) -> StateSet {
        if check_word(word, self.num_symbols).is_err() {
            return self.empty_set();
        }
        self.run_unchecked(&StateSet::singleton(self.num_states, state), word)
    }

    pub fn accepts(&self, word: &[Symbol]) -> bool {
        !self.reached(word).is_empty()
    }

    pub fn accepts_from(&self, state: State, word: &[Symbol]) -> bool {
        !self.reached_from(state, word).is_empty()
    }

    /// True when `state` has at least one `symbol`-successor.
    pub fn enabled(&self, state: State, symbol: Symbol) -> bool {
        !self.successors(state, symbol).is_empty()
    }

    pub fn reachable_states(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        seen[self.initial] = true;
        let mut stack = vec![self.initial];
        while let Some(a) = stack.pop() {
            for x in 0..self.num_symbols {
                for &b in self.successors(a, x) {
                    if !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen
    }
}
