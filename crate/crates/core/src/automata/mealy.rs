use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use super::{check_word, AutomataError, State, Symbol, Word};

/// A deterministic, input-complete Mealy machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    num_states: usize,
    num_inputs: usize,
    num_outputs: usize,
    next: Vec<State>,
    out: Vec<Symbol>,
    initial: State,
}

impl MealyMachine {
    /// Builds a machine from row-major tables indexed by `state * num_inputs + input`.
    pub fn new(
        num_states: usize,
        num_inputs: usize,
        num_outputs: usize,
        next: Vec<State>,
        out: Vec<Symbol>,
        initial: State,
    ) -> Result<Self, AutomataError> {
        if num_states == 0 {
            return Err(AutomataError::Empty);
        }
        let slots = num_states * num_inputs;
        if next.len() != slots || out.len() != slots {
            return Err(AutomataError::IncompleteTable {
                state: next.len().min(out.len()) / num_inputs.max(1),
                symbol: next.len().min(out.len()) % num_inputs.max(1),
            });
        }
        if initial >= num_states {
            return Err(AutomataError::StateOutOfRange { state: initial, size: num_states });
        }
        if let Some(&state) = next.iter().find(|&&t| t >= num_states) {
            return Err(AutomataError::StateOutOfRange { state, size: num_states });
        }
        if let Some(&symbol) = out.iter().find(|&&o| o >= num_outputs) {
            return Err(AutomataError::SymbolOutOfRange { symbol, position: 0, size: num_outputs });
        }
        Ok(MealyMachine { num_states, num_inputs, num_outputs, next, out, initial })
    }

    /// Builds a machine by tabulating `f(state, input) = (next, output)`.
    pub fn from_fn(
        num_states: usize,
        num_inputs: usize,
        num_outputs: usize,
        initial: State,
        mut f: impl FnMut(State, Symbol) -> (State, Symbol),
    ) -> Result<Self, AutomataError> {
        let mut next = Vec::with_capacity(num_states * num_inputs);
        let mut out = Vec::with_capacity(num_states * num_inputs);
        for s in 0..num_states {
            for i in 0..num_inputs {
                let (t, o) = f(s, i);
                next.push(t);
                out.push(o);
            }
        }
        Self::new(num_states, num_inputs, num_outputs, next, out, initial)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    #[inline]
    pub fn next(&self, state: State, input: Symbol) -> State {
        self.next[state * self.num_inputs + input]
    }

    #[inline]
    pub fn output(&self, state: State, input: Symbol) -> Symbol {
        self.out[state * self.num_inputs + input]
    }

    /// Lifted transition and output functions: `(δ(from, word), λ(from, word))`.
    pub fn run(&self, from: State, word: &[Symbol]) -> Result<(State, Word), AutomataError> {
        if from >= self.num_states {
            return Err(AutomataError::StateOutOfRange { state: from, size: self.num_states });
        }
        check_word(word, self.num_inputs)?;
        Ok(self.run_unchecked(from, word))
    }

    pub(crate) fn run_unchecked(&self, from: State, word: &[Symbol]) -> (State, Word) {
        let mut state = from;
        let mut outputs = Vec::with_capacity(word.len());
        for &i in word {
            outputs.push(self.output(state, i));
            state = self.next(state, i);
        }
        (state, Word::from(outputs))
    }

    /// `δ(from, word)`; symbols are assumed to be in range.
    pub fn state_after_from(&self, from: State, word: &[Symbol]) -> State {
        word.iter().fold(from, |s, &i| self.next(s, i))
    }

    /// `δ(r, word)` from the initial state.
    pub fn state_after(&self, word: &[Symbol]) -> State {
        self.state_after_from(self.initial, word)
    }

    /// `λ(r, word)` from the initial state.
    pub fn outputs(&self, word: &[Symbol]) -> Word {
        self.run_unchecked(self.initial, word).1
    }

    pub fn outputs_from(&self, from: State, word: &[Symbol]) -> Word {
        self.run_unchecked(from, word).1
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(s) = stack.pop() {
            for i in 0..self.num_inputs {
                let t = self.next(s, i);
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// Every state is reachable from the initial one.
    pub fn is_connected(&self) -> bool {
        self.reachable().into_iter().all(|r| r)
    }

    /// Moore partition refinement: `classes[s] == classes[t]` iff `s` and `t`
    /// are equivalent. Class ids are numbered by first occurrence.
    pub fn equivalence_classes(&self) -> Vec<usize> {
        let mut classes = renumber(
            (0..self.num_states)
                .map(|s| (0..self.num_inputs).map(|i| self.output(s, i)).collect::<Vec<_>>())
                .collect(),
        );
        loop {
            let refined = renumber(
                (0..self.num_states)
                    .map(|s| {
                        let mut signature = vec![classes[s]];
                        signature.extend((0..self.num_inputs).map(|i| classes[self.next(s, i)]));
                        signature
                    })
                    .collect(),
            );
            let before = classes.iter().max().copied().unwrap_or(0);
            let after = refined.iter().max().copied().unwrap_or(0);
            classes = refined;
            if before == after {
                return classes;
            }
        }
    }

    /// Pairwise distinguishable states.
    pub fn is_reduced(&self) -> bool {
        let classes = self.equivalence_classes();
        classes.iter().max().is_none_or(|&m| m + 1 == self.num_states)
    }

    /// The minimal machine equivalent to this one: unreachable states are dropped
    /// and equivalent states merged. States are renumbered in BFS order.
    pub fn minimize(&self) -> MealyMachine {
        let classes = self.equivalence_classes();
        let mut id: HashMap<usize, State> = HashMap::new();
        let mut repr = Vec::new();
        let mut queue = VecDeque::new();
        id.insert(classes[self.initial], 0);
        repr.push(self.initial);
        queue.push_back(self.initial);
        while let Some(s) = queue.pop_front() {
            for i in 0..self.num_inputs {
                let t = self.next(s, i);
                if let Entry::Vacant(e) = id.entry(classes[t]) {
                    e.insert(repr.len());
                    repr.push(t);
                    queue.push_back(t);
                }
            }
        }
        MealyMachine::from_fn(repr.len(), self.num_inputs, self.num_outputs, 0, |s, i| {
            let old = repr[s];
            (id[&classes[self.next(old, i)]], self.output(old, i))
        })
        .expect("minimized table is complete")
    }

    /// Shortest word distinguishing two states (ties broken lexicographically),
    /// or `None` when they are equivalent.
    pub fn distinguishing_word(&self, s: State, t: State) -> Option<Word> {
        if s == t {
            return None;
        }
        let n = self.num_states;
        let mut parent: Vec<Option<(usize, Symbol)>> = vec![None; n * n];
        let mut seen = vec![false; n * n];
        let start = s * n + t;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(pair) = queue.pop_front() {
            let (p, q) = (pair / n, pair % n);
            for i in 0..self.num_inputs {
                if self.output(p, i) != self.output(q, i) {
                    let mut word = vec![i];
                    let mut cur = pair;
                    while let Some((prev, x)) = parent[cur] {
                        word.push(x);
                        cur = prev;
                    }
                    word.reverse();
                    return Some(Word::from(word));
                }
                let succ = self.next(p, i) * n + self.next(q, i);
                if !seen[succ] {
                    seen[succ] = true;
                    parent[succ] = Some((pair, i));
                    queue.push_back(succ);
                }
            }
        }
        None
    }
}

fn renumber(signatures: Vec<Vec<usize>>) -> Vec<usize> {
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    signatures
        .into_iter()
        .map(|sig| {
            let next = ids.len();
            *ids.entry(sig).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toggle() -> MealyMachine {
        // 0 --a/0--> 1, 1 --a/1--> 0, b loops with output 0
        MealyMachine::from_fn(2, 2, 2, 0, |s, i| if i == 0 { (1 - s, s) } else { (s, 0) }).unwrap()
    }

    #[test]
    fn empty_word_is_identity() {
        let m = toggle();
        assert_eq!(m.run(1, &[]).unwrap(), (1, Word::empty()));
    }

    #[test]
    fn single_state_loop() {
        let m = MealyMachine::from_fn(1, 1, 2, 0, |_, _| (0, 1)).unwrap();
        assert_eq!(m.run(0, &[0, 0, 0]).unwrap(), (0, Word::from(vec![1, 1, 1])));
    }

    #[test]
    fn out_of_alphabet_rejected() {
        let m = toggle();
        assert!(matches!(
            m.run(0, &[0, 2]),
            Err(AutomataError::SymbolOutOfRange { symbol: 2, position: 1, .. })
        ));
        assert!(m.run(5, &[]).is_err());
    }

    #[test]
    fn minimization_merges_equivalent_states() {
        // states 1 and 2 are copies
        let m = MealyMachine::new(3, 1, 2, vec![1, 2, 1], vec![0, 1, 1], 0).unwrap();
        assert!(!m.is_reduced());
        let min = m.minimize();
        assert_eq!(min.num_states(), 2);
        assert!(min.is_reduced());
        for len in 0..5 {
            let w = vec![0; len];
            assert_eq!(m.outputs(&w), min.outputs(&w));
        }
    }

    #[test]
    fn distinguishing_word_is_shortest() {
        let m = toggle();
        assert_eq!(m.distinguishing_word(0, 1), Some(Word::from(vec![0])));
        assert_eq!(m.distinguishing_word(0, 0), None);
    }

    #[test]
    fn table_validation() {
        assert!(MealyMachine::new(1, 1, 1, vec![1], vec![0], 0).is_err());
        assert!(MealyMachine::new(1, 1, 1, vec![0], vec![1], 0).is_err());
        assert!(MealyMachine::new(1, 1, 1, vec![0], vec![0], 1).is_err());
        assert!(MealyMachine::new(0, 1, 1, vec![], vec![], 0).is_err());
    }
}
