//! Random benchmark machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automata::{ContextNfa, MealyMachine};

/// Draws before a configuration is declared unsatisfiable.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("no reduced connected machine with {states} states, {inputs} inputs and {outputs} outputs after {MAX_REJECTIONS} draws")]
    Rejected { states: usize, inputs: usize, outputs: usize },
    #[error("no connected automaton with {states} states over {symbols} symbols after {MAX_REJECTIONS} draws")]
    RejectedNfa { states: usize, symbols: usize },
    #[error("machines need at least one state and one symbol in each alphabet")]
    Empty,
}

/// A machine with uniformly drawn transitions and outputs.
pub fn random_mealy(states: usize, inputs: usize, outputs: usize, rng: &mut impl Rng) -> MealyMachine {
    MealyMachine::from_fn(states, inputs, outputs, 0, |_, _| (rng.random_range(0..states), rng.random_range(0..outputs)))
        .expect("drawn table is complete")
}

/// Rejection sampling of a reduced machine whose states are all reachable.
pub fn gen_random_reduced_with(
    states: usize,
    inputs: usize,
    outputs: usize,
    rng: &mut impl Rng,
) -> Result<MealyMachine, GenerateError> {
    if states == 0 || inputs == 0 || outputs == 0 {
        return Err(GenerateError::Empty);
    }
    for _ in 0..MAX_REJECTIONS {
        let m = random_mealy(states, inputs, outputs, rng);
        if m.is_connected() && m.is_reduced() {
            return Ok(m);
        }
    }
    Err(GenerateError::Rejected { states, inputs, outputs })
}

pub fn gen_random_reduced(states: usize, inputs: usize, outputs: usize, seed: u64) -> Result<MealyMachine, GenerateError> {
    gen_random_reduced_with(states, inputs, outputs, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Shape of random context automata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NfaShape {
    pub states: usize,
    pub symbols: usize,
    /// Probability that a `(state, symbol)` pair has a successor.
    pub edge: f64,
    /// Probability of a second successor, given a first.
    pub branch: f64,
}

/// Rejection sampling of an automaton with every state reachable from the initial one.
pub fn gen_random_nfa_with(shape: NfaShape, rng: &mut impl Rng) -> Result<ContextNfa, GenerateError> {
    let NfaShape { states, symbols, edge, branch } = shape;
    if states == 0 || symbols == 0 {
        return Err(GenerateError::Empty);
    }
    for _ in 0..MAX_REJECTIONS {
        let mut transitions = Vec::new();
        for q in 0..states {
            for x in 0..symbols {
                if rng.random_bool(edge) {
                    transitions.push((q, x, rng.random_range(0..states)));
                    if rng.random_bool(branch) {
                        transitions.push((q, x, rng.random_range(0..states)));
                    }
                }
            }
        }
        let a = ContextNfa::new(states, symbols, 0, transitions).expect("drawn transitions are in range");
        if a.reachable_states().iter().all(|&r| r) {
            return Ok(a);
        }
    }
    Err(GenerateError::RejectedNfa { states, symbols })
}

pub fn gen_random_nfa(shape: NfaShape, seed: u64) -> Result<ContextNfa, GenerateError> {
    gen_random_nfa_with(shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reduced_by_brute_force(m: &MealyMachine) -> bool {
        // pairs of states must differ on some word of length < |S|
        let n = m.num_states();
        let mut words: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..n {
            let longer: Vec<Vec<usize>> = words
                .iter()
                .flat_map(|w| (0..m.num_inputs()).map(move |i| [w.clone(), vec![i]].concat()))
                .collect();
            words.extend(longer);
            words.dedup();
        }
        (0..n).all(|s| (s + 1..n).all(|t| words.iter().any(|w| m.outputs_from(s, w) != m.outputs_from(t, w))))
    }

    #[test]
    fn single_state() {
        let m = gen_random_reduced(1, 3, 1, 5).unwrap();
        assert_eq!(m.num_states(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(gen_random_reduced(4, 2, 2, 11).unwrap(), gen_random_reduced(4, 2, 2, 11).unwrap());
        let shape = NfaShape { states: 3, symbols: 2, edge: 0.8, branch: 0.3 };
        assert_eq!(gen_random_nfa(shape, 3).unwrap(), gen_random_nfa(shape, 3).unwrap());
    }

    #[test]
    fn accepted_machines_are_reduced_and_connected() {
        for seed in 0..10 {
            let m = gen_random_reduced(5, 4, 4, seed).unwrap();
            assert!(m.reachable().iter().all(|&r| r));
            assert!(reduced_by_brute_force(&m));
        }
    }

    #[test]
    fn impossible_configuration_is_reported() {
        assert_eq!(
            gen_random_reduced(3, 2, 1, 0).unwrap_err(),
            GenerateError::Rejected { states: 3, inputs: 2, outputs: 1 }
        );
    }
}
