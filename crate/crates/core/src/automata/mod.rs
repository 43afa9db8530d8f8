//! Mealy machines, context NFAs and the product constructions that relate them.
//!
//! States and symbols are dense indices `0..n`. Every machine is immutable after
//! construction, so references can be shared freely between threads.

mod mealy;
mod nfa;
mod product;
pub mod text;

use std::fmt;
use std::ops::Deref;

use thiserror::Error;

pub use mealy::MealyMachine;
pub use nfa::{ContextNfa, StateSet};
pub use product::{composite_product, image_automaton, reachable_product_locations, ProductReach};

/// Index of a state.
pub type State = usize;
/// Index of a symbol in some alphabet.
pub type Symbol = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomataError {
    #[error("symbol {symbol} at position {position} is outside the alphabet of size {size}")]
    SymbolOutOfRange { symbol: Symbol, position: usize, size: usize },
    #[error("state {state} is outside the state set of size {size}")]
    StateOutOfRange { state: State, size: usize },
    #[error("alphabet mismatch: expected {expected} symbols, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },
    #[error("transition table for ({state}, {symbol}) is missing or duplicated")]
    IncompleteTable { state: State, symbol: Symbol },
    #[error("machine has no states")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A finite word over some alphabet.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_slice(symbols: &[Symbol]) -> Self {
        Word(symbols.to_vec())
    }

    pub fn push(&mut self, symbol: Symbol) {
        self.0.push(symbol);
    }

    pub fn pop(&mut self) -> Option<Symbol> {
        self.0.pop()
    }

    /// `self · other`
    pub fn concat(&self, other: &[Symbol]) -> Word {
        let mut symbols = Vec::with_capacity(self.0.len() + other.len());
        symbols.extend_from_slice(&self.0);
        symbols.extend_from_slice(other);
        Word(symbols)
    }

    pub fn appended(&self, symbol: Symbol) -> Word {
        self.concat(&[symbol])
    }

    pub fn is_prefix_of(&self, other: &[Symbol]) -> bool {
        other.starts_with(&self.0)
    }

    /// All prefixes, shortest first, including ε and the word itself.
    pub fn prefixes(&self) -> impl Iterator<Item = &[Symbol]> + '_ {
        (0..=self.0.len()).map(move |j| &self.0[..j])
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.0
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }
}

impl Deref for Word {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl AsRef<[Symbol]> for Word {
    fn as_ref(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }
}

impl From<&[Symbol]> for Word {
    fn from(symbols: &[Symbol]) -> Self {
        Word(symbols.to_vec())
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<T: IntoIterator<Item = Symbol>>(iter: T) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        write!(f, "{self}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, symbol) in self.0.iter().enumerate() {
            if j > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{symbol}")?;
        }
        Ok(())
    }
}

/// A pair of a specification state and a context state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub mstate: State,
    pub astate: State,
}

impl Location {
    pub fn new(mstate: State, astate: State) -> Self {
        Location { mstate, astate }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.mstate, self.astate)
    }
}

pub(crate) fn check_word(word: &[Symbol], size: usize) -> Result<(), AutomataError> {
    match word.iter().position(|&x| x >= size) {
        Some(position) => Err(AutomataError::SymbolOutOfRange {
            symbol: word[position],
            position,
            size,
        }),
        None => Ok(()),
    }
}
