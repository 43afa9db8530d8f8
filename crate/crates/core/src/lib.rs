//! Grey-box conformance testing of Mealy machines inside a context.
//!
//! A specification `M` is only ever exercised through the words of a
//! context automaton `A`. Test suites built here are complete for all
//! implementations with at most `k` states, on inputs allowed by `A`.

pub mod automata;
pub mod compat;
pub mod coverage;
pub mod suite;
pub mod testgen;
pub mod oracle;
pub mod cli;
