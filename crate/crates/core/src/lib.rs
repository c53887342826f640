//! Trace-pushdown systems with a decidable first-order theory of their
//! configuration graph.
//!
//! The pipeline: parse and validate a trace-pushdown system (conditions P1/P2,
//! saturation, loop-connectedness), build the one-step and reachability
//! relations as synchronous automata over Foata-normal-form encodings, and
//! evaluate first-order formulas over the resulting automatic structure.

pub mod alphabet;
pub mod error;
pub mod logic;
pub mod nfa;
pub mod oracle;
pub mod reach;
pub mod relation;
pub mod sampling;
pub mod tpds;
pub mod trace;
pub mod tracelang;

pub use alphabet::{DependenceAlphabet, LetterSet};
pub use error::Error;
pub use nfa::{EpsilonNfa, Nfa};
pub use relation::FnfRelation;
pub use tpds::Tpds;
pub use trace::{EfnfWord, Trace};
pub use tracelang::{BlockAlphabet, TraceClosedLang};

pub use error::Result;
