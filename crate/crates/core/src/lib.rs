//! Abstract quantum automata over finite-dimensional state spaces, their
//! classical stochastic counterparts, and a small model language.

pub mod asm;
pub mod automaton;
pub mod corpus;
pub mod dsl;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod quantum;
pub mod random;
pub mod run;

pub use asm::{StochasticAsm, SnapshotSet};
pub use automaton::{AbstractQuantumAutomaton, BranchTree, Configuration, EnumerateOptions};
pub use error::{QautError, Result};
pub use graph::ControlGraph;
pub use linalg::{Complex, ComplexMatrix, DEFAULT_TOL};
pub use quantum::{DensityOperator, IsometryMatrix, KrausFamily, OutcomeSet, QuantumOperation};
