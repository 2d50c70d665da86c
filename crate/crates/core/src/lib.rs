//! Message-passing algorithms for CNF satisfiability.
//!
//! The crate is organized around a clause/variable factor graph
//! ([`FactorGraph`]) on which three families of messages are iterated:
//!
//! * warnings ([`wp`]), Boolean messages that are exact on tree formulas and
//!   drive warning-inspired decimation;
//! * beliefs ([`bp`]), which give marginals and the solution-count entropy on
//!   trees;
//! * surveys ([`sp`]), which estimate cluster-level biases and complexity on
//!   random formulas and drive survey-inspired decimation ([`sid`]).
//!
//! A brute-force [`oracle`] provides ground truth on small instances, and
//! [`walksat`] finishes the residual formulas left by decimation. The
//! [`harness`] module runs the reproducible experiment grids.

pub mod bp;
pub mod dimacs;
pub mod formula;
pub mod generator;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod sid;
pub mod sp;
pub mod walksat;
pub mod wp;

mod product;

pub use crate::bp::{BeliefState, EntropyReport, MarginalVector};
pub use crate::dimacs::{emit_dimacs, parse_dimacs, DimacsError, ParsedDimacs};
pub use crate::formula::{Assignment, Clause, CnfFormula, FormulaError, Literal, Var};
pub use crate::generator::{generate_random_ksat, generate_random_tree_formula, GeneratorParams};
pub use crate::graph::{CleanOutcome, EdgeId, FactorGraph, Propagation, SimplifyError};
pub use crate::sid::{sid_solve, SidConfig, SolveResult, SolveStatus};
pub use crate::sp::{BiasTriple, ComplexityReport, SurveyState, VariableCategory};
pub use crate::walksat::{SearchOutcome, SearchStatus, WalksatParams};
pub use crate::wp::{FieldSummary, WarningState};

use serde::Serialize;

/// Outcome class of an iterative message-passing run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConvergenceStatus {
    Converged,
    Unconverged,
    /// A zero normalization was met during an update: the messages prove the
    /// current (sub)formula contradictory.
    Contradiction,
}

/// Summary of one message-passing run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub status: ConvergenceStatus,
    /// Number of full sweeps performed.
    pub sweeps: usize,
    /// Largest per-edge change observed in the last sweep.
    pub residual: f64,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.status == ConvergenceStatus::Converged
    }
}

/// A zero normalization met while evaluating messages or their summaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Contradiction {
    #[error("clause {0} cannot be satisfied under the current messages")]
    Clause(usize),
    #[error("variable {0} receives contradictory messages")]
    Variable(Var),
}
