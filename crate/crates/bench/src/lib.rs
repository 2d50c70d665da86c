//! Shared instances for the benchmarks.

use spsat_core::harness::instance_formula;
use spsat_core::{CnfFormula, FactorGraph};

/// Random 3-SAT instance used by every benchmark of the given size.
pub fn random_3sat(n: usize, alpha: f64) -> CnfFormula {
    instance_formula(n, alpha, 3, 1).expect("valid generator parameters")
}

pub fn random_graph(n: usize, alpha: f64) -> FactorGraph {
    FactorGraph::new(&random_3sat(n, alpha))
}
