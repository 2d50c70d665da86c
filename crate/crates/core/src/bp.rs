//! Belief propagation for the uniform measure over satisfying assignments.
//!
//! The message `δ(a→i)` is the probability that every other variable of
//! clause `a` sits in the state violating `a`. At a fixed point it yields the
//! marginals `μ_i = P(x_i = 1)` and the entropy `S = ln(#solutions)`, both
//! exact on tree formulas.
//!
//! The entropy is assembled from the normalization constants of the clause
//! and site marginals,
//!
//! ```text
//! S = Σ_a [ Σ_{j∈V(a)} ln(P^u_j + P^s_j) + ln(1 - Π_j γ_j) ]
//!   + Σ_i (1 - n_i) ln[ Π_{V+(i)} (1-δ) + Π_{V-(i)} (1-δ) ]
//! ```
//!
//! where `P^u_j = Π_{V^s_a(j)} (1-δ)`, `P^s_j = Π_{V^u_a(j)} (1-δ)` and
//! `γ_j = P^u_j / (P^u_j + P^s_j)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::formula::Var;
use crate::graph::{EdgeId, FactorGraph};
use crate::product::{cavity_products, var_products};
use crate::rng::{seeded, SeededRng};
use crate::{Contradiction, ConvergenceReport, ConvergenceStatus};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    delta: Vec<f64>,
}

impl BeliefState {
    pub fn constant(graph: &FactorGraph, value: f64) -> BeliefState {
        assert!((0.0..=1.0).contains(&value));
        BeliefState { delta: vec![value; graph.n_edges()] }
    }

    /// Live edges drawn uniformly from `[0, 1)`.
    pub fn random(graph: &FactorGraph, rng: &mut SeededRng) -> BeliefState {
        let mut delta = vec![0.0; graph.n_edges()];
        for e in graph.live_edges() {
            delta[e] = rng.gen::<f64>();
        }
        BeliefState { delta }
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> f64 {
        self.delta[e]
    }

    pub fn set(&mut self, e: EdgeId, value: f64) {
        assert!((0.0..=1.0).contains(&value));
        self.delta[e] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.delta
    }
}

/// `γ(j→a)` for the edge `(a, j)` together with `P^u + P^s`.
#[inline]
fn gamma(graph: &FactorGraph, delta: &[f64], edge: EdgeId) -> Result<(f64, f64), Contradiction> {
    let (p_u, p_s) = cavity_products(graph, delta, edge);
    let norm = p_u + p_s;
    if norm == 0.0 {
        return Err(Contradiction::Variable(graph.edge_var(edge)));
    }
    Ok((p_u / norm, norm))
}

/// New value of `δ(a→i)`: the product of `γ(j→a)` over the other variables of
/// `a`, or 1 for a unit clause.
pub fn bp_update_edge(graph: &FactorGraph, beliefs: &BeliefState, edge: EdgeId) -> Result<f64, Contradiction> {
    let a = graph.edge_clause(edge);
    let mut delta = 1.0;
    for f in graph.clause_edges(a) {
        if f != edge {
            delta *= gamma(graph, &beliefs.delta, f)?.0;
        }
    }
    Ok(delta)
}

pub fn run_bp(graph: &FactorGraph, t_max: usize, epsilon: f64, seed: u64) -> (ConvergenceReport, BeliefState) {
    let mut rng = seeded(seed);
    let mut state = BeliefState::random(graph, &mut rng);
    let report = run_bp_from(graph, &mut state, t_max, epsilon, &mut rng);
    (report, state)
}

/// Sequential sweeps over the live edges in fresh random orders until the
/// largest change of a sweep drops below `epsilon`.
pub fn run_bp_from(
    graph: &FactorGraph,
    state: &mut BeliefState,
    t_max: usize,
    epsilon: f64,
    rng: &mut SeededRng,
) -> ConvergenceReport {
    assert!(t_max >= 1 && epsilon > 0.0);
    let mut order: Vec<EdgeId> = graph.live_edges().collect();
    let mut residual = 0.0;
    for sweep in 1..=t_max {
        order.shuffle(rng);
        residual = 0.0f64;
        for &e in &order {
            let new = match bp_update_edge(graph, state, e) {
                Ok(v) => v,
                Err(_) => {
                    return ConvergenceReport { status: ConvergenceStatus::Contradiction, sweeps: sweep, residual };
                }
            };
            debug_assert!((0.0..=1.0).contains(&new), "δ out of range: {new}");
            residual = residual.max((new - state.delta[e]).abs());
            state.delta[e] = new;
        }
        if residual < epsilon {
            return ConvergenceReport { status: ConvergenceStatus::Converged, sweeps: sweep, residual };
        }
    }
    ConvergenceReport { status: ConvergenceStatus::Unconverged, sweeps: t_max, residual }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalVector {
    pub mu: Vec<f64>,
}

/// `μ_i = Π_{V-}(1-δ) / (Π_{V-}(1-δ) + Π_{V+}(1-δ))`.
pub fn bp_marginals(graph: &FactorGraph, beliefs: &BeliefState) -> Result<MarginalVector, Contradiction> {
    let mu = (0..graph.n_vars())
        .map(|v| {
            let var = Var(v as u32);
            let (plus, minus) = var_products(graph, &beliefs.delta, var);
            let norm = plus + minus;
            if norm == 0.0 {
                Err(Contradiction::Variable(var))
            } else {
                Ok(minus / norm)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MarginalVector { mu })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    #[serde(rename = "S")]
    pub entropy: f64,
    /// `exp(S)`; infinite when not representable.
    pub count: f64,
    /// `-ln c_a - Σ_{i∈V(a)} ln C(i→a)` per clause (0 for removed clauses).
    pub clause_terms: Vec<f64>,
    /// `(n_i - 1) ln c_i` per variable (0 for retired variables).
    pub var_terms: Vec<f64>,
}

pub fn bp_entropy(graph: &FactorGraph, beliefs: &BeliefState) -> Result<EntropyReport, Contradiction> {
    let delta = &beliefs.delta;
    let mut clause_terms = vec![0.0; graph.n_clauses()];
    for a in graph.live_clauses() {
        let mut log_norms = 0.0;
        let mut gamma_product = 1.0;
        for f in graph.clause_edges(a) {
            let (g, norm) = gamma(graph, delta, f)?;
            log_norms += norm.ln();
            gamma_product *= g;
        }
        let violated = 1.0 - gamma_product;
        if violated <= 0.0 {
            return Err(Contradiction::Clause(a));
        }
        clause_terms[a] = log_norms + violated.ln();
    }
    let mut var_terms = vec![0.0; graph.n_vars()];
    for (v, term) in var_terms.iter_mut().enumerate() {
        let var = Var(v as u32);
        if graph.is_retired(var) {
            continue;
        }
        let (plus, minus) = var_products(graph, delta, var);
        let norm = plus + minus;
        if norm == 0.0 {
            return Err(Contradiction::Variable(var));
        }
        *term = (1.0 - graph.degree(var) as f64) * norm.ln();
    }
    let entropy = clause_terms.iter().sum::<f64>() + var_terms.iter().sum::<f64>();
    Ok(EntropyReport { entropy, count: entropy.exp(), clause_terms, var_terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::fixtures::*;
    use crate::formula::CnfFormula;

    const TOL: f64 = 1e-12;

    #[test]
    fn isolated_neighbor_gives_half() {
        let g = FactorGraph::new(&single(&[1, 2], 2));
        let b = BeliefState::constant(&g, 0.3);
        assert!((bp_update_edge(&g, &b, 0).unwrap() - 0.5).abs() < TOL);
        assert!((bp_update_edge(&g, &b, 1).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn chain_updates_by_hand() {
        let g = FactorGraph::new(&chain());
        let mut b = BeliefState::constant(&g, 0.0);
        assert_eq!(bp_update_edge(&g, &b, 0).unwrap(), 1.0);
        b.set(0, 1.0);
        assert_eq!(bp_update_edge(&g, &b, 2).unwrap(), 1.0);
        assert!((bp_update_edge(&g, &b, 1).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn chain_fixed_point_marginals_entropy() {
        let g = FactorGraph::new(&chain());
        let (report, b) = run_bp(&g, 100, 1e-12, 4);
        assert!(report.converged());
        assert_eq!(b.get(0), 1.0);
        assert!((b.get(1) - 0.5).abs() < TOL);
        assert_eq!(b.get(2), 1.0);
        let mu = bp_marginals(&g, &b).unwrap();
        assert_eq!(mu.mu, vec![1.0, 1.0]);
        let s = bp_entropy(&g, &b).unwrap();
        assert!(s.entropy.abs() < TOL);
        assert!((s.count - 1.0).abs() < TOL);
    }

    #[test]
    fn single_clause_marginal_and_entropy() {
        let g = FactorGraph::new(&single(&[1, 2], 2));
        let (report, b) = run_bp(&g, 100, 1e-12, 1);
        assert!(report.converged());
        let mu = bp_marginals(&g, &b).unwrap();
        assert!((mu.mu[0] - 2.0 / 3.0).abs() < TOL);
        let s = bp_entropy(&g, &b).unwrap();
        assert!((s.entropy - 3f64.ln()).abs() < TOL);
    }

    #[test]
    fn isolated_variable_is_half_and_adds_ln2() {
        let f = CnfFormula::new(1, vec![]).unwrap();
        let g = FactorGraph::new(&f);
        let b = BeliefState::constant(&g, 0.0);
        assert_eq!(bp_marginals(&g, &b).unwrap().mu, vec![0.5]);

        let base = chain();
        let g1 = FactorGraph::new(&base);
        let g2 = FactorGraph::new(&base.with_extra_vars(1));
        let (_, b1) = run_bp(&g1, 100, 1e-12, 2);
        let (_, b2) = run_bp(&g2, 100, 1e-12, 2);
        let s1 = bp_entropy(&g1, &b1).unwrap().entropy;
        let s2 = bp_entropy(&g2, &b2).unwrap().entropy;
        assert!((s2 - s1 - 2f64.ln()).abs() < TOL);
    }

    #[test]
    fn direct_conflict_is_a_contradiction() {
        // x1 must be both true and false; the second clause gives x2 a way out
        // only if x1 is false
        let f = CnfFormula::from_dimacs_clauses(2, &[&[1], &[-1], &[-1, 2]]).unwrap();
        let g = FactorGraph::new(&f);
        let (report, _) = run_bp(&g, 50, 1e-6, 0);
        assert_eq!(report.status, ConvergenceStatus::Contradiction);
    }
}
