//! Warning propagation and warning-inspired decimation.
//!
//! A warning `u(a→i) ∈ {0, 1}` says that clause `a` needs variable `i` to
//! satisfy it. All arithmetic is on integers. On tree formulas the fixed point
//! is unique and decides satisfiability exactly.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::formula::{Assignment, Var};
use crate::graph::{EdgeId, FactorGraph};
use crate::rng::{derive_seed, seeded, stream, SeededRng};
use crate::{ConvergenceReport, ConvergenceStatus};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WarningState {
    u: Vec<u8>,
}

impl WarningState {
    pub fn zeros(graph: &FactorGraph) -> WarningState {
        WarningState { u: vec![0; graph.n_edges()] }
    }

    /// Live edges get independent fair bits.
    pub fn random(graph: &FactorGraph, rng: &mut SeededRng) -> WarningState {
        let mut u = vec![0; graph.n_edges()];
        for e in graph.live_edges() {
            u[e] = rng.gen_range(0..=1);
        }
        WarningState { u }
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> u8 {
        self.u[e]
    }

    pub fn set(&mut self, e: EdgeId, value: u8) {
        assert!(value <= 1);
        self.u[e] = value;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.u
    }

    /// Number of live edges carrying a warning.
    pub fn nonzero_count(&self, graph: &FactorGraph) -> usize {
        graph.live_edges().filter(|&e| self.u[e] == 1).count()
    }
}

/// Local fields and contradiction flags at a warning fixed point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldSummary {
    #[serde(rename = "H")]
    pub h: Vec<i32>,
    pub c: Vec<u8>,
}

impl FieldSummary {
    pub fn has_contradiction(&self) -> bool {
        self.c.contains(&1)
    }
}

#[inline]
fn theta(x: i32) -> u8 {
    (x > 0) as u8
}

/// Cavity field `h(j→a)` for the edge `(a, j)`: warnings received by `j` from
/// its other un-negated occurrences minus those from its other negated ones.
pub fn cavity_field(graph: &FactorGraph, warnings: &WarningState, edge: EdgeId) -> i32 {
    let j = graph.edge_var(edge);
    let sum = |edges: &[u32]| -> i32 {
        edges
            .iter()
            .map(|&b| b as usize)
            .filter(|&b| b != edge && graph.is_edge_alive(b))
            .map(|b| warnings.u[b] as i32)
            .sum()
    };
    sum(graph.plus_edges(j)) - sum(graph.minus_edges(j))
}

/// New value of `u(a→i)` for the live edge `(a, i)`.
pub fn wp_update_edge(graph: &FactorGraph, warnings: &WarningState, edge: EdgeId) -> u8 {
    let a = graph.edge_clause(edge);
    let mut u = 1u8;
    for f in graph.clause_edges(a) {
        if f == edge {
            continue;
        }
        let h = cavity_field(graph, warnings, f);
        u &= theta(h * graph.coupling(f) as i32);
        if u == 0 {
            break;
        }
    }
    u
}

/// Runs warning propagation from a random start.
pub fn run_wp(graph: &FactorGraph, t_max: usize, seed: u64) -> (ConvergenceReport, WarningState) {
    let mut rng = seeded(seed);
    let mut state = WarningState::random(graph, &mut rng);
    let report = run_wp_from(graph, &mut state, t_max, &mut rng);
    (report, state)
}

/// Sequential sweeps over the live edges, each in a fresh random order, until
/// a sweep changes nothing or `t_max` sweeps have run.
pub fn run_wp_from(
    graph: &FactorGraph,
    state: &mut WarningState,
    t_max: usize,
    rng: &mut SeededRng,
) -> ConvergenceReport {
    assert!(t_max >= 1);
    let mut order: Vec<EdgeId> = graph.live_edges().collect();
    let mut residual = 0.0;
    for sweep in 1..=t_max {
        order.shuffle(rng);
        let mut changed = false;
        for &e in &order {
            let new = wp_update_edge(graph, state, e);
            if new != state.u[e] {
                state.u[e] = new;
                changed = true;
            }
        }
        residual = if changed { 1.0 } else { 0.0 };
        if !changed {
            return ConvergenceReport { status: ConvergenceStatus::Converged, sweeps: sweep, residual };
        }
    }
    ConvergenceReport { status: ConvergenceStatus::Unconverged, sweeps: t_max, residual }
}

/// `H_i = -Σ_b J(b,i) u(b→i)` and the contradiction flag
/// `c_i = [Σ_{V+} u · Σ_{V-} u > 0]`.
pub fn local_fields(graph: &FactorGraph, warnings: &WarningState) -> FieldSummary {
    let n = graph.n_vars();
    let mut h = vec![0i32; n];
    let mut c = vec![0u8; n];
    for v in 0..n {
        let var = Var(v as u32);
        let count = |edges: &[u32]| -> i32 {
            edges.iter().filter(|&&e| graph.is_edge_alive(e as usize)).map(|&e| warnings.u[e as usize] as i32).sum()
        };
        let plus = count(graph.plus_edges(var));
        let minus = count(graph.minus_edges(var));
        h[v] = plus - minus;
        c[v] = (plus * minus > 0) as u8;
    }
    FieldSummary { h, c }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WidStatus {
    Sat,
    /// Conflicting warnings on a tree formula.
    Unsat,
    /// Conflicting warnings (or an emptied clause) on a formula with cycles,
    /// where warnings carry no proof.
    ProbablyUnsat,
    Unconverged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WidConfig {
    pub t_max: usize,
    pub seed: u64,
    /// When every local field vanishes, fix a random unfixed variable to a
    /// random value instead of the lowest-index one to `true`.
    pub random_free_choice: bool,
}

impl Default for WidConfig {
    fn default() -> Self {
        WidConfig { t_max: 1000, seed: 0, random_free_choice: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WidResult {
    pub status: WidStatus,
    pub assignment: Option<Vec<bool>>,
    /// Warning-propagation runs performed.
    pub iterations: usize,
    pub total_sweeps: usize,
    /// Variables fixed by non-zero local fields in the first iteration.
    pub first_round_fixed: Vec<(Var, bool)>,
}

/// Warning-inspired decimation.
pub fn wid_solve(graph: &FactorGraph, config: &WidConfig) -> WidResult {
    let mut g = graph.clone();
    let mut assignment = Assignment::unfixed(g.n_vars());
    let is_tree = g.is_acyclic();
    let mut choice_rng = seeded(derive_seed(config.seed, stream::DECIMATION));
    let mut result = WidResult {
        status: WidStatus::Sat,
        assignment: None,
        iterations: 0,
        total_sweeps: 0,
        first_round_fixed: Vec::new(),
    };
    let refuted = if is_tree { WidStatus::Unsat } else { WidStatus::ProbablyUnsat };

    while assignment.n_unfixed() > 0 {
        if g.n_live_clauses() == 0 {
            // every further step would be an arbitrary choice
            let vars: Vec<Var> = assignment.unfixed_vars().collect();
            for v in vars {
                let value = if config.random_free_choice { choice_rng.gen() } else { true };
                assignment.set(v, value);
            }
            break;
        }
        let seed = derive_seed(config.seed, (result.iterations as u64) << 8 | stream::MESSAGES);
        let (report, warnings) = run_wp(&g, config.t_max, seed);
        result.iterations += 1;
        result.total_sweeps += report.sweeps;
        if !report.converged() {
            result.status = WidStatus::Unconverged;
            return result;
        }
        let fields = local_fields(&g, &warnings);
        if fields.has_contradiction() {
            result.status = refuted;
            return result;
        }
        let forced: Vec<(Var, bool)> =
            fields.h.iter().enumerate().filter(|(_, &h)| h != 0).map(|(v, &h)| (Var(v as u32), h > 0)).collect();
        let to_fix = if forced.is_empty() {
            let var = if config.random_free_choice {
                let free: Vec<Var> = assignment.unfixed_vars().collect();
                free[choice_rng.gen_range(0..free.len())]
            } else {
                assignment.unfixed_vars().next().expect("loop guard")
            };
            let value = if config.random_free_choice { choice_rng.gen() } else { true };
            vec![(var, value)]
        } else {
            if result.iterations == 1 {
                result.first_round_fixed = forced.clone();
            }
            forced
        };
        for (var, value) in to_fix {
            let outcome = g.fix_and_clean(&mut assignment, var, value).expect("only unfixed variables carry fields");
            if outcome.contradiction {
                result.status = refuted;
                return result;
            }
        }
    }
    let values = assignment.completed(true);
    result.assignment = Some(values);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::fixtures::*;
    use crate::formula::CnfFormula;

    #[test]
    fn unit_clause_always_warns() {
        let g = FactorGraph::new(&single(&[1], 1));
        assert_eq!(wp_update_edge(&g, &WarningState::zeros(&g), 0), 1);
    }

    #[test]
    fn chain_updates_by_hand() {
        let g = FactorGraph::new(&chain());
        // edges: 0 = (a,1), 1 = (b,1), 2 = (b,2)
        let mut w = WarningState::zeros(&g);
        w.set(0, 1);
        assert_eq!(cavity_field(&g, &w, 1), 1);
        assert_eq!(wp_update_edge(&g, &w, 2), 1);
        assert_eq!(cavity_field(&g, &w, 2), 0);
        assert_eq!(wp_update_edge(&g, &w, 1), 0);
    }

    #[test]
    fn chain_fixed_point_and_fields() {
        let g = FactorGraph::new(&chain());
        for seed in 0..10 {
            let (report, w) = run_wp(&g, 100, seed);
            assert!(report.converged());
            assert_eq!(w.as_slice(), &[1, 0, 1]);
            let f = local_fields(&g, &w);
            assert_eq!(f.h, vec![1, 1]);
            assert_eq!(f.c, vec![0, 0]);
        }
    }

    #[test]
    fn single_wide_clause_has_no_warnings() {
        let g = FactorGraph::new(&single(&[1, 2, 3], 3));
        let (report, w) = run_wp(&g, 10, 3);
        assert!(report.converged());
        assert_eq!(w.nonzero_count(&g), 0);
        assert_eq!(local_fields(&g, &w), FieldSummary { h: vec![0; 3], c: vec![0; 3] });
    }

    #[test]
    fn opposite_warnings_set_contradiction() {
        let f = CnfFormula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        let g = FactorGraph::new(&f);
        let (_, w) = run_wp(&g, 10, 0);
        let fields = local_fields(&g, &w);
        assert_eq!(fields.c, vec![1]);
        assert_eq!(fields.h, vec![0]);
        let res = wid_solve(&g, &WidConfig::default());
        assert_eq!(res.status, WidStatus::Unsat);
    }

    #[test]
    fn wid_solves_chain() {
        let g = FactorGraph::new(&chain());
        let res = wid_solve(&g, &WidConfig::default());
        assert_eq!(res.status, WidStatus::Sat);
        assert_eq!(res.assignment, Some(vec![true, true]));
        assert_eq!(res.first_round_fixed, vec![(Var(0), true), (Var(1), true)]);
    }

    #[test]
    fn wid_free_choice_defaults_to_true() {
        let g = FactorGraph::new(&single(&[-1, -2], 2));
        let res = wid_solve(&g, &WidConfig::default());
        // x1 := 1 forces x2 := 0 on the next round
        assert_eq!(res.assignment, Some(vec![true, false]));
        let random = wid_solve(&g, &WidConfig { random_free_choice: true, seed: 9, ..WidConfig::default() });
        assert_eq!(random.status, WidStatus::Sat);
        assert!(g.to_formula().is_satisfied_by(random.assignment.as_ref().unwrap()));
    }

    #[test]
    fn loopy_conflict_is_only_probable() {
        // (x1 ∨ x2)(x1 ∨ ¬x2)(¬x1 ∨ x3)(¬x1 ∨ ¬x3): UNSAT, with cycles
        let f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[1, -2], &[-1, 3], &[-1, -3]]).unwrap();
        let g = FactorGraph::new(&f);
        assert!(!g.is_acyclic());
        let res = wid_solve(&g, &WidConfig::default());
        assert_ne!(res.status, WidStatus::Sat);
        assert_ne!(res.status, WidStatus::Unsat);
    }
}
