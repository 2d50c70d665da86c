//! Survey-inspired decimation.
//!
//! Each round runs survey propagation on the current (decimated) graph,
//! starting from the surveys of the previous round. While the surveys are
//! non-trivial the `⌈f·N_t⌉` most polarized unfixed variables are fixed and
//! the formula is cleaned and unit-propagated. Once every survey is trivial
//! the residual formula is handed to walksat.

use serde::Serialize;

use crate::formula::{Assignment, Var};
use crate::graph::{FactorGraph, Propagation};
use crate::rng::{derive_seed, seeded, stream};
use crate::sp::{
    categorize_variables, compute_biases, compute_complexity, run_sp_from, CategoryHistogram, SurveyState,
};
use crate::walksat::{walksat, SearchStatus, WalksatParams};
use crate::ConvergenceStatus;

/// Flip budget for the residual formula. Residuals of a few 10⁴ variables
/// with many 2-clauses regularly need more than 10⁶ flips.
pub const DEFAULT_RESIDUAL_FLIPS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidConfig {
    /// Sweep budget of one survey-propagation run.
    pub t_max: usize,
    pub epsilon: f64,
    /// Fraction of the unfixed variables fixed per round.
    pub fix_fraction: f64,
    /// Random re-initializations allowed after an unconverged run.
    pub restarts: u32,
    pub walksat: WalksatParams,
    pub seed: u64,
}

impl Default for SidConfig {
    fn default() -> Self {
        SidConfig {
            t_max: 1000,
            epsilon: 1e-3,
            fix_fraction: 0.01,
            restarts: 0,
            walksat: WalksatParams { max_flips: DEFAULT_RESIDUAL_FLIPS, ..WalksatParams::default() },
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Sat,
    SpUnconverged,
    ProbablyUnsat,
    /// The surveys trivialized but walksat found no solution of the residual
    /// formula within its budget.
    WalksatFailed,
}

/// One survey-propagation run of the decimation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SidRound {
    pub round: usize,
    pub unfixed_before: usize,
    pub live_clauses_before: usize,
    pub sweeps: usize,
    pub max_eta: f64,
    /// `Σ` of the converged surveys, before fixing.
    pub sigma: Option<f64>,
    pub sigma_per_var: Option<f64>,
    /// Largest `|W+ - W-|`.
    pub max_bias: f64,
    /// Variables fixed by the decimation step.
    pub fixed: usize,
    /// Variables fixed by the following unit propagation.
    pub propagated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Vec<bool>>,
    /// Survey-propagation runs, including the final trivial one.
    pub rounds: usize,
    /// Sweeps summed over all runs.
    pub total_sp_iterations: usize,
    pub restarts_used: u32,
    pub walksat_flips: u64,
    /// Unfixed variables and live clauses handed to walksat.
    pub residual_vars: usize,
    pub residual_clauses: usize,
    /// Categories of the variables at the first non-trivial fixed point.
    pub categories: Option<CategoryHistogram>,
    pub trace: Vec<SidRound>,
}

impl SolveResult {
    pub fn sigma_trace(&self) -> Vec<Option<f64>> {
        self.trace.iter().map(|r| r.sigma).collect()
    }
}

/// Number of variables fixed when `n_unfixed` remain.
pub fn fix_count(fix_fraction: f64, n_unfixed: usize) -> usize {
    ((fix_fraction * n_unfixed as f64).ceil() as usize).max(1).min(n_unfixed)
}

pub fn sid_solve(graph: &FactorGraph, config: &SidConfig) -> SolveResult {
    assert!(config.fix_fraction > 0.0 && config.fix_fraction <= 1.0);
    assert!(config.epsilon > 0.0 && config.t_max >= 1);
    let original = graph.to_formula();
    let mut g = graph.clone();
    let mut assignment = Assignment::unfixed(g.n_vars());
    let mut rng = seeded(derive_seed(config.seed, stream::MESSAGES));
    let mut surveys = SurveyState::random(&g, &mut rng);
    let mut result = SolveResult {
        status: SolveStatus::Sat,
        assignment: None,
        rounds: 0,
        total_sp_iterations: 0,
        restarts_used: 0,
        walksat_flips: 0,
        residual_vars: 0,
        residual_clauses: 0,
        categories: None,
        trace: Vec::new(),
    };

    let mut values = (g.n_live_clauses() == 0).then(|| assignment.completed(false));

    while values.is_none() {
        let report = run_sp_from(&g, &mut surveys, config.t_max, config.epsilon, &mut rng);
        result.rounds += 1;
        result.total_sp_iterations += report.sweeps;
        let mut round = SidRound {
            round: result.rounds,
            unfixed_before: assignment.n_unfixed(),
            live_clauses_before: g.n_live_clauses(),
            sweeps: report.sweeps,
            max_eta: surveys.max_live(&g),
            sigma: None,
            sigma_per_var: None,
            max_bias: 0.0,
            fixed: 0,
            propagated: 0,
        };
        match report.status {
            ConvergenceStatus::Converged => {}
            ConvergenceStatus::Contradiction => {
                result.trace.push(round);
                return finish(result, SolveStatus::ProbablyUnsat, None);
            }
            ConvergenceStatus::Unconverged => {
                result.trace.push(round);
                if result.restarts_used >= config.restarts {
                    return finish(result, SolveStatus::SpUnconverged, None);
                }
                result.restarts_used += 1;
                rng = seeded(derive_seed(derive_seed(config.seed, stream::RESTART), result.restarts_used as u64));
                surveys = SurveyState::random(&g, &mut rng);
                continue;
            }
        }

        if round.max_eta <= config.epsilon {
            result.trace.push(round);
            let (residual, back) = g.residual_formula();
            result.residual_vars = residual.n_vars();
            result.residual_clauses = residual.n_clauses();
            let params = WalksatParams { seed: derive_seed(config.seed, stream::WALKSAT), ..config.walksat };
            let outcome = walksat(&residual, &params);
            result.walksat_flips = outcome.flips_used;
            if outcome.status != SearchStatus::Sat {
                return finish(result, SolveStatus::WalksatFailed, None);
            }
            for (compact, &var) in back.iter().enumerate() {
                assignment.set(var, outcome.assignment[compact]);
            }
            values = Some(assignment.completed(false));
            break;
        }

        let biases = match compute_biases(&g, &surveys) {
            Ok(b) => b,
            Err(_) => {
                result.trace.push(round);
                return finish(result, SolveStatus::ProbablyUnsat, None);
            }
        };
        if result.categories.is_none() {
            result.categories = Some(CategoryHistogram::of(&categorize_variables(&biases)));
        }
        if let Ok(sigma) = compute_complexity(&g, &surveys) {
            round.sigma = Some(sigma.sigma_total);
            round.sigma_per_var = Some(sigma.sigma_per_var);
        }

        let mut candidates: Vec<Var> = assignment.unfixed_vars().collect();
        let n_fix = fix_count(config.fix_fraction, candidates.len());
        // most polarized first, lowest index among equals
        let order = |a: &Var, b: &Var| {
            biases[b.index()].polarization().total_cmp(&biases[a.index()].polarization()).then(a.cmp(b))
        };
        if n_fix < candidates.len() {
            candidates.select_nth_unstable_by(n_fix, order);
            candidates.truncate(n_fix);
        }
        candidates.sort_unstable_by(order);
        round.max_bias = candidates.first().map_or(0.0, |v| biases[v.index()].polarization());

        let unfixed_before = assignment.n_unfixed();
        let mut contradiction = false;
        for var in candidates {
            if assignment.is_fixed(var) {
                continue;
            }
            let b = biases[var.index()];
            let outcome = g.fix_and_clean(&mut assignment, var, b.w_plus > b.w_minus).expect("unfixed");
            round.fixed += 1;
            if outcome.contradiction {
                contradiction = true;
                break;
            }
        }
        if contradiction {
            result.trace.push(round);
            return finish(result, SolveStatus::ProbablyUnsat, None);
        }
        let propagation = g.unit_propagate(&mut assignment);
        round.propagated = unfixed_before - round.fixed - assignment.n_unfixed();
        result.trace.push(round);
        match propagation {
            Propagation::Contradiction => return finish(result, SolveStatus::ProbablyUnsat, None),
            Propagation::Sat(v) => values = Some(v),
            Propagation::Residual => {}
        }
    }

    let values = values.expect("loop exits with an assignment");
    assert!(original.is_satisfied_by(&values), "decimation produced an assignment violating the input formula");
    finish(result, SolveStatus::Sat, Some(values))
}

fn finish(mut result: SolveResult, status: SolveStatus, assignment: Option<Vec<bool>>) -> SolveResult {
    result.status = status;
    result.assignment = assignment;
    result
}
