//! WalkSAT local search over the number of violated clauses.
//!
//! Each step picks a uniformly random violated clause. If one of its
//! variables can be flipped without breaking any satisfied clause it is
//! flipped; otherwise, with probability `noise`, a random variable of the
//! clause is flipped, and else one with the fewest breaks (ties broken
//! uniformly).

use rand::Rng;
use serde::Serialize;

use crate::formula::{Assignment, CnfFormula, FormulaError};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalksatParams {
    /// Flip budget of one try.
    pub max_flips: u64,
    /// Random-walk probability.
    pub noise: f64,
    pub seed: u64,
    /// Extra tries, each from a fresh random assignment.
    pub max_restarts: u32,
}

impl Default for WalksatParams {
    fn default() -> Self {
        WalksatParams { max_flips: 1_000_000, noise: 0.5, seed: 0, max_restarts: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchStatus {
    Sat,
    GiveUp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// The satisfying assignment, or the best one seen.
    pub assignment: Vec<bool>,
    /// Flips over all tries.
    pub flips_used: u64,
    pub best_cost_seen: usize,
    /// `(flips so far, cost)` each time the best cost improved.
    pub best_cost_trace: Vec<(u64, usize)>,
}

/// Number of violated clauses under a complete assignment.
pub fn cost(formula: &CnfFormula, assignment: &Assignment) -> Result<usize, FormulaError> {
    let values = assignment.to_values()?;
    Ok(formula.cost(&values))
}

struct Search<'f> {
    formula: &'f CnfFormula,
    /// Clause ids per literal, indexed by `2 * var + negated`.
    occurrences: Vec<Vec<u32>>,
    values: Vec<bool>,
    true_count: Vec<u32>,
    unsat: Vec<u32>,
    unsat_pos: Vec<u32>,
}

const NOT_LISTED: u32 = u32::MAX;

impl<'f> Search<'f> {
    fn new(formula: &'f CnfFormula) -> Search<'f> {
        let mut occurrences = vec![Vec::new(); 2 * formula.n_vars()];
        for (c, clause) in formula.clauses().iter().enumerate() {
            for lit in clause.literals() {
                occurrences[2 * lit.var().index() + lit.is_negated() as usize].push(c as u32);
            }
        }
        Search {
            formula,
            occurrences,
            values: vec![false; formula.n_vars()],
            true_count: vec![0; formula.n_clauses()],
            unsat: Vec::new(),
            unsat_pos: vec![NOT_LISTED; formula.n_clauses()],
        }
    }

    fn reset(&mut self, values: Vec<bool>) {
        self.values = values;
        self.unsat.clear();
        for (c, clause) in self.formula.clauses().iter().enumerate() {
            let count = clause.literals().iter().filter(|l| l.is_satisfied_by(self.values[l.var().index()])).count();
            self.true_count[c] = count as u32;
            self.unsat_pos[c] = NOT_LISTED;
            if count == 0 {
                self.push_unsat(c as u32);
            }
        }
    }

    fn push_unsat(&mut self, c: u32) {
        self.unsat_pos[c as usize] = self.unsat.len() as u32;
        self.unsat.push(c);
    }

    fn remove_unsat(&mut self, c: u32) {
        let pos = self.unsat_pos[c as usize] as usize;
        let last = self.unsat.pop().expect("clause is listed");
        if last != c {
            self.unsat[pos] = last;
            self.unsat_pos[last as usize] = pos as u32;
        }
        self.unsat_pos[c as usize] = NOT_LISTED;
    }

    /// Index into `occurrences` of the literal of `v` that is currently true.
    #[inline]
    fn true_literal(&self, v: usize) -> usize {
        2 * v + (!self.values[v]) as usize
    }

    /// Satisfied clauses that flipping `v` would violate.
    fn break_count(&self, v: usize) -> usize {
        self.occurrences[self.true_literal(v)].iter().filter(|&&c| self.true_count[c as usize] == 1).count()
    }

    fn flip(&mut self, v: usize) {
        let was_true = self.true_literal(v);
        self.values[v] = !self.values[v];
        let now_true = self.true_literal(v);
        for idx in 0..self.occurrences[was_true].len() {
            let c = self.occurrences[was_true][idx];
            self.true_count[c as usize] -= 1;
            if self.true_count[c as usize] == 0 {
                self.push_unsat(c);
            }
        }
        for idx in 0..self.occurrences[now_true].len() {
            let c = self.occurrences[now_true][idx];
            self.true_count[c as usize] += 1;
            if self.true_count[c as usize] == 1 {
                self.remove_unsat(c);
            }
        }
    }
}

pub fn walksat(formula: &CnfFormula, params: &WalksatParams) -> SearchOutcome {
    assert!((0.0..=1.0).contains(&params.noise));
    let mut rng = seeded(params.seed);
    let mut search = Search::new(formula);
    let n = formula.n_vars();
    let mut flips_used = 0u64;
    let mut best = Best { cost: usize::MAX, values: Vec::new(), trace: Vec::new() };
    let mut candidates: Vec<usize> = Vec::new();

    for _try in 0..=params.max_restarts {
        let start: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        search.reset(start);
        best.record(search.unsat.len(), flips_used, &search.values);
        let mut flips = 0u64;
        while !search.unsat.is_empty() && flips < params.max_flips {
            let c = search.unsat[rng.gen_range(0..search.unsat.len())] as usize;
            let lits = formula.clauses()[c].literals();
            candidates.clear();
            let mut min_break = usize::MAX;
            for lit in lits {
                let v = lit.var().index();
                let b = search.break_count(v);
                if b < min_break {
                    min_break = b;
                    candidates.clear();
                }
                if b == min_break {
                    candidates.push(v);
                }
            }
            let v = if min_break > 0 && rng.gen::<f64>() < params.noise {
                lits[rng.gen_range(0..lits.len())].var().index()
            } else {
                candidates[rng.gen_range(0..candidates.len())]
            };
            search.flip(v);
            flips += 1;
            flips_used += 1;
            if search.unsat.len() < best.cost {
                best.record(search.unsat.len(), flips_used, &search.values);
            }
        }
        if search.unsat.is_empty() {
            return SearchOutcome {
                status: SearchStatus::Sat,
                assignment: search.values,
                flips_used,
                best_cost_seen: 0,
                best_cost_trace: best.trace,
            };
        }
    }
    SearchOutcome {
        status: SearchStatus::GiveUp,
        assignment: best.values,
        flips_used,
        best_cost_seen: best.cost,
        best_cost_trace: best.trace,
    }
}

struct Best {
    cost: usize,
    values: Vec<bool>,
    trace: Vec<(u64, usize)>,
}

impl Best {
    fn record(&mut self, cost: usize, flips: u64, values: &[bool]) {
        if cost < self.cost {
            self.cost = cost;
            self.values = values.to_vec();
            self.trace.push((flips, cost));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::fixtures::*;
    use crate::formula::Var;

    #[test]
    fn cost_requires_full_assignment() {
        let f = single(&[1, 2], 2);
        let mut a = Assignment::unfixed(2);
        a.set(Var(0), false);
        assert_eq!(cost(&f, &a), Err(FormulaError::Unfixed(Var(1))));
        a.set(Var(1), false);
        assert_eq!(cost(&f, &a), Ok(1));
        assert_eq!(cost(&six_clause(), &Assignment::from_values(&[true; 6])), Ok(0));
    }

    #[test]
    fn solves_xor_pair() {
        let f = CnfFormula::from_dimacs_clauses(2, &[&[1, 2], &[-1, -2]]).unwrap();
        for seed in 0..20 {
            let out = walksat(&f, &WalksatParams { seed, ..WalksatParams::default() });
            assert_eq!(out.status, SearchStatus::Sat);
            assert!(out.assignment == vec![true, false] || out.assignment == vec![false, true]);
        }
    }

    #[test]
    fn gives_up_on_contradiction() {
        let f = CnfFormula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        let out = walksat(&f, &WalksatParams { max_flips: 1000, max_restarts: 2, ..WalksatParams::default() });
        assert_eq!(out.status, SearchStatus::GiveUp);
        assert_eq!(out.best_cost_seen, 1);
        assert_eq!(out.flips_used, 3000);
    }

    #[test]
    fn empty_formula_is_immediately_sat() {
        let f = CnfFormula::new(3, vec![]).unwrap();
        let out = walksat(&f, &WalksatParams::default());
        assert_eq!(out.status, SearchStatus::Sat);
        assert_eq!(out.flips_used, 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let f = six_clause();
        let p = WalksatParams { seed: 42, ..WalksatParams::default() };
        assert_eq!(walksat(&f, &p), walksat(&f, &p));
    }
}
