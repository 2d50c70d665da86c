//! Independent checks shared by the integration tests.

#![allow(dead_code)]

use spsat_core::{generate_random_tree_formula, CnfFormula};

/// Clauses as signed 1-based integers.
pub fn signed_clauses(formula: &CnfFormula) -> Vec<Vec<i64>> {
    formula.clauses().iter().map(|c| c.literals().iter().map(|l| l.to_dimacs()).collect()).collect()
}

/// Evaluates every clause directly on the signed literals.
pub fn satisfies(formula: &CnfFormula, values: &[bool]) -> bool {
    values.len() == formula.n_vars()
        && signed_clauses(formula)
            .iter()
            .all(|c| c.iter().any(|&lit| values[lit.unsigned_abs() as usize - 1] == (lit > 0)))
}

/// Plain DPLL with unit propagation; returns a model when one exists.
pub fn dpll(formula: &CnfFormula) -> Option<Vec<bool>> {
    fn solve(clauses: &[Vec<i64>], values: &mut Vec<Option<bool>>) -> bool {
        loop {
            let mut unit = None;
            for c in clauses {
                let mut open = None;
                let mut n_open = 0;
                let mut sat = false;
                for &lit in c {
                    match values[lit.unsigned_abs() as usize - 1] {
                        Some(v) if v == (lit > 0) => {
                            sat = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            n_open += 1;
                            open = Some(lit);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match n_open {
                    0 => return false,
                    1 => {
                        unit = open;
                        break;
                    }
                    _ => {}
                }
            }
            match unit {
                Some(lit) => values[lit.unsigned_abs() as usize - 1] = Some(lit > 0),
                None => break,
            }
        }
        let Some(free) = values.iter().position(|v| v.is_none()) else {
            return true;
        };
        for choice in [false, true] {
            let mut trial = values.clone();
            trial[free] = Some(choice);
            if solve(clauses, &mut trial) {
                *values = trial;
                return true;
            }
        }
        false
    }
    let clauses = signed_clauses(formula);
    let mut values = vec![None; formula.n_vars()];
    solve(&clauses, &mut values).then(|| values.into_iter().map(|v| v.unwrap_or(false)).collect())
}

/// Seeded tree formulas with at most `max_vars` variables (widths up to 3).
pub fn tree_corpus(count: usize, min_target: usize, max_vars: usize, first_seed: u64) -> Vec<(u64, CnfFormula)> {
    let span = (max_vars - 2 - min_target + 1) as u64;
    (first_seed..first_seed + count as u64)
        .map(|seed| {
            let n_target = min_target + (seed % span) as usize;
            (seed, generate_random_tree_formula(n_target, 3, seed))
        })
        .collect()
}

/// Satisfiable tree formulas with at most `max_vars` variables.
pub fn sat_tree_corpus(count: usize, max_vars: usize, first_seed: u64) -> Vec<(u64, CnfFormula)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = first_seed;
    while out.len() < count {
        let n_target = 3 + (seed % (max_vars as u64 - 4)) as usize;
        let f = generate_random_tree_formula(n_target, 3, seed);
        if dpll(&f).is_some() {
            out.push((seed, f));
        }
        seed += 1;
    }
    out
}
