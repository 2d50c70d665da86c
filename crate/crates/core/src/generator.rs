//! Seeded instance generators: uniform random k-SAT and random tree formulas.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::formula::{Clause, CnfFormula, Literal, Var};
use crate::rng::seeded;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("clause width {k} exceeds the variable count {n}")]
    WidthTooLarge { k: usize, n: usize },
    #[error("clause width must be at least 1")]
    ZeroWidth,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
}

impl GeneratorParams {
    /// Parameters with `m = round(alpha * n)`.
    pub fn with_alpha(n: usize, alpha: f64, k: usize, seed: u64) -> GeneratorParams {
        GeneratorParams { n, m: (alpha * n as f64).round() as usize, k, seed }
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// Uniform random k-SAT: each clause draws `k` distinct variables uniformly
/// and negates each independently with probability 1/2. Duplicate clauses
/// are allowed.
pub fn generate_random_ksat(params: &GeneratorParams) -> Result<CnfFormula, GeneratorError> {
    let GeneratorParams { n, m, k, seed } = *params;
    if k == 0 {
        return Err(GeneratorError::ZeroWidth);
    }
    if k > n {
        return Err(GeneratorError::WidthTooLarge { k, n });
    }
    let mut rng = seeded(seed);
    let clauses = (0..m)
        .map(|_| {
            let lits = index::sample(&mut rng, n, k)
                .into_iter()
                .map(|v| Literal::new(Var(v as u32), rng.gen::<bool>()))
                .collect();
            Clause::new(lits).expect("sampled variables are distinct")
        })
        .collect();
    Ok(CnfFormula::new(n, clauses).expect("generated literals are in range"))
}

/// Random formula whose factor graph is a connected tree.
///
/// Starting from a single variable, clauses are attached one at a time to a
/// uniformly chosen existing variable; every other variable of the new clause
/// is fresh. Widths are uniform in `1..=k_max`, signs are fair coins. Stops as
/// soon as at least `n_target` variables exist. With `k_max == 1` no fresh
/// variable can ever be introduced, so `n_target` must then be 1.
pub fn generate_random_tree_formula(n_target: usize, k_max: usize, seed: u64) -> CnfFormula {
    assert!(n_target >= 1 && k_max >= 1);
    assert!(k_max >= 2 || n_target == 1, "unit-only trees cannot grow past one variable");
    let mut rng = seeded(seed);
    let mut n_vars = 1usize;
    let mut clauses = Vec::new();
    while n_vars < n_target {
        let width = rng.gen_range(1..=k_max);
        let anchor = Var(rng.gen_range(0..n_vars) as u32);
        let mut lits = Vec::with_capacity(width);
        lits.push(Literal::new(anchor, rng.gen()));
        for _ in 1..width {
            lits.push(Literal::new(Var(n_vars as u32), rng.gen()));
            n_vars += 1;
        }
        // the anchor needn't come first
        let pos = rng.gen_range(0..width);
        lits.swap(0, pos);
        clauses.push(Clause::new(lits).expect("fresh variables are distinct"));
    }
    CnfFormula::new(n_vars, clauses).expect("tree literals are in range")
}
