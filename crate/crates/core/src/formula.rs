//! CNF data model.
//!
//! Variables are stored 0-based ([`Var`]); DIMACS I/O and user-facing output
//! use the 1-based numbering. The polarity of a literal is carried as the
//! coupling `J`: `J = -1` when the variable appears un-negated, `J = +1` when
//! its negation appears.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// 0-based variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 1-based DIMACS number.
    #[inline]
    pub fn dimacs(self) -> u32 {
        self.0 + 1
    }

    pub fn from_dimacs(number: u32) -> Var {
        assert!(number >= 1, "DIMACS variables are 1-based");
        Var(number - 1)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.dimacs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    var: Var,
    negated: bool,
}

impl Literal {
    pub fn new(var: Var, negated: bool) -> Literal {
        Literal { var, negated }
    }

    pub fn positive(var: Var) -> Literal {
        Literal::new(var, false)
    }

    pub fn negative(var: Var) -> Literal {
        Literal::new(var, true)
    }

    /// Builds a literal from a signed DIMACS integer (`-3` is the negation of x3).
    pub fn from_dimacs(lit: i64) -> Literal {
        assert!(lit != 0, "0 is the DIMACS clause terminator");
        Literal::new(Var::from_dimacs(lit.unsigned_abs() as u32), lit < 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var.dimacs() as i64;
        if self.negated {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn var(self) -> Var {
        self.var
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// The coupling `J`: `-1` for an un-negated variable, `+1` for a negation.
    #[inline]
    pub fn coupling(self) -> i8 {
        if self.negated {
            1
        } else {
            -1
        }
    }

    /// The value of the variable that makes this literal true.
    #[inline]
    pub fn satisfying_value(self) -> bool {
        !self.negated
    }

    #[inline]
    pub fn is_satisfied_by(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬{}", self.var)
        } else {
            write!(f, "{}", self.var)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} mentions {var} more than once")]
    DuplicateVariable { clause: usize, var: Var },
    #[error("clause {clause} mentions {var} but the formula has {n_vars} variables")]
    VariableOutOfRange { clause: usize, var: Var, n_vars: usize },
    #[error("variable {0} is not fixed")]
    Unfixed(Var),
}

/// A disjunction of literals over distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Checks that no variable is repeated. Empty clauses are accepted here
    /// and rejected by [`CnfFormula::new`].
    pub fn new(literals: Vec<Literal>) -> Result<Clause, FormulaError> {
        for (pos, lit) in literals.iter().enumerate() {
            if literals[..pos].iter().any(|l| l.var == lit.var) {
                return Err(FormulaError::DuplicateVariable { clause: 0, var: lit.var });
            }
        }
        Ok(Clause { literals })
    }

    pub fn from_dimacs(lits: &[i64]) -> Result<Clause, FormulaError> {
        Clause::new(lits.iter().map(|&l| Literal::from_dimacs(l)).collect())
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_satisfied_by(&self, values: &[bool]) -> bool {
        self.literals.iter().any(|l| l.is_satisfied_by(values[l.var.index()]))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    n_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(n_vars: usize, clauses: Vec<Clause>) -> Result<CnfFormula, FormulaError> {
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(FormulaError::EmptyClause { clause: c });
            }
            for lit in clause.literals() {
                if lit.var.index() >= n_vars {
                    return Err(FormulaError::VariableOutOfRange { clause: c, var: lit.var, n_vars });
                }
            }
        }
        Ok(CnfFormula { n_vars, clauses })
    }

    /// Convenience constructor from signed DIMACS integers.
    pub fn from_dimacs_clauses(n_vars: usize, clauses: &[&[i64]]) -> Result<CnfFormula, FormulaError> {
        let clauses = clauses
            .iter()
            .enumerate()
            .map(|(c, lits)| {
                Clause::from_dimacs(lits).map_err(|e| match e {
                    FormulaError::DuplicateVariable { var, .. } => FormulaError::DuplicateVariable { clause: c, var },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        CnfFormula::new(n_vars, clauses)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause-to-variable ratio `M/N`.
    pub fn alpha(&self) -> f64 {
        if self.n_vars == 0 {
            0.0
        } else {
            self.clauses.len() as f64 / self.n_vars as f64
        }
    }

    pub fn n_literals(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    /// Number of clauses violated by a complete assignment.
    pub fn cost(&self, values: &[bool]) -> usize {
        assert_eq!(values.len(), self.n_vars);
        self.clauses.iter().filter(|c| !c.is_satisfied_by(values)).count()
    }

    pub fn is_satisfied_by(&self, values: &[bool]) -> bool {
        values.len() == self.n_vars && self.clauses.iter().all(|c| c.is_satisfied_by(values))
    }

    /// Returns a copy with `extra` unconstrained variables appended.
    pub fn with_extra_vars(&self, extra: usize) -> CnfFormula {
        CnfFormula { n_vars: self.n_vars + extra, clauses: self.clauses.clone() }
    }
}

/// Partial assignment: each variable is `Some(value)` once fixed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn unfixed(n_vars: usize) -> Assignment {
        Assignment { values: vec![None; n_vars] }
    }

    pub fn from_values(values: &[bool]) -> Assignment {
        Assignment { values: values.iter().map(|&v| Some(v)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, var: Var) -> Option<bool> {
        self.values[var.index()]
    }

    #[inline]
    pub fn is_fixed(&self, var: Var) -> bool {
        self.values[var.index()].is_some()
    }

    pub fn set(&mut self, var: Var, value: bool) {
        self.values[var.index()] = Some(value);
    }

    pub fn n_unfixed(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn unfixed_vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| Var(i as u32))
    }

    pub fn as_slice(&self) -> &[Option<bool>] {
        &self.values
    }

    /// Complete assignment with unfixed variables set to `default`.
    pub fn completed(&self, default: bool) -> Vec<bool> {
        self.values.iter().map(|v| v.unwrap_or(default)).collect()
    }

    /// Complete assignment, or the first unfixed variable.
    pub fn to_values(&self) -> Result<Vec<bool>, FormulaError> {
        self.values.iter().enumerate().map(|(i, v)| v.ok_or(FormulaError::Unfixed(Var(i as u32)))).collect()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::CnfFormula;

    /// (x1 ∨ ¬x3)(¬x1 ∨ x2 ∨ x4)(¬x3 ∨ x5)(¬x3 ∨ ¬x4 ∨ x5)(¬x2 ∨ x4 ∨ x6)(x5)
    pub fn six_clause() -> CnfFormula {
        CnfFormula::from_dimacs_clauses(6, &[&[1, -3], &[-1, 2, 4], &[-3, 5], &[-3, -4, 5], &[-2, 4, 6], &[5]]).unwrap()
    }

    /// (x1)(¬x1 ∨ x2)
    pub fn chain() -> CnfFormula {
        CnfFormula::from_dimacs_clauses(2, &[&[1], &[-1, 2]]).unwrap()
    }

    pub fn single(lits: &[i64], n_vars: usize) -> CnfFormula {
        CnfFormula::from_dimacs_clauses(n_vars, &[lits]).unwrap()
    }
}
