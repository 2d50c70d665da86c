//! Exhaustive ground truth for small formulas.
//!
//! Assignments are enumerated in lexicographic order of `(x1, ..., xN)` and
//! packed into a `u32` with `x1` as the most significant of the `N` low bits.
//! Clusters are connected components of the solution set under Hamming
//! distance `≤ q`; with the default `q = 1` two solutions are adjacent when
//! they differ by a single flip.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bp::MarginalVector;
use crate::formula::CnfFormula;
use crate::graph::UnionFind;

pub const MAX_ORACLE_VARS: usize = 30;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} variables is beyond exhaustive enumeration (at most {MAX_ORACLE_VARS})")]
    TooManyVariables(usize),
    #[error("the formula has no satisfying assignment")]
    Unsat,
    #[error("the solution list was not materialized ({count} solutions exceed the cap)")]
    NotMaterialized { count: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    pub n_vars: usize,
    pub count: u64,
    /// Packed solutions in enumeration order, present when `count <= cap`.
    pub solutions: Option<Vec<u32>>,
}

impl SolutionSet {
    pub fn unpack(&self, packed: u32) -> Vec<bool> {
        unpack(packed, self.n_vars)
    }

    pub fn assignments(&self) -> Option<Vec<Vec<bool>>> {
        self.solutions.as_ref().map(|s| s.iter().map(|&p| self.unpack(p)).collect())
    }
}

#[inline]
fn bit(var: usize, n_vars: usize) -> u32 {
    1u32 << (n_vars - 1 - var)
}

pub fn pack(values: &[bool]) -> u32 {
    let n = values.len();
    values.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| bit(i, n)).fold(0, |a, b| a | b)
}

pub fn unpack(packed: u32, n_vars: usize) -> Vec<bool> {
    (0..n_vars).map(|i| packed & bit(i, n_vars) != 0).collect()
}

/// Calls `visit` on every satisfying packed assignment, in order.
fn for_each_solution(formula: &CnfFormula, mut visit: impl FnMut(u32)) -> Result<(), OracleError> {
    let n = formula.n_vars();
    if n > MAX_ORACLE_VARS {
        return Err(OracleError::TooManyVariables(n));
    }
    let masks: Vec<(u32, u32)> = formula
        .clauses()
        .iter()
        .map(|c| {
            c.literals().iter().fold((0, 0), |(pos, neg), l| {
                let b = bit(l.var().index(), n);
                if l.is_negated() {
                    (pos, neg | b)
                } else {
                    (pos | b, neg)
                }
            })
        })
        .collect();
    let all = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    for x in 0..=(all as u64) {
        let x = x as u32;
        let nx = !x & all;
        if masks.iter().all(|&(pos, neg)| (x & pos) | (nx & neg) != 0) {
            visit(x);
        }
    }
    Ok(())
}

pub fn enumerate_solutions(formula: &CnfFormula, cap: usize) -> Result<SolutionSet, OracleError> {
    let mut count = 0u64;
    let mut list = Vec::new();
    let mut overflow = false;
    for_each_solution(formula, |x| {
        count += 1;
        if !overflow {
            if list.len() < cap {
                list.push(x);
            } else {
                overflow = true;
                list = Vec::new();
            }
        }
    })?;
    Ok(SolutionSet { n_vars: formula.n_vars(), count, solutions: (!overflow).then_some(list) })
}

pub fn count_solutions(formula: &CnfFormula) -> Result<u64, OracleError> {
    Ok(enumerate_solutions(formula, 0)?.count)
}

/// Fraction of solutions with each variable true.
pub fn exact_marginals(formula: &CnfFormula) -> Result<MarginalVector, OracleError> {
    let n = formula.n_vars();
    let mut ones = vec![0u64; n];
    let mut count = 0u64;
    for_each_solution(formula, |x| {
        count += 1;
        for (i, o) in ones.iter_mut().enumerate() {
            *o += (x & bit(i, n) != 0) as u64;
        }
    })?;
    if count == 0 {
        return Err(OracleError::Unsat);
    }
    Ok(MarginalVector { mu: ones.iter().map(|&o| o as f64 / count as f64).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BackboneValue {
    Forced0,
    Forced1,
    Free,
}

pub fn backbone(formula: &CnfFormula) -> Result<Vec<BackboneValue>, OracleError> {
    let n = formula.n_vars();
    let mut and = u32::MAX;
    let mut or = 0u32;
    let mut any = false;
    for_each_solution(formula, |x| {
        any = true;
        and &= x;
        or |= x;
    })?;
    if !any {
        return Err(OracleError::Unsat);
    }
    Ok((0..n)
        .map(|i| {
            let b = bit(i, n);
            if and & b != 0 {
                BackboneValue::Forced1
            } else if or & b == 0 {
                BackboneValue::Forced0
            } else {
                BackboneValue::Free
            }
        })
        .collect())
}

/// A coordinate of a cluster: the shared value, or `*` when the cluster
/// contains both values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generalized {
    Zero,
    One,
    Star,
}

impl fmt::Display for Generalized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generalized::Zero => "0",
            Generalized::One => "1",
            Generalized::Star => "*",
        })
    }
}

impl Serialize for Generalized {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub size: usize,
    pub coordinates: Vec<Generalized>,
    /// Packed members in enumeration order.
    #[serde(skip)]
    pub members: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterReport {
    pub q: u32,
    pub clusters: Vec<Cluster>,
}

impl ClusterReport {
    pub fn count(&self) -> usize {
        self.clusters.len()
    }
}

/// Connected components of the solutions under Hamming distance `≤ q`,
/// ordered by their first member.
pub fn cluster_solutions(set: &SolutionSet, q: u32) -> Result<ClusterReport, OracleError> {
    let solutions = set.solutions.as_ref().ok_or(OracleError::NotMaterialized { count: set.count })?;
    let n = set.n_vars;
    let mut uf = UnionFind::new(solutions.len());
    if q == 1 {
        // solutions are sorted, so neighbors can be found by binary search
        for (idx, &x) in solutions.iter().enumerate() {
            for i in 0..n {
                let y = x ^ bit(i, n);
                if y > x {
                    if let Ok(jdx) = solutions.binary_search(&y) {
                        uf.union(idx, jdx);
                    }
                }
            }
        }
    } else if q > 1 {
        for i in 0..solutions.len() {
            for j in i + 1..solutions.len() {
                if (solutions[i] ^ solutions[j]).count_ones() <= q {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut root_to_cluster = std::collections::HashMap::new();
    let mut groups: Vec<Vec<u32>> = Vec::new();
    for (idx, &x) in solutions.iter().enumerate() {
        let root = uf.find(idx);
        let slot = *root_to_cluster.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(x);
    }
    let clusters = groups
        .into_iter()
        .map(|members| {
            let and = members.iter().fold(u32::MAX, |a, &x| a & x);
            let or = members.iter().fold(0, |a, &x| a | x);
            let coordinates = (0..n)
                .map(|i| {
                    let b = bit(i, n);
                    if and & b != 0 {
                        Generalized::One
                    } else if or & b == 0 {
                        Generalized::Zero
                    } else {
                        Generalized::Star
                    }
                })
                .collect();
            Cluster { size: members.len(), coordinates, members }
        })
        .collect();
    Ok(ClusterReport { q, clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::fixtures::*;
    use crate::formula::CnfFormula;
    use Generalized::*;

    #[test]
    fn six_clause_counts() {
        let f = six_clause();
        assert_eq!(count_solutions(&f).unwrap(), 17);
        let mu = exact_marginals(&f).unwrap().mu;
        assert_eq!(mu[4], 1.0);
        assert!((mu[2] - 5.0 / 17.0).abs() < 1e-15);
        assert_eq!(backbone(&f).unwrap()[4], BackboneValue::Forced1);
    }

    #[test]
    fn degenerate_counts() {
        let unsat = CnfFormula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap();
        assert_eq!(count_solutions(&unsat).unwrap(), 0);
        assert_eq!(exact_marginals(&unsat), Err(OracleError::Unsat));
        assert_eq!(backbone(&unsat), Err(OracleError::Unsat));
        assert_eq!(count_solutions(&CnfFormula::new(3, vec![]).unwrap()).unwrap(), 8);
        assert_eq!(count_solutions(&CnfFormula::new(0, vec![]).unwrap()).unwrap(), 1);
    }

    #[test]
    fn too_many_variables() {
        let f = CnfFormula::new(31, vec![]).unwrap();
        assert_eq!(count_solutions(&f), Err(OracleError::TooManyVariables(31)));
    }

    #[test]
    fn single_clause_marginal_and_backbone() {
        let f = single(&[1, 2], 2);
        let set = enumerate_solutions(&f, 10).unwrap();
        assert_eq!(set.assignments().unwrap(), vec![vec![false, true], vec![true, false], vec![true, true]]);
        assert!((exact_marginals(&f).unwrap().mu[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(backbone(&f).unwrap(), vec![BackboneValue::Free, BackboneValue::Free]);
        assert_eq!(backbone(&single(&[1], 1)).unwrap(), vec![BackboneValue::Forced1]);
    }

    #[test]
    fn two_isolated_clusters() {
        let f = CnfFormula::from_dimacs_clauses(2, &[&[1, 2], &[-1, -2]]).unwrap();
        let report = cluster_solutions(&enumerate_solutions(&f, 100).unwrap(), 1).unwrap();
        assert_eq!(report.count(), 2);
        assert_eq!(report.clusters[0].coordinates, vec![Zero, One]);
        assert_eq!(report.clusters[1].coordinates, vec![One, Zero]);
        // at q = 2 they merge
        let merged = cluster_solutions(&enumerate_solutions(&f, 100).unwrap(), 2).unwrap();
        assert_eq!(merged.count(), 1);
        assert_eq!(merged.clusters[0].coordinates, vec![Star, Star]);
    }

    #[test]
    fn connected_solutions_form_one_cluster() {
        let report = cluster_solutions(&enumerate_solutions(&single(&[1, 2], 2), 100).unwrap(), 1).unwrap();
        assert_eq!(report.count(), 1);
        assert_eq!(report.clusters[0].size, 3);
        assert_eq!(report.clusters[0].coordinates, vec![Star, Star]);
    }

    #[test]
    fn single_solution_cluster_has_no_star() {
        let report = cluster_solutions(&enumerate_solutions(&chain(), 100).unwrap(), 1).unwrap();
        assert_eq!(report.count(), 1);
        assert_eq!(report.clusters[0].coordinates, vec![One, One]);
    }

    #[test]
    fn capped_list_is_not_clusterable() {
        let set = enumerate_solutions(&CnfFormula::new(4, vec![]).unwrap(), 5).unwrap();
        assert_eq!(set.count, 16);
        assert_eq!(set.solutions, None);
        assert_eq!(cluster_solutions(&set, 1), Err(OracleError::NotMaterialized { count: 16 }));
    }

    #[test]
    fn pack_round_trip() {
        let v = vec![true, false, false, true, true];
        assert_eq!(unpack(pack(&v), 5), v);
        assert_eq!(pack(&[true, false]), 0b10);
    }
}
