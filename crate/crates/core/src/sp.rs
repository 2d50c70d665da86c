//! Survey propagation.
//!
//! A survey `η(a→i) ∈ [0, 1]` is the probability, over clusters of
//! solutions, that clause `a` sends a warning to variable `i`. For the edge
//! `(a, j)` let `s = Π_{V^s_a(j)} (1-η)` and `o = Π_{V^u_a(j)} (1-η)`; the
//! cavity weights are
//!
//! ```text
//! Π^u = (1 - o) s    j forced to violate a
//! Π^s = (1 - s) o    j forced to satisfy a
//! Π^0 = s o          j unconstrained
//! Π^c = (1 - s)(1 - o)  contradictory, discarded
//! ```
//!
//! and `η(a→i) = Π_{j∈V(a)\i} Π^u / (Π^u + Π^s + Π^0)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::formula::Var;
use crate::graph::{ClauseId, EdgeId, FactorGraph};
use crate::product::{cavity_products, var_products};
use crate::rng::{seeded, SeededRng};
use crate::{Contradiction, ConvergenceReport, ConvergenceStatus};

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyState {
    eta: Vec<f64>,
}

impl SurveyState {
    pub fn constant(graph: &FactorGraph, value: f64) -> SurveyState {
        assert!((0.0..=1.0).contains(&value));
        SurveyState { eta: vec![value; graph.n_edges()] }
    }

    /// Live edges drawn uniformly from `[0, 1)`.
    pub fn random(graph: &FactorGraph, rng: &mut SeededRng) -> SurveyState {
        let mut eta = vec![0.0; graph.n_edges()];
        for e in graph.live_edges() {
            eta[e] = rng.gen::<f64>();
        }
        SurveyState { eta }
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> f64 {
        self.eta[e]
    }

    pub fn set(&mut self, e: EdgeId, value: f64) {
        assert!((0.0..=1.0).contains(&value));
        self.eta[e] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.eta
    }

    /// Largest survey over live edges (0 when there are none).
    pub fn max_live(&self, graph: &FactorGraph) -> f64 {
        graph.live_edges().map(|e| self.eta[e]).fold(0.0, f64::max)
    }

    /// Whether every live survey is at most `epsilon`.
    pub fn is_trivial(&self, graph: &FactorGraph, epsilon: f64) -> bool {
        self.max_live(graph) <= epsilon
    }
}

/// The four cavity weights of one edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityWeights {
    pub pi_u: f64,
    pub pi_s: f64,
    pub pi_0: f64,
    pub pi_c: f64,
}

impl CavityWeights {
    #[inline]
    fn from_products(same: f64, opposite: f64) -> CavityWeights {
        CavityWeights {
            pi_u: (1.0 - opposite) * same,
            pi_s: (1.0 - same) * opposite,
            pi_0: same * opposite,
            pi_c: (1.0 - same) * (1.0 - opposite),
        }
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.pi_u + self.pi_s + self.pi_0
    }
}

/// Cavity weights of variable `j` with respect to clause `a`, for the edge `(a, j)`.
pub fn cavity_weights(graph: &FactorGraph, surveys: &SurveyState, edge: EdgeId) -> CavityWeights {
    let (same, opposite) = cavity_products(graph, &surveys.eta, edge);
    CavityWeights::from_products(same, opposite)
}

/// `Π^u / (Π^u + Π^s + Π^0)` and the normalization for the edge `(a, j)`.
#[inline]
fn violation_ratio(graph: &FactorGraph, eta: &[f64], edge: EdgeId) -> Result<(f64, f64), Contradiction> {
    let (same, opposite) = cavity_products(graph, eta, edge);
    let w = CavityWeights::from_products(same, opposite);
    let norm = w.norm();
    if norm <= 0.0 {
        return Err(Contradiction::Variable(graph.edge_var(edge)));
    }
    Ok((w.pi_u / norm, norm))
}

/// New value of `η(a→i)` for the live edge `(a, i)`.
pub fn sp_update_edge(graph: &FactorGraph, surveys: &SurveyState, edge: EdgeId) -> Result<f64, Contradiction> {
    let a = graph.edge_clause(edge);
    let mut eta = 1.0;
    for f in graph.clause_edges(a) {
        if f != edge {
            eta *= violation_ratio(graph, &surveys.eta, f)?.0;
        }
    }
    Ok(eta)
}

/// Factors `1 - η` below this count as zero in the cached products.
const ZERO_FACTOR: f64 = 1e-16;

/// Per-variable products of `1 - η` over the live edges of each sign, kept
/// up to date while a sweep rewrites the surveys. Zero factors are counted
/// separately so that they can be divided out again.
struct SiteProducts {
    /// Indexed by `2 * var + negated`.
    product: Vec<f64>,
    zeros: Vec<u32>,
}

impl SiteProducts {
    fn new(graph: &FactorGraph) -> SiteProducts {
        SiteProducts { product: vec![1.0; 2 * graph.n_vars()], zeros: vec![0; 2 * graph.n_vars()] }
    }

    #[inline]
    fn slot(graph: &FactorGraph, e: EdgeId) -> usize {
        2 * graph.edge_var(e).index() + graph.is_negated(e) as usize
    }

    fn rebuild(&mut self, graph: &FactorGraph, eta: &[f64]) {
        self.product.fill(1.0);
        self.zeros.fill(0);
        for e in graph.live_edges() {
            self.include(Self::slot(graph, e), 1.0 - eta[e]);
        }
    }

    #[inline]
    fn include(&mut self, slot: usize, factor: f64) {
        if factor < ZERO_FACTOR {
            self.zeros[slot] += 1;
        } else {
            self.product[slot] *= factor;
        }
    }

    #[inline]
    fn exclude(&mut self, slot: usize, factor: f64) {
        if factor < ZERO_FACTOR {
            self.zeros[slot] -= 1;
        } else {
            self.product[slot] /= factor;
        }
    }

    #[inline]
    fn value(&self, slot: usize) -> f64 {
        if self.zeros[slot] > 0 {
            0.0
        } else {
            self.product[slot]
        }
    }

    /// The cavity products `(same, opposite)` of edge `e`.
    #[inline]
    fn cavity(&self, slot: usize, factor: f64) -> (f64, f64) {
        let same = if factor < ZERO_FACTOR {
            if self.zeros[slot] > 1 {
                0.0
            } else {
                self.product[slot]
            }
        } else if self.zeros[slot] > 0 {
            0.0
        } else {
            // the division may round to just above 1
            (self.product[slot] / factor).min(1.0)
        };
        (same, self.value(slot ^ 1).min(1.0))
    }
}

/// Updates every survey leaving clause `a` from the same incoming surveys and
/// returns the largest change.
fn sp_update_clause(
    graph: &FactorGraph,
    eta: &mut [f64],
    sites: &mut SiteProducts,
    a: ClauseId,
    scratch: &mut Vec<(EdgeId, usize, f64)>,
) -> Result<f64, Contradiction> {
    scratch.clear();
    for e in graph.clause_edges(a) {
        let slot = SiteProducts::slot(graph, e);
        let (same, opposite) = sites.cavity(slot, 1.0 - eta[e]);
        let w = CavityWeights::from_products(same, opposite);
        let norm = w.norm();
        if norm <= 0.0 {
            return Err(Contradiction::Variable(graph.edge_var(e)));
        }
        scratch.push((e, slot, w.pi_u / norm));
    }
    // η for each edge is the product of the other ratios; prefix and suffix
    // products avoid dividing by a zero ratio
    let k = scratch.len();
    let mut suffix = [1.0f64; 16];
    let mut suffix_vec;
    let suffix: &mut [f64] = if k < 16 {
        &mut suffix[..=k]
    } else {
        suffix_vec = vec![1.0; k + 1];
        &mut suffix_vec
    };
    for idx in (0..k).rev() {
        suffix[idx] = suffix[idx + 1] * scratch[idx].2;
    }
    let mut change = 0.0f64;
    let mut prefix = 1.0;
    for idx in 0..k {
        let (e, slot, ratio) = scratch[idx];
        let new = prefix * suffix[idx + 1];
        prefix *= ratio;
        debug_assert!((0.0..=1.0).contains(&new), "η out of range: {new}");
        let old = eta[e];
        if new != old {
            change = change.max((new - old).abs());
            sites.exclude(slot, 1.0 - old);
            sites.include(slot, 1.0 - new);
            eta[e] = new;
        }
    }
    Ok(change)
}

pub fn run_sp(graph: &FactorGraph, t_max: usize, epsilon: f64, seed: u64) -> (ConvergenceReport, SurveyState) {
    let mut rng = seeded(seed);
    let mut state = SurveyState::random(graph, &mut rng);
    let report = run_sp_from(graph, &mut state, t_max, epsilon, &mut rng);
    (report, state)
}

/// Sweeps over the live clauses, each sweep in a fresh random permutation,
/// updating all surveys of a clause together. Converged once the largest
/// change over a sweep is below `epsilon`.
pub fn run_sp_from(
    graph: &FactorGraph,
    state: &mut SurveyState,
    t_max: usize,
    epsilon: f64,
    rng: &mut SeededRng,
) -> ConvergenceReport {
    assert!(t_max >= 1 && epsilon > 0.0);
    let mut order: Vec<ClauseId> = graph.live_clauses().collect();
    let mut sites = SiteProducts::new(graph);
    let mut scratch = Vec::new();
    let mut residual = 0.0;
    for sweep in 1..=t_max {
        order.shuffle(rng);
        // rebuilt every sweep so that rounding in the divisions cannot build up
        sites.rebuild(graph, &state.eta);
        residual = 0.0f64;
        for &a in &order {
            match sp_update_clause(graph, &mut state.eta, &mut sites, a, &mut scratch) {
                Ok(change) => residual = residual.max(change),
                Err(_) => {
                    return ConvergenceReport { status: ConvergenceStatus::Contradiction, sweeps: sweep, residual };
                }
            }
        }
        if residual < epsilon {
            return ConvergenceReport { status: ConvergenceStatus::Converged, sweeps: sweep, residual };
        }
    }
    ConvergenceReport { status: ConvergenceStatus::Unconverged, sweeps: t_max, residual }
}

/// Probabilities of a variable being frozen true, frozen false, or
/// unconstrained across clusters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasTriple {
    pub w_plus: f64,
    pub w_minus: f64,
    pub w_zero: f64,
}

impl BiasTriple {
    pub const UNCONSTRAINED: BiasTriple = BiasTriple { w_plus: 0.0, w_minus: 0.0, w_zero: 1.0 };

    /// `|W+ - W-|`, the decimation priority.
    pub fn polarization(&self) -> f64 {
        (self.w_plus - self.w_minus).abs()
    }
}

/// Unnormalized site weights `(Π̂+, Π̂-, Π̂0)` of a variable.
fn site_weights(graph: &FactorGraph, eta: &[f64], v: Var) -> (f64, f64, f64) {
    let (plus, minus) = var_products(graph, eta, v);
    ((1.0 - plus) * minus, (1.0 - minus) * plus, plus * minus)
}

pub fn compute_biases(graph: &FactorGraph, surveys: &SurveyState) -> Result<Vec<BiasTriple>, Contradiction> {
    (0..graph.n_vars())
        .map(|v| {
            let var = Var(v as u32);
            if graph.degree(var) == 0 {
                return Ok(BiasTriple::UNCONSTRAINED);
            }
            let (p, m, z) = site_weights(graph, &surveys.eta, var);
            let norm = p + m + z;
            if norm <= 0.0 {
                return Err(Contradiction::Variable(var));
            }
            let w_plus = p / norm;
            let w_minus = m / norm;
            Ok(BiasTriple { w_plus, w_minus, w_zero: z / norm })
        })
        .collect()
}

/// Complexity `Σ = Σ_a Σ_a - Σ_i (n_i - 1) Σ_i` with
/// `Σ_a = ln[Π_j (Π^u+Π^s+Π^0) - Π_j Π^u]` and `Σ_i = ln[Π̂+ + Π̂- + Π̂0]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub sigma_total: f64,
    /// `Σ` divided by the number of variables not yet fixed.
    pub sigma_per_var: f64,
    pub clause_terms: Vec<f64>,
    /// `Σ_i` per variable (not yet weighted by `n_i - 1`).
    pub var_terms: Vec<f64>,
}

pub fn compute_complexity(graph: &FactorGraph, surveys: &SurveyState) -> Result<ComplexityReport, Contradiction> {
    let eta = &surveys.eta;
    let mut clause_terms = vec![0.0; graph.n_clauses()];
    let mut total = 0.0;
    for a in graph.live_clauses() {
        let mut log_norms = 0.0;
        let mut ratio_product = 1.0;
        for f in graph.clause_edges(a) {
            let (ratio, norm) = violation_ratio(graph, eta, f)?;
            log_norms += norm.ln();
            ratio_product *= ratio;
        }
        // ln[Π norm - Π Π^u] = Σ ln norm + ln(1 - Π ratio)
        if ratio_product >= 1.0 {
            return Err(Contradiction::Clause(a));
        }
        let term = log_norms + (-ratio_product).ln_1p();
        clause_terms[a] = term;
        total += term;
    }
    let mut var_terms = vec![0.0; graph.n_vars()];
    let mut unfixed = 0usize;
    for (v, term) in var_terms.iter_mut().enumerate() {
        let var = Var(v as u32);
        if !graph.is_retired(var) {
            unfixed += 1;
        }
        let degree = graph.degree(var);
        if degree == 0 {
            continue;
        }
        let (p, m, z) = site_weights(graph, eta, var);
        let norm = p + m + z;
        if norm <= 0.0 {
            return Err(Contradiction::Variable(var));
        }
        *term = norm.ln();
        total -= (degree as f64 - 1.0) * *term;
    }
    let sigma_per_var = if unfixed == 0 { 0.0 } else { total / unfixed as f64 };
    Ok(ComplexityReport { sigma_total: total, sigma_per_var, clause_terms, var_terms })
}

/// `W0` above this: under-constrained.
pub const UNDER_CONSTRAINED_W0: f64 = 0.9;
/// `max(W+, W-)` above this: biased.
pub const BIASED_W: f64 = 0.9;
/// Balanced: `|W+ - W-|` below this and `W0` below [`BALANCED_MAX_W0`].
pub const BALANCED_GAP: f64 = 0.05;
pub const BALANCED_MAX_W0: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VariableCategory {
    UnderConstrained,
    Biased,
    Balanced,
    Mixed,
}

impl VariableCategory {
    pub fn of(bias: &BiasTriple) -> VariableCategory {
        if bias.w_zero > UNDER_CONSTRAINED_W0 {
            VariableCategory::UnderConstrained
        } else if bias.w_plus.max(bias.w_minus) > BIASED_W {
            VariableCategory::Biased
        } else if bias.polarization() < BALANCED_GAP && bias.w_zero < BALANCED_MAX_W0 {
            VariableCategory::Balanced
        } else {
            VariableCategory::Mixed
        }
    }
}

pub fn categorize_variables(biases: &[BiasTriple]) -> Vec<VariableCategory> {
    biases.iter().map(VariableCategory::of).collect()
}

/// Counts per category, in the order under-constrained, biased, balanced, mixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CategoryHistogram {
    pub under_constrained: usize,
    pub biased: usize,
    pub balanced: usize,
    pub mixed: usize,
}

impl CategoryHistogram {
    pub fn of(categories: &[VariableCategory]) -> CategoryHistogram {
        let mut h = CategoryHistogram::default();
        for c in categories {
            match c {
                VariableCategory::UnderConstrained => h.under_constrained += 1,
                VariableCategory::Biased => h.biased += 1,
                VariableCategory::Balanced => h.balanced += 1,
                VariableCategory::Mixed => h.mixed += 1,
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::fixtures::*;
    use crate::formula::CnfFormula;

    const TOL: f64 = 1e-12;

    #[test]
    fn zero_surveys_stay_zero() {
        let g = FactorGraph::new(&single(&[1, -2, 3], 3));
        let s = SurveyState::constant(&g, 0.0);
        for e in 0..3 {
            assert_eq!(sp_update_edge(&g, &s, e).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_clause_survey_is_one() {
        let g = FactorGraph::new(&single(&[-1], 1));
        assert_eq!(sp_update_edge(&g, &SurveyState::constant(&g, 0.0), 0).unwrap(), 1.0);
    }

    #[test]
    fn chain_updates_by_hand() {
        let g = FactorGraph::new(&chain());
        let mut s = SurveyState::constant(&g, 0.0);
        s.set(0, 1.0);
        let w = cavity_weights(&g, &s, 1);
        assert_eq!((w.pi_u, w.pi_s, w.pi_0), (1.0, 0.0, 0.0));
        assert_eq!(sp_update_edge(&g, &s, 2).unwrap(), 1.0);
        let w = cavity_weights(&g, &s, 2);
        assert_eq!((w.pi_u, w.pi_s, w.pi_0), (0.0, 0.0, 1.0));
        assert_eq!(sp_update_edge(&g, &s, 1).unwrap(), 0.0);
    }

    #[test]
    fn chain_fixed_point_biases_complexity() {
        let g = FactorGraph::new(&chain());
        for seed in 0..5 {
            let (report, s) = run_sp(&g, 100, 1e-12, seed);
            assert!(report.converged());
            assert_eq!(s.as_slice(), &[1.0, 0.0, 1.0]);
            let b = compute_biases(&g, &s).unwrap();
            assert_eq!(b[0], BiasTriple { w_plus: 1.0, w_minus: 0.0, w_zero: 0.0 });
            let sigma = compute_complexity(&g, &s).unwrap();
            assert!(sigma.sigma_total.abs() < TOL);
        }
    }

    #[test]
    fn wide_single_clause_converges_to_zero() {
        let g = FactorGraph::new(&single(&[1, 2, 3], 3));
        let (report, s) = run_sp(&g, 100, 1e-9, 0);
        assert!(report.converged());
        assert!(s.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(compute_complexity(&g, &s).unwrap().sigma_total, 0.0);
    }

    #[test]
    fn trivial_surveys_give_unconstrained_biases() {
        let f = CnfFormula::from_dimacs_clauses(4, &[&[1, 2, 3], &[-1, -2, 4], &[2, -3, -4]]).unwrap();
        let g = FactorGraph::new(&f);
        let s = SurveyState::constant(&g, 0.0);
        let b = compute_biases(&g, &s).unwrap();
        assert!(b.iter().all(|t| *t == BiasTriple::UNCONSTRAINED));
        assert_eq!(compute_complexity(&g, &s).unwrap().sigma_total, 0.0);
    }

    #[test]
    fn symmetric_neighborhood_gives_equal_biases() {
        // x1 appears once positively and once negatively, with equal surveys
        let f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2], &[-1, 3]]).unwrap();
        let g = FactorGraph::new(&f);
        let mut s = SurveyState::constant(&g, 0.0);
        s.set(0, 0.37);
        s.set(2, 0.37);
        let b = compute_biases(&g, &s).unwrap();
        assert_eq!(b[0].w_plus, b[0].w_minus);
        assert!((b[0].w_plus + b[0].w_minus + b[0].w_zero - 1.0).abs() < TOL);
    }

    #[test]
    fn category_thresholds() {
        let cat = |p, m, z| VariableCategory::of(&BiasTriple { w_plus: p, w_minus: m, w_zero: z });
        assert_eq!(cat(0.0, 0.0, 1.0), VariableCategory::UnderConstrained);
        assert_eq!(cat(1.0, 0.0, 0.0), VariableCategory::Biased);
        assert_eq!(cat(0.48, 0.47, 0.05), VariableCategory::Balanced);
        assert_eq!(cat(0.6, 0.2, 0.2), VariableCategory::Mixed);
    }
}
