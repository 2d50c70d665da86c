//! Clause/variable factor graph with in-place simplification.
//!
//! Edges get dense ids in clause-major order, so every message family is a
//! flat `Vec` indexed by [`EdgeId`]. Simplification never re-indexes: removed
//! clauses and edges are tombstoned, and a fixed variable stays in the graph
//! as a degree-0 node. Each variable's adjacency is stored with its
//! un-negated occurrences (`V+`) first and its negated occurrences (`V-`)
//! after, so the cavity sets of an edge are two contiguous slices.

use rand::Rng;
use thiserror::Error;

use crate::formula::{Assignment, Clause, CnfFormula, Literal, Var};
use crate::rng::seeded;

pub type EdgeId = usize;
pub type ClauseId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplifyError {
    #[error("variable {0} is already fixed")]
    AlreadyFixed(Var),
}

/// What a single fixing did to the clause set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CleanOutcome {
    pub removed_clauses: usize,
    pub reduced_clauses: usize,
    /// A clause lost its last literal.
    pub contradiction: bool,
}

/// Result of unit propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Propagation {
    /// Every clause is gone; variables left unfixed are set to `false`.
    Sat(Vec<bool>),
    Contradiction,
    /// Clauses remain and none of them is a unit clause.
    Residual,
}

#[derive(Clone, Debug)]
pub struct FactorGraph {
    n_vars: usize,
    clause_start: Vec<u32>,
    edge_var: Vec<u32>,
    edge_clause: Vec<u32>,
    edge_negated: Vec<bool>,
    var_start: Vec<u32>,
    var_split: Vec<u32>,
    var_adj: Vec<u32>,

    edge_alive: Vec<bool>,
    clause_alive: Vec<bool>,
    clause_width: Vec<u32>,
    var_degree: Vec<u32>,
    retired: Vec<bool>,
    live_clauses: usize,
    live_edges: usize,
    contradiction: bool,
}

impl FactorGraph {
    pub fn new(formula: &CnfFormula) -> FactorGraph {
        let n_vars = formula.n_vars();
        let n_edges = formula.n_literals();
        let mut clause_start = Vec::with_capacity(formula.n_clauses() + 1);
        let mut edge_var = Vec::with_capacity(n_edges);
        let mut edge_clause = Vec::with_capacity(n_edges);
        let mut edge_negated = Vec::with_capacity(n_edges);
        let mut n_plus = vec![0u32; n_vars];
        let mut n_minus = vec![0u32; n_vars];
        clause_start.push(0);
        for (c, clause) in formula.clauses().iter().enumerate() {
            for lit in clause.literals() {
                edge_var.push(lit.var().0);
                edge_clause.push(c as u32);
                edge_negated.push(lit.is_negated());
                if lit.is_negated() {
                    n_minus[lit.var().index()] += 1;
                } else {
                    n_plus[lit.var().index()] += 1;
                }
            }
            clause_start.push(edge_var.len() as u32);
        }

        let mut var_start = Vec::with_capacity(n_vars + 1);
        let mut var_split = Vec::with_capacity(n_vars);
        let mut offset = 0u32;
        for v in 0..n_vars {
            var_start.push(offset);
            var_split.push(offset + n_plus[v]);
            offset += n_plus[v] + n_minus[v];
        }
        var_start.push(offset);

        let mut fill_plus: Vec<u32> = var_start[..n_vars].to_vec();
        let mut fill_minus: Vec<u32> = var_split.clone();
        let mut var_adj = vec![0u32; n_edges];
        for e in 0..n_edges {
            let v = edge_var[e] as usize;
            let slot = if edge_negated[e] { &mut fill_minus[v] } else { &mut fill_plus[v] };
            var_adj[*slot as usize] = e as u32;
            *slot += 1;
        }

        let clause_width = clause_start.windows(2).map(|w| w[1] - w[0]).collect();
        let var_degree = (0..n_vars).map(|v| n_plus[v] + n_minus[v]).collect();
        FactorGraph {
            n_vars,
            clause_start,
            edge_var,
            edge_clause,
            edge_negated,
            var_start,
            var_split,
            var_adj,
            edge_alive: vec![true; n_edges],
            clause_alive: vec![true; formula.n_clauses()],
            clause_width,
            var_degree,
            retired: vec![false; n_vars],
            live_clauses: formula.n_clauses(),
            live_edges: n_edges,
            contradiction: false,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Clause count at construction, including removed clauses.
    pub fn n_clauses(&self) -> usize {
        self.clause_alive.len()
    }

    /// Edge count at construction; message arrays have this length.
    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn n_live_clauses(&self) -> usize {
        self.live_clauses
    }

    pub fn n_live_edges(&self) -> usize {
        self.live_edges
    }

    /// Variables that still have at least one live edge.
    pub fn n_connected_vars(&self) -> usize {
        self.var_degree.iter().filter(|&&d| d > 0).count()
    }

    pub fn has_contradiction(&self) -> bool {
        self.contradiction
    }

    #[inline]
    pub fn edge_var(&self, e: EdgeId) -> Var {
        Var(self.edge_var[e])
    }

    #[inline]
    pub fn edge_clause(&self, e: EdgeId) -> ClauseId {
        self.edge_clause[e] as usize
    }

    /// Coupling `J` of the edge.
    #[inline]
    pub fn coupling(&self, e: EdgeId) -> i8 {
        if self.edge_negated[e] {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn is_negated(&self, e: EdgeId) -> bool {
        self.edge_negated[e]
    }

    #[inline]
    pub fn literal(&self, e: EdgeId) -> Literal {
        Literal::new(self.edge_var(e), self.edge_negated[e])
    }

    #[inline]
    pub fn is_edge_alive(&self, e: EdgeId) -> bool {
        self.edge_alive[e]
    }

    #[inline]
    pub fn is_clause_alive(&self, c: ClauseId) -> bool {
        self.clause_alive[c]
    }

    /// Number of live literals of a clause.
    #[inline]
    pub fn clause_width(&self, c: ClauseId) -> usize {
        self.clause_width[c] as usize
    }

    /// Live degree `n_i`.
    #[inline]
    pub fn degree(&self, v: Var) -> usize {
        self.var_degree[v.index()] as usize
    }

    /// Whether the variable has been fixed by [`FactorGraph::fix_and_clean`].
    /// Retired variables are degree-0 tombstones and are excluded from
    /// entropy and complexity sums.
    #[inline]
    pub fn is_retired(&self, v: Var) -> bool {
        self.retired[v.index()]
    }

    /// All edge ids of a clause, dead ones included.
    #[inline]
    pub fn clause_edge_range(&self, c: ClauseId) -> std::ops::Range<EdgeId> {
        self.clause_start[c] as usize..self.clause_start[c + 1] as usize
    }

    pub fn clause_edges(&self, c: ClauseId) -> impl Iterator<Item = EdgeId> + '_ {
        self.clause_edge_range(c).filter(move |&e| self.edge_alive[e])
    }

    pub fn live_clauses(&self) -> impl Iterator<Item = ClauseId> + '_ {
        (0..self.n_clauses()).filter(move |&c| self.clause_alive[c])
    }

    pub fn live_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.n_edges()).filter(move |&e| self.edge_alive[e])
    }

    /// Edges of the clauses where `v` appears un-negated (`V+`), dead ones included.
    #[inline]
    pub fn plus_edges(&self, v: Var) -> &[u32] {
        &self.var_adj[self.var_start[v.index()] as usize..self.var_split[v.index()] as usize]
    }

    /// Edges of the clauses where `v` appears negated (`V-`), dead ones included.
    #[inline]
    pub fn minus_edges(&self, v: Var) -> &[u32] {
        &self.var_adj[self.var_split[v.index()] as usize..self.var_start[v.index() + 1] as usize]
    }

    pub fn var_edges(&self, v: Var) -> impl Iterator<Item = EdgeId> + '_ {
        self.var_adj[self.var_start[v.index()] as usize..self.var_start[v.index() + 1] as usize]
            .iter()
            .map(|&e| e as usize)
            .filter(move |&e| self.edge_alive[e])
    }

    /// Live clauses in `V+(v)`.
    pub fn plus_clauses(&self, v: Var) -> Vec<ClauseId> {
        self.live_of(self.plus_edges(v))
    }

    /// Live clauses in `V-(v)`.
    pub fn minus_clauses(&self, v: Var) -> Vec<ClauseId> {
        self.live_of(self.minus_edges(v))
    }

    fn live_of(&self, edges: &[u32]) -> Vec<ClauseId> {
        edges.iter().filter(|&&e| self.edge_alive[e as usize]).map(|&e| self.edge_clause(e as usize)).collect()
    }

    /// Occurrences of the edge's variable with the same sign as the edge,
    /// the edge itself included. Minus the edge, this is `V^s_a(j)`.
    #[inline]
    pub fn same_sign_edges(&self, e: EdgeId) -> &[u32] {
        let v = self.edge_var(e);
        if self.edge_negated[e] {
            self.minus_edges(v)
        } else {
            self.plus_edges(v)
        }
    }

    /// Occurrences of the edge's variable with the opposite sign: `V^u_a(j)`,
    /// the clauses pushing `j` towards violating the edge's clause.
    #[inline]
    pub fn opposite_sign_edges(&self, e: EdgeId) -> &[u32] {
        let v = self.edge_var(e);
        if self.edge_negated[e] {
            self.plus_edges(v)
        } else {
            self.minus_edges(v)
        }
    }

    /// `V^u_a(j)` for edge `(a, j)` as live clause ids.
    pub fn unsatisfying_clauses(&self, e: EdgeId) -> Vec<ClauseId> {
        self.live_of(self.opposite_sign_edges(e))
    }

    /// `V^s_a(j)` for edge `(a, j)` as live clause ids.
    pub fn satisfying_clauses(&self, e: EdgeId) -> Vec<ClauseId> {
        let a = self.edge_clause(e);
        self.live_of(self.same_sign_edges(e)).into_iter().filter(|&b| b != a).collect()
    }

    fn kill_edge(&mut self, e: EdgeId) {
        debug_assert!(self.edge_alive[e]);
        self.edge_alive[e] = false;
        self.live_edges -= 1;
        self.var_degree[self.edge_var[e] as usize] -= 1;
        self.clause_width[self.edge_clause[e] as usize] -= 1;
    }

    /// Removes a clause and all its live edges.
    pub fn remove_clause(&mut self, c: ClauseId) {
        if !self.clause_alive[c] {
            return;
        }
        for e in self.clause_edge_range(c) {
            if self.edge_alive[e] {
                self.kill_edge(e);
            }
        }
        self.clause_alive[c] = false;
        self.live_clauses -= 1;
    }

    /// Fixes `var := value`, removes the clauses it satisfies and deletes its
    /// literal from the others.
    pub fn fix_and_clean(
        &mut self,
        assignment: &mut Assignment,
        var: Var,
        value: bool,
    ) -> Result<CleanOutcome, SimplifyError> {
        self.fix_and_clean_with(assignment, var, value, |_| {})
    }

    fn fix_and_clean_with(
        &mut self,
        assignment: &mut Assignment,
        var: Var,
        value: bool,
        mut on_reduced: impl FnMut(ClauseId),
    ) -> Result<CleanOutcome, SimplifyError> {
        if assignment.is_fixed(var) {
            return Err(SimplifyError::AlreadyFixed(var));
        }
        assignment.set(var, value);
        self.retired[var.index()] = true;
        let mut outcome = CleanOutcome::default();
        let start = self.var_start[var.index()] as usize;
        let end = self.var_start[var.index() + 1] as usize;
        for idx in start..end {
            let e = self.var_adj[idx] as usize;
            if !self.edge_alive[e] {
                continue;
            }
            let c = self.edge_clause[e] as usize;
            if self.edge_negated[e] != value {
                self.remove_clause(c);
                outcome.removed_clauses += 1;
            } else {
                self.kill_edge(e);
                outcome.reduced_clauses += 1;
                if self.clause_width[c] == 0 {
                    outcome.contradiction = true;
                    self.contradiction = true;
                }
                on_reduced(c);
            }
        }
        Ok(outcome)
    }

    fn unit_literal(&self, c: ClauseId) -> Literal {
        let e = self.clause_edges(c).next().expect("unit clause has a live edge");
        self.literal(e)
    }

    /// Fixes unit clauses until none is left, a clause empties, or every
    /// clause is satisfied.
    pub fn unit_propagate(&mut self, assignment: &mut Assignment) -> Propagation {
        self.propagate(assignment, None)
    }

    /// Unit propagation processing pending unit clauses in a seeded random
    /// order. The final status does not depend on the order.
    pub fn unit_propagate_shuffled(&mut self, assignment: &mut Assignment, seed: u64) -> Propagation {
        let mut rng = seeded(seed);
        self.propagate(assignment, Some(&mut rng))
    }

    fn propagate(&mut self, assignment: &mut Assignment, mut rng: Option<&mut crate::rng::SeededRng>) -> Propagation {
        let mut pending: Vec<ClauseId> = self.live_clauses().filter(|&c| self.clause_width[c] <= 1).collect();
        while !self.contradiction && !pending.is_empty() {
            let pick = match rng.as_deref_mut() {
                Some(r) => r.gen_range(0..pending.len()),
                None => pending.len() - 1,
            };
            let c = pending.swap_remove(pick);
            if !self.clause_alive[c] {
                continue;
            }
            if self.clause_width[c] == 0 {
                self.contradiction = true;
                break;
            }
            if self.clause_width[c] != 1 {
                continue;
            }
            let lit = self.unit_literal(c);
            let mut newly_unit = Vec::new();
            self.fix_and_clean_with(assignment, lit.var(), lit.satisfying_value(), |r| newly_unit.push(r))
                .expect("live edges only touch unfixed variables");
            pending.extend(newly_unit.into_iter().filter(|&r| self.clause_width[r] <= 1));
        }
        if self.contradiction {
            Propagation::Contradiction
        } else if self.live_clauses == 0 {
            Propagation::Sat(assignment.completed(false))
        } else {
            Propagation::Residual
        }
    }

    /// The live clauses as a formula over the original variable numbering.
    pub fn to_formula(&self) -> CnfFormula {
        let clauses = self
            .live_clauses()
            .map(|c| Clause::new(self.clause_edges(c).map(|e| self.literal(e)).collect()).expect("distinct"))
            .collect();
        CnfFormula::new(self.n_vars, clauses).unwrap_or_else(|_| {
            // only reachable with an empty clause present
            CnfFormula::new(self.n_vars, vec![]).expect("empty formula")
        })
    }

    /// The live clauses re-indexed onto the variables they mention. Returns the
    /// compact formula and, for each compact variable, the original variable.
    pub fn residual_formula(&self) -> (CnfFormula, Vec<Var>) {
        let mut map = vec![u32::MAX; self.n_vars];
        let mut back = Vec::new();
        let mut clauses = Vec::with_capacity(self.live_clauses);
        for c in self.live_clauses() {
            let lits = self
                .clause_edges(c)
                .map(|e| {
                    let v = self.edge_var[e] as usize;
                    if map[v] == u32::MAX {
                        map[v] = back.len() as u32;
                        back.push(Var(v as u32));
                    }
                    Literal::new(Var(map[v]), self.edge_negated[e])
                })
                .collect();
            clauses.push(Clause::new(lits).expect("distinct"));
        }
        let formula = CnfFormula::new(back.len(), clauses).expect("residual has no empty clause");
        (formula, back)
    }

    /// Whether the live factor graph (variables and live clauses) has no cycle.
    pub fn is_acyclic(&self) -> bool {
        self.live_components().is_some()
    }

    /// Connected components of the live graph counting every variable node, or
    /// `None` when a cycle exists.
    pub fn live_components(&self) -> Option<usize> {
        let n = self.n_vars + self.n_clauses();
        let mut uf = UnionFind::new(n);
        for e in self.live_edges() {
            if !uf.union(self.edge_var[e] as usize, self.n_vars + self.edge_clause[e] as usize) {
                return None;
            }
        }
        let nodes = self.n_vars + self.live_clauses;
        Some(nodes - self.live_edges)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
