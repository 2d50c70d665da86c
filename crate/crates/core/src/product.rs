use crate::formula::Var;
use crate::graph::{EdgeId, FactorGraph};

/// Below this a factor switches the accumulator to log space.
const TINY: f64 = 1e-12;

/// Running product of factors in `[0, 1]`.
///
/// Exact zeros are counted rather than multiplied in, and once any factor
/// drops below `TINY` the product is accumulated as a sum of logarithms to
/// avoid underflow over long neighbor lists.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Product {
    linear: f64,
    log: f64,
    zeros: u32,
    in_log: bool,
}

impl Product {
    #[inline]
    pub(crate) fn one() -> Product {
        Product { linear: 1.0, log: 0.0, zeros: 0, in_log: false }
    }

    #[inline]
    pub(crate) fn mul(&mut self, x: f64) {
        if x == 0.0 {
            self.zeros += 1;
        } else if self.in_log {
            self.log += x.ln();
        } else if x < TINY {
            self.in_log = true;
            self.log = self.linear.ln() + x.ln();
        } else {
            self.linear *= x;
        }
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        if self.zeros > 0 {
            0.0
        } else if self.in_log {
            self.log.exp()
        } else {
            self.linear
        }
    }
}

/// Cavity products for the edge `(a, j)`:
/// `(∏_{b ∈ V^s_a(j)} (1 - m(b→j)), ∏_{b ∈ V^u_a(j)} (1 - m(b→j)))`,
/// i.e. over `j`'s other same-sign occurrences and over its opposite-sign ones.
#[inline]
pub(crate) fn cavity_products(graph: &FactorGraph, msgs: &[f64], edge: EdgeId) -> (f64, f64) {
    let mut same = Product::one();
    for &b in graph.same_sign_edges(edge) {
        let b = b as usize;
        if b != edge && graph.is_edge_alive(b) {
            same.mul(1.0 - msgs[b]);
        }
    }
    let mut opposite = Product::one();
    for &b in graph.opposite_sign_edges(edge) {
        let b = b as usize;
        if graph.is_edge_alive(b) {
            opposite.mul(1.0 - msgs[b]);
        }
    }
    (same.value(), opposite.value())
}

/// `(∏_{V+(v)} (1 - m), ∏_{V-(v)} (1 - m))` over the live edges of `v`.
pub(crate) fn var_products(graph: &FactorGraph, msgs: &[f64], v: Var) -> (f64, f64) {
    let product = |edges: &[u32]| {
        let mut p = Product::one();
        for &b in edges {
            if graph.is_edge_alive(b as usize) {
                p.mul(1.0 - msgs[b as usize]);
            }
        }
        p.value()
    };
    (product(graph.plus_edges(v)), product(graph.minus_edges(v)))
}
