mod common;

use spsat_core::harness::instance_formula;
use spsat_core::sp::{run_sp, run_sp_from, sp_update_edge};
use spsat_core::walksat::walksat;
use spsat_core::{
    sid_solve, CnfFormula, FactorGraph, SearchStatus, SidConfig, SolveStatus, SurveyState, WalksatParams,
};

use common::satisfies;

fn pair() -> FactorGraph {
    FactorGraph::new(&CnfFormula::from_dimacs_clauses(2, &[&[1, 2], &[-1, -2]]).unwrap())
}

/// Edges: 0 = (a, x1), 1 = (a, x2), 2 = (b, ¬x1), 3 = (b, ¬x2). Every
/// assignment η(a→1) = η(b→2) = x, η(a→2) = η(b→1) = y is a fixed point.
#[test]
fn two_clause_loop_has_a_family_of_fixed_points() {
    let g = pair();
    let grid = [0.0, 0.1, 0.37, 0.5, 0.9, 1.0];
    for &x in &grid {
        for &y in &grid {
            let mut s = SurveyState::constant(&g, 0.0);
            for (e, v) in [x, y, y, x].into_iter().enumerate() {
                s.set(e, v);
            }
            for e in 0..4 {
                let updated = sp_update_edge(&g, &s, e).unwrap();
                assert!((updated - s.get(e)).abs() < 1e-15, "x={x} y={y} edge {e}");
            }
        }
    }
}

#[test]
fn two_clause_loop_converges_into_the_family() {
    let g = pair();
    let mut reached = Vec::new();
    for seed in 0..10 {
        let (report, s) = run_sp(&g, 100, 1e-9, seed);
        assert!(report.converged());
        assert!((s.get(0) - s.get(3)).abs() < 1e-9);
        assert!((s.get(1) - s.get(2)).abs() < 1e-9);
        reached.push(s.get(0));
    }
    reached.sort_by(f64::total_cmp);
    reached.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    assert!(reached.len() > 1);
}

#[test]
fn walksat_solves_easy_instances() {
    let solved = (0..100)
        .filter(|&seed| {
            let f = instance_formula(1000, 3.0, 3, seed).unwrap();
            let out = walksat(&f, &WalksatParams { seed, ..WalksatParams::default() });
            out.status == SearchStatus::Sat && satisfies(&f, &out.assignment)
        })
        .count();
    assert!(solved >= 99, "{solved}/100");
}

#[test]
fn sid_below_clustering_goes_straight_to_walksat() {
    let f = instance_formula(10_000, 3.5, 3, 4).unwrap();
    let g = FactorGraph::new(&f);
    let res = sid_solve(&g, &SidConfig { seed: 4, ..SidConfig::default() });
    assert_eq!(res.status, SolveStatus::Sat);
    assert_eq!(res.rounds, 1);
    assert!(res.trace[0].max_eta < 1e-3);
    assert_eq!(res.residual_vars, 10_000);
    assert!(satisfies(&f, res.assignment.as_ref().unwrap()));
}

#[test]
fn warm_start_from_a_fixed_point_needs_one_sweep() {
    let g = FactorGraph::new(&instance_formula(2000, 4.2, 3, 8).unwrap());
    let (report, mut s) = run_sp(&g, 1000, 1e-6, 8);
    assert!(report.converged());
    let mut rng = spsat_core::rng::seeded(1);
    let again = run_sp_from(&g, &mut s, 1000, 1e-6, &mut rng);
    assert!(again.converged());
    assert_eq!(again.sweeps, 1);
}
