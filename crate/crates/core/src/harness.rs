//! Reproducible experiment runs with CSV output.
//!
//! Two experiments are provided: a grid of decimation runs over
//! `(N, α, f)` cells ([`run_table_experiment`]) and a complexity scan that
//! thins one random formula clause by clause while tracking `Σ/N`
//! ([`run_complexity_scan`]).
//!
//! Every instance derives its formula and solver seeds from its own instance
//! seed, so results do not depend on the number of workers or on scheduling.

use std::io;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::formula::CnfFormula;
use crate::generator::{generate_random_ksat, GeneratorError, GeneratorParams};
use crate::graph::FactorGraph;
use crate::rng::{derive_seed, seeded, stream};
use crate::sid::{sid_solve, SidConfig, SolveResult, SolveStatus};
use crate::sp::{compute_complexity, run_sp_from, SurveyState};
use crate::ConvergenceStatus;

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "SPSAT_WORKERS";

/// Onset of non-trivial surveys in random 3-SAT.
pub const ALPHA_D: f64 = 3.9;
/// Conjectured satisfiability threshold of random 3-SAT.
pub const ALPHA_C: f64 = 4.267;

/// Published solved fractions over 50 instances, `(N, α, f, fraction)`.
pub const REFERENCE_SOLVED: &[(usize, f64, f64, f64)] = &[
    (25000, 4.21, 0.04, 0.86),
    (25000, 4.22, 0.04, 0.66),
    (25000, 4.23, 0.04, 0.28),
    (25000, 4.24, 0.04, 0.08),
    (50000, 4.21, 0.04, 0.98),
    (50000, 4.22, 0.04, 0.84),
    (50000, 4.23, 0.04, 0.52),
    (50000, 4.24, 0.04, 0.22),
    (100000, 4.21, 0.04, 1.00),
    (100000, 4.22, 0.04, 1.00),
    (100000, 4.23, 0.04, 0.72),
    (100000, 4.24, 0.04, 0.22),
    (25000, 4.21, 0.02, 1.00),
    (25000, 4.22, 0.02, 0.86),
    (25000, 4.23, 0.02, 0.50),
    (25000, 4.24, 0.02, 0.22),
    (50000, 4.21, 0.02, 1.00),
    (50000, 4.22, 0.02, 0.98),
    (50000, 4.23, 0.02, 0.86),
    (50000, 4.24, 0.02, 0.48),
    (100000, 4.23, 0.02, 1.00),
    (100000, 4.24, 0.02, 0.68),
    (25000, 4.22, 0.01, 0.94),
    (25000, 4.23, 0.01, 0.78),
    (25000, 4.24, 0.01, 0.32),
    (50000, 4.22, 0.01, 1.00),
    (50000, 4.23, 0.01, 0.94),
    (50000, 4.24, 0.01, 0.64),
    (100000, 4.24, 0.01, 0.88),
    (25000, 4.22, 0.005, 0.98),
    (25000, 4.23, 0.005, 0.88),
    (25000, 4.24, 0.005, 0.50),
    (50000, 4.23, 0.005, 0.98),
    (50000, 4.24, 0.005, 0.66),
    (100000, 4.24, 0.005, 0.92),
    (25000, 4.22, 0.0025, 1.00),
    (25000, 4.23, 0.0025, 0.90),
    (25000, 4.24, 0.0025, 0.60),
    (50000, 4.23, 0.0025, 1.00),
    (50000, 4.24, 0.0025, 0.78),
    (100000, 4.24, 0.0025, 0.92),
    (25000, 4.23, 0.00125, 0.94),
    (25000, 4.24, 0.00125, 0.60),
    (50000, 4.24, 0.00125, 0.84),
    (100000, 4.24, 0.00125, 1.00),
];

/// Published mean total SP sweeps over successful runs, `(N, α, ⟨t⟩)`.
pub const REFERENCE_ITERATIONS: &[(usize, f64, f64)] = &[
    (25000, 4.21, 1369.0),
    (25000, 4.22, 2428.0),
    (25000, 4.23, 4635.0),
    (25000, 4.24, 7843.0),
    (50000, 4.21, 1238.0),
    (50000, 4.22, 1751.0),
    (50000, 4.23, 3411.0),
    (50000, 4.24, 8607.0),
    (100000, 4.21, 1204.0),
    (100000, 4.22, 1557.0),
    (100000, 4.23, 2573.0),
    (100000, 4.24, 7461.0),
];

pub const NO_REFERENCE: &str = "no published reference";

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

pub fn reference_solved_fraction(n: usize, alpha: f64, f: f64) -> Option<f64> {
    REFERENCE_SOLVED.iter().find(|r| r.0 == n && close(r.1, alpha) && close(r.2, f)).map(|r| r.3)
}

pub fn reference_iterations(n: usize, alpha: f64) -> Option<f64> {
    REFERENCE_ITERATIONS.iter().find(|r| r.0 == n && close(r.1, alpha)).map(|r| r.2)
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("could not build the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Worker-pool size from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&w| w > 0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableCell {
    pub n: usize,
    pub alpha: f64,
    pub fix_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub cells: Vec<TableCell>,
    pub instances: usize,
    /// Instance `i` of every cell uses the seed `base_seed + i`.
    pub base_seed: u64,
    pub k: usize,
    /// Solver settings; `fix_fraction` and `seed` are set per run.
    pub solver: SidConfig,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.instances == 0 {
            return Err(HarnessError::Invalid("at least one instance per cell is required".into()));
        }
        for c in &self.cells {
            if c.n == 0 || !(c.alpha >= 0.0) || !(c.fix_fraction > 0.0 && c.fix_fraction <= 1.0) {
                return Err(HarnessError::Invalid(format!("bad cell {c:?}")));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.instances as u64).map(move |i| self.base_seed.wrapping_add(i))
    }
}

/// One decimation run of a table experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceRun {
    pub cell: TableCell,
    pub seed: u64,
    pub m: usize,
    pub result: SolveResult,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub cell: TableCell,
    pub instances: usize,
    pub solved: usize,
    /// Mean total SP sweeps over the solved instances.
    pub mean_iterations_solved: Option<f64>,
    pub mean_iterations_all: f64,
    pub reference_solved_fraction: Option<f64>,
    pub reference_iterations: Option<f64>,
}

impl CellSummary {
    pub fn solved_fraction(&self) -> f64 {
        self.solved as f64 / self.instances as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport {
    pub runs: Vec<InstanceRun>,
    pub cells: Vec<CellSummary>,
}

/// The formula of instance `seed` at `(n, α, k)`. It does not depend on `f`,
/// so the cells of one `(N, α)` column share their instances.
pub fn instance_formula(n: usize, alpha: f64, k: usize, seed: u64) -> Result<CnfFormula, GeneratorError> {
    generate_random_ksat(&GeneratorParams::with_alpha(n, alpha, k, derive_seed(seed, stream::GENERATOR)))
}

pub fn run_instance(cell: TableCell, k: usize, seed: u64, solver: &SidConfig) -> Result<InstanceRun, HarnessError> {
    let formula = instance_formula(cell.n, cell.alpha, k, seed)?;
    let graph = FactorGraph::new(&formula);
    let config = SidConfig { fix_fraction: cell.fix_fraction, seed: derive_seed(seed, stream::DECIMATION), ..*solver };
    let start = Instant::now();
    let result = sid_solve(&graph, &config);
    let wall_time_s = start.elapsed().as_secs_f64();
    if let Some(values) = &result.assignment {
        assert!(formula.is_satisfied_by(values));
    }
    Ok(InstanceRun { cell, seed, m: formula.n_clauses(), result, wall_time_s })
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match workers {
        Some(w) => Ok(rayon::ThreadPoolBuilder::new().num_threads(w).build()?.install(job)),
        None => Ok(job()),
    }
}

pub fn run_table_experiment(spec: &ExperimentSpec) -> Result<TableReport, HarnessError> {
    spec.validate()?;
    let jobs: Vec<(TableCell, u64)> =
        spec.cells.iter().flat_map(|&cell| spec.seeds().map(move |seed| (cell, seed))).collect();
    let runs = in_pool(spec.workers, || {
        jobs.par_iter().map(|&(cell, seed)| run_instance(cell, spec.k, seed, &spec.solver)).collect::<Vec<_>>()
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let cells = spec
        .cells
        .iter()
        .enumerate()
        .map(|(idx, &cell)| summarize(cell, &runs[idx * spec.instances..(idx + 1) * spec.instances]))
        .collect();
    Ok(TableReport { runs, cells })
}

pub fn summarize(cell: TableCell, runs: &[InstanceRun]) -> CellSummary {
    let solved: Vec<&InstanceRun> = runs.iter().filter(|r| r.result.status == SolveStatus::Sat).collect();
    let mean =
        |rs: &[&InstanceRun]| rs.iter().map(|r| r.result.total_sp_iterations as f64).sum::<f64>() / rs.len() as f64;
    let all: Vec<&InstanceRun> = runs.iter().collect();
    CellSummary {
        cell,
        instances: runs.len(),
        solved: solved.len(),
        mean_iterations_solved: (!solved.is_empty()).then(|| mean(&solved)),
        mean_iterations_all: if runs.is_empty() { 0.0 } else { mean(&all) },
        reference_solved_fraction: reference_solved_fraction(cell.n, cell.alpha, cell.fix_fraction),
        reference_iterations: reference_iterations(cell.n, cell.alpha),
    }
}

#[derive(Debug, Serialize)]
struct TableRow<'a> {
    schema_version: u32,
    row_kind: &'a str,
    n: usize,
    alpha: f64,
    f: f64,
    k: usize,
    seed: Option<u64>,
    m: Option<usize>,
    status: Option<SolveStatus>,
    rounds: Option<usize>,
    total_sp_iterations: Option<usize>,
    walksat_flips: Option<u64>,
    wall_time_s: Option<f64>,
    instances: Option<usize>,
    solved_fraction: Option<f64>,
    mean_sp_iterations_solved: Option<f64>,
    reference_solved_fraction: Option<String>,
    reference_sp_iterations: Option<String>,
}

fn reference_label(x: Option<f64>) -> String {
    x.map_or_else(|| NO_REFERENCE.to_string(), |v| v.to_string())
}

/// Column names of the table CSV.
pub const TABLE_HEADER: &[&str] = &[
    "schema_version",
    "row_kind",
    "n",
    "alpha",
    "f",
    "k",
    "seed",
    "m",
    "status",
    "rounds",
    "total_sp_iterations",
    "walksat_flips",
    "wall_time_s",
    "instances",
    "solved_fraction",
    "mean_sp_iterations_solved",
    "reference_solved_fraction",
    "reference_sp_iterations",
];

/// Writes one `instance` row per run, then one `aggregate` row per cell.
/// `include_timing = false` leaves the wall-time column empty.
pub fn write_table_csv<W: io::Write>(
    report: &TableReport,
    k: usize,
    include_timing: bool,
    out: W,
) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for run in &report.runs {
        w.serialize(TableRow {
            schema_version: CSV_SCHEMA_VERSION,
            row_kind: "instance",
            n: run.cell.n,
            alpha: run.cell.alpha,
            f: run.cell.fix_fraction,
            k,
            seed: Some(run.seed),
            m: Some(run.m),
            status: Some(run.result.status),
            rounds: Some(run.result.rounds),
            total_sp_iterations: Some(run.result.total_sp_iterations),
            walksat_flips: Some(run.result.walksat_flips),
            wall_time_s: include_timing.then_some(run.wall_time_s),
            instances: None,
            solved_fraction: None,
            mean_sp_iterations_solved: None,
            reference_solved_fraction: None,
            reference_sp_iterations: None,
        })?;
    }
    for cell in &report.cells {
        w.serialize(TableRow {
            schema_version: CSV_SCHEMA_VERSION,
            row_kind: "aggregate",
            n: cell.cell.n,
            alpha: cell.cell.alpha,
            f: cell.cell.fix_fraction,
            k,
            seed: None,
            m: None,
            status: None,
            rounds: None,
            total_sp_iterations: None,
            walksat_flips: None,
            wall_time_s: None,
            instances: Some(cell.instances),
            solved_fraction: Some(cell.solved_fraction()),
            mean_sp_iterations_solved: cell.mean_iterations_solved,
            reference_solved_fraction: Some(reference_label(cell.reference_solved_fraction)),
            reference_sp_iterations: Some(reference_label(cell.reference_iterations)),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub n: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// Clauses removed between consecutive points.
    pub step_clauses: usize,
    pub k: usize,
    pub seed: u64,
    pub t_max: usize,
    pub epsilon: f64,
}

impl ScanSpec {
    pub fn new(n: usize, alpha_start: f64, alpha_end: f64, step_clauses: usize, seed: u64) -> ScanSpec {
        ScanSpec { n, alpha_start, alpha_end, step_clauses, k: 3, seed, t_max: 1000, epsilon: 1e-3 }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.alpha_start > self.alpha_end && self.alpha_end >= 0.0) {
            return Err(HarnessError::Invalid("the scan needs alpha_start > alpha_end >= 0".into()));
        }
        if self.step_clauses == 0 || self.n == 0 {
            return Err(HarnessError::Invalid("the scan needs n > 0 and a positive step".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub alpha: f64,
    pub m: usize,
    pub status: ConvergenceStatus,
    pub sweeps: usize,
    pub max_eta: f64,
    /// `Σ/N`, absent when the surveys did not converge.
    pub sigma_per_var: Option<f64>,
}

/// Starts from one formula at `alpha_start` and removes `step_clauses`
/// random clauses at a time while `α ≥ alpha_end`, rerunning survey
/// propagation from the previous surveys after every removal.
pub fn run_complexity_scan(spec: &ScanSpec) -> Result<Vec<ScanPoint>, HarnessError> {
    spec.validate()?;
    let formula = instance_formula(spec.n, spec.alpha_start, spec.k, spec.seed)?;
    let mut graph = FactorGraph::new(&formula);
    let mut rng = seeded(derive_seed(spec.seed, stream::SCAN));
    let mut removal: Vec<usize> = (0..graph.n_clauses()).collect();
    removal.shuffle(&mut rng);
    let mut msg_rng = seeded(derive_seed(spec.seed, stream::MESSAGES));
    let mut surveys = SurveyState::random(&graph, &mut msg_rng);
    let mut points = Vec::new();
    let n = spec.n as f64;
    loop {
        let m = graph.n_live_clauses();
        let alpha = m as f64 / n;
        if alpha < spec.alpha_end - 1e-12 {
            break;
        }
        let report = run_sp_from(&graph, &mut surveys, spec.t_max, spec.epsilon, &mut msg_rng);
        let sigma_per_var = if report.converged() {
            compute_complexity(&graph, &surveys).ok().map(|c| c.sigma_total / n)
        } else {
            None
        };
        points.push(ScanPoint {
            alpha,
            m,
            status: report.status,
            sweeps: report.sweeps,
            max_eta: surveys.max_live(&graph),
            sigma_per_var,
        });
        if m < spec.step_clauses {
            break;
        }
        for c in removal.drain(removal.len() - spec.step_clauses..) {
            graph.remove_clause(c);
        }
    }
    Ok(points)
}

#[derive(Debug, Serialize)]
struct ScanRow {
    schema_version: u32,
    n: usize,
    seed: u64,
    alpha: f64,
    m: usize,
    status: ConvergenceStatus,
    sweeps: usize,
    max_eta: f64,
    sigma_per_var: Option<f64>,
}

pub fn write_scan_csv<W: io::Write>(spec: &ScanSpec, points: &[ScanPoint], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["schema_version", "n", "seed", "alpha", "m", "status", "sweeps", "max_eta", "sigma_per_var"])?;
    for p in points {
        w.serialize(ScanRow {
            schema_version: CSV_SCHEMA_VERSION,
            n: spec.n,
            seed: spec.seed,
            alpha: p.alpha,
            m: p.m,
            status: p.status,
            sweeps: p.sweeps,
            max_eta: p.max_eta,
            sigma_per_var: p.sigma_per_var,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-round trace of one decimation run.
pub fn write_trace_csv<W: io::Write>(result: &SolveResult, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for round in &result.trace {
        w.serialize(round)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(cells: Vec<TableCell>, instances: usize, workers: Option<usize>) -> ExperimentSpec {
        ExperimentSpec { cells, instances, base_seed: 11, k: 3, solver: SidConfig::default(), workers }
    }

    fn csv_of(report: &TableReport) -> String {
        let mut out = Vec::new();
        write_table_csv(report, 3, false, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let report = run_table_experiment(&spec(vec![], 3, None)).unwrap();
        let text = csv_of(&report);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("schema_version,row_kind,"));
    }

    #[test]
    fn zero_instances_rejected() {
        assert!(run_table_experiment(&spec(vec![], 0, None)).is_err());
    }

    #[test]
    fn easy_cell_solves_everything_in_parallel_and_serially() {
        let cells = vec![TableCell { n: 300, alpha: 2.0, fix_fraction: 0.04 }];
        let serial = run_table_experiment(&spec(cells.clone(), 4, Some(1))).unwrap();
        let parallel = run_table_experiment(&spec(cells, 4, Some(3))).unwrap();
        assert_eq!(serial.cells[0].solved, 4);
        assert_eq!(csv_of(&serial), csv_of(&parallel));
        let text = csv_of(&serial);
        assert_eq!(text.lines().filter(|l| l.contains(",instance,")).count(), 4);
        assert!(text.lines().last().unwrap().contains(NO_REFERENCE));
    }

    #[test]
    fn references_are_found() {
        assert_eq!(reference_solved_fraction(25000, 4.21, 0.02), Some(1.0));
        assert_eq!(reference_solved_fraction(25000, 4.21, 0.01), None);
        assert_eq!(reference_iterations(50000, 4.22), Some(1751.0));
    }

    #[test]
    fn scan_below_threshold_is_trivial() {
        let spec = ScanSpec::new(2000, 3.0, 2.5, 200, 5);
        let points = run_complexity_scan(&spec).unwrap();
        assert_eq!(points.len(), 6);
        assert!(points.windows(2).all(|w| w[0].alpha > w[1].alpha));
        for p in &points {
            assert!(p.sigma_per_var.unwrap().abs() < 1e-6, "{p:?}");
        }
        let mut out = Vec::new();
        write_scan_csv(&spec, &points, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 7);
    }

    #[test]
    fn scan_rejects_bad_ranges() {
        assert!(run_complexity_scan(&ScanSpec::new(10, 3.0, 4.0, 1, 0)).is_err());
        assert!(run_complexity_scan(&ScanSpec::new(10, 4.0, 3.0, 0, 0)).is_err());
    }
}
