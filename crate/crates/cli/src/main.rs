//! `spsat`: command-line front end for the message-passing solvers.
//!
//! Single runs print one JSON object on stdout, experiment grids and scans
//! print CSV, and `gen` prints DIMACS.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use spsat_core::harness::{
    run_complexity_scan, run_table_experiment, write_scan_csv, write_table_csv, write_trace_csv, ExperimentSpec,
    ScanSpec, TableCell, WORKERS_ENV,
};
use spsat_core::oracle::{backbone, cluster_solutions, enumerate_solutions, exact_marginals, OracleError};
use spsat_core::rng::{derive_seed, stream};
use spsat_core::sp::{categorize_variables, compute_biases, compute_complexity, run_sp, CategoryHistogram};
use spsat_core::walksat::walksat;
use spsat_core::wp::{local_fields, run_wp, wid_solve, WidConfig, WidStatus};
use spsat_core::{
    bp, emit_dimacs, generate_random_ksat, parse_dimacs, sid_solve, CnfFormula, ConvergenceStatus, FactorGraph,
    GeneratorParams, SearchStatus, SidConfig, SolveStatus, WalksatParams,
};

const EXIT_INFO: u8 = 0;
const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_UNDECIDED: u8 = 30;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "spsat", version, about = "Warning, belief and survey propagation for CNF formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random k-SAT formula as DIMACS.
    Gen {
        #[command(flatten)]
        input: GenArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Warning propagation, or warning-inspired decimation with `--decimate`.
    Wp {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1000)]
        tmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        decimate: bool,
        /// Fix free variables to random values instead of `true`.
        #[arg(long, requires = "decimate")]
        random_free: bool,
    },
    /// Belief propagation: marginals and entropy.
    Bp {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1000)]
        tmax: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Survey propagation: fixed point summary, biases and complexity.
    Sp {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1000)]
        tmax: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the per-variable bias triples.
        #[arg(long)]
        biases: bool,
    },
    /// Survey-inspired decimation.
    Sid {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one CSV row per decimation round.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// WalkSAT local search.
    Walksat {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1_000_000)]
        flips: u64,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        restarts: u32,
    },
    /// Exhaustive enumeration on formulas of at most 30 variables.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: OracleQuery,
        /// Hamming radius of cluster connectivity.
        #[arg(long, default_value_t = 1)]
        q: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decimation over a grid of (N, alpha, f) cells; CSV output.
    Table {
        /// Cell as `N,ALPHA,F`; repeatable.
        #[arg(long = "cell", value_parser = parse_cell)]
        cells: Vec<TableCell>,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        base_seed: u64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Fill the wall-time column.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complexity along a clause-removal path; CSV output.
    Scan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha_start: f64,
        #[arg(long)]
        alpha_end: f64,
        /// Clauses removed between points.
        #[arg(long)]
        step: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        tmax: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, conflicts_with = "m", required_unless_present = "m")]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args, Debug)]
struct Input {
    #[arg(long, conflicts_with = "n", required_unless_present = "n")]
    dimacs: Option<PathBuf>,
    #[arg(long, conflicts_with = "dimacs")]
    n: Option<usize>,
    #[arg(long, requires = "n", conflicts_with = "m")]
    alpha: Option<f64>,
    #[arg(long, requires = "n")]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 1000)]
    tmax: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long = "f", default_value_t = 0.01)]
    fix_fraction: f64,
    #[arg(long, default_value_t = 0)]
    restarts: u32,
    #[arg(long, default_value_t = spsat_core::sid::DEFAULT_RESIDUAL_FLIPS)]
    walksat_flips: u64,
    #[arg(long, default_value_t = 0.5)]
    walksat_noise: f64,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct OracleQuery {
    #[arg(long)]
    count: bool,
    #[arg(long)]
    marginals: bool,
    #[arg(long)]
    clusters: bool,
    #[arg(long)]
    backbone: bool,
}

fn parse_cell(s: &str) -> Result<TableCell, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, alpha, f] = parts[..] else {
        return Err(format!("expected N,ALPHA,F, got `{s}`"));
    };
    Ok(TableCell {
        n: n.parse().map_err(|e| format!("N: {e}"))?,
        alpha: alpha.parse().map_err(|e| format!("ALPHA: {e}"))?,
        fix_fraction: f.parse().map_err(|e| format!("F: {e}"))?,
    })
}

fn generate(n: usize, alpha: Option<f64>, m: Option<usize>, k: usize, seed: u64) -> Result<CnfFormula> {
    let seed = derive_seed(seed, stream::GENERATOR);
    let params = match (alpha, m) {
        (Some(alpha), None) => GeneratorParams::with_alpha(n, alpha, k, seed),
        (None, Some(m)) => GeneratorParams { n, m, k, seed },
        _ => bail!("exactly one of --alpha and --m is required with --n"),
    };
    Ok(generate_random_ksat(&params)?)
}

impl Input {
    /// The formula to solve. Generated instances match those of `gen` and
    /// of the table harness for the same seed.
    fn load(&self, seed: u64) -> Result<CnfFormula> {
        match (&self.dimacs, self.n) {
            (Some(path), None) => {
                let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                let parsed = parse_dimacs(&bytes).with_context(|| format!("parsing {}", path.display()))?;
                Ok(parsed.formula)
            }
            (None, Some(n)) => generate(n, self.alpha, self.m, self.k, seed),
            _ => bail!("exactly one of --dimacs and --n is required"),
        }
    }
}

impl SolverArgs {
    fn config(&self, seed: u64) -> Result<SidConfig> {
        if !(self.fix_fraction > 0.0 && self.fix_fraction <= 1.0) {
            bail!("--f must lie in (0, 1]");
        }
        check_eps(self.eps)?;
        check_noise(self.walksat_noise)?;
        Ok(SidConfig {
            t_max: self.tmax.max(1),
            epsilon: self.eps,
            fix_fraction: self.fix_fraction,
            restarts: self.restarts,
            walksat: WalksatParams {
                max_flips: self.walksat_flips,
                noise: self.walksat_noise,
                ..WalksatParams::default()
            },
            seed,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        bail!("--eps must be positive");
    }
    Ok(())
}

fn check_noise(noise: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&noise) {
        bail!("noise must lie in [0, 1]");
    }
    Ok(())
}

fn convergence_exit(status: ConvergenceStatus) -> u8 {
    match status {
        ConvergenceStatus::Converged => EXIT_INFO,
        ConvergenceStatus::Contradiction => EXIT_UNSAT,
        ConvergenceStatus::Unconverged => EXIT_UNDECIDED,
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen { input, seed, out } => {
            let formula = generate(input.n, input.alpha, input.m, input.k, seed)?;
            let mut w = output(&out)?;
            w.write_all(emit_dimacs(&formula).as_bytes())?;
            w.flush()?;
            Ok(EXIT_INFO)
        }
        Command::Wp { input, tmax, seed, decimate, random_free } => {
            let graph = FactorGraph::new(&input.load(seed)?);
            if decimate {
                let result =
                    wid_solve(&graph, &WidConfig { t_max: tmax.max(1), seed, random_free_choice: random_free });
                print_json(&result)?;
                return Ok(match result.status {
                    WidStatus::Sat => EXIT_SAT,
                    WidStatus::Unsat | WidStatus::ProbablyUnsat => EXIT_UNSAT,
                    WidStatus::Unconverged => EXIT_UNDECIDED,
                });
            }
            let (report, warnings) = run_wp(&graph, tmax.max(1), seed);
            let fields = local_fields(&graph, &warnings);
            print_json(&json!({
                "status": report.status,
                "sweeps": report.sweeps,
                "H": fields.h,
                "c": fields.c,
                "u_nonzero_count": warnings.nonzero_count(&graph),
            }))?;
            Ok(match report.status {
                ConvergenceStatus::Converged if fields.has_contradiction() => EXIT_UNSAT,
                status => convergence_exit(status),
            })
        }
        Command::Bp { input, tmax, eps, seed } => {
            check_eps(eps)?;
            let graph = FactorGraph::new(&input.load(seed)?);
            let (mut report, beliefs) = bp::run_bp(&graph, tmax.max(1), eps, seed);
            let summary = if report.converged() {
                bp::bp_marginals(&graph, &beliefs).and_then(|m| Ok((m, bp::bp_entropy(&graph, &beliefs)?))).ok()
            } else {
                None
            };
            if report.converged() && summary.is_none() {
                report.status = ConvergenceStatus::Contradiction;
            }
            let (mu, entropy) = summary.map_or((None, None), |(m, s)| (Some(m.mu), Some(s)));
            print_json(&json!({
                "status": report.status,
                "sweeps": report.sweeps,
                "mu": mu,
                "S": entropy.as_ref().map(|s| s.entropy),
                "count": entropy.as_ref().map(|s| s.count),
            }))?;
            Ok(convergence_exit(report.status))
        }
        Command::Sp { input, tmax, eps, seed, biases } => {
            check_eps(eps)?;
            let graph = FactorGraph::new(&input.load(seed)?);
            let (mut report, surveys) = run_sp(&graph, tmax.max(1), eps, seed);
            let max_eta = surveys.max_live(&graph);
            let mut triples = None;
            let mut sigma = None;
            if report.converged() {
                match (compute_biases(&graph, &surveys), compute_complexity(&graph, &surveys)) {
                    (Ok(b), Ok(c)) => {
                        triples = Some(b);
                        sigma = Some(c);
                    }
                    _ => report.status = ConvergenceStatus::Contradiction,
                }
            }
            let histogram = triples.as_ref().map(|b| CategoryHistogram::of(&categorize_variables(b)));
            let mut value = json!({
                "status": report.status,
                "sweeps": report.sweeps,
                "max_eta": max_eta,
                "trivial": report.converged() && max_eta < eps,
                "sigma": sigma.as_ref().map(|s| s.sigma_total),
                "sigma_per_var": sigma.as_ref().map(|s| s.sigma_per_var),
                "categories_histogram": histogram,
            });
            if biases {
                value["biases"] = json!(triples);
            }
            print_json(&value)?;
            Ok(convergence_exit(report.status))
        }
        Command::Sid { input, solver, seed, trace } => {
            let formula = input.load(seed)?;
            let config = solver.config(derive_seed(seed, stream::DECIMATION))?;
            let result = sid_solve(&FactorGraph::new(&formula), &config);
            if let Some(values) = &result.assignment {
                assert!(formula.is_satisfied_by(values));
            }
            if let Some(path) = &trace {
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                write_trace_csv(&result, BufWriter::new(file))?;
            }
            print_json(&json!({
                "status": result.status,
                "assignment": result.assignment,
                "rounds": result.rounds,
                "total_sp_iterations": result.total_sp_iterations,
                "sigma_trace": result.sigma_trace(),
                "categories_histogram": result.categories,
                "restarts_used": result.restarts_used,
                "walksat_flips": result.walksat_flips,
                "residual_vars": result.residual_vars,
                "residual_clauses": result.residual_clauses,
            }))?;
            Ok(match result.status {
                SolveStatus::Sat => EXIT_SAT,
                SolveStatus::ProbablyUnsat => EXIT_UNSAT,
                SolveStatus::SpUnconverged | SolveStatus::WalksatFailed => EXIT_UNDECIDED,
            })
        }
        Command::Walksat { input, flips, noise, seed, restarts } => {
            check_noise(noise)?;
            let formula = input.load(seed)?;
            let outcome = walksat(
                &formula,
                &WalksatParams {
                    max_flips: flips,
                    noise,
                    seed: derive_seed(seed, stream::WALKSAT),
                    max_restarts: restarts,
                },
            );
            print_json(&json!({
                "status": outcome.status,
                "assignment": outcome.assignment,
                "flips_used": outcome.flips_used,
                "best_cost_seen": outcome.best_cost_seen,
                "best_cost_trace": outcome.best_cost_trace,
            }))?;
            Ok(if outcome.status == SearchStatus::Sat { EXIT_SAT } else { EXIT_UNDECIDED })
        }
        Command::Oracle { input, query, q, seed } => {
            let formula = input.load(seed)?;
            let verdict = |satisfiable: bool| if satisfiable { EXIT_SAT } else { EXIT_UNSAT };
            let unsat = || -> Result<u8> {
                print_json(&json!({ "status": "UNSAT", "count": 0 }))?;
                Ok(EXIT_UNSAT)
            };
            if query.count {
                let set = enumerate_solutions(&formula, 0)?;
                print_json(&json!({ "count": set.count }))?;
                return Ok(verdict(set.count > 0));
            }
            if query.marginals {
                return match exact_marginals(&formula) {
                    Ok(m) => {
                        print_json(&json!({ "mu": m.mu }))?;
                        Ok(EXIT_SAT)
                    }
                    Err(OracleError::Unsat) => unsat(),
                    Err(e) => Err(e.into()),
                };
            }
            if query.backbone {
                return match backbone(&formula) {
                    Ok(b) => {
                        print_json(&json!({ "backbone": b }))?;
                        Ok(EXIT_SAT)
                    }
                    Err(OracleError::Unsat) => unsat(),
                    Err(e) => Err(e.into()),
                };
            }
            let set = enumerate_solutions(&formula, usize::MAX)?;
            let report = cluster_solutions(&set, q)?;
            print_json(&json!({
                "count": set.count,
                "q": report.q,
                "cluster_count": report.count(),
                "clusters": report.clusters,
            }))?;
            Ok(verdict(set.count > 0))
        }
        Command::Table { cells, instances, base_seed, k, solver, workers, timing, out } => {
            let spec = ExperimentSpec { cells, instances, base_seed, k, solver: solver.config(0)?, workers };
            let report = run_table_experiment(&spec)?;
            let mut w = output(&out)?;
            write_table_csv(&report, k, timing, &mut w)?;
            w.flush()?;
            Ok(EXIT_INFO)
        }
        Command::Scan { n, alpha_start, alpha_end, step, k, seed, tmax, eps, out } => {
            check_eps(eps)?;
            let spec = ScanSpec {
                k,
                t_max: tmax.max(1),
                epsilon: eps,
                ..ScanSpec::new(n, alpha_start, alpha_end, step, seed)
            };
            let points = run_complexity_scan(&spec)?;
            let mut w = output(&out)?;
            write_scan_csv(&spec, &points, &mut w)?;
            w.flush()?;
            Ok(EXIT_INFO)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_INFO });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("spsat: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
