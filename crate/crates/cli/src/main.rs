//! Command-line front end: preprocess, solve, verify, reconstruct, stats.
//!
//! Exit codes: 0 verified optimum (or success), 20 unsatisfiable, 3
//! verification failure, 1 any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use maxsimp::dimacs::{parse_solution, parse_wcnf, write_wcnf, Dialect, SolverOutput};
use maxsimp::ilp::{build_ilp, to_lp_string};
use maxsimp::pipeline::{
    aggregate_stats, compute_stats, preprocess_instance, run_pipeline, GateDecision, GateMode,
    PipelineConfig, PipelineError, PipelineSolution, Preprocessed, SizeGuard, SolverSpec,
};
use maxsimp::presolve::PresolveConfig;
use maxsimp::reconstruct::{reconstruct, verify_optimal, ReconstructionRecord};
use maxsimp::types::Cost;
use maxsimp::WcnfInstance;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_VERIFICATION: u8 = 3;
const EXIT_UNSAT: u8 = 20;

#[derive(Parser)]
#[command(
    name = "maxsimp",
    version,
    about = "ILP-presolve preprocessing for MaxSAT instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Paper,
    Always,
    Never,
}

impl From<GateArg> for GateMode {
    fn from(g: GateArg) -> GateMode {
        match g {
            GateArg::Paper => GateMode::Paper,
            GateArg::Always => GateMode::Always,
            GateArg::Never => GateMode::Never,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Legacy,
    Mse22,
}

impl From<DialectArg> for Dialect {
    fn from(d: DialectArg) -> Dialect {
        match d {
            DialectArg::Legacy => Dialect::Legacy,
            DialectArg::Mse22 => Dialect::Mse22,
        }
    }
}

/// Presolve and encoding knobs shared by the preprocessing commands.
#[derive(Args)]
struct EngineFlags {
    /// Presolve round limit.
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    /// Total probing budget in variables; 0 disables probing.
    #[arg(long, default_value_t = 10_000)]
    probe_limit: usize,
    /// Disable multi-variable aggregations.
    #[arg(long)]
    no_multi_aggr: bool,
    /// BDD node budget for pseudo-Boolean rows.
    #[arg(long, default_value_t = 100_000)]
    bdd_limit: usize,
    /// Skip preprocessing beyond `VARS,CLAUSES`.
    #[arg(long, value_name = "V,C")]
    size_guard: Option<String>,
    /// Report zeroed wall-clock times (reproducible outputs).
    #[arg(long)]
    no_timings: bool,
    /// Dialect for emitted WCNF files.
    #[arg(long, value_enum, default_value = "mse22")]
    dialect: DialectArg,
}

impl EngineFlags {
    fn to_config(&self) -> Result<PipelineConfig> {
        let size_guard = match &self.size_guard {
            None => SizeGuard::default(),
            Some(spec) => {
                let (v, c) = spec
                    .split_once(',')
                    .with_context(|| format!("--size-guard expects VARS,CLAUSES, got '{spec}'"))?;
                SizeGuard {
                    max_vars: v.trim().parse().context("bad size-guard variable limit")?,
                    max_clauses: c.trim().parse().context("bad size-guard clause limit")?,
                }
            }
        };
        Ok(PipelineConfig {
            presolve: PresolveConfig {
                max_rounds: self.rounds,
                probe_limit: self.probe_limit,
                multi_aggregation: !self.no_multi_aggr,
            },
            encode: maxsimp::encode::EncodeConfig {
                bdd_node_limit: self.bdd_limit,
                ..maxsimp::encode::EncodeConfig::default()
            },
            size_guard,
            emit_timings: !self.no_timings,
            output_dialect: self.dialect.into(),
            ..PipelineConfig::new()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Translate, presolve and re-encode an instance; write the simplified
    /// instance and the reconstruction sidecar.
    Preprocess {
        input: PathBuf,
        /// Simplified instance path (default: INPUT.simp.wcnf).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reconstruction sidecar path (default: INPUT.map.json).
        #[arg(long)]
        map: Option<PathBuf>,
        /// Also dump the intermediate 0-1 model in LP format.
        #[arg(long, value_name = "FILE")]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Run the full pipeline and print the verified solution.
    Solve {
        input: PathBuf,
        /// `builtin` or ignored when --solver-cmd is given.
        #[arg(long, default_value = "builtin")]
        solver: String,
        /// External solver command template with {input} and optional
        /// {timeout} placeholders.
        #[arg(long, value_name = "CMD")]
        solver_cmd: Option<String>,
        #[arg(long, value_enum, default_value = "paper")]
        gate: GateArg,
        /// Wall-clock limit for the external solver, seconds.
        #[arg(long, value_name = "S")]
        time_limit: Option<f64>,
        /// Persist the simplified instance here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Persist the reconstruction sidecar here.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Append the run's stats as one JSON line.
        #[arg(long, value_name = "FILE")]
        stats: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Check a solution file against an instance.
    Verify {
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Exhaustive optimality check up to this many variables.
        #[arg(long, default_value_t = 16)]
        oracle_limit: u32,
    },
    /// Lift a solution of a preprocessed instance back to the original via
    /// the sidecar record.
    Reconstruct {
        /// Solver output for the simplified instance (s/o/v lines).
        solution: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Original instance; when given, the lifted solution is verified.
        #[arg(long)]
        origin: Option<PathBuf>,
    },
    /// Preprocess every .wcnf file in a directory and report per-instance
    /// and per-group reduction statistics as JSON lines.
    Stats {
        dir: PathBuf,
        #[arg(long, value_name = "FILE")]
        json: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Preprocess {
            input,
            out,
            map,
            dump_lp,
            engine,
        } => cmd_preprocess(&input, out, map, dump_lp, &engine),
        Command::Solve {
            input,
            solver,
            solver_cmd,
            gate,
            time_limit,
            out,
            map,
            stats,
            engine,
        } => cmd_solve(
            &input, &solver, solver_cmd, gate, time_limit, out, map, stats, &engine,
        ),
        Command::Verify {
            input,
            solution,
            oracle_limit,
        } => cmd_verify(&input, &solution, oracle_limit),
        Command::Reconstruct {
            solution,
            map,
            origin,
        } => cmd_reconstruct(&solution, &map, origin.as_deref()),
        Command::Stats { dir, json, engine } => cmd_stats(&dir, &json, &engine),
    }
}

fn read_instance(path: &Path) -> Result<WcnfInstance> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_wcnf(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn cmd_preprocess(
    input: &Path,
    out: Option<PathBuf>,
    map: Option<PathBuf>,
    dump_lp: Option<PathBuf>,
    engine: &EngineFlags,
) -> Result<u8> {
    let origin = read_instance(input)?;
    let config = engine.to_config()?;

    if let Some(lp_path) = dump_lp {
        let (clean, _) = origin.without_tautologies();
        match build_ilp(&clean) {
            Ok(model) => fs::write(&lp_path, to_lp_string(&model))?,
            Err(e) => eprintln!("note: no LP dump, {e}"),
        }
    }

    match preprocess_instance(&origin, &config) {
        Preprocessed::Infeasible => {
            println!("s UNSATISFIABLE");
            Ok(EXIT_UNSAT)
        }
        Preprocessed::Skipped => {
            eprintln!("note: instance exceeds the size guard, nothing written");
            Ok(EXIT_OK)
        }
        Preprocessed::Unencodable { .. } => {
            eprintln!("note: simplified model contains an unencodable constraint, nothing written");
            Ok(EXIT_OK)
        }
        Preprocessed::Simplified {
            simp,
            record,
            report,
        } => {
            let out = out.unwrap_or_else(|| suffixed(input, "simp.wcnf"));
            let map = map.unwrap_or_else(|| suffixed(input, "map.json"));
            fs::write(&out, write_wcnf(&simp, config.output_dialect))
                .with_context(|| format!("cannot write {}", out.display()))?;
            fs::write(&map, record.to_json())
                .with_context(|| format!("cannot write {}", map.display()))?;
            let gate = if simp.num_vars < origin.num_vars && simp.hard.len() < origin.hard.len() {
                GateDecision::UsedSimplified
            } else {
                GateDecision::UsedOriginal
            };
            let mut stats = compute_stats(&origin, Some(&simp), Some(&report), gate);
            stats.instance = Some(input.display().to_string());
            if !config.emit_timings {
                stats.preprocessing_time_seconds = Some(0.0);
            }
            println!("{}", stats.to_json_line());
            Ok(EXIT_OK)
        }
    }
}

fn suffixed(input: &Path, suffix: &str) -> PathBuf {
    let mut name = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push('.');
    name.push_str(suffix);
    input.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    input: &Path,
    solver: &str,
    solver_cmd: Option<String>,
    gate: GateArg,
    time_limit: Option<f64>,
    out: Option<PathBuf>,
    map: Option<PathBuf>,
    stats_path: Option<PathBuf>,
    engine: &EngineFlags,
) -> Result<u8> {
    let origin = read_instance(input)?;
    let mut config = engine.to_config()?;
    config.gate = gate.into();
    config.solver = match solver_cmd {
        Some(command) => SolverSpec::External {
            command,
            time_limit_secs: time_limit,
        },
        None if solver == "builtin" => SolverSpec::Builtin,
        None => bail!("unknown solver '{solver}' (use 'builtin' or --solver-cmd)"),
    };
    config.simp_out = out;
    config.record_out = map;

    match run_pipeline(&origin, &config) {
        Ok(outcome) => {
            let mut stats = outcome.stats;
            stats.instance = Some(input.display().to_string());
            if let Some(path) = stats_path {
                append_line(&path, &stats.to_json_line())?;
            }
            print!("{}", outcome.solution.to_mse_lines());
            match outcome.solution {
                PipelineSolution::Optimum { .. } => Ok(EXIT_OK),
                PipelineSolution::Unsatisfiable => Ok(EXIT_UNSAT),
            }
        }
        Err(PipelineError::Verification { verdict }) => {
            eprintln!("verification failed: {verdict}");
            Ok(EXIT_VERIFICATION)
        }
        Err(err) => Err(err.into()),
    }
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    use std::io::Write;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    writeln!(file, "{line}")?;
    Ok(())
}

fn cmd_verify(input: &Path, solution: &Path, oracle_limit: u32) -> Result<u8> {
    let inst = read_instance(input)?;
    let text = fs::read_to_string(solution)
        .with_context(|| format!("cannot read {}", solution.display()))?;
    match parse_solution(&text, inst.num_vars)? {
        SolverOutput::Unsatisfiable => {
            if inst.num_vars <= oracle_limit {
                match maxsimp::oracle::brute_force(&inst)? {
                    maxsimp::oracle::OracleResult::Unsat => {
                        println!("PASS (unsatisfiability confirmed by enumeration)");
                        Ok(EXIT_OK)
                    }
                    maxsimp::oracle::OracleResult::Optimum { cost, .. } => {
                        println!("FAIL: claimed unsatisfiable, optimum is {cost}");
                        Ok(EXIT_VERIFICATION)
                    }
                }
            } else {
                bail!(
                    "cannot check an unsatisfiability claim on {} variables",
                    inst.num_vars
                )
            }
        }
        SolverOutput::Solution {
            assignment, cost, ..
        } => {
            let claimed: Cost = match cost {
                Some(o) => o + inst.cost_offset,
                None => match inst.evaluate(&assignment) {
                    maxsimp::instance::Evaluation::Cost(c) => c,
                    maxsimp::instance::Evaluation::HardViolation(_) => 0,
                },
            };
            let verdict = verify_optimal(&inst, &assignment, claimed, oracle_limit);
            println!("{verdict}");
            Ok(if verdict.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFICATION
            })
        }
    }
}

fn cmd_reconstruct(solution: &Path, map: &Path, origin: Option<&Path>) -> Result<u8> {
    let record_text =
        fs::read_to_string(map).with_context(|| format!("cannot read {}", map.display()))?;
    let record = ReconstructionRecord::from_json(&record_text)
        .with_context(|| format!("cannot parse {}", map.display()))?;
    let text = fs::read_to_string(solution)
        .with_context(|| format!("cannot read {}", solution.display()))?;
    match parse_solution(&text, record.simp_num_vars)? {
        SolverOutput::Unsatisfiable => {
            println!("s UNSATISFIABLE");
            Ok(EXIT_UNSAT)
        }
        SolverOutput::Solution {
            assignment, cost, ..
        } => {
            // the witness is authoritative; reported o values are not
            // cross-checked because solvers disagree on whether they include
            // the cost-offset comment
            let lifted = reconstruct(&assignment, &record)?;
            match origin {
                Some(origin_path) => {
                    let origin = read_instance(origin_path)?;
                    match origin.evaluate(&lifted) {
                        maxsimp::instance::Evaluation::Cost(actual) => {
                            println!("s OPTIMUM FOUND");
                            println!("o {actual}");
                            println!("v {}", lifted.to_binary_string());
                            Ok(EXIT_OK)
                        }
                        maxsimp::instance::Evaluation::HardViolation(idx) => {
                            eprintln!(
                                "verification failed: lifted witness violates {} hard clause(s)",
                                idx.len()
                            );
                            Ok(EXIT_VERIFICATION)
                        }
                    }
                }
                None => {
                    if let Some(o) = cost {
                        // assume the MSE convention of offset-free o lines
                        println!("o {}", o + record.cost_offset);
                    }
                    println!("v {}", lifted.to_binary_string());
                    Ok(EXIT_OK)
                }
            }
        }
    }
}

fn cmd_stats(dir: &Path, json: &Path, engine: &EngineFlags) -> Result<u8> {
    let config = engine.to_config()?;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "wcnf"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .wcnf files in {}", dir.display());
    }

    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for path in &paths {
        let origin = read_instance(path)?;
        let (simp, report, gate) = match preprocess_instance(&origin, &config) {
            Preprocessed::Simplified { simp, report, .. } => {
                let gate = if simp.num_vars < origin.num_vars && simp.hard.len() < origin.hard.len()
                {
                    GateDecision::UsedSimplified
                } else {
                    GateDecision::UsedOriginal
                };
                (Some(simp), Some(report), gate)
            }
            Preprocessed::Infeasible => (None, None, GateDecision::UsedOriginal),
            Preprocessed::Unencodable { report } => {
                (None, Some(report), GateDecision::UsedOriginal)
            }
            Preprocessed::Skipped => (None, None, GateDecision::PreprocessSkipped),
        };
        let mut stats = compute_stats(&origin, simp.as_ref(), report.as_ref(), gate);
        stats.instance = path.file_name().map(|n| n.to_string_lossy().into_owned());
        if !config.emit_timings {
            stats.preprocessing_time_seconds = stats.preprocessing_time_seconds.map(|_| 0.0);
        }
        lines.push(stats.to_json_line());
        rows.push(stats);
    }
    for group in aggregate_stats(&rows) {
        lines.push(serde_json::to_string(&group)?);
    }
    fs::write(json, lines.join("\n") + "\n")
        .with_context(|| format!("cannot write {}", json.display()))?;
    println!(
        "wrote {} instance lines + 2 group lines to {}",
        rows.len(),
        json.display()
    );
    Ok(EXIT_OK)
}
