//! End-to-end orchestration: preprocess, gate, solve, reconstruct, verify,
//! report.
//!
//! The preprocessing stage turns the input into a 0-1 model, presolves it and
//! re-encodes the survivors. The solving stage picks the re-encoded instance
//! only when the gate accepts it (by default: strictly fewer variables and
//! strictly fewer hard clauses than the original), and runs either the
//! built-in exact solver or an external command. The reconstruction stage
//! lifts the solution back and verifies it before anything is reported.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::dimacs::{parse_solution, write_wcnf, Dialect, SolutionParseError, SolverOutput};
use crate::encode::{encode_model, EncodeConfig, EncodeError};
use crate::ilp::build_ilp;
use crate::instance::WcnfInstance;
use crate::oracle::{branch_and_bound, OracleResult};
use crate::presolve::{presolve, PresolveConfig, PresolveReport};
use crate::reconstruct::{
    reconstruct, verify_optimal, ReconstructError, ReconstructionRecord, Verdict,
};
use crate::types::{Assignment, Cost};

/// When the re-encoded instance replaces the original.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum GateMode {
    /// Strictly fewer variables and strictly fewer hard clauses.
    #[default]
    Paper,
    Always,
    Never,
}

/// Which instance the solving stage received.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GateDecision {
    UsedSimplified,
    UsedOriginal,
    PreprocessSkipped,
}

/// Instances beyond these limits skip preprocessing entirely.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SizeGuard {
    pub max_vars: u32,
    pub max_clauses: usize,
}

impl Default for SizeGuard {
    fn default() -> SizeGuard {
        SizeGuard {
            max_vars: 200_000,
            max_clauses: 1_000_000,
        }
    }
}

/// The downstream MaxSAT solver.
#[derive(Clone, PartialEq, Debug, Default)]
pub enum SolverSpec {
    /// In-process exact branch and bound.
    #[default]
    Builtin,
    /// Command template with `{input}` and optional `{timeout}`
    /// placeholders, run through the shell.
    External {
        command: String,
        time_limit_secs: Option<f64>,
    },
}

#[derive(Clone, PartialEq, Debug)]
pub struct PipelineConfig {
    pub presolve: PresolveConfig,
    pub encode: EncodeConfig,
    pub gate: GateMode,
    pub solver: SolverSpec,
    pub size_guard: SizeGuard,
    /// Instances at most this large get an exhaustive optimality
    /// double-check during verification.
    pub oracle_var_limit: u32,
    /// Report wall-clock times in the stats. Off, the timing fields are
    /// zero so repeated runs produce byte-identical reports.
    pub emit_timings: bool,
    /// Dialect for emitted WCNF files.
    pub output_dialect: Dialect,
    /// Where to persist the re-encoded instance and the reconstruction
    /// record, when requested.
    pub simp_out: Option<PathBuf>,
    pub record_out: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new() -> PipelineConfig {
        PipelineConfig {
            presolve: PresolveConfig::default(),
            encode: EncodeConfig::default(),
            gate: GateMode::Paper,
            solver: SolverSpec::Builtin,
            size_guard: SizeGuard::default(),
            oracle_var_limit: 16,
            emit_timings: true,
            output_dialect: Dialect::Mse22,
            simp_out: None,
            record_out: None,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig::new()
    }
}

/// Flat per-run statistics, one JSON object per pipeline run. Field names
/// follow the reporting convention: negative deltas mean the re-encoded
/// instance shrank.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub origin_vars: u32,
    pub origin_hard: usize,
    pub origin_soft: usize,
    pub origin_soft_weight_total: Cost,
    pub simp_vars: Option<u32>,
    pub simp_hard: Option<usize>,
    pub simp_soft: Option<usize>,
    pub simp_soft_weight_total: Option<Cost>,
    pub delta_vars_pct: Option<f64>,
    pub delta_clauses_pct: Option<f64>,
    pub fixed_vars_rate: Option<f64>,
    pub aggr_vars_rate: Option<f64>,
    pub simple_aggr_ratio: Option<f64>,
    pub preprocessing_time_seconds: Option<f64>,
    pub gate_decision: GateDecision,
    pub solve_time_seconds: Option<f64>,
    pub final_cost: Option<Cost>,
    pub verified: bool,
}

impl RunStats {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

/// Outcome of preprocessing one instance.
#[derive(Clone, PartialEq, Debug)]
pub enum Preprocessed {
    Simplified {
        simp: WcnfInstance,
        record: ReconstructionRecord,
        report: PresolveReport,
    },
    /// Presolve proved the hard clauses unsatisfiable.
    Infeasible,
    /// The simplified model contains a constraint with no translation rule;
    /// the original instance must be solved instead.
    Unencodable { report: PresolveReport },
    /// The instance exceeds the size guard.
    Skipped,
}

/// Stage 1: model, presolve, re-encode. Tautological clauses are dropped up
/// front (they never change any assignment's cost).
pub fn preprocess_instance(origin: &WcnfInstance, config: &PipelineConfig) -> Preprocessed {
    if origin.num_vars > config.size_guard.max_vars
        || origin.num_clauses() > config.size_guard.max_clauses
    {
        return Preprocessed::Skipped;
    }
    let (clean, _) = origin.without_tautologies();
    let Ok(model) = build_ilp(&clean) else {
        return Preprocessed::Infeasible; // empty hard clause
    };
    let Ok(simp) = presolve(&model, &config.presolve) else {
        return Preprocessed::Infeasible;
    };
    match encode_model(&simp, origin.cost_offset, &config.encode) {
        Ok((simp_inst, session)) => {
            let record = ReconstructionRecord::new(
                &model,
                &simp,
                &session,
                origin.num_vars,
                simp_inst.cost_offset,
            );
            Preprocessed::Simplified {
                simp: simp_inst,
                record,
                report: simp.report,
            }
        }
        Err(EncodeError::Unencodable(_)) => Preprocessed::Unencodable {
            report: simp.report,
        },
        // an infeasible row surviving presolve still means UNSAT
        Err(EncodeError::TriviallyFalse) | Err(EncodeError::EmptyConstraint) => {
            Preprocessed::Infeasible
        }
        Err(EncodeError::NegativeCostOffset) => {
            unreachable!("cost offset algebra violated by a pipeline-built model")
        }
    }
}

/// Table-style statistics from the original and (optionally) re-encoded
/// instance. Deltas are percentages of the original counts; clause deltas
/// count hard and soft clauses together.
pub fn compute_stats(
    origin: &WcnfInstance,
    simp: Option<&WcnfInstance>,
    report: Option<&PresolveReport>,
    gate_decision: GateDecision,
) -> RunStats {
    let pct = |new: f64, old: f64| {
        if old == 0.0 {
            None
        } else {
            Some((new - old) / old * 100.0)
        }
    };
    RunStats {
        instance: None,
        origin_vars: origin.num_vars,
        origin_hard: origin.hard.len(),
        origin_soft: origin.soft.len(),
        origin_soft_weight_total: origin.soft_weight_total(),
        simp_vars: simp.map(|s| s.num_vars),
        simp_hard: simp.map(|s| s.hard.len()),
        simp_soft: simp.map(|s| s.soft.len()),
        simp_soft_weight_total: simp.map(WcnfInstance::soft_weight_total),
        delta_vars_pct: simp.and_then(|s| pct(f64::from(s.num_vars), f64::from(origin.num_vars))),
        delta_clauses_pct: simp
            .and_then(|s| pct(s.num_clauses() as f64, origin.num_clauses() as f64)),
        fixed_vars_rate: report.map(PresolveReport::fixed_vars_rate),
        aggr_vars_rate: report.map(PresolveReport::aggr_vars_rate),
        simple_aggr_ratio: report.map(PresolveReport::simple_aggr_ratio),
        preprocessing_time_seconds: report.map(|r| r.preprocessing_seconds),
        gate_decision,
        solve_time_seconds: None,
        final_cost: None,
        verified: false,
    }
}

/// The reported solution, always stated for the original instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PipelineSolution {
    Optimum { cost: Cost, witness: Assignment },
    Unsatisfiable,
}

impl PipelineSolution {
    /// MaxSAT-evaluation output: `s`, `o` and binary `v` lines.
    pub fn to_mse_lines(&self) -> String {
        match self {
            PipelineSolution::Optimum { cost, witness } => {
                format!(
                    "s OPTIMUM FOUND\no {cost}\nv {}\n",
                    witness.to_binary_string()
                )
            }
            PipelineSolution::Unsatisfiable => "s UNSATISFIABLE\n".into(),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct PipelineOutcome {
    pub solution: PipelineSolution,
    pub stats: RunStats,
}

#[derive(Error, Debug)]
pub enum SolverFailure {
    #[error("external solver timed out after {0:.1}s")]
    Timeout(f64),
    #[error("external solver exited with status {code:?} and no status line")]
    NonzeroExit { code: Option<i32> },
    #[error("solver reported a solution without claiming optimality")]
    NotOptimal,
    #[error("builtin solver exhausted its node budget")]
    Budget,
    #[error("cannot run solver: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("unusable solver output: {0}")]
    Output(#[from] SolutionParseError),
}

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error(transparent)]
    Solver(#[from] SolverFailure),
    #[error("verification failed: {verdict}")]
    Verification { verdict: Box<Verdict> },
    #[error("reconstruction failed: {0}")]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runs the three stages on a parsed instance and returns the verified
/// solution plus run statistics. The solution always refers to the original
/// instance; a lifted witness that fails verification is an error, never an
/// output.
pub fn run_pipeline(
    origin: &WcnfInstance,
    config: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let prep = preprocess_instance(origin, config);

    if let Preprocessed::Simplified { simp, record, .. } = &prep {
        if let Some(path) = &config.simp_out {
            std::fs::write(path, write_wcnf(simp, config.output_dialect))?;
        }
        if let Some(path) = &config.record_out {
            std::fs::write(path, record.to_json())?;
        }
    }

    let (gate_decision, bundle) = match prep {
        Preprocessed::Skipped => (GateDecision::PreprocessSkipped, None),
        Preprocessed::Infeasible => {
            let mut stats = compute_stats(origin, None, None, GateDecision::UsedOriginal);
            zero_timings(&mut stats, config);
            return Ok(PipelineOutcome {
                solution: PipelineSolution::Unsatisfiable,
                stats,
            });
        }
        Preprocessed::Unencodable { report } => (GateDecision::UsedOriginal, Some((None, report))),
        Preprocessed::Simplified {
            simp,
            record,
            report,
        } => {
            let accept = match config.gate {
                GateMode::Paper => {
                    simp.num_vars < origin.num_vars && simp.hard.len() < origin.hard.len()
                }
                GateMode::Always => true,
                GateMode::Never => false,
            };
            let decision = if accept {
                GateDecision::UsedSimplified
            } else {
                GateDecision::UsedOriginal
            };
            (decision, Some((Some((simp, record)), report)))
        }
    };

    let (simp_pair, report) = match bundle {
        Some((pair, report)) => (pair, Some(report)),
        None => (None, None),
    };
    let simp_inst = simp_pair.as_ref().map(|(s, _)| s);

    let solve_start = Instant::now();
    let (solution, verified) = if gate_decision == GateDecision::UsedSimplified {
        let (simp, record) = simp_pair
            .as_ref()
            .expect("gate accepted a simplified instance");
        match solve_instance(simp, config)? {
            Solved::Unsat => (PipelineSolution::Unsatisfiable, false),
            Solved::Optimum { cost, witness } => {
                let lifted = reconstruct(&witness, record)?;
                let verdict = verify_optimal(origin, &lifted, cost, config.oracle_var_limit);
                if !verdict.passed() {
                    return Err(PipelineError::Verification {
                        verdict: Box::new(verdict),
                    });
                }
                (
                    PipelineSolution::Optimum {
                        cost,
                        witness: lifted,
                    },
                    true,
                )
            }
        }
    } else {
        match solve_instance(origin, config)? {
            Solved::Unsat => (PipelineSolution::Unsatisfiable, false),
            Solved::Optimum { cost, witness } => {
                let verdict = verify_optimal(origin, &witness, cost, config.oracle_var_limit);
                if !verdict.passed() {
                    return Err(PipelineError::Verification {
                        verdict: Box::new(verdict),
                    });
                }
                (PipelineSolution::Optimum { cost, witness }, true)
            }
        }
    };
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    let mut stats = compute_stats(origin, simp_inst, report.as_ref(), gate_decision);
    stats.solve_time_seconds = Some(solve_seconds);
    stats.final_cost = match &solution {
        PipelineSolution::Optimum { cost, .. } => Some(*cost),
        PipelineSolution::Unsatisfiable => None,
    };
    stats.verified = verified;
    zero_timings(&mut stats, config);
    Ok(PipelineOutcome { solution, stats })
}

fn zero_timings(stats: &mut RunStats, config: &PipelineConfig) {
    if !config.emit_timings {
        stats.preprocessing_time_seconds = stats.preprocessing_time_seconds.map(|_| 0.0);
        stats.solve_time_seconds = stats.solve_time_seconds.map(|_| 0.0);
    }
}

enum Solved {
    Optimum { cost: Cost, witness: Assignment },
    Unsat,
}

/// Solves one instance with the configured solver. Costs are absolute: the
/// instance's cost offset is included (external solvers report offset-free
/// `o` values, which are adjusted here).
fn solve_instance(inst: &WcnfInstance, config: &PipelineConfig) -> Result<Solved, SolverFailure> {
    match &config.solver {
        SolverSpec::Builtin => match branch_and_bound(inst, None) {
            Ok(OracleResult::Optimum { cost, witness }) => Ok(Solved::Optimum { cost, witness }),
            Ok(OracleResult::Unsat) => Ok(Solved::Unsat),
            Err(_) => Err(SolverFailure::Budget),
        },
        SolverSpec::External {
            command,
            time_limit_secs,
        } => {
            let scratch = tempfile::Builder::new()
                .prefix("maxsimp-")
                .suffix(".wcnf")
                .tempfile()
                .map_err(SolverFailure::Spawn)?;
            std::fs::write(scratch.path(), write_wcnf(inst, config.output_dialect))
                .map_err(SolverFailure::Spawn)?;
            let output = invoke_external_solver(command, scratch.path(), *time_limit_secs)?;
            match parse_solution(&output, inst.num_vars)? {
                SolverOutput::Unsatisfiable => Ok(Solved::Unsat),
                SolverOutput::Solution { optimal: false, .. } => Err(SolverFailure::NotOptimal),
                SolverOutput::Solution {
                    assignment,
                    cost,
                    optimal: true,
                } => {
                    let cost = cost.map(|c| c + inst.cost_offset);
                    // the witness is authoritative; a reported cost that
                    // disagrees with it surfaces later as a verification
                    // failure, so pass the evaluated cost along
                    let evaluated = inst.evaluate(&assignment).cost();
                    let claimed = cost.or(evaluated).unwrap_or(0);
                    Ok(Solved::Optimum {
                        cost: claimed,
                        witness: assignment,
                    })
                }
            }
        }
    }
}

/// Spawns `command` through the shell with `{input}` (and `{timeout}`, in
/// whole seconds) substituted, captures stdout, and enforces the wall-clock
/// limit by polling; on expiry the process is killed.
pub fn invoke_external_solver(
    command: &str,
    input: &Path,
    time_limit_secs: Option<f64>,
) -> Result<String, SolverFailure> {
    let mut cmd_line = command.replace("{input}", &input.display().to_string());
    if let Some(limit) = time_limit_secs {
        cmd_line = cmd_line.replace("{timeout}", &format!("{}", limit.ceil().max(1.0) as u64));
    }

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd_line)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(SolverFailure::Spawn)?;

    let mut stdout = child.stdout.take().expect("stdout piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });

    let deadline = time_limit_secs.map(|s| Instant::now() + Duration::from_secs_f64(s));
    let status = loop {
        match child.try_wait().map_err(SolverFailure::Spawn)? {
            Some(status) => break status,
            None => {
                if let Some(deadline) = deadline {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        let _ = reader.join();
                        return Err(SolverFailure::Timeout(time_limit_secs.unwrap_or(0.0)));
                    }
                }
                std::thread::sleep(Duration::from_millis(5));
            }
        }
    };
    let output = String::from_utf8_lossy(&reader.join().unwrap_or_default()).into_owned();

    let has_status_line = output.lines().any(|l| l.starts_with("s "));
    if !status.success() && !has_status_line {
        return Err(SolverFailure::NonzeroExit {
            code: status.code(),
        });
    }
    Ok(output)
}

/// Mean metrics over a group of runs, mirroring the two-group reporting
/// structure (instances the gate accepted vs the rest).
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupAggregate {
    pub group: String,
    pub instances: usize,
    pub delta_vars_pct: Option<f64>,
    pub delta_clauses_pct: Option<f64>,
    pub fixed_vars_rate: Option<f64>,
    pub aggr_vars_rate: Option<f64>,
    pub simple_aggr_ratio: Option<f64>,
    pub preprocessing_time_seconds: Option<f64>,
}

/// Aggregates per-run stats into the smaller/bigger groups by gate decision;
/// runs that skipped preprocessing are not listed.
pub fn aggregate_stats(rows: &[RunStats]) -> Vec<GroupAggregate> {
    let group_of = |decision: GateDecision, name: &str| -> GroupAggregate {
        let members: Vec<&RunStats> = rows
            .iter()
            .filter(|r| r.gate_decision == decision)
            .collect();
        let mean = |f: fn(&RunStats) -> Option<f64>| -> Option<f64> {
            let vals: Vec<f64> = members.iter().filter_map(|r| f(r)).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        };
        GroupAggregate {
            group: name.into(),
            instances: members.len(),
            delta_vars_pct: mean(|r| r.delta_vars_pct),
            delta_clauses_pct: mean(|r| r.delta_clauses_pct),
            fixed_vars_rate: mean(|r| r.fixed_vars_rate),
            aggr_vars_rate: mean(|r| r.aggr_vars_rate),
            simple_aggr_ratio: mean(|r| r.simple_aggr_ratio),
            preprocessing_time_seconds: mean(|r| r.preprocessing_time_seconds),
        }
    };
    vec![
        group_of(GateDecision::UsedSimplified, "smaller"),
        group_of(GateDecision::UsedOriginal, "bigger"),
    ]
}
