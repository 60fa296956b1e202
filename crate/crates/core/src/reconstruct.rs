//! Lifting a solution of the re-encoded instance back to the original one,
//! and verifying the lifted witness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::EncodeSession;
use crate::ilp::{IlpModel, VarOrigin};
use crate::instance::{Evaluation, WcnfInstance};
use crate::oracle::{brute_force, OracleResult};
use crate::presolve::{SimplifiedModel, VarDisposition};
use crate::types::{Assignment, Cost, Lit};

pub const RECORD_FORMAT_VERSION: u32 = 1;

/// How one original variable is recovered from a solution of the re-encoded
/// instance.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum VarRecovery {
    /// The value proven during presolve.
    Fixed(bool),
    /// Copy the value of this literal (covers free and simply aggregated
    /// variables).
    Literal(Lit),
    /// Evaluate `constant + sum(coef * lit)`; the result must land in
    /// `{0, 1}`.
    Affine {
        constant: i64,
        terms: Vec<(i64, Lit)>,
    },
}

/// Everything needed to lift a solution, serializable as a sidecar file so
/// solving can happen in a separate process invocation.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ReconstructionRecord {
    pub version: u32,
    pub origin_num_vars: u32,
    /// Variable count of the re-encoded instance, for reading its solution
    /// lines back.
    pub simp_num_vars: u32,
    /// Cost offset of the re-encoded instance.
    pub cost_offset: Cost,
    /// Recovery rule per original variable, index `var - 1`.
    pub entries: Vec<VarRecovery>,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ReconstructError {
    #[error("aggregated variable {var} evaluates to {value}, outside {{0, 1}}")]
    RangeError { var: u32, value: i64 },
    #[error("solution covers {got} variables but the record references variable {needed}")]
    WitnessTooShort { got: u32, needed: u32 },
    #[error("record version {0} is not supported")]
    UnsupportedVersion(u32),
}

impl ReconstructionRecord {
    /// Assembles the record from the variable dispositions and the literal
    /// mapping chosen during encoding.
    pub fn new(
        original_model: &IlpModel,
        simp: &SimplifiedModel,
        session: &EncodeSession,
        origin_num_vars: u32,
        cost_offset: Cost,
    ) -> ReconstructionRecord {
        let mut entries = vec![VarRecovery::Fixed(false); origin_num_vars as usize];
        for var in &original_model.vars {
            let Some(VarOrigin::InputVar(wcnf_var)) = var.origin else {
                continue;
            };
            let slot = &mut entries[wcnf_var as usize - 1];
            *slot = match &simp.var_map.dispositions[var.index] {
                VarDisposition::Fixed(b) => VarRecovery::Fixed(*b),
                VarDisposition::Free | VarDisposition::SimpleAggregated { .. } => {
                    VarRecovery::Literal(
                        session.lit_of_original[var.index].expect("mapped literal"),
                    )
                }
                VarDisposition::MultiAggregated { constant, terms } => VarRecovery::Affine {
                    constant: *constant,
                    terms: terms
                        .iter()
                        .map(|&(c, w)| (c, session.lit_of_original[w].expect("free term literal")))
                        .collect(),
                },
            };
        }
        ReconstructionRecord {
            version: RECORD_FORMAT_VERSION,
            origin_num_vars,
            simp_num_vars: session.num_vars(),
            cost_offset,
            entries,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<ReconstructionRecord, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Lifts a total assignment of the re-encoded instance to a total assignment
/// of the original one by replaying the recovery rules.
pub fn reconstruct(
    simp_sol: &Assignment,
    record: &ReconstructionRecord,
) -> Result<Assignment, ReconstructError> {
    if record.version != RECORD_FORMAT_VERSION {
        return Err(ReconstructError::UnsupportedVersion(record.version));
    }
    let lit_value = |lit: Lit| -> Result<bool, ReconstructError> {
        if lit.var() > simp_sol.num_vars() {
            return Err(ReconstructError::WitnessTooShort {
                got: simp_sol.num_vars(),
                needed: lit.var(),
            });
        }
        Ok(simp_sol.lit_value(lit))
    };
    let mut out = Assignment::all_false(record.origin_num_vars);
    for (i, entry) in record.entries.iter().enumerate() {
        let var = i as u32 + 1;
        let value = match entry {
            VarRecovery::Fixed(b) => *b,
            VarRecovery::Literal(lit) => lit_value(*lit)?,
            VarRecovery::Affine { constant, terms } => {
                let mut sum = *constant;
                for &(c, lit) in terms {
                    sum += c * (lit_value(lit)? as i64);
                }
                match sum {
                    0 => false,
                    1 => true,
                    value => return Err(ReconstructError::RangeError { var, value }),
                }
            }
        };
        out.set(var, value);
    }
    Ok(out)
}

/// Why a verification failed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum VerdictFailure {
    /// Indices of violated hard clauses.
    HardViolation(Vec<usize>),
    /// The witness evaluates to a different cost than claimed.
    CostMismatch { claimed: Cost, actual: Cost },
    /// The exhaustive oracle found a strictly better cost.
    NotOptimal { claimed: Cost, optimal: Cost },
}

/// Outcome of checking a claimed-optimal witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Verdict {
    pub claimed_cost: Cost,
    /// Cost of the witness when it satisfies all hard clauses.
    pub computed_cost: Option<Cost>,
    /// Optimum from the exhaustive oracle, when the instance was small
    /// enough to run it.
    pub oracle_cost: Option<Cost>,
    pub failure: Option<VerdictFailure>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.failure {
            None => match self.oracle_cost {
                Some(c) => write!(f, "PASS (cost {c}, oracle-optimal)"),
                None => write!(
                    f,
                    "PASS (cost {}, feasibility and cost checked)",
                    self.claimed_cost
                ),
            },
            Some(VerdictFailure::HardViolation(idx)) => {
                write!(
                    f,
                    "FAIL: {} hard clause(s) violated (first: {})",
                    idx.len(),
                    idx[0]
                )
            }
            Some(VerdictFailure::CostMismatch { claimed, actual }) => {
                write!(f, "FAIL: claimed cost {claimed}, witness costs {actual}")
            }
            Some(VerdictFailure::NotOptimal { claimed, optimal }) => {
                write!(f, "FAIL: claimed cost {claimed}, optimum is {optimal}")
            }
        }
    }
}

/// Checks a witness against the original instance: hard feasibility, cost
/// agreement with the claim, and, when the instance has at most
/// `oracle_var_limit` variables, optimality against the exhaustive oracle.
pub fn verify_optimal(
    origin: &WcnfInstance,
    witness: &Assignment,
    claimed_cost: Cost,
    oracle_var_limit: u32,
) -> Verdict {
    match origin.evaluate(witness) {
        Evaluation::HardViolation(violated) => Verdict {
            claimed_cost,
            computed_cost: None,
            oracle_cost: None,
            failure: Some(VerdictFailure::HardViolation(violated)),
        },
        Evaluation::Cost(actual) => {
            if actual != claimed_cost {
                return Verdict {
                    claimed_cost,
                    computed_cost: Some(actual),
                    oracle_cost: None,
                    failure: Some(VerdictFailure::CostMismatch {
                        claimed: claimed_cost,
                        actual,
                    }),
                };
            }
            let oracle_cost = if origin.num_vars <= oracle_var_limit {
                match brute_force(origin) {
                    Ok(OracleResult::Optimum { cost, .. }) => Some(cost),
                    _ => None,
                }
            } else {
                None
            };
            let failure = oracle_cost.filter(|&opt| opt != actual).map(|optimal| {
                VerdictFailure::NotOptimal {
                    claimed: claimed_cost,
                    optimal,
                }
            });
            Verdict {
                claimed_cost,
                computed_cost: Some(actual),
                oracle_cost,
                failure,
            }
        }
    }
}
