//! Exact reference solvers: an exhaustive enumerator and a branch-and-bound
//! search. Both are built for correctness at verification scale, not speed;
//! they serve as the built-in solving endpoint and as the ground truth for
//! property tests.

use thiserror::Error;

use crate::instance::{Evaluation, WcnfInstance};
use crate::types::{Assignment, Cost};

/// Hard cap on exhaustive enumeration.
pub const BRUTE_FORCE_VAR_LIMIT: u32 = 26;

/// Verdict of an exact solver.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OracleResult {
    Optimum { cost: Cost, witness: Assignment },
    Unsat,
}

impl OracleResult {
    pub fn cost(&self) -> Option<Cost> {
        match self {
            OracleResult::Optimum { cost, .. } => Some(*cost),
            OracleResult::Unsat => None,
        }
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
#[error("instance has {num_vars} variables, brute force is capped at {BRUTE_FORCE_VAR_LIMIT}")]
pub struct TooLarge {
    pub num_vars: u32,
}

#[derive(Error, Debug, PartialEq, Eq)]
#[error("search node budget exhausted without an optimality proof")]
pub struct BudgetExceeded;

/// Enumerates every assignment and returns the minimum cost together with
/// the lexicographically smallest witness among the minimizers (variable 1
/// weighs heaviest, false < true).
pub fn brute_force(inst: &WcnfInstance) -> Result<OracleResult, TooLarge> {
    if inst.num_vars > BRUTE_FORCE_VAR_LIMIT {
        return Err(TooLarge {
            num_vars: inst.num_vars,
        });
    }
    let n = inst.num_vars;
    let mut best: Option<(Cost, Assignment)> = None;
    for mask in 0..1u64 << n {
        let a = Assignment::from_lex_index(mask, n);
        if let Evaluation::Cost(cost) = inst.evaluate(&a) {
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, a));
            }
        }
    }
    Ok(match best {
        Some((cost, witness)) => OracleResult::Optimum { cost, witness },
        None => OracleResult::Unsat,
    })
}

/// Depth-first branch and bound with unit propagation on hard clauses and
/// the falsified-soft-weight lower bound.
///
/// Within `node_budget` search nodes (`None` for unlimited) the result
/// agrees with [`brute_force`] on cost and status; witnesses may differ but
/// always evaluate to the returned cost.
pub fn branch_and_bound(
    inst: &WcnfInstance,
    node_budget: Option<u64>,
) -> Result<OracleResult, BudgetExceeded> {
    let mut search = Search {
        inst,
        values: vec![None; inst.num_vars as usize],
        incumbent: None,
        nodes_left: node_budget.unwrap_or(u64::MAX),
    };
    if inst.has_empty_hard_clause() {
        return Ok(OracleResult::Unsat);
    }
    search.explore()?;
    Ok(match search.incumbent {
        Some((cost, witness)) => OracleResult::Optimum { cost, witness },
        None => OracleResult::Unsat,
    })
}

struct Search<'a> {
    inst: &'a WcnfInstance,
    values: Vec<Option<bool>>,
    incumbent: Option<(Cost, Assignment)>,
    nodes_left: u64,
}

impl Search<'_> {
    fn lit_state(&self, lit: crate::types::Lit) -> Option<bool> {
        self.values[lit.var() as usize - 1].map(|v| lit.eval(v))
    }

    /// Lower bound: offset plus the weight of soft clauses already fully
    /// falsified by the partial assignment.
    fn lower_bound(&self) -> Cost {
        let falsified: Cost = self
            .inst
            .soft
            .iter()
            .filter(|(c, _)| c.into_iter().all(|l| self.lit_state(l) == Some(false)))
            .map(|&(_, w)| Cost::from(w))
            .sum();
        self.inst.cost_offset + falsified
    }

    /// Unit propagation over hard clauses; returns the trail of forced
    /// variables, or `None` on conflict (trail already undone).
    fn propagate(&mut self) -> Option<Vec<u32>> {
        let mut trail = Vec::new();
        loop {
            let mut forced = None;
            for clause in &self.inst.hard {
                let mut unassigned = None;
                let mut satisfied = false;
                let mut open = 0usize;
                for lit in clause {
                    match self.lit_state(lit) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            open += 1;
                            unassigned = Some(lit);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                match (open, unassigned) {
                    (0, _) => {
                        for v in trail {
                            self.values[v as usize - 1] = None;
                        }
                        return None;
                    }
                    (1, Some(lit)) => {
                        forced = Some(lit);
                        break;
                    }
                    _ => {}
                }
            }
            match forced {
                Some(lit) => {
                    self.values[lit.var() as usize - 1] = Some(lit.is_positive());
                    trail.push(lit.var());
                }
                None => return Some(trail),
            }
        }
    }

    fn explore(&mut self) -> Result<(), BudgetExceeded> {
        if self.nodes_left == 0 {
            return Err(BudgetExceeded);
        }
        self.nodes_left -= 1;

        let Some(trail) = self.propagate() else {
            return Ok(());
        };
        let undo = |search: &mut Self| {
            for v in &trail {
                search.values[*v as usize - 1] = None;
            }
        };

        if self
            .incumbent
            .as_ref()
            .is_some_and(|(best, _)| self.lower_bound() >= *best)
        {
            undo(self);
            return Ok(());
        }

        match self.values.iter().position(|v| v.is_none()) {
            None => {
                let assignment =
                    Assignment::from_values(self.values.iter().map(|v| v.unwrap()).collect());
                if let Evaluation::Cost(cost) = self.inst.evaluate(&assignment) {
                    if self.incumbent.as_ref().is_none_or(|(best, _)| cost < *best) {
                        self.incumbent = Some((cost, assignment));
                    }
                }
                undo(self);
                Ok(())
            }
            Some(idx) => {
                // true first: satisfying clauses early reaches cheap
                // incumbents sooner, which tightens the bound
                for value in [true, false] {
                    self.values[idx] = Some(value);
                    let result = self.explore();
                    self.values[idx] = None;
                    if result.is_err() {
                        undo(self);
                        return result;
                    }
                }
                undo(self);
                Ok(())
            }
        }
    }
}
