//! The weighted partial MaxSAT instance type and its cost semantics.

use crate::types::{Assignment, Clause, Cost, Weight};

/// A weighted partial MaxSAT formula.
///
/// The cost of an assignment satisfying all hard clauses is
/// `cost_offset + sum of weights of falsified soft clauses`; assignments
/// violating a hard clause have no cost. `cost_offset` carries cost already
/// committed by upstream transformations and is 0 for freshly parsed
/// instances.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct WcnfInstance {
    pub num_vars: u32,
    pub hard: Vec<Clause>,
    pub soft: Vec<(Clause, Weight)>,
    pub cost_offset: Cost,
}

/// Result of evaluating an assignment against an instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Evaluation {
    /// All hard clauses satisfied; the total cost including the offset.
    Cost(Cost),
    /// Indices into `hard` of the violated clauses.
    HardViolation(Vec<usize>),
}

impl Evaluation {
    pub fn cost(&self) -> Option<Cost> {
        match self {
            Evaluation::Cost(c) => Some(*c),
            Evaluation::HardViolation(_) => None,
        }
    }
}

/// Counters for the semantics-preserving clause cleanup step.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct TautologyCounts {
    pub hard_dropped: usize,
    pub soft_dropped: usize,
}

impl WcnfInstance {
    /// Largest variable index referenced by any clause.
    pub fn max_referenced_var(&self) -> u32 {
        let hard = self.hard.iter().map(Clause::max_var).max().unwrap_or(0);
        let soft = self
            .soft
            .iter()
            .map(|(c, _)| c.max_var())
            .max()
            .unwrap_or(0);
        hard.max(soft)
    }

    /// Sum of all soft weights.
    pub fn soft_weight_total(&self) -> Cost {
        self.soft.iter().map(|&(_, w)| Cost::from(w)).sum()
    }

    pub fn num_clauses(&self) -> usize {
        self.hard.len() + self.soft.len()
    }

    pub fn has_empty_hard_clause(&self) -> bool {
        self.hard.iter().any(Clause::is_empty)
    }

    /// Evaluates `assignment` against the instance.
    ///
    /// Returns the total cost (offset plus falsified soft weight) when every
    /// hard clause is satisfied, and the list of violated hard clause indices
    /// otherwise. The assignment must be total over `1..=num_vars`.
    pub fn evaluate(&self, assignment: &Assignment) -> Evaluation {
        debug_assert!(assignment.num_vars() >= self.num_vars);
        let violated: Vec<usize> = self
            .hard
            .iter()
            .enumerate()
            .filter(|(_, c)| !assignment.satisfies(c))
            .map(|(i, _)| i)
            .collect();
        if !violated.is_empty() {
            return Evaluation::HardViolation(violated);
        }
        let falsified: Cost = self
            .soft
            .iter()
            .filter(|(c, _)| !assignment.satisfies(c))
            .map(|&(_, w)| Cost::from(w))
            .sum();
        Evaluation::Cost(self.cost_offset + falsified)
    }

    /// Removes tautological clauses: a tautological hard clause is always
    /// satisfied, a tautological soft clause never pays its weight, so both
    /// can go without changing any assignment's cost. Duplicate literals
    /// within surviving clauses are also dropped. Variable numbering is
    /// untouched, so assignments transfer verbatim.
    pub fn without_tautologies(&self) -> (WcnfInstance, TautologyCounts) {
        let mut counts = TautologyCounts::default();
        let mut hard = Vec::with_capacity(self.hard.len());
        for c in &self.hard {
            match c.normalized() {
                Some(n) => hard.push(n),
                None => counts.hard_dropped += 1,
            }
        }
        let mut soft = Vec::with_capacity(self.soft.len());
        for (c, w) in &self.soft {
            match c.normalized() {
                Some(n) => soft.push((n, *w)),
                None => counts.soft_dropped += 1,
            }
        }
        let inst = WcnfInstance {
            num_vars: self.num_vars,
            hard,
            soft,
            cost_offset: self.cost_offset,
        };
        (inst, counts)
    }
}
