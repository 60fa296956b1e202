//! Presolve engine for 0-1 models: variable fixing (activity-based and by
//! probing), variable aggregation, and redundant constraint elimination.
//!
//! The engine runs rounds of bound propagation, aggregation detection,
//! substitution, redundancy removal, duplicate-row merging and probing until
//! a fixpoint or the round limit. Every step scans variables and rows in
//! ascending order, so identical inputs produce identical outputs.

use std::collections::HashMap;
use std::time::Instant;

use thiserror::Error;

use crate::ilp::{classify_constraint, IlpModel, IlpVar, LinConstraint, Objective, VarKind};

/// The model admits no feasible point, i.e. the source MaxSAT instance has
/// unsatisfiable hard clauses.
#[derive(Error, Debug, Clone, Copy, PartialEq, Eq)]
#[error("model proven infeasible")]
pub struct Infeasible;

/// What became of one model variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum VarDisposition {
    /// Still present in the simplified model.
    Free,
    /// Proven to take this value in every feasible point.
    Fixed(bool),
    /// Equals the target variable (`negated: false`) or its complement
    /// (`negated: true`).
    SimpleAggregated { target: usize, negated: bool },
    /// Equals `constant + sum(coef * var)` over free variables.
    MultiAggregated {
        constant: i64,
        terms: Vec<(i64, usize)>,
    },
}

impl VarDisposition {
    pub fn is_free(&self) -> bool {
        matches!(self, VarDisposition::Free)
    }

    pub fn is_aggregated(&self) -> bool {
        matches!(
            self,
            VarDisposition::SimpleAggregated { .. } | VarDisposition::MultiAggregated { .. }
        )
    }
}

/// Canonical per-variable dispositions plus the renumbering of surviving
/// variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VarMap {
    pub dispositions: Vec<VarDisposition>,
    /// For each original variable, its contiguous index in the simplified
    /// model (free variables only).
    pub new_index_of: Vec<Option<usize>>,
}

impl VarMap {
    /// Canonicalizes raw dispositions and numbers the free survivors.
    ///
    /// Path-compresses aggregation chains: every `SimpleAggregated` points
    /// directly at a free or fixed terminal with the composed polarity,
    /// aggregation onto a fixed terminal becomes `Fixed`, and
    /// `MultiAggregated` terms are rewritten to reference free variables
    /// only. A chain cycle of even composed negation merges onto its
    /// lowest-index variable; a variable aggregated to its own negation is
    /// infeasible.
    pub fn canonicalized(dispositions: Vec<VarDisposition>) -> Result<VarMap, Infeasible> {
        let dispositions = canonicalize(dispositions)?;
        let mut new_index_of = vec![None; dispositions.len()];
        let mut next = 0usize;
        for (i, d) in dispositions.iter().enumerate() {
            if d.is_free() {
                new_index_of[i] = Some(next);
                next += 1;
            }
        }
        Ok(VarMap {
            dispositions,
            new_index_of,
        })
    }

    pub fn free_count(&self) -> usize {
        self.new_index_of.iter().flatten().count()
    }
}

/// Knobs for the presolve loop.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PresolveConfig {
    /// Upper bound on presolve rounds.
    pub max_rounds: usize,
    /// Total number of variables that may be probed; 0 disables probing.
    pub probe_limit: usize,
    /// Allow multi-variable aggregations from long equality rows.
    pub multi_aggregation: bool,
}

impl Default for PresolveConfig {
    fn default() -> PresolveConfig {
        PresolveConfig {
            max_rounds: 10,
            probe_limit: 10_000,
            multi_aggregation: true,
        }
    }
}

/// Reduction counters and rates. Rates are taken over decision variables
/// only, mirroring how instance-level statistics are reported.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct PresolveReport {
    pub decision_vars: usize,
    pub fixed_decision_vars: usize,
    pub aggregated_decision_vars: usize,
    pub simple_aggregated_decision_vars: usize,
    pub removed_constraints: usize,
    pub rounds_executed: usize,
    pub preprocessing_seconds: f64,
}

impl PresolveReport {
    pub fn fixed_vars_rate(&self) -> f64 {
        ratio(self.fixed_decision_vars, self.decision_vars, 0.0)
    }

    pub fn aggr_vars_rate(&self) -> f64 {
        ratio(self.aggregated_decision_vars, self.decision_vars, 0.0)
    }

    /// Simple aggregations over all aggregations; 1 when nothing aggregated.
    pub fn simple_aggr_ratio(&self) -> f64 {
        ratio(
            self.simple_aggregated_decision_vars,
            self.aggregated_decision_vars,
            1.0,
        )
    }
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

/// Output of a presolve run.
#[derive(Clone, PartialEq, Debug)]
pub struct SimplifiedModel {
    /// The surviving model over contiguously renumbered free variables.
    pub model: IlpModel,
    pub var_map: VarMap,
    /// Objective value contributed by eliminated variables: the optimum of
    /// the input model equals this delta plus the optimum of `model`.
    pub objective_offset_delta: i128,
    pub report: PresolveReport,
}

/// Result of probing one variable.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ProbeResult {
    /// Variables forced to the same value in both branches (includes the
    /// probed variable itself when one branch contradicts).
    pub fixings: Vec<(usize, bool)>,
    /// `(var, target, negated)` relations observed across the two branches.
    pub aggregations: Vec<(usize, usize, bool)>,
}

impl ProbeResult {
    pub fn is_none(&self) -> bool {
        self.fixings.is_empty() && self.aggregations.is_empty()
    }
}

/// Tightens bounds to the propagation fixpoint, returning the variables that
/// became fixed. For every row, if assigning a variable one of its values
/// would push the row's activity outside `[lhs, rhs]` even with all other
/// variables at their most helpful bounds, that value is removed.
pub fn propagate_bounds(
    constraints: &[LinConstraint],
    bounds: &mut [(i64, i64)],
) -> Result<Vec<(usize, bool)>, Infeasible> {
    let mut fixed = Vec::new();
    loop {
        let mut changed = false;
        for c in constraints {
            let mut min_act = c.min_activity(bounds);
            let mut max_act = c.max_activity(bounds);
            if c.lhs.is_some_and(|l| max_act < i128::from(l)) {
                return Err(Infeasible);
            }
            if c.rhs.is_some_and(|r| min_act > i128::from(r)) {
                return Err(Infeasible);
            }
            for &(coef, v) in &c.terms {
                let (lo, hi) = bounds[v];
                if lo == hi {
                    continue;
                }
                let contrib_min = i128::from(coef) * i128::from(if coef > 0 { lo } else { hi });
                let contrib_max = i128::from(coef) * i128::from(if coef > 0 { hi } else { lo });
                let others_min = min_act - contrib_min;
                let others_max = max_act - contrib_max;
                let feasible = |value: i64| {
                    let contrib = i128::from(coef) * i128::from(value);
                    c.rhs.is_none_or(|r| others_min + contrib <= i128::from(r))
                        && c.lhs.is_none_or(|l| others_max + contrib >= i128::from(l))
                };
                let value = match (feasible(0), feasible(1)) {
                    (false, false) => return Err(Infeasible),
                    (true, false) => 0,
                    (false, true) => 1,
                    (true, true) => continue,
                };
                bounds[v] = (value, value);
                fixed.push((v, value == 1));
                changed = true;
                let contrib = i128::from(coef) * i128::from(value);
                min_act = others_min + contrib;
                max_act = others_max + contrib;
            }
        }
        if !changed {
            return Ok(fixed);
        }
    }
}

/// Probes variable `v`: tentatively assigns it 0 and 1, propagates each
/// branch to its fixpoint on a scratch copy, and compares the implied
/// fixings. A contradicting branch fixes `v` to the other value; a variable
/// fixed to the same value in both branches is fixed outright; a variable
/// fixed to opposite values mirrors `v` or its negation. The input state is
/// never modified.
pub fn probe_variable(
    constraints: &[LinConstraint],
    bounds: &[(i64, i64)],
    v: usize,
) -> Result<ProbeResult, Infeasible> {
    debug_assert!(
        bounds[v].0 < bounds[v].1,
        "probing requires an unfixed variable"
    );
    let branch = |value: i64| -> Result<Vec<(usize, bool)>, Infeasible> {
        let mut scratch = bounds.to_vec();
        scratch[v] = (value, value);
        propagate_bounds(constraints, &mut scratch)
    };
    let mut result = ProbeResult::default();
    match (branch(0), branch(1)) {
        (Err(Infeasible), Err(Infeasible)) => return Err(Infeasible),
        (Err(Infeasible), Ok(fixed1)) => {
            result.fixings.push((v, true));
            result.fixings.extend(fixed1);
        }
        (Ok(fixed0), Err(Infeasible)) => {
            result.fixings.push((v, false));
            result.fixings.extend(fixed0);
        }
        (Ok(fixed0), Ok(fixed1)) => {
            let map0: HashMap<usize, bool> = fixed0.into_iter().collect();
            let mut pairs: Vec<(usize, bool)> = fixed1.into_iter().collect();
            pairs.sort_unstable();
            for (w, val1) in pairs {
                match map0.get(&w) {
                    Some(&val0) if val0 == val1 => result.fixings.push((w, val1)),
                    Some(&val0) => {
                        // val0 = a under v=0, val1 = 1-a under v=1:
                        // a=0 gives w = v, a=1 gives w = 1-v
                        debug_assert!(val0 != val1);
                        result.aggregations.push((w, v, val0));
                    }
                    None => {}
                }
            }
        }
    }
    Ok(result)
}

/// Runs the presolve loop on a model.
///
/// Returns the simplified model over renumbered free variables together with
/// the canonical variable map, or [`Infeasible`] when propagation proves the
/// model (and hence the source instance's hard clauses) unsatisfiable.
/// Deterministic for a fixed `(model, config)` pair.
pub fn presolve(model: &IlpModel, config: &PresolveConfig) -> Result<SimplifiedModel, Infeasible> {
    let start = Instant::now();
    let mut engine = Engine::new(model, config);
    let mut rounds = 0usize;
    let mut size = engine.size_metric();
    while rounds < config.max_rounds {
        rounds += 1;
        engine.round()?;
        let new_size = engine.size_metric();
        if new_size >= size {
            break;
        }
        size = new_size;
    }
    engine.sync_fixed();
    engine.substitute()?;
    engine.remove_redundant();
    engine.finish(model, rounds, start.elapsed().as_secs_f64())
}

struct Engine {
    bounds: Vec<(i64, i64)>,
    dispositions: Vec<VarDisposition>,
    constraints: Vec<LinConstraint>,
    objective: Objective,
    multi_aggregation: bool,
    probe_budget: usize,
    removed_rows: usize,
}

impl Engine {
    fn new(model: &IlpModel, config: &PresolveConfig) -> Engine {
        Engine {
            bounds: model.bounds(),
            dispositions: vec![VarDisposition::Free; model.vars.len()],
            constraints: model.constraints.clone(),
            objective: model.objective.clone(),
            multi_aggregation: config.multi_aggregation,
            probe_budget: config.probe_limit,
            removed_rows: 0,
        }
    }

    fn size_metric(&self) -> usize {
        let free = self
            .dispositions
            .iter()
            .zip(&self.bounds)
            .filter(|(d, (lo, hi))| d.is_free() && lo < hi)
            .count();
        free + self.constraints.len()
    }

    /// One presolve round: propagate, fix, substitute, aggregate,
    /// substitute, drop redundant rows, merge duplicates, probe.
    fn round(&mut self) -> Result<(), Infeasible> {
        propagate_bounds(&self.constraints, &mut self.bounds)?;
        self.sync_fixed();
        self.substitute()?;
        self.detect_aggregations()?;
        self.substitute()?;
        self.remove_redundant();
        self.deduplicate()?;
        self.probe()?;
        Ok(())
    }

    /// Turns bound-fixed variables into `Fixed` dispositions.
    fn sync_fixed(&mut self) {
        for (v, d) in self.dispositions.iter_mut().enumerate() {
            let (lo, hi) = self.bounds[v];
            if d.is_free() && lo == hi {
                *d = VarDisposition::Fixed(lo == 1);
            }
        }
    }

    /// Replaces every occurrence of a non-free variable in rows and the
    /// objective: fixed values fold into the sides, simple aggregations
    /// rewrite onto the representative, multi aggregations expand into their
    /// defining combination. Rows reduced to zero terms are checked and
    /// dropped.
    fn substitute(&mut self) -> Result<(), Infeasible> {
        let needs_rewrite = |terms: &[(i64, usize)], disp: &[VarDisposition]| {
            terms.iter().any(|&(_, v)| !disp[v].is_free())
        };

        let mut rows = std::mem::take(&mut self.constraints);
        let mut kept = Vec::with_capacity(rows.len());
        for row in rows.drain(..) {
            if !needs_rewrite(&row.terms, &self.dispositions) {
                kept.push(row);
                continue;
            }
            let (terms, shift) = self.rewrite_terms(&row.terms);
            let lhs = row.lhs.map(|l| checked_i64(i128::from(l) - shift));
            let rhs = row.rhs.map(|r| checked_i64(i128::from(r) - shift));
            let mut rewritten = LinConstraint::new(terms, lhs, rhs);
            if rewritten.terms.is_empty() {
                if lhs.is_some_and(|l| l > 0) || rhs.is_some_and(|r| r < 0) {
                    return Err(Infeasible);
                }
                self.removed_rows += 1;
                continue;
            }
            rewritten.class = row.class;
            kept.push(classify_constraint(rewritten));
        }
        self.constraints = kept;

        if needs_rewrite(&self.objective.terms, &self.dispositions) {
            let (terms, shift) = self.rewrite_terms(&self.objective.terms);
            self.objective.terms = terms;
            self.objective.offset += shift;
        }
        Ok(())
    }

    /// Expands non-free variables in a term list; returns the merged terms
    /// and the constant that moved out of them.
    fn rewrite_terms(&self, terms: &[(i64, usize)]) -> (Vec<(i64, usize)>, i128) {
        let mut out: Vec<(i64, usize)> = Vec::with_capacity(terms.len());
        let mut shift: i128 = 0;
        for &(coef, v) in terms {
            match &self.dispositions[v] {
                VarDisposition::Free => out.push((coef, v)),
                VarDisposition::Fixed(b) => shift += i128::from(coef) * i128::from(*b as i64),
                VarDisposition::SimpleAggregated {
                    target,
                    negated: false,
                } => {
                    out.push((coef, *target));
                }
                VarDisposition::SimpleAggregated {
                    target,
                    negated: true,
                } => {
                    // coef * (1 - target)
                    shift += i128::from(coef);
                    out.push((-coef, *target));
                }
                VarDisposition::MultiAggregated {
                    constant,
                    terms: inner,
                } => {
                    shift += i128::from(coef) * i128::from(*constant);
                    for &(ci, vi) in inner {
                        out.push((checked_i64(i128::from(coef) * i128::from(ci)), vi));
                    }
                }
            }
        }
        (out, shift)
    }

    /// Harvests aggregations from equality rows over free variables,
    /// substituting after each one so later rows see the reduced model.
    ///
    /// A two-term row `a*y_i + b*y_j = k` with unit coefficients whose
    /// solution reads `y_j = y_i` or `y_j = 1 - y_i` aggregates the
    /// higher-index variable onto the lower one (other right-hand sides are
    /// fixings or infeasibilities, which bound propagation handles). Longer
    /// equalities pivot on their highest-index unit-coefficient variable and
    /// become multi aggregations; the consumed row is replaced by the pivot's
    /// 0-1 range over the remaining combination, which preserves the
    /// eliminated domain restriction.
    fn detect_aggregations(&mut self) -> Result<(), Infeasible> {
        while self.detect_one_aggregation() {
            self.substitute()?;
        }
        Ok(())
    }

    fn detect_one_aggregation(&mut self) -> bool {
        for idx in 0..self.constraints.len() {
            let row = &self.constraints[idx];
            let Some(k) = row.equality_value() else {
                continue;
            };
            if row.terms.len() < 2
                || row.terms.iter().any(|&(_, v)| {
                    !self.dispositions[v].is_free() || self.bounds[v].0 == self.bounds[v].1
                })
            {
                continue;
            }

            if let [(a, vi), (b, vj)] = row.terms[..] {
                if a.abs() == 1 && b.abs() == 1 {
                    // y_j = b*k - a*b*y_i
                    let c0 = b * k;
                    let c1 = -a * b;
                    let negated = match (c0, c1) {
                        (0, 1) => false,
                        (1, -1) => true,
                        _ => continue, // forcing or infeasible shape
                    };
                    self.dispositions[vj] = VarDisposition::SimpleAggregated {
                        target: vi,
                        negated,
                    };
                    self.constraints.remove(idx);
                    self.removed_rows += 1;
                    return true;
                }
            }

            if !self.multi_aggregation {
                continue;
            }
            let Some(&(pcoef, pivot)) = row.terms.iter().rev().find(|&&(coef, _)| coef.abs() == 1)
            else {
                continue;
            };
            // pivot = pcoef * (k - sum(rest)) since 1/pcoef = pcoef
            let rest: Vec<(i64, usize)> = row
                .terms
                .iter()
                .filter(|&&(_, v)| v != pivot)
                .map(|&(c, v)| (checked_i64(-i128::from(pcoef) * i128::from(c)), v))
                .collect();
            let constant = checked_i64(i128::from(pcoef) * i128::from(k));
            self.dispositions[pivot] = VarDisposition::MultiAggregated {
                constant,
                terms: rest.clone(),
            };
            // keep the pivot's 0-1 domain: 0 <= constant + sum(rest) <= 1
            self.constraints[idx] = LinConstraint::new(rest, Some(-constant), Some(1 - constant));
            return true;
        }
        false
    }

    /// Drops rows that every point within the current bounds satisfies.
    fn remove_redundant(&mut self) {
        let bounds = &self.bounds;
        let before = self.constraints.len();
        self.constraints.retain(|c| {
            let redundant = c
                .lhs
                .is_none_or(|l| c.min_activity(bounds) >= i128::from(l))
                && c.rhs
                    .is_none_or(|r| c.max_activity(bounds) <= i128::from(r));
            !redundant
        });
        self.removed_rows += before - self.constraints.len();
    }

    /// Merges rows with identical term vectors by intersecting their
    /// `[lhs, rhs]` intervals. This collapses exact duplicates, removes
    /// dominated rows, and turns complementary inequality pairs into
    /// equalities for the next aggregation pass. An empty intersection is
    /// infeasible.
    fn deduplicate(&mut self) -> Result<(), Infeasible> {
        let mut first_of: HashMap<Vec<(i64, usize)>, usize> = HashMap::new();
        let mut merged: Vec<LinConstraint> = Vec::with_capacity(self.constraints.len());
        for row in self.constraints.drain(..) {
            match first_of.get(&row.terms) {
                Some(&i) => {
                    self.removed_rows += 1;
                    let keep = &mut merged[i];
                    keep.lhs = match (keep.lhs, row.lhs) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        (a, b) => a.or(b),
                    };
                    keep.rhs = match (keep.rhs, row.rhs) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    };
                    if let (Some(l), Some(r)) = (keep.lhs, keep.rhs) {
                        if l > r {
                            return Err(Infeasible);
                        }
                    }
                    *keep = classify_constraint(keep.clone());
                }
                None => {
                    first_of.insert(row.terms.clone(), merged.len());
                    merged.push(row);
                }
            }
        }
        self.constraints = merged;
        Ok(())
    }

    /// Probes free variables in ascending order within the remaining budget,
    /// applying each result before probing the next variable.
    fn probe(&mut self) -> Result<(), Infeasible> {
        for v in 0..self.dispositions.len() {
            if self.probe_budget == 0 {
                break;
            }
            if !self.dispositions[v].is_free() || self.bounds[v].0 == self.bounds[v].1 {
                continue;
            }
            self.probe_budget -= 1;
            let result = probe_variable(&self.constraints, &self.bounds, v)?;
            for (w, value) in result.fixings {
                let (lo, hi) = self.bounds[w];
                let value_i = value as i64;
                if value_i < lo || value_i > hi {
                    return Err(Infeasible);
                }
                self.bounds[w] = (value_i, value_i);
            }
            for (w, target, negated) in result.aggregations {
                // express the higher index through the lower one; the
                // relation is involutive, so either direction is the same
                let (var, rep) = if w > target { (w, target) } else { (target, w) };
                if self.dispositions[var].is_free()
                    && self.dispositions[rep].is_free()
                    && self.bounds[var].0 < self.bounds[var].1
                    && self.bounds[rep].0 < self.bounds[rep].1
                {
                    self.dispositions[var] = VarDisposition::SimpleAggregated {
                        target: rep,
                        negated,
                    };
                }
            }
        }
        self.sync_fixed();
        Ok(())
    }

    /// Builds the final simplified model and report.
    fn finish(
        mut self,
        original: &IlpModel,
        rounds: usize,
        seconds: f64,
    ) -> Result<SimplifiedModel, Infeasible> {
        let var_map = VarMap::canonicalized(self.dispositions)?;

        // a canonicalization may fix further variables (aggregation onto a
        // fixed terminal); fold those through the rows one last time
        self.dispositions = var_map.dispositions.clone();
        self.substitute()?;
        self.remove_redundant();
        let var_map = VarMap::canonicalized(self.dispositions)?;

        let remap = |terms: &[(i64, usize)]| -> Vec<(i64, usize)> {
            terms
                .iter()
                .map(|&(c, v)| (c, var_map.new_index_of[v].expect("free variable")))
                .collect()
        };

        let mut vars: Vec<IlpVar> = Vec::with_capacity(var_map.free_count());
        for (old, new) in var_map.new_index_of.iter().enumerate() {
            if let Some(new) = new {
                let src = original.vars[old];
                vars.push(IlpVar {
                    index: *new,
                    lower: 0,
                    upper: 1,
                    kind: src.kind,
                    origin: src.origin,
                });
            }
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let mut out = c.clone();
                out.terms = remap(&c.terms);
                out
            })
            .collect();
        let objective_offset_delta = self.objective.offset - original.objective.offset;
        let objective = Objective {
            terms: remap(&self.objective.terms),
            offset: original.objective.offset,
        };

        let decision = |old: usize| original.vars[old].kind == VarKind::Decision;
        let mut report = PresolveReport {
            decision_vars: original.decision_var_count(),
            removed_constraints: self.removed_rows,
            rounds_executed: rounds,
            preprocessing_seconds: seconds,
            ..PresolveReport::default()
        };
        for (v, d) in var_map.dispositions.iter().enumerate() {
            if !decision(v) {
                continue;
            }
            match d {
                VarDisposition::Fixed(_) => report.fixed_decision_vars += 1,
                VarDisposition::SimpleAggregated { .. } => {
                    report.aggregated_decision_vars += 1;
                    report.simple_aggregated_decision_vars += 1;
                }
                VarDisposition::MultiAggregated { .. } => report.aggregated_decision_vars += 1,
                VarDisposition::Free => {}
            }
        }

        Ok(SimplifiedModel {
            model: IlpModel {
                vars,
                constraints,
                objective,
                soft_weight_total: original.soft_weight_total,
            },
            var_map,
            objective_offset_delta,
            report,
        })
    }
}

fn checked_i64(v: i128) -> i64 {
    i64::try_from(v).expect("coefficient overflow during substitution")
}

/// Path-compresses dispositions; see [`VarMap::canonicalized`].
pub fn canonicalize(
    mut dispositions: Vec<VarDisposition>,
) -> Result<Vec<VarDisposition>, Infeasible> {
    // resolve simple-aggregation chains with explicit cycle handling
    for start in 0..dispositions.len() {
        resolve_chain(&mut dispositions, start)?;
    }
    // rewrite multi-aggregation terms through the resolved chains, inlining
    // nested multi aggregations (the pivot order makes nesting acyclic)
    for v in 0..dispositions.len() {
        if matches!(dispositions[v], VarDisposition::MultiAggregated { .. }) {
            let mut visiting = vec![false; dispositions.len()];
            resolve_multi(&mut dispositions, v, &mut visiting)?;
        }
    }
    // a multi aggregation may have collapsed onto a fixed or mirrored value;
    // chains that ended on it need one more compression pass
    for start in 0..dispositions.len() {
        resolve_chain(&mut dispositions, start)?;
    }
    Ok(dispositions)
}

/// Follows the chain from `start`, compressing it onto its terminal.
fn resolve_chain(dispositions: &mut [VarDisposition], start: usize) -> Result<(), Infeasible> {
    loop {
        // (var, polarity of the walk from start to var)
        let mut path: Vec<(usize, bool)> = Vec::new();
        let mut cur = start;
        let mut parity = false;
        let terminal = loop {
            if let Some(pos) = path.iter().position(|&(v, _)| v == cur) {
                // back on the walk: a cycle. Odd composed negation means
                // y = !y; even cycles merge onto their lowest-index member.
                if parity != path[pos].1 {
                    return Err(Infeasible);
                }
                let rep = path[pos..]
                    .iter()
                    .map(|&(v, _)| v)
                    .min()
                    .expect("non-empty cycle");
                dispositions[rep] = VarDisposition::Free;
                break None;
            }
            match dispositions[cur] {
                VarDisposition::SimpleAggregated { target, negated } => {
                    path.push((cur, parity));
                    parity ^= negated;
                    cur = target;
                }
                _ => break Some(cur),
            }
        };
        let Some(terminal) = terminal else { continue }; // re-walk after breaking a cycle
        for &(v, p) in &path {
            let composed = parity ^ p; // polarity from v to the terminal
            dispositions[v] = match dispositions[terminal] {
                VarDisposition::Fixed(value) => VarDisposition::Fixed(value != composed),
                _ => VarDisposition::SimpleAggregated {
                    target: terminal,
                    negated: composed,
                },
            };
        }
        return Ok(());
    }
}

/// Rewrites one multi-aggregation in place so its terms reference only free
/// variables, expanding chained and nested aggregations along the way. A
/// combination that folds to a constant outside `{0, 1}` is infeasible; one
/// that folds to a clean mirror/negation downgrades to a simple aggregation.
fn resolve_multi(
    dispositions: &mut Vec<VarDisposition>,
    v: usize,
    visiting: &mut [bool],
) -> Result<(), Infeasible> {
    let VarDisposition::MultiAggregated { constant, terms } = dispositions[v].clone() else {
        return Ok(());
    };
    if visiting[v] {
        return Err(Infeasible);
    }
    visiting[v] = true;

    let mut work: Vec<(i64, usize)> = terms;
    let mut out: Vec<(i64, usize)> = Vec::with_capacity(work.len());
    let mut shift = i128::from(constant);
    while let Some((coef, w)) = work.pop() {
        match dispositions[w].clone() {
            VarDisposition::Free => out.push((coef, w)),
            VarDisposition::Fixed(b) => shift += i128::from(coef) * i128::from(b as i64),
            VarDisposition::SimpleAggregated { target, negated } => {
                if negated {
                    shift += i128::from(coef);
                    work.push((-coef, target));
                } else {
                    work.push((coef, target));
                }
            }
            VarDisposition::MultiAggregated { .. } => {
                resolve_multi(dispositions, w, visiting)?;
                match dispositions[w].clone() {
                    VarDisposition::MultiAggregated {
                        constant: c2,
                        terms: t2,
                    } => {
                        shift += i128::from(coef) * i128::from(c2);
                        for (ci, vi) in t2 {
                            work.push((checked_i64(i128::from(coef) * i128::from(ci)), vi));
                        }
                    }
                    // the nested aggregation may have collapsed; re-dispatch
                    _ => work.push((coef, w)),
                }
            }
        }
    }

    out.sort_unstable_by_key(|&(_, w)| w);
    let mut merged: Vec<(i64, usize)> = Vec::with_capacity(out.len());
    for (c, w) in out {
        match merged.last_mut() {
            Some((lc, lw)) if *lw == w => *lc += c,
            _ => merged.push((c, w)),
        }
    }
    merged.retain(|&(c, _)| c != 0);

    let constant = checked_i64(shift);
    dispositions[v] = if merged.is_empty() {
        match constant {
            0 => VarDisposition::Fixed(false),
            1 => VarDisposition::Fixed(true),
            _ => return Err(Infeasible),
        }
    } else if merged.len() == 1 && constant == 0 && merged[0].0 == 1 {
        VarDisposition::SimpleAggregated {
            target: merged[0].1,
            negated: false,
        }
    } else if merged.len() == 1 && constant == 1 && merged[0].0 == -1 {
        VarDisposition::SimpleAggregated {
            target: merged[0].1,
            negated: true,
        }
    } else {
        VarDisposition::MultiAggregated {
            constant,
            terms: merged,
        }
    };
    visiting[v] = false;
    Ok(())
}
