//! Re-encoding of a simplified 0-1 model as a WCNF instance.
//!
//! Variables map first: fixed variables keep only their recorded value, each
//! free variable gets a fresh Boolean variable, aggregation chains share the
//! representative's variable (negated when the relation flips), and multi
//! aggregations get a fresh variable plus a queued pseudo-Boolean equality.
//! Constraints then translate by structural class, and the objective turns
//! into weighted soft units with a cost offset that keeps absolute optima of
//! the source and re-encoded instances identical.

mod pb;

use thiserror::Error;

use crate::ilp::{clause_literals, decode_product, ConstraintClass, LinConstraint};
use crate::instance::WcnfInstance;
use crate::presolve::{SimplifiedModel, VarDisposition};
use crate::types::{Clause, Cost, Lit, Weight};

/// At-most-one translation strategies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AmoMethod {
    /// One binary clause per literal pair.
    Pairwise,
    /// Sequential counter: `n - 1` auxiliaries, `3n - 4` clauses.
    Sequential,
}

/// Encoder knobs.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EncodeConfig {
    /// Largest group still encoded pairwise; larger groups use the
    /// sequential counter.
    pub amo_pairwise_max: usize,
    /// Node budget for the BDD route of pseudo-Boolean rows; beyond it the
    /// adder network takes over.
    pub bdd_node_limit: usize,
}

impl Default for EncodeConfig {
    fn default() -> EncodeConfig {
        EncodeConfig {
            amo_pairwise_max: 6,
            bdd_node_limit: 100_000,
        }
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum EncodeError {
    #[error("cannot encode an empty constraint")]
    EmptyConstraint,
    #[error("constraint is trivially false")]
    TriviallyFalse,
    #[error("no translation rule for constraint class {0:?}")]
    Unencodable(ConstraintClass),
    #[error("cost offset algebra produced a negative offset (internal invariant violation)")]
    NegativeCostOffset,
}

/// A multi-aggregation relation `lit = constant + sum(coef * lit)` awaiting
/// its pseudo-Boolean translation.
pub type QueuedEquality = (Lit, i64, Vec<(i64, Lit)>);

/// Working state of one encoding run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EncodeSession {
    next_var: u32,
    pub hard: Vec<Clause>,
    pub soft: Vec<(Clause, Weight)>,
    /// Output literal per original model variable; `None` for fixed ones.
    pub lit_of_original: Vec<Option<Lit>>,
    /// Output literal per simplified-model variable.
    pub lit_of_new: Vec<Option<Lit>>,
    pub queued_equalities: Vec<QueuedEquality>,
}

impl EncodeSession {
    fn new(original_vars: usize, new_vars: usize) -> EncodeSession {
        EncodeSession {
            next_var: 1,
            hard: Vec::new(),
            soft: Vec::new(),
            lit_of_original: vec![None; original_vars],
            lit_of_new: vec![None; new_vars],
            queued_equalities: Vec::new(),
        }
    }

    /// A session over `n` pre-assigned input variables, for encoding
    /// individual constraints directly.
    pub fn with_input_vars(n: u32) -> (EncodeSession, Vec<Lit>) {
        let mut session = EncodeSession::new(0, 0);
        let lits = (0..n).map(|_| session.fresh_lit()).collect();
        (session, lits)
    }

    pub fn fresh_lit(&mut self) -> Lit {
        let lit = Lit::positive(self.next_var);
        self.next_var += 1;
        lit
    }

    /// Number of variables handed out so far.
    pub fn num_vars(&self) -> u32 {
        self.next_var - 1
    }

    pub fn push_hard(&mut self, lits: Vec<Lit>) {
        self.hard.push(Clause::new(lits));
    }
}

/// Maps the variables of a simplified model to output literals, following
/// the per-disposition rules described at module level. Representatives are
/// created on demand, so a chain pointing at a higher-index terminal still
/// produces exactly one fresh variable.
pub fn encode_variables(simp: &SimplifiedModel) -> EncodeSession {
    let map = &simp.var_map;
    let mut session = EncodeSession::new(map.dispositions.len(), map.free_count());

    fn ensure_free_lit(session: &mut EncodeSession, simp: &SimplifiedModel, v: usize) -> Lit {
        if let Some(lit) = session.lit_of_original[v] {
            return lit;
        }
        let lit = session.fresh_lit();
        session.lit_of_original[v] = Some(lit);
        if let Some(new) = simp.var_map.new_index_of[v] {
            session.lit_of_new[new] = Some(lit);
        }
        lit
    }

    for v in 0..map.dispositions.len() {
        match map.dispositions[v].clone() {
            VarDisposition::Fixed(_) => {}
            VarDisposition::Free => {
                ensure_free_lit(&mut session, simp, v);
            }
            VarDisposition::SimpleAggregated { target, negated } => {
                let rep = ensure_free_lit(&mut session, simp, target);
                session.lit_of_original[v] = Some(if negated { !rep } else { rep });
            }
            VarDisposition::MultiAggregated { constant, terms } => {
                let fresh = session.fresh_lit();
                session.lit_of_original[v] = Some(fresh);
                let terms = terms
                    .iter()
                    .map(|&(c, w)| (c, ensure_free_lit(&mut session, simp, w)))
                    .collect();
                session.queued_equalities.push((fresh, constant, terms));
            }
        }
    }
    session
}

/// Emits a disjunction as one hard clause.
pub fn encode_or(session: &mut EncodeSession, lits: &[Lit]) -> Result<(), EncodeError> {
    if lits.is_empty() {
        return Err(EncodeError::EmptyConstraint);
    }
    session.push_hard(lits.to_vec());
    Ok(())
}

/// Emits the product relation `y = x1 * .. * xn` as `n + 1` hard clauses.
pub fn encode_and(session: &mut EncodeSession, y: Lit, xs: &[Lit]) {
    let mut big = Vec::with_capacity(xs.len() + 1);
    big.push(y);
    big.extend(xs.iter().map(|&x| !x));
    session.push_hard(big);
    for &x in xs {
        session.push_hard(vec![!y, x]);
    }
}

/// Emits an at-most-one constraint over the literals.
pub fn encode_amo(session: &mut EncodeSession, lits: &[Lit], method: AmoMethod) {
    if lits.len() <= 1 {
        return;
    }
    match method {
        AmoMethod::Pairwise => {
            for i in 0..lits.len() {
                for j in i + 1..lits.len() {
                    session.push_hard(vec![!lits[i], !lits[j]]);
                }
            }
        }
        AmoMethod::Sequential => {
            // Sinz-style counter: s_i means "some literal among the first i
            // is true"
            let n = lits.len();
            let regs: Vec<Lit> = (0..n - 1).map(|_| session.fresh_lit()).collect();
            session.push_hard(vec![!lits[0], regs[0]]);
            for i in 1..n - 1 {
                session.push_hard(vec![!lits[i], regs[i]]);
                session.push_hard(vec![!regs[i - 1], regs[i]]);
            }
            for i in 1..n {
                session.push_hard(vec![!lits[i], !regs[i - 1]]);
            }
        }
    }
}

/// Emits an exactly-one constraint: at-most-one plus the covering clause.
pub fn encode_partitioning(
    session: &mut EncodeSession,
    lits: &[Lit],
    method: AmoMethod,
) -> Result<(), EncodeError> {
    if lits.is_empty() {
        return Err(EncodeError::EmptyConstraint);
    }
    encode_amo(session, lits, method);
    encode_or(session, lits)
}

/// Encodes `lhs <= sum(coef * lit) <= rhs`; both sides, when finite, are
/// translated independently over the shared input literals. Unit-coefficient
/// sides go through the sequential counter, general sides through a BDD
/// within the configured node budget, and past the budget through an adder
/// network.
pub fn encode_pb(
    session: &mut EncodeSession,
    terms: &[(i64, Lit)],
    lhs: Option<i64>,
    rhs: Option<i64>,
    config: &EncodeConfig,
) -> Result<(), EncodeError> {
    pb::encode(session, terms, lhs, rhs, config)
}

/// Turns the objective into soft unit clauses and computes the output
/// instance's cost offset.
///
/// A positive coefficient `w` on variable `z` yields the soft unit `(z, w)`,
/// a negative one yields `(!z, -w)`. The offset is chosen so that the source
/// instance's optimal cost equals the re-encoded instance's optimal cost
/// including its offset.
pub fn encode_objective(
    session: &mut EncodeSession,
    simp: &SimplifiedModel,
    source_cost_offset: Cost,
) -> Result<Cost, EncodeError> {
    let objective = &simp.model.objective;
    let mut positive_total: i128 = 0;
    for &(w, v) in &objective.terms {
        let lit = session.lit_of_new[v].expect("objective variable has a literal");
        if w > 0 {
            session.soft.push((Clause::new(vec![lit]), w as Weight));
            positive_total += i128::from(w);
        } else {
            session.soft.push((Clause::new(vec![!lit]), (-w) as Weight));
        }
    }
    let offset = i128::try_from(source_cost_offset).map_err(|_| EncodeError::NegativeCostOffset)?
        + i128::try_from(simp.model.soft_weight_total)
            .map_err(|_| EncodeError::NegativeCostOffset)?
        - simp.objective_offset_delta
        - objective.offset
        - positive_total;
    Cost::try_from(offset).map_err(|_| EncodeError::NegativeCostOffset)
}

/// Encodes a whole simplified model as a WCNF instance.
///
/// `source_cost_offset` is the cost offset of the instance the model was
/// built from; it flows into the output offset so absolute costs line up.
pub fn encode_model(
    simp: &SimplifiedModel,
    source_cost_offset: Cost,
    config: &EncodeConfig,
) -> Result<(WcnfInstance, EncodeSession), EncodeError> {
    let mut session = encode_variables(simp);

    for constraint in &simp.model.constraints {
        encode_constraint(&mut session, constraint, config)?;
    }
    for (lit, constant, terms) in session.queued_equalities.clone() {
        // lit - sum(coef * term) = constant
        let mut row: Vec<(i64, Lit)> = vec![(1, lit)];
        row.extend(terms.iter().map(|&(c, l)| (-c, l)));
        pb::encode(&mut session, &row, Some(constant), Some(constant), config)?;
    }
    let cost_offset = encode_objective(&mut session, simp, source_cost_offset)?;

    let inst = WcnfInstance {
        num_vars: session.num_vars(),
        hard: session.hard.clone(),
        soft: session.soft.clone(),
        cost_offset,
    };
    Ok((inst, session))
}

fn encode_constraint(
    session: &mut EncodeSession,
    constraint: &LinConstraint,
    config: &EncodeConfig,
) -> Result<(), EncodeError> {
    let lit_of = |session: &EncodeSession, v: usize| {
        session.lit_of_new[v].expect("constraint variable has a literal")
    };
    let amo_method = |n: usize| {
        if n <= config.amo_pairwise_max {
            AmoMethod::Pairwise
        } else {
            AmoMethod::Sequential
        }
    };

    match constraint.class {
        ConstraintClass::LogicalOr | ConstraintClass::SoftLink => {
            // both are clauses when unit-coefficient and one-sided; a soft
            // link reshaped by substitution falls back to the general route
            if let Some(lits) = clause_literals(constraint) {
                let lits: Vec<Lit> = lits
                    .iter()
                    .map(|&(v, positive)| {
                        let l = lit_of(session, v);
                        if positive {
                            l
                        } else {
                            !l
                        }
                    })
                    .collect();
                return encode_or(session, &lits);
            }
            encode_linear(session, constraint, config)
        }
        ConstraintClass::SetppcPacking => {
            let lits: Vec<Lit> = constraint
                .terms
                .iter()
                .map(|&(_, v)| lit_of(session, v))
                .collect();
            encode_amo(session, &lits, amo_method(lits.len()));
            Ok(())
        }
        ConstraintClass::SetppcPartitioning => {
            let lits: Vec<Lit> = constraint
                .terms
                .iter()
                .map(|&(_, v)| lit_of(session, v))
                .collect();
            encode_partitioning(session, &lits, amo_method(lits.len()))
        }
        ConstraintClass::LogicalAnd => match decode_product(constraint) {
            Some((y, xs)) => {
                let y = lit_of(session, y);
                let xs: Vec<Lit> = xs.iter().map(|&v| lit_of(session, v)).collect();
                encode_and(session, y, &xs);
                Ok(())
            }
            None => encode_linear(session, constraint, config),
        },
        ConstraintClass::GeneralLinear => encode_linear(session, constraint, config),
        ConstraintClass::Unsupported => Err(EncodeError::Unencodable(constraint.class)),
    }
}

fn encode_linear(
    session: &mut EncodeSession,
    constraint: &LinConstraint,
    config: &EncodeConfig,
) -> Result<(), EncodeError> {
    let terms: Vec<(i64, Lit)> = constraint
        .terms
        .iter()
        .map(|&(c, v)| {
            (
                c,
                session.lit_of_new[v].expect("constraint variable has a literal"),
            )
        })
        .collect();
    pb::encode(session, &terms, constraint.lhs, constraint.rhs, config)
}
