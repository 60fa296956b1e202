//! The 0-1 integer linear model of a MaxSAT instance.
//!
//! Every WCNF variable becomes a binary decision variable, every soft clause
//! gets a binary indicator variable that may only be 1 when the clause is
//! satisfied, and the objective maximizes the indicator-weighted sum. The
//! optimal objective value then equals the total soft weight minus the
//! optimal MaxSAT cost.

use thiserror::Error;

use crate::instance::WcnfInstance;
use crate::types::Cost;

/// Role of a variable in the model.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarKind {
    /// Mirrors a WCNF variable.
    Decision,
    /// Indicates satisfaction of a soft clause.
    Indicator,
    /// Introduced by later transformations.
    Auxiliary,
}

/// What a model variable stands for in the source instance.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VarOrigin {
    /// 1-based WCNF variable index.
    InputVar(u32),
    /// Index into the soft clause list.
    SoftClause(usize),
}

/// A binary variable with (possibly tightened) bounds.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IlpVar {
    pub index: usize,
    pub lower: i64,
    pub upper: i64,
    pub kind: VarKind,
    pub origin: Option<VarOrigin>,
}

/// Structural family of a constraint, following the shapes the encoder knows
/// how to translate.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConstraintClass {
    /// A disjunction over literals: one-sided row, unit coefficients.
    LogicalOr,
    /// Links a soft-clause indicator to its clause (indicator ≤ clause sum).
    SoftLink,
    /// At most one of the variables is 1.
    SetppcPacking,
    /// Exactly one of the variables is 1.
    SetppcPartitioning,
    /// A product relation `y = x1 * .. * xn` in its range-row linearization
    /// `-(n-1) <= n*y - sum(x) <= 0`. Only ever assigned by a transformation
    /// that derives a product, never by syntactic classification.
    LogicalAnd,
    /// Any other linear row.
    GeneralLinear,
    /// A constraint kind with no CNF translation rule. The pipeline never
    /// produces one; models carrying it make the encoder refuse, which makes
    /// the caller fall back to the original instance.
    Unsupported,
}

/// A linear constraint `lhs <= sum(coef * var) <= rhs` in normal form:
/// terms sorted by variable index, no zero coefficients, each variable at
/// most once, and all constants folded into the sides. `None` bounds mean
/// minus/plus infinity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinConstraint {
    pub terms: Vec<(i64, usize)>,
    pub lhs: Option<i64>,
    pub rhs: Option<i64>,
    pub class: ConstraintClass,
}

impl LinConstraint {
    /// Builds a constraint in normal form and classifies it. The sign is
    /// canonical too: the lowest-index variable carries a positive
    /// coefficient (otherwise the whole row is negated and the sides swap),
    /// so algebraically identical rows compare equal.
    pub fn new(terms: Vec<(i64, usize)>, lhs: Option<i64>, rhs: Option<i64>) -> LinConstraint {
        let mut terms = normalize_terms(terms);
        let (lhs, rhs) = if terms.first().is_some_and(|&(c, _)| c < 0) {
            for t in &mut terms {
                t.0 = -t.0;
            }
            (rhs.map(|r| -r), lhs.map(|l| -l))
        } else {
            (lhs, rhs)
        };
        let mut c = LinConstraint {
            terms,
            lhs,
            rhs,
            class: ConstraintClass::GeneralLinear,
        };
        c.class = classification(&c);
        c
    }

    /// Smallest value the left-hand sum can take under the given bounds.
    pub fn min_activity(&self, bounds: &[(i64, i64)]) -> i128 {
        self.terms
            .iter()
            .map(|&(c, v)| {
                let (lo, hi) = bounds[v];
                i128::from(c) * i128::from(if c > 0 { lo } else { hi })
            })
            .sum()
    }

    /// Largest value the left-hand sum can take under the given bounds.
    pub fn max_activity(&self, bounds: &[(i64, i64)]) -> i128 {
        self.terms
            .iter()
            .map(|&(c, v)| {
                let (lo, hi) = bounds[v];
                i128::from(c) * i128::from(if c > 0 { hi } else { lo })
            })
            .sum()
    }

    /// Whether a full 0-1 point satisfies the constraint.
    pub fn satisfied_by(&self, values: &[bool]) -> bool {
        let sum: i128 = self
            .terms
            .iter()
            .map(|&(c, v)| i128::from(c) * i128::from(values[v] as i64))
            .sum();
        self.lhs.is_none_or(|l| sum >= i128::from(l))
            && self.rhs.is_none_or(|r| sum <= i128::from(r))
    }

    /// The constraint is an equality with both sides finite and equal.
    pub fn equality_value(&self) -> Option<i64> {
        match (self.lhs, self.rhs) {
            (Some(l), Some(r)) if l == r => Some(l),
            _ => None,
        }
    }
}

fn normalize_terms(mut terms: Vec<(i64, usize)>) -> Vec<(i64, usize)> {
    terms.sort_unstable_by_key(|&(_, v)| v);
    let mut out: Vec<(i64, usize)> = Vec::with_capacity(terms.len());
    for (c, v) in terms {
        match out.last_mut() {
            Some((lc, lv)) if *lv == v => *lc += c,
            _ => out.push((c, v)),
        }
    }
    out.retain(|&(c, _)| c != 0);
    out
}

/// The objective; the sense is always maximize.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Objective {
    pub terms: Vec<(i64, usize)>,
    pub offset: i128,
}

impl Objective {
    pub fn value_at(&self, values: &[bool]) -> i128 {
        self.offset
            + self
                .terms
                .iter()
                .map(|&(c, v)| i128::from(c) * i128::from(values[v] as i64))
                .sum::<i128>()
    }
}

/// A 0-1 maximization model.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IlpModel {
    pub vars: Vec<IlpVar>,
    pub constraints: Vec<LinConstraint>,
    pub objective: Objective,
    /// Total soft weight of the source instance; bridges objective values
    /// back to MaxSAT costs.
    pub soft_weight_total: Cost,
}

impl IlpModel {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn bounds(&self) -> Vec<(i64, i64)> {
        self.vars.iter().map(|v| (v.lower, v.upper)).collect()
    }

    pub fn decision_var_count(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Decision)
            .count()
    }

    /// Exhaustive optimum over all 0-1 points respecting variable bounds:
    /// `(best objective, lexicographically smallest maximizer)`, or `None`
    /// when infeasible. Verification helper, exponential in `vars`.
    ///
    /// # Panics
    ///
    /// If the model has more than 26 variables.
    pub fn enumerate_optimum(&self) -> Option<(i128, Vec<bool>)> {
        let n = self.vars.len();
        assert!(n <= 26, "model too large for exhaustive enumeration");
        let mut best: Option<(i128, Vec<bool>)> = None;
        for mask in 0..1u64 << n {
            let values: Vec<bool> = (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect();
            let in_bounds = self
                .vars
                .iter()
                .enumerate()
                .all(|(i, v)| (values[i] as i64) >= v.lower && (values[i] as i64) <= v.upper);
            if !in_bounds || !self.constraints.iter().all(|c| c.satisfied_by(&values)) {
                continue;
            }
            let obj = self.objective.value_at(&values);
            if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                best = Some((obj, values));
            }
        }
        best
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum BuildError {
    #[error("hard clause {index} is empty: instance is trivially unsatisfiable")]
    EmptyHardClause { index: usize },
}

/// Builds the 0-1 model of a WCNF instance.
///
/// Hard clause rows demand at least one literal true; each soft clause `c`
/// with weight `w` contributes an indicator row `z_c <= sum of c's literals`
/// and the objective term `w * z_c`. The reverse implication for indicators
/// is deliberately omitted: under maximization an indicator rises to 1
/// whenever its clause is satisfied.
pub fn build_ilp(inst: &WcnfInstance) -> Result<IlpModel, BuildError> {
    let nv = inst.num_vars as usize;
    let mut vars: Vec<IlpVar> = (0..nv)
        .map(|i| IlpVar {
            index: i,
            lower: 0,
            upper: 1,
            kind: VarKind::Decision,
            origin: Some(VarOrigin::InputVar(i as u32 + 1)),
        })
        .collect();
    for j in 0..inst.soft.len() {
        vars.push(IlpVar {
            index: nv + j,
            lower: 0,
            upper: 1,
            kind: VarKind::Indicator,
            origin: Some(VarOrigin::SoftClause(j)),
        });
    }

    let mut constraints = Vec::with_capacity(inst.num_clauses());
    for (i, clause) in inst.hard.iter().enumerate() {
        if clause.is_empty() {
            return Err(BuildError::EmptyHardClause { index: i });
        }
        // sum_pos(y) + sum_neg(1 - y) >= 1, constants folded into lhs
        let mut terms = Vec::with_capacity(clause.len());
        let mut constant: i64 = 0;
        for lit in clause {
            let v = lit.var() as usize - 1;
            if lit.is_positive() {
                terms.push((1, v));
            } else {
                terms.push((-1, v));
                constant += 1;
            }
        }
        constraints.push(LinConstraint::new(terms, Some(1 - constant), None));
    }

    let mut objective = Objective::default();
    for (j, (clause, weight)) in inst.soft.iter().enumerate() {
        let z = nv + j;
        // z <= sum_pos(y) + sum_neg(1 - y), normalized to z - sum_pos + sum_neg <= constant
        let mut terms = vec![(1i64, z)];
        let mut constant: i64 = 0;
        for lit in clause {
            let v = lit.var() as usize - 1;
            if lit.is_positive() {
                terms.push((-1, v));
            } else {
                terms.push((1, v));
                constant += 1;
            }
        }
        let mut link = LinConstraint::new(terms, None, Some(constant));
        link.class = ConstraintClass::SoftLink;
        constraints.push(link);
        let coefficient = i64::try_from(*weight).expect("weight exceeds the i64 contract");
        objective.terms.push((coefficient, z));
    }

    Ok(IlpModel {
        vars,
        constraints,
        objective,
        soft_weight_total: inst.soft_weight_total(),
    })
}

/// Re-derives the structural class of a constraint from its shape.
///
/// Purely syntactic and idempotent: `SoftLink` and `LogicalAnd` tags are kept
/// as long as the row still has the required shape (they carry provenance the
/// shape alone cannot recover), `Unsupported` is always kept, and everything
/// else is matched against the packing, partitioning and clause patterns in
/// that order.
pub fn classify_constraint(mut c: LinConstraint) -> LinConstraint {
    c.class = classification(&c);
    c
}

fn classification(c: &LinConstraint) -> ConstraintClass {
    match c.class {
        ConstraintClass::Unsupported => return ConstraintClass::Unsupported,
        ConstraintClass::SoftLink if clause_literals(c).is_some() => {
            return ConstraintClass::SoftLink
        }
        ConstraintClass::LogicalAnd if decode_product(c).is_some() => {
            return ConstraintClass::LogicalAnd
        }
        _ => {}
    }
    let all_plus_one = c.terms.iter().all(|&(coef, _)| coef == 1);
    if all_plus_one && c.lhs.is_none() && c.rhs == Some(1) && !c.terms.is_empty() {
        return ConstraintClass::SetppcPacking;
    }
    if all_plus_one && c.lhs == Some(1) && c.rhs == Some(1) && !c.terms.is_empty() {
        return ConstraintClass::SetppcPartitioning;
    }
    if clause_literals(c).is_some() {
        return ConstraintClass::LogicalOr;
    }
    ConstraintClass::GeneralLinear
}

/// If the row is a clause after complementing negative-coefficient variables,
/// returns its literals as `(variable index, positive)` pairs.
///
/// A one-sided unit-coefficient row `sum >= lhs` reads as a clause when
/// `lhs + #negative == 1`; a `sum <= rhs` row when `#positive - rhs == 1`.
pub fn clause_literals(c: &LinConstraint) -> Option<Vec<(usize, bool)>> {
    if c.terms.is_empty() || !c.terms.iter().all(|&(coef, _)| coef == 1 || coef == -1) {
        return None;
    }
    let neg = c.terms.iter().filter(|&&(coef, _)| coef == -1).count() as i64;
    let pos = c.terms.len() as i64 - neg;
    match (c.lhs, c.rhs) {
        (Some(l), None) if l + neg == 1 => {
            Some(c.terms.iter().map(|&(coef, v)| (v, coef == 1)).collect())
        }
        (None, Some(r)) if pos - r == 1 => {
            Some(c.terms.iter().map(|&(coef, v)| (v, coef == -1)).collect())
        }
        _ => None,
    }
}

/// Decodes the range-row linearization of a product relation
/// `-(n-1) <= n*y - sum(x_i) <= 0`, in either sign orientation of the
/// canonical form. Returns `(product var, factor vars)`.
pub fn decode_product(c: &LinConstraint) -> Option<(usize, Vec<usize>)> {
    let n = c.terms.len().checked_sub(1)?;
    if n == 0 {
        return None;
    }
    let pick =
        |product_coef: i64, factor_coef: i64, lhs: i64, rhs: i64| -> Option<(usize, Vec<usize>)> {
            if c.lhs != Some(lhs) || c.rhs != Some(rhs) {
                return None;
            }
            let mut product = None;
            let mut factors = Vec::with_capacity(n);
            for &(coef, v) in &c.terms {
                if coef == product_coef && product.is_none() {
                    product = Some(v);
                } else if coef == factor_coef {
                    factors.push(v);
                } else {
                    return None;
                }
            }
            product.filter(|_| factors.len() == n).map(|p| (p, factors))
        };
    let n_i = n as i64;
    pick(n_i, -1, -(n_i - 1), 0).or_else(|| pick(-n_i, 1, 0, n_i - 1))
}

/// Renders the model in LP text format for cross-checking with external
/// tools. Decision variables print as `y<i>`, indicators as `z<i>`,
/// auxiliaries as `a<i>`.
pub fn to_lp_string(model: &IlpModel) -> String {
    use std::fmt::Write;

    fn name(model: &IlpModel, v: usize) -> String {
        match model.vars[v].kind {
            VarKind::Decision => format!("y{v}"),
            VarKind::Indicator => format!("z{v}"),
            VarKind::Auxiliary => format!("a{v}"),
        }
    }
    fn sum(model: &IlpModel, terms: &[(i64, usize)]) -> String {
        let mut s = String::new();
        for &(c, v) in terms {
            let _ = write!(
                s,
                " {} {} {}",
                if c < 0 { '-' } else { '+' },
                c.abs(),
                name(model, v)
            );
        }
        s
    }

    let mut out = String::from("Maximize\n obj:");
    out.push_str(&sum(model, &model.objective.terms));
    if model.objective.offset != 0 {
        let _ = write!(out, " + {}", model.objective.offset);
    }
    out.push_str("\nSubject To\n");
    let mut row = 0usize;
    for c in &model.constraints {
        match (c.lhs, c.rhs) {
            (Some(l), Some(r)) if l == r => {
                let _ = writeln!(out, " c{row}:{} = {}", sum(model, &c.terms), l);
                row += 1;
            }
            (lhs, rhs) => {
                if let Some(l) = lhs {
                    let _ = writeln!(out, " c{row}:{} >= {}", sum(model, &c.terms), l);
                    row += 1;
                }
                if let Some(r) = rhs {
                    let _ = writeln!(out, " c{row}:{} <= {}", sum(model, &c.terms), r);
                    row += 1;
                }
            }
        }
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", name(model, v.index), v.lower);
        }
    }
    out.push_str("Binary\n");
    for v in &model.vars {
        let _ = write!(out, " {}", name(model, v.index));
    }
    out.push_str("\nEnd\n");
    out
}
