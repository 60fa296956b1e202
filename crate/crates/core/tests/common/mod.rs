//! Helpers shared by the integration suites: seeded generators, an
//! independent satisfiability checker for projection tests, and the
//! indicator-tightening repair.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use maxsimp::ilp::{IlpModel, IlpVar, LinConstraint, Objective, VarKind, VarOrigin};
use maxsimp::types::{Assignment, Clause, Lit};
use maxsimp::WcnfInstance;

/// Random weighted partial instance within the given limits. Clause lengths
/// are short (1..=3) so hard parts are frequently but not always satisfiable.
/// The variable count is pinned to the largest referenced index, as in
/// headerless instances.
pub fn random_instance(
    rng: &mut StdRng,
    max_vars: u32,
    max_clauses: usize,
    max_weight: u64,
) -> WcnfInstance {
    let mut inst = raw_random_instance(rng, max_vars, max_clauses, max_weight);
    inst.num_vars = inst.max_referenced_var().max(1);
    inst
}

fn raw_random_instance(
    rng: &mut StdRng,
    max_vars: u32,
    max_clauses: usize,
    max_weight: u64,
) -> WcnfInstance {
    let num_vars = rng.random_range(1..=max_vars);
    let num_clauses = rng.random_range(1..=max_clauses);
    let mut inst = WcnfInstance {
        num_vars,
        ..WcnfInstance::default()
    };
    for _ in 0..num_clauses {
        let len = rng.random_range(1..=3usize.min(num_vars as usize));
        let mut vars: Vec<u32> = Vec::with_capacity(len);
        while vars.len() < len {
            let v = rng.random_range(1..=num_vars);
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let lits: Vec<Lit> = vars
            .iter()
            .map(|&v| {
                if rng.random_bool(0.5) {
                    Lit::positive(v)
                } else {
                    Lit::negative(v)
                }
            })
            .collect();
        if rng.random_bool(0.4) {
            inst.hard.push(Clause::new(lits));
        } else {
            let weight = if max_weight <= 1 {
                1
            } else {
                rng.random_range(1..=max_weight)
            };
            inst.soft.push((Clause::new(lits), weight));
        }
    }
    inst
}

/// Random 0-1 model over decision variables: short rows with small
/// coefficients, a sprinkle of equalities so aggregation has material.
pub fn random_model(rng: &mut StdRng, max_vars: usize, max_rows: usize) -> IlpModel {
    let n = rng.random_range(1..=max_vars);
    let vars: Vec<IlpVar> = (0..n)
        .map(|i| IlpVar {
            index: i,
            lower: 0,
            upper: 1,
            kind: VarKind::Decision,
            origin: Some(VarOrigin::InputVar(i as u32 + 1)),
        })
        .collect();
    let rows = rng.random_range(0..=max_rows);
    let mut constraints = Vec::with_capacity(rows);
    for _ in 0..rows {
        let len = rng.random_range(1..=4.min(n));
        let mut used: Vec<usize> = Vec::with_capacity(len);
        while used.len() < len {
            let v = rng.random_range(0..n);
            if !used.contains(&v) {
                used.push(v);
            }
        }
        let terms: Vec<(i64, usize)> = used
            .iter()
            .map(|&v| {
                let mut c = 0;
                while c == 0 {
                    c = rng.random_range(-3..=3);
                }
                (c, v)
            })
            .collect();
        let reach: i64 = terms.iter().map(|&(c, _)| c.abs()).sum();
        let (lhs, rhs) = if rng.random_bool(0.3) {
            let k = rng.random_range(-reach..=reach);
            (Some(k), Some(k))
        } else if rng.random_bool(0.5) {
            (Some(rng.random_range(-reach..=reach)), None)
        } else {
            (None, Some(rng.random_range(-reach..=reach)))
        };
        constraints.push(LinConstraint::new(terms, lhs, rhs));
    }
    let objective = Objective {
        terms: (0..n)
            .filter_map(|v| {
                let c = rng.random_range(-4..=4i64);
                (c != 0).then_some((c, v))
            })
            .collect(),
        offset: 0,
    };
    IlpModel {
        vars,
        constraints,
        objective,
        soft_weight_total: 0,
    }
}

/// Decides whether the clauses admit a model extending the given partial
/// assignment, by unit propagation and branching. Independent of the solver
/// and encoder code paths it is used to check.
pub fn has_extension(clauses: &[Clause], values: &mut Vec<Option<bool>>) -> bool {
    let mut trail: Vec<u32> = Vec::new();
    loop {
        let mut forced = None;
        for clause in clauses {
            let mut satisfied = false;
            let mut open = None;
            let mut open_count = 0;
            for lit in clause {
                match values[lit.var() as usize - 1] {
                    Some(v) if lit.eval(v) => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open_count += 1;
                        open = Some(lit);
                    }
                }
            }
            if satisfied {
                continue;
            }
            match (open_count, open) {
                (0, _) => {
                    for v in trail {
                        values[v as usize - 1] = None;
                    }
                    return false;
                }
                (1, Some(lit)) => {
                    forced = Some(lit);
                    break;
                }
                _ => {}
            }
        }
        if let Some(lit) = forced {
            values[lit.var() as usize - 1] = Some(lit.is_positive());
            trail.push(lit.var());
            continue;
        }
        break;
    }
    let result = match values.iter().position(|v| v.is_none()) {
        None => true,
        Some(idx) => [true, false].into_iter().any(|b| {
            values[idx] = Some(b);
            let r = has_extension(clauses, values);
            values[idx] = None;
            r
        }),
    };
    for v in trail {
        values[v as usize - 1] = None;
    }
    result
}

/// Checks that the clauses, projected onto variables `1..=num_inputs`, admit
/// exactly the input points accepted by `solution`. `num_vars` is the total
/// variable count including auxiliaries.
pub fn assert_projection(
    clauses: &[Clause],
    num_inputs: u32,
    num_vars: u32,
    solution: impl Fn(&[bool]) -> bool,
    context: &str,
) {
    for mask in 0..1u64 << num_inputs {
        let inputs: Vec<bool> = (0..num_inputs).map(|i| mask >> i & 1 == 1).collect();
        let mut values: Vec<Option<bool>> = vec![None; num_vars as usize];
        for (i, &b) in inputs.iter().enumerate() {
            values[i] = Some(b);
        }
        let encoded = has_extension(clauses, &mut values);
        let expected = solution(&inputs);
        assert_eq!(encoded, expected, "{context}: inputs {inputs:?}");
    }
}

/// Completes a partial assignment into a full model of the clauses, or
/// `None` if there is none.
pub fn find_model(clauses: &[Clause], values: &[Option<bool>]) -> Option<Assignment> {
    fn search(clauses: &[Clause], values: &mut Vec<Option<bool>>) -> bool {
        if !has_extension(clauses, values) {
            return false;
        }
        match values.iter().position(|v| v.is_none()) {
            None => true,
            Some(idx) => {
                for b in [true, false] {
                    values[idx] = Some(b);
                    if search(clauses, values) {
                        return true;
                    }
                    values[idx] = None;
                }
                false
            }
        }
    }
    let mut values = values.to_vec();
    if !search(clauses, &mut values) {
        return None;
    }
    Some(Assignment::from_values(
        values.into_iter().map(|v| v.unwrap()).collect(),
    ))
}

/// Samples an indicator-maximal feasible solution of a re-encoded instance:
/// the variables the reconstruction record reads get random values (resampled
/// until the hard clauses are extendable), every soft unit is then satisfied
/// whenever some completion allows it, and auxiliary circuit variables are
/// completed last. Under the one-sided indicator linkage these are exactly
/// the solutions whose cost is faithful to the original instance.
pub fn sample_tight_solution(
    rng: &mut StdRng,
    simp: &WcnfInstance,
    record: &maxsimp::reconstruct::ReconstructionRecord,
) -> Option<Assignment> {
    use maxsimp::reconstruct::VarRecovery;

    let mut inputs: Vec<u32> = Vec::new();
    for entry in &record.entries {
        match entry {
            VarRecovery::Fixed(_) => {}
            VarRecovery::Literal(lit) => inputs.push(lit.var()),
            VarRecovery::Affine { terms, .. } => inputs.extend(terms.iter().map(|&(_, l)| l.var())),
        }
    }
    inputs.sort_unstable();
    inputs.dedup();

    let n = simp.num_vars as usize;
    let mut values: Vec<Option<bool>> = vec![None; n];
    for _ in 0..200 {
        for v in values.iter_mut() {
            *v = None;
        }
        for &v in &inputs {
            values[v as usize - 1] = Some(rng.random_bool(0.5));
        }
        if has_extension(&simp.hard, &mut values) {
            for (clause, _) in &simp.soft {
                let [lit] = clause.lits() else { continue };
                let slot = lit.var() as usize - 1;
                if values[slot].is_some() {
                    continue;
                }
                values[slot] = Some(lit.is_positive());
                if !has_extension(&simp.hard, &mut values) {
                    values[slot] = Some(!lit.is_positive());
                }
            }
            return find_model(&simp.hard, &values);
        }
    }
    None
}
