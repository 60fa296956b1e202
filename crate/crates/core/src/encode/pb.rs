//! Pseudo-Boolean row translation.
//!
//! Each finite side of `lhs <= sum(coef * lit) <= rhs` is brought to the
//! normal form `sum(w * lit) <= k` with positive weights (negative
//! coefficients flip their literal), then routed: unit-weight sides through
//! a sequential counter, general sides through a reduced BDD while it stays
//! within the node budget, and through a binary adder network beyond it.
//! Every circuit variable is defined by full equivalences, so the satisfying
//! assignments projected onto the input literals are exactly the 0-1
//! solutions of the row.

use std::collections::HashMap;

use super::{EncodeConfig, EncodeError, EncodeSession};
use crate::types::Lit;

pub(super) fn encode(
    session: &mut EncodeSession,
    terms: &[(i64, Lit)],
    lhs: Option<i64>,
    rhs: Option<i64>,
    config: &EncodeConfig,
) -> Result<(), EncodeError> {
    if let Some(r) = rhs {
        encode_upper(session, terms.iter().copied(), i128::from(r), config)?;
    }
    if let Some(l) = lhs {
        // sum >= l  <=>  sum(-coef * lit) <= -l
        let negated = terms.iter().map(|&(c, lit)| (-c, lit));
        encode_upper(session, negated, -i128::from(l), config)?;
    }
    Ok(())
}

fn encode_upper(
    session: &mut EncodeSession,
    terms: impl Iterator<Item = (i64, Lit)>,
    bound: i128,
    config: &EncodeConfig,
) -> Result<(), EncodeError> {
    let mut k = bound;
    let mut weighted: Vec<(u64, Lit)> = Vec::new();
    for (coef, lit) in terms {
        if coef > 0 {
            weighted.push((coef as u64, lit));
        } else if coef < 0 {
            // coef * lit == |coef| * !lit - |coef|
            k += i128::from(-coef);
            weighted.push(((-coef) as u64, !lit));
        }
    }
    if k < 0 {
        return Err(EncodeError::TriviallyFalse);
    }
    let k = k as u128;
    // weights exceeding the bound force their literal false
    weighted.retain(|&(w, lit)| {
        if u128::from(w) > k {
            session.push_hard(vec![!lit]);
            false
        } else {
            true
        }
    });
    let total: u128 = weighted.iter().map(|&(w, _)| u128::from(w)).sum();
    if k >= total {
        return Ok(());
    }

    if weighted.iter().all(|&(w, _)| w == 1) {
        let lits: Vec<Lit> = weighted.iter().map(|&(_, l)| l).collect();
        sequential_counter_le(session, &lits, k as usize);
        return Ok(());
    }

    weighted.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.to_dimacs().cmp(&b.1.to_dimacs())));
    if !bdd_le(session, &weighted, k, config.bdd_node_limit) {
        adder_le(session, &weighted, k);
    }
    Ok(())
}

/// Cardinality `at most k of n` via the sequential counter. Requires
/// `1 <= k < n`; the trivial cases are peeled off by the caller.
fn sequential_counter_le(session: &mut EncodeSession, lits: &[Lit], k: usize) {
    let n = lits.len();
    debug_assert!(k >= 1 && k < n);
    // regs[i - 1][j - 1] means "at least j true among the first i literals"
    let regs: Vec<Vec<Lit>> = (1..n)
        .map(|i| (0..i.min(k)).map(|_| session.fresh_lit()).collect())
        .collect();
    let reg = |i: usize, j: usize| regs[i - 1][j - 1];

    session.push_hard(vec![!lits[0], reg(1, 1)]);
    for i in 2..n {
        session.push_hard(vec![!lits[i - 1], reg(i, 1)]);
        session.push_hard(vec![!reg(i - 1, 1), reg(i, 1)]);
        for j in 2..=i.min(k) {
            session.push_hard(vec![!lits[i - 1], !reg(i - 1, j - 1), reg(i, j)]);
            if j < i {
                session.push_hard(vec![!reg(i - 1, j), reg(i, j)]);
            }
        }
    }
    for i in k + 1..=n {
        session.push_hard(vec![!lits[i - 1], !reg(i - 1, k)]);
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum NodeRef {
    True,
    False,
    Node(usize),
}

/// Builds the reduced decision diagram of `sum(w * lit) <= k` over the given
/// (descending-weight) terms and emits its Tseitin equivalences. Returns
/// false when the diagram outgrows `node_limit`, leaving the session
/// untouched.
fn bdd_le(
    session: &mut EncodeSession,
    weighted: &[(u64, Lit)],
    k: u128,
    node_limit: usize,
) -> bool {
    let n = weighted.len();
    let mut suffix = vec![0u128; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + u128::from(weighted[i].0);
    }

    struct Builder<'a> {
        weighted: &'a [(u64, Lit)],
        suffix: &'a [u128],
        nodes: Vec<(usize, NodeRef, NodeRef)>,
        memo: HashMap<(usize, u128), NodeRef>,
        limit: usize,
    }
    impl Builder<'_> {
        fn build(&mut self, level: usize, slack: i128) -> Option<NodeRef> {
            if slack < 0 {
                return Some(NodeRef::False);
            }
            let slack = slack as u128;
            if slack >= self.suffix[level] {
                return Some(NodeRef::True);
            }
            if let Some(&r) = self.memo.get(&(level, slack)) {
                return Some(r);
            }
            let w = i128::from(self.weighted[level].0);
            let hi = self.build(level + 1, slack as i128 - w)?;
            let lo = self.build(level + 1, slack as i128)?;
            let node = if hi == lo {
                hi
            } else {
                self.nodes.push((level, hi, lo));
                if self.nodes.len() > self.limit {
                    return None;
                }
                NodeRef::Node(self.nodes.len() - 1)
            };
            self.memo.insert((level, slack), node);
            Some(node)
        }
    }

    let mut builder = Builder {
        weighted,
        suffix: &suffix,
        nodes: Vec::new(),
        memo: HashMap::new(),
        limit: node_limit,
    };
    let Some(root) = builder.build(0, k as i128) else {
        return false;
    };

    // the all-false point always satisfies (k >= 0) and the callers peel off
    // trivially-true rows, so the root is a proper node here
    let NodeRef::Node(root) = root else {
        debug_assert_eq!(root, NodeRef::True);
        return true;
    };

    let node_vars: Vec<Lit> = builder.nodes.iter().map(|_| session.fresh_lit()).collect();
    let as_lit = |r: NodeRef, positive: bool| -> LitOrConst {
        match r {
            NodeRef::True => LitOrConst::Const(positive),
            NodeRef::False => LitOrConst::Const(!positive),
            NodeRef::Node(i) => LitOrConst::Lit(if positive {
                node_vars[i]
            } else {
                !node_vars[i]
            }),
        }
    };
    for (i, &(level, hi, lo)) in builder.nodes.iter().enumerate() {
        let b = node_vars[i];
        let x = weighted[level].1;
        // b <-> ite(x, hi, lo)
        emit_folded(
            session,
            [LitOrConst::Lit(!b), LitOrConst::Lit(!x), as_lit(hi, true)],
        );
        emit_folded(
            session,
            [LitOrConst::Lit(!b), LitOrConst::Lit(x), as_lit(lo, true)],
        );
        emit_folded(
            session,
            [LitOrConst::Lit(b), LitOrConst::Lit(!x), as_lit(hi, false)],
        );
        emit_folded(
            session,
            [LitOrConst::Lit(b), LitOrConst::Lit(x), as_lit(lo, false)],
        );
    }
    session.push_hard(vec![node_vars[root]]);
    true
}

#[derive(Clone, Copy)]
enum LitOrConst {
    Lit(Lit),
    Const(bool),
}

fn emit_folded(session: &mut EncodeSession, parts: [LitOrConst; 3]) {
    let mut clause = Vec::with_capacity(3);
    for p in parts {
        match p {
            LitOrConst::Const(true) => return, // clause already satisfied
            LitOrConst::Const(false) => {}
            LitOrConst::Lit(l) => clause.push(l),
        }
    }
    session.push_hard(clause);
}

/// Binary adder network: weights are spread over bit buckets, buckets reduce
/// through full/half adders into one sum bit each, and a lexicographic
/// comparator pins the sum to at most `k`.
fn adder_le(session: &mut EncodeSession, weighted: &[(u64, Lit)], k: u128) {
    let mut buckets: Vec<Vec<Lit>> = Vec::new();
    for &(w, lit) in weighted {
        for bit in 0..64 {
            if w >> bit & 1 == 1 {
                while buckets.len() <= bit {
                    buckets.push(Vec::new());
                }
                buckets[bit].push(lit);
            }
        }
    }

    let mut sum_bits: Vec<Option<Lit>> = Vec::new();
    let mut b = 0;
    while b < buckets.len() {
        while buckets[b].len() > 1 {
            let take = buckets[b].len().min(3);
            let inputs: Vec<Lit> = buckets[b].drain(..take).collect();
            let sum = functional_gate(session, &inputs, |v| {
                v.iter().filter(|&&x| x).count() % 2 == 1
            });
            let carry =
                functional_gate(session, &inputs, |v| v.iter().filter(|&&x| x).count() >= 2);
            buckets[b].push(sum);
            if buckets.len() <= b + 1 {
                buckets.push(Vec::new());
            }
            buckets[b + 1].push(carry);
        }
        sum_bits.push(buckets[b].first().copied());
        b += 1;
    }

    // lexicographic sum <= k: for every zero bit of k, either that sum bit is
    // zero or some higher bit where k has a one is zero
    for i in 0..sum_bits.len() {
        if k >> i & 1 == 1 {
            continue;
        }
        let Some(si) = sum_bits[i] else { continue };
        let mut clause = vec![!si];
        let mut vacuous = false;
        for (j, &sj) in sum_bits.iter().enumerate().skip(i + 1) {
            if k >> j & 1 == 0 {
                continue;
            }
            match sj {
                Some(sj) => clause.push(!sj),
                // a constant-zero sum bit can never match this one bit of k
                None => {
                    vacuous = true;
                    break;
                }
            }
        }
        if !vacuous {
            session.push_hard(clause);
        }
    }
}

/// Introduces a fresh variable functionally defined as `f` over the inputs,
/// one clause per input pattern.
fn functional_gate(
    session: &mut EncodeSession,
    inputs: &[Lit],
    f: impl Fn(&[bool]) -> bool,
) -> Lit {
    let out = session.fresh_lit();
    for mask in 0..1u32 << inputs.len() {
        let values: Vec<bool> = (0..inputs.len()).map(|i| mask >> i & 1 == 1).collect();
        let mut clause: Vec<Lit> = inputs
            .iter()
            .zip(&values)
            .map(|(&l, &v)| if v { !l } else { l })
            .collect();
        clause.push(if f(&values) { out } else { !out });
        session.push_hard(clause);
    }
    out
}
