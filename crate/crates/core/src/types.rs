//! Literals, clauses and assignments shared by every stage of the pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Weight of a soft clause. The on-disk contract bounds weights by `2^63 - 1`;
/// sums of weights are always accumulated in a [`Cost`].
pub type Weight = u64;

/// Largest weight accepted from an input file.
pub const MAX_WEIGHT: Weight = i64::MAX as Weight;

/// A cost value (sum of weights). Wide enough that summing any realistic
/// number of maximal weights cannot wrap.
pub type Cost = u128;

/// A propositional literal in DIMACS convention: a non-zero integer whose
/// absolute value is the 1-based variable index and whose sign is the
/// polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lit(i32);

impl Lit {
    /// Creates the positive literal of `var`.
    ///
    /// # Panics
    ///
    /// If `var` is zero or exceeds `i32::MAX`.
    pub fn positive(var: u32) -> Lit {
        assert!(
            var >= 1 && var <= i32::MAX as u32,
            "variable index out of range"
        );
        Lit(var as i32)
    }

    /// Creates the negative literal of `var`.
    pub fn negative(var: u32) -> Lit {
        !Lit::positive(var)
    }

    /// Creates a literal from a raw DIMACS integer.
    ///
    /// # Panics
    ///
    /// If `code` is zero.
    pub fn from_dimacs(code: i32) -> Lit {
        assert!(code != 0, "literal code must be non-zero");
        Lit(code)
    }

    /// The 1-based variable index.
    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    /// Whether the literal is the plain variable (not its negation).
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// The raw DIMACS integer.
    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    /// Truth value of the literal under a truth value of its variable.
    pub fn eval(self, var_value: bool) -> bool {
        var_value == self.is_positive()
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A disjunction of literals, in input order.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new(lits: Vec<Lit>) -> Clause {
        Clause { lits }
    }

    /// The empty clause: unsatisfiable by definition. Used as an explicit
    /// hard-infeasibility marker, never silently dropped.
    pub fn empty() -> Clause {
        Clause { lits: Vec::new() }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    /// Whether the clause contains some variable in both polarities.
    pub fn is_tautology(&self) -> bool {
        let mut seen = self.lits.clone();
        seen.sort_unstable_by_key(|l| (l.var(), l.is_positive()));
        seen.windows(2)
            .any(|w| w[0].var() == w[1].var() && w[0] != w[1])
    }

    /// Sorted, deduplicated copy, or `None` if the clause is a tautology.
    pub fn normalized(&self) -> Option<Clause> {
        if self.is_tautology() {
            return None;
        }
        let mut lits = self.lits.clone();
        lits.sort_unstable_by_key(|l| (l.var(), !l.is_positive()));
        lits.dedup();
        Some(Clause { lits })
    }

    /// Largest variable index referenced, 0 for the empty clause.
    pub fn max_var(&self) -> u32 {
        self.lits.iter().map(|l| l.var()).max().unwrap_or(0)
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

impl FromIterator<Lit> for Clause {
    fn from_iter<T: IntoIterator<Item = Lit>>(iter: T) -> Clause {
        Clause {
            lits: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Clause {
    type Item = Lit;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, Lit>>;

    fn into_iter(self) -> Self::IntoIter {
        self.lits.iter().copied()
    }
}

/// A total truth assignment over variables `1..=num_vars`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    /// All-false assignment over `num_vars` variables.
    pub fn all_false(num_vars: u32) -> Assignment {
        Assignment {
            values: vec![false; num_vars as usize],
        }
    }

    pub fn from_values(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    /// Assignment in which variable `i` takes bit `num_vars - i` of `mask`,
    /// so that ascending masks enumerate assignments in lexicographic order
    /// of `(x1, .., xn)` with `false < true`.
    pub fn from_lex_index(mask: u64, num_vars: u32) -> Assignment {
        let values = (1..=num_vars)
            .map(|v| mask >> (num_vars - v) & 1 == 1)
            .collect();
        Assignment { values }
    }

    pub fn num_vars(&self) -> u32 {
        self.values.len() as u32
    }

    /// Truth value of variable `var` (1-based).
    ///
    /// # Panics
    ///
    /// If `var` is out of range.
    pub fn value(&self, var: u32) -> bool {
        self.values[var as usize - 1]
    }

    pub fn set(&mut self, var: u32, value: bool) {
        self.values[var as usize - 1] = value;
    }

    /// Truth value of a literal.
    pub fn lit_value(&self, lit: Lit) -> bool {
        lit.eval(self.value(lit.var()))
    }

    /// Whether at least one literal of `clause` is true.
    pub fn satisfies(&self, clause: &Clause) -> bool {
        clause.into_iter().any(|l| self.lit_value(l))
    }

    /// The `v`-line binary-string form (`num_vars` chars of `0`/`1`).
    pub fn to_binary_string(&self) -> String {
        self.values
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}
