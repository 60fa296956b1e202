//! Reading and writing WCNF files and MaxSAT solver output.
//!
//! Two WCNF dialects are supported and auto-detected:
//!
//! - legacy: `p wcnf <vars> <clauses> <top>` header, every clause line is
//!   `<weight> <lits..> 0`, and `weight == top` marks a hard clause;
//! - MSE-2022: no header, hard clause lines start with the token `h`, soft
//!   lines with their integer weight.
//!
//! Comment lines start with `c`. The single recognized structured comment is
//! `c costoffset <n>`, which both writers emit and the parser reads back so
//! that transformed instances keep reporting absolute costs.
//!
//! Solver output follows the MaxSAT-evaluation convention: an `s` status
//! line, `o` cost lines, and a `v` value line in either binary-string or
//! literal-list form.

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::WcnfInstance;
use crate::types::{Assignment, Clause, Cost, Lit, Weight, MAX_WEIGHT};

/// The two on-disk WCNF dialects.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dialect {
    Legacy,
    Mse22,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed input: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: bad weight: {reason}")]
    WeightError { line: usize, reason: String },
}

fn malformed(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn bad_weight(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::WeightError {
        line,
        reason: reason.into(),
    }
}

/// Parses a WCNF instance in either dialect.
///
/// The dialect is legacy iff the first non-comment line is a `p wcnf` header;
/// otherwise the input is read as MSE-2022. `num_vars` comes from the header
/// when there is one (extended if a clause references a larger index) and
/// from the largest referenced index otherwise. Clauses are kept verbatim:
/// duplicate literals and tautologies survive parsing so that writing the
/// instance back reproduces it exactly.
pub fn parse_wcnf(text: &str) -> Result<WcnfInstance, ParseError> {
    let mut inst = WcnfInstance::default();
    let mut header: Option<(u32, Cost)> = None; // (num_vars, top)
    let mut saw_clause = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                let mut toks = rest.split_whitespace();
                if toks.next() == Some("costoffset") {
                    if let Some(n) = toks.next().and_then(|t| t.parse::<Cost>().ok()) {
                        inst.cost_offset = n;
                    }
                }
                continue;
            }
        }
        if line.starts_with('p') {
            if header.is_some() || saw_clause {
                return Err(malformed(line_no, "unexpected p line"));
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 || toks[0] != "p" || toks[1] != "wcnf" {
                return Err(malformed(line_no, format!("invalid header '{line}'")));
            }
            let nv: u32 = toks[2]
                .parse()
                .map_err(|_| malformed(line_no, "variable count is not a non-negative integer"))?;
            let _nc: u64 = toks[3]
                .parse()
                .map_err(|_| malformed(line_no, "clause count is not a non-negative integer"))?;
            let top: Cost = toks[4]
                .parse()
                .map_err(|_| malformed(line_no, "top weight is not a non-negative integer"))?;
            header = Some((nv, top));
            continue;
        }

        saw_clause = true;
        let mut toks = line.split_whitespace();
        let first = toks.next().expect("non-empty line");
        let is_hard;
        let mut weight: Weight = 0;
        match header {
            Some((_, top)) => {
                let w: i128 = first.parse().map_err(|_| {
                    malformed(line_no, format!("expected clause weight, got '{first}'"))
                })?;
                if w <= 0 {
                    return Err(bad_weight(line_no, format!("weight {w} is not positive")));
                }
                let w = w as u128;
                if w == top {
                    is_hard = true;
                } else if w > top {
                    return Err(bad_weight(line_no, format!("weight {w} exceeds top {top}")));
                } else if w > Cost::from(MAX_WEIGHT) {
                    return Err(bad_weight(line_no, format!("weight {w} exceeds 2^63-1")));
                } else {
                    is_hard = false;
                    weight = w as Weight;
                }
            }
            None => {
                if first == "h" {
                    is_hard = true;
                } else {
                    let w: i128 = first.parse().map_err(|_| {
                        malformed(
                            line_no,
                            format!("expected 'h' or clause weight, got '{first}'"),
                        )
                    })?;
                    if w <= 0 {
                        return Err(bad_weight(line_no, format!("weight {w} is not positive")));
                    }
                    if w as u128 > Cost::from(MAX_WEIGHT) {
                        return Err(bad_weight(line_no, format!("weight {w} exceeds 2^63-1")));
                    }
                    is_hard = false;
                    weight = w as Weight;
                }
            }
        }

        let mut lits = Vec::new();
        let mut terminated = false;
        for tok in toks.by_ref() {
            let code: i64 = tok
                .parse()
                .map_err(|_| malformed(line_no, format!("literal '{tok}' is not an integer")))?;
            if code == 0 {
                terminated = true;
                break;
            }
            if code.unsigned_abs() > i32::MAX as u64 {
                return Err(malformed(line_no, format!("literal {code} out of range")));
            }
            lits.push(Lit::from_dimacs(code as i32));
        }
        if !terminated {
            return Err(malformed(line_no, "clause is missing its terminating 0"));
        }
        if toks.next().is_some() {
            return Err(malformed(line_no, "trailing tokens after terminating 0"));
        }
        let clause = Clause::new(lits);
        inst.num_vars = inst.num_vars.max(clause.max_var());
        if is_hard {
            inst.hard.push(clause);
        } else {
            inst.soft.push((clause, weight));
        }
    }

    if let Some((nv, _)) = header {
        inst.num_vars = inst.num_vars.max(nv);
    }
    Ok(inst)
}

/// Writes an instance in the requested dialect.
///
/// The emission is canonical: the cost-offset comment first, the header for
/// the legacy dialect (with `top = total soft weight + 1`), then hard clauses
/// followed by soft clauses in stored order, so `parse_wcnf(write_wcnf(i, d))`
/// reproduces `i` exactly and two writes of the same instance are
/// byte-identical.
pub fn write_wcnf(inst: &WcnfInstance, dialect: Dialect) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "c costoffset {}", inst.cost_offset);
    match dialect {
        Dialect::Legacy => {
            let top = inst.soft_weight_total() + 1;
            let _ = writeln!(
                out,
                "p wcnf {} {} {}",
                inst.num_vars,
                inst.num_clauses(),
                top
            );
            for c in &inst.hard {
                let _ = write!(out, "{top}");
                write_clause_body(&mut out, c);
            }
            for (c, w) in &inst.soft {
                let _ = write!(out, "{w}");
                write_clause_body(&mut out, c);
            }
        }
        Dialect::Mse22 => {
            for c in &inst.hard {
                out.push('h');
                write_clause_body(&mut out, c);
            }
            for (c, w) in &inst.soft {
                let _ = write!(out, "{w}");
                write_clause_body(&mut out, c);
            }
        }
    }
    out
}

fn write_clause_body(out: &mut String, clause: &Clause) {
    for l in clause {
        let _ = write!(out, " {l}");
    }
    out.push_str(" 0\n");
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum SolutionParseError {
    #[error("no v line in solver output")]
    NoSolutionLine,
    #[error("binary value line has {got} digits, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("line {line}: malformed solver output: {reason}")]
    MalformedLine { line: usize, reason: String },
}

/// Parsed solver output.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SolverOutput {
    Solution {
        assignment: Assignment,
        /// Last reported `o` value, if any. By MaxSAT-evaluation convention
        /// this excludes any cost offset carried in instance comments.
        cost: Option<Cost>,
        /// Whether the solver printed `s OPTIMUM FOUND`.
        optimal: bool,
    },
    Unsatisfiable,
}

/// Parses MSE-format solver output (`s` / `o` / `v` lines).
///
/// `num_vars` is the variable count of the solved instance; it disambiguates
/// the two `v`-line forms and pads literal-list assignments (unmentioned
/// variables default to false). `s UNSATISFIABLE` yields
/// [`SolverOutput::Unsatisfiable`] and is not an error.
pub fn parse_solution(text: &str, num_vars: u32) -> Result<SolverOutput, SolutionParseError> {
    let mut status: Option<String> = None;
    let mut cost: Option<Cost> = None;
    let mut value_payload = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("o ") {
            let o = rest
                .trim()
                .parse::<Cost>()
                .map_err(|_| SolutionParseError::MalformedLine {
                    line: line_no,
                    reason: format!("bad o value '{}'", rest.trim()),
                })?;
            cost = Some(o);
        } else if let Some(rest) = line.strip_prefix("v ") {
            value_payload.push(' ');
            value_payload.push_str(rest);
        } else if line == "v" {
            // empty value line: legal for 0-variable instances
            value_payload.push(' ');
        }
    }

    if status.as_deref() == Some("UNSATISFIABLE") {
        return Ok(SolverOutput::Unsatisfiable);
    }
    if value_payload.is_empty() && num_vars > 0 {
        return Err(SolutionParseError::NoSolutionLine);
    }

    let tokens: Vec<&str> = value_payload.split_whitespace().collect();
    let assignment = if looks_binary(&tokens, num_vars) {
        let digits: String = tokens.concat();
        if digits.len() < num_vars as usize {
            return Err(SolutionParseError::LengthMismatch {
                got: digits.len(),
                expected: num_vars as usize,
            });
        }
        Assignment::from_values(
            digits
                .bytes()
                .take(num_vars as usize)
                .map(|b| b == b'1')
                .collect(),
        )
    } else {
        let mut assignment = Assignment::all_false(num_vars);
        for (pos, tok) in tokens.iter().enumerate() {
            let code: i64 = tok.parse().map_err(|_| SolutionParseError::MalformedLine {
                line: 0,
                reason: format!("value token '{tok}' is not an integer"),
            })?;
            if code == 0 {
                if pos + 1 == tokens.len() {
                    break; // optional trailing terminator
                }
                return Err(SolutionParseError::MalformedLine {
                    line: 0,
                    reason: "literal 0 inside value line".into(),
                });
            }
            let var = code.unsigned_abs();
            if var <= num_vars as u64 {
                assignment.set(var as u32, code > 0);
            }
        }
        assignment
    };

    Ok(SolverOutput::Solution {
        assignment,
        cost,
        optimal: status.as_deref() == Some("OPTIMUM FOUND"),
    })
}

/// A value payload is the binary-string form when all tokens are runs of
/// 0/1 digits and either the total digit count matches `num_vars`, or the
/// payload is a single multi-digit run that cannot be a literal of the
/// instance (leading zero, or integer value beyond `num_vars`).
fn looks_binary(tokens: &[&str], num_vars: u32) -> bool {
    if tokens.is_empty()
        || !tokens
            .iter()
            .all(|t| t.bytes().all(|b| b == b'0' || b == b'1'))
    {
        return false;
    }
    let total: usize = tokens.iter().map(|t| t.len()).sum();
    if total == num_vars as usize {
        return true;
    }
    if let [t] = tokens {
        if t.len() > 1 {
            return t.starts_with('0')
                || t.parse::<u64>().map_or(true, |v| v > u64::from(num_vars));
        }
    }
    false
}
