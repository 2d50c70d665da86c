//! DIMACS CNF reading and writing.
//!
//! Comment lines are kept as metadata. A clause count that disagrees with the
//! header is tolerated and flagged; everything else that breaks the format is
//! an error.

use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{Clause, CnfFormula, FormulaError, Literal};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: invalid token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: literal {literal} out of range for {n_vars} variables")]
    LiteralOutOfRange { line: usize, literal: i64, n_vars: usize },
    #[error("line {line}: zero-length clause")]
    EmptyClause { line: usize },
    #[error("line {line}: variable {var} appears twice in a clause")]
    DuplicateVariable { line: usize, var: u32 },
    #[error("input is not valid UTF-8")]
    Encoding,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedDimacs {
    pub formula: CnfFormula,
    /// Comment lines with the leading `c` stripped.
    pub comments: Vec<String>,
    pub declared_clauses: usize,
    /// Set when the number of clauses read differs from the header.
    pub clause_count_mismatch: bool,
}

pub fn parse_dimacs(input: &[u8]) -> Result<ParsedDimacs, DimacsError> {
    let text = std::str::from_utf8(input).map_err(|_| DimacsError::Encoding)?;
    let mut comments = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                comments.push(rest.trim_start().to_string());
                continue;
            }
        }
        if line.starts_with('%') {
            // SATLIB end marker
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(DimacsError::MalformedHeader { line: line_no, reason: "duplicate header".into() });
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let Some((n_vars, _)) = header else {
            return Err(DimacsError::MissingHeader);
        };
        for token in line.split_whitespace() {
            let lit: i64 =
                token.parse().map_err(|_| DimacsError::InvalidToken { line: line_no, token: token.to_string() })?;
            if current.is_empty() {
                current_line = line_no;
            }
            if lit == 0 {
                if current.is_empty() {
                    return Err(DimacsError::EmptyClause { line: line_no });
                }
                clauses.push(finish_clause(std::mem::take(&mut current), current_line)?);
                continue;
            }
            if lit.unsigned_abs() as usize > n_vars {
                return Err(DimacsError::LiteralOutOfRange { line: line_no, literal: lit, n_vars });
            }
            current.push(Literal::from_dimacs(lit));
        }
    }
    let (n_vars, declared_clauses) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        // last clause without its terminating 0
        clauses.push(finish_clause(current, current_line)?);
    }
    let clause_count_mismatch = clauses.len() != declared_clauses;
    let formula = CnfFormula::new(n_vars, clauses).expect("clauses validated while parsing");
    Ok(ParsedDimacs { formula, comments, declared_clauses, clause_count_mismatch })
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), DimacsError> {
    let malformed = |reason: &str| DimacsError::MalformedHeader { line: line_no, reason: reason.to_string() };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "p" {
        return Err(malformed("expected `p cnf <vars> <clauses>`"));
    }
    if fields[1] != "cnf" {
        return Err(malformed("only the `cnf` format is supported"));
    }
    let n_vars = fields[2].parse().map_err(|_| malformed("variable count is not a number"))?;
    let n_clauses = fields[3].parse().map_err(|_| malformed("clause count is not a number"))?;
    Ok((n_vars, n_clauses))
}

fn finish_clause(literals: Vec<Literal>, line: usize) -> Result<Clause, DimacsError> {
    Clause::new(literals).map_err(|e| match e {
        FormulaError::DuplicateVariable { var, .. } => DimacsError::DuplicateVariable { line, var: var.dimacs() },
        other => unreachable!("unexpected clause error {other}"),
    })
}

pub fn emit_dimacs(formula: &CnfFormula) -> String {
    let mut out = String::with_capacity(16 + formula.n_literals() * 7);
    writeln!(out, "p cnf {} {}", formula.n_vars(), formula.n_clauses()).unwrap();
    for clause in formula.clauses() {
        for lit in clause.literals() {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// Emits a formula preceded by comment lines.
pub fn emit_dimacs_with_comments(formula: &CnfFormula, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "c {c}").unwrap();
    }
    out.push_str(&emit_dimacs(formula));
    out
}
