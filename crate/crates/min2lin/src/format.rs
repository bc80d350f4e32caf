//! The line-oriented instance format.
//!
//! ```text
//! # comment
//! ring 8
//! crisp 1*x = 4
//! soft 2*a + -1*x = 0
//! ```
//!
//! Coefficients may be negative and are reduced modulo the ring. Two terms
//! on the same variable are merged into one.

use std::fmt::Write as _;

use min2lin_core::modring::{RingContext, RingError};
use min2lin_core::system::{Equation, System, Term};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: equations may use at most two variables")]
    TooManyVariables { line: usize },
    #[error("line {line}: bad ring: {source}")]
    Ring { line: usize, source: RingError },
    #[error("missing `ring <m>` header")]
    MissingRing,
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse(text: &str) -> Result<System, ParseError> {
    let mut sys: Option<System> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, rest) = content
            .split_once(char::is_whitespace)
            .unwrap_or((content, ""));
        let rest = rest.trim();
        match head {
            "ring" => {
                if sys.is_some() {
                    return Err(syntax(line, "second `ring` header"));
                }
                let m: u64 = rest
                    .parse()
                    .map_err(|_| syntax(line, format!("bad modulus `{rest}`")))?;
                let ctx =
                    RingContext::new(m).map_err(|source| ParseError::Ring { line, source })?;
                sys = Some(System::new(ctx));
            }
            "crisp" | "soft" => {
                let sys = sys.as_mut().ok_or(ParseError::MissingRing)?;
                let eq = parse_equation(sys, rest, head == "crisp", line)?;
                sys.push(eq);
            }
            other => {
                return Err(syntax(
                    line,
                    format!("expected `ring`, `crisp` or `soft`, found `{other}`"),
                ))
            }
        }
    }
    sys.ok_or(ParseError::MissingRing)
}

fn parse_equation(
    sys: &mut System,
    text: &str,
    crisp: bool,
    line: usize,
) -> Result<Equation, ParseError> {
    let (lhs, rhs) = text
        .split_once('=')
        .ok_or_else(|| syntax(line, "missing `=`"))?;
    let ctx = sys.ctx().clone();
    let constant: i64 = rhs
        .trim()
        .parse()
        .map_err(|_| syntax(line, format!("bad constant `{}`", rhs.trim())))?;
    let mut parsed: Vec<(u64, String)> = Vec::new();
    for term in lhs.split('+') {
        let term = term.trim();
        let (c, v) = term
            .split_once('*')
            .ok_or_else(|| syntax(line, format!("expected `<coef>*<var>`, found `{term}`")))?;
        let (c, v) = (c.trim(), v.trim());
        let coef: i64 = c
            .parse()
            .map_err(|_| syntax(line, format!("bad coefficient `{c}`")))?;
        if !is_name(v) {
            return Err(syntax(line, format!("bad variable name `{v}`")));
        }
        parsed.push((ctx.reduce(coef), v.to_string()));
    }
    let mut names: Vec<&str> = parsed.iter().map(|(_, v)| v.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() > 2 {
        return Err(ParseError::TooManyVariables { line });
    }
    let terms: Vec<Term> = parsed
        .iter()
        .map(|(c, v)| Term::new(*c, sys.var(v)))
        .collect();
    let merged: Vec<Term> = Equation::new(&terms, 0, crisp)
        .reduced(ctx.modulus())
        .terms()
        .to_vec();
    Ok(Equation::new(&merged, ctx.reduce(constant), crisp))
}

pub fn serialize(sys: &System) -> String {
    let mut out = format!("ring {}\n", sys.modulus());
    for e in sys.equations() {
        out.push_str(if e.crisp { "crisp " } else { "soft " });
        for (i, t) in e.terms().iter().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            let _ = write!(out, "{}*{}", t.coef, sys.vars()[t.var]);
        }
        let _ = writeln!(out, " = {}", e.rhs);
    }
    out
}
