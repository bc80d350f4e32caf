//! Independent re-check of a solution document against an instance.

use std::collections::BTreeSet;

use min2lin_core::system::System;
use thiserror::Error;

use crate::json::{SolutionJson, StatusJson};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("status is not `solved`")]
    NotSolved,
    #[error("assignment misses variable `{0}`")]
    MissingVariable(String),
    #[error("assignment names unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} of `{var}` is outside Z_{modulus}")]
    OutOfRange {
        var: String,
        value: u64,
        modulus: u64,
    },
    #[error("deleted id {0} does not name an equation")]
    UnknownEquation(usize),
    #[error("deleted id {0} appears twice")]
    Duplicate(usize),
    #[error("equation {0} is crisp and cannot be deleted")]
    CrispDeleted(usize),
    #[error("equation {0} is kept but violated")]
    Violated(usize),
    #[error("reported cost {reported:?} but the assignment costs {actual}")]
    CostMismatch {
        reported: Option<usize>,
        actual: usize,
    },
    #[error("{got} deletions exceed the bound {bound}")]
    TooManyDeletions { got: usize, bound: usize },
}

/// Checks the document and returns the cost of its assignment. With
/// `k` given, the deletion count must also stay within `2ω(m)k`.
pub fn verify(sys: &System, sol: &SolutionJson, k: Option<usize>) -> Result<usize, VerifyError> {
    if sol.status != StatusJson::Solved {
        return Err(VerifyError::NotSolved);
    }
    let m = sys.modulus();
    for name in sol.assignment.keys() {
        if sys.var_index(name).is_none() {
            return Err(VerifyError::UnknownVariable(name.clone()));
        }
    }
    let mut values = Vec::with_capacity(sys.num_vars());
    for name in sys.vars() {
        let &value = sol
            .assignment
            .get(name)
            .ok_or_else(|| VerifyError::MissingVariable(name.clone()))?;
        if value >= m {
            return Err(VerifyError::OutOfRange {
                var: name.clone(),
                value,
                modulus: m,
            });
        }
        values.push(value);
    }
    let mut deleted = BTreeSet::new();
    for &id in &sol.deleted {
        let e = sys
            .equations()
            .get(id)
            .ok_or(VerifyError::UnknownEquation(id))?;
        if e.crisp {
            return Err(VerifyError::CrispDeleted(id));
        }
        if !deleted.insert(id) {
            return Err(VerifyError::Duplicate(id));
        }
    }
    let mut cost = 0;
    for (id, e) in sys.equations().iter().enumerate() {
        if !e.satisfied_by(&values, m) {
            if !deleted.contains(&id) {
                return Err(VerifyError::Violated(id));
            }
            cost += 1;
        }
    }
    if sol.cost.is_some_and(|c| c != cost) {
        return Err(VerifyError::CostMismatch {
            reported: sol.cost,
            actual: cost,
        });
    }
    let bound = 2 * sys.ctx().omega() * k.unwrap_or(sol.k);
    if deleted.len() > bound {
        return Err(VerifyError::TooManyDeletions {
            got: deleted.len(),
            bound,
        });
    }
    Ok(cost)
}
