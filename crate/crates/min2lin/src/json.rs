//! JSON documents written and read by the command-line tool.

use std::collections::BTreeMap;

use min2lin_core::oracle::{LemmaReport, OracleResult};
use min2lin_core::solver::{LevelTrace, SolveResult, Status};
use min2lin_core::system::System;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusJson {
    Solved,
    NoSolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub status: StatusJson,
    pub k: usize,
    pub deleted: Vec<usize>,
    pub assignment: BTreeMap<String, u64>,
    pub cost: Option<usize>,
    pub repeats_used: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<Vec<ComponentAudit>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentAudit {
    pub modulus: u64,
    pub solved: bool,
    pub deleted: Vec<usize>,
    pub repeats_used: u64,
    pub levels: Vec<LevelJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelJson {
    pub level: usize,
    pub modulus: u64,
    pub budget: usize,
    pub q: usize,
    pub cut: Vec<usize>,
    pub cut_equations: Vec<usize>,
    pub classes: Vec<u32>,
    pub next_budget: usize,
    pub rewritten: usize,
}

impl From<&LevelTrace> for LevelJson {
    fn from(t: &LevelTrace) -> Self {
        Self {
            level: t.level,
            modulus: t.modulus,
            budget: t.budget,
            q: t.q,
            cut: t.cut.clone(),
            cut_equations: t.cut_equations.clone(),
            classes: t.classes.clone(),
            next_budget: t.next_budget,
            rewritten: t.rewritten,
        }
    }
}

pub fn named(sys: &System, values: &[u64]) -> BTreeMap<String, u64> {
    sys.vars()
        .iter()
        .cloned()
        .zip(values.iter().copied())
        .collect()
}

impl SolutionJson {
    pub fn from_result(sys: &System, r: &SolveResult, trace: bool) -> Self {
        let audit = trace.then(|| {
            r.components
                .iter()
                .map(|c| ComponentAudit {
                    modulus: c.pp.modulus(),
                    solved: c.solution.is_some(),
                    deleted: c
                        .solution
                        .as_ref()
                        .map(|s| s.deleted.clone())
                        .unwrap_or_default(),
                    repeats_used: c.repeats_used,
                    levels: c.trace.iter().map(LevelJson::from).collect(),
                })
                .collect()
        });
        Self {
            status: match r.status {
                Status::Solved => StatusJson::Solved,
                Status::NoSolution => StatusJson::NoSolution,
            },
            k: r.k,
            deleted: r.deleted.clone(),
            assignment: r
                .assignment
                .as_ref()
                .map(|a| named(sys, a))
                .unwrap_or_default(),
            cost: r.cost,
            repeats_used: r.repeats_used,
            seed: r.seed,
            audit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleJson {
    pub optimum: Option<usize>,
    pub witness: Option<BTreeMap<String, u64>>,
    pub deletions: Vec<usize>,
}

impl OracleJson {
    pub fn from_result(sys: &System, r: &OracleResult) -> Self {
        Self {
            optimum: r.optimum,
            witness: r.witness.as_ref().map(|w| named(sys, w)),
            deletions: r.deletions.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaJson {
    pub kind: String,
    pub modulus: u64,
    pub cases: u64,
    pub passed: bool,
    pub counterexample: Option<String>,
}

impl From<&LemmaReport> for LemmaJson {
    fn from(r: &LemmaReport) -> Self {
        Self {
            kind: r.kind.name().to_string(),
            modulus: r.modulus,
            cases: r.cases,
            passed: r.passed(),
            counterexample: r.counterexample.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyJson {
    pub valid: bool,
    pub cost: Option<usize>,
    pub reason: Option<String>,
}
