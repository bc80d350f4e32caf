//! Command-line front end. Exit codes: 0 success, 1 a check failed or no
//! solution was found, 2 bad input or flags.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use min2lin_core::modring::RingContext;
use min2lin_core::oracle::{brute_optimum, check_lemma, LemmaKind};
use min2lin_core::shadow::ShadowMode;
use min2lin_core::solver::{SolverConfig, Status};
use min2lin_core::system::{gen_planted, System};

use crate::dot::export_graph;
use crate::format::{parse, serialize};
use crate::json::{LemmaJson, OracleJson, SolutionJson, VerifyJson};
use crate::parallel::solve_threaded;
use crate::verify::verify;

#[derive(Debug, Parser)]
#[command(name = "min2lin", version, about = "Approximate Min-2-Lin over Z_m")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Random important-separator covers.
    Impsep,
    /// Every vertex joins the cover with probability 1/2.
    Bernoulli,
    /// Deterministic: one cover per conformal cut of size at most 2q.
    Exhaustive,
    /// Deterministic: every vertex subset (small graphs only).
    Subsets,
}

impl From<ModeArg> for ShadowMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Impsep => ShadowMode::ImpSep,
            ModeArg::Bernoulli => ShadowMode::Bernoulli,
            ModeArg::Exhaustive => ShadowMode::ExhaustiveCuts,
            ModeArg::Subsets => ShadowMode::ExhaustiveSubsets,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance with budget k; prints the solution as JSON.
    Solve {
        file: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per level and q; default max(64, 4^k).
        #[arg(long)]
        repeats: Option<u64>,
        #[arg(long, value_enum, default_value = "impsep")]
        shadow_mode: ModeArg,
        /// Include per-level audit records.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact optimum by enumeration.
    Oracle { file: PathBuf },
    /// Re-check a solution document; exit 0 if valid, 1 if not.
    Verify {
        file: PathBuf,
        solution: PathBuf,
        /// Check the deletion bound for this k instead of the recorded one.
        #[arg(short)]
        k: Option<usize>,
    },
    /// Print a random instance with a planted assignment.
    Gen {
        #[arg(long)]
        ring: u64,
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        eqs: usize,
        #[arg(long, default_value_t = 0)]
        noise: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one of the built-in structural checks.
    LemmaCheck {
        #[arg(value_parser = parse_kind)]
        kind: LemmaKind,
        #[arg(long, default_value_t = 8)]
        modulus: u64,
        /// Number of random cases for the seeded kinds.
        #[arg(long, default_value_t = 200)]
        seeds: u64,
    },
    /// Print the class graph of a simple instance in DOT.
    ExportGraph { file: PathBuf },
}

fn parse_kind(s: &str) -> Result<LemmaKind, String> {
    LemmaKind::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = LemmaKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown kind `{s}`; expected one of {}", names.join(", "))
    })
}

fn read_system(path: &Path) -> anyhow::Result<System> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Runs the tool and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Solve {
            file,
            k,
            seed,
            repeats,
            shadow_mode,
            trace,
            threads,
            max_depth,
            output,
        } => {
            let sys = read_system(&file)?;
            let mode = ShadowMode::from(shadow_mode);
            if repeats.is_some()
                && matches!(
                    mode,
                    ShadowMode::ExhaustiveCuts | ShadowMode::ExhaustiveSubsets
                )
            {
                writeln!(err, "warning: --repeats is ignored in deterministic modes")?;
            }
            let cfg = SolverConfig {
                mode,
                repeats,
                seed,
                max_depth,
                trace,
            };
            let result = solve_threaded(&sys, k, &cfg, threads)?;
            let text = to_json(&SolutionJson::from_result(&sys, &result, trace));
            match output {
                Some(path) => fs::write(&path, &text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(if result.status == Status::Solved {
                0
            } else {
                1
            })
        }
        Command::Oracle { file } => {
            let sys = read_system(&file)?;
            let r = brute_optimum(&sys.lin())?;
            out.write_all(to_json(&OracleJson::from_result(&sys, &r)).as_bytes())?;
            Ok(if r.optimum.is_some() { 0 } else { 1 })
        }
        Command::Verify { file, solution, k } => {
            let sys = read_system(&file)?;
            let text = fs::read_to_string(&solution)
                .with_context(|| format!("reading {}", solution.display()))?;
            let doc: SolutionJson = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", solution.display()))?;
            let report = match verify(&sys, &doc, k) {
                Ok(cost) => VerifyJson {
                    valid: true,
                    cost: Some(cost),
                    reason: None,
                },
                Err(e) => VerifyJson {
                    valid: false,
                    cost: None,
                    reason: Some(e.to_string()),
                },
            };
            out.write_all(to_json(&report).as_bytes())?;
            Ok(if report.valid { 0 } else { 1 })
        }
        Command::Gen {
            ring,
            vars,
            eqs,
            noise,
            seed,
        } => {
            if vars == 0 {
                return Err(anyhow!("--vars must be positive"));
            }
            let ctx = RingContext::new(ring)?;
            if ctx.modulus() < 2 {
                return Err(anyhow!("--ring must be at least 2"));
            }
            let (sys, _) = gen_planted(&ctx, vars, eqs, noise, seed);
            out.write_all(serialize(&sys).as_bytes())?;
            Ok(0)
        }
        Command::LemmaCheck {
            kind,
            modulus,
            seeds,
        } => {
            let report = check_lemma(kind, modulus, 0..seeds)?;
            out.write_all(to_json(&LemmaJson::from(&report)).as_bytes())?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::ExportGraph { file } => {
            let sys = read_system(&file)?;
            out.write_all(export_graph(&sys)?.as_bytes())?;
            Ok(0)
        }
    }
}
