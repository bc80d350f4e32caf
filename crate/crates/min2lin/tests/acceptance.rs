//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails or runs over its time limit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use min2lin::cli::run;
use min2lin::format::{parse, serialize};
use min2lin::json::SolutionJson;
use min2lin::verify::verify;
use min2lin_core::classgraph::{ClassGraph, Vertex, SINK, SOURCE};
use min2lin_core::linsolve;
use min2lin_core::modring::{factorize, ClassId, ClassTable, PrimePower, RingContext};
use min2lin_core::oracle::{brute_optimum, check_lemma, random_planted_simple, LemmaKind};
use min2lin_core::shadow::ShadowMode;
use min2lin_core::simplify::{as_simple, SimpleEq};
use min2lin_core::solver::{lift, nxt, respects, solve, SolveResult, SolverConfig, Status};
use min2lin_core::system::{disjoint_copies, gen_planted, Equation, LinSystem, System, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Name, time limit in seconds, body.
type Criterion = (&'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const RINGS: [u64; 4] = [4, 8, 9, 12];

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn load(name: &str) -> System {
    let text = std::fs::read_to_string(corpus_dir().join(name)).expect("corpus file");
    parse(&text).expect("corpus parses")
}

/// Every assignment of `nvars` values in `0..m`, as a flat iterator.
fn assignments(m: u64, nvars: usize) -> impl Iterator<Item = Vec<u64>> {
    let total = m.pow(nvars as u32);
    (0..total).map(move |mut code| {
        (0..nvars)
            .map(|_| {
                let d = code % m;
                code /= m;
                d
            })
            .collect()
    })
}

/// Minimum number of soft deletions by plain enumeration.
fn enumerate_optimum(sys: &System) -> Option<usize> {
    assignments(sys.modulus(), sys.num_vars())
        .filter_map(|a| sys.cost(&a).unwrap().finite())
        .min()
}

struct Planted {
    seed: u64,
    sys: System,
    kstar: usize,
}

/// 200 planted instances per ring: at most 6 variables, at most 10
/// equations, at most 3 of them noise.
fn planted(m: u64) -> &'static [Planted] {
    static CORPUS: OnceLock<BTreeMap<u64, Vec<Planted>>> = OnceLock::new();
    let all = CORPUS.get_or_init(|| {
        RINGS
            .iter()
            .map(|&m| {
                let ctx = RingContext::new(m).unwrap();
                let family = (0..200)
                    .map(|seed| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let nvars = rng.random_range(2..=6);
                        let noise = rng.random_range(0..=3);
                        let neq = rng.random_range(1..=10 - noise);
                        let (sys, _) = gen_planted(&ctx, nvars, neq, noise, seed);
                        let kstar = brute_optimum(&sys.lin())
                            .unwrap()
                            .optimum
                            .expect("planted is feasible");
                        assert!(kstar <= noise);
                        Planted { seed, sys, kstar }
                    })
                    .collect();
                (m, family)
            })
            .collect()
    });
    &all[&m]
}

/// The soundness gate: a solved result must pass the independent verifier
/// with the deletion bound for its own `k`; an unsolved one must claim
/// nothing.
fn gate(sys: &System, r: &SolveResult) -> Result<Option<usize>, String> {
    match r.status {
        Status::Solved => verify(sys, &SolutionJson::from_result(sys, r, false), None)
            .map(Some)
            .map_err(|e| format!("invalid solution: {e}")),
        Status::NoSolution => {
            if r.deleted.is_empty() && r.assignment.is_none() && r.cost.is_none() {
                Ok(None)
            } else {
                Err("no_solution result carries a solution".into())
            }
        }
    }
}

fn prime_powers_up_to(max: u64) -> Vec<PrimePower> {
    (2..=max)
        .filter_map(|m| match factorize(m).as_slice() {
            [pp] => Some(*pp),
            _ => None,
        })
        .collect()
}

fn pp_of(m: u64) -> PrimePower {
    factorize(m)[0]
}

fn criterion_1() -> Check {
    let mut rings = 0;
    for pp in prime_powers_up_to(81) {
        let m = pp.modulus();
        for kind in [
            LemmaKind::Partition,
            LemmaKind::Matching,
            LemmaKind::Absorbing,
        ] {
            let rep = check_lemma(kind, m, 0..0).map_err(|e| e.to_string())?;
            ensure!(
                rep.passed(),
                "{} over Z_{m}: {:?}",
                kind.name(),
                rep.counterexample
            );
        }
        // Independent grouping by trailing zero digits and last nonzero digit.
        let table = ClassTable::new(pp).unwrap();
        let mut groups: BTreeMap<(u32, u64), BTreeSet<u64>> = BTreeMap::new();
        for a in 0..m {
            let (mut x, mut zeros) = (a, 0);
            while x != 0 && x % pp.p == 0 {
                x /= pp.p;
                zeros += 1;
            }
            groups.entry((zeros, x % pp.p)).or_default().insert(a);
        }
        let ours: BTreeSet<BTreeSet<u64>> = groups.into_values().collect();
        let theirs: BTreeSet<BTreeSet<u64>> = table
            .classes()
            .map(|c| table.members(c).into_iter().collect())
            .collect();
        ensure!(
            ours == theirs,
            "class partition of Z_{m} differs from digit grouping"
        );
        rings += 1;
    }
    let classes = |m: u64| -> BTreeSet<BTreeSet<u64>> {
        let t = ClassTable::new(pp_of(m)).unwrap();
        t.classes()
            .map(|c| t.members(c).into_iter().collect())
            .collect()
    };
    let sets = |v: &[&[u64]]| -> BTreeSet<BTreeSet<u64>> {
        v.iter().map(|s| s.iter().copied().collect()).collect()
    };
    // {01, 11, 21}, {02, 12, 22}, {10}, {20}, {00} in base 3.
    ensure!(
        classes(9) == sets(&[&[1, 4, 7], &[2, 5, 8], &[3], &[6], &[0]]),
        "classes of Z_9"
    );
    // {001, 011, 101, 111}, {010, 110}, {100}, {000} in base 2.
    ensure!(
        classes(8) == sets(&[&[1, 3, 5, 7], &[2, 6], &[4], &[0]]),
        "classes of Z_8"
    );
    Ok(format!(
        "{rings} prime powers up to 81; Z_9 and Z_8 classes match"
    ))
}

fn criterion_2() -> Check {
    let mut cases = 0u64;
    for m in [4u64, 8, 9] {
        let rep = check_lemma(LemmaKind::NextLevel, m, 0..0).map_err(|e| e.to_string())?;
        ensure!(
            rep.passed(),
            "library check over Z_{m}: {:?}",
            rep.counterexample
        );
        let pp = pp_of(m);
        let table = ClassTable::new(pp).unwrap();
        let m2 = pp.lower().modulus();
        let classes: Vec<ClassId> = table.classes().collect();
        let mut eqs: Vec<SimpleEq> = (0..m).map(|r| SimpleEq::Unary { var: 0, r }).collect();
        eqs.extend((0..m).map(|r| SimpleEq::Binary {
            lhs: 0,
            r,
            rhs: 1,
            crisp: false,
        }));
        for e in &eqs {
            for &cu in &classes {
                for &cv in &classes {
                    let tau = [cu, cv];
                    let agree = table.members(cu).into_iter().any(|a| {
                        table
                            .members(cv)
                            .into_iter()
                            .any(|b| e.satisfied_by(&[a, b], m))
                    });
                    ensure!(
                        respects(e, &tau, &table) == agree,
                        "respects disagrees on {e:?} with {tau:?} over Z_{m}"
                    );
                    match nxt(e, &tau, &table) {
                        Err(_) => ensure!(
                            !agree,
                            "nxt rejected a respected {e:?} with {tau:?} over Z_{m}"
                        ),
                        Ok(ne) => {
                            let sols: Vec<Vec<u64>> = assignments(m2, 2)
                                .filter(|b| ne.satisfied_by(b, m2))
                                .collect();
                            ensure!(
                                agree && !sols.is_empty(),
                                "nxt satisfiable without agreement: {e:?} {tau:?} over Z_{m}"
                            );
                            for b in sols {
                                let up = lift(&b, &tau, &table);
                                ensure!(
                                    e.satisfied_by(&up, m),
                                    "lift of {b:?} breaks {e:?} over Z_{m}"
                                );
                            }
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!(
        "{cases} (equation, class pair) cases over Z_4, Z_8, Z_9; 0 counterexamples"
    ))
}

/// Vertices reachable from `s` avoiding `removed` edges.
fn reach(g: &ClassGraph, removed: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([SOURCE]);
    let mut stack = vec![SOURCE];
    while let Some(u) = stack.pop() {
        for (id, e) in g.edges().iter().enumerate() {
            if removed.contains(&id) || (e.u != u && e.v != u) {
                continue;
            }
            let w = e.other(u);
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen
}

fn classes_of(g: &ClassGraph, r: &BTreeSet<usize>) -> Option<Vec<ClassId>> {
    let mut out = vec![None; g.num_vars()];
    for &v in r {
        if let Vertex::Class { var, class } = g.vertex_kind(v) {
            if out[var].replace(class).is_some() {
                return None;
            }
        }
    }
    Some(
        out.into_iter()
            .map(|c| c.unwrap_or(ClassId::ZERO))
            .collect(),
    )
}

fn criterion_3() -> Check {
    let mut pairs = 0;
    for m in [4u64, 8, 9] {
        let rep = check_lemma(LemmaKind::DeletedEdges, m, 0..200).map_err(|e| e.to_string())?;
        ensure!(
            rep.passed(),
            "library check over Z_{m}: {:?}",
            rep.counterexample
        );
        let pp = pp_of(m);
        let table = ClassTable::new(pp).unwrap();
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31) + m);
            let nvars = rng.random_range(2..=5);
            let neqs = rng.random_range(1..=8);
            let (inst, _, z) = random_planted_simple(pp, nvars, neqs, seed);
            let g = ClassGraph::build(&inst, &table).map_err(|e| e.to_string())?;
            let zset: BTreeSet<usize> = z.iter().copied().collect();
            let ed: BTreeSet<usize> = (0..g.num_edges())
                .filter(|&e| zset.contains(&g.edge(e).eq))
                .collect();
            let r = reach(&g, &ed);
            ensure!(
                !r.contains(&SINK),
                "Z_{m} seed {seed}: ed(Z) is not an st-cut"
            );
            let sep: BTreeSet<usize> = ed
                .iter()
                .copied()
                .filter(|&e| r.contains(&g.edge(e).u) != r.contains(&g.edge(e).v))
                .collect();
            let lib: BTreeSet<usize> = g
                .sep(&ed.iter().copied().collect::<Vec<_>>())
                .unwrap()
                .into_iter()
                .collect();
            ensure!(
                sep == lib,
                "Z_{m} seed {seed}: sep differs from the library"
            );
            let r2 = reach(&g, &sep);
            ensure!(
                r2 == r,
                "Z_{m} seed {seed}: sep does not cut where ed(Z) does"
            );
            let Some(tau) = classes_of(&g, &r2) else {
                return Err(format!("Z_{m} seed {seed}: sep is not conformal"));
            };
            let eqn: BTreeSet<usize> = sep.iter().map(|&e| g.edge(e).eq).collect();
            ensure!(
                sep.len() <= 2 * eqn.len(),
                "Z_{m} seed {seed}: |sep| > 2|eqn(sep)|"
            );
            let kept: Vec<&SimpleEq> = inst
                .eqs
                .iter()
                .enumerate()
                .filter(|(i, _)| !zset.contains(i))
                .map(|(_, e)| e)
                .collect();
            let found = assignments(m, nvars).any(|a| {
                a.iter().zip(&tau).all(|(&x, &c)| table.class_of(x) == c)
                    && kept.iter().all(|e| e.satisfied_by(&a, m))
            });
            ensure!(
                found,
                "Z_{m} seed {seed}: no solution of S - Z agrees with clasn(sep)"
            );
            pairs += 1;
        }
    }
    Ok(format!("{pairs} (S, Z) pairs over Z_4, Z_8, Z_9"))
}

fn solve_checked(sys: &System, k: usize, cfg: &SolverConfig) -> Result<SolveResult, String> {
    let r = solve(sys, k, cfg).map_err(|e| e.to_string())?;
    gate(sys, &r)?;
    Ok(r)
}

fn criterion_4() -> Check {
    let fig3 = load("fig3.min2lin");
    let tri = load("triangle_z8.min2lin");
    for (name, sys) in [("fig3", &fig3), ("triangle", &tri)] {
        let opt = brute_optimum(&sys.lin())
            .map_err(|e| e.to_string())?
            .optimum;
        ensure!(opt == Some(1), "{name}: oracle optimum {opt:?}");
        ensure!(
            enumerate_optimum(sys) == Some(1),
            "{name}: enumeration disagrees"
        );
        let r = solve_checked(sys, 1, &SolverConfig::exhaustive())?;
        ensure!(
            r.status == Status::Solved && r.deleted.len() <= 2,
            "{name}: solver gave {:?} {:?}",
            r.status,
            r.deleted
        );
    }

    let pp = PrimePower::new(2, 2);
    let table = ClassTable::new(pp).unwrap();
    let inst = as_simple(&fig3.lin(), pp).ok_or("fig3 is not simple")?;
    let g = ClassGraph::build(&inst, &table).map_err(|e| e.to_string())?;
    let label = |v: usize| match g.vertex_kind(v) {
        Vertex::Source => "s".to_string(),
        Vertex::Sink => "t".to_string(),
        Vertex::Class { var, class } => {
            let c = if class == table.class_of(1) { "O" } else { "E" };
            format!("{}_{c}", fig3.vars()[var])
        }
    };
    let edge_name = |e: usize| {
        let mut ends = [label(g.edge(e).u), label(g.edge(e).v)];
        ends.sort();
        ends.join(" ")
    };
    let soft: Vec<usize> = (0..g.num_edges()).filter(|&e| !g.edge(e).crisp).collect();
    let mut conformal_cuts: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = Vec::new();
    let mut minimum: Option<BTreeSet<usize>> = None;
    for mask in 0u32..1 << soft.len() {
        let y: BTreeSet<usize> = soft
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let r = reach(&g, &y);
        if r.contains(&SINK) || classes_of(&g, &r).is_none() {
            continue;
        }
        if minimum.as_ref().is_none_or(|best| y.len() < best.len()) {
            minimum = Some(y.clone());
        }
        if y.iter()
            .all(|&e| r.contains(&g.edge(e).u) != r.contains(&g.edge(e).v))
        {
            conformal_cuts.push((y, r));
        }
    }
    let closest: Vec<&BTreeSet<usize>> = conformal_cuts
        .iter()
        .filter(|(_, r)| {
            !conformal_cuts
                .iter()
                .any(|(_, r2)| r2.len() < r.len() && r2.is_subset(r))
        })
        .map(|(y, _)| y)
        .collect();
    ensure!(
        closest.len() == 1,
        "fig3: {} closest minimal conformal cuts",
        closest.len()
    );
    let names: BTreeSet<String> = closest[0].iter().map(|&e| edge_name(e)).collect();
    let want: BTreeSet<String> = ["a_O c_E", "b_O d_E"].map(String::from).into();
    ensure!(names == want, "fig3: closest cut is {names:?}");
    let lib: BTreeSet<usize> = g.sep(&soft).unwrap().into_iter().collect();
    ensure!(
        &lib == closest[0],
        "fig3: library sep of all soft edges is {lib:?}"
    );
    let minimum = minimum.ok_or("fig3: no conformal cut")?;
    let min_names: BTreeSet<String> = minimum.iter().map(|&e| edge_name(e)).collect();
    ensure!(
        minimum.len() == 2,
        "fig3: closest cut matches, but a minimum conformal cut has {} edge(s): {min_names:?}",
        minimum.len()
    );
    Ok(format!("optima 1 and 1; closest cut {{a_O c_E, b_O d_E}}; minimum conformal cut 2; |Z| <= 2 on both ({} edges)", g.num_edges()))
}

fn criterion_5() -> Check {
    let tri = load("triangle_z8.min2lin");
    let mut sizes = Vec::new();
    for t in 1..=3 {
        let sys = disjoint_copies(&tri, t);
        let opt = brute_optimum(&sys.lin())
            .map_err(|e| e.to_string())?
            .optimum;
        ensure!(opt == Some(t), "t = {t}: oracle optimum {opt:?}");
        let r = solve_checked(&sys, t, &SolverConfig::exhaustive())?;
        ensure!(r.status == Status::Solved, "t = {t}: no solution");
        ensure!(
            r.deleted.len() <= 2 * t,
            "t = {t}: {} deletions",
            r.deleted.len()
        );
        sizes.push(r.deleted.len());
    }
    Ok(format!("optima 1, 2, 3; deletions {sizes:?}"))
}

fn criterion_6() -> Check {
    let mut summary = Vec::new();
    for m in RINGS {
        let omega = RingContext::new(m).unwrap().omega();
        let (mut solved, mut deleted, mut optimum) = (0, 0, 0);
        for p in planted(m) {
            let r = solve_checked(&p.sys, p.kstar, &SolverConfig::exhaustive())?;
            ensure!(
                r.status == Status::Solved,
                "Z_{m} seed {}: no solution at k* = {}",
                p.seed,
                p.kstar
            );
            ensure!(
                r.deleted.len() <= 2 * omega * p.kstar,
                "Z_{m} seed {}: {} deletions for k* = {}",
                p.seed,
                r.deleted.len(),
                p.kstar
            );
            solved += 1;
            deleted += r.deleted.len();
            optimum += p.kstar;
        }
        summary.push(format!(
            "Z_{m} {solved}/200 (deleted {deleted}, sum k* {optimum})"
        ));
    }
    Ok(summary.join(", "))
}

/// Number of class-graph vertices of the largest prime-power component.
fn graph_size(sys: &System) -> usize {
    sys.ctx()
        .factors()
        .iter()
        .map(|pp| 2 + sys.num_vars() * pp.nonzero_classes() as usize)
        .max()
        .unwrap_or(2)
}

fn criterion_7() -> Check {
    let mut runs = 0;
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for (mode, name) in [
        (ShadowMode::ImpSep, "impsep"),
        (ShadowMode::Bernoulli, "bernoulli"),
    ] {
        for m in RINGS {
            let (mut ok, mut total) = (0, 0);
            for p in planted(m) {
                if mode == ShadowMode::Bernoulli && graph_size(&p.sys) > 12 {
                    continue;
                }
                for seed in 1..=5 {
                    let cfg = SolverConfig {
                        mode,
                        seed,
                        ..SolverConfig::default()
                    };
                    let r = solve(&p.sys, p.kstar, &cfg).map_err(|e| e.to_string())?;
                    gate(&p.sys, &r)
                        .map_err(|e| format!("{name} Z_{m} seed {} run {seed}: {e}", p.seed))?;
                    total += 1;
                    runs += 1;
                    if r.status == Status::Solved {
                        ok += 1;
                    }
                }
            }
            let rate = if total == 0 {
                1.0
            } else {
                ok as f64 / total as f64
            };
            summary.push(format!("{name} Z_{m} {ok}/{total}"));
            if rate < 0.9 {
                failures.push(format!("{name} Z_{m} success rate {:.1}%", rate * 100.0));
            }
        }
    }
    ensure!(runs >= 1000, "only {runs} runs");
    ensure!(
        failures.is_empty(),
        "{}; {}",
        failures.join(", "),
        summary.join(", ")
    );
    Ok(format!("{runs} runs all sound; {}", summary.join(", ")))
}

fn criterion_8() -> Check {
    let mut checked = 0;
    for p in planted(12) {
        for cfg in [
            SolverConfig::exhaustive(),
            SolverConfig {
                seed: 1,
                ..SolverConfig::default()
            },
        ] {
            let r = solve_checked(&p.sys, p.kstar, &cfg)?;
            let Some(assignment) = &r.assignment else {
                continue;
            };
            let mut union = BTreeSet::new();
            for c in &r.components {
                let q = c.pp.modulus();
                let sol = c
                    .solution
                    .as_ref()
                    .ok_or("solved result with an unsolved component")?;
                for (v, &x) in assignment.iter().enumerate() {
                    ensure!(
                        x % q == sol.assignment[v],
                        "seed {}: CRT residue mod {q} differs",
                        p.seed
                    );
                }
                for (id, e) in p.sys.equations().iter().enumerate() {
                    if !e.reduced(q).satisfied_by(&sol.assignment, q) {
                        union.insert(id);
                    }
                }
            }
            let violated: BTreeSet<usize> = p
                .sys
                .equations()
                .iter()
                .enumerate()
                .filter(|(_, e)| !e.satisfied_by(assignment, 12))
                .map(|(id, _)| id)
                .collect();
            ensure!(
                violated == union,
                "seed {}: violated {violated:?} vs union {union:?}",
                p.seed
            );
            ensure!(
                r.deleted.iter().copied().collect::<BTreeSet<_>>() == violated,
                "seed {}: deleted list",
                p.seed
            );
            ensure!(
                r.deleted.len() <= 4 * p.kstar,
                "seed {}: {} deletions for k = {}",
                p.seed,
                r.deleted.len(),
                p.kstar
            );
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} solved Z_12 runs; violations equal the component union"
    ))
}

fn criterion_9() -> Check {
    let (mut feasible, mut infeasible) = (0, 0);
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(2..=16);
        let nvars = rng.random_range(1..=4);
        let neqs = rng.random_range(1..=6);
        let mut sys = LinSystem::new(m, nvars);
        for _ in 0..neqs {
            let u = rng.random_range(0..nvars);
            let mut terms = vec![Term::new(rng.random_range(0..m), u)];
            if rng.random_bool(0.7) {
                terms.push(Term::new(
                    rng.random_range(0..m),
                    rng.random_range(0..nvars),
                ));
            }
            sys.push(Equation::new(&terms, rng.random_range(0..m), true));
        }
        let brute = assignments(m, nvars).any(|a| sys.eqs.iter().all(|e| e.satisfied_by(&a, m)));
        ensure!(
            linsolve::feasible(&sys) == brute,
            "seed {seed}: verdict differs over Z_{m}"
        );
        if let Some(w) = linsolve::solve(&sys) {
            ensure!(
                sys.eqs.iter().all(|e| e.satisfied_by(&w, m)),
                "seed {seed}: witness fails over Z_{m}"
            );
        }
        if brute {
            feasible += 1;
        } else {
            infeasible += 1;
        }
    }
    Ok(format!(
        "500 systems ({feasible} feasible, {infeasible} infeasible) match enumeration"
    ))
}

fn cli(args: &[&str]) -> (i32, Vec<u8>, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("min2lin").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, out, err)
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut corpus: Vec<(String, String, usize)> = Vec::new();
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let sys = parse(&text).map_err(|e| format!("{}: {e}", f.display()))?;
        let k = brute_optimum(&sys.lin())
            .map_err(|e| e.to_string())?
            .optimum
            .ok_or("infeasible corpus file")?;
        corpus.push((
            f.file_name().unwrap().to_string_lossy().into_owned(),
            text,
            k,
        ));
    }
    for m in RINGS {
        for p in planted(m) {
            corpus.push((
                format!("z{m}_{}.min2lin", p.seed),
                serialize(&p.sys),
                p.kstar,
            ));
        }
    }

    let (mut solved, mut identical) = (0, 0);
    for (i, (name, text, k)) in corpus.iter().enumerate() {
        let once = serialize(&parse(text).map_err(|e| format!("{name}: {e}"))?);
        let twice = serialize(&parse(&once).unwrap());
        ensure!(once == twice, "{name}: serialize is not idempotent");

        let inst = dir.path().join(name);
        std::fs::write(&inst, text).unwrap();
        let inst = inst.to_str().unwrap();
        let sol = dir.path().join(format!("{name}.json"));
        let sol = sol.to_str().unwrap();
        let k = k.to_string();
        let (code, _, err) = cli(&[
            "solve",
            inst,
            "-k",
            &k,
            "--shadow-mode",
            "exhaustive",
            "-o",
            sol,
        ]);
        ensure!(
            code == 0,
            "{name}: solve exited {code}: {}",
            String::from_utf8_lossy(&err)
        );
        let (code, out, _) = cli(&["verify", inst, sol]);
        ensure!(
            code == 0,
            "{name}: verify exited {code}: {}",
            String::from_utf8_lossy(&out)
        );
        solved += 1;

        if i % 10 == 0 {
            let base = ["solve", inst, "-k", &k, "--seed", "7"];
            let (_, a, _) = cli(&base);
            let (_, b, _) = cli(&base);
            let (_, c, _) = cli(&[&base[..], &["--threads", "2"]].concat());
            ensure!(a == b && a == c, "{name}: seeded runs differ");
            identical += 1;
        }
    }

    // A real process pipe on the hand-written files.
    let exe = env!("CARGO_BIN_EXE_min2lin");
    for f in &files {
        let k = corpus
            .iter()
            .find(|c| Path::new(&c.0) == f.file_name().unwrap())
            .unwrap()
            .2
            .to_string();
        let solve = Command::new(exe)
            .args([
                "solve",
                f.to_str().unwrap(),
                "-k",
                &k,
                "--shadow-mode",
                "exhaustive",
            ])
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| e.to_string())?;
        let status = Command::new(exe)
            .args(["verify", f.to_str().unwrap(), "/dev/stdin"])
            .stdin(solve.stdout.unwrap())
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        ensure!(status.success(), "{}: solve | verify failed", f.display());
    }
    Ok(format!(
        "{} instances round-trip; {solved} solve -> verify pipes exit 0; {identical} seeded reruns byte-identical",
        corpus.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("class partition laws", 10, criterion_1),
        ("next-level equivalence", 60, criterion_2),
        ("deleted-edges cuts", 120, criterion_3),
        ("worked examples", 30, criterion_4),
        ("disjoint-copy scaling", 120, criterion_5),
        ("exhaustive mode vs oracle", 600, criterion_6),
        ("Monte Carlo modes", 600, criterion_7),
        ("CRT combination", 120, criterion_8),
        ("linsolve vs enumeration", 60, criterion_9),
        ("CLI round trips", 600, criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(limit);
        let (verdict, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {limit} s limit; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {verdict} {name} [{:.2} s]: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
