//! Brute-force reference answers and exhaustive checks of the structural
//! facts the solver relies on.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classgraph::{ClassGraph, SOURCE};
use crate::linsolve::{self, ClassConstraint};
use crate::modring::{factorize, mul_mod, ClassId, ClassTable, PrimePower, RingError};
use crate::shadow::{clique_lift, CutGraph, PlainGraph};
use crate::simplify::{SimpleEq, SimpleInstance};
use crate::solver::{lift, nxt, pieces, respects};
use crate::system::LinSystem;

/// Largest number of assignments enumerated for one connected piece.
pub const MAX_ENUMERATION: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("a piece with {vars} variables over Z_{modulus} is too large to enumerate")]
    TooLarge { vars: usize, modulus: u64 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("modulus {got} exceeds the limit {max} for this check")]
    ModulusTooLarge { max: u64, got: u64 },
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// `None` when the crisp equations alone are unsatisfiable.
    pub optimum: Option<usize>,
    pub witness: Option<Vec<u64>>,
    pub deletions: Vec<usize>,
}

/// Exact optimum by branch and bound over assignments, one connected
/// piece at a time.
pub fn brute_optimum(sys: &LinSystem) -> Result<OracleResult, OracleError> {
    let m = sys.modulus;
    let norm: Vec<_> = sys.eqs.iter().map(|e| e.normalized(m)).collect();
    let eq_vars: Vec<Vec<usize>> = norm.iter().map(|e| e.vars().collect()).collect();
    let mut witness = vec![0u64; sys.num_vars];
    for e in &norm {
        if e.terms().is_empty() && e.rhs != 0 && e.crisp {
            return Ok(OracleResult {
                optimum: None,
                witness: None,
                deletions: Vec::new(),
            });
        }
    }
    let parts = pieces(sys.num_vars, &eq_vars);
    for (vars, _) in &parts {
        let size = m.checked_pow(vars.len() as u32);
        if size.is_none_or(|s| s > MAX_ENUMERATION) {
            return Err(OracleError::TooLarge {
                vars: vars.len(),
                modulus: m,
            });
        }
    }
    for (vars, ids) in &parts {
        let mut local = vec![usize::MAX; sys.num_vars];
        for (i, &v) in vars.iter().enumerate() {
            local[v] = i;
        }
        // Equations checked once their last variable is set.
        let mut at: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
        for &id in ids {
            let last = eq_vars[id]
                .iter()
                .map(|&v| local[v])
                .max()
                .expect("piece equations have variables");
            at[last].push(id);
        }
        let mut bb = BranchBound {
            sys,
            vars,
            at: &at,
            values: vec![0; sys.num_vars],
            best: None,
        };
        bb.go(0, 0);
        let Some((_, best)) = bb.best else {
            return Ok(OracleResult {
                optimum: None,
                witness: None,
                deletions: Vec::new(),
            });
        };
        for &v in vars.iter() {
            witness[v] = best[v];
        }
    }
    let deletions = sys.violated(&witness);
    Ok(OracleResult {
        optimum: Some(deletions.len()),
        witness: Some(witness),
        deletions,
    })
}

struct BranchBound<'a> {
    sys: &'a LinSystem,
    vars: &'a [usize],
    at: &'a [Vec<usize>],
    values: Vec<u64>,
    best: Option<(usize, Vec<u64>)>,
}

impl BranchBound<'_> {
    fn go(&mut self, depth: usize, cost: usize) {
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        if depth == self.vars.len() {
            self.best = Some((cost, self.values.clone()));
            return;
        }
        let m = self.sys.modulus;
        let v = self.vars[depth];
        for a in 0..m {
            self.values[v] = a;
            let mut c = cost;
            let mut ok = true;
            for &id in &self.at[depth] {
                let e = &self.sys.eqs[id];
                if !e.satisfied_by(&self.values, m) {
                    if e.crisp {
                        ok = false;
                        break;
                    }
                    c += 1;
                }
            }
            if ok {
                self.go(depth + 1, c);
            }
        }
        self.values[v] = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaKind {
    /// Classes partition the ring and match their `(ord, lsu)` keys.
    Partition,
    /// Multiplying a class by `r` lands inside one class, injectively on
    /// nonzero images.
    Matching,
    /// Members of one class differ by multiples of `p`.
    Absorbing,
    /// A satisfying assignment satisfies every edge of its equation.
    EdgeSatisfaction,
    /// Respecting class assignments are exactly those whose rewritten
    /// equation is satisfiable; lifted solutions satisfy the original and
    /// include every solution agreeing with the classes.
    NextLevel,
    /// The closest cut inside the edges of a solution is a small conformal
    /// cut with an agreeing solution.
    DeletedEdges,
    /// Any cut separating `s` from the shadow of that cut has an agreeing
    /// solution once its equations are added to the deletions.
    AntiSol,
    /// Edge cuts of size at most `2q` correspond to transversals of the
    /// clique lift.
    CliqueLift,
}

impl LemmaKind {
    pub const ALL: [LemmaKind; 8] = [
        LemmaKind::Partition,
        LemmaKind::Matching,
        LemmaKind::Absorbing,
        LemmaKind::EdgeSatisfaction,
        LemmaKind::NextLevel,
        LemmaKind::DeletedEdges,
        LemmaKind::AntiSol,
        LemmaKind::CliqueLift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaKind::Partition => "partition",
            LemmaKind::Matching => "matching",
            LemmaKind::Absorbing => "absorbing",
            LemmaKind::EdgeSatisfaction => "edge-satisfaction",
            LemmaKind::NextLevel => "next-level",
            LemmaKind::DeletedEdges => "deleted-edges",
            LemmaKind::AntiSol => "anti-sol",
            LemmaKind::CliqueLift => "clique-lift",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaReport {
    pub kind: LemmaKind,
    pub modulus: u64,
    pub cases: u64,
    pub counterexample: Option<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

struct Tally {
    cases: u64,
    counterexample: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            counterexample: None,
        }
    }

    /// Records one case; returns false once a counterexample is known.
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) -> bool {
        self.cases += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(what());
        }
        self.counterexample.is_none()
    }
}

fn prime_power_of(m: u64) -> Result<PrimePower, OracleError> {
    match factorize(m).as_slice() {
        [pp] => Ok(*pp),
        _ => Err(OracleError::NotPrimePower(m)),
    }
}

/// Runs one check. Ring-level kinds use `modulus` (a prime power); the
/// random kinds use `seeds`, and `CliqueLift` ignores `modulus`.
pub fn check_lemma(
    kind: LemmaKind,
    modulus: u64,
    seeds: core::ops::Range<u64>,
) -> Result<LemmaReport, OracleError> {
    let mut t = Tally::new();
    match kind {
        LemmaKind::Partition => {
            check_partition(&ClassTable::new(prime_power_of(modulus)?)?, &mut t)
        }
        LemmaKind::Matching => check_matching(&ClassTable::new(prime_power_of(modulus)?)?, &mut t),
        LemmaKind::Absorbing => {
            check_absorbing(&ClassTable::new(prime_power_of(modulus)?)?, &mut t)
        }
        LemmaKind::EdgeSatisfaction => {
            guard(modulus, 64)?;
            check_edges(&ClassTable::new(prime_power_of(modulus)?)?, &mut t)
        }
        LemmaKind::NextLevel => {
            guard(modulus, 81)?;
            check_next_level(&ClassTable::new(prime_power_of(modulus)?)?, &mut t)
        }
        LemmaKind::DeletedEdges | LemmaKind::AntiSol => {
            let table = ClassTable::new(prime_power_of(modulus)?)?;
            for seed in seeds {
                if !check_planted(&table, seed, kind == LemmaKind::AntiSol, &mut t) {
                    break;
                }
            }
        }
        LemmaKind::CliqueLift => {
            for seed in seeds {
                if !check_clique_lift(seed, &mut t) {
                    break;
                }
            }
        }
    }
    Ok(LemmaReport {
        kind,
        modulus,
        cases: t.cases,
        counterexample: t.counterexample,
    })
}

fn guard(m: u64, max: u64) -> Result<(), OracleError> {
    if m > max {
        return Err(OracleError::ModulusTooLarge { max, got: m });
    }
    Ok(())
}

fn check_partition(table: &ClassTable, t: &mut Tally) {
    let m = table.modulus();
    let pp = table.prime_power();
    let mut seen = vec![0u32; m as usize];
    for c in table.classes() {
        for a in table.members(c) {
            seen[a as usize] += 1;
            let ok = table.class_of(a) == c
                && (c.is_zero() || crate::modring::ord_lsu(a, pp) == table.ord_lsu(c));
            if !t.check(ok, || format!("{a} listed in class {} of Z_{m}", c.0)) {
                return;
            }
        }
        if !t.check(table.members(c).contains(&table.rep(c)), || {
            format!("rep of class {} outside it", c.0)
        }) {
            return;
        }
    }
    for (a, &n) in seen.iter().enumerate() {
        if !t.check(n == 1, || format!("{a} lies in {n} classes of Z_{m}")) {
            return;
        }
    }
}

fn check_matching(table: &ClassTable, t: &mut Tally) {
    let m = table.modulus();
    for r in 0..m {
        let mut images: Vec<(ClassId, ClassId)> = Vec::new();
        for c in table.classes() {
            let image = table.pi(r, c);
            let ok = table
                .members(c)
                .iter()
                .all(|&a| table.class_of(mul_mod(r, a, m)) == image);
            if !t.check(ok, || {
                format!("{r} * class {} spans several classes in Z_{m}", c.0)
            }) {
                return;
            }
            if !image.is_zero() {
                let clash = images.iter().find(|(_, d)| *d == image).map(|(c2, _)| *c2);
                if !t.check(clash.is_none(), || {
                    format!(
                        "{r} maps classes {} and {} to {} in Z_{m}",
                        clash.unwrap().0,
                        c.0,
                        image.0
                    )
                }) {
                    return;
                }
                images.push((c, image));
                let back = table.pi_inv(r, image);
                if !t.check(back == Some(c), || {
                    format!("pi_inv({r}, {}) != {}", image.0, c.0)
                }) {
                    return;
                }
            }
        }
    }
}

fn check_absorbing(table: &ClassTable, t: &mut Tally) {
    let p = table.prime_power().p;
    let m = table.modulus();
    for c in table.classes() {
        let members = table.members(c);
        for &a in &members {
            for &b in &members {
                if !t.check((a + m - b).is_multiple_of(p), || {
                    format!("{a} and {b} share class {} in Z_{m}", c.0)
                }) {
                    return;
                }
            }
        }
    }
}

/// Every simple equation over two variables (or one for pins).
fn all_simple_eqs(m: u64) -> Vec<SimpleEq> {
    let mut out = Vec::new();
    for r in 0..m {
        for crisp in [false, true] {
            out.push(SimpleEq::Binary {
                lhs: 0,
                r,
                rhs: 1,
                crisp,
            });
        }
        out.push(SimpleEq::Unary { var: 0, r });
    }
    out
}

fn check_edges(table: &ClassTable, t: &mut Tally) {
    let m = table.modulus();
    let pp = table.prime_power();
    for e in all_simple_eqs(m) {
        let inst = SimpleInstance {
            pp,
            num_vars: 2,
            eqs: vec![e],
        };
        let g = ClassGraph::build(&inst, table).expect("two distinct variables");
        for u in 0..m {
            for v in 0..m {
                let phi = [u, v];
                if !e.satisfied_by(&phi, m) {
                    continue;
                }
                let bools = g.boolean_assignment(table, &phi);
                let ok = (0..g.num_edges()).all(|id| g.edge_satisfied(id, &bools));
                if !t.check(ok, || {
                    format!("{e:?} with {phi:?} leaves an edge unsatisfied")
                }) {
                    return;
                }
            }
        }
    }
}

fn check_next_level(table: &ClassTable, t: &mut Tally) {
    let m = table.modulus();
    let pp = table.prime_power();
    let m2 = pp.lower().modulus();
    let classes: Vec<ClassId> = table.classes().collect();
    let members: Vec<Vec<u64>> = classes.iter().map(|&c| table.members(c)).collect();
    for e in all_simple_eqs(m) {
        for (i, &cu) in classes.iter().enumerate() {
            for (j, &cv) in classes.iter().enumerate() {
                let tau = [cu, cv];
                if matches!(e, SimpleEq::Unary { .. }) && j > 0 {
                    continue;
                }
                // Solutions of e agreeing with tau.
                let mut agreeing: BTreeSet<(u64, u64)> = BTreeSet::new();
                for &a in &members[i] {
                    for &b in &members[j] {
                        if e.satisfied_by(&[a, b], m) {
                            agreeing.insert((a, b));
                        }
                    }
                }
                let respected = !agreeing.is_empty();
                let ok = match nxt(&e, &tau, table) {
                    Err(_) => !respected && !respects(&e, &tau, table),
                    Ok(ne) => {
                        let mut lifted: BTreeSet<(u64, u64)> = BTreeSet::new();
                        for a in 0..m2 {
                            for b in 0..m2 {
                                if ne.satisfied_by(&[a, b], m2) {
                                    let beta = lift(&[a, b], &tau, table);
                                    lifted.insert((beta[0], beta[1]));
                                }
                            }
                        }
                        // Lifts always satisfy e and cover every agreeing
                        // solution; for a pin the second variable is free.
                        let sound = lifted.iter().all(|&(a, b)| e.satisfied_by(&[a, b], m));
                        let covers = agreeing.iter().all(|&(a, b)| match e {
                            SimpleEq::Unary { .. } => lifted.iter().any(|l| l.0 == a),
                            SimpleEq::Binary { .. } => lifted.contains(&(a, b)),
                        });
                        respected && !lifted.is_empty() && sound && covers
                    }
                };
                if !t.check(ok, || {
                    format!("{e:?} with classes ({}, {}) over Z_{m}", cu.0, cv.0)
                }) {
                    return;
                }
            }
        }
    }
}

/// A random simple instance with a hidden assignment; soft equations that
/// the assignment violates form the planted deletion set.
pub fn random_planted_simple(
    pp: PrimePower,
    nvars: usize,
    neqs: usize,
    seed: u64,
) -> (SimpleInstance, Vec<u64>, Vec<usize>) {
    let m = pp.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi: Vec<u64> = (0..nvars).map(|_| rng.random_range(0..m)).collect();
    let mut eqs = Vec::with_capacity(neqs);
    let mut z = Vec::new();
    for id in 0..neqs {
        if nvars < 2 || rng.random_bool(0.15) {
            let var = rng.random_range(0..nvars);
            eqs.push(SimpleEq::Unary { var, r: phi[var] });
            continue;
        }
        let lhs = rng.random_range(0..nvars);
        let mut rhs = rng.random_range(0..nvars - 1);
        if rhs >= lhs {
            rhs += 1;
        }
        let good: Vec<u64> = (0..m)
            .filter(|&r| mul_mod(r, phi[rhs], m) == phi[lhs])
            .collect();
        let bad: Vec<u64> = (0..m)
            .filter(|&r| mul_mod(r, phi[rhs], m) != phi[lhs])
            .collect();
        let corrupt = !bad.is_empty() && (good.is_empty() || rng.random_bool(0.3));
        let r = if corrupt {
            bad[rng.random_range(0..bad.len())]
        } else {
            good[rng.random_range(0..good.len())]
        };
        let crisp = !corrupt && rng.random_bool(0.2);
        if corrupt {
            z.push(id);
        }
        eqs.push(SimpleEq::Binary { lhs, r, rhs, crisp });
    }
    (
        SimpleInstance {
            pp,
            num_vars: nvars,
            eqs,
        },
        phi,
        z,
    )
}

fn without(inst: &SimpleInstance, drop: &BTreeSet<usize>) -> LinSystem {
    let m = inst.modulus();
    let mut sys = LinSystem::new(m, inst.num_vars);
    for (i, e) in inst.eqs.iter().enumerate() {
        if !drop.contains(&i) {
            sys.push(e.equation(m));
        }
    }
    sys
}

fn class_constraints(classes: &[ClassId]) -> Vec<ClassConstraint> {
    classes
        .iter()
        .enumerate()
        .map(|(var, &class)| ClassConstraint { var, class })
        .collect()
}

fn check_planted(table: &ClassTable, seed: u64, anti: bool, t: &mut Tally) -> bool {
    let pp = table.prime_power();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nvars = rng.random_range(2..=5);
    let neqs = rng.random_range(1..=8);
    let (inst, _, z) = random_planted_simple(pp, nvars, neqs, seed);
    let g = ClassGraph::build(&inst, table).expect("random instances avoid self loops");
    let Ok(y) = g.sep(&g.ed(&z)) else {
        return t.check(false, || format!("seed {seed}: ed(Z) is not an st-cut"));
    };
    let zset: BTreeSet<usize> = z.iter().copied().collect();
    let cut_eqs = g.eqn(&y);
    if !anti {
        let conformal = g.is_conformal(&y);
        let small = y.len() <= 2 * cut_eqs.len();
        let per_eq = cut_eqs.iter().all(|&id| {
            let n = y.iter().filter(|&&e| g.edge(e).eq == id).count();
            n <= if matches!(inst.eqs[id], SimpleEq::Unary { .. }) {
                1
            } else {
                2
            }
        });
        let agree = conformal
            && linsolve::feasible_with_classes(
                &without(&inst, &zset),
                table,
                &class_constraints(&g.clasn(&y)),
            );
        return t.check(conformal && small && per_eq && agree, || {
            format!(
                "seed {seed} over Z_{}: Z = {z:?}, sep = {y:?}",
                pp.modulus()
            )
        });
    }
    // Any cut Y' that still separates s from the shadow of Y: remove Y
    // plus some random soft edges and take the closest part.
    let comp: BTreeSet<usize> = g
        .comp(&z)
        .expect("ed(Z) is an st-cut")
        .into_iter()
        .collect();
    let mut removed = y.clone();
    for e in 0..g.num_edges() {
        if !g.edge(e).crisp && rng.random_bool(0.2) {
            removed.push(e);
        }
    }
    let y2 = g.sep(&removed).expect("superset of a cut");
    let mut z2 = comp;
    z2.extend(g.eqn(&y2));
    let ok = g.is_conformal(&y2)
        && linsolve::feasible_with_classes(
            &without(&inst, &z2),
            table,
            &class_constraints(&g.clasn(&y2)),
        );
    t.check(ok, || {
        format!(
            "seed {seed} over Z_{}: Z = {z:?}, Y' = {y2:?}",
            pp.modulus()
        )
    })
}

fn check_clique_lift(seed: u64, t: &mut Tally) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let mut g = PlainGraph::new(n);
    for _ in 0..rng.random_range(1..=8) {
        let u = rng.random_range(0..n);
        let mut v = rng.random_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        g.add_edge(u, v, rng.random_bool(0.15));
    }
    let a: Vec<usize> = (1..n).filter(|_| rng.random_bool(0.5)).collect();
    let q = rng.random_range(0..=2);
    let lifted = clique_lift(&g, q);
    let edges = g.num_edges();
    for mask in 0u32..1 << edges {
        if mask.count_ones() as usize > 2 * q {
            continue;
        }
        let x: Vec<usize> = (0..edges).filter(|&e| mask >> e & 1 == 1).collect();
        if x.iter().any(|&e| g.is_crisp(e)) {
            continue;
        }
        let mut removed = fixedbitset::FixedBitSet::with_capacity(edges);
        for &e in &x {
            removed.insert(e);
        }
        let mut src = fixedbitset::FixedBitSet::with_capacity(n);
        src.insert(SOURCE);
        let reach = crate::shadow::reach_set(&g, &src, &removed);
        let is_cut = a.iter().all(|&v| !reach.contains(v));
        let zs: Vec<usize> = x.iter().map(|&e| lifted.z(e)).collect();
        let transversal = lifted.separates(&zs, SOURCE, &a);
        if !t.check(is_cut == transversal, || {
            format!("seed {seed}: cut {x:?} towards {a:?}, q = {q}")
        }) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Equation, Term};

    fn brute_plain(sys: &LinSystem) -> Option<usize> {
        let m = sys.modulus;
        let n = sys.num_vars;
        let mut best = None;
        let mut values = vec![0u64; n];
        loop {
            if let crate::system::Cost::Finite(c) = sys.cost(&values) {
                best = Some(best.map_or(c, |b: usize| b.min(c)));
            }
            let mut i = 0;
            while i < n && values[i] == m - 1 {
                values[i] = 0;
                i += 1;
            }
            if i == n {
                return best;
            }
            values[i] += 1;
        }
    }

    #[test]
    fn triangle_optimum_is_one() {
        let mut s = LinSystem::new(8, 4);
        s.push(Equation::binary(Term::new(3, 0), Term::new(7, 1), 0, false));
        s.push(Equation::binary(Term::new(3, 1), Term::new(7, 2), 0, false));
        s.push(Equation::binary(Term::new(3, 2), Term::new(7, 0), 0, false));
        s.push(Equation::binary(Term::new(2, 0), Term::new(7, 3), 0, false));
        s.push(Equation::unary(1, 3, 4, true));
        let r = brute_optimum(&s).unwrap();
        assert_eq!(r.optimum, Some(1));
        assert_eq!(
            s.cost(r.witness.as_ref().unwrap()),
            crate::system::Cost::Finite(1)
        );
    }

    #[test]
    fn matches_plain_enumeration() {
        for seed in 0..60 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = [4u64, 6, 9][seed as usize % 3];
            let n = rng.random_range(1..=3);
            let mut s = LinSystem::new(m, n);
            for _ in 0..rng.random_range(1..=6) {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                let eq = Equation::binary(
                    Term::new(rng.random_range(0..m), u),
                    Term::new(rng.random_range(0..m), v),
                    rng.random_range(0..m),
                    rng.random_bool(0.2),
                );
                s.push(eq);
            }
            assert_eq!(
                brute_optimum(&s).unwrap().optimum,
                brute_plain(&s),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn crisp_infeasible() {
        let mut s = LinSystem::new(4, 1);
        s.push(Equation::unary(2, 0, 1, true));
        assert_eq!(brute_optimum(&s).unwrap().optimum, None);
    }

    #[test]
    fn lemma_kinds_pass_small() {
        for kind in LemmaKind::ALL {
            for m in [4, 8, 9] {
                let r = check_lemma(kind, m, 0..30).unwrap();
                assert!(r.passed(), "{}: {:?}", kind.name(), r.counterexample);
                assert!(r.cases > 0);
            }
        }
    }

    #[test]
    fn rejects_composite() {
        assert_eq!(
            check_lemma(LemmaKind::Matching, 12, 0..1),
            Err(OracleError::NotPrimePower(12))
        );
    }
}
