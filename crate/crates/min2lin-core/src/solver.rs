//! The approximation algorithm proper.
//!
//! Each prime-power component `Z_{p^n}` is solved on its own. A system is
//! split into connected pieces; an inconsistent piece is made simple by
//! iterative compression, and a simple instance is handled by guessing a
//! conformal cut `Y` of its class graph (via shadow covers and
//! [`branch`](crate::branch::branch)). The cut fixes a class for every
//! variable, which fixes the last base-`p` digit, and the rest of the
//! instance is rewritten with [`nxt`] over `Z_{p^(n-1)}` with budget
//! `k - ceil(|Y|/2)`. Solutions come back up through [`lift`].

use alloc::collections::BTreeSet;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::branch::{branch, CutCandidate};
use crate::classgraph::{ClassGraph, EdgeId, GraphError};
use crate::linsolve;
use crate::modring::{mul_mod, neg_mod, sub_mod, ClassId, ClassTable, PrimePower, RingError};
use crate::shadow::{
    conformal_reach_sets, exhaustive_subsets, sample_bernoulli, ImpSepSampler, ShadowError,
    ShadowMode,
};
use crate::simplify::{
    eliminate_soft_unary, iterative_compress, SimpleEq, SimpleInstance, Solution,
};
use crate::system::{Equation, LinSystem, SystemError, Term, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub mode: ShadowMode,
    /// Samples per `(call, q)` in the random modes; `None` means
    /// `max(64, 4^k)`.
    pub repeats: Option<u64>,
    pub seed: u64,
    pub max_depth: usize,
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: ShadowMode::ImpSep,
            repeats: None,
            seed: 0,
            max_depth: 64,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn exhaustive() -> Self {
        Self {
            mode: ShadowMode::ExhaustiveCuts,
            ..Self::default()
        }
    }

    pub fn repeats_for(&self, k: usize) -> u64 {
        self.repeats
            .unwrap_or_else(|| 4u64.checked_pow(k as u32).unwrap_or(u64::MAX).max(64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Shadow(#[from] ShadowError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("recursion went past {0} levels")]
    DepthExceeded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NxtError {
    /// The class assignment does not respect the equation.
    NotRespected,
}

/// Whether `classes` respects `e`: some values in the given classes
/// satisfy it.
pub fn respects(e: &SimpleEq, classes: &[ClassId], table: &ClassTable) -> bool {
    match *e {
        SimpleEq::Binary { lhs, r, rhs, .. } => table.pi(r, classes[rhs]) == classes[lhs],
        SimpleEq::Unary { var, r } => table.class_of(r) == classes[var],
    }
}

/// Rewrites `e` over `Z_{p^(n-1)}` for values `rep(τ(x)) + p*x'`.
pub fn nxt(e: &SimpleEq, classes: &[ClassId], table: &ClassTable) -> Result<Equation, NxtError> {
    if !respects(e, classes, table) {
        return Err(NxtError::NotRespected);
    }
    let pp = table.prime_power();
    let (p, m) = (pp.p, pp.modulus());
    let m2 = pp.lower().modulus();
    match *e {
        SimpleEq::Binary { lhs, r, rhs, crisp } => {
            let num = sub_mod(
                mul_mod(r, table.rep(classes[rhs]), m),
                table.rep(classes[lhs]),
                m,
            );
            assert_eq!(num % p, 0, "absorbing property");
            let c = (num / p) % m2;
            Ok(Equation::binary(
                Term::new(1 % m2, lhs),
                Term::new(neg_mod(r % m2, m2), rhs),
                c,
                crisp,
            )
            .reduced(m2))
        }
        SimpleEq::Unary { var, r } => {
            let num = sub_mod(r, table.rep(classes[var]), m);
            assert_eq!(num % p, 0, "absorbing property");
            Ok(Equation::unary(1 % m2, var, (num / p) % m2, true).reduced(m2))
        }
    }
}

/// `β(x) = rep(τ(x)) + p*β'(x)`.
pub fn lift(beta: &[u64], classes: &[ClassId], table: &ClassTable) -> Vec<u64> {
    let pp = table.prime_power();
    let m = pp.modulus();
    beta.iter()
        .zip(classes)
        .map(|(&b, &c)| (table.rep(c) + mul_mod(pp.p, b, m)) % m)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTrace {
    pub component: usize,
    pub level: usize,
    pub modulus: u64,
    pub budget: usize,
    pub q: usize,
    pub cut: Vec<EdgeId>,
    /// Equations of the simple instance at this level owning cut edges.
    pub cut_equations: Vec<usize>,
    pub classes: Vec<u32>,
    pub next_budget: usize,
    pub rewritten: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    NoSolution,
}

/// Outcome for one prime-power component, over `Z_{p^n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentOutcome {
    pub index: usize,
    pub pp: PrimePower,
    pub solution: Option<Solution>,
    pub repeats_used: u64,
    pub trace: Vec<LevelTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: Status,
    pub k: usize,
    /// Ids of the input equations violated by `assignment`.
    pub deleted: Vec<usize>,
    pub assignment: Option<Vec<u64>>,
    pub cost: Option<usize>,
    pub repeats_used: u64,
    pub seed: u64,
    pub components: Vec<ComponentOutcome>,
}

pub fn solve(
    sys: &crate::system::System,
    k: usize,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    sys.validate()?;
    let outcomes = (0..sys.ctx().omega())
        .map(|i| solve_component(sys, i, k, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(sys, k, cfg, outcomes)
}

/// Solves the `index`-th prime-power component of `sys`.
pub fn solve_component(
    sys: &crate::system::System,
    index: usize,
    k: usize,
    cfg: &SolverConfig,
) -> Result<ComponentOutcome, SolveError> {
    let pp = sys.ctx().factors()[index];
    let lin = sys.lin().reduce_to(pp.modulus());
    let mut eng = Engine::new(cfg, index);
    let solution = eng.solve_pp(&lin, pp, k, 0)?;
    if let Some(sol) = &solution {
        assert!(sol.deleted.len() <= 2 * k);
        assert!(lin.eqs.iter().enumerate().all(|(i, e)| {
            if sol.deleted.binary_search(&i).is_ok() {
                !e.crisp
            } else {
                e.satisfied_by(&sol.assignment, lin.modulus)
            }
        }));
    }
    let mut trace = eng.trace;
    trace.sort_by_key(|t| t.level);
    Ok(ComponentOutcome {
        index,
        pp,
        solution,
        repeats_used: eng.repeats_used,
        trace,
    })
}

/// Combines per-component outcomes (in component order) by CRT.
pub fn assemble(
    sys: &crate::system::System,
    k: usize,
    cfg: &SolverConfig,
    mut outcomes: Vec<ComponentOutcome>,
) -> Result<SolveResult, SolveError> {
    outcomes.sort_by_key(|o| o.index);
    let repeats_used = outcomes.iter().map(|o| o.repeats_used).sum();
    let mut result = SolveResult {
        status: Status::NoSolution,
        k,
        deleted: Vec::new(),
        assignment: None,
        cost: None,
        repeats_used,
        seed: cfg.seed,
        components: Vec::new(),
    };
    let sols: Option<Vec<&Solution>> = outcomes.iter().map(|o| o.solution.as_ref()).collect();
    if let Some(sols) = sols {
        let ctx = sys.ctx();
        let assignment = (0..sys.num_vars())
            .map(|v| {
                let residues: Vec<u64> = sols.iter().map(|s| s.assignment[v]).collect();
                ctx.crt_combine(&residues)
            })
            .collect::<Result<Vec<u64>, _>>()?;
        let deleted = sys.violated(&assignment)?;
        let cost = sys
            .cost(&assignment)?
            .finite()
            .expect("crisp equations hold");
        assert!(deleted.len() <= 2 * ctx.omega() * k);
        result.status = Status::Solved;
        result.deleted = deleted;
        result.cost = Some(cost);
        result.assignment = Some(assignment);
    }
    result.components = outcomes;
    Ok(result)
}

/// Connected pieces: variable lists and equation ids, ordered by first
/// equation. Equations without variables are left out.
pub(crate) fn pieces(num_vars: usize, eq_vars: &[Vec<VarId>]) -> Vec<(Vec<VarId>, Vec<usize>)> {
    let mut parent: Vec<usize> = (0..num_vars).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for vars in eq_vars {
        for w in vars.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut slot = vec![usize::MAX; num_vars];
    let mut out: Vec<(Vec<VarId>, Vec<usize>)> = Vec::new();
    for (i, vars) in eq_vars.iter().enumerate() {
        let Some(&v) = vars.first() else { continue };
        let root = find(&mut parent, v);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push((Vec::new(), Vec::new()));
        }
        out[slot[root]].1.push(i);
    }
    for v in 0..num_vars {
        let root = find(&mut parent, v);
        if slot[root] != usize::MAX {
            out[slot[root]].0.push(v);
        }
    }
    out
}

fn local_index(vars: &[VarId], num_vars: usize) -> Vec<usize> {
    let mut local = vec![usize::MAX; num_vars];
    for (i, &v) in vars.iter().enumerate() {
        local[v] = i;
    }
    local
}

/// Splits `k` over the inconsistent pieces: each piece is tried with
/// budgets `1, 2, ...` and keeps the first that works, leaving at least one
/// unit for every piece after it.
fn split_budget<P>(
    k: usize,
    pieces: &[P],
    mut attempt: impl FnMut(&P, usize) -> Result<Option<Solution>, SolveError>,
) -> Result<Option<Vec<Solution>>, SolveError> {
    let mut left = k;
    let mut out = Vec::with_capacity(pieces.len());
    for (i, piece) in pieces.iter().enumerate() {
        let after = pieces.len() - i - 1;
        if left < after + 1 {
            return Ok(None);
        }
        let mut found = None;
        for j in 1..=left - after {
            if let Some(sol) = attempt(piece, j)? {
                found = Some((j, sol));
                break;
            }
        }
        let Some((j, sol)) = found else {
            return Ok(None);
        };
        left -= j;
        out.push(sol);
    }
    Ok(Some(out))
}

struct Engine<'a> {
    cfg: &'a SolverConfig,
    component: usize,
    tables: Vec<Rc<ClassTable>>,
    calls: u64,
    repeats_used: u64,
    trace: Vec<LevelTrace>,
    error: Option<SolveError>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SolverConfig, component: usize) -> Self {
        Self {
            cfg,
            component,
            tables: Vec::new(),
            calls: 0,
            repeats_used: 0,
            trace: Vec::new(),
            error: None,
        }
    }

    fn table(&mut self, pp: PrimePower) -> Result<Rc<ClassTable>, SolveError> {
        if let Some(t) = self.tables.iter().find(|t| t.prime_power() == pp) {
            return Ok(t.clone());
        }
        let t = Rc::new(ClassTable::new(pp)?);
        self.tables.push(t.clone());
        Ok(t)
    }

    fn rng(&self, call: u64, q: usize, rep: u64) -> ChaCha8Rng {
        let mut h = self.cfg.seed;
        for x in [self.component as u64, call, q as u64, rep] {
            h = splitmix(h ^ splitmix(x));
        }
        ChaCha8Rng::seed_from_u64(h)
    }

    /// Any system over `Z_{p^n}`: at most `2k` deletions or `None`.
    fn solve_pp(
        &mut self,
        sys: &LinSystem,
        pp: PrimePower,
        k: usize,
        depth: usize,
    ) -> Result<Option<Solution>, SolveError> {
        if depth > self.cfg.max_depth {
            return Err(SolveError::DepthExceeded(self.cfg.max_depth));
        }
        let m = sys.modulus;
        if pp.n == 0 {
            return Ok(Some(Solution {
                deleted: Vec::new(),
                assignment: vec![0; sys.num_vars],
            }));
        }
        if let Some(a) = linsolve::solve_prime_power(sys, pp) {
            return Ok(Some(Solution {
                deleted: Vec::new(),
                assignment: a,
            }));
        }
        // Variable-free equations that fail must go.
        let mut k = k;
        let mut deleted = Vec::new();
        let mut eq_vars = Vec::with_capacity(sys.eqs.len());
        for (i, e) in sys.eqs.iter().enumerate() {
            let e = e.normalized(m);
            if e.terms().is_empty() && e.rhs != 0 {
                if e.crisp || k == 0 {
                    return Ok(None);
                }
                k -= 1;
                deleted.push(i);
            }
            eq_vars.push(e.vars().collect::<Vec<_>>());
        }
        let mut assignment = vec![0u64; sys.num_vars];
        let mut hard = Vec::new();
        for (vars, ids) in pieces(sys.num_vars, &eq_vars) {
            let local = local_index(&vars, sys.num_vars);
            let mut sub = LinSystem::new(m, vars.len());
            for &i in &ids {
                let e = sys.eqs[i].normalized(m);
                let terms: Vec<Term> = e
                    .terms()
                    .iter()
                    .map(|t| Term::new(t.coef, local[t.var]))
                    .collect();
                sub.eqs.push(Equation::new(&terms, e.rhs, e.crisp));
            }
            match linsolve::solve_prime_power(&sub, pp) {
                Some(a) => {
                    for (i, &v) in vars.iter().enumerate() {
                        assignment[v] = a[i];
                    }
                }
                None => hard.push((vars, ids, sub)),
            }
        }
        let sols = split_budget(k, &hard, |(_, _, sub), j| {
            self.solve_connected(sub, pp, j, depth)
        })?;
        let Some(sols) = sols else { return Ok(None) };
        for ((vars, ids, _), sol) in hard.iter().zip(sols) {
            for (i, &v) in vars.iter().enumerate() {
                assignment[v] = sol.assignment[i];
            }
            deleted.extend(sol.deleted.iter().map(|&d| ids[d]));
        }
        deleted.sort_unstable();
        Ok(Some(Solution {
            deleted,
            assignment,
        }))
    }

    fn solve_connected(
        &mut self,
        sys: &LinSystem,
        pp: PrimePower,
        k: usize,
        depth: usize,
    ) -> Result<Option<Solution>, SolveError> {
        let (sys2, _) = eliminate_soft_unary(sys);
        let mark = self.trace.len();
        let mut core = |inst: &SimpleInstance, j: usize| {
            // Only the compression step that produced the final deletions
            // keeps its trace.
            self.trace.truncate(mark);
            match self.core(inst, j, depth) {
                Ok(sol) => sol,
                Err(e) => {
                    self.error.get_or_insert(e);
                    None
                }
            }
        };
        let sol = iterative_compress(&sys2, pp, k, &mut core);
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        Ok(sol.map(|mut s| {
            s.assignment.truncate(sys.num_vars);
            s
        }))
    }

    /// A simple instance: at most `2k` deletions or `None`.
    fn core(
        &mut self,
        inst: &SimpleInstance,
        k: usize,
        depth: usize,
    ) -> Result<Option<Solution>, SolveError> {
        if self.error.is_some() {
            return Ok(None);
        }
        if let Some(a) = linsolve::solve_prime_power(&inst.lin(), inst.pp) {
            return Ok(Some(Solution {
                deleted: Vec::new(),
                assignment: a,
            }));
        }
        if k == 0 {
            return Ok(None);
        }
        let m = inst.modulus();
        let eq_vars: Vec<Vec<VarId>> = inst
            .eqs
            .iter()
            .map(|e| match *e {
                SimpleEq::Binary { lhs, rhs, .. } => vec![lhs, rhs],
                SimpleEq::Unary { var, .. } => vec![var],
            })
            .collect();
        let mut assignment = vec![0u64; inst.num_vars];
        let mut hard = Vec::new();
        for (vars, ids) in pieces(inst.num_vars, &eq_vars) {
            let local = local_index(&vars, inst.num_vars);
            let eqs = ids
                .iter()
                .map(|&i| match inst.eqs[i] {
                    SimpleEq::Binary { lhs, r, rhs, crisp } => SimpleEq::Binary {
                        lhs: local[lhs],
                        r,
                        rhs: local[rhs],
                        crisp,
                    },
                    SimpleEq::Unary { var, r } => SimpleEq::Unary { var: local[var], r },
                })
                .collect();
            let sub = SimpleInstance {
                pp: inst.pp,
                num_vars: vars.len(),
                eqs,
            };
            match linsolve::solve_prime_power(&sub.lin(), inst.pp) {
                Some(a) => {
                    for (i, &v) in vars.iter().enumerate() {
                        assignment[v] = a[i];
                    }
                }
                None => hard.push((vars, ids, sub)),
            }
        }
        let sols = split_budget(k, &hard, |(_, _, sub), j| {
            self.core_connected(sub, j, depth)
        })?;
        let Some(sols) = sols else { return Ok(None) };
        let mut deleted = Vec::new();
        for ((vars, ids, _), sol) in hard.iter().zip(sols) {
            for (i, &v) in vars.iter().enumerate() {
                assignment[v] = sol.assignment[i];
            }
            deleted.extend(sol.deleted.iter().map(|&d| ids[d]));
        }
        deleted.sort_unstable();
        debug_assert!(inst
            .eqs
            .iter()
            .enumerate()
            .all(|(i, e)| deleted.binary_search(&i).is_ok() || e.satisfied_by(&assignment, m)));
        Ok(Some(Solution {
            deleted,
            assignment,
        }))
    }

    fn core_connected(
        &mut self,
        inst: &SimpleInstance,
        k: usize,
        depth: usize,
    ) -> Result<Option<Solution>, SolveError> {
        let table = self.table(inst.pp)?;
        let g = ClassGraph::build(inst, &table)?;
        self.calls += 1;
        let call = self.calls;
        let mut seen: BTreeSet<Vec<EdgeId>> = BTreeSet::new();
        for q in 0..=k {
            match self.cfg.mode {
                ShadowMode::ExhaustiveCuts => {
                    for mut w in conformal_reach_sets(&g, 2 * q) {
                        w.toggle_range(..);
                        self.repeats_used += 1;
                        let cands = branch(inst, &g, &table, k, q, &w);
                        if let Some(s) =
                            self.try_all(inst, &g, &table, k, q, cands, &mut seen, depth)?
                        {
                            return Ok(Some(s));
                        }
                    }
                }
                ShadowMode::ExhaustiveSubsets => {
                    for cover in exhaustive_subsets(&g)? {
                        self.repeats_used += 1;
                        let cands = branch(inst, &g, &table, k, q, &cover.w);
                        if let Some(s) =
                            self.try_all(inst, &g, &table, k, q, cands, &mut seen, depth)?
                        {
                            return Ok(Some(s));
                        }
                    }
                }
                ShadowMode::ImpSep | ShadowMode::Bernoulli => {
                    let sampler = (self.cfg.mode == ShadowMode::ImpSep)
                        .then(|| ImpSepSampler::new(&g, 2 * q));
                    for rep in 0..self.cfg.repeats_for(k) {
                        let mut rng = self.rng(call, q, rep);
                        let cover = match &sampler {
                            Some(s) => s.sample(&g, &mut rng),
                            None => sample_bernoulli(&g, &mut rng),
                        };
                        self.repeats_used += 1;
                        let cands = branch(inst, &g, &table, k, q, &cover.w);
                        if let Some(s) =
                            self.try_all(inst, &g, &table, k, q, cands, &mut seen, depth)?
                        {
                            return Ok(Some(s));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn try_all(
        &mut self,
        inst: &SimpleInstance,
        g: &ClassGraph,
        table: &ClassTable,
        k: usize,
        q: usize,
        cands: Vec<CutCandidate>,
        seen: &mut BTreeSet<Vec<EdgeId>>,
        depth: usize,
    ) -> Result<Option<Solution>, SolveError> {
        for cand in cands {
            if cand.edges.len() > 2 * q || !seen.insert(cand.edges.clone()) {
                continue;
            }
            if let Some(s) = self.descend(inst, g, table, k, q, &cand, depth)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// Fixes the classes of `cand`, solves the rewritten rest one digit
    /// down and lifts the answer.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &mut self,
        inst: &SimpleInstance,
        g: &ClassGraph,
        table: &ClassTable,
        k: usize,
        q: usize,
        cand: &CutCandidate,
        depth: usize,
    ) -> Result<Option<Solution>, SolveError> {
        let m = inst.modulus();
        let cut_eqs = g.eqn(&cand.edges);
        let half = cand.edges.len().div_ceil(2);
        if half > k {
            return Ok(None);
        }
        let k2 = k - half;
        let lower = inst.pp.lower();
        let mut next = LinSystem::new(lower.modulus(), inst.num_vars);
        let mut origin = Vec::new();
        for (i, e) in inst.eqs.iter().enumerate() {
            if cut_eqs.binary_search(&i).is_ok() {
                continue;
            }
            match nxt(e, &cand.classes, table) {
                Ok(ne) => {
                    next.push(ne);
                    origin.push(i);
                }
                Err(NxtError::NotRespected) => {
                    debug_assert!(false, "conformal cut must respect every remaining equation");
                    return Ok(None);
                }
            }
        }
        let mark = self.trace.len();
        let Some(sub) = self.solve_pp(&next, lower, k2, depth + 1)? else {
            self.trace.truncate(mark);
            return Ok(None);
        };
        let assignment = lift(&sub.assignment, &cand.classes, table);
        let mut deleted: BTreeSet<usize> = cut_eqs.iter().copied().collect();
        deleted.extend(sub.deleted.iter().map(|&d| origin[d]));
        let ok = deleted.len() <= 2 * k
            && inst.eqs.iter().enumerate().all(|(i, e)| {
                if deleted.contains(&i) {
                    !e.crisp()
                } else {
                    e.satisfied_by(&assignment, m)
                }
            });
        if !ok {
            debug_assert!(false, "lifted solution failed verification");
            self.trace.truncate(mark);
            return Ok(None);
        }
        if self.cfg.trace {
            self.trace.push(LevelTrace {
                component: self.component,
                level: depth,
                modulus: m,
                budget: k,
                q,
                cut: cand.edges.clone(),
                cut_equations: cut_eqs,
                classes: cand.classes.iter().map(|c| c.0).collect(),
                next_budget: k2,
                rewritten: next.eqs.len(),
            });
        }
        Ok(Some(Solution {
            deleted: deleted.into_iter().collect(),
            assignment,
        }))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
