//! Reduction of an arbitrary instance over `Z_{p^n}` to *simple* instances:
//! homogeneous binary equations `u = r*v` plus crisp pins `u = r`.
//!
//! Soft unary equations are first routed through a fresh variable pinned to
//! zero. Iterative compression then adds equations in order while keeping a
//! deletion set `Z` of size at most `2k`. When the kept prefix becomes
//! infeasible, `X = Z ∪ {new}` is compressed: for each shift `α` of the
//! variables of `X`, the rest of the prefix is rewritten around the current
//! witness `χ` into a simple instance and handed to the caller's solver.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::linsolve;
use crate::modring::{add_mod, neg_mod, PrimePower};
use crate::system::{Equation, LinSystem, Term, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleEq {
    /// `lhs = r * rhs`, soft or crisp.
    Binary {
        lhs: VarId,
        r: u64,
        rhs: VarId,
        crisp: bool,
    },
    /// Crisp `var = r`.
    Unary { var: VarId, r: u64 },
}

impl SimpleEq {
    pub fn crisp(&self) -> bool {
        match *self {
            SimpleEq::Binary { crisp, .. } => crisp,
            SimpleEq::Unary { .. } => true,
        }
    }

    pub fn satisfied_by(&self, values: &[u64], m: u64) -> bool {
        self.equation(m).satisfied_by(values, m)
    }

    /// The same constraint as a general equation over `Z_m`.
    pub fn equation(&self, m: u64) -> Equation {
        match *self {
            SimpleEq::Binary { lhs, r, rhs, crisp } => {
                Equation::binary(Term::new(1, lhs), Term::new(neg_mod(r, m), rhs), 0, crisp)
                    .reduced(m)
            }
            SimpleEq::Unary { var, r } => Equation::unary(1, var, r % m, true).reduced(m),
        }
    }
}

/// A simple instance over `Z_{p^n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleInstance {
    pub pp: PrimePower,
    pub num_vars: usize,
    pub eqs: Vec<SimpleEq>,
}

impl SimpleInstance {
    pub fn modulus(&self) -> u64 {
        self.pp.modulus()
    }

    pub fn lin(&self) -> LinSystem {
        let m = self.modulus();
        LinSystem {
            modulus: m,
            num_vars: self.num_vars,
            eqs: self.eqs.iter().map(|e| e.equation(m)).collect(),
        }
    }
}

/// Reads an instance as simple if every equation already has the shape
/// `u = r*v` (constant zero, one side with coefficient `±1`) or is a crisp
/// unary equation with a unit coefficient.
pub fn as_simple(sys: &LinSystem, pp: PrimePower) -> Option<SimpleInstance> {
    let m = sys.modulus;
    let mut eqs = Vec::with_capacity(sys.eqs.len());
    for e in &sys.eqs {
        let e = e.normalized(m);
        match *e.terms() {
            [t] => {
                if !e.crisp {
                    return None;
                }
                let inv = crate::modring::inv_mod(t.coef, m)?;
                eqs.push(SimpleEq::Unary {
                    var: t.var,
                    r: crate::modring::mul_mod(inv, e.rhs, m),
                });
            }
            [t1, t2] if e.rhs == 0 => {
                let crisp = e.crisp;
                let eq = if t1.coef == m - 1 {
                    SimpleEq::Binary {
                        lhs: t1.var,
                        r: t2.coef,
                        rhs: t2.var,
                        crisp,
                    }
                } else if t1.coef == 1 {
                    SimpleEq::Binary {
                        lhs: t1.var,
                        r: neg_mod(t2.coef, m),
                        rhs: t2.var,
                        crisp,
                    }
                } else if t2.coef == m - 1 {
                    SimpleEq::Binary {
                        lhs: t2.var,
                        r: t1.coef,
                        rhs: t1.var,
                        crisp,
                    }
                } else if t2.coef == 1 {
                    SimpleEq::Binary {
                        lhs: t2.var,
                        r: neg_mod(t1.coef, m),
                        rhs: t1.var,
                        crisp,
                    }
                } else {
                    return None;
                };
                eqs.push(eq);
            }
            _ => return None,
        }
    }
    Some(SimpleInstance {
        pp,
        num_vars: sys.num_vars,
        eqs,
    })
}

/// Replaces every soft unary `a*x = b` by `a*x - w = b` for a fresh crisp
/// `w = 0`. Returns the new system and `w` when one was added. Costs are
/// preserved assignment by assignment.
pub fn eliminate_soft_unary(sys: &LinSystem) -> (LinSystem, Option<VarId>) {
    let m = sys.modulus;
    let is_soft_unary = |e: &Equation| !e.crisp && e.normalized(m).terms().len() == 1;
    if !sys.eqs.iter().any(is_soft_unary) {
        return (sys.clone(), None);
    }
    let w = sys.num_vars;
    let mut out = LinSystem::new(m, sys.num_vars + 1);
    for e in &sys.eqs {
        if is_soft_unary(e) {
            let t = e.normalized(m).terms()[0];
            out.push(Equation::binary(t, Term::new(m - 1, w), e.rhs, false));
        } else {
            out.push(*e);
        }
    }
    out.push(Equation::unary(1, w, 0, true));
    (out, Some(w))
}

/// The simple instance for one shift `α` of the variables of `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleBranch {
    /// Variables `0..num_vars` of the prefix (shifted by `χ`) followed by
    /// one fresh variable per rewritten equation.
    pub instance: SimpleInstance,
    /// Source equation of each simple equation; `None` for pins.
    pub origin: Vec<Option<usize>>,
    /// Soft equations of `X` violated by `χ + α`.
    pub offset: Vec<usize>,
}

/// Some crisp equation of `X` fails under `χ + α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchInfeasible(pub usize);

/// Rewrites `prefix` around `chi` (which must satisfy every equation outside
/// `x`) for the shift `alpha` of the variables of `x`.
///
/// Each `a*u + b*v = c` outside `X` becomes crisp `z = a*u'` plus
/// `z = -b*v'` with the original softness; a unary `a*u = c` becomes
/// `z = a*u'` with the original softness and crisp `z = 0`. Variables of `X` receive crisp pins
/// `v' = alpha(v)` and the equations of `X` are evaluated directly.
pub fn homogenize(
    prefix: &LinSystem,
    pp: PrimePower,
    x: &[usize],
    chi: &[u64],
    alpha: &[(VarId, u64)],
) -> Result<SimpleBranch, BranchInfeasible> {
    let m = prefix.modulus;
    let mut shifted = chi.to_vec();
    for &(v, a) in alpha {
        shifted[v] = add_mod(chi[v], a, m);
    }
    let mut offset = Vec::new();
    for &id in x {
        let e = &prefix.eqs[id];
        if !e.satisfied_by(&shifted, m) {
            if e.crisp {
                return Err(BranchInfeasible(id));
            }
            offset.push(id);
        }
    }

    let mut num_vars = prefix.num_vars;
    let mut eqs = Vec::new();
    let mut origin = Vec::new();
    for (id, e) in prefix.eqs.iter().enumerate() {
        if x.contains(&id) {
            continue;
        }
        debug_assert!(
            e.satisfied_by(chi, m),
            "shift must satisfy equations outside X"
        );
        let e = e.normalized(m);
        match *e.terms() {
            [] => {}
            [t] => {
                let z = num_vars;
                num_vars += 1;
                eqs.push(SimpleEq::Binary {
                    lhs: z,
                    r: t.coef,
                    rhs: t.var,
                    crisp: e.crisp,
                });
                eqs.push(SimpleEq::Unary { var: z, r: 0 });
                origin.extend([Some(id), Some(id)]);
            }
            [t1, t2] => {
                let z = num_vars;
                num_vars += 1;
                eqs.push(SimpleEq::Binary {
                    lhs: z,
                    r: t1.coef,
                    rhs: t1.var,
                    crisp: true,
                });
                eqs.push(SimpleEq::Binary {
                    lhs: z,
                    r: neg_mod(t2.coef, m),
                    rhs: t2.var,
                    crisp: e.crisp,
                });
                origin.extend([Some(id), Some(id)]);
            }
            _ => unreachable!(),
        }
    }
    for &(v, a) in alpha {
        eqs.push(SimpleEq::Unary { var: v, r: a % m });
        origin.push(None);
    }
    Ok(SimpleBranch {
        instance: SimpleInstance { pp, num_vars, eqs },
        origin,
        offset,
    })
}

/// A deletion set and an assignment satisfying everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub deleted: Vec<usize>,
    pub assignment: Vec<u64>,
}

/// Solver for simple instances: given a budget `k`, returns at most `2k`
/// deletions or gives up.
pub type SimpleSolver<'a> = dyn FnMut(&SimpleInstance, usize) -> Option<Solution> + 'a;

/// Iterative compression over `sys` (over `Z_{p^n}`, no soft unary
/// equations). Returns a solution with at most `2k` deletions, or `None`
/// when some prefix could not be compressed.
pub fn iterative_compress(
    sys: &LinSystem,
    pp: PrimePower,
    k: usize,
    core: &mut SimpleSolver<'_>,
) -> Option<Solution> {
    let m = sys.modulus;
    let mut chi = vec![0u64; sys.num_vars];
    let mut z: BTreeSet<usize> = BTreeSet::new();
    let mut prefix = LinSystem::new(m, sys.num_vars);
    for (id, e) in sys.eqs.iter().enumerate() {
        prefix.eqs.push(*e);
        if e.satisfied_by(&chi, m) {
            continue;
        }
        let mut kept = LinSystem::new(m, sys.num_vars);
        kept.eqs.extend(
            prefix
                .eqs
                .iter()
                .enumerate()
                .filter(|(i, _)| !z.contains(i))
                .map(|(_, e)| *e),
        );
        if let Some(sol) = linsolve::solve_prime_power(&kept, pp) {
            chi = sol;
            continue;
        }
        let mut x: Vec<usize> = z.iter().copied().collect();
        x.push(id);
        let sol = compress(&prefix, pp, &x, &chi, k, core)?;
        z = sol.deleted.into_iter().collect();
        chi = sol.assignment;
    }
    Some(Solution {
        deleted: z.into_iter().collect(),
        assignment: chi,
    })
}

/// One compression step: finds `Z'` with `|Z'| <= 2k` for `prefix` given a
/// solution `X` with `chi` satisfying `prefix - X`.
///
/// Budgets for the simple solver are tried in increasing order; for each
/// budget `j` the shifts are enumerated lexicographically, skipping shifts
/// where more than `k - j` soft equations of `X` fail or where equations
/// whose variables are all pinned already force more than `2j` deletions.
pub fn compress(
    prefix: &LinSystem,
    pp: PrimePower,
    x: &[usize],
    chi: &[u64],
    k: usize,
    core: &mut SimpleSolver<'_>,
) -> Option<Solution> {
    let m = prefix.modulus;
    let mut vx: Vec<VarId> = x
        .iter()
        .flat_map(|&id| {
            prefix.eqs[id]
                .normalized(m)
                .terms()
                .iter()
                .map(|t| t.var)
                .collect::<Vec<_>>()
        })
        .collect();
    vx.sort_unstable();
    vx.dedup();
    let depth_of = |v: VarId| vx.binary_search(&v).ok();

    // Slot d + 1 holds the equations whose variables are all pinned once
    // vx[d] is fixed; slot 0 holds variable-free equations of X.
    let mut x_checks: Vec<Vec<usize>> = vec![Vec::new(); vx.len() + 1];
    let mut rest_checks: Vec<Vec<usize>> = vec![Vec::new(); vx.len() + 1];
    for (id, e) in prefix.eqs.iter().enumerate() {
        let e = e.normalized(m);
        let depths: Option<Vec<usize>> = e.terms().iter().map(|t| depth_of(t.var)).collect();
        let Some(depths) = depths else { continue };
        let slot = depths.iter().map(|d| d + 1).max().unwrap_or(0);
        if x.contains(&id) {
            x_checks[slot].push(id);
        } else if !depths.is_empty() {
            rest_checks[slot].push(id);
        }
    }

    let mut search = ShiftSearch {
        prefix,
        pp,
        x,
        chi,
        vx: &vx,
        x_checks: &x_checks,
        rest_checks: &rest_checks,
        shifted: chi.to_vec(),
        alpha: Vec::with_capacity(vx.len()),
        k,
    };
    (0..=k).find_map(|j| search.run(j, core))
}

struct ShiftSearch<'a> {
    prefix: &'a LinSystem,
    pp: PrimePower,
    x: &'a [usize],
    chi: &'a [u64],
    vx: &'a [VarId],
    x_checks: &'a [Vec<usize>],
    rest_checks: &'a [Vec<usize>],
    shifted: Vec<u64>,
    alpha: Vec<(VarId, u64)>,
    k: usize,
}

impl ShiftSearch<'_> {
    fn run(&mut self, j: usize, core: &mut SimpleSolver<'_>) -> Option<Solution> {
        self.alpha.clear();
        self.shifted.copy_from_slice(self.chi);
        self.descend(0, 0, 0, j, core)
    }

    /// Returns `None` if the slot's checks break the pruning bounds, else
    /// the updated (offset, forced) counters.
    fn check_slot(
        &self,
        slot: usize,
        offset: usize,
        forced: usize,
        j: usize,
    ) -> Option<(usize, usize)> {
        let m = self.prefix.modulus;
        let (mut offset, mut forced) = (offset, forced);
        for &id in &self.x_checks[slot] {
            let e = &self.prefix.eqs[id];
            if !e.satisfied_by(&self.shifted, m) {
                if e.crisp {
                    return None;
                }
                offset += 1;
            }
        }
        for &id in &self.rest_checks[slot] {
            let e = &self.prefix.eqs[id];
            // Shifted by chi (which satisfies e) the equation is homogeneous.
            let alpha_val = e.lhs(&self.shifted, m);
            let base = e.lhs(self.chi, m);
            if alpha_val != base {
                if e.crisp {
                    return None;
                }
                forced += 1;
            }
        }
        (offset + j <= self.k && forced <= 2 * j).then_some((offset, forced))
    }

    fn descend(
        &mut self,
        depth: usize,
        offset: usize,
        forced: usize,
        j: usize,
        core: &mut SimpleSolver<'_>,
    ) -> Option<Solution> {
        let (offset, forced) = if depth == 0 {
            self.check_slot(0, offset, forced, j)?
        } else {
            (offset, forced)
        };
        if depth == self.vx.len() {
            return self.leaf(j, core);
        }
        let m = self.prefix.modulus;
        let v = self.vx[depth];
        for a in 0..m {
            self.shifted[v] = add_mod(self.chi[v], a, m);
            self.alpha.push((v, a));
            let found = match self.check_slot(depth + 1, offset, forced, j) {
                Some((o, f)) => self.descend(depth + 1, o, f, j, core),
                None => None,
            };
            self.alpha.pop();
            if found.is_some() {
                self.shifted[v] = self.chi[v];
                return found;
            }
        }
        self.shifted[v] = self.chi[v];
        None
    }

    fn leaf(&mut self, j: usize, core: &mut SimpleSolver<'_>) -> Option<Solution> {
        let m = self.prefix.modulus;
        let branch = homogenize(self.prefix, self.pp, self.x, self.chi, &self.alpha).ok()?;
        if branch.offset.len() + j > self.k {
            return None;
        }
        let inner = core(&branch.instance, j)?;
        let n = self.prefix.num_vars;
        let assignment: Vec<u64> = (0..n)
            .map(|v| add_mod(self.chi[v], inner.assignment[v], m))
            .collect();
        let mut deleted: BTreeSet<usize> = branch.offset.iter().copied().collect();
        for d in inner.deleted {
            let id = branch.origin[d].expect("pins are crisp");
            deleted.insert(id);
        }
        let ok = self
            .prefix
            .eqs
            .iter()
            .enumerate()
            .all(|(id, e)| deleted.contains(&id) || e.satisfied_by(&assignment, m));
        if !ok || deleted.len() > 2 * self.k || deleted.iter().any(|&d| self.prefix.eqs[d].crisp) {
            debug_assert!(false, "compression produced an invalid solution");
            return None;
        }
        Some(Solution {
            deleted: deleted.into_iter().collect(),
            assignment,
        })
    }
}
