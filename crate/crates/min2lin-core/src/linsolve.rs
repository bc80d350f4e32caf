//! Exact solving of linear systems over `Z_m`.
//!
//! Each prime-power component is eliminated with pivots of minimal p-adic
//! valuation; once a pivot of valuation `v` is chosen, every remaining
//! entry is divisible by `p^v`, so consistency reduces to divisibility of
//! the pivot right-hand sides. Free variables are set to zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::modring::{self, inv_mod, mul_mod, sub_mod, ClassId, ClassTable, PrimePower};
use crate::system::{Equation, LinSystem, VarId};

/// A witness solution with free variables at zero, or `None` if infeasible.
pub fn solve(sys: &LinSystem) -> Option<Vec<u64>> {
    let factors = modring::factorize(sys.modulus);
    if factors.is_empty() {
        return Some(vec![0; sys.num_vars]);
    }
    if factors.len() == 1 {
        return solve_prime_power(sys, factors[0]);
    }
    let parts: Vec<Vec<u64>> = factors
        .iter()
        .map(|f| solve_prime_power(&sys.reduce_to(f.modulus()), *f))
        .collect::<Option<_>>()?;
    let m = sys.modulus;
    Some(
        (0..sys.num_vars)
            .map(|v| {
                factors.iter().zip(&parts).fold(0, |acc, (f, sol)| {
                    let q = f.modulus();
                    let rest = m / q;
                    let inv = inv_mod(rest % q, q).expect("coprime factors");
                    modring::add_mod(acc, mul_mod(mul_mod(sol[v], inv, q), rest, m), m)
                })
            })
            .collect(),
    )
}

pub fn feasible(sys: &LinSystem) -> bool {
    solve(sys).is_some()
}

fn valuation(mut a: u64, p: u64) -> u32 {
    let mut v = 0;
    while a.is_multiple_of(p) {
        a /= p;
        v += 1;
    }
    v
}

/// Solves a system whose modulus is the prime power `pp`.
pub fn solve_prime_power(sys: &LinSystem, pp: PrimePower) -> Option<Vec<u64>> {
    let q = pp.modulus();
    debug_assert_eq!(q, sys.modulus);
    let nv = sys.num_vars;
    if q == 1 {
        return Some(vec![0; nv]);
    }
    let p = pp.p;

    // Dense rows over the columns actually used; last entry is the rhs.
    let mut col_of = vec![usize::MAX; nv];
    let mut cols: Vec<VarId> = Vec::new();
    for e in &sys.eqs {
        for t in e.terms() {
            if col_of[t.var] == usize::MAX {
                col_of[t.var] = cols.len();
                cols.push(t.var);
            }
        }
    }
    let nc = cols.len();
    let mut rows: Vec<Vec<u64>> = sys
        .eqs
        .iter()
        .map(|e| {
            let mut r = vec![0u64; nc + 1];
            for t in e.terms() {
                let c = col_of[t.var];
                r[c] = (r[c] + t.coef % q) % q;
            }
            r[nc] = e.rhs % q;
            r
        })
        .collect();

    let mut row_used = vec![false; rows.len()];
    let mut col_used = vec![false; nc];
    let mut pivots: Vec<(usize, usize, u32, u64)> = Vec::new();
    loop {
        let mut best: Option<(u32, usize, usize)> = None;
        'search: for (i, r) in rows.iter().enumerate() {
            if row_used[i] {
                continue;
            }
            for j in 0..nc {
                if col_used[j] || r[j] == 0 {
                    continue;
                }
                let v = valuation(r[j], p);
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                    if v == 0 {
                        break 'search;
                    }
                }
            }
        }
        let Some((v, i, j)) = best else { break };
        let pv = p.pow(v);
        let unit_inv = inv_mod(rows[i][j] / pv, q).expect("unit part is invertible");
        let pivot_row = rows[i].clone();
        for (i2, r) in rows.iter_mut().enumerate() {
            if row_used[i2] || i2 == i || r[j] == 0 {
                continue;
            }
            let factor = mul_mod(r[j] / pv, unit_inv, q);
            for (x, &y) in r.iter_mut().zip(&pivot_row) {
                *x = sub_mod(*x, mul_mod(factor, y, q), q);
            }
        }
        row_used[i] = true;
        col_used[j] = true;
        pivots.push((i, j, v, unit_inv));
    }

    if rows
        .iter()
        .enumerate()
        .any(|(i, r)| !row_used[i] && r[nc] != 0)
    {
        return None;
    }

    let mut x = vec![0u64; nc];
    for &(i, j, v, unit_inv) in pivots.iter().rev() {
        let r = &rows[i];
        let mut rhs = r[nc];
        for c in 0..nc {
            if c != j && r[c] != 0 {
                rhs = sub_mod(rhs, mul_mod(r[c], x[c], q), q);
            }
        }
        let pv = p.pow(v);
        if !rhs.is_multiple_of(pv) {
            return None;
        }
        let reduced = q / pv;
        x[j] = mul_mod(rhs / pv, unit_inv % reduced, reduced);
    }

    let mut out = vec![0u64; nv];
    for (c, &var) in cols.iter().enumerate() {
        out[var] = x[c];
    }
    debug_assert!(sys.eqs.iter().all(|e| e.satisfied_by(&out, q)));
    Some(out)
}

/// Membership of a variable in a class of `Z_{p^n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassConstraint {
    pub var: VarId,
    pub class: ClassId,
}

/// `x in C` as a single crisp equation: `x = 0` for the zero class and
/// `p^(n-b-1) x = a p^(n-1)` for the class with order `b` and digit `a`.
pub fn class_equation(table: &ClassTable, cc: ClassConstraint) -> Equation {
    let pp = table.prime_power();
    if cc.class.is_zero() {
        return Equation::unary(1, cc.var, 0, true);
    }
    let (b, a) = table.ord_lsu(cc.class);
    let coef = pp.p.pow(pp.n - b - 1);
    Equation::unary(coef, cc.var, a * pp.p.pow(pp.n - 1), true)
}

/// Solves `sys` together with the class memberships `ccs`.
pub fn solve_with_classes(
    sys: &LinSystem,
    table: &ClassTable,
    ccs: &[ClassConstraint],
) -> Option<Vec<u64>> {
    let mut full = sys.clone();
    full.eqs
        .extend(ccs.iter().map(|&cc| class_equation(table, cc)));
    solve_prime_power(&full, table.prime_power())
}

pub fn feasible_with_classes(sys: &LinSystem, table: &ClassTable, ccs: &[ClassConstraint]) -> bool {
    solve_with_classes(sys, table, ccs).is_some()
}
