//! Modular arithmetic, CRT decomposition of `Z_m`, and the partition of
//! `Z_{p^n}` into classes by leading base-`p` digit.
//!
//! A nonzero `a` in `Z_{p^n}` has an *order* (index of its lowest nonzero
//! base-`p` digit) and a *leading significant unit* (that digit). Two
//! elements belong to the same class exactly when both agree; `0` forms a
//! class of its own. Class ids are dense: `0` is the zero class and the
//! nonzero class with order `b` and digit `a` has id `1 + b(p-1) + (a-1)`.

use alloc::vec::Vec;
use thiserror::Error;

/// Largest modulus accepted anywhere in the crate.
pub const MAX_MODULUS: u64 = 1 << 31;

/// Largest prime power for which a class table is materialised.
pub const MAX_CLASS_TABLE: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("modulus {0} out of range (need 2 <= m <= 2^31)")]
    BadModulus(u64),
    #[error("expected {expected} residues, got {got}")]
    ResidueCount { expected: usize, got: usize },
    #[error("residue {residue} out of range for modulus {modulus}")]
    ResidueRange { residue: u64, modulus: u64 },
    #[error("class table for {0} would exceed 2^20 entries")]
    TableTooLarge(u64),
}

pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + m as u128 - (b % m) as u128) % m as u128) as u64
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn neg_mod(a: u64, m: u64) -> u64 {
    sub_mod(0, a, m)
}

/// Reduces a signed integer into `0..m`.
pub fn reduce_signed(a: i64, m: u64) -> u64 {
    (a as i128).rem_euclid(m as i128) as u64
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m as i128) as u64)
}

/// A prime power `p^n`. `n = 0` denotes the trivial ring `Z_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimePower {
    pub p: u64,
    pub n: u32,
}

impl PrimePower {
    pub fn new(p: u64, n: u32) -> Self {
        Self { p, n }
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.n)
    }

    /// The prime power one level down, `p^(n-1)`.
    pub fn lower(&self) -> Self {
        Self {
            p: self.p,
            n: self.n.saturating_sub(1),
        }
    }

    /// Number of nonzero classes, `n(p-1)`.
    pub fn nonzero_classes(&self) -> u32 {
        self.n * (self.p as u32 - 1)
    }

    /// p-adic valuation of `a` in `Z_{p^n}`; `n` for zero.
    pub fn valuation(&self, a: u64) -> u32 {
        let m = self.modulus();
        let mut a = a % m;
        if a == 0 {
            return self.n;
        }
        let mut v = 0;
        while a.is_multiple_of(self.p) {
            a /= self.p;
            v += 1;
        }
        v
    }
}

/// Order and least significant nonzero base-`p` digit of `a` in `Z_{p^n}`; `(0, 0)` for zero.
pub fn ord_lsu(a: u64, pp: PrimePower) -> (u32, u64) {
    let mut a = a % pp.modulus();
    if a == 0 {
        return (0, 0);
    }
    let mut ord = 0;
    while a.is_multiple_of(pp.p) {
        a /= pp.p;
        ord += 1;
    }
    (ord, a % pp.p)
}

/// Prime-power factorisation in increasing order of `p`; empty for `m = 1`.
pub fn factorize(mut m: u64) -> Vec<PrimePower> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut n = 0;
            while m.is_multiple_of(p) {
                m /= p;
                n += 1;
            }
            out.push(PrimePower::new(p, n));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push(PrimePower::new(m, 1));
    }
    out
}

/// The ring `Z_m` together with its prime-power factorisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingContext {
    m: u64,
    factors: Vec<PrimePower>,
}

impl RingContext {
    pub fn new(m: u64) -> Result<Self, RingError> {
        if !(2..=MAX_MODULUS).contains(&m) {
            return Err(RingError::BadModulus(m));
        }
        Ok(Self {
            m,
            factors: factorize(m),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    /// Prime-power factors in increasing order of `p`.
    pub fn factors(&self) -> &[PrimePower] {
        &self.factors
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn reduce(&self, a: i64) -> u64 {
        reduce_signed(a, self.m)
    }

    pub fn crt_split(&self, a: u64) -> Vec<u64> {
        self.factors.iter().map(|f| a % f.modulus()).collect()
    }

    pub fn crt_combine(&self, residues: &[u64]) -> Result<u64, RingError> {
        if residues.len() != self.factors.len() {
            return Err(RingError::ResidueCount {
                expected: self.factors.len(),
                got: residues.len(),
            });
        }
        let mut x = 0u64;
        for (f, &r) in self.factors.iter().zip(residues) {
            let q = f.modulus();
            if r >= q {
                return Err(RingError::ResidueRange {
                    residue: r,
                    modulus: q,
                });
            }
            let rest = self.m / q;
            let inv = inv_mod(rest % q, q).expect("coprime factors");
            let term = mul_mod(mul_mod(r, inv, q), rest, self.m);
            x = add_mod(x, term, self.m);
        }
        Ok(x)
    }
}

/// Dense id of a class of `Z_{p^n}`; `ClassId::ZERO` is `{0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ClassId(pub u32);

impl ClassId {
    pub const ZERO: ClassId = ClassId(0);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Materialised partition of `Z_{p^n}` into classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    pp: PrimePower,
    modulus: u64,
    class_of: Vec<u32>,
}

impl ClassTable {
    pub fn new(pp: PrimePower) -> Result<Self, RingError> {
        let modulus = pp.modulus();
        if modulus > MAX_CLASS_TABLE {
            return Err(RingError::TableTooLarge(modulus));
        }
        let class_of = (0..modulus)
            .map(|a| {
                let (ord, lsu) = ord_lsu(a, pp);
                if lsu == 0 {
                    0
                } else {
                    1 + ord * (pp.p as u32 - 1) + (lsu as u32 - 1)
                }
            })
            .collect();
        Ok(Self {
            pp,
            modulus,
            class_of,
        })
    }

    pub fn prime_power(&self) -> PrimePower {
        self.pp
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of nonzero classes.
    pub fn num_nonzero(&self) -> u32 {
        self.pp.nonzero_classes()
    }

    /// All class ids, zero class first.
    pub fn classes(&self) -> impl Iterator<Item = ClassId> {
        (0..=self.num_nonzero()).map(ClassId)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = ClassId> {
        (1..=self.num_nonzero()).map(ClassId)
    }

    pub fn class_of(&self, a: u64) -> ClassId {
        ClassId(self.class_of[(a % self.modulus) as usize])
    }

    /// `(ord, lsu)` of a class; `(0, 0)` for the zero class.
    pub fn ord_lsu(&self, c: ClassId) -> (u32, u64) {
        if c.is_zero() {
            return (0, 0);
        }
        let k = c.0 - 1;
        let pm1 = self.pp.p as u32 - 1;
        (k / pm1, (k % pm1) as u64 + 1)
    }

    /// Canonical representative `lsu * p^ord`.
    pub fn rep(&self, c: ClassId) -> u64 {
        let (ord, lsu) = self.ord_lsu(c);
        lsu * self.pp.p.pow(ord)
    }

    pub fn members(&self, c: ClassId) -> Vec<u64> {
        (0..self.modulus)
            .filter(|&a| self.class_of[a as usize] == c.0)
            .collect()
    }

    /// Class of `r * a` for any member `a` of `c`.
    pub fn pi(&self, r: u64, c: ClassId) -> ClassId {
        self.class_of(mul_mod(r % self.modulus, self.rep(c), self.modulus))
    }

    /// The unique nonzero class mapped onto `d` by multiplication with `r`.
    pub fn pi_inv(&self, r: u64, d: ClassId) -> Option<ClassId> {
        if d.is_zero() {
            return None;
        }
        self.nonzero().find(|&c| self.pi(r, c) == d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn classes_as_sets(pp: PrimePower) -> Vec<Vec<u64>> {
        let t = ClassTable::new(pp).unwrap();
        t.classes().map(|c| t.members(c)).collect()
    }

    #[test]
    fn z9_classes() {
        let got = classes_as_sets(PrimePower::new(3, 2));
        assert_eq!(
            got,
            vec![vec![0], vec![1, 4, 7], vec![2, 5, 8], vec![3], vec![6]]
        );
    }

    #[test]
    fn z8_classes() {
        let got = classes_as_sets(PrimePower::new(2, 3));
        assert_eq!(got, vec![vec![0], vec![1, 3, 5, 7], vec![2, 6], vec![4]]);
    }

    #[test]
    fn ord_lsu_examples() {
        let z9 = PrimePower::new(3, 2);
        assert_eq!(ord_lsu(6, z9), (1, 2));
        assert_eq!(ord_lsu(0, z9), (0, 0));
        assert_eq!(ord_lsu(12, PrimePower::new(2, 4)), (2, 1));
    }

    #[test]
    fn crt_round_trip_z12() {
        let ctx = RingContext::new(12).unwrap();
        assert_eq!(
            ctx.factors(),
            &[PrimePower::new(2, 2), PrimePower::new(3, 1)]
        );
        assert_eq!(ctx.crt_split(7), vec![3, 1]);
        for a in 0..12 {
            assert_eq!(ctx.crt_combine(&ctx.crt_split(a)).unwrap(), a);
        }
        assert_eq!(ctx.crt_combine(&[3, 1]).unwrap(), 7);
        assert!(ctx.crt_combine(&[1]).is_err());
        assert!(ctx.crt_combine(&[4, 0]).is_err());
    }

    #[test]
    fn bad_moduli() {
        assert!(RingContext::new(1).is_err());
        assert!(RingContext::new(MAX_MODULUS + 1).is_err());
        assert!(ClassTable::new(PrimePower::new(2, 21)).is_err());
    }

    #[test]
    fn pi_follows_multiplication() {
        let t = ClassTable::new(PrimePower::new(2, 3)).unwrap();
        let units = t.class_of(1);
        let twos = t.class_of(2);
        let fours = t.class_of(4);
        assert_eq!(t.pi(2, units), twos);
        assert_eq!(t.pi(2, twos), fours);
        assert_eq!(t.pi(2, fours), ClassId::ZERO);
        assert_eq!(t.pi_inv(2, fours), Some(twos));
        assert_eq!(t.pi_inv(2, units), None);
    }

    #[test]
    fn inverse_and_valuation() {
        assert_eq!(inv_mod(3, 8), Some(3));
        assert_eq!(inv_mod(2, 8), None);
        assert_eq!(PrimePower::new(3, 3).valuation(18), 2);
        assert_eq!(PrimePower::new(3, 3).valuation(0), 3);
    }
}
