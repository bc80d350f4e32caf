//! Equations with at most two variables, instances over `Z_m`, and the
//! deletion cost of an assignment.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::modring::{add_mod, mul_mod, RingContext};

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("assignment has {got} values but the system has {expected} variables")]
    PartialAssignment { expected: usize, got: usize },
    #[error("equation {eq} refers to undeclared variable index {var}")]
    UnknownVariable { eq: usize, var: VarId },
    #[error("equation {eq} has coefficient {value} not reduced modulo {modulus}")]
    Unreduced { eq: usize, value: u64, modulus: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub coef: u64,
    pub var: VarId,
}

impl Term {
    pub fn new(coef: u64, var: VarId) -> Self {
        Self { coef, var }
    }
}

/// `c1*x1 [+ c2*x2] = rhs`, either crisp (undeletable) or soft (unit cost).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Equation {
    terms: [Term; 2],
    arity: u8,
    pub rhs: u64,
    pub crisp: bool,
}

impl Equation {
    /// Builds an equation; terms on the same variable are merged.
    pub fn new(terms: &[Term], rhs: u64, crisp: bool) -> Self {
        let mut out = [Term::new(0, 0); 2];
        let mut arity = 0usize;
        for t in terms {
            if let Some(existing) = out[..arity].iter_mut().find(|e| e.var == t.var) {
                existing.coef = existing.coef.wrapping_add(t.coef);
                continue;
            }
            assert!(arity < 2, "an equation has at most two variables");
            out[arity] = *t;
            arity += 1;
        }
        Self {
            terms: out,
            arity: arity as u8,
            rhs,
            crisp,
        }
    }

    pub fn unary(coef: u64, var: VarId, rhs: u64, crisp: bool) -> Self {
        Self::new(&[Term::new(coef, var)], rhs, crisp)
    }

    pub fn binary(a: Term, b: Term, rhs: u64, crisp: bool) -> Self {
        Self::new(&[a, b], rhs, crisp)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms[..self.arity as usize]
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms().iter().map(|t| t.var)
    }

    pub fn is_soft(&self) -> bool {
        !self.crisp
    }

    pub fn lhs(&self, values: &[u64], m: u64) -> u64 {
        self.terms().iter().fold(0, |acc, t| {
            add_mod(acc, mul_mod(t.coef, values[t.var], m), m)
        })
    }

    pub fn satisfied_by(&self, values: &[u64], m: u64) -> bool {
        self.lhs(values, m) == self.rhs % m
    }

    /// Coefficients and constant reduced modulo `m`.
    pub fn reduced(&self, m: u64) -> Self {
        let mut e = *self;
        for t in &mut e.terms[..e.arity as usize] {
            t.coef %= m;
        }
        e.rhs %= m;
        e
    }

    /// Reduced modulo `m` with zero-coefficient terms dropped.
    pub fn normalized(&self, m: u64) -> Self {
        let r = self.reduced(m);
        let kept: Vec<Term> = r.terms().iter().copied().filter(|t| t.coef != 0).collect();
        Self::new(&kept, r.rhs, r.crisp)
    }
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.crisp { "crisp" } else { "soft" };
        write!(f, "{kind}")?;
        for (i, t) in self.terms().iter().enumerate() {
            let sep = if i == 0 { " " } else { " + " };
            write!(f, "{sep}{}*v{}", t.coef, t.var)?;
        }
        write!(f, " = {}", self.rhs)
    }
}

/// Anonymous system over `Z_modulus`; equation ids are positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinSystem {
    pub modulus: u64,
    pub num_vars: usize,
    pub eqs: Vec<Equation>,
}

impl LinSystem {
    pub fn new(modulus: u64, num_vars: usize) -> Self {
        Self {
            modulus,
            num_vars,
            eqs: Vec::new(),
        }
    }

    pub fn push(&mut self, eq: Equation) -> usize {
        self.eqs.push(eq.reduced(self.modulus));
        self.eqs.len() - 1
    }

    pub fn cost(&self, values: &[u64]) -> Cost {
        let mut violated = 0;
        for e in &self.eqs {
            if !e.satisfied_by(values, self.modulus) {
                if e.crisp {
                    return Cost::Infinite;
                }
                violated += 1;
            }
        }
        Cost::Finite(violated)
    }

    pub fn violated(&self, values: &[u64]) -> Vec<usize> {
        (0..self.eqs.len())
            .filter(|&i| !self.eqs[i].satisfied_by(values, self.modulus))
            .collect()
    }

    /// The same equations reduced modulo a divisor of the modulus.
    pub fn reduce_to(&self, modulus: u64) -> Self {
        Self {
            modulus,
            num_vars: self.num_vars,
            eqs: self.eqs.iter().map(|e| e.reduced(modulus)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cost {
    Finite(usize),
    Infinite,
}

impl Cost {
    pub fn finite(self) -> Option<usize> {
        match self {
            Cost::Finite(c) => Some(c),
            Cost::Infinite => None,
        }
    }
}

/// A named instance over `Z_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    ctx: RingContext,
    vars: Vec<String>,
    eqs: Vec<Equation>,
}

impl System {
    pub fn new(ctx: RingContext) -> Self {
        Self {
            ctx,
            vars: Vec::new(),
            eqs: Vec::new(),
        }
    }

    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }

    pub fn modulus(&self) -> u64 {
        self.ctx.modulus()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn equations(&self) -> &[Equation] {
        &self.eqs
    }

    pub fn var_index(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name)
    }

    /// Declares `name` if needed and returns its index.
    pub fn var(&mut self, name: &str) -> VarId {
        match self.var_index(name) {
            Some(i) => i,
            None => {
                self.vars.push(String::from(name));
                self.vars.len() - 1
            }
        }
    }

    /// Appends an equation (reduced mod m) and returns its id.
    pub fn push(&mut self, eq: Equation) -> usize {
        self.eqs.push(eq.reduced(self.modulus()));
        self.eqs.len() - 1
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        let m = self.modulus();
        for (id, e) in self.eqs.iter().enumerate() {
            for t in e.terms() {
                if t.var >= self.vars.len() {
                    return Err(SystemError::UnknownVariable { eq: id, var: t.var });
                }
                if t.coef >= m {
                    return Err(SystemError::Unreduced {
                        eq: id,
                        value: t.coef,
                        modulus: m,
                    });
                }
            }
            if e.rhs >= m {
                return Err(SystemError::Unreduced {
                    eq: id,
                    value: e.rhs,
                    modulus: m,
                });
            }
        }
        Ok(())
    }

    pub fn cost(&self, assignment: &[u64]) -> Result<Cost, SystemError> {
        self.check_len(assignment)?;
        Ok(self.lin().cost(assignment))
    }

    /// Ids of equations violated by `assignment`.
    pub fn violated(&self, assignment: &[u64]) -> Result<Vec<usize>, SystemError> {
        self.check_len(assignment)?;
        Ok(self.lin().violated(assignment))
    }

    fn check_len(&self, assignment: &[u64]) -> Result<(), SystemError> {
        if assignment.len() != self.vars.len() {
            return Err(SystemError::PartialAssignment {
                expected: self.vars.len(),
                got: assignment.len(),
            });
        }
        Ok(())
    }

    pub fn lin(&self) -> LinSystem {
        LinSystem {
            modulus: self.modulus(),
            num_vars: self.vars.len(),
            eqs: self.eqs.clone(),
        }
    }

    /// Variables that occur in some equation.
    pub fn used_vars(&self) -> Vec<VarId> {
        let mut used = alloc::vec![false; self.vars.len()];
        for e in &self.eqs {
            for v in e.vars() {
                used[v] = true;
            }
        }
        (0..self.vars.len()).filter(|&v| used[v]).collect()
    }
}

/// A random instance with a planted assignment: the first `neq` equations
/// hold under it and the `k_noise` soft equations after them do not.
pub fn gen_planted(
    ctx: &RingContext,
    nvars: usize,
    neq: usize,
    k_noise: usize,
    seed: u64,
) -> (System, Vec<u64>) {
    assert!(nvars > 0, "need at least one variable");
    let m = ctx.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = System::new(ctx.clone());
    for i in 0..nvars {
        sys.var(&format!("x{i}"));
    }
    let planted: Vec<u64> = (0..nvars).map(|_| rng.random_range(0..m)).collect();

    let random_lhs = |rng: &mut ChaCha8Rng| -> Vec<Term> {
        let u = rng.random_range(0..nvars);
        let a = rng.random_range(1..m);
        if nvars >= 2 && rng.random_bool(0.75) {
            let mut v = rng.random_range(0..nvars - 1);
            if v >= u {
                v += 1;
            }
            alloc::vec![Term::new(a, u), Term::new(rng.random_range(1..m), v)]
        } else {
            alloc::vec![Term::new(a, u)]
        }
    };

    for _ in 0..neq {
        let terms = random_lhs(&mut rng);
        let crisp = rng.random_bool(0.25);
        let probe = Equation::new(&terms, 0, crisp);
        sys.push(Equation::new(&terms, probe.lhs(&planted, m), crisp));
    }
    for _ in 0..k_noise {
        let terms = random_lhs(&mut rng);
        let probe = Equation::new(&terms, 0, false);
        let shift = rng.random_range(1..m);
        sys.push(Equation::new(
            &terms,
            add_mod(probe.lhs(&planted, m), shift, m),
            false,
        ));
    }
    (sys, planted)
}

/// `t` variable-disjoint copies of `sys`; copy `i` of variable `v` is `v_i`
/// and copy `i` of equation `j` has id `i * |E| + j`.
pub fn disjoint_copies(sys: &System, t: usize) -> System {
    let mut out = System::new(sys.ctx().clone());
    let nv = sys.num_vars();
    for i in 0..t {
        for name in sys.vars() {
            out.var(&format!("{name}_{i}"));
        }
    }
    for i in 0..t {
        for e in sys.equations() {
            let terms: Vec<Term> = e
                .terms()
                .iter()
                .map(|x| Term::new(x.coef, x.var + i * nv))
                .collect();
            out.push(Equation::new(&terms, e.rhs, e.crisp));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn z4() -> RingContext {
        RingContext::new(4).unwrap()
    }

    #[test]
    fn cost_counts_soft_violations() {
        let mut s = System::new(RingContext::new(8).unwrap());
        let x = s.var("x");
        let a = s.var("a");
        s.push(Equation::unary(1, x, 4, true));
        s.push(Equation::binary(Term::new(2, a), Term::new(7, x), 0, false));
        assert_eq!(s.cost(&[4, 2]).unwrap(), Cost::Finite(0));
        assert_eq!(s.cost(&[4, 1]).unwrap(), Cost::Finite(1));
        assert_eq!(s.cost(&[3, 2]).unwrap(), Cost::Infinite);
        assert!(s.cost(&[4]).is_err());
    }

    #[test]
    fn merged_terms() {
        let e = Equation::new(&[Term::new(1, 0), Term::new(3, 0)], 0, false);
        assert_eq!(e.terms(), &[Term::new(4, 0)]);
        assert_eq!(e.normalized(4).terms(), &[]);
    }

    #[test]
    fn planted_instances_behave() {
        for seed in 0..50 {
            let (s, planted) = gen_planted(&z4(), 4, 6, 2, seed);
            s.validate().unwrap();
            assert_eq!(s.equations().len(), 8);
            let bad = s.violated(&planted).unwrap();
            assert_eq!(bad, vec![6, 7]);
        }
    }

    #[test]
    fn copies_are_disjoint() {
        let mut s = System::new(z4());
        let a = s.var("a");
        let b = s.var("b");
        s.push(Equation::binary(Term::new(1, a), Term::new(3, b), 1, false));
        let c = disjoint_copies(&s, 3);
        assert_eq!(c.vars(), &["a_0", "b_0", "a_1", "b_1", "a_2", "b_2"]);
        assert_eq!(
            c.equations()[2].terms(),
            &[Term::new(1, 4), Term::new(3, 5)]
        );
        c.validate().unwrap();
    }
}
