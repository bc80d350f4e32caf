//! The class assignment graph of a simple instance.
//!
//! Vertices are `s`, `t` and one vertex `x_C` per variable `x` and nonzero
//! class `C`. Reading `s = 1`, `t = 0` and `x_C = 1` iff `x` takes a value
//! in `C`, every edge states that its endpoints are equal. For `y = r*x`
//! there is an edge `x_C y_D` whenever `r*C` lands in the nonzero class
//! `D`, and an edge `y_D t` for each `D` outside the image. A pin `x = 0`
//! joins every `x_C` to `t`; a pin `x = b` joins `s` to `x_{class(b)}`.
//!
//! A set of soft edges is a *conformal cut* when, after removing it, `t`
//! is unreachable from `s` and at most one class vertex per variable is
//! reachable. The reachable vertices then assign a class to every variable.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::modring::{ClassId, ClassTable, PrimePower};
use crate::simplify::{SimpleEq, SimpleInstance};
use crate::system::VarId;

pub type VertexId = usize;
pub type EdgeId = usize;

pub const SOURCE: VertexId = 0;
pub const SINK: VertexId = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("t is reachable from s after removing the given edges")]
    NotStCut,
    #[error("equation {0} has the same variable on both sides")]
    SelfLoop(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vertex {
    Source,
    Sink,
    Class { var: VarId, class: ClassId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    /// Index of the simple equation that produced the edge.
    pub eq: usize,
    pub crisp: bool,
}

impl Edge {
    pub fn other(&self, w: VertexId) -> VertexId {
        if self.u == w {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassGraph {
    pp: PrimePower,
    num_vars: usize,
    nc: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl ClassGraph {
    pub fn build(inst: &SimpleInstance, table: &ClassTable) -> Result<Self, GraphError> {
        let nc = table.num_nonzero() as usize;
        let mut g = Self {
            pp: inst.pp,
            num_vars: inst.num_vars,
            nc,
            edges: Vec::new(),
            adj: vec![Vec::new(); 2 + inst.num_vars * nc],
        };
        for (i, e) in inst.eqs.iter().enumerate() {
            match *e {
                SimpleEq::Binary { lhs, r, rhs, crisp } => {
                    if lhs == rhs {
                        return Err(GraphError::SelfLoop(i));
                    }
                    let mut hit = vec![false; nc + 1];
                    for c in table.nonzero() {
                        let d = table.pi(r, c);
                        hit[d.0 as usize] = true;
                        if !d.is_zero() {
                            g.add_edge(g.vertex(rhs, c), g.vertex(lhs, d), i, crisp);
                        }
                    }
                    for d in table.nonzero() {
                        if !hit[d.0 as usize] {
                            g.add_edge(g.vertex(lhs, d), SINK, i, crisp);
                        }
                    }
                }
                SimpleEq::Unary { var, r } => {
                    let b = table.class_of(r);
                    if b.is_zero() {
                        for c in table.nonzero() {
                            g.add_edge(g.vertex(var, c), SINK, i, true);
                        }
                    } else {
                        g.add_edge(SOURCE, g.vertex(var, b), i, true);
                    }
                }
            }
        }
        Ok(g)
    }

    fn add_edge(&mut self, u: VertexId, v: VertexId, eq: usize, crisp: bool) {
        let id = self.edges.len();
        self.edges.push(Edge { u, v, eq, crisp });
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
    }

    pub fn prime_power(&self) -> PrimePower {
        self.pp
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    /// Vertex of `var` for a nonzero class.
    pub fn vertex(&self, var: VarId, class: ClassId) -> VertexId {
        debug_assert!(!class.is_zero());
        2 + var * self.nc + (class.0 as usize - 1)
    }

    pub fn vertex_kind(&self, v: VertexId) -> Vertex {
        match v {
            SOURCE => Vertex::Source,
            SINK => Vertex::Sink,
            _ => Vertex::Class {
                var: (v - 2) / self.nc,
                class: ClassId(((v - 2) % self.nc) as u32 + 1),
            },
        }
    }

    pub fn var_of(&self, v: VertexId) -> Option<VarId> {
        (v >= 2).then(|| (v - 2) / self.nc)
    }

    pub fn edge_set(&self, edges: &[EdgeId]) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.edges.len());
        for &e in edges {
            set.insert(e);
        }
        set
    }

    pub fn vertex_set(&self, vertices: &[VertexId]) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.num_vertices());
        for &v in vertices {
            set.insert(v);
        }
        set
    }

    /// Vertices reachable from `from` without using removed edges.
    pub fn reach_from(&self, from: VertexId, removed: &FixedBitSet) -> FixedBitSet {
        let mut seen = FixedBitSet::with_capacity(self.num_vertices());
        let mut stack = vec![from];
        seen.insert(from);
        while let Some(u) = stack.pop() {
            for &(w, e) in &self.adj[u] {
                if !removed.contains(e) && !seen.contains(w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Vertices reachable from `s` in `G - removed`.
    pub fn reach(&self, removed: &[EdgeId]) -> FixedBitSet {
        self.reach_from(SOURCE, &self.edge_set(removed))
    }

    /// Edges with exactly one endpoint in `set`, sorted.
    pub fn boundary(&self, set: &FixedBitSet) -> Vec<EdgeId> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| set.contains(e.u) != set.contains(e.v))
            .map(|(i, _)| i)
            .collect()
    }

    /// The part of `y` on the boundary of what `s` still reaches in `G - y`.
    pub fn sep(&self, y: &[EdgeId]) -> Result<Vec<EdgeId>, GraphError> {
        let removed = self.edge_set(y);
        let r = self.reach_from(SOURCE, &removed);
        if r.contains(SINK) {
            return Err(GraphError::NotStCut);
        }
        Ok(self
            .boundary(&r)
            .into_iter()
            .filter(|&e| removed.contains(e))
            .collect())
    }

    /// Whether the reachable set `r` (from `s`) avoids `t` and holds at most
    /// one class vertex per variable.
    pub fn is_conformal_set(&self, r: &FixedBitSet) -> bool {
        if r.contains(SINK) {
            return false;
        }
        let mut seen = vec![false; self.num_vars];
        for v in r.ones() {
            if let Some(x) = self.var_of(v) {
                if seen[x] {
                    return false;
                }
                seen[x] = true;
            }
        }
        true
    }

    pub fn is_conformal(&self, y: &[EdgeId]) -> bool {
        self.is_conformal_set(&self.reach(y))
    }

    /// Class of every variable read off a reachable set.
    pub fn classes_of_set(&self, r: &FixedBitSet) -> Vec<ClassId> {
        let mut out = vec![ClassId::ZERO; self.num_vars];
        for v in r.ones() {
            if let Vertex::Class { var, class } = self.vertex_kind(v) {
                out[var] = class;
            }
        }
        out
    }

    /// Class assignment of a conformal cut.
    pub fn clasn(&self, y: &[EdgeId]) -> Vec<ClassId> {
        self.classes_of_set(&self.reach(y))
    }

    /// All edges created by the equations in `z`.
    pub fn ed(&self, z: &[usize]) -> Vec<EdgeId> {
        let z: BTreeSet<usize> = z.iter().copied().collect();
        (0..self.edges.len())
            .filter(|&e| z.contains(&self.edges[e].eq))
            .collect()
    }

    /// Equations owning the edges in `y`, sorted and distinct.
    pub fn eqn(&self, y: &[EdgeId]) -> Vec<usize> {
        let set: BTreeSet<usize> = y.iter().map(|&e| self.edges[e].eq).collect();
        set.into_iter().collect()
    }

    /// `z` minus the equations that own an edge of `sep(ed(z))`.
    pub fn comp(&self, z: &[usize]) -> Result<Vec<usize>, GraphError> {
        let cut: BTreeSet<usize> = self.eqn(&self.sep(&self.ed(z))?).into_iter().collect();
        Ok(z.iter().copied().filter(|e| !cut.contains(e)).collect())
    }

    /// Boolean reading of an assignment: `s` true, `t` false, `x_C` true
    /// iff the value of `x` lies in `C`.
    pub fn boolean_assignment(&self, table: &ClassTable, values: &[u64]) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.num_vertices());
        out.insert(SOURCE);
        for (x, &a) in values.iter().enumerate().take(self.num_vars) {
            let c = table.class_of(a);
            if !c.is_zero() {
                out.insert(self.vertex(x, c));
            }
        }
        out
    }

    pub fn edge_satisfied(&self, e: EdgeId, bools: &FixedBitSet) -> bool {
        let edge = &self.edges[e];
        bools.contains(edge.u) == bools.contains(edge.v)
    }

    /// Whether every edge of `y` is soft.
    pub fn all_soft(&self, y: &[EdgeId]) -> bool {
        y.iter().all(|&e| !self.edges[e].crisp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z8() -> ClassTable {
        ClassTable::new(PrimePower::new(2, 3)).unwrap()
    }

    #[test]
    fn single_binary_equation_edges() {
        // x = 2a over Z_8 with a = var 0, x = var 1.
        let t = z8();
        let inst = SimpleInstance {
            pp: t.prime_power(),
            num_vars: 2,
            eqs: vec![SimpleEq::Binary {
                lhs: 1,
                r: 2,
                rhs: 0,
                crisp: false,
            }],
        };
        let g = ClassGraph::build(&inst, &t).unwrap();
        let units = t.class_of(1);
        let twos = t.class_of(2);
        let fours = t.class_of(4);
        let pairs: Vec<(VertexId, VertexId)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(
            pairs,
            vec![
                (g.vertex(0, units), g.vertex(1, twos)),
                (g.vertex(0, twos), g.vertex(1, fours)),
                (g.vertex(1, units), SINK)
            ]
        );
    }

    #[test]
    fn pins() {
        let t = z8();
        let inst = SimpleInstance {
            pp: t.prime_power(),
            num_vars: 1,
            eqs: vec![
                SimpleEq::Unary { var: 0, r: 6 },
                SimpleEq::Unary { var: 0, r: 0 },
            ],
        };
        let g = ClassGraph::build(&inst, &t).unwrap();
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g.edge(0).u, SOURCE);
        assert_eq!(g.edge(0).v, g.vertex(0, t.class_of(2)));
        assert!(g.edges().iter().all(|e| e.crisp));
        assert!(!g.is_conformal(&[]));
    }

    #[test]
    fn self_loop_rejected() {
        let t = z8();
        let inst = SimpleInstance {
            pp: t.prime_power(),
            num_vars: 1,
            eqs: vec![SimpleEq::Binary {
                lhs: 0,
                r: 3,
                rhs: 0,
                crisp: false,
            }],
        };
        assert_eq!(
            ClassGraph::build(&inst, &t).unwrap_err(),
            GraphError::SelfLoop(0)
        );
    }
}
