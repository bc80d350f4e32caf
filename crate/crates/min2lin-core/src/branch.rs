//! Turning a shadow cover into candidate conformal cuts.
//!
//! Let `R` be what `s` reaches without entering `W`. Components of `G[W]`
//! that hold `t`, or that clash with `R` on some variable's class, must be
//! cut off. The remaining components are settled by branching: a component
//! clashing with the uncut side is cut; of two mutually clashing components
//! either the first is cut, or the first stays and the second is cut; once
//! no clashes remain, every component whose internal equations cannot hold
//! under its class labels is either cut or left (charging one deletion).
//! Each leaf yields the boundary of everything cut, provided it stays
//! within `2q` edges.
//!
//! Components with no edge towards `R` are unreachable whatever happens,
//! so they are treated as cut from the start.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use crate::classgraph::{ClassGraph, EdgeId, Vertex, VertexId, SINK, SOURCE};
use crate::linsolve::{self, ClassConstraint};
use crate::modring::{ClassId, ClassTable};
use crate::simplify::SimpleInstance;
use crate::system::{LinSystem, VarId};

/// A conformal cut together with the class assignment it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutCandidate {
    pub edges: Vec<EdgeId>,
    pub classes: Vec<ClassId>,
}

#[derive(Debug, Clone)]
struct Component {
    labels: Vec<(VarId, ClassId)>,
    boundary: Vec<EdgeId>,
    crisp_boundary: bool,
    unsatisfied: bool,
}

impl Component {
    fn clashes_with(&self, side: &[Option<ClassId>]) -> bool {
        self.labels
            .iter()
            .any(|&(x, c)| side[x].is_some_and(|d| d != c))
    }

    fn clashes_with_component(&self, other: &Component) -> bool {
        self.labels
            .iter()
            .any(|&(x, c)| other.labels.iter().any(|&(y, d)| x == y && c != d))
    }
}

/// Candidate cuts for cover `w`, budget `k` and cut size parameter `q`.
/// Every returned cut is conformal, soft, and has at most `2q` edges.
pub fn branch(
    inst: &SimpleInstance,
    g: &ClassGraph,
    table: &ClassTable,
    k: usize,
    q: usize,
    w: &FixedBitSet,
) -> Vec<CutCandidate> {
    if w.contains(SOURCE) {
        return Vec::new();
    }
    let n = g.num_vertices();
    // R: reachable from s inside V - W.
    let mut r = FixedBitSet::with_capacity(n);
    r.insert(SOURCE);
    let mut stack = vec![SOURCE];
    while let Some(u) = stack.pop() {
        for &(v, _) in g.neighbors(u) {
            if !w.contains(v) && !r.contains(v) {
                r.insert(v);
                stack.push(v);
            }
        }
    }
    if !g.is_conformal_set(&r) {
        return Vec::new();
    }
    let mut v1: Vec<Option<ClassId>> = vec![None; g.num_vars()];
    for v in r.ones() {
        if let Vertex::Class { var, class } = g.vertex_kind(v) {
            v1[var] = Some(class);
        }
    }

    // Components of G - R (the normalised cover).
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<(Component, bool)> = Vec::new();
    for start in 0..n {
        if r.contains(start) || comp_of[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut verts: Vec<VertexId> = vec![start];
        comp_of[start] = id;
        let mut i = 0;
        while i < verts.len() {
            let u = verts[i];
            i += 1;
            for &(v, _) in g.neighbors(u) {
                if !r.contains(v) && comp_of[v] == usize::MAX {
                    comp_of[v] = id;
                    verts.push(v);
                }
            }
        }
        let mut labels = Vec::new();
        let mut has_sink = false;
        let mut self_clash = false;
        for &v in &verts {
            match g.vertex_kind(v) {
                Vertex::Sink => has_sink = true,
                Vertex::Class { var, class } => {
                    if labels.iter().any(|&(x, c)| x == var && c != class) {
                        self_clash = true;
                    }
                    labels.push((var, class));
                }
                Vertex::Source => unreachable!(),
            }
        }
        let mut boundary: Vec<EdgeId> = verts
            .iter()
            .flat_map(|&u| {
                g.neighbors(u)
                    .iter()
                    .filter(|(v, _)| r.contains(*v))
                    .map(|&(_, e)| e)
            })
            .collect();
        boundary.sort_unstable();
        boundary.dedup();
        let crisp_boundary = boundary.iter().any(|&e| g.edge(e).crisp);
        let c = Component {
            labels,
            boundary,
            crisp_boundary,
            unsatisfied: false,
        };
        let forced = has_sink || self_clash || c.clashes_with(&v1) || c.boundary.is_empty();
        comps.push((c, forced));
    }

    let mut v0: Vec<usize> = Vec::new();
    let mut b = 2 * q as i64;
    for (i, (c, forced)) in comps.iter().enumerate() {
        if *forced {
            if c.crisp_boundary {
                return Vec::new();
            }
            b -= c.boundary.len() as i64;
            v0.push(i);
        }
    }
    let undecided: Vec<usize> = (0..comps.len()).filter(|&i| !comps[i].1).collect();
    let mut comps: Vec<Component> = comps.into_iter().map(|(c, _)| c).collect();
    for &i in &undecided {
        comps[i].unsatisfied = !self_satisfiable(inst, g, table, &comp_of, i, &comps[i]);
    }

    let mut search = Search {
        comps: &comps,
        q,
        found: BTreeSet::new(),
    };
    search.undecided(undecided, k as i64 - q as i64, b, v1, v0);
    search
        .found
        .into_iter()
        .filter_map(|edges| {
            let reach = g.reach(&edges);
            (g.is_conformal_set(&reach) && g.all_soft(&edges) && edges.len() <= 2 * q).then(|| {
                CutCandidate {
                    classes: g.classes_of_set(&reach),
                    edges,
                }
            })
        })
        .collect()
}

/// Whether the equations with an edge inside the component can hold while
/// every labelled variable stays in its class.
fn self_satisfiable(
    inst: &SimpleInstance,
    g: &ClassGraph,
    table: &ClassTable,
    comp_of: &[usize],
    id: usize,
    c: &Component,
) -> bool {
    let m = inst.modulus();
    let inside: BTreeSet<usize> = g
        .edges()
        .iter()
        .filter(|e| e.u != SINK && e.v != SINK && comp_of[e.u] == id && comp_of[e.v] == id)
        .map(|e| e.eq)
        .collect();
    let sys = LinSystem {
        modulus: m,
        num_vars: inst.num_vars,
        eqs: inside.iter().map(|&i| inst.eqs[i].equation(m)).collect(),
    };
    let ccs: Vec<ClassConstraint> = c
        .labels
        .iter()
        .map(|&(var, class)| ClassConstraint { var, class })
        .collect();
    linsolve::feasible_with_classes(&sys, table, &ccs)
}

struct Search<'a> {
    comps: &'a [Component],
    q: usize,
    found: BTreeSet<Vec<EdgeId>>,
}

impl Search<'_> {
    fn undecided(
        &mut self,
        list: Vec<usize>,
        k: i64,
        b: i64,
        v1: Vec<Option<ClassId>>,
        v0: Vec<usize>,
    ) {
        if b < 0 {
            return;
        }
        if let Some(pos) = list.iter().position(|&c| self.comps[c].clashes_with(&v1)) {
            let c = list[pos];
            if self.comps[c].crisp_boundary {
                return;
            }
            let mut rest = list;
            rest.remove(pos);
            let b2 = b - self.comps[c].boundary.len() as i64;
            self.undecided(rest, k, b2, v1, with(&v0, c));
            return;
        }
        let pair = (0..list.len()).find_map(|i| {
            (i + 1..list.len())
                .find(|&j| self.comps[list[i]].clashes_with_component(&self.comps[list[j]]))
                .map(|j| (i, j))
        });
        if let Some((i, j)) = pair {
            let (c1, c2) = (list[i], list[j]);
            if !self.comps[c1].crisp_boundary {
                let rest: Vec<usize> = list.iter().copied().filter(|&c| c != c1).collect();
                let b2 = b - self.comps[c1].boundary.len() as i64;
                self.undecided(rest, k, b2, v1.clone(), with(&v0, c1));
            }
            if !self.comps[c2].crisp_boundary {
                let rest: Vec<usize> = list
                    .iter()
                    .copied()
                    .filter(|&c| c != c1 && c != c2)
                    .collect();
                let mut v1b = v1;
                for &(x, cl) in &self.comps[c1].labels {
                    v1b[x] = Some(cl);
                }
                let b2 = b - self.comps[c2].boundary.len() as i64;
                self.undecided(rest, k, b2, v1b, with(&v0, c2));
            }
            return;
        }
        let unsat: Vec<usize> = list
            .into_iter()
            .filter(|&c| self.comps[c].unsatisfied)
            .collect();
        self.unsatisfied(&unsat, k, b, v0);
    }

    fn unsatisfied(&mut self, list: &[usize], k: i64, b: i64, v0: Vec<usize>) {
        if k < 0 || b < 0 {
            return;
        }
        let Some((&c, rest)) = list.split_first() else {
            let mut edges: Vec<EdgeId> = v0
                .iter()
                .flat_map(|&c| self.comps[c].boundary.iter().copied())
                .collect();
            edges.sort_unstable();
            debug_assert!(edges.len() <= 2 * self.q);
            self.found.insert(edges);
            return;
        };
        self.unsatisfied(rest, k - 1, b, v0.clone());
        if !self.comps[c].crisp_boundary {
            let b2 = b - self.comps[c].boundary.len() as i64;
            self.unsatisfied(rest, k, b2, with(&v0, c));
        }
    }
}

fn with(v: &[usize], c: usize) -> Vec<usize> {
    let mut out = v.to_vec();
    out.push(c);
    out
}
