//! Important separators, the clique lift, and shadow covers.
//!
//! A shadow cover is a vertex set `W` with `s ∉ W`; the branching step only
//! ever cuts edges on the boundary of components of `G[W]`. Covers come
//! from several sources:
//!
//! * `ImpSep`: for every vertex `v` the important `(v, s)`-separators of
//!   size at most `2q` are listed; each is kept with probability `4^-|S|`
//!   and `W` is everything the union of the kept separators cuts off from
//!   `s`.
//! * `Bernoulli`: every vertex other than `s` joins `W` with probability 1/2.
//! * `ExhaustiveSubsets`: every subset of `V - {s}` (small graphs only).
//! * `ExhaustiveCuts`: for every connected `R ∋ s` whose boundary is a
//!   conformal cut of at most `2q` soft edges, the set `V - R`.
//!
//! Separators are computed on the class graph itself with crisp edges
//! uncuttable, which matches vertex separators of the clique lift whose
//! clique size `2q + 1` exceeds the budget.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;
use rand::Rng;
use thiserror::Error;

use crate::classgraph::{ClassGraph, EdgeId, VertexId, SINK, SOURCE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShadowError {
    #[error("exhaustive subsets need at most {max} vertices, graph has {got}")]
    TooManyVertices { max: usize, got: usize },
}

/// Largest graph for which all vertex subsets are enumerated.
pub const MAX_SUBSET_VERTICES: usize = 20;

/// Undirected multigraph with soft (unit) and crisp (uncuttable) edges.
pub trait CutGraph {
    fn num_vertices(&self) -> usize;
    fn num_edges(&self) -> usize;
    fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId);
    fn is_crisp(&self, e: EdgeId) -> bool;
    fn incident(&self, v: VertexId) -> &[(VertexId, EdgeId)];
}

impl CutGraph for ClassGraph {
    fn num_vertices(&self) -> usize {
        ClassGraph::num_vertices(self)
    }
    fn num_edges(&self) -> usize {
        ClassGraph::num_edges(self)
    }
    fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let edge = self.edge(e);
        (edge.u, edge.v)
    }
    fn is_crisp(&self, e: EdgeId) -> bool {
        self.edge(e).crisp
    }
    fn incident(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        self.neighbors(v)
    }
}

/// A plain edge-list graph, handy for tests and small checks.
#[derive(Debug, Clone, Default)]
pub struct PlainGraph {
    edges: Vec<(VertexId, VertexId, bool)>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl PlainGraph {
    pub fn new(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, crisp: bool) -> EdgeId {
        let id = self.edges.len();
        self.edges.push((u, v, crisp));
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        id
    }
}

impl CutGraph for PlainGraph {
    fn num_vertices(&self) -> usize {
        self.adj.len()
    }
    fn num_edges(&self) -> usize {
        self.edges.len()
    }
    fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        (self.edges[e].0, self.edges[e].1)
    }
    fn is_crisp(&self, e: EdgeId) -> bool {
        self.edges[e].2
    }
    fn incident(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }
}

/// Vertices reachable from `sources` without crossing `removed` edges.
pub fn reach_set<G: CutGraph>(g: &G, sources: &FixedBitSet, removed: &FixedBitSet) -> FixedBitSet {
    let mut seen = sources.clone();
    let mut stack: Vec<VertexId> = sources.ones().collect();
    while let Some(u) = stack.pop() {
        for &(w, e) in g.incident(u) {
            if !removed.contains(e) && !seen.contains(w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    seen
}

fn bitset(n: usize, items: &[usize]) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    for &i in items {
        b.insert(i);
    }
    b
}

const INF_CAP: i64 = 1 << 40;

/// Maximum number of edge-disjoint `sources`-`sinks` paths avoiding
/// `removed`, capped at `limit + 1`, together with the furthest minimum cut
/// (the vertices that cannot reach a sink in the residual graph).
fn min_cut<G: CutGraph>(
    g: &G,
    sources: &FixedBitSet,
    sinks: &FixedBitSet,
    removed: &FixedBitSet,
    limit: usize,
) -> (usize, FixedBitSet) {
    let n = g.num_vertices();
    if sources.ones().any(|v| sinks.contains(v)) {
        return (limit + 1, FixedBitSet::with_capacity(n));
    }
    let cap = |e: EdgeId| -> i64 {
        if removed.contains(e) {
            0
        } else if g.is_crisp(e) {
            INF_CAP
        } else {
            1
        }
    };
    // flow[e] > 0 means flow from the first endpoint to the second.
    let mut flow = vec![0i64; g.num_edges()];
    let residual = |flow: &[i64], e: EdgeId, from: VertexId| -> i64 {
        let (u, _) = g.endpoints(e);
        if from == u {
            cap(e) - flow[e]
        } else {
            cap(e) + flow[e]
        }
    };
    let mut value = 0usize;
    loop {
        let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; n];
        let mut seen = sources.clone();
        let mut queue: alloc::collections::VecDeque<VertexId> = sources.ones().collect();
        let mut hit = None;
        while let Some(u) = queue.pop_front() {
            if sinks.contains(u) {
                hit = Some(u);
                break;
            }
            for &(w, e) in g.incident(u) {
                if !seen.contains(w) && residual(&flow, e, u) > 0 {
                    seen.insert(w);
                    parent[w] = Some((u, e));
                    queue.push_back(w);
                }
            }
        }
        let Some(mut v) = hit else { break };
        while let Some((u, e)) = parent[v] {
            let (a, _) = g.endpoints(e);
            if a == u {
                flow[e] += 1;
            } else {
                flow[e] -= 1;
            }
            v = u;
        }
        value += 1;
        if value > limit {
            return (value, FixedBitSet::with_capacity(n));
        }
    }
    // Vertices that can still reach a sink through residual arcs.
    let mut to_sink = sinks.clone();
    let mut stack: Vec<VertexId> = sinks.ones().collect();
    while let Some(x) = stack.pop() {
        for &(w, e) in g.incident(x) {
            if !to_sink.contains(w) && residual(&flow, e, w) > 0 {
                to_sink.insert(w);
                stack.push(w);
            }
        }
    }
    let mut r_max = FixedBitSet::with_capacity(n);
    r_max.insert_range(..);
    r_max.difference_with(&to_sink);
    (value, r_max)
}

/// Size of a minimum edge cut between two vertex sets, or `None` if it
/// exceeds `limit` (crisp edges cannot be cut).
pub fn min_cut_value<G: CutGraph>(
    g: &G,
    sources: &[VertexId],
    sinks: &[VertexId],
    limit: usize,
) -> Option<usize> {
    let n = g.num_vertices();
    let (v, _) = min_cut(
        g,
        &bitset(n, sources),
        &bitset(n, sinks),
        &FixedBitSet::with_capacity(g.num_edges()),
        limit,
    );
    (v <= limit).then_some(v)
}

/// Whether `cut` is an important `(sources, sinks)`-separator: an
/// inclusion-minimal cut of soft edges such that no cut of at most the same
/// size reaches strictly more from the sources.
pub fn is_important<G: CutGraph>(
    g: &G,
    sources: &[VertexId],
    sinks: &[VertexId],
    cut: &[EdgeId],
) -> bool {
    let n = g.num_vertices();
    let src = bitset(n, sources);
    let snk = bitset(n, sinks);
    let removed = bitset(g.num_edges(), cut);
    if cut.iter().any(|&e| g.is_crisp(e)) {
        return false;
    }
    let r = reach_set(g, &src, &removed);
    if r.ones().any(|v| snk.contains(v)) {
        return false;
    }
    let outer = |e: EdgeId| {
        let (u, v) = g.endpoints(e);
        match (r.contains(u), r.contains(v)) {
            (true, false) => Some(v),
            (false, true) => Some(u),
            _ => None,
        }
    };
    // Minimality: each edge leaves R and its far side still meets a sink.
    let from_sinks = reach_set(g, &snk, &removed);
    for &e in cut {
        match outer(e) {
            Some(w) if from_sinks.contains(w) => {}
            _ => return false,
        }
    }
    // Importance: no neighbour can join R without a larger cut.
    let mut tried = BTreeSet::new();
    for &e in cut {
        let w = outer(e).expect("checked above");
        if snk.contains(w) || !tried.insert(w) {
            continue;
        }
        let mut grown = r.clone();
        grown.insert(w);
        let (v, _) = min_cut(
            g,
            &grown,
            &snk,
            &FixedBitSet::with_capacity(g.num_edges()),
            cut.len(),
        );
        if v <= cut.len() {
            return false;
        }
    }
    true
}

/// All important `(sources, sinks)`-separators of size at most `lambda`,
/// each sorted, in a deterministic order.
pub fn important_separators<G: CutGraph>(
    g: &G,
    sources: &[VertexId],
    sinks: &[VertexId],
    lambda: usize,
) -> Vec<Vec<EdgeId>> {
    let n = g.num_vertices();
    let snk = bitset(n, sinks);
    let mut found: BTreeSet<Vec<EdgeId>> = BTreeSet::new();
    let mut deleted = Vec::new();
    enumerate_separators(
        g,
        &bitset(n, sources),
        &snk,
        &mut deleted,
        &mut FixedBitSet::with_capacity(g.num_edges()),
        lambda,
        &mut found,
    );
    found
        .into_iter()
        .filter(|cut| is_important(g, sources, sinks, cut))
        .collect()
}

fn enumerate_separators<G: CutGraph>(
    g: &G,
    sources: &FixedBitSet,
    sinks: &FixedBitSet,
    deleted: &mut Vec<EdgeId>,
    removed: &mut FixedBitSet,
    lambda: usize,
    out: &mut BTreeSet<Vec<EdgeId>>,
) {
    let (value, r_max) = min_cut(g, sources, sinks, removed, lambda);
    if value > lambda {
        return;
    }
    if value == 0 {
        let mut cut = deleted.clone();
        cut.sort_unstable();
        out.insert(cut);
        return;
    }
    let Some((e, far)) = (0..g.num_edges()).find_map(|e| {
        if removed.contains(e) {
            return None;
        }
        let (u, v) = g.endpoints(e);
        match (r_max.contains(u), r_max.contains(v)) {
            (true, false) => Some((e, v)),
            (false, true) => Some((e, u)),
            _ => None,
        }
    }) else {
        return;
    };
    if !g.is_crisp(e) {
        deleted.push(e);
        removed.insert(e);
        enumerate_separators(g, sources, sinks, deleted, removed, lambda - 1, out);
        removed.set(e, false);
        deleted.pop();
    }
    if !sinks.contains(far) {
        let mut grown = r_max;
        grown.insert(far);
        enumerate_separators(g, &grown, sinks, deleted, removed, lambda, out);
    }
}

/// The clique lift: vertex `a` becomes a clique `K(a)` of `2q + 1` copies
/// and edge `e = ab` a vertex `z_e` adjacent to all of `K(a) ∪ K(b)`.
#[derive(Debug, Clone)]
pub struct LiftedGraph {
    pub clique: usize,
    pub base_vertices: usize,
    pub graph: PlainGraph,
    /// Whether each `z_e` stems from a crisp edge (and may not be deleted).
    pub crisp_z: Vec<bool>,
}

impl LiftedGraph {
    pub fn copy(&self, a: VertexId, i: usize) -> VertexId {
        a * self.clique + i
    }

    pub fn clique_of(&self, a: VertexId) -> Vec<VertexId> {
        (0..self.clique).map(|i| self.copy(a, i)).collect()
    }

    pub fn z(&self, e: EdgeId) -> VertexId {
        self.base_vertices * self.clique + e
    }

    /// Whether deleting `vertices` leaves no walk from `K(from)` to any
    /// `K(a)`, `a ∈ to`.
    pub fn separates(&self, vertices: &[VertexId], from: VertexId, to: &[VertexId]) -> bool {
        let n = self.graph.num_vertices();
        let gone = bitset(n, vertices);
        let starts: Vec<VertexId> = self
            .clique_of(from)
            .into_iter()
            .filter(|v| !gone.contains(*v))
            .collect();
        let mut seen = bitset(n, &starts);
        let mut stack = starts;
        while let Some(u) = stack.pop() {
            for &(w, _) in self.graph.incident(u) {
                if !gone.contains(w) && !seen.contains(w) {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        to.iter().all(|&a| {
            self.clique_of(a)
                .iter()
                .all(|&v| gone.contains(v) || !seen.contains(v))
        })
    }
}

pub fn clique_lift<G: CutGraph>(g: &G, q: usize) -> LiftedGraph {
    let clique = 2 * q + 1;
    let nb = g.num_vertices();
    let mut graph = PlainGraph::new(nb * clique + g.num_edges());
    for a in 0..nb {
        for i in 0..clique {
            for j in i + 1..clique {
                graph.add_edge(a * clique + i, a * clique + j, true);
            }
        }
    }
    let mut crisp_z = Vec::with_capacity(g.num_edges());
    for e in 0..g.num_edges() {
        let (u, v) = g.endpoints(e);
        let z = nb * clique + e;
        for end in [u, v] {
            for i in 0..clique {
                graph.add_edge(z, end * clique + i, true);
            }
        }
        crisp_z.push(g.is_crisp(e));
    }
    LiftedGraph {
        clique,
        base_vertices: nb,
        graph,
        crisp_z,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowMode {
    ImpSep,
    Bernoulli,
    ExhaustiveSubsets,
    ExhaustiveCuts,
}

/// A sampled or enumerated cover, with `s ∉ w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowCover {
    pub w: FixedBitSet,
    pub mode: ShadowMode,
}

/// Important `(v, s)`-separators of every vertex `v`, listed once per graph
/// and budget and reused across samples.
#[derive(Debug, Clone)]
pub struct ImpSepSampler {
    separators: Vec<Vec<EdgeId>>,
}

impl ImpSepSampler {
    pub fn new(g: &ClassGraph, lambda: usize) -> Self {
        let mut all: BTreeSet<Vec<EdgeId>> = BTreeSet::new();
        for v in 0..g.num_vertices() {
            if v != SOURCE {
                all.extend(important_separators(g, &[v], &[SOURCE], lambda));
            }
        }
        all.remove(&Vec::new());
        Self {
            separators: all.into_iter().collect(),
        }
    }

    pub fn separators(&self) -> &[Vec<EdgeId>] {
        &self.separators
    }

    pub fn sample<R: Rng>(&self, g: &ClassGraph, rng: &mut R) -> ShadowCover {
        let mut removed = FixedBitSet::with_capacity(g.num_edges());
        for sep in &self.separators {
            let denom = 4u32.checked_pow(sep.len() as u32).unwrap_or(u32::MAX);
            if rng.random_ratio(1, denom) {
                for &e in sep {
                    removed.insert(e);
                }
            }
        }
        let mut w = g.reach_from(SOURCE, &removed);
        w.toggle_range(..);
        ShadowCover {
            w,
            mode: ShadowMode::ImpSep,
        }
    }
}

pub fn sample_bernoulli<R: Rng>(g: &ClassGraph, rng: &mut R) -> ShadowCover {
    let mut w = FixedBitSet::with_capacity(g.num_vertices());
    for v in 0..g.num_vertices() {
        if v != SOURCE && rng.random_bool(0.5) {
            w.insert(v);
        }
    }
    ShadowCover {
        w,
        mode: ShadowMode::Bernoulli,
    }
}

/// Every subset of `V - {s}`, in binary counting order.
pub fn exhaustive_subsets(
    g: &ClassGraph,
) -> Result<impl Iterator<Item = ShadowCover> + '_, ShadowError> {
    let n = g.num_vertices();
    if n > MAX_SUBSET_VERTICES {
        return Err(ShadowError::TooManyVertices {
            max: MAX_SUBSET_VERTICES,
            got: n,
        });
    }
    Ok((0u64..1 << (n - 1)).map(move |mask| {
        let mut w = FixedBitSet::with_capacity(n);
        for i in 0..n - 1 {
            if mask >> i & 1 == 1 {
                w.insert(i + 1);
            }
        }
        ShadowCover {
            w,
            mode: ShadowMode::ExhaustiveSubsets,
        }
    }))
}

/// The exact shadow of a known deletion set: everything `s` no longer
/// reaches once the closest cut inside `ed(z)` is removed.
pub fn planted_cover(g: &ClassGraph, z: &[usize]) -> Option<ShadowCover> {
    let y = g.sep(&g.ed(z)).ok()?;
    let mut w = g.reach(&y);
    w.toggle_range(..);
    Some(ShadowCover {
        w,
        mode: ShadowMode::ExhaustiveCuts,
    })
}

/// All connected `R ∋ s` whose boundary is a conformal cut made of at most
/// `lambda` soft edges, in a deterministic order.
pub fn conformal_reach_sets(g: &ClassGraph, lambda: usize) -> Vec<FixedBitSet> {
    let n = g.num_vertices();
    let mut st = ReachEnum {
        g,
        lambda,
        in_r: bitset(n, &[SOURCE]),
        excluded: bitset(n, &[SINK]),
        var_taken: vec![false; g.num_vars()],
        cut: 0,
        out: Vec::new(),
    };
    // Edges from s straight to t must be cut up front.
    for &(w, e) in g.neighbors(SOURCE) {
        if w == SINK {
            if g.edge(e).crisp {
                return Vec::new();
            }
            st.cut += 1;
        }
    }
    if st.cut <= lambda {
        st.go();
    }
    st.out
}

struct ReachEnum<'a> {
    g: &'a ClassGraph,
    lambda: usize,
    in_r: FixedBitSet,
    excluded: FixedBitSet,
    var_taken: Vec<bool>,
    cut: usize,
    out: Vec<FixedBitSet>,
}

impl ReachEnum<'_> {
    fn frontier(&self) -> Option<VertexId> {
        self.in_r.ones().find_map(|u| {
            self.g
                .neighbors(u)
                .iter()
                .map(|&(w, _)| w)
                .filter(|&w| !self.in_r.contains(w) && !self.excluded.contains(w))
                .min()
        })
    }

    /// Edges between `v` and `R` or the excluded side that would be cut.
    fn cost_edges(&self, v: VertexId, side: &FixedBitSet) -> Option<usize> {
        let mut c = 0;
        for &(w, e) in self.g.neighbors(v) {
            if side.contains(w) && w != v {
                if self.g.edge(e).crisp {
                    return None;
                }
                c += 1;
            }
        }
        Some(c)
    }

    fn go(&mut self) {
        let Some(v) = self.frontier() else {
            self.out.push(self.in_r.clone());
            return;
        };
        let var = self.g.var_of(v);
        // Include v: edges to excluded vertices become cut.
        if v != SINK && var.is_none_or(|x| !self.var_taken[x]) {
            if let Some(extra) = self.cost_edges(v, &self.excluded.clone()) {
                if self.cut + extra <= self.lambda {
                    self.in_r.insert(v);
                    if let Some(x) = var {
                        self.var_taken[x] = true;
                    }
                    self.cut += extra;
                    self.go();
                    self.cut -= extra;
                    if let Some(x) = var {
                        self.var_taken[x] = false;
                    }
                    self.in_r.set(v, false);
                }
            }
        }
        // Exclude v: edges to R become cut.
        if let Some(extra) = self.cost_edges(v, &self.in_r.clone()) {
            if self.cut + extra <= self.lambda {
                self.excluded.insert(v);
                self.cut += extra;
                self.go();
                self.cut -= extra;
                self.excluded.set(v, false);
            }
        }
    }
}
