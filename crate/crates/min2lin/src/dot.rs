//! Graphviz export of the class graph of a simple instance.

use std::fmt::Write as _;

use min2lin_core::classgraph::{ClassGraph, GraphError, Vertex};
use min2lin_core::modring::{ClassTable, RingError};
use min2lin_core::simplify::as_simple;
use min2lin_core::system::System;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("the class graph needs a prime-power ring, got Z_{0}")]
    NotPrimePower(u64),
    #[error("equation shapes are not simple (u = r*v, or crisp unit pins)")]
    NotSimple,
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Vertices are labelled `<var>_<rep>` by the class representative; soft
/// edges carry their equation id, crisp edges are drawn bold.
pub fn export_graph(sys: &System) -> Result<String, ExportError> {
    let [pp] = sys.ctx().factors() else {
        return Err(ExportError::NotPrimePower(sys.modulus()));
    };
    let inst = as_simple(&sys.lin(), *pp).ok_or(ExportError::NotSimple)?;
    let table = ClassTable::new(*pp)?;
    let g = ClassGraph::build(&inst, &table)?;
    let label = |v: usize| match g.vertex_kind(v) {
        Vertex::Source => "s".to_string(),
        Vertex::Sink => "t".to_string(),
        Vertex::Class { var, class } => format!("{}_{}", sys.vars()[var], table.rep(class)),
    };
    let mut out = String::from("graph class_graph {\n");
    for v in 0..g.num_vertices() {
        let _ = writeln!(out, "  \"{}\";", label(v));
    }
    for e in g.edges() {
        let style = if e.crisp { ", style=bold" } else { "" };
        let _ = writeln!(
            out,
            "  \"{}\" -- \"{}\" [label=\"{}\"{style}];",
            label(e.u),
            label(e.v),
            e.eq
        );
    }
    out.push_str("}\n");
    Ok(out)
}
