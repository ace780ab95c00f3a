//! Graphviz export with role colors.

use std::fmt::Write as _;

use edgeroles::Graph;

use crate::error::{CliError, CliResult};

/// Colors indexed by role id.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Color of entities without a role (all-zero membership).
pub const UNASSIGNED: &str = "#d9d9d9";

fn color(role: Option<usize>) -> &'static str {
    role.map_or(UNASSIGNED, |r| PALETTE[r % PALETTE.len()])
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT text with every edge and node colored by its role. Roles beyond the
/// palette reuse colors cyclically.
pub fn export_dot(g: &Graph, edge_roles: &[Option<usize>], node_roles: &[Option<usize>]) -> CliResult<String> {
    if edge_roles.len() != g.m() {
        return Err(CliError::LabelCount {
            what: "edge roles",
            expected: g.m(),
            got: edge_roles.len(),
        });
    }
    if node_roles.len() != g.n() {
        return Err(CliError::LabelCount {
            what: "node roles",
            expected: g.n(),
            got: node_roles.len(),
        });
    }
    let distinct = edge_roles.iter().chain(node_roles).flatten().max().map_or(0, |m| m + 1);
    if distinct > PALETTE.len() {
        log::warn!("{distinct} roles exceed the {}-color palette; colors repeat", PALETTE.len());
    }
    let (kw, arrow) = if g.is_directed() { ("digraph", "->") } else { ("graph", "--") };
    let mut s = format!("{kw} roles {{\n  node [style=filled];\n");
    for (v, &r) in node_roles.iter().enumerate() {
        let role = r.map_or_else(|| "none".to_string(), |r| r.to_string());
        let _ = writeln!(
            s,
            "  n{v} [label={}, fillcolor=\"{}\", role=\"{role}\"];",
            quote(g.label(v)),
            color(r)
        );
    }
    for (e, &r) in edge_roles.iter().enumerate() {
        let (u, v) = g.edge(e);
        let role = r.map_or_else(|| "none".to_string(), |r| r.to_string());
        let _ = writeln!(s, "  n{u} {arrow} n{v} [color=\"{}\", role=\"{role}\"];", color(r));
    }
    s.push_str("}\n");
    Ok(s)
}
