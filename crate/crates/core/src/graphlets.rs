//! Exact per-edge and per-node counts of induced 3- and 4-vertex graphlets.
//!
//! Triangles come from sorted neighbor-list intersection. For every edge
//! `(u, v)` the remaining neighbors of `u` and `v` split into the triangle
//! set `T`, the vertices adjacent to `u` only (`Su`) and to `v` only (`Sv`).
//! 4-cliques and 4-cycles are enumerated from `T` and `Sv`; every other
//! size-4 count follows from per-edge triangle counts, node triangle counts
//! and neighbor degree sums.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, VertexId};

/// Column names of the per-edge profile, in column order.
pub const EDGE_ORBITS: [&str; 9] = [
    "triangle",
    "wedge_u",
    "wedge_v",
    "clique4",
    "chordal_cycle4",
    "cycle4",
    "tailed_triangle",
    "star3",
    "path4",
];

/// Column names of the per-node profile, in column order.
pub const NODE_ORBITS: [&str; 14] = [
    "triangle",
    "wedge_center",
    "wedge_end",
    "path4_end",
    "path4_mid",
    "star3_leaf",
    "star3_center",
    "cycle4",
    "tailed_tail",
    "tailed_edge",
    "tailed_center",
    "chordal_rim",
    "chordal_hub",
    "clique4",
];

pub type EdgeOrbits = [u64; 9];
pub type NodeOrbits = [u64; 14];

/// Graphlet counts for every edge and every node of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphletProfile {
    pub edge_counts: Vec<EdgeOrbits>,
    pub node_counts: Vec<NodeOrbits>,
}

impl GraphletProfile {
    pub fn edge_column(&self, c: usize) -> Vec<f64> {
        self.edge_counts.iter().map(|r| r[c] as f64).collect()
    }

    pub fn node_column(&self, c: usize) -> Vec<f64> {
        self.node_counts.iter().map(|r| r[c] as f64).collect()
    }

    /// Global triangle count.
    pub fn triangles(&self) -> u64 {
        self.edge_counts.iter().map(|r| r[0]).sum::<u64>() / 3
    }
}

/// Per-edge counts. Directed graphs need `symmetrize`; the counts of each
/// directed edge are those of its underlying undirected pair, with the
/// wedge columns oriented by the edge's source.
pub fn edge_graphlets(g: &Graph, symmetrize: bool) -> Result<Vec<EdgeOrbits>> {
    graphlets(g, symmetrize).map(|p| p.edge_counts)
}

/// Per-node orbit counts, see [`NODE_ORBITS`].
pub fn node_graphlets(g: &Graph, symmetrize: bool) -> Result<Vec<NodeOrbits>> {
    graphlets(g, symmetrize).map(|p| p.node_counts)
}

/// Per-edge and per-node counts in one pass.
pub fn graphlets(g: &Graph, symmetrize: bool) -> Result<GraphletProfile> {
    if g.is_directed() {
        if !symmetrize {
            return Err(Error::Precondition(
                "graphlet counting on a directed graph requires symmetrization".into(),
            ));
        }
        let (s, map) = g.symmetrized();
        let p = count_simple(&s);
        let edge_counts = map
            .iter()
            .enumerate()
            .map(|(e, &id)| {
                let mut row = p.edge_counts[id];
                if g.edge(e).0 > g.edge(e).1 {
                    row.swap(1, 2);
                }
                row
            })
            .collect();
        return Ok(GraphletProfile {
            edge_counts,
            node_counts: p.node_counts,
        });
    }
    if !g.is_simple() {
        return Err(Error::Precondition(
            "graphlet counting needs a simple graph; call Graph::simplify first".into(),
        ));
    }
    Ok(count_simple(g))
}

/// Per-edge intermediate quantities, `u` = source, `v` = destination.
#[derive(Clone, Copy, Debug, Default)]
struct Local {
    t: i64,
    su: i64,
    sv: i64,
    k4: i64,
    c4: i64,
    /// T–Su and T–Sv edges.
    a_u: i64,
    a_v: i64,
    /// T–R edges, R = vertices adjacent to neither endpoint.
    b: i64,
    /// Su–Su and Sv–Sv edges.
    c_u: i64,
    c_v: i64,
    /// Su–R and Sv–R edges.
    e_u: i64,
    e_v: i64,
}

fn choose2(x: i64) -> i64 {
    x * (x - 1) / 2
}

impl Local {
    fn edge_row(&self) -> EdgeOrbits {
        let t = self;
        let row = [
            t.t,
            t.su,
            t.sv,
            t.k4,
            choose2(t.t) - t.k4 + t.a_u + t.a_v,
            t.c4,
            (t.t * t.su - t.a_u) + (t.t * t.sv - t.a_v) + t.b + t.c_u + t.c_v,
            choose2(t.su) - t.c_u + choose2(t.sv) - t.c_v,
            (t.su * t.sv - t.c4) + t.e_u + t.e_v,
        ];
        row.map(|x| {
            debug_assert!(x >= 0);
            x as u64
        })
    }

    /// Size-4 orbit incidences of one endpoint, indexed like `NODE_ORBITS[3..]`.
    /// `near` is the endpoint being credited.
    fn node_side(&self, near_is_u: bool) -> [i64; 11] {
        let (s_n, s_f, a_n, a_f, c_n, c_f, e_n, e_f) = if near_is_u {
            (self.su, self.sv, self.a_u, self.a_v, self.c_u, self.c_v, self.e_u, self.e_v)
        } else {
            (self.sv, self.su, self.a_v, self.a_u, self.c_v, self.c_u, self.e_v, self.e_u)
        };
        let t = self.t;
        [
            e_f,
            (s_n * s_f - self.c4) + e_n,
            choose2(s_f) - c_f,
            choose2(s_n) - c_n,
            self.c4,
            c_f,
            (t * s_f - a_f) + self.b,
            (t * s_n - a_n) + c_n,
            a_f,
            choose2(t) - self.k4 + a_n,
            self.k4,
        ]
    }
}

/// Degree of a vertex inside the graphlet for each size-4 node orbit.
const ORBIT_DEGREE: [i64; 11] = [1, 2, 1, 3, 2, 1, 2, 3, 2, 3, 3];

const MARK_U: u8 = 1;
const MARK_V: u8 = 2;
const MARK_BOTH: u8 = 3;
const MARK_SELF: u8 = 4;

fn intersection_size(a: &[VertexId], b: &[VertexId]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Triangles through each edge of a simple undirected graph.
pub fn edge_triangles(g: &Graph) -> Vec<u64> {
    (0..g.m())
        .into_par_iter()
        .with_min_len(256)
        .map(|e| {
            let (u, v) = g.edge(e);
            intersection_size(g.neighbors(u), g.neighbors(v)) as u64
        })
        .collect()
}

fn count_simple(g: &Graph) -> GraphletProfile {
    let n = g.n();
    let tri_e = edge_triangles(g);
    let deg: Vec<i64> = (0..n).map(|v| g.degree(v) as i64).collect();
    let tri_v: Vec<i64> = (0..n)
        .into_par_iter()
        .map(|v| g.incident_edges(v).iter().map(|&e| tri_e[e] as i64).sum::<i64>() / 2)
        .collect();
    let deg_sum: Vec<i64> = (0..n)
        .into_par_iter()
        .map(|v| g.neighbors(v).iter().map(|&w| deg[w]).sum())
        .collect();

    let locals: Vec<Local> = (0..g.m())
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || vec![0u8; n],
            |mark, e| local_counts(g, e, mark, &tri_e, &tri_v, &deg, &deg_sum),
        )
        .collect();

    let edge_counts = locals.par_iter().map(Local::edge_row).collect();

    let node_counts = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut row = [0u64; 14];
            let d = deg[x];
            row[0] = tri_v[x] as u64;
            row[1] = (choose2(d) - tri_v[x]) as u64;
            let mut side = [0i64; 11];
            let mut wedge_end = 0i64;
            for (&y, &e) in g.neighbors(x).iter().zip(g.incident_edges(x)) {
                let loc = &locals[e];
                let near_is_u = g.edge(e).0 == x;
                wedge_end += if near_is_u { loc.sv } else { loc.su };
                debug_assert_eq!(deg[y] - 1 - loc.t, if near_is_u { loc.sv } else { loc.su });
                for (acc, c) in side.iter_mut().zip(loc.node_side(near_is_u)) {
                    *acc += c;
                }
            }
            row[2] = wedge_end as u64;
            for (k, (&total, &od)) in side.iter().zip(&ORBIT_DEGREE).enumerate() {
                debug_assert_eq!(total % od, 0);
                row[3 + k] = (total / od) as u64;
            }
            row
        })
        .collect();

    GraphletProfile {
        edge_counts,
        node_counts,
    }
}

fn local_counts(
    g: &Graph,
    e: EdgeId,
    mark: &mut [u8],
    tri_e: &[u64],
    tri_v: &[i64],
    deg: &[i64],
    deg_sum: &[i64],
) -> Local {
    let (u, v) = g.edge(e);
    for &x in g.neighbors(u) {
        mark[x] |= MARK_U;
    }
    for &x in g.neighbors(v) {
        mark[x] |= MARK_V;
    }
    mark[u] = MARK_SELF;
    mark[v] = MARK_SELF;

    let t = tri_e[e] as i64;
    let su = deg[u] - 1 - t;
    let sv = deg[v] - 1 - t;

    let mut k4_twice = 0i64;
    let mut tri_uw = 0i64;
    let mut deg_t = 0i64;
    for (&w, &ew) in g.neighbors(u).iter().zip(g.incident_edges(u)) {
        if mark[w] != MARK_BOTH {
            continue;
        }
        tri_uw += tri_e[ew] as i64;
        deg_t += deg[w];
        k4_twice += g.neighbors(w).iter().filter(|&&x| mark[x] == MARK_BOTH).count() as i64;
    }
    let mut tri_vw = 0i64;
    let mut c4 = 0i64;
    for (&w, &ew) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
        match mark[w] {
            MARK_BOTH => tri_vw += tri_e[ew] as i64,
            MARK_V => {
                c4 += g.neighbors(w).iter().filter(|&&x| mark[x] == MARK_U).count() as i64;
            }
            _ => {}
        }
    }

    for &x in g.neighbors(u) {
        mark[x] = 0;
    }
    for &x in g.neighbors(v) {
        mark[x] = 0;
    }

    let k4 = k4_twice / 2;
    let a_u = tri_uw - t - 2 * k4;
    let a_v = tri_vw - t - 2 * k4;
    let c_u = tri_v[u] - t - k4 - a_u;
    let c_v = tri_v[v] - t - k4 - a_v;
    let b = (deg_t - 2 * t) - 2 * k4 - a_u - a_v;
    let deg_su = deg_sum[u] - deg[v] - deg_t;
    let deg_sv = deg_sum[v] - deg[u] - deg_t;
    let e_u = (deg_su - su) - a_u - 2 * c_u - c4;
    let e_v = (deg_sv - sv) - a_v - 2 * c_v - c4;
    Local {
        t,
        su,
        sv,
        k4,
        c4,
        a_u,
        a_v,
        b,
        c_u,
        c_v,
        e_u,
        e_v,
    }
}
