//! Graph representation, edge-list ingestion and snapshot derivation.
//!
//! A [`Graph`] is immutable once built. Vertices are contiguous ids `0..n`;
//! the original tokens from the input file are kept as labels so that results
//! can be written back in the caller's id space. Undirected edges are stored
//! canonically with `src < dst`.
//!
//! Timestamped graphs may hold the same vertex pair several times (once per
//! distinct timestamp): that is what lets snapshots of a stream share edges.
//! Use [`Graph::simplify`] to collapse repeated pairs.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Options controlling edge-list ingestion.
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub directed: bool,
}

/// Counters collected while building a graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub merged: usize,
}

#[derive(Clone, Debug)]
struct RawEdge {
    src: VertexId,
    dst: VertexId,
    weight: f64,
    ts: Option<u64>,
}

/// Incremental constructor for [`Graph`].
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    n: usize,
    directed: bool,
    edges: Vec<RawEdge>,
    weighted: bool,
    timestamped: Option<bool>,
    labels: Option<Arc<[String]>>,
}

impl GraphBuilder {
    pub fn new(n: usize, directed: bool) -> Self {
        Self {
            n,
            directed,
            edges: Vec::new(),
            weighted: false,
            timestamped: None,
            labels: None,
        }
    }

    pub fn labels(mut self, labels: Arc<[String]>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn add_edge(&mut self, src: VertexId, dst: VertexId) -> &mut Self {
        self.push(src, dst, 1.0, None)
    }

    pub fn add_weighted(&mut self, src: VertexId, dst: VertexId, weight: f64) -> &mut Self {
        self.weighted = true;
        self.push(src, dst, weight, None)
    }

    /// Adds an edge with explicit weight and timestamp. All edges of a
    /// timestamped graph must carry a timestamp.
    pub fn add_full(
        &mut self,
        src: VertexId,
        dst: VertexId,
        weight: Option<f64>,
        ts: Option<u64>,
    ) -> &mut Self {
        if weight.is_some() {
            self.weighted = true;
        }
        self.push(src, dst, weight.unwrap_or(1.0), ts)
    }

    fn push(&mut self, src: VertexId, dst: VertexId, weight: f64, ts: Option<u64>) -> &mut Self {
        assert!(src < self.n && dst < self.n, "vertex id out of range");
        self.timestamped.get_or_insert(ts.is_some());
        self.edges.push(RawEdge { src, dst, weight, ts });
        self
    }

    pub fn build(self) -> Result<Graph> {
        self.build_with_stats().map(|(g, _)| g)
    }

    pub fn build_with_stats(self) -> Result<(Graph, BuildStats)> {
        let timestamped = self.timestamped.unwrap_or(false);
        if self.edges.iter().any(|e| e.ts.is_some() != timestamped) {
            return Err(Error::Precondition(
                "either every edge or no edge carries a timestamp".into(),
            ));
        }
        for e in &self.edges {
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::Domain(format!("invalid edge weight {}", e.weight)));
            }
        }
        let mut stats = BuildStats::default();
        let mut index: HashMap<(VertexId, VertexId, Option<u64>), usize> = HashMap::new();
        let mut merged: Vec<RawEdge> = Vec::with_capacity(self.edges.len());
        for mut e in self.edges {
            if e.src == e.dst {
                stats.self_loops += 1;
                continue;
            }
            if !self.directed && e.src > e.dst {
                std::mem::swap(&mut e.src, &mut e.dst);
            }
            match index.get(&(e.src, e.dst, e.ts)) {
                Some(&i) => {
                    merged[i].weight += e.weight;
                    stats.merged += 1;
                }
                None => {
                    index.insert((e.src, e.dst, e.ts), merged.len());
                    merged.push(e);
                }
            }
        }
        if stats.self_loops > 0 {
            log::warn!("dropped {} self-loop(s)", stats.self_loops);
        }
        if timestamped {
            merged.sort_by_key(|e| e.ts);
        }
        let labels = self
            .labels
            .unwrap_or_else(|| (0..self.n).map(|v| v.to_string()).collect());
        if labels.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: labels.len(),
            });
        }
        let edges: Vec<(VertexId, VertexId)> = merged.iter().map(|e| (e.src, e.dst)).collect();
        let weights = self
            .weighted
            .then(|| merged.iter().map(|e| e.weight).collect());
        let timestamps = timestamped.then(|| merged.iter().map(|e| e.ts.unwrap()).collect());
        Ok((
            Graph::assemble(self.n, self.directed, edges, weights, timestamps, labels),
            stats,
        ))
    }
}

/// Immutable graph with CSR incidence lists.
///
/// `neighbors(v)` and `incident_edges(v)` are parallel slices sorted by
/// (neighbor, edge id). For directed graphs they cover both in- and
/// out-edges.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<(VertexId, VertexId)>,
    weights: Option<Vec<f64>>,
    timestamps: Option<Vec<u64>>,
    labels: Arc<[String]>,
    offsets: Vec<usize>,
    nbrs: Vec<VertexId>,
    eids: Vec<EdgeId>,
}

impl Graph {
    /// Builds an unweighted, untimed graph from vertex pairs.
    pub fn from_edges(n: usize, pairs: &[(VertexId, VertexId)], directed: bool) -> Result<Self> {
        let mut b = GraphBuilder::new(n, directed);
        for &(u, v) in pairs {
            b.add_edge(u, v);
        }
        b.build()
    }

    fn assemble(
        n: usize,
        directed: bool,
        edges: Vec<(VertexId, VertexId)>,
        weights: Option<Vec<f64>>,
        timestamps: Option<Vec<u64>>,
        labels: Arc<[String]>,
    ) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in &edges {
            offsets[u + 1] += 1;
            offsets[v + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![(0usize, 0usize); 2 * edges.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            slots[cursor[u]] = (v, e);
            cursor[u] += 1;
            slots[cursor[v]] = (u, e);
            cursor[v] += 1;
        }
        for v in 0..n {
            slots[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let (nbrs, eids) = slots.into_iter().unzip();
        Self {
            n,
            directed,
            edges,
            weights,
            timestamps,
            labels,
            offsets,
            nbrs,
            eids,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edge(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Edge weight, 1.0 for unweighted graphs.
    pub fn weight(&self, e: EdgeId) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[e])
    }

    pub fn timestamps(&self) -> Option<&[u64]> {
        self.timestamps.as_deref()
    }

    pub fn labels(&self) -> &Arc<[String]> {
        &self.labels
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.nbrs[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn incident_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.eids[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Number of incidence entries at `v` (in + out for directed graphs).
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// True when no unordered vertex pair is connected more than once.
    pub fn is_simple(&self) -> bool {
        (0..self.n).all(|v| self.neighbors(v).windows(2).all(|w| w[0] != w[1]))
    }

    /// Collapses repeated pairs (same direction for directed graphs) into one
    /// edge. Weights are summed and the earliest timestamp is kept.
    pub fn simplify(&self) -> Graph {
        let mut index: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        let mut ts = Vec::new();
        for (e, &pair) in self.edges.iter().enumerate() {
            match index.get(&pair) {
                Some(&i) => {
                    weights[i] += self.weight(e);
                }
                None => {
                    index.insert(pair, edges.len());
                    edges.push(pair);
                    weights.push(self.weight(e));
                    if let Some(t) = &self.timestamps {
                        ts.push(t[e]);
                    }
                }
            }
        }
        // timestamps were already sorted, so first occurrence is the earliest
        Graph::assemble(
            self.n,
            self.directed,
            edges,
            self.weights.as_ref().map(|_| weights),
            self.timestamps.as_ref().map(|_| ts),
            self.labels.clone(),
        )
    }

    /// Undirected simple view of the graph plus, for every edge of `self`,
    /// the id of the undirected edge it maps to.
    pub fn symmetrized(&self) -> (Graph, Vec<EdgeId>) {
        let mut index: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut map = Vec::with_capacity(self.m());
        for &(u, v) in &self.edges {
            let key = (u.min(v), u.max(v));
            let id = *index.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
            map.push(id);
        }
        let g = Graph::assemble(self.n, false, edges, None, None, self.labels.clone());
        (g, map)
    }

    /// Writes the graph in the same whitespace-separated format that
    /// [`parse_edgelist`] reads, using the vertex labels.
    pub fn write_edgelist<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            write!(out, "{} {}", self.labels[u], self.labels[v])?;
            if self.weights.is_some() || self.timestamps.is_some() {
                write!(out, " {}", self.weight(e))?;
            }
            if let Some(ts) = &self.timestamps {
                write!(out, " {}", ts[e])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads an edge list from `path`.
pub fn load_edgelist(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_edgelist(BufReader::new(file), opts).map(|(g, _)| g)
}

/// Parses `src dst [weight] [timestamp]` lines. `#` starts a comment line;
/// columns past the fourth are reserved and ignored.
pub fn parse_edgelist<R: BufRead>(reader: R, opts: &LoadOptions) -> Result<(Graph, BuildStats)> {
    struct Row {
        src: String,
        dst: String,
        weight: Option<f64>,
        ts: Option<u64>,
    }
    let mut rows = Vec::new();
    let mut timestamped: Option<bool> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected `src dst [weight] [timestamp]`".into(),
            });
        }
        let weight = match cols.get(2) {
            Some(tok) => {
                let w: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad weight `{tok}`"),
                })?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Domain(format!("line {lineno}: weight {w} must be >= 0")));
                }
                Some(w)
            }
            None => None,
        };
        let ts = match cols.get(3) {
            Some(tok) => {
                let t: i64 = tok.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad timestamp `{tok}`"),
                })?;
                if t < 0 {
                    return Err(Error::Domain(format!(
                        "line {lineno}: timestamp {t} must be >= 0"
                    )));
                }
                Some(t as u64)
            }
            None => None,
        };
        if *timestamped.get_or_insert(ts.is_some()) != ts.is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: "timestamps must be given on every line or on none".into(),
            });
        }
        rows.push(Row {
            src: cols[0].to_string(),
            dst: cols[1].to_string(),
            weight,
            ts,
        });
    }

    let mut tokens: Vec<&str> = rows
        .iter()
        .flat_map(|r| [r.src.as_str(), r.dst.as_str()])
        .collect();
    tokens.sort_unstable();
    tokens.dedup();
    let numeric: Option<Vec<u64>> = tokens.iter().map(|t| t.parse().ok()).collect();
    if let Some(values) = numeric {
        let mut keyed: Vec<(u64, &str)> = values.into_iter().zip(tokens.iter().copied()).collect();
        keyed.sort_unstable();
        tokens = keyed.into_iter().map(|(_, t)| t).collect();
    }
    let ids: HashMap<&str, VertexId> = tokens.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let labels: Arc<[String]> = tokens.iter().map(|t| t.to_string()).collect();

    let weighted = rows.iter().any(|r| r.weight.is_some());
    let mut b = GraphBuilder::new(labels.len(), opts.directed).labels(labels);
    for r in &rows {
        let w = if weighted { Some(r.weight.unwrap_or(1.0)) } else { None };
        b.add_full(ids[r.src.as_str()], ids[r.dst.as_str()], w, r.ts);
    }
    b.build_with_stats()
}

/// Sequence of snapshot graphs over a shared vertex set.
#[derive(Clone, Debug)]
pub struct SnapshotSeries {
    snapshots: Vec<Graph>,
    start: u64,
    width: u64,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Snapshot `t`, zero-based.
    pub fn get(&self, t: usize) -> &Graph {
        &self.snapshots[t]
    }

    pub fn snapshots(&self) -> &[Graph] {
        &self.snapshots
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    /// Half-open time interval `[a, b)` covered by snapshot `t`.
    pub fn interval(&self, t: usize) -> (u64, u64) {
        let a = self.start + t as u64 * self.width;
        (a, a + self.width)
    }

    /// Wraps existing graphs as a series (used for static inputs).
    pub fn from_graphs(snapshots: Vec<Graph>, start: u64, width: u64) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Precondition("a series needs at least one snapshot".into()));
        }
        let n = snapshots[0].n();
        if let Some(g) = snapshots.iter().find(|g| g.n() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: g.n(),
            });
        }
        Ok(Self {
            snapshots,
            start,
            width,
        })
    }
}

/// Splits a timestamped graph into consecutive windows of `width` time
/// units starting at `start`. Interior empty windows are kept; trailing
/// ones are not. Edges before `start` are outside the covered range.
pub fn snapshots(g: &Graph, width: u64, start: u64) -> Result<SnapshotSeries> {
    let ts = g
        .timestamps()
        .ok_or_else(|| Error::Precondition("snapshots require edge timestamps".into()))?;
    if width == 0 {
        return Err(Error::Precondition("snapshot width must be positive".into()));
    }
    let slot = |t: u64| ((t - start) / width) as usize;
    let count = ts
        .iter()
        .filter(|&&t| t >= start)
        .map(|&t| slot(t) + 1)
        .max()
        .unwrap_or(1);
    let mut builders: Vec<GraphBuilder> = (0..count)
        .map(|_| GraphBuilder::new(g.n(), g.is_directed()).labels(g.labels().clone()))
        .collect();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if ts[e] < start {
            continue;
        }
        let w = g.weights().map(|w| w[e]);
        builders[slot(ts[e])].add_full(u, v, w, Some(ts[e]));
    }
    let snapshots = builders
        .into_iter()
        .map(|b| {
            if b.edges.is_empty() {
                // keep the timestamped flavour on empty windows
                Ok(Graph::assemble(
                    g.n(),
                    g.is_directed(),
                    Vec::new(),
                    g.weights().map(|_| Vec::new()),
                    Some(Vec::new()),
                    g.labels().clone(),
                ))
            } else {
                b.build().map(|s| s.simplify())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnapshotSeries {
        snapshots,
        start,
        width,
    })
}

/// Deduplicated union of the first `k` snapshots (1-based count).
pub fn union_window(s: &SnapshotSeries, k: usize) -> Result<Graph> {
    if k == 0 || k > s.len() {
        return Err(Error::Index {
            index: k,
            len: s.len(),
        });
    }
    let first = &s.snapshots[0];
    let mut b = GraphBuilder::new(first.n(), first.is_directed()).labels(first.labels().clone());
    let mut any = false;
    for g in &s.snapshots[..k] {
        let ts = g.timestamps();
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            any = true;
            b.add_full(u, v, g.weights().map(|w| w[e]), ts.map(|t| t[e]));
        }
    }
    if !any {
        return Ok(Graph::assemble(
            first.n(),
            first.is_directed(),
            Vec::new(),
            None,
            None,
            first.labels().clone(),
        ));
    }
    Ok(b.build()?.simplify())
}
