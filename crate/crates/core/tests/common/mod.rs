//! Brute-force enumeration of induced 3- and 4-vertex subgraphs.

use edgeroles::graphlets::{graphlets, EdgeOrbits, NodeOrbits, EDGE_ORBITS, NODE_ORBITS};
use edgeroles::Graph;

pub struct Brute {
    adj: Vec<u64>,
}

impl Brute {
    pub fn new(g: &Graph) -> Self {
        assert!(g.n() <= 64);
        let mut adj = vec![0u64; g.n()];
        for &(u, v) in g.edges() {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        Self { adj }
    }

    pub fn has(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    /// Degrees inside the induced subgraph on `set`, or `None` if disconnected.
    fn shape(&self, set: &[usize]) -> Option<(usize, Vec<usize>)> {
        let mask: u64 = set.iter().map(|&v| 1u64 << v).sum();
        let deg: Vec<usize> = set.iter().map(|&v| (self.adj[v] & mask).count_ones() as usize).collect();
        let edges = deg.iter().sum::<usize>() / 2;
        let mut seen = 1u64 << set[0];
        loop {
            let grow = set
                .iter()
                .filter(|&&v| seen >> v & 1 == 1)
                .fold(seen, |acc, &v| acc | (self.adj[v] & mask));
            if grow == seen {
                break;
            }
            seen = grow;
        }
        (seen == mask).then_some((edges, deg))
    }

    /// Graphlet name of a connected 4-vertex shape.
    fn four(edges: usize, deg: &[usize]) -> &'static str {
        let mut d = deg.to_vec();
        d.sort_unstable();
        match (edges, d.as_slice()) {
            (3, [1, 1, 2, 2]) => "path4",
            (3, [1, 1, 1, 3]) => "star3",
            (4, [2, 2, 2, 2]) => "cycle4",
            (4, [1, 2, 2, 3]) => "tailed_triangle",
            (5, _) => "chordal_cycle4",
            (6, _) => "clique4",
            other => unreachable!("{other:?}"),
        }
    }

    fn node_orbit(kind: &str, degree: usize) -> &'static str {
        match (kind, degree) {
            ("path4", 1) => "path4_end",
            ("path4", 2) => "path4_mid",
            ("star3", 1) => "star3_leaf",
            ("star3", 3) => "star3_center",
            ("cycle4", _) => "cycle4",
            ("tailed_triangle", 1) => "tailed_tail",
            ("tailed_triangle", 2) => "tailed_edge",
            ("tailed_triangle", 3) => "tailed_center",
            ("chordal_cycle4", 2) => "chordal_rim",
            ("chordal_cycle4", 3) => "chordal_hub",
            ("clique4", _) => "clique4",
            other => unreachable!("{other:?}"),
        }
    }

    pub fn edge(&self, u: usize, v: usize) -> EdgeOrbits {
        let n = self.adj.len();
        let col = |name: &str| EDGE_ORBITS.iter().position(|&o| o == name).unwrap();
        let mut out = [0u64; 9];
        let others: Vec<usize> = (0..n).filter(|&w| w != u && w != v).collect();
        for &w in &others {
            match (self.has(u, w), self.has(v, w)) {
                (true, true) => out[col("triangle")] += 1,
                (true, false) => out[col("wedge_u")] += 1,
                (false, true) => out[col("wedge_v")] += 1,
                _ => {}
            }
        }
        for (i, &w) in others.iter().enumerate() {
            for &x in &others[i + 1..] {
                if let Some((e, d)) = self.shape(&[u, v, w, x]) {
                    out[col(Self::four(e, &d))] += 1;
                }
            }
        }
        out
    }

    pub fn node(&self, v: usize) -> NodeOrbits {
        let n = self.adj.len();
        let col = |name: &str| NODE_ORBITS.iter().position(|&o| o == name).unwrap();
        let mut out = [0u64; 14];
        let others: Vec<usize> = (0..n).filter(|&w| w != v).collect();
        for (i, &a) in others.iter().enumerate() {
            for &b in &others[i + 1..] {
                if let Some((e, d)) = self.shape(&[v, a, b]) {
                    let name = match (e, d[0]) {
                        (3, _) => "triangle",
                        (2, 2) => "wedge_center",
                        (2, 1) => "wedge_end",
                        other => unreachable!("{other:?}"),
                    };
                    out[col(name)] += 1;
                }
                for &c in &others[i + 1..] {
                    if c <= b {
                        continue;
                    }
                    if let Some((e, d)) = self.shape(&[v, a, b, c]) {
                        out[col(Self::node_orbit(Self::four(e, &d), d[0]))] += 1;
                    }
                }
            }
        }
        out
    }
}

pub fn check(g: &Graph) -> Result<(), String> {
    let p = graphlets(g, false).map_err(|e| e.to_string())?;
    let b = Brute::new(g);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let want = b.edge(u, v);
        if p.edge_counts[e] != want {
            return Err(format!("edge {e} ({u},{v}): got {:?}, want {want:?}", p.edge_counts[e]));
        }
    }
    for v in 0..g.n() {
        let want = b.node(v);
        if p.node_counts[v] != want {
            return Err(format!("node {v}: got {:?}, want {want:?}", p.node_counts[v]));
        }
    }
    Ok(())
}
