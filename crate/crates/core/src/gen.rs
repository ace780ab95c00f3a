//! Seeded synthetic graphs, streams and matrices for tests, benchmarks and
//! the bundled example data.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::graph::{Graph, GraphBuilder, VertexId};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ordered(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    (u.min(v), u.max(v))
}

/// Uniform random simple undirected graph with exactly `m` edges.
///
/// # Panics
/// If `m` exceeds the number of vertex pairs.
pub fn gnm(n: usize, m: usize, seed: u64) -> Graph {
    let pairs = n * n.saturating_sub(1) / 2;
    assert!(m <= pairs, "gnm: {m} edges do not fit on {n} vertices");
    let mut r = rng(seed);
    let mut set = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    if 2 * m > pairs {
        for idx in sample(&mut r, pairs, m) {
            edges.push(unrank_pair(idx, n));
        }
    } else {
        while edges.len() < m {
            let u = r.random_range(0..n);
            let v = r.random_range(0..n);
            if u != v && set.insert(ordered(u, v)) {
                edges.push(ordered(u, v));
            }
        }
    }
    Graph::from_edges(n, &edges, false).expect("generated edges are valid")
}

fn unrank_pair(mut idx: usize, n: usize) -> (VertexId, VertexId) {
    for u in 0..n {
        let row = n - u - 1;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
    }
    unreachable!("pair index out of range")
}

/// Erdős–Rényi graph where each pair is present with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges, false).expect("generated edges are valid")
}

/// Co-authorship style graph: each project is a clique over a small team
/// drawn by preferential attachment, with occasional newcomers.
pub fn collaboration(authors: usize, projects: usize, seed: u64) -> Graph {
    assert!(authors >= 5, "collaboration: need at least 5 authors");
    let mut r = rng(seed);
    let mut activity = vec![0usize; authors];
    let mut introduced = 5.min(authors);
    let mut edges = HashSet::new();
    for _ in 0..projects {
        let team_size = match r.random::<f64>() {
            x if x < 0.35 => 2,
            x if x < 0.7 => 3,
            x if x < 0.9 => 4,
            _ => 5,
        };
        let mut team: Vec<VertexId> = Vec::with_capacity(team_size);
        while team.len() < team_size {
            let pick = if introduced < authors && r.random::<f64>() < 0.3 {
                introduced += 1;
                introduced - 1
            } else {
                let total: usize = activity[..introduced].iter().map(|a| a + 1).sum();
                let mut t = r.random_range(0..total);
                let mut chosen = 0;
                for (i, a) in activity[..introduced].iter().enumerate() {
                    if t < a + 1 {
                        chosen = i;
                        break;
                    }
                    t -= a + 1;
                }
                chosen
            };
            if !team.contains(&pick) {
                team.push(pick);
            }
        }
        for (i, &a) in team.iter().enumerate() {
            activity[a] += 1;
            for &b in &team[i + 1..] {
                edges.insert(ordered(a, b));
            }
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(authors, &edges, false).expect("generated edges are valid")
}

/// Disjoint stars over a random vertex order, sizes in `min..=max` leaves.
fn star_forest(r: &mut ChaCha8Rng, n: usize, min: usize, max: usize) -> Vec<(VertexId, VertexId)> {
    let order = sample(r, n, n).into_vec();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < n {
        let leaves = r.random_range(min..=max);
        let end = (pos + leaves + 1).min(n);
        let center = order[pos];
        out.extend(order[pos + 1..end].iter().map(|&v| ordered(center, v)));
        pos = end;
    }
    out
}

/// Hub-and-spoke edges: each hub fans out to `fan` random vertices.
fn structured_edges(r: &mut ChaCha8Rng, n: usize, hubs: &[VertexId], fan: usize) -> Vec<(VertexId, VertexId)> {
    let mut out = HashSet::new();
    for &h in hubs {
        for v in sample(r, n, fan + 1) {
            if v != h {
                out.insert(ordered(h, v));
            }
        }
    }
    out.into_iter().collect()
}

/// Edges of one clique-heavy snapshot: many small dense groups.
fn clique_edges(r: &mut ChaCha8Rng, n: usize, groups: usize, size: usize) -> Vec<(VertexId, VertexId)> {
    let mut out = HashSet::new();
    for _ in 0..groups {
        let members: Vec<VertexId> = sample(r, n, size).into_vec();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                out.insert(ordered(a, b));
            }
        }
    }
    out.into_iter().collect()
}

/// Parameters of [`two_regime_stream`].
#[derive(Clone, Debug)]
pub struct TwoRegime {
    pub n: usize,
    pub snapshots: usize,
    /// Index of the first noise snapshot.
    pub switch_at: usize,
    pub width: u64,
    pub min_leaves: usize,
    pub max_leaves: usize,
    /// Probability that a star edge shows up in a given snapshot.
    pub keep: f64,
    /// Edge count of a noise snapshot relative to a star snapshot.
    pub noise_edges: f64,
}

impl Default for TwoRegime {
    fn default() -> Self {
        Self {
            n: 200,
            snapshots: 12,
            switch_at: 6,
            width: 10,
            min_leaves: 3,
            max_leaves: 12,
            keep: 0.9,
            noise_edges: 8.0,
        }
    }
}

/// Timestamped stream that repeats one star forest (each edge kept with
/// probability `keep`) up to `switch_at`, followed by uniform random graphs
/// with `noise_edges` times as many edges.
pub fn two_regime_stream(spec: &TwoRegime, seed: u64) -> Graph {
    let mut r = rng(seed);
    let forest = star_forest(&mut r, spec.n, spec.min_leaves, spec.max_leaves);
    let mut b = GraphBuilder::new(spec.n, false);
    for t in 0..spec.snapshots {
        let mut edges: Vec<_> = forest.iter().copied().filter(|_| r.random::<f64>() < spec.keep).collect();
        if t >= spec.switch_at {
            let m = ((edges.len() as f64 * spec.noise_edges).round() as usize).min(spec.n * (spec.n - 1) / 2);
            edges = gnm(spec.n, m, r.random()).edges().to_vec();
        }
        edges.sort_unstable();
        let base = t as u64 * spec.width;
        for (u, v) in edges {
            let ts = base + r.random_range(0..spec.width);
            b.add_full(u, v, None, Some(ts));
        }
    }
    b.build().expect("generated stream is valid")
}

/// Stream repeating one fixed edge pattern every `period` ticks. In the
/// first half of each period the hub-and-spoke part is emitted, in the
/// second half the clique part, so windows shorter than the period see
/// alternating structure.
pub fn periodic_stream(n: usize, period: u64, periods: usize, seed: u64) -> Graph {
    assert!(period >= 2, "periodic_stream: period must be at least 2");
    let mut r = rng(seed);
    let hubs: Vec<VertexId> = sample(&mut r, n, 4).into_vec();
    let mut stars = structured_edges(&mut r, n, &hubs, 8);
    let mut cliques = clique_edges(&mut r, n, 4, 5);
    stars.sort_unstable();
    cliques.sort_unstable();
    let half = period / 2;
    let star_offsets: Vec<u64> = stars.iter().map(|_| r.random_range(0..half)).collect();
    let clique_offsets: Vec<u64> = cliques.iter().map(|_| half + r.random_range(0..period - half)).collect();
    let mut b = GraphBuilder::new(n, false);
    for k in 0..periods as u64 {
        for (&(u, v), &o) in stars.iter().zip(&star_offsets) {
            b.add_full(u, v, None, Some(k * period + o));
        }
        for (&(u, v), &o) in cliques.iter().zip(&clique_offsets) {
            b.add_full(u, v, None, Some(k * period + o));
        }
    }
    b.build().expect("generated stream is valid")
}

/// Planted factor matrices and their noisy product.
#[derive(Clone, Debug)]
pub struct Planted {
    pub x: Array2<f64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

/// `X = U Vᵀ + N` with `U, V` uniform on `[0, 1)` and Gaussian noise of
/// standard deviation `noise · mean(U Vᵀ)`, clamped at zero.
pub fn planted_matrix(m: usize, f: usize, r: usize, noise: f64, seed: u64) -> Planted {
    let mut g = rng(seed);
    let u = Array2::from_shape_simple_fn((m, r), || g.random::<f64>());
    let v = Array2::from_shape_simple_fn((f, r), || g.random::<f64>());
    let clean = u.dot(&v.t());
    let sigma = noise * clean.mean().unwrap_or(0.0);
    let x = if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        clean.mapv(|e| (e + normal.sample(&mut g)).max(0.0))
    } else {
        clean
    };
    Planted { x, u, v }
}

/// Non-negative matrix with independent uniform entries on `[0, scale)`.
pub fn uniform_matrix(m: usize, f: usize, scale: f64, seed: u64) -> Array2<f64> {
    let mut g = rng(seed);
    Array2::from_shape_simple_fn((m, f), || scale * g.random::<f64>())
}
