//! Relational operators over edge and node neighborhoods.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};

/// What a row of a feature matrix describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Edge,
    Node,
}

/// Aggregation applied to a feature over an entity's neighbors. Kernel
/// operators compare the entity's own value with each neighbor value and
/// average the similarities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Operator {
    Mean,
    Sum,
    Product,
    Min,
    Max,
    Variance,
    L1,
    L2,
    Rbf { sigma: f64 },
    Poly { a: f64, c: f64, d: i32 },
    Sigmoid { a: f64, c: f64 },
}

/// Operator names as they appear in configuration; kernel parameters are
/// resolved against the parent column when a candidate is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Mean,
    Sum,
    Product,
    Min,
    Max,
    Variance,
    L1,
    L2,
    Rbf,
    Poly,
    Sigmoid,
}

impl OpKind {
    pub const ALL: [OpKind; 11] = [
        OpKind::Mean,
        OpKind::Sum,
        OpKind::Product,
        OpKind::Min,
        OpKind::Max,
        OpKind::Variance,
        OpKind::L1,
        OpKind::L2,
        OpKind::Rbf,
        OpKind::Poly,
        OpKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Mean => "mean",
            OpKind::Sum => "sum",
            OpKind::Product => "product",
            OpKind::Min => "min",
            OpKind::Max => "max",
            OpKind::Variance => "variance",
            OpKind::L1 => "l1",
            OpKind::L2 => "l2",
            OpKind::Rbf => "rbf",
            OpKind::Poly => "poly",
            OpKind::Sigmoid => "sigmoid",
        }
    }

    /// Concrete operator for a parent column. `None` when the operator would
    /// be degenerate (an RBF over a zero-variance column).
    pub fn resolve(self, parent: &[f64]) -> Option<Operator> {
        Some(match self {
            OpKind::Mean => Operator::Mean,
            OpKind::Sum => Operator::Sum,
            OpKind::Product => Operator::Product,
            OpKind::Min => Operator::Min,
            OpKind::Max => Operator::Max,
            OpKind::Variance => Operator::Variance,
            OpKind::L1 => Operator::L1,
            OpKind::L2 => Operator::L2,
            OpKind::Rbf => {
                let sigma = std_dev(parent);
                if sigma <= 0.0 {
                    return None;
                }
                Operator::Rbf { sigma }
            }
            OpKind::Poly => Operator::Poly { a: 1.0, c: 0.0, d: 2 },
            OpKind::Sigmoid => Operator::Sigmoid { a: 1.0, c: 0.0 },
        })
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown operator `{s}`")))
    }
}

impl Operator {
    pub fn kind(&self) -> OpKind {
        match self {
            Operator::Mean => OpKind::Mean,
            Operator::Sum => OpKind::Sum,
            Operator::Product => OpKind::Product,
            Operator::Min => OpKind::Min,
            Operator::Max => OpKind::Max,
            Operator::Variance => OpKind::Variance,
            Operator::L1 => OpKind::L1,
            Operator::L2 => OpKind::L2,
            Operator::Rbf { .. } => OpKind::Rbf,
            Operator::Poly { .. } => OpKind::Poly,
            Operator::Sigmoid { .. } => OpKind::Sigmoid,
        }
    }

    /// Aggregates `own` against `neighbors`, 0 for an empty neighborhood.
    pub fn aggregate(&self, own: f64, neighbors: impl Iterator<Item = f64>) -> f64 {
        let mut count = 0usize;
        let out = match *self {
            Operator::Sum | Operator::Mean => {
                let s: f64 = neighbors.inspect(|_| count += 1).sum();
                if matches!(self, Operator::Mean) && count > 0 {
                    s / count as f64
                } else {
                    s
                }
            }
            Operator::Product => neighbors.inspect(|_| count += 1).product(),
            Operator::Min => neighbors.inspect(|_| count += 1).fold(f64::INFINITY, f64::min),
            Operator::Max => neighbors.inspect(|_| count += 1).fold(0.0, f64::max),
            Operator::Variance => {
                // Welford
                let (mut mean, mut m2) = (0.0, 0.0);
                for x in neighbors {
                    count += 1;
                    let d = x - mean;
                    mean += d / count as f64;
                    m2 += d * (x - mean);
                }
                if count > 0 {
                    (m2 / count as f64).max(0.0)
                } else {
                    0.0
                }
            }
            Operator::L1 => neighbors.inspect(|_| count += 1).map(|x| (own - x).abs()).sum(),
            Operator::L2 => neighbors
                .inspect(|_| count += 1)
                .map(|x| (own - x) * (own - x))
                .sum::<f64>()
                .sqrt(),
            Operator::Rbf { sigma } => {
                let denom = 2.0 * sigma * sigma;
                mean_of(neighbors.map(|x| (-(own - x) * (own - x) / denom).exp()), &mut count)
            }
            Operator::Poly { a, c, d } => {
                mean_of(neighbors.map(|x| (a * own * x + c).powi(d)), &mut count)
            }
            Operator::Sigmoid { a, c } => mean_of(neighbors.map(|x| (a * own * x + c).tanh()), &mut count),
        };
        if count == 0 {
            0.0
        } else {
            out.max(0.0)
        }
    }
}

fn mean_of(it: impl Iterator<Item = f64>, count: &mut usize) -> f64 {
    let s: f64 = it.inspect(|_| *count += 1).sum();
    if *count > 0 {
        s / *count as f64
    } else {
        0.0
    }
}

fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Edges sharing at least one endpoint with `e`, excluding `e`; sorted.
pub fn edge_neighbors(g: &Graph, e: EdgeId) -> Vec<EdgeId> {
    let (u, v) = g.edge(e);
    let mut out: Vec<EdgeId> = g
        .incident_edges(u)
        .iter()
        .chain(g.incident_edges(v))
        .copied()
        .filter(|&x| x != e)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Neighbor structure over the rows of a feature matrix.
pub struct Neighborhood<'g> {
    g: &'g Graph,
    kind: EntityKind,
    /// Precomputed CSR lists; `None` means the 1-hop fast path over the
    /// graph's own incidence lists.
    lists: Option<(Vec<usize>, Vec<usize>)>,
}

impl<'g> Neighborhood<'g> {
    pub fn new(g: &'g Graph, kind: EntityKind, hops: usize) -> Self {
        let hops = hops.max(1);
        let fast = hops == 1 && !g.is_directed() && g.is_simple();
        let lists = (!fast).then(|| {
            let rows = match kind {
                EntityKind::Edge => g.m(),
                EntityKind::Node => g.n(),
            };
            let per_row: Vec<Vec<usize>> = (0..rows)
                .into_par_iter()
                .map(|i| within_hops(g, kind, i, hops))
                .collect();
            let mut offsets = Vec::with_capacity(rows + 1);
            offsets.push(0);
            let mut flat = Vec::new();
            for l in per_row {
                flat.extend(l);
                offsets.push(flat.len());
            }
            (offsets, flat)
        });
        Self { g, kind, lists }
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        match self.kind {
            EntityKind::Edge => self.g.m(),
            EntityKind::Node => self.g.n(),
        }
    }

    /// Visits every neighbor row of row `i` exactly once.
    pub fn for_each(&self, i: usize, mut f: impl FnMut(usize)) {
        if let Some((offsets, flat)) = &self.lists {
            flat[offsets[i]..offsets[i + 1]].iter().for_each(|&j| f(j));
            return;
        }
        match self.kind {
            EntityKind::Edge => {
                let (u, v) = self.g.edge(i);
                for &j in self.g.incident_edges(u).iter().chain(self.g.incident_edges(v)) {
                    if j != i {
                        f(j);
                    }
                }
            }
            EntityKind::Node => self.g.neighbors(i).iter().for_each(|&j| f(j)),
        }
    }

    /// Applies `op` to every row of `col`.
    pub fn apply(&self, col: &[f64], op: &Operator) -> Vec<f64> {
        (0..self.rows())
            .into_par_iter()
            .with_min_len(512)
            .map_init(Vec::new, |vals, i| {
                vals.clear();
                self.for_each(i, |j| vals.push(col[j]));
                op.aggregate(col[i], vals.iter().copied())
            })
            .collect()
    }
}

fn direct_neighbors(g: &Graph, kind: EntityKind, i: usize) -> Vec<usize> {
    match kind {
        EntityKind::Edge => edge_neighbors(g, i),
        EntityKind::Node => {
            let mut v: Vec<usize> = g.neighbors(i).to_vec();
            v.dedup();
            v
        }
    }
}

fn within_hops(g: &Graph, kind: EntityKind, start: usize, hops: usize) -> Vec<usize> {
    let mut seen: HashSet<usize> = HashSet::from([start]);
    let mut frontier = vec![start];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &x in &frontier {
            for y in direct_neighbors(g, kind, x) {
                if seen.insert(y) {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    seen.remove(&start);
    let mut out: Vec<usize> = seen.into_iter().collect();
    out.sort_unstable();
    out
}
