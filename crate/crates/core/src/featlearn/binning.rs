//! Vertical logarithmic binning and the feature graph used for pruning.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rank-based logarithmic binning: the `⌈α·m⌉` smallest values get bin 0,
/// the `⌈α·rest⌉` smallest of the rest bin 1, and so on. Equal values
/// always share a bin.
pub fn log_bin(values: &[f64], alpha: f64) -> Vec<u32> {
    assert!(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut bins = vec![0u32; m];
    let (mut pos, mut bin) = (0usize, 0u32);
    while pos < m {
        let quota = ((alpha * (m - pos) as f64).ceil() as usize).max(1);
        let mut end = (pos + quota).min(m);
        let last = values[order[end - 1]];
        while end < m && values[order[end]] == last {
            end += 1;
        }
        for &i in &order[pos..end] {
            bins[i] = bin;
        }
        pos = end;
        bin += 1;
    }
    bins
}

/// Number of distinct bins in a binned column.
pub fn bin_count(bins: &[u32]) -> u32 {
    bins.iter().copied().max().map_or(0, |b| b + 1)
}

/// Fraction of rows on which two binned columns differ.
pub fn disagreement(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.len() as f64)
}

/// Agreement `1 - disagreement` if it reaches `min_agreement`, else `None`.
/// Stops scanning as soon as the threshold is out of reach.
fn agreement_at_least(a: &[u32], b: &[u32], min_agreement: f64) -> Option<f64> {
    let m = a.len();
    if m == 0 {
        return Some(1.0);
    }
    let budget = ((1.0 - min_agreement) * m as f64 + 1e-9).floor() as usize;
    let mut diff = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            diff += 1;
            if diff > budget {
                return None;
            }
        }
    }
    let w = 1.0 - diff as f64 / m as f64;
    (w >= min_agreement).then_some(w)
}

/// Weighted graph over features; `W_ij` is the agreement of their bins.
#[derive(Clone, Debug, Default)]
pub struct FeatureGraph {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl FeatureGraph {
    pub fn new(nodes: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        Self { nodes, edges }
    }

    /// Builds the graph over binned columns. Pairs rejected by `skip` are
    /// not compared, and edges with agreement below `min_weight` are left out.
    pub fn from_bins(
        bins: &[Vec<u32>],
        min_weight: f64,
        skip: impl Fn(usize, usize) -> bool + Sync,
    ) -> Self {
        let f = bins.len();
        let edges = (0..f)
            .into_par_iter()
            .flat_map_iter(|i| {
                let skip = &skip;
                (i + 1..f).filter_map(move |j| {
                    if skip(i, j) {
                        return None;
                    }
                    agreement_at_least(&bins[i], &bins[j], min_weight).map(|w| (i, j, w))
                })
            })
            .collect();
        Self { nodes: f, edges }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (i.min(j), i.max(j));
        self.edges
            .iter()
            .find(|&&(x, y, _)| x == a && y == b)
            .map(|&(_, _, w)| w)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Drops edges with `W < gamma`, then keeps one feature per connected
/// component: every existing representative if the component has any,
/// otherwise the feature with the smallest layer (ties: smallest id).
/// Returns survivors in ascending id order.
pub fn prune(fg: &FeatureGraph, gamma: f64, layer_of: &[usize], representative: &[bool]) -> Vec<usize> {
    let f = fg.nodes;
    assert_eq!(layer_of.len(), f);
    assert_eq!(representative.len(), f);
    let mut parent: Vec<usize> = (0..f).collect();
    for &(i, j, w) in &fg.edges {
        if w >= gamma {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut has_rep = vec![false; f];
    let mut best: Vec<Option<usize>> = vec![None; f];
    for i in 0..f {
        let root = find(&mut parent, i);
        has_rep[root] |= representative[i];
        let better = match best[root] {
            None => true,
            Some(b) => (layer_of[i], i) < (layer_of[b], b),
        };
        if better {
            best[root] = Some(i);
        }
    }
    (0..f)
        .filter(|&i| {
            let root = find(&mut parent, i);
            if has_rep[root] {
                representative[i]
            } else {
                best[root] == Some(i)
            }
        })
        .collect()
}
