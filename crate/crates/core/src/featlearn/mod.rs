//! Layered relational feature learning.
//!
//! Starting from graphlet counts, each layer applies every configured
//! operator to the features discovered in the previous layer. All columns
//! are log-binned; candidates that agree with an existing representative
//! (or with each other) on at least a fraction `γ` of rows are pruned. The
//! search stops when a layer adds nothing or `max_layers` is reached.

mod binning;
mod ops;

pub use binning::{bin_count, disagreement, log_bin, prune, FeatureGraph};
pub use ops::{edge_neighbors, EntityKind, Neighborhood, OpKind, Operator};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphlets::{graphlets, EDGE_ORBITS, NODE_ORBITS};

/// How a feature column is computed. Stored values are the raw values
/// divided by `scale`, the column maximum on the graph it was learned from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureDef {
    Base {
        orbit: String,
        scale: f64,
    },
    Derived {
        #[serde(flatten)]
        op: Operator,
        parent: usize,
        hops: usize,
        scale: f64,
    },
}

impl FeatureDef {
    pub fn scale(&self) -> f64 {
        match self {
            FeatureDef::Base { scale, .. } | FeatureDef::Derived { scale, .. } => *scale,
        }
    }

    fn with_scale(mut self, s: f64) -> Self {
        match &mut self {
            FeatureDef::Base { scale, .. } | FeatureDef::Derived { scale, .. } => *scale = s,
        }
        self
    }

    /// Human-readable name such as `mean(max(triangle))`.
    pub fn describe(&self, defs: &[FeatureDef]) -> String {
        match self {
            FeatureDef::Base { orbit, .. } => orbit.clone(),
            FeatureDef::Derived { op, parent, .. } => {
                format!("{}({})", op.kind(), defs[*parent].describe(defs))
            }
        }
    }
}

/// How learned columns are reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Log-bin index of each value; the lowest bin maps to 0.
    #[default]
    Bins,
    /// Values divided by the training column maximum.
    Values,
}

/// Upper value of every bin but the last, on the rescaled column.
fn bin_cuts(values: &[f64], bins: &[u32]) -> Vec<f64> {
    let mut cuts = vec![f64::NEG_INFINITY; bin_count(bins).saturating_sub(1) as usize];
    for (&v, &b) in values.iter().zip(bins) {
        if let Some(c) = cuts.get_mut(b as usize) {
            *c = c.max(v);
        }
    }
    cuts
}

fn apply_cuts(values: &[f64], cuts: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| cuts.partition_point(|&c| c < v) as f64).collect()
}

/// Frozen feature definitions that can be evaluated on any graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub entity: EntityKind,
    pub defs: Vec<FeatureDef>,
    pub layer_of: Vec<usize>,
    /// Per-column bin cuts; `None` reports rescaled values.
    #[serde(default)]
    pub cuts: Option<Vec<Vec<f64>>>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Evaluates every definition on `g`.
    pub fn materialize(&self, g: &Graph) -> Result<FeatureMatrix> {
        let rows = match self.entity {
            EntityKind::Edge => g.m(),
            EntityKind::Node => g.n(),
        };
        let profile = if rows > 0 {
            Some(graphlets(g, true)?)
        } else {
            None
        };
        let mut hoods: Vec<(usize, Neighborhood<'_>)> = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(self.defs.len());
        for def in &self.defs {
            let col = match def {
                _ if rows == 0 => Vec::new(),
                FeatureDef::Base { orbit, scale } => {
                    let p = profile.as_ref().unwrap();
                    let raw = match self.entity {
                        EntityKind::Edge => p.edge_column(orbit_index(&EDGE_ORBITS, orbit)?),
                        EntityKind::Node => p.node_column(orbit_index(&NODE_ORBITS, orbit)?),
                    };
                    rescale(raw, *scale)
                }
                FeatureDef::Derived {
                    op,
                    parent,
                    hops,
                    scale,
                } => {
                    if *parent >= cols.len() {
                        return Err(Error::Config(format!(
                            "feature parent {parent} is not defined before its child"
                        )));
                    }
                    if !hoods.iter().any(|(h, _)| h == hops) {
                        hoods.push((*hops, Neighborhood::new(g, self.entity, *hops)));
                    }
                    let nb = &hoods.iter().find(|(h, _)| h == hops).unwrap().1;
                    rescale(nb.apply(&cols[*parent], op), *scale)
                }
            };
            cols.push(col);
        }
        if self.cuts.is_none() && cols.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("feature values overflow on this graph".into()));
        }
        if let Some(cuts) = &self.cuts {
            if cuts.len() != cols.len() {
                return Err(Error::Dimension {
                    expected: cols.len(),
                    got: cuts.len(),
                });
            }
            for (col, c) in cols.iter_mut().zip(cuts) {
                *col = apply_cuts(col, c);
            }
        }
        let mut x = FeatureMatrix::from_columns(
            rows,
            &cols,
            self.defs.clone(),
            self.layer_of.clone(),
            self.entity,
            self.layer_of.iter().copied().max().unwrap_or(0),
        );
        x.cuts = self.cuts.clone();
        Ok(x)
    }
}

fn orbit_index(names: &[&str], orbit: &str) -> Result<usize> {
    names
        .iter()
        .position(|&n| n == orbit)
        .ok_or_else(|| Error::Config(format!("unknown orbit `{orbit}`")))
}

fn rescale(mut col: Vec<f64>, scale: f64) -> Vec<f64> {
    if scale > 0.0 && scale != 1.0 {
        col.iter_mut().for_each(|x| *x /= scale);
    }
    col
}

/// Non-negative feature matrix with one row per edge (or node).
#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub defs: Vec<FeatureDef>,
    pub layer_of: Vec<usize>,
    pub entity: EntityKind,
    /// Number of search layers that were run.
    pub layers: usize,
    /// Bin cuts when columns hold bin indices.
    pub cuts: Option<Vec<Vec<f64>>>,
}

impl FeatureMatrix {
    pub fn from_columns(
        rows: usize,
        cols: &[Vec<f64>],
        defs: Vec<FeatureDef>,
        layer_of: Vec<usize>,
        entity: EntityKind,
        layers: usize,
    ) -> Self {
        let f = cols.len();
        let mut values = Array2::zeros((rows, f));
        for (j, c) in cols.iter().enumerate() {
            values.column_mut(j).iter_mut().zip(c).for_each(|(d, &s)| *d = s);
        }
        Self {
            values,
            defs,
            layer_of,
            entity,
            layers,
            cuts: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&x| x != 0.0).count()
    }

    /// Fraction of nonzero entries, ρ(X).
    pub fn density(&self) -> f64 {
        let cells = self.rows() * self.cols();
        if cells == 0 {
            0.0
        } else {
            self.nnz() as f64 / cells as f64
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).to_vec()
    }

    pub fn definitions(&self) -> FeatureSet {
        FeatureSet {
            entity: self.entity,
            defs: self.defs.clone(),
            layer_of: self.layer_of.clone(),
            cuts: self.cuts.clone(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.defs.iter().map(|d| d.describe(&self.defs)).collect()
    }
}

/// Raw graphlet counts as layer-0 columns (scale 1).
pub fn base_features(g: &Graph, entity: EntityKind) -> Result<FeatureMatrix> {
    let profile = graphlets(g, true)?;
    let (names, rows): (&[&str], usize) = match entity {
        EntityKind::Edge => (&EDGE_ORBITS, g.m()),
        EntityKind::Node => (&NODE_ORBITS, g.n()),
    };
    let cols: Vec<Vec<f64>> = (0..names.len())
        .map(|c| match entity {
            EntityKind::Edge => profile.edge_column(c),
            EntityKind::Node => profile.node_column(c),
        })
        .collect();
    let defs = names
        .iter()
        .map(|o| FeatureDef::Base {
            orbit: o.to_string(),
            scale: 1.0,
        })
        .collect();
    Ok(FeatureMatrix::from_columns(rows, &cols, defs, vec![0; names.len()], entity, 0))
}

/// New column: `op` aggregated over each row's 1-hop neighbors.
pub fn apply_operator(x: &FeatureMatrix, col: usize, op: &Operator, g: &Graph) -> Result<Vec<f64>> {
    if col >= x.cols() {
        return Err(Error::Index {
            index: col,
            len: x.cols(),
        });
    }
    let nb = Neighborhood::new(g, x.entity, 1);
    if nb.rows() != x.rows() {
        return Err(Error::Dimension {
            expected: nb.rows(),
            got: x.rows(),
        });
    }
    Ok(nb.apply(&x.column(col), op))
}

/// Search parameters for [`learn_features`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Bin size fraction α ∈ (0, 1].
    pub alpha: f64,
    /// Tolerance ε ∈ (0, 1) setting the agreement threshold `1 - ε`.
    pub eps: f64,
    pub max_layers: usize,
    pub ops: Vec<OpKind>,
    /// Neighborhood radius for candidate generation.
    pub hops: usize,
    #[serde(default)]
    pub representation: Representation,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            eps: 0.3,
            max_layers: 2,
            ops: vec![
                OpKind::Mean,
                OpKind::Sum,
                OpKind::Min,
                OpKind::Max,
                OpKind::Variance,
                OpKind::L1,
                OpKind::Product,
                OpKind::Rbf,
            ],
            hops: 1,
            representation: Representation::Bins,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("eps {} outside (0, 1)", self.eps)));
        }
        if self.hops == 0 {
            return Err(Error::Config("hops must be at least 1".into()));
        }
        Ok(())
    }

    /// Agreement threshold `γ = 1 - ε`, shared by every layer so that a
    /// pair of representatives kept apart earlier stays below it later.
    pub fn gamma(&self) -> f64 {
        1.0 - self.eps
    }
}

struct Column {
    def: FeatureDef,
    layer: usize,
    values: Vec<f64>,
    bins: Vec<u32>,
}

fn prepare(def: FeatureDef, layer: usize, raw: Vec<f64>, alpha: f64) -> Option<Column> {
    if raw.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return None;
    }
    let values = rescale(raw, max);
    let bins = log_bin(&values, alpha);
    if bin_count(&bins) < 2 {
        return None;
    }
    Some(Column {
        def: def.with_scale(max),
        layer,
        values,
        bins,
    })
}

/// Learns representative features on top of the layer-0 columns in `x0`.
pub fn learn_features(g: &Graph, x0: &FeatureMatrix, cfg: &LearnConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let nb = Neighborhood::new(g, x0.entity, cfg.hops);
    if nb.rows() != x0.rows() {
        return Err(Error::Dimension {
            expected: nb.rows(),
            got: x0.rows(),
        });
    }

    let mut candidates: Vec<Column> = (0..x0.cols())
        .into_par_iter()
        .filter_map(|j| {
            let def = match &x0.defs[j] {
                FeatureDef::Base { orbit, .. } => FeatureDef::Base {
                    orbit: orbit.clone(),
                    scale: 1.0,
                },
                other => other.clone(),
            };
            prepare(def, 0, x0.column(j), cfg.alpha)
        })
        .collect();

    let mut reps: Vec<Column> = Vec::new();
    // ids of `reps` entries added in the previous layer
    let mut frontier: Vec<usize> = Vec::new();
    let mut layers = 0;
    for layer in 0..=cfg.max_layers {
        if layer > 0 {
            layers = layer;
            candidates = frontier
                .par_iter()
                .flat_map_iter(|&p| cfg.ops.iter().map(move |&k| (p, k)))
                .filter_map(|(p, kind)| {
                    let parent = &reps[p].values;
                    let op = kind.resolve(parent)?;
                    let raw = nb.apply(parent, &op);
                    let def = FeatureDef::Derived {
                        op,
                        parent: p,
                        hops: cfg.hops,
                        scale: 1.0,
                    };
                    prepare(def, layer, raw, cfg.alpha)
                })
                .collect();
        }
        // sparser candidates get smaller ids and so win ties within a component
        candidates.sort_by_key(|c| c.values.iter().filter(|&&x| x != 0.0).count());

        let r = reps.len();
        let all_bins: Vec<Vec<u32>> = reps
            .iter()
            .chain(&candidates)
            .map(|c| c.bins.clone())
            .collect();
        let gamma = cfg.gamma();
        let fg = FeatureGraph::from_bins(&all_bins, gamma, |i, j| i < r && j < r);
        let layer_of: Vec<usize> = reps.iter().chain(&candidates).map(|c| c.layer).collect();
        let is_rep: Vec<bool> = (0..all_bins.len()).map(|i| i < r).collect();
        let keep = prune(&fg, gamma, &layer_of, &is_rep);

        let mut added = Vec::new();
        let mut taken: Vec<Option<Column>> = candidates.drain(..).map(Some).collect();
        for id in keep.into_iter().filter(|&i| i >= r) {
            added.push(reps.len());
            reps.push(taken[id - r].take().unwrap());
        }
        log::debug!("layer {layer}: gamma {gamma:.4}, {} new features", added.len());
        if layer > 0 && added.is_empty() {
            break;
        }
        frontier = added;
    }

    let defs = reps.iter().map(|c| c.def.clone()).collect();
    let layer_of = reps.iter().map(|c| c.layer).collect();
    let (cols, cuts): (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) = match cfg.representation {
        Representation::Values => (reps.into_iter().map(|c| c.values).collect(), None),
        Representation::Bins => {
            let cuts: Vec<Vec<f64>> = reps.iter().map(|c| bin_cuts(&c.values, &c.bins)).collect();
            let cols = reps.iter().map(|c| c.bins.iter().map(|&b| f64::from(b)).collect()).collect();
            (cols, Some(cuts))
        }
    };
    let mut x = FeatureMatrix::from_columns(x0.rows(), &cols, defs, layer_of, x0.entity, layers);
    x.cuts = cuts;
    Ok(x)
}

/// Combination of the two endpoint values used to lift node features to edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairOp {
    Sum,
    Mean,
    Max,
    Min,
    Product,
    AbsDiff,
}

impl std::str::FromStr for PairOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sum" => PairOp::Sum,
            "mean" => PairOp::Mean,
            "max" => PairOp::Max,
            "min" => PairOp::Min,
            "product" => PairOp::Product,
            "absdiff" => PairOp::AbsDiff,
            _ => return Err(Error::Config(format!("unknown pair operator `{s}`"))),
        })
    }
}

/// Edge features from an `n × f` node feature matrix: the row for edge
/// `(i, j)` is `op(z_i, z_j)` column-wise.
pub fn node_to_edge_features(z: &Array2<f64>, g: &Graph, op: PairOp) -> Result<Array2<f64>> {
    if z.nrows() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: z.nrows(),
        });
    }
    let f = z.ncols();
    let mut out = Array2::zeros((g.m(), f));
    for (e, mut row) in out.rows_mut().into_iter().enumerate() {
        let (i, j) = g.edge(e);
        for c in 0..f {
            let (a, b) = (z[[i, c]], z[[j, c]]);
            row[c] = match op {
                PairOp::Sum => a + b,
                PairOp::Mean => 0.5 * (a + b),
                PairOp::Max => a.max(b),
                PairOp::Min => a.min(b),
                PairOp::Product => a * b,
                PairOp::AbsDiff => (a - b).abs(),
            };
        }
    }
    Ok(out)
}
