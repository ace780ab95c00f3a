//! Role dynamics over snapshot series.
//!
//! Feature and role definitions are learned once on a prefix of the
//! series and then held fixed; each snapshot only gets new memberships.

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::{fit, infer_with_loss, row_losses, Divergence};
use crate::featlearn::{base_features, learn_features, EntityKind, FeatureSet, LearnConfig};
use crate::graph::{snapshots, union_window, Graph, SnapshotSeries, VertexId};
use crate::mdl::{select_rank, MdlConfig};

/// Stable identity of an edge (endpoint pair) or a vertex across snapshots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKey {
    Edge(VertexId, VertexId),
    Node(VertexId),
}

impl std::fmt::Display for EntityKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntityKey::Edge(u, v) => write!(f, "{u}-{v}"),
            EntityKey::Node(v) => write!(f, "{v}"),
        }
    }
}

fn entity_keys(g: &Graph, kind: EntityKind) -> Vec<EntityKey> {
    match kind {
        EntityKind::Edge => g
            .edges()
            .iter()
            .map(|&(u, v)| EntityKey::Edge(u.min(v), u.max(v)))
            .collect(),
        EntityKind::Node => (0..g.n()).map(EntityKey::Node).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicConfig {
    pub entity: EntityKind,
    pub learn: LearnConfig,
    pub mdl: MdlConfig,
    pub divergence: Divergence,
    /// Fixed rank; `None` selects it by description length.
    pub rank: Option<usize>,
    pub r_min: usize,
    pub r_max: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        Self {
            entity: EntityKind::Edge,
            learn: LearnConfig::default(),
            mdl: MdlConfig::default(),
            divergence: Divergence::Fro,
            rank: None,
            r_min: 1,
            r_max: 8,
        }
    }
}

/// Frozen feature and role definitions plus the training loss baseline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Definitions {
    pub features: FeatureSet,
    pub v: Array2<f64>,
    pub rank: usize,
    pub divergence: Divergence,
    pub train_k: usize,
    /// Mean over training snapshots of the per-entity reconstruction loss.
    pub baseline_loss: f64,
}

/// Memberships of the entities present in one snapshot.
#[derive(Clone, Debug)]
pub struct SnapshotRoles {
    /// Index into [`RoleSeries::entities`] for each row of `u`.
    pub rows: Vec<usize>,
    pub u: Array2<f64>,
    pub row_loss: Vec<f64>,
    /// Whether the entity had a nonzero feature row.
    pub active: Vec<bool>,
}

impl SnapshotRoles {
    /// Mean reconstruction loss over active entities, `None` if there are none.
    pub fn mean_loss(&self) -> Option<f64> {
        let (sum, n) = self
            .row_loss
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .fold((0.0, 0usize), |(s, n), (&l, _)| (s + l, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Rows normalized to sum to one; zero rows stay zero.
    pub fn normalized(&self) -> Array2<f64> {
        normalize_rows(&self.u)
    }
}

pub fn normalize_rows(u: &Array2<f64>) -> Array2<f64> {
    let mut out = u.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct RoleSeries {
    pub definitions: Definitions,
    pub entities: Vec<EntityKey>,
    pub snapshots: Vec<SnapshotRoles>,
}

impl RoleSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.definitions.rank
    }

    /// Flags snapshot `t` (zero-based) when its mean entity loss exceeds
    /// `factor` times the training baseline.
    pub fn check_drift(&self, t: usize, factor: f64) -> Result<bool> {
        let snap = self.snapshots.get(t).ok_or(Error::Index {
            index: t,
            len: self.snapshots.len(),
        })?;
        Ok(snap
            .mean_loss()
            .is_some_and(|l| l > factor * self.definitions.baseline_loss))
    }
}

fn materialize_or_zero(features: &FeatureSet, g: &Graph) -> Array2<f64> {
    match features.materialize(g) {
        Ok(x) => x.values,
        Err(e) => {
            log::warn!("feature evaluation failed, using zero rows: {e}");
            let rows = match features.entity {
                EntityKind::Edge => g.m(),
                EntityKind::Node => g.n(),
            };
            Array2::zeros((rows, features.len()))
        }
    }
}

fn infer_snapshot(
    g: &Graph,
    features: &FeatureSet,
    v: &Array2<f64>,
    div: Divergence,
    cfg: &MdlConfig,
) -> Result<(Vec<EntityKey>, SnapshotRoles)> {
    let x = materialize_or_zero(features, g);
    let keys = entity_keys(g, features.entity);
    let active: Vec<bool> = x.axis_iter(Axis(0)).map(|r| r.iter().any(|&e| e != 0.0)).collect();
    let (u, _) = infer_with_loss(&x, v, div, &cfg.fit)?;
    let row_loss = row_losses(&x, &u, v, div, cfg.fit.eps_div);
    let roles = SnapshotRoles {
        rows: Vec::new(),
        u,
        row_loss,
        active,
    };
    Ok((keys, roles))
}

/// Learns features and roles on the union of the first `k` snapshots.
pub fn train_definitions(s: &SnapshotSeries, k: usize, cfg: &DynamicConfig) -> Result<Definitions> {
    let union = union_window(s, k)?;
    let rows = match cfg.entity {
        EntityKind::Edge => union.m(),
        EntityKind::Node => (0..union.n()).filter(|&v| union.degree(v) > 0).count(),
    };
    if rows == 0 {
        return Err(Error::Precondition("training window contains no edges".into()));
    }
    let x0 = base_features(&union, cfg.entity)?;
    let learned = learn_features(&union, &x0, &cfg.learn)?;
    let features = learned.definitions();
    if features.is_empty() {
        return Err(Error::Precondition("training window yields no informative features".into()));
    }
    let x = &learned.values;
    let limit = x.nrows().min(x.ncols());
    let model = match cfg.rank {
        Some(r) => fit(x, r, cfg.divergence, &cfg.mdl.fit)?,
        None => {
            let hi = cfg.r_max.min(limit);
            let lo = cfg.r_min.min(hi).max(1);
            select_rank(x, lo, hi, cfg.divergence, &cfg.mdl)?.into_best_model()
        }
    };
    let mut defs = Definitions {
        features,
        v: model.v,
        rank: model.rank,
        divergence: cfg.divergence,
        train_k: k,
        baseline_loss: 0.0,
    };
    let losses: Vec<f64> = s.snapshots()[..k]
        .par_iter()
        .map(|g| infer_snapshot(g, &defs.features, &defs.v, defs.divergence, &cfg.mdl).map(|(_, r)| r.mean_loss()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    defs.baseline_loss = if losses.is_empty() {
        0.0
    } else {
        losses.iter().sum::<f64>() / losses.len() as f64
    };
    Ok(defs)
}

/// Infers memberships for every snapshot against frozen definitions.
pub fn infer_series(s: &SnapshotSeries, defs: &Definitions, cfg: &MdlConfig) -> Result<RoleSeries> {
    let per: Vec<(Vec<EntityKey>, SnapshotRoles)> = s
        .snapshots()
        .par_iter()
        .map(|g| infer_snapshot(g, &defs.features, &defs.v, defs.divergence, cfg))
        .collect::<Result<_>>()?;
    let mut index: BTreeMap<EntityKey, usize> = BTreeMap::new();
    for (keys, _) in &per {
        for &k in keys {
            index.entry(k).or_insert(0);
        }
    }
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }
    let entities: Vec<EntityKey> = index.keys().copied().collect();
    let snapshots = per
        .into_iter()
        .map(|(keys, mut roles)| {
            roles.rows = keys.iter().map(|k| index[k]).collect();
            roles
        })
        .collect();
    Ok(RoleSeries {
        definitions: defs.clone(),
        entities,
        snapshots,
    })
}

/// Natural-log entropy of a normalized membership row, `0·ln 0 = 0`.
pub fn entropy(row: &[f64]) -> f64 {
    row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>().max(0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyEntry {
    pub entity: usize,
    pub d: f64,
    pub argmax_t: usize,
    pub argmin_t: usize,
    /// Entropy per snapshot; `None` where the entity is inactive.
    pub trace: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EntropySeries {
    pub entries: Vec<EntropyEntry>,
}

/// Difference entropy `max_t H(u_t) - min_t H(u_t)` over the snapshots in
/// which an entity is active, sorted by descending `d`.
pub fn entropy_rank(rs: &RoleSeries) -> EntropySeries {
    let t_len = rs.snapshots.len();
    let mut traces: Vec<Vec<Option<f64>>> = vec![vec![None; t_len]; rs.entities.len()];
    for (t, snap) in rs.snapshots.iter().enumerate() {
        let norm = snap.normalized();
        for (row, &ent) in snap.rows.iter().enumerate() {
            let r = norm.row(row);
            if r.iter().any(|&p| p > 0.0) {
                traces[ent][t] = Some(entropy(r.as_slice().expect("standard layout")));
            }
        }
    }
    let mut entries: Vec<EntropyEntry> = traces
        .into_iter()
        .enumerate()
        .filter_map(|(entity, trace)| {
            let mut hi: Option<(usize, f64)> = None;
            let mut lo: Option<(usize, f64)> = None;
            for (t, h) in trace.iter().enumerate() {
                if let Some(h) = *h {
                    if hi.is_none_or(|(_, b)| h > b) {
                        hi = Some((t, h));
                    }
                    if lo.is_none_or(|(_, b)| h < b) {
                        lo = Some((t, h));
                    }
                }
            }
            let ((argmax_t, h_max), (argmin_t, h_min)) = (hi?, lo?);
            Some(EntropyEntry {
                entity,
                d: h_max - h_min,
                argmax_t,
                argmin_t,
                trace,
            })
        })
        .collect();
    entries.sort_by(|a, b| b.d.total_cmp(&a.d).then(a.entity.cmp(&b.entity)));
    EntropySeries { entries }
}

/// Most likely role per row, `None` for all-zero rows. Ties go to the
/// smallest role index.
pub fn assign_roles(u: &Array2<f64>) -> Vec<Option<usize>> {
    u.axis_iter(Axis(0))
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (k, &x) in row.iter().enumerate() {
                if x > 0.0 && best.is_none_or(|(_, b)| x > b) {
                    best = Some((k, x));
                }
            }
            best.map(|(k, _)| k)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TimescaleScore {
    pub width: u64,
    pub snapshots: usize,
    /// Mean held-out loss, `None` if the width was skipped.
    pub heldout_loss: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimescaleReport {
    pub chosen: u64,
    pub scores: Vec<TimescaleScore>,
}

/// Picks the snapshot width whose frozen definitions, learned on the first
/// half of the snapshots, best reconstruct the second half. Widths giving
/// fewer than two snapshots are skipped; near-ties go to the larger width.
pub fn learn_timescale(g: &Graph, widths: &[u64], cfg: &DynamicConfig) -> Result<TimescaleReport> {
    let ts = g
        .timestamps()
        .ok_or_else(|| Error::Precondition("time scale learning needs timestamps".into()))?;
    let start = ts.first().copied().unwrap_or(0);
    let mut scores = Vec::with_capacity(widths.len());
    for &w in widths {
        let s = snapshots(g, w, start)?;
        let t = s.len();
        let heldout_loss = if t < 2 {
            None
        } else {
            score_width(&s, cfg)?
        };
        scores.push(TimescaleScore {
            width: w,
            snapshots: t,
            heldout_loss,
        });
    }
    let mut best: Option<(u64, f64)> = None;
    for s in &scores {
        if let Some(l) = s.heldout_loss {
            let better = match best {
                None => true,
                Some((bw, bl)) => {
                    let tol = 1e-9 * bl.abs().max(l.abs());
                    l < bl - tol || ((l - bl).abs() <= tol && s.width > bw)
                }
            };
            if better {
                best = Some((s.width, l));
            }
        }
    }
    let (chosen, _) = best.ok_or_else(|| Error::Precondition("no candidate width yields two or more snapshots".into()))?;
    Ok(TimescaleReport { chosen, scores })
}

fn score_width(s: &SnapshotSeries, cfg: &DynamicConfig) -> Result<Option<f64>> {
    let k = s.len() / 2;
    let defs = match train_definitions(s, k, cfg) {
        Ok(d) => d,
        Err(Error::Precondition(msg)) => {
            log::warn!("width {} skipped: {msg}", s.width());
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let rs = infer_series(s, &defs, &cfg.mdl)?;
    let losses: Vec<f64> = rs.snapshots[k..].iter().filter_map(SnapshotRoles::mean_loss).collect();
    Ok((!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64))
}
