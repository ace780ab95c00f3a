//! Rank selection by description length.
//!
//! The cost of a rank-`r` model is the number of bits needed for the
//! factors (quantized values, their positions and the codebook) plus the
//! bits needed to correct the reconstruction back to the data.

mod huffman;
mod quantize;

use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::{fit, floored_loss, Divergence, FitConfig, RoleModel};

pub use huffman::{huffman_bits, sequence_bits, CodeLength};
pub use quantize::{lloyd_max, Quantizer};

/// Bits stored per codebook centroid.
pub const CENTROID_BITS: f64 = 64.0;

/// `⌈log₂ n⌉`, with 0 for `n ≤ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
pub struct ModelBits {
    pub value_bits: f64,
    pub index_bits: f64,
    pub codebook_bits: f64,
    /// Mean code length per stored value.
    pub mean_value_bits: f64,
}

impl ModelBits {
    pub fn total(&self) -> f64 {
        self.value_bits + self.index_bits + self.codebook_bits
    }
}

/// Description cost of the factor pair. Nonzeros of `u` and `v` share one
/// Lloyd-Max quantizer with `⌈log₂ m⌉` levels (`m` = rows of `u`) whose
/// symbols are Huffman coded; every nonzero also pays for its row and
/// column index.
pub fn model_bits(u: &Array2<f64>, v: &Array2<f64>) -> Result<ModelBits> {
    if u.ncols() != v.ncols() {
        return Err(Error::Dimension {
            expected: u.ncols(),
            got: v.ncols(),
        });
    }
    let (m, f, r) = (u.nrows(), v.nrows(), u.ncols());
    let values: Vec<f64> = u.iter().chain(v.iter()).copied().filter(|&x| x != 0.0).collect();
    let nnz_u = u.iter().filter(|&&x| x != 0.0).count();
    let nnz_v = values.len() - nnz_u;
    let index_bits = nnz_u as f64 * f64::from(ceil_log2(m) + ceil_log2(r))
        + nnz_v as f64 * f64::from(ceil_log2(f) + ceil_log2(r));
    if values.is_empty() {
        return Ok(ModelBits {
            index_bits,
            ..Default::default()
        });
    }
    let levels = (ceil_log2(m) as usize).max(1);
    let q = lloyd_max(&values, levels)?;
    let code = huffman_bits(&q.counts)?;
    Ok(ModelBits {
        value_bits: code.total_bits as f64,
        index_bits,
        codebook_bits: CENTROID_BITS * q.levels() as f64,
        mean_value_bits: code.mean_bits(),
    })
}

/// Bits for a residual quantized on a uniform grid of step `step`, taking
/// the cheaper of a dense code over every entry and a sparse code that
/// lists nonzero symbols with their positions.
pub fn residual_bits(residual: &Array2<f64>, step: f64) -> f64 {
    let (m, f) = residual.dim();
    if m * f == 0 {
        return 0.0;
    }
    let symbols: Vec<i64> = residual.iter().map(|&e| (e / step).round() as i64).collect();
    let dense = sequence_bits(symbols.iter().copied()) as f64;
    let nonzero: Vec<i64> = symbols.iter().copied().filter(|&s| s != 0).collect();
    let sparse = nonzero.len() as f64 * f64::from(ceil_log2(m) + ceil_log2(f)) + sequence_bits(nonzero) as f64;
    dense.min(sparse)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdlConfig {
    pub fit: FitConfig,
    /// Frobenius residual grid step as a fraction of `max |X|`.
    pub resolution: f64,
}

impl Default for MdlConfig {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            resolution: 1e-4,
        }
    }
}

impl MdlConfig {
    fn step(&self, x: &Array2<f64>) -> f64 {
        let scale = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if scale > 0.0 {
            self.resolution * scale
        } else {
            self.resolution
        }
    }
}

/// Bits for describing `x` given the model. KL and IS charge the floored
/// divergence in bits; Frobenius codes the quantized residual.
pub fn error_bits(x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, div: Divergence, cfg: &MdlConfig) -> Result<f64> {
    if u.nrows() != x.nrows() || v.nrows() != x.ncols() || u.ncols() != v.ncols() {
        return Err(Error::Dimension {
            expected: x.nrows() * x.ncols(),
            got: u.nrows() * v.nrows(),
        });
    }
    if let Some(e) = x.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::Domain(format!("matrix entry {e} is not a finite non-negative value")));
    }
    let approx = u.dot(&v.t());
    match div {
        Divergence::Fro => Ok(residual_bits(&(x - &approx), cfg.step(x))),
        Divergence::Kl | Divergence::Is => {
            Ok(floored_loss(x, &approx, div, cfg.fit.eps_div) / std::f64::consts::LN_2)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RankRecord {
    pub rank: usize,
    pub model_bits: f64,
    pub error_bits: f64,
    pub total_bits: f64,
    pub fit_seconds: f64,
    pub final_loss: f64,
}

#[derive(Clone, Debug)]
pub struct MdlReport {
    pub records: Vec<RankRecord>,
    pub best: usize,
    models: Vec<RoleModel>,
}

impl MdlReport {
    pub fn best_record(&self) -> &RankRecord {
        self.records.iter().find(|r| r.rank == self.best).expect("best rank present")
    }

    pub fn best_model(&self) -> &RoleModel {
        self.model(self.best).expect("best rank present")
    }

    pub fn model(&self, rank: usize) -> Option<&RoleModel> {
        self.models.iter().find(|m| m.rank == rank)
    }

    pub fn into_best_model(self) -> RoleModel {
        let best = self.best;
        self.models.into_iter().find(|m| m.rank == best).expect("best rank present")
    }
}

/// Fits every rank in `r_min..=r_max` with the same seed and returns the
/// cost curve. The chosen rank minimizes the total; ties go to the smaller.
pub fn select_rank(x: &Array2<f64>, r_min: usize, r_max: usize, div: Divergence, cfg: &MdlConfig) -> Result<MdlReport> {
    let limit = x.nrows().min(x.ncols());
    if r_min == 0 || r_min > r_max || r_max > limit {
        return Err(Error::Precondition(format!(
            "rank range {r_min}..={r_max} must satisfy 1 <= r_min <= r_max <= {limit}"
        )));
    }
    let fitted: Vec<(RankRecord, RoleModel)> = (r_min..=r_max)
        .into_par_iter()
        .map(|rank| {
            let start = Instant::now();
            let model = fit(x, rank, div, &cfg.fit)?;
            let fit_seconds = start.elapsed().as_secs_f64();
            let mb = model_bits(&model.u, &model.v)?.total();
            let eb = error_bits(x, &model.u, &model.v, div, cfg)?;
            let record = RankRecord {
                rank,
                model_bits: mb,
                error_bits: eb,
                total_bits: mb + eb,
                fit_seconds,
                final_loss: model.final_loss(),
            };
            Ok((record, model))
        })
        .collect::<Result<_>>()?;
    let (records, models): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let best = records
        .iter()
        .fold(None::<&RankRecord>, |acc, r| match acc {
            Some(b) if b.total_bits <= r.total_bits => Some(b),
            _ => Some(r),
        })
        .map(|r| r.rank)
        .expect("non-empty rank range");
    log::info!("selected rank {best} from {r_min}..={r_max}");
    Ok(MdlReport { records, best, models })
}
