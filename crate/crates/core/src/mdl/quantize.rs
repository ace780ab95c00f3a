use crate::error::{Error, Result};

/// Scalar quantizer: cell `i` holds values in `(boundaries[i-1], boundaries[i]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantizer {
    pub boundaries: Vec<f64>,
    pub centroids: Vec<f64>,
    /// Number of training values per cell.
    pub counts: Vec<u64>,
    /// Mean squared error on the training values.
    pub distortion: f64,
    /// Mean squared error of the quantile-initialized centroids.
    pub initial_distortion: f64,
    pub iterations: usize,
}

impl Quantizer {
    pub fn levels(&self) -> usize {
        self.centroids.len()
    }

    pub fn symbol(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&t| t < x)
    }

    pub fn reconstruct(&self, x: f64) -> f64 {
        self.centroids[self.symbol(x)]
    }
}

/// Prefix sums over sorted values for O(1) cell statistics.
struct Prefix {
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Prefix {
    fn new(sorted: &[f64]) -> Self {
        let mut sum = Vec::with_capacity(sorted.len() + 1);
        let mut sq = Vec::with_capacity(sorted.len() + 1);
        let (mut s, mut q) = (0.0, 0.0);
        sum.push(0.0);
        sq.push(0.0);
        for &v in sorted {
            s += v;
            q += v * v;
            sum.push(s);
            sq.push(q);
        }
        Self { sum, sq }
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        (self.sum[b] - self.sum[a]) / (b - a) as f64
    }

    /// Squared error of cell `[a, b)` around `c`.
    fn sse(&self, a: usize, b: usize, c: f64) -> f64 {
        let n = (b - a) as f64;
        let s = self.sum[b] - self.sum[a];
        let q = self.sq[b] - self.sq[a];
        (q - 2.0 * c * s + n * c * c).max(0.0)
    }
}

fn cuts_for(sorted: &[f64], centroids: &[f64]) -> Vec<usize> {
    let mut cuts = Vec::with_capacity(centroids.len() + 1);
    cuts.push(0);
    for w in centroids.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        cuts.push(sorted.partition_point(|&v| v <= t));
    }
    cuts.push(sorted.len());
    cuts
}

fn distortion(prefix: &Prefix, cuts: &[usize], centroids: &[f64], n: usize) -> f64 {
    let total: f64 = cuts
        .windows(2)
        .zip(centroids)
        .map(|(w, &c)| if w[1] > w[0] { prefix.sse(w[0], w[1], c) } else { 0.0 })
        .sum();
    total / n as f64
}

/// Lloyd-Max quantizer with at most `bins` levels, started from quantile
/// centroids and iterated until the cell assignment stops changing. Empty
/// cells are dropped, so fewer levels than requested may be returned.
pub fn lloyd_max(values: &[f64], bins: usize) -> Result<Quantizer> {
    if values.is_empty() {
        return Err(Error::Precondition("lloyd_max needs at least one value".into()));
    }
    if bins == 0 {
        return Err(Error::Precondition("lloyd_max needs at least one bin".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("cannot quantize non-finite value {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let prefix = Prefix::new(&sorted);

    let mut centroids: Vec<f64> = (0..bins)
        .map(|i| {
            let q = (i as f64 + 0.5) / bins as f64;
            sorted[((q * n as f64) as usize).min(n - 1)]
        })
        .collect();
    centroids.dedup();

    let mut cuts = cuts_for(&sorted, &centroids);
    let initial_distortion = distortion(&prefix, &cuts, &centroids, n);
    let mut iterations = 0;
    loop {
        iterations += 1;
        centroids = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| prefix.mean(w[0], w[1]))
            .collect();
        centroids.dedup();
        let next = cuts_for(&sorted, &centroids);
        if next == cuts || iterations >= 10_000 {
            cuts = next;
            break;
        }
        cuts = next;
    }
    // Drop cells that ended up empty and settle centroids on the final cells.
    let cells: Vec<(usize, usize)> = cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
    let centroids: Vec<f64> = cells.iter().map(|&(a, b)| prefix.mean(a, b)).collect();
    let boundaries: Vec<f64> = centroids.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let counts = cells.iter().map(|&(a, b)| (b - a) as u64).collect();
    let sse: f64 = cells
        .iter()
        .zip(&centroids)
        .map(|(&(a, b), &c)| prefix.sse(a, b, c))
        .sum();
    Ok(Quantizer {
        boundaries,
        centroids,
        counts,
        distortion: sse / n as f64,
        initial_distortion,
        iterations,
    })
}
