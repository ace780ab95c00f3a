//! Non-negative factorization `X ≈ U Vᵀ` under Frobenius, KL and
//! Itakura-Saito divergences by scalar block coordinate descent.
//!
//! Each block is a single entry of `U` or `V`. For column `k` the target is
//! the k-residual `X - U Vᵀ + u_k v_kᵀ`; the Frobenius update is the exact
//! least-squares minimizer, while the KL and IS updates are the weighted
//! least-squares rules with weights `1/x'` and `1/x'²` re-evaluated until the
//! scalar subproblem is stationary. Every accepted step is checked to not
//! increase the objective, so the loss trace is monotone.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Divergence {
    Fro,
    Kl,
    Is,
}

impl Divergence {
    pub const ALL: [Divergence; 3] = [Divergence::Fro, Divergence::Kl, Divergence::Is];

    pub fn name(self) -> &'static str {
        match self {
            Divergence::Fro => "fro",
            Divergence::Kl => "kl",
            Divergence::Is => "is",
        }
    }

    /// `D(x ‖ x')` for one entry. Callers guarantee the domain.
    pub fn term(self, x: f64, xp: f64) -> f64 {
        match self {
            Divergence::Fro => 0.5 * (x - xp) * (x - xp),
            Divergence::Kl => {
                if x == 0.0 {
                    xp
                } else {
                    x * (x / xp).ln() - x + xp
                }
            }
            Divergence::Is => {
                let q = x / xp;
                q - q.ln() - 1.0
            }
        }
    }

    /// Entry term with the positivity floors applied to `x'` (and, for IS,
    /// to `x`).
    pub fn floored_term(self, x: f64, xp: f64, eps: f64) -> f64 {
        match self {
            Divergence::Fro => self.term(x, xp),
            Divergence::Kl => self.term(x, xp.max(eps)),
            Divergence::Is => self.term(x.max(eps), xp.max(eps)),
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fro" | "frobenius" => Ok(Divergence::Fro),
            "kl" => Ok(Divergence::Kl),
            "is" | "itakura-saito" => Ok(Divergence::Is),
            _ => Err(Error::Config(format!("unknown divergence `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_sweeps: usize,
    /// Stop once the relative objective change of a sweep falls below this.
    pub rel_tol: f64,
    pub seed: u64,
    /// Positivity floor on `x'` for KL and IS.
    pub eps_div: f64,
    pub lambda_u: f64,
    pub lambda_v: f64,
    /// Cap on fixed-point iterations per scalar KL/IS subproblem.
    pub inner_iters: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            rel_tol: 1e-6,
            seed: 0,
            eps_div: 1e-10,
            lambda_u: 0.0,
            lambda_v: 0.0,
            inner_iters: 50,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eps_div > 0.0) {
            return Err(Error::Config("eps_div must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        if self.lambda_u < 0.0 || self.lambda_v < 0.0 {
            return Err(Error::Config("regularization weights must be >= 0".into()));
        }
        Ok(())
    }
}

/// Fitted factors: `u` is entities × roles, `v` is features × roles.
#[derive(Clone, Debug)]
pub struct RoleModel {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub rank: usize,
    pub divergence: Divergence,
    /// Objective after initialization (index 0) and after every sweep.
    pub loss_trace: Vec<f64>,
}

impl RoleModel {
    pub fn reconstruct(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().unwrap_or(&f64::NAN)
    }

    pub fn sweeps(&self) -> usize {
        self.loss_trace.len().saturating_sub(1)
    }
}

fn check_nonnegative(x: &Array2<f64>) -> Result<()> {
    match x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(v) => Err(Error::Domain(format!("matrix entry {v} is not a finite non-negative value"))),
        None => Ok(()),
    }
}

/// `Σ_ij D(x_ij ‖ (UVᵀ)_ij)` without floors; KL and IS reject
/// approximations that are not strictly positive where they are needed.
pub fn bregman_loss(x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, div: Divergence) -> Result<f64> {
    check_factor_shapes(x, u, v)?;
    check_nonnegative(x)?;
    let xp = u.dot(&v.t());
    let mut total = 0.0;
    for (&a, &b) in x.iter().zip(&xp) {
        match div {
            Divergence::Fro => {}
            Divergence::Kl if a == 0.0 => {
                if b < 0.0 {
                    return Err(Error::Domain("KL needs a non-negative approximation".into()));
                }
            }
            Divergence::Kl => {
                if b <= 0.0 {
                    return Err(Error::Domain("KL needs x' > 0 where x > 0".into()));
                }
            }
            Divergence::Is => {
                if a <= 0.0 || b <= 0.0 {
                    return Err(Error::Domain("IS needs x > 0 and x' > 0".into()));
                }
            }
        }
        total += div.term(a, b);
    }
    Ok(total)
}

/// Loss with the positivity floors used by the solver.
pub fn floored_loss(x: &Array2<f64>, approx: &Array2<f64>, div: Divergence, eps: f64) -> f64 {
    Zip::from(x)
        .and(approx)
        .par_fold(|| 0.0, |acc, &a, &b| acc + div.floored_term(a, b, eps), |a, b| a + b)
}

fn check_factor_shapes(x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>) -> Result<()> {
    if u.nrows() != x.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            got: u.nrows(),
        });
    }
    if v.nrows() != x.ncols() {
        return Err(Error::Dimension {
            expected: x.ncols(),
            got: v.nrows(),
        });
    }
    if u.ncols() != v.ncols() {
        return Err(Error::Dimension {
            expected: u.ncols(),
            got: v.ncols(),
        });
    }
    Ok(())
}

/// The k-residual `X - UVᵀ + u_k v_kᵀ` (zero-based `k`), materialized.
pub fn residual(x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    check_factor_shapes(x, u, v)?;
    if k >= u.ncols() {
        return Err(Error::Index {
            index: k,
            len: u.ncols(),
        });
    }
    let mut r = x - &u.dot(&v.t());
    let (uk, vk) = (u.column(k), v.column(k));
    for ((i, j), e) in r.indexed_iter_mut() {
        *e += uk[i] * vk[j];
    }
    Ok(r)
}

/// One evaluation of the closed-form rule for a single entry:
/// `Σ target·coef·w / (Σ coef²·w + λ)` clamped to `≥ 0`, with `w = 1`,
/// `1/x'` or `1/x'²`. `approx` holds the current `x'` entries, floored at
/// `eps` for KL and IS. A zero denominator yields 0.
pub fn table_update(
    div: Divergence,
    target: ArrayView1<'_, f64>,
    coef: ArrayView1<'_, f64>,
    approx: ArrayView1<'_, f64>,
    lambda: f64,
    eps: f64,
) -> f64 {
    let mut num = 0.0;
    let mut den = lambda;
    for ((&t, &a), &xp) in target.iter().zip(coef).zip(approx) {
        let w = match div {
            Divergence::Fro => 1.0,
            Divergence::Kl => 1.0 / xp.max(eps),
            Divergence::Is => {
                let q = xp.max(eps);
                1.0 / (q * q)
            }
        };
        num += t * a * w;
        den += a * a * w;
    }
    if den > 0.0 && num > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Scalar subproblem for one factor entry `s`: data `x_j`, the other
/// components' contribution `c_j`, and the coefficient `a_j` multiplying
/// `s`, so that `x'_j = c_j + a_j s`.
struct Scalar<'a> {
    div: Divergence,
    x: ArrayView1<'a, f64>,
    c: &'a [f64],
    a: ArrayView1<'a, f64>,
    lambda: f64,
    eps: f64,
}

impl Scalar<'_> {
    fn objective(&self, s: f64) -> f64 {
        let mut total = 0.5 * self.lambda * s * s;
        for ((&x, &c), &a) in self.x.iter().zip(self.c).zip(self.a) {
            total += self.div.floored_term(x, c + a * s, self.eps);
        }
        total
    }

    fn rule(&self, s: f64) -> f64 {
        let mut num = 0.0;
        let mut den = self.lambda;
        for ((&x, &c), &a) in self.x.iter().zip(self.c).zip(self.a) {
            let xp = (c + a * s).max(self.eps);
            let w = match self.div {
                Divergence::Fro => 1.0,
                Divergence::Kl => 1.0 / xp,
                Divergence::Is => 1.0 / (xp * xp),
            };
            num += (x - c) * a * w;
            den += a * a * w;
        }
        if den > 0.0 && num > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Newton target for the floored objective, if the curvature is positive.
    fn newton(&self, s: f64) -> Option<f64> {
        let mut g = self.lambda * s;
        let mut h = self.lambda;
        for ((&x, &c), &a) in self.x.iter().zip(self.c).zip(self.a) {
            let xp = c + a * s;
            if xp <= self.eps {
                continue;
            }
            let (d1, d2) = match self.div {
                Divergence::Fro => (xp - x, 1.0),
                Divergence::Kl => (1.0 - x / xp, x / (xp * xp)),
                Divergence::Is => {
                    let x = x.max(self.eps);
                    ((xp - x) / (xp * xp), (2.0 * x - xp) / (xp * xp * xp))
                }
            };
            g += a * d1;
            h += a * a * d2;
        }
        (h > 0.0 && g.is_finite() && h.is_finite()).then(|| (s - g / h).max(0.0))
    }

    fn solve(&self, start: f64, iters: usize) -> f64 {
        if self.div == Divergence::Fro {
            let mut num = 0.0;
            let mut den = self.lambda;
            for ((&x, &c), &a) in self.x.iter().zip(self.c).zip(self.a) {
                num += (x - c) * a;
                den += a * a;
            }
            return if den > 0.0 && num > 0.0 { num / den } else { 0.0 };
        }
        let mut s = start;
        let mut gs = self.objective(s);
        for _ in 0..iters {
            if let Some(cand) = self.newton(s) {
                let gc = self.objective(cand);
                if gc <= gs {
                    let step = (cand - s).abs();
                    s = cand;
                    gs = gc;
                    // quadratic convergence: the next step would be below 1e-15
                    if step <= 1e-8 * s.abs() || step == 0.0 {
                        break;
                    }
                    continue;
                }
            }
            let target = self.rule(s);
            if !target.is_finite() {
                break;
            }
            let mut cand = target;
            let mut gc = self.objective(cand);
            let mut halvings = 0;
            while !(gc <= gs) && halvings < 40 {
                cand = s + 0.5 * (cand - s);
                gc = self.objective(cand);
                halvings += 1;
            }
            if !(gc <= gs) {
                break;
            }
            let step = (cand - s).abs();
            s = cand;
            gs = gc;
            if step <= 1e-13 * s.abs() || step == 0.0 {
                break;
            }
        }
        s
    }
}

/// Minimizes the scalar subproblem for entry `(row, k)` of a factor, given
/// data `x`, current approximation `approx` and the other factor's column
/// `coef`. Starts from `current`.
pub fn update_scalar(
    div: Divergence,
    x: ArrayView1<'_, f64>,
    approx: ArrayView1<'_, f64>,
    coef: ArrayView1<'_, f64>,
    current: f64,
    lambda: f64,
    cfg: &FitConfig,
) -> f64 {
    let c: Vec<f64> = approx
        .iter()
        .zip(coef)
        .map(|(&xp, &a)| (xp - a * current).max(0.0))
        .collect();
    Scalar {
        div,
        x,
        c: &c,
        a: coef,
        lambda,
        eps: cfg.eps_div,
    }
    .solve(current, cfg.inner_iters)
}

fn init_factors(x: &Array2<f64>, rank: usize, cfg: &FitConfig) -> (Array2<f64>, Array2<f64>) {
    let (m, f) = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = || 1.0 - rng.random::<f64>();
    let mut u = Array2::from_shape_simple_fn((m, rank), &mut draw);
    let mut v = Array2::from_shape_simple_fn((f, rank), &mut draw);
    let target = x.mean().unwrap_or(0.0);
    let current = mean_product(&u, &v);
    if current > 0.0 {
        u *= target / current;
    }
    for (i, row) in x.axis_iter(Axis(0)).enumerate() {
        if row.iter().all(|&e| e == 0.0) {
            u.row_mut(i).fill(cfg.eps_div);
        }
    }
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        if col.iter().all(|&e| e == 0.0) {
            v.row_mut(j).fill(cfg.eps_div);
        }
    }
    (u, v)
}

fn mean_product(u: &Array2<f64>, v: &Array2<f64>) -> f64 {
    let (m, f) = (u.nrows(), v.nrows());
    if m == 0 || f == 0 {
        return 0.0;
    }
    let su = u.sum_axis(Axis(0));
    let sv = v.sum_axis(Axis(0));
    su.dot(&sv) / (m * f) as f64
}

fn objective(x: &Array2<f64>, approx: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, div: Divergence, cfg: &FitConfig) -> f64 {
    let mut total = floored_loss(x, approx, div, cfg.eps_div);
    if cfg.lambda_u > 0.0 {
        total += 0.5 * cfg.lambda_u * u.iter().map(|a| a * a).sum::<f64>();
    }
    if cfg.lambda_v > 0.0 {
        total += 0.5 * cfg.lambda_v * v.iter().map(|a| a * a).sum::<f64>();
    }
    total
}

/// Updates column `k` of `u` (rows of `x`) in place, keeping `approx` in sync.
fn update_side(
    x: &Array2<f64>,
    approx: &mut Array2<f64>,
    u: &mut Array2<f64>,
    v: &Array2<f64>,
    k: usize,
    div: Divergence,
    lambda: f64,
    frozen_rows: Option<&[bool]>,
    cfg: &FitConfig,
) {
    let coef = v.column(k);
    let old: Vec<f64> = u.column(k).to_vec();
    let new: Vec<f64> = (0..x.nrows())
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            if frozen_rows.is_some_and(|z| z[i]) {
                return old[i];
            }
            update_scalar(div, x.row(i), approx.row(i), coef, old[i], lambda, cfg)
        })
        .collect();
    approx
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let d = new[i] - old[i];
            if d != 0.0 {
                row.scaled_add(d, &coef);
            }
        });
    u.column_mut(k).iter_mut().zip(&new).for_each(|(e, &n)| *e = n);
}

fn converged(prev: f64, cur: f64, tol: f64) -> bool {
    cur == 0.0 || (prev - cur).abs() <= tol * prev.abs().max(f64::MIN_POSITIVE)
}

/// Fits `rank` roles to `x`.
pub fn fit(x: &Array2<f64>, rank: usize, div: Divergence, cfg: &FitConfig) -> Result<RoleModel> {
    cfg.validate()?;
    check_nonnegative(x)?;
    let (m, f) = x.dim();
    if rank == 0 || rank > m.min(f) {
        return Err(Error::Precondition(format!(
            "rank {rank} must lie in 1..={}",
            m.min(f)
        )));
    }
    let (mut u, mut v) = init_factors(x, rank, cfg);
    let xt = x.t().to_owned();
    let mut approx = u.dot(&v.t());
    let mut trace = vec![objective(x, &approx, &u, &v, div, cfg)];
    for _ in 0..cfg.max_sweeps {
        for k in 0..rank {
            update_side(x, &mut approx, &mut u, &v, k, div, cfg.lambda_u, None, cfg);
            let mut approx_t = approx.t().to_owned();
            update_side(&xt, &mut approx_t, &mut v, &u, k, div, cfg.lambda_v, None, cfg);
            approx = approx_t.t().to_owned();
        }
        approx = u.dot(&v.t());
        let loss = objective(x, &approx, &u, &v, div, cfg);
        let prev = *trace.last().unwrap();
        trace.push(loss);
        if converged(prev, loss, cfg.rel_tol) {
            break;
        }
    }
    Ok(RoleModel {
        u,
        v,
        rank,
        divergence: div,
        loss_trace: trace,
    })
}

/// Estimates memberships of new rows against fixed role definitions `v`.
/// All-zero rows of `x_new` get all-zero memberships.
pub fn infer_memberships(x_new: &Array2<f64>, v: &Array2<f64>, div: Divergence, cfg: &FitConfig) -> Result<Array2<f64>> {
    infer_with_loss(x_new, v, div, cfg).map(|(u, _)| u)
}

/// Like [`infer_memberships`], also returning the final objective.
pub fn infer_with_loss(
    x_new: &Array2<f64>,
    v: &Array2<f64>,
    div: Divergence,
    cfg: &FitConfig,
) -> Result<(Array2<f64>, f64)> {
    cfg.validate()?;
    check_nonnegative(x_new)?;
    if x_new.ncols() != v.nrows() {
        return Err(Error::Dimension {
            expected: v.nrows(),
            got: x_new.ncols(),
        });
    }
    let (m, rank) = (x_new.nrows(), v.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut u = Array2::from_shape_simple_fn((m, rank), || 1.0 - rng.random::<f64>());
    let current = mean_product(&u, v);
    if current > 0.0 {
        u *= x_new.mean().unwrap_or(0.0) / current;
    }
    let zero_rows: Vec<bool> = x_new
        .axis_iter(Axis(0))
        .map(|r| r.iter().all(|&e| e == 0.0))
        .collect();
    for (i, &z) in zero_rows.iter().enumerate() {
        if z {
            u.row_mut(i).fill(0.0);
        }
    }
    let mut approx = u.dot(&v.t());
    let mut prev = objective(x_new, &approx, &u, v, div, cfg);
    for _ in 0..cfg.max_sweeps {
        for k in 0..rank {
            update_side(x_new, &mut approx, &mut u, v, k, div, cfg.lambda_u, Some(&zero_rows), cfg);
        }
        approx = u.dot(&v.t());
        let loss = objective(x_new, &approx, &u, v, div, cfg);
        let done = converged(prev, loss, cfg.rel_tol);
        prev = loss;
        if done {
            break;
        }
    }
    Ok((u, prev))
}

/// Per-row divergence of `x` from `u vᵀ`, with solver floors.
pub fn row_losses(x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, div: Divergence, eps: f64) -> Vec<f64> {
    let approx = u.dot(&v.t());
    x.axis_iter(Axis(0))
        .zip(approx.axis_iter(Axis(0)))
        .map(|(a, b)| a.iter().zip(b).map(|(&p, &q)| div.floored_term(p, q, eps)).sum())
        .collect()
}
