//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p edgeroles --test acceptance --release`. The
//! process fails if any criterion fails, except where the machine lacks
//! the hardware the criterion needs. Such a criterion still reports FAIL.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use edgeroles::dynamic::{
    entropy, entropy_rank, infer_series, train_definitions, Definitions, DynamicConfig, EntityKey, RoleSeries,
    SnapshotRoles,
};
use edgeroles::factorize::{
    bregman_loss, fit, residual, table_update, update_scalar, Divergence, FitConfig, RoleModel,
};
use edgeroles::featlearn::{
    base_features, bin_count, disagreement, learn_features, log_bin, EntityKind, FeatureSet, LearnConfig,
    Representation,
};
use edgeroles::gen::{self, TwoRegime};
use edgeroles::graph::{load_edgelist, snapshots, LoadOptions};
use edgeroles::graphlets::graphlets;
use edgeroles::mdl::{huffman_bits, lloyd_max, select_rank, MdlConfig};
use edgeroles::Graph;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

// C1
const ORACLE_GRAPHS: u64 = 200;
const ORACLE_MAX_N: usize = 8;
const ORACLE_SECONDS: f64 = 10.0;
// C2
const DESCENT_MATRICES: u64 = 50;
const DESCENT_SLACK: f64 = 1e-9;
const DESCENT_SECONDS: f64 = 60.0;
// C3
const FRO_EXACT_LOSS: f64 = 1e-10;
const FRO_EXACT_SWEEPS: usize = 50;
const KL_IS_REL_ERROR: f64 = 1e-5;
const EXACT_SECONDS: f64 = 5.0;
// C4
const RULE_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-5;
// C5
const VALLEY_TRIALS: u64 = 20;
const VALLEY_MIN_HITS: usize = 18;
const VALLEY_SECONDS: f64 = 120.0;
// C6
const HUFFMAN_TABLES: u64 = 100;
const HUFFMAN_SECONDS: f64 = 1.0;
// C7
const LLOYD_TOL: f64 = 1e-9;
// C8
const ENTROPY_TOL: f64 = 1e-12;
// C9
const DRIFT_FACTOR: f64 = 2.0;
const DRIFT_SEEDS: u64 = 20;
const DRIFT_MIN_FLAGGED: f64 = 0.9;
const DRIFT_MAX_FALSE: f64 = 0.1;
const DRIFT_TRAIN_K: usize = 4;
// C10
const SCALING_RANGE: (f64, f64) = (1.6, 2.8);
const SCALING_TRIALS: u64 = 5;
// C11
const SPEEDUP_THREADS: usize = 4;
const SPEEDUP_MIN: f64 = 2.0;
const SPEEDUP_EDGES: usize = 100_000;
const PARALLEL_LOSS_TOL: f64 = 1e-6;
// C13
const DENSITY_MAX: f64 = 0.5;

struct Outcome {
    pass: bool,
    detail: String,
    /// Set when the host cannot run the criterion as stated.
    blocked: Option<String>,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            blocked: None,
        }
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> Graph {
    load_edgelist(data(name), &LoadOptions::default()).expect("bundled data loads").simplify()
}

fn within(seconds: f64, limit: f64) -> bool {
    seconds < limit
}

fn c1_graphlet_oracle() -> Outcome {
    let start = Instant::now();
    let fixtures: Vec<Graph> = vec![
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], false).unwrap(),
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], false).unwrap(),
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)], false).unwrap(),
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], false).unwrap(),
        Graph::from_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)], false).unwrap(),
        Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], false).unwrap(),
        Graph::from_edges(8, &(1..8).map(|v| (0, v)).collect::<Vec<_>>(), false).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    for i in 0..ORACLE_GRAPHS {
        let n = rng.random_range(1..=ORACLE_MAX_N);
        let m = rng.random_range(0..=n * (n - 1) / 2);
        let g = gen::gnm(n, m, i);
        if let Err(e) = common::check(&g) {
            failures.push(format!("graph {i}: {e}"));
        }
    }
    for (i, g) in fixtures.iter().enumerate() {
        if let Err(e) = common::check(g) {
            failures.push(format!("fixture {i}: {e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        failures.is_empty() && within(secs, ORACLE_SECONDS),
        format!(
            "{} random graphs (n <= {ORACLE_MAX_N}) + {} fixtures, {} mismatches, {secs:.2}s (limit {ORACLE_SECONDS}s){}",
            ORACLE_GRAPHS,
            fixtures.len(),
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn c2_monotone_descent() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    let mut fits = 0;
    let mut violations = 0;
    for i in 0..DESCENT_MATRICES {
        let m = rng.random_range(5..=100);
        let f = rng.random_range(5..=40);
        let x = gen::uniform_matrix(m, f, 10.0, 100 + i);
        for div in Divergence::ALL {
            for rank in [1, 2, 5] {
                let cfg = FitConfig {
                    seed: i,
                    ..FitConfig::default()
                };
                let model = fit(&x, rank, div, &cfg).expect("fit succeeds");
                fits += 1;
                for w in model.loss_trace.windows(2) {
                    let rise = w[1] - w[0];
                    worst = worst.max(rise);
                    if rise > DESCENT_SLACK {
                        violations += 1;
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        violations == 0 && within(secs, DESCENT_SECONDS),
        format!(
            "{fits} fits, {violations} sweeps rose by more than {DESCENT_SLACK:e}, largest per-sweep change {worst:.3e}, {secs:.2}s (limit {DESCENT_SECONDS}s)"
        ),
    )
}

fn c3_exact_recovery() -> Outcome {
    let start = Instant::now();
    let a = Array1::from_iter((0..30).map(|i| 0.5 + (i % 7) as f64 * 0.3));
    let b = Array1::from_iter((0..12).map(|j| 1.0 + (j % 5) as f64 * 0.7));
    let x = Array2::from_shape_fn((30, 12), |(i, j)| a[i] * b[j]);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = |m: &RoleModel| {
        let r = m.reconstruct();
        (&x - &r).iter().map(|v| v * v).sum::<f64>().sqrt() / norm
    };
    let fro_cfg = FitConfig {
        max_sweeps: FRO_EXACT_SWEEPS,
        rel_tol: 1e-300,
        ..FitConfig::default()
    };
    let fro = fit(&x, 1, Divergence::Fro, &fro_cfg).unwrap();
    let mut detail = format!(
        "Fro loss {:.2e} after {} sweeps (limit {FRO_EXACT_LOSS:e})",
        fro.final_loss(),
        fro.sweeps()
    );
    let mut pass = fro.final_loss() <= FRO_EXACT_LOSS && fro.sweeps() <= FRO_EXACT_SWEEPS;
    for div in [Divergence::Kl, Divergence::Is] {
        let cfg = FitConfig {
            rel_tol: 1e-14,
            ..FitConfig::default()
        };
        let m = fit(&x, 1, div, &cfg).unwrap();
        let e = rel(&m);
        pass &= e <= KL_IS_REL_ERROR;
        detail.push_str(&format!(", {} rel. error {e:.2e}", div.name()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= within(secs, EXACT_SECONDS);
    detail.push_str(&format!(" (limit {KL_IS_REL_ERROR:e}), {secs:.2}s (limit {EXACT_SECONDS}s)"));
    Outcome::check(pass, detail)
}

/// The update rule written out term by term from the full factors.
fn symbolic_rule(div: Divergence, x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, j: usize, k: usize) -> f64 {
    let (m, r) = (x.nrows(), u.ncols());
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..m {
        let mut approx = 0.0;
        let mut others = 0.0;
        for h in 0..r {
            approx += u[[i, h]] * v[[j, h]];
            if h != k {
                others += u[[i, h]] * v[[j, h]];
            }
        }
        let resid = x[[i, j]] - others;
        let weight = match div {
            Divergence::Fro => 1.0,
            Divergence::Kl => 1.0 / approx,
            Divergence::Is => 1.0 / (approx * approx),
        };
        num += resid * u[[i, k]] * weight;
        den += u[[i, k]] * u[[i, k]] * weight;
    }
    (num / den).max(0.0)
}

fn c4_update_rules() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = FitConfig {
        inner_iters: 200,
        ..FitConfig::default()
    };
    let mut rule_err: f64 = 0.0;
    let mut grad_err: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..20 {
        let r = rng.random_range(1..=3);
        let x = Array2::from_shape_simple_fn((5, 4), || rng.random_range(0.5..3.0));
        let u = Array2::from_shape_simple_fn((5, r), || rng.random_range(0.2..1.5));
        let v = Array2::from_shape_simple_fn((4, r), || rng.random_range(0.2..1.5));
        let approx = u.dot(&v.t());
        for div in Divergence::ALL {
            for j in 0..4 {
                for k in 0..r {
                    let want = symbolic_rule(div, &x, &u, &v, j, k);
                    let resid = residual(&x, &u, &v, k).unwrap();
                    let got = table_update(div, resid.column(j), u.column(k), approx.column(j), 0.0, cfg.eps_div);
                    rule_err = rule_err.max((got - want).abs() / want.abs().max(1e-300));

                    let s = update_scalar(div, x.column(j), approx.column(j), u.column(k), v[[j, k]], 0.0, &cfg);
                    if s <= 1e-6 {
                        continue;
                    }
                    let mut vp = v.clone();
                    let h = 1e-6 * s;
                    vp[[j, k]] = s + h;
                    let up = bregman_loss(&x, &u, &vp, div).unwrap();
                    vp[[j, k]] = s - h;
                    let down = bregman_loss(&x, &u, &vp, div).unwrap();
                    let g = (up - down) / (2.0 * h);
                    vp[[j, k]] = s;
                    let fitted = u.dot(&vp.t());
                    let scale: f64 = (0..5)
                        .map(|i| {
                            let q = fitted[[i, j]];
                            let w = match div {
                                Divergence::Fro => 2.0,
                                Divergence::Kl => 1.0 / q,
                                Divergence::Is => 1.0 / (q * q),
                            };
                            (u[[i, k]] * w * x[[i, j]]).abs() + (u[[i, k]] * w * q).abs()
                        })
                        .sum();
                    grad_err = grad_err.max(g.abs() / scale);
                    checked += 1;
                }
            }
        }
    }
    Outcome::check(
        rule_err <= RULE_TOL && grad_err <= GRADIENT_TOL,
        format!(
            "rule vs term-by-term evaluation max rel. diff {rule_err:.2e} (limit {RULE_TOL:e}); \
             {checked} interior updates, max rel. finite-difference gradient {grad_err:.2e} (limit {GRADIENT_TOL:e})"
        ),
    )
}

fn c5_mdl_valley() -> Outcome {
    let start = Instant::now();
    let mut hits = 0;
    let mut picks = Vec::new();
    for seed in 0..VALLEY_TRIALS {
        let p = gen::planted_matrix(500, 40, 3, 0.01, seed);
        let cfg = MdlConfig {
            fit: FitConfig {
                seed,
                ..FitConfig::default()
            },
            ..MdlConfig::default()
        };
        let rep = select_rank(&p.x, 1, 8, Divergence::Fro, &cfg).unwrap();
        if (2..=4).contains(&rep.best) {
            hits += 1;
        }
        picks.push(rep.best);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        hits >= VALLEY_MIN_HITS && within(secs, VALLEY_SECONDS),
        format!(
            "selected rank in 2..=4 for {hits}/{VALLEY_TRIALS} trials (need {VALLEY_MIN_HITS}), picks {picks:?}, {secs:.1}s (limit {VALLEY_SECONDS}s)"
        ),
    )
}

fn c6_huffman_sandwich() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = 0;
    let mut max_gap: f64 = 0.0;
    for _ in 0..HUFFMAN_TABLES {
        let k = rng.random_range(2..64);
        let freqs: Vec<u64> = (0..k).map(|_| rng.random_range(1..10_000)).collect();
        let total = freqs.iter().sum::<u64>() as f64;
        let h: f64 = freqs.iter().map(|&c| c as f64 / total).map(|p| -p * p.log2()).sum();
        let l = huffman_bits(&freqs).unwrap().mean_bits();
        max_gap = max_gap.max(l - h);
        if !(h <= l + 1e-12 && l < h + 1.0) {
            bad += 1;
        }
    }
    let half = huffman_bits(&[2, 1, 1]).unwrap().mean_bits();
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        bad == 0 && half == 1.5 && within(secs, HUFFMAN_SECONDS),
        format!(
            "{HUFFMAN_TABLES} tables, {bad} outside [H, H+1), max L-H {max_gap:.3}; {{1/2,1/4,1/4}} mean {half}, {secs:.3}s (limit {HUFFMAN_SECONDS}s)"
        ),
    )
}

fn c7_lloyd_max() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(5.0, 2.0).unwrap();
    let exp = Exp::new(0.5).unwrap();
    let sets: Vec<(&str, Vec<f64>)> = vec![
        ("uniform", (0..2000).map(|_| rng.random_range(0.0..1.0)).collect()),
        ("gaussian", (0..2000).map(|_| normal.sample(&mut rng)).collect()),
        ("exponential", (0..2000).map(|_| exp.sample(&mut rng)).collect()),
        (
            "bimodal",
            (0..2000)
                .map(|i| if i % 3 == 0 { 10.0 + normal.sample(&mut rng) * 0.1 } else { rng.random_range(0.0..2.0) })
                .collect(),
        ),
        ("integers", (0..500).map(|i| f64::from(i % 13)).collect()),
    ];
    let mut centroid_err: f64 = 0.0;
    let mut midpoint_err: f64 = 0.0;
    let mut worse = 0;
    let mut runs = 0;
    for (_, values) in &sets {
        for bins in [2, 3, 5, 8, 16] {
            let q = lloyd_max(values, bins).unwrap();
            runs += 1;
            if q.distortion > q.initial_distortion {
                worse += 1;
            }
            let scale = values.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
            let mut sums = vec![0.0; q.levels()];
            let mut counts = vec![0usize; q.levels()];
            for &x in values {
                let s = q.symbol(x);
                sums[s] += x;
                counts[s] += 1;
            }
            for (c, (&s, &n)) in q.centroids.iter().zip(sums.iter().zip(&counts)) {
                if n > 0 {
                    centroid_err = centroid_err.max((c - s / n as f64).abs() / scale);
                }
            }
            for (i, &b) in q.boundaries.iter().enumerate() {
                let mid = 0.5 * (q.centroids[i] + q.centroids[i + 1]);
                midpoint_err = midpoint_err.max((b - mid).abs() / scale);
            }
        }
    }
    Outcome::check(
        centroid_err <= LLOYD_TOL && midpoint_err <= LLOYD_TOL && worse == 0,
        format!(
            "{runs} quantizers: centroid condition {centroid_err:.1e}, midpoint condition {midpoint_err:.1e} (limit {LLOYD_TOL:e}), {worse} worse than quantile start"
        ),
    )
}

fn series(memberships: Vec<Vec<Array2<f64>>>) -> RoleSeries {
    // memberships[t] is indexed by entity: one 1×r row each
    let r = memberships[0][0].ncols();
    let m = memberships[0].len();
    RoleSeries {
        definitions: Definitions {
            features: FeatureSet {
                entity: EntityKind::Node,
                defs: Vec::new(),
                layer_of: Vec::new(),
                cuts: None,
            },
            v: Array2::zeros((1, r)),
            rank: r,
            divergence: Divergence::Fro,
            train_k: 1,
            baseline_loss: 1.0,
        },
        entities: (0..m).map(EntityKey::Node).collect(),
        snapshots: memberships
            .into_iter()
            .map(|rows| {
                let mut u = Array2::zeros((m, r));
                for (i, row) in rows.iter().enumerate() {
                    u.row_mut(i).assign(&row.row(0));
                }
                let active = u.rows().into_iter().map(|row| row.iter().any(|&x| x > 0.0)).collect();
                SnapshotRoles {
                    rows: (0..m).collect(),
                    u,
                    row_loss: vec![0.0; m],
                    active,
                }
            })
            .collect(),
    }
}

fn c8_entropy_rank() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut out_of_bounds = 0;
    let mut scored = 0;
    for _ in 0..50 {
        let r = rng.random_range(2..=6);
        let t_len = rng.random_range(1..=8);
        let m = 12;
        let snaps: Vec<Vec<Array2<f64>>> = (0..t_len)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if rng.random::<f64>() < 0.2 {
                            Array2::zeros((1, r))
                        } else {
                            Array2::from_shape_simple_fn((1, r), || {
                                if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() * 5.0 }
                            })
                        }
                    })
                    .collect()
            })
            .collect();
        let rs = series(snaps);
        for e in entropy_rank(&rs).entries {
            scored += 1;
            if !(e.d >= 0.0 && e.d <= (r as f64).ln() + ENTROPY_TOL) {
                out_of_bounds += 1;
            }
        }
    }
    let r = 4;
    let constant = Array2::from_shape_vec((1, r), vec![0.5, 1.5, 0.0, 2.0]).unwrap();
    let pure = Array2::from_shape_vec((1, r), vec![0.0, 3.0, 0.0, 0.0]).unwrap();
    let uniform = Array2::from_elem((1, r), 0.7);
    let rs = series(vec![
        vec![constant.clone(), pure.clone()],
        vec![constant.clone() * 3.0, uniform.clone()],
        vec![constant, pure],
    ]);
    let ranked = entropy_rank(&rs).entries;
    let d_const = ranked.iter().find(|e| e.entity == 0).unwrap().d;
    let d_swing = ranked.iter().find(|e| e.entity == 1).unwrap().d;
    let ln_r = (r as f64).ln();
    let uniform_h = entropy(&[0.25; 4]);
    Outcome::check(
        out_of_bounds == 0 && d_const == 0.0 && (d_swing - ln_r).abs() <= ENTROPY_TOL && (uniform_h - ln_r).abs() <= ENTROPY_TOL,
        format!(
            "{scored} random entities, {out_of_bounds} outside [0, ln r]; constant d = {d_const}; pure-vs-uniform d = {d_swing:.15} vs ln {r} = {ln_r:.15} (tol {ENTROPY_TOL:e})"
        ),
    )
}

fn defs_bits(d: &Definitions) -> (Vec<u64>, String) {
    (
        d.v.iter().map(|x| x.to_bits()).collect(),
        serde_json::to_string(&d.features).unwrap(),
    )
}

fn c9_frozen_definitions() -> Outcome {
    let spec = TwoRegime::default();
    let cfg = DynamicConfig::default();
    let (mut flagged, mut regime2) = (0usize, 0usize);
    let (mut false_alarms, mut regime1) = (0usize, 0usize);
    let mut frozen = true;
    let mut per_seed = Vec::new();
    for seed in 0..DRIFT_SEEDS {
        let g = gen::two_regime_stream(&spec, seed);
        let s = snapshots(&g, spec.width, 0).unwrap();
        let defs = train_definitions(&s, DRIFT_TRAIN_K, &cfg).unwrap();
        let before = defs_bits(&defs);
        let rs = infer_series(&s, &defs, &cfg.mdl).unwrap();
        frozen &= defs_bits(&defs) == before && defs_bits(&rs.definitions) == before;
        let mut hits = 0;
        for t in DRIFT_TRAIN_K..rs.len() {
            let drift = rs.check_drift(t, DRIFT_FACTOR).unwrap();
            if t < spec.switch_at {
                regime1 += 1;
                false_alarms += usize::from(drift);
            } else {
                regime2 += 1;
                flagged += usize::from(drift);
                hits += usize::from(drift);
            }
        }
        for t in 0..DRIFT_TRAIN_K {
            regime1 += 1;
            false_alarms += usize::from(rs.check_drift(t, DRIFT_FACTOR).unwrap());
        }
        per_seed.push(hits);
    }
    let hit_rate = flagged as f64 / regime2 as f64;
    let false_rate = false_alarms as f64 / regime1 as f64;
    Outcome::check(
        frozen && hit_rate >= DRIFT_MIN_FLAGGED && false_rate <= DRIFT_MAX_FALSE,
        format!(
            "definitions bitwise unchanged: {frozen}; regime-2 flagged {flagged}/{regime2} = {:.1}% (need >= {:.0}%), \
             regime-1 flagged {false_alarms}/{regime1} = {:.1}% (need <= {:.0}%); per-seed regime-2 hits {per_seed:?}",
            100.0 * hit_rate,
            100.0 * DRIFT_MIN_FLAGGED,
            100.0 * false_rate,
            100.0 * DRIFT_MAX_FALSE
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn c10_linear_scaling() -> Outcome {
    let base_n = 5_000;
    let base_m = 25_000;
    let train = gen::gnm(base_n, base_m, 99);
    let x0 = base_features(&train, EntityKind::Edge).unwrap();
    let defs = learn_features(&train, &x0, &LearnConfig::default()).unwrap().definitions();
    let sweep_cfg = FitConfig {
        max_sweeps: 5,
        rel_tol: 1e-300,
        ..FitConfig::default()
    };
    let cost = |g: &Graph| {
        let t = Instant::now();
        let x = defs.materialize(g).unwrap();
        let materialize = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let model = fit(&x.values, 4, Divergence::Fro, &sweep_cfg).unwrap();
        materialize + t.elapsed().as_secs_f64() / model.sweeps().max(1) as f64
    };
    let mut ratios = Vec::new();
    for trial in 0..SCALING_TRIALS {
        let small = gen::gnm(base_n, base_m, 1000 + trial);
        let large = gen::gnm(2 * base_n, 2 * base_m, 2000 + trial);
        let a = cost(&small);
        let b = cost(&large);
        ratios.push(b / a);
    }
    let med = median(ratios.clone());
    Outcome::check(
        med >= SCALING_RANGE.0 && med <= SCALING_RANGE.1,
        format!(
            "m {base_m} -> {}: {} features, median time ratio {med:.2} over {SCALING_TRIALS} trials (need [{}, {}]), ratios {:?}",
            2 * base_m,
            defs.len(),
            SCALING_RANGE.0,
            SCALING_RANGE.1,
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn c11_parallel_speedup() -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let g = gen::gnm(SPEEDUP_EDGES / 5, SPEEDUP_EDGES, 11);
    let x0 = base_features(&gen::gnm(4_000, 20_000, 12), EntityKind::Edge).unwrap();
    let train = gen::gnm(4_000, 20_000, 12);
    let defs = learn_features(&train, &x0, &LearnConfig::default()).unwrap().definitions();
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (one, many) = (pool(1), pool(SPEEDUP_THREADS));
    let time = |p: &rayon::ThreadPool| {
        p.install(|| {
            let t = Instant::now();
            let profile = graphlets(&g, false).unwrap();
            let x = defs.materialize(&g).unwrap();
            (t.elapsed().as_secs_f64(), profile, x.values)
        })
    };
    let (t1, p1, x1) = time(&one);
    let (tn, pn, xn) = time(&many);
    let speedup = t1 / tn;
    let identical = p1 == pn && x1 == xn;
    let sample = x1.slice(ndarray::s![..5_000, ..]).to_owned();
    let fit_cfg = FitConfig {
        max_sweeps: 20,
        ..FitConfig::default()
    };
    let l1 = one.install(|| fit(&sample, 4, Divergence::Fro, &fit_cfg).unwrap().final_loss());
    let ln = many.install(|| fit(&sample, 4, Divergence::Fro, &fit_cfg).unwrap().final_loss());
    let loss_diff = (l1 - ln).abs() / l1.max(1.0);
    let results_ok = identical && loss_diff <= PARALLEL_LOSS_TOL;
    let pass = results_ok && speedup >= SPEEDUP_MIN;
    Outcome {
        pass,
        detail: format!(
            "m = {}: counting + materialization {t1:.2}s on 1 thread vs {tn:.2}s on {SPEEDUP_THREADS}, speedup {speedup:.2} (need {SPEEDUP_MIN}); \
             counts and features identical: {identical}; fit loss rel. diff {loss_diff:.1e} (limit {PARALLEL_LOSS_TOL:e}); {cores} core(s) available",
            g.m()
        ),
        blocked: (!pass && results_ok && cores < SPEEDUP_THREADS)
            .then(|| format!("needs {SPEEDUP_THREADS} cores, host has {cores}")),
    }
}

fn c12_feature_learning() -> Outcome {
    let graphs = [
        ("collab", load("collab.edges")),
        ("periodic", load("periodic.edges")),
        ("gnm", gen::gnm(400, 1_500, 3)),
    ];
    let base = LearnConfig::default();
    let gamma = base.gamma();
    let mut deterministic = true;
    let mut redundant = 0;
    let mut regressions = 0;
    let mut pairs = 0usize;
    let mut max_agreement: f64 = 0.0;
    for (_, g) in &graphs {
        for kind in [EntityKind::Edge, EntityKind::Node] {
            let x0 = base_features(g, kind).unwrap();
            let a = learn_features(g, &x0, &base).unwrap();
            let b = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap()
                .install(|| learn_features(g, &x0, &base).unwrap());
            let values_cfg = LearnConfig {
                representation: Representation::Values,
                ..base.clone()
            };
            let v = learn_features(g, &x0, &values_cfg).unwrap();
            deterministic &= a.defs == b.defs && a.values == b.values && v.defs == a.defs;
            let bins: Vec<Vec<u32>> = (0..v.cols()).map(|j| log_bin(&v.column(j), base.alpha)).collect();
            for i in 0..bins.len() {
                assert!(bin_count(&bins[i]) >= 2);
                for j in i + 1..bins.len() {
                    let agreement = 1.0 - disagreement(&bins[i], &bins[j]).unwrap();
                    pairs += 1;
                    max_agreement = max_agreement.max(agreement);
                    if agreement >= gamma {
                        redundant += 1;
                    }
                }
            }
            let mut previous: Option<Vec<String>> = None;
            for layers in 0..=base.max_layers {
                let cfg = LearnConfig {
                    max_layers: layers,
                    ..base.clone()
                };
                let names = learn_features(g, &x0, &cfg).unwrap().names();
                if let Some(prev) = &previous {
                    regressions += prev.iter().filter(|n| !names.contains(n)).count();
                }
                previous = Some(names);
            }
        }
    }
    Outcome::check(
        deterministic && redundant == 0 && regressions == 0,
        format!(
            "repeat runs identical: {deterministic}; {pairs} surviving pairs, {redundant} with agreement >= {gamma:.2} (max {max_agreement:.3}); \
             {regressions} representatives dropped by a later layer"
        ),
    )
}

fn c13_sparsity() -> Outcome {
    let mut exact = true;
    let mut report = Vec::new();
    let mut sparse = true;
    for name in ["collab.edges", "two_regime.edges", "periodic.edges"] {
        let g = load(name);
        let x0 = base_features(&g, EntityKind::Edge).unwrap();
        let x = learn_features(&g, &x0, &LearnConfig::default()).unwrap();
        let nnz: usize = x.values.columns().into_iter().map(|c| c.iter().filter(|&&v| v != 0.0).count()).sum();
        let cells = x.rows() * x.cols();
        let rho = nnz as f64 / cells as f64;
        exact &= rho.to_bits() == x.density().to_bits();
        sparse &= rho < DENSITY_MAX;
        report.push(format!("{name} {}x{} rho={rho:.3}", x.rows(), x.cols()));
    }
    Outcome::check(
        exact && sparse,
        format!("density equals nnz/(m*f): {exact}; {} (need < {DENSITY_MAX})", report.join(", ")),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("graphlet oracle equivalence", c1_graphlet_oracle),
        ("monotone descent", c2_monotone_descent),
        ("exact rank-1 recovery", c3_exact_recovery),
        ("update rule correctness", c4_update_rules),
        ("description length valley", c5_mdl_valley),
        ("huffman entropy sandwich", c6_huffman_sandwich),
        ("lloyd-max optimality", c7_lloyd_max),
        ("difference entropy bounds", c8_entropy_rank),
        ("frozen definitions and drift", c9_frozen_definitions),
        ("linear scaling in edges", c10_linear_scaling),
        ("parallel speedup", c11_parallel_speedup),
        ("feature learning soundness", c12_feature_learning),
        ("sparsity reporting", c13_sparsity),
    ];
    let mut failed = Vec::new();
    let mut blocked = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::check(false, format!("panicked: {msg}"))
        });
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "C{:02} {status} {name}: {} [{:.1}s]",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.pass {
            match outcome.blocked {
                Some(why) => {
                    println!("    blocked by host: {why}");
                    blocked.push(i + 1);
                }
                None => failed.push(i + 1),
            }
        }
    }
    let passed = criteria.len() - failed.len() - blocked.len();
    println!(
        "acceptance: {passed}/{} passed, failed {failed:?}, failed for lack of hardware {blocked:?}",
        criteria.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
