//! Pipeline driver behind the `roles` binary.
//!
//! [`run`] executes one subcommand, writes its artifacts (plus the
//! serialized [`RunConfig`]) into the output directory and returns a
//! [`Summary`] for the one-line report.

pub mod config;
pub mod dot;
pub mod error;
pub mod output;

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Instant;

use edgeroles::dynamic::{
    assign_roles, entropy_rank, infer_series, learn_timescale, normalize_rows, train_definitions, DynamicConfig,
    EntityKey, RoleSeries,
};
use edgeroles::factorize::{fit, RoleModel};
use edgeroles::featlearn::{base_features, learn_features, EntityKind, FeatureMatrix, LearnConfig};
use edgeroles::graph::{load_edgelist, snapshots, LoadOptions};
use edgeroles::graphlets::{graphlets, EDGE_ORBITS, NODE_ORBITS};
use edgeroles::mdl::{select_rank, MdlConfig, MdlReport};
use edgeroles::Graph;
use ndarray::Array2;

pub use config::{Command, RunConfig};
pub use dot::export_dot;
pub use error::{CliError, CliResult};
use output::{field, matrix_csv, read_matrix, role_names, triplets, OutDir, RowIds};

/// Figures reported on stdout after a run. Absent fields print as `-`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub command: &'static str,
    pub features: Option<usize>,
    pub layers: Option<usize>,
    pub density: Option<f64>,
    pub rank: Option<usize>,
    pub total_bits: Option<f64>,
    pub wall_seconds: f64,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn opt<T: fmt::Display>(v: Option<T>) -> String {
            v.map_or_else(|| "-".into(), |v| v.to_string())
        }
        write!(
            f,
            "{} f={} L={} rho={} r={} total_bits={} wall={:.3}s",
            self.command,
            opt(self.features),
            opt(self.layers),
            opt(self.density.map(|d| format!("{d:.4}"))),
            opt(self.rank),
            opt(self.total_bits.map(|b| format!("{b:.1}"))),
            self.wall_seconds
        )
    }
}

impl Summary {
    fn with_features(mut self, x: &FeatureMatrix) -> Self {
        self.features = Some(x.cols());
        self.layers = Some(x.layers);
        self.density = Some(x.density());
        self
    }
}

/// Runs the configured subcommand on a thread pool of the requested size.
pub fn run(cfg: &RunConfig) -> CliResult<Summary> {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let out = OutDir::create(&cfg.out)?;
    out.write("config.json", &(serde_json::to_string_pretty(cfg)? + "\n"))?;
    let mut summary = pool.install(|| dispatch(cfg, &out))?;
    summary.command = cfg.command.name();
    summary.wall_seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

fn dispatch(cfg: &RunConfig, out: &OutDir) -> CliResult<Summary> {
    match &cfg.command {
        Command::Graphlets { input } => run_graphlets(cfg, out, input),
        Command::Features { input, entity, learn } => {
            let g = load(cfg, input)?;
            let x = features(&g, (*entity).into(), &learn.to_config())?;
            write_features(cfg, out, &g, &x, "")?;
            Ok(Summary::default().with_features(&x))
        }
        Command::Fit {
            input,
            rank,
            matrix,
            entity,
            learn,
            fit: fa,
        } => {
            let (x, g, summary) = matrix_input(cfg, out, input, *matrix, (*entity).into(), &learn.to_config())?;
            let model = fit(&x, *rank, fa.div, &fa.to_config(cfg.seed))?;
            write_model(out, &model, g.as_ref(), (*entity).into(), "")?;
            Ok(Summary {
                rank: Some(model.rank),
                ..summary
            })
        }
        Command::Select {
            input,
            rmin,
            rmax,
            matrix,
            entity,
            learn,
            fit: fa,
        } => {
            let (x, g, summary) = matrix_input(cfg, out, input, *matrix, (*entity).into(), &learn.to_config())?;
            let mdl = MdlConfig {
                fit: fa.to_config(cfg.seed),
                ..MdlConfig::default()
            };
            let report = select_rank(&x, *rmin, *rmax, fa.div, &mdl)?;
            out.write("mdl.csv", &mdl_csv(&report))?;
            write_model(out, report.best_model(), g.as_ref(), (*entity).into(), "")?;
            Ok(Summary {
                rank: Some(report.best),
                total_bits: Some(report.best_record().total_bits),
                ..summary
            })
        }
        Command::Dynamic { .. } => run_dynamic(cfg, out),
        Command::Pipeline {
            input,
            rmin,
            rmax,
            learn,
            fit: fa,
        } => run_pipeline(cfg, out, input, *rmin, *rmax, &learn.to_config(), fa),
        Command::ExportDot {
            input,
            edge_roles,
            node_roles,
        } => {
            let g = load(cfg, input)?;
            let e = read_roles(edge_roles, 3)?;
            let n = read_roles(node_roles, 2)?;
            out.write("graph.dot", &export_dot(&g, &e, &n)?)?;
            Ok(Summary::default())
        }
    }
}

fn load(cfg: &RunConfig, input: &Path) -> CliResult<Graph> {
    let g = load_edgelist(input, &LoadOptions { directed: cfg.directed })?;
    log::info!("loaded {} vertices and {} edges from {}", g.n(), g.m(), input.display());
    Ok(g)
}

fn features(g: &Graph, kind: EntityKind, learn: &LearnConfig) -> CliResult<FeatureMatrix> {
    let x0 = base_features(g, kind)?;
    Ok(learn_features(g, &x0, learn)?)
}

fn entity_tag(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Edge => "edge",
        EntityKind::Node => "node",
    }
}

fn write_features(cfg: &RunConfig, out: &OutDir, g: &Graph, x: &FeatureMatrix, suffix: &str) -> CliResult<()> {
    if cfg.sparse {
        out.write(&format!("X{suffix}.triplets"), &triplets(&x.values))?;
    } else {
        out.write(
            &format!("X{suffix}.csv"),
            &matrix_csv(&x.values, &x.names(), RowIds::for_entity(g, x.entity)),
        )?;
    }
    let sidecar = serde_json::json!({
        "entity": x.entity,
        "rows": x.rows(),
        "layers": x.layers,
        "density": x.density(),
        "names": x.names(),
        "definitions": x.definitions(),
    });
    out.write(&format!("features{suffix}.json"), &(serde_json::to_string_pretty(&sidecar)? + "\n"))?;
    Ok(())
}

/// Feature matrix of an edge list, or a numeric matrix read directly.
fn matrix_input(
    cfg: &RunConfig,
    out: &OutDir,
    input: &Path,
    is_matrix: bool,
    kind: EntityKind,
    learn: &LearnConfig,
) -> CliResult<(Array2<f64>, Option<Graph>, Summary)> {
    if is_matrix {
        let x = read_matrix(input)?;
        let density = x.iter().filter(|&&v| v != 0.0).count() as f64 / x.len() as f64;
        let summary = Summary {
            features: Some(x.ncols()),
            density: Some(density),
            ..Summary::default()
        };
        return Ok((x, None, summary));
    }
    let g = load(cfg, input)?;
    let x = features(&g, kind, learn)?;
    write_features(cfg, out, &g, &x, "")?;
    let summary = Summary::default().with_features(&x);
    Ok((x.values, Some(g), summary))
}

fn write_model(out: &OutDir, model: &RoleModel, g: Option<&Graph>, kind: EntityKind, suffix: &str) -> CliResult<()> {
    let ids = g.map_or(RowIds::Plain, |g| RowIds::for_entity(g, kind));
    let roles = role_names("role_", model.rank);
    out.write(&format!("U{suffix}.csv"), &matrix_csv(&model.u, &roles, ids))?;
    out.write(&format!("V{suffix}.csv"), &matrix_csv(&model.v, &roles, RowIds::Plain))?;
    let mut loss = String::from("sweep,loss\n");
    for (i, l) in model.loss_trace.iter().enumerate() {
        loss.push_str(&format!("{i},{l}\n"));
    }
    out.write(&format!("loss{suffix}.csv"), &loss)?;
    Ok(())
}

fn mdl_csv(report: &MdlReport) -> String {
    let mut s = String::from("r,model_bits,error_bits,total_bits,seconds\n");
    for r in &report.records {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.rank, r.model_bits, r.error_bits, r.total_bits, r.fit_seconds
        ));
    }
    s
}

fn run_graphlets(cfg: &RunConfig, out: &OutDir, input: &Path) -> CliResult<Summary> {
    let g = load(cfg, input)?;
    let p = graphlets(&g, true)?;
    let mut edges = String::from("src,dst");
    for o in EDGE_ORBITS {
        edges.push(',');
        edges.push_str(o);
    }
    edges.push('\n');
    for (e, row) in p.edge_counts.iter().enumerate() {
        let (u, v) = g.edge(e);
        edges.push_str(&format!("{},{}", field(g.label(u)), field(g.label(v))));
        for c in row {
            edges.push_str(&format!(",{c}"));
        }
        edges.push('\n');
    }
    out.write("edge_graphlets.csv", &edges)?;
    let mut nodes = String::from("node");
    for o in NODE_ORBITS {
        nodes.push(',');
        nodes.push_str(o);
    }
    nodes.push('\n');
    for (v, row) in p.node_counts.iter().enumerate() {
        nodes.push_str(&field(g.label(v)));
        for c in row {
            nodes.push_str(&format!(",{c}"));
        }
        nodes.push('\n');
    }
    out.write("node_graphlets.csv", &nodes)?;
    Ok(Summary {
        features: Some(EDGE_ORBITS.len()),
        ..Summary::default()
    })
}

fn roles_csv(g: &Graph, kind: EntityKind, roles: &[Option<usize>]) -> String {
    let mut s = String::from(match kind {
        EntityKind::Edge => "src,dst,role\n",
        EntityKind::Node => "node,role\n",
    });
    for (i, r) in roles.iter().enumerate() {
        let id = match kind {
            EntityKind::Edge => {
                let (u, v) = g.edge(i);
                format!("{},{}", field(g.label(u)), field(g.label(v)))
            }
            EntityKind::Node => field(g.label(i)),
        };
        let r = r.map_or_else(String::new, |r| r.to_string());
        s.push_str(&format!("{id},{r}\n"));
    }
    s
}

/// Role column of a label file; empty cells mean no role.
fn read_roles(path: &Path, columns: usize) -> CliResult<Vec<Option<usize>>> {
    let file = fs::File::open(path).map_err(CliError::io(path))?;
    let bad = |line: usize, msg: &str| CliError::Input {
        path: path.to_path_buf(),
        msg: format!("line {line}: {msg}"),
    };
    let mut roles = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate().skip(1) {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let cell = line.rsplit(',').next().unwrap_or("").trim();
        if line.split(',').count() < columns {
            return Err(bad(i + 1, "too few columns"));
        }
        roles.push(if cell.is_empty() {
            None
        } else {
            Some(cell.parse().map_err(|_| bad(i + 1, "role is not a non-negative integer"))?)
        });
    }
    Ok(roles)
}

fn run_pipeline(
    cfg: &RunConfig,
    out: &OutDir,
    input: &Path,
    rmin: usize,
    rmax: usize,
    learn: &LearnConfig,
    fa: &config::FitArgs,
) -> CliResult<Summary> {
    let g = load(cfg, input)?;
    let mdl = MdlConfig {
        fit: fa.to_config(cfg.seed),
        ..MdlConfig::default()
    };
    let mut summary = Summary::default();
    let mut assigned: Vec<Vec<Option<usize>>> = Vec::with_capacity(2);
    for kind in [EntityKind::Edge, EntityKind::Node] {
        let tag = entity_tag(kind);
        let suffix = format!("_{tag}");
        let x = features(&g, kind, learn)?;
        write_features(cfg, out, &g, &x, &suffix)?;
        let limit = x.rows().min(x.cols());
        if limit == 0 {
            return Err(CliError::Usage(format!("no informative {tag} features to factorize")));
        }
        let hi = rmax.min(limit);
        let lo = rmin.min(hi);
        let report = select_rank(&x.values, lo, hi, fa.div, &mdl)?;
        out.write(&format!("mdl{suffix}.csv"), &mdl_csv(&report))?;
        let model = report.best_model();
        write_model(out, model, Some(&g), kind, &suffix)?;
        let roles = assign_roles(&model.u);
        out.write(&format!("{tag}_roles.csv"), &roles_csv(&g, kind, &roles))?;
        if kind == EntityKind::Edge {
            summary = Summary {
                rank: Some(report.best),
                total_bits: Some(report.best_record().total_bits),
                ..summary.with_features(&x)
            };
        }
        assigned.push(roles);
    }
    out.write("graph.dot", &export_dot(&g, &assigned[0], &assigned[1])?)?;
    Ok(summary)
}

fn entity_label(g: &Graph, k: &EntityKey) -> String {
    match *k {
        EntityKey::Edge(u, v) => format!("{}-{}", g.label(u), g.label(v)),
        EntityKey::Node(v) => g.label(v).to_string(),
    }
}

fn run_dynamic(cfg: &RunConfig, out: &OutDir) -> CliResult<Summary> {
    let Command::Dynamic {
        input,
        window,
        timescales,
        start,
        train_k,
        drift_factor,
        rank,
        rmin,
        rmax,
        entity,
        learn,
        fit: fa,
    } = &cfg.command
    else {
        unreachable!("dispatched on the dynamic variant");
    };
    if !(*drift_factor > 1.0) {
        return Err(CliError::Usage("--drift-factor must exceed 1".into()));
    }
    let g = load(cfg, input)?;
    let dcfg = DynamicConfig {
        entity: (*entity).into(),
        learn: learn.to_config(),
        mdl: MdlConfig {
            fit: fa.to_config(cfg.seed),
            ..MdlConfig::default()
        },
        divergence: fa.div,
        rank: *rank,
        r_min: *rmin,
        r_max: *rmax,
    };
    let width = if timescales.is_empty() {
        window.ok_or_else(|| CliError::Usage("dynamic needs --window or --timescales".into()))?
    } else {
        let mut widths = timescales.clone();
        widths.extend(*window);
        let report = learn_timescale(&g, &widths, &dcfg)?;
        let mut s = String::from("width,snapshots,heldout_loss\n");
        for sc in &report.scores {
            let l = sc.heldout_loss.map_or_else(String::new, |l| l.to_string());
            s.push_str(&format!("{},{},{l}\n", sc.width, sc.snapshots));
        }
        out.write("timescale.csv", &s)?;
        log::info!("chose snapshot width {}", report.chosen);
        report.chosen
    };
    let t0 = match start {
        Some(s) => *s,
        None => g
            .timestamps()
            .and_then(|t| t.first().copied())
            .ok_or_else(|| CliError::Usage("dynamic needs a timestamped edge list".into()))?,
    };
    let series = snapshots(&g, width, t0)?;
    let k = train_k.unwrap_or((series.len() / 2).max(1));
    let defs = train_definitions(&series, k, &dcfg)?;
    let rs = infer_series(&series, &defs, &dcfg.mdl)?;
    out.write("definitions.json", &(serde_json::to_string_pretty(&defs)? + "\n"))?;
    write_dynamic(out, &g, &rs, *drift_factor)?;
    Ok(Summary {
        features: Some(defs.features.len()),
        layers: defs.features.layer_of.iter().max().copied(),
        rank: Some(defs.rank),
        ..Summary::default()
    })
}

fn write_dynamic(out: &OutDir, g: &Graph, rs: &RoleSeries, factor: f64) -> CliResult<()> {
    let r = rs.rank();
    let labels: Vec<String> = rs.entities.iter().map(|k| field(&entity_label(g, k))).collect();
    let mut series = String::from("entity,t,role,weight\n");
    let mut drift = String::from("t,active,mean_loss,ratio,drift\n");
    let baseline = rs.definitions.baseline_loss;
    for (t, snap) in rs.snapshots.iter().enumerate() {
        let mut csv = String::from("entity");
        for name in role_names("role_", r) {
            csv.push(',');
            csv.push_str(&name);
        }
        csv.push('\n');
        let norm = normalize_rows(&snap.u);
        for (row, &ent) in snap.rows.iter().enumerate() {
            csv.push_str(&labels[ent]);
            for w in snap.u.row(row) {
                csv.push_str(&format!(",{w}"));
            }
            csv.push('\n');
            if snap.active[row] {
                for (role, w) in norm.row(row).iter().enumerate() {
                    series.push_str(&format!("{},{t},{role},{w}\n", labels[ent]));
                }
            }
        }
        out.write(&format!("memberships/t{t:04}.csv"), &csv)?;
        let active = snap.active.iter().filter(|&&a| a).count();
        let (loss, ratio) = match snap.mean_loss() {
            Some(l) => (l.to_string(), if baseline > 0.0 { (l / baseline).to_string() } else { String::new() }),
            None => (String::new(), String::new()),
        };
        let flagged = rs.check_drift(t, factor)?;
        drift.push_str(&format!("{t},{active},{loss},{ratio},{flagged}\n"));
    }
    out.write("timeseries.csv", &series)?;
    out.write("drift.csv", &drift)?;
    let mut rank = String::from("entity,d,argmax_t,argmin_t\n");
    for e in entropy_rank(rs).entries {
        rank.push_str(&format!("{},{},{},{}\n", labels[e.entity], e.d, e.argmax_t, e.argmin_t));
    }
    out.write("entropy_rank.csv", &rank)?;
    Ok(())
}
