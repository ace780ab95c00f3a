//! Command-line configuration. The parsed struct is written verbatim to
//! `config.json` in the output directory.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeroles::factorize::{Divergence, FitConfig};
use edgeroles::featlearn::{EntityKind, LearnConfig, OpKind, Representation};
use serde::{Deserialize, Serialize};

#[derive(Parser, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[command(name = "roles", version, about = "Edge and node role discovery on static and dynamic graphs")]
pub struct RunConfig {
    /// Seed for factor initialization.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Write feature matrices as `row col value` triplets.
    #[arg(long, global = true)]
    pub sparse: bool,
    /// Treat the edge list as directed.
    #[arg(long, global = true)]
    pub directed: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Per-edge and per-node graphlet counts.
    Graphlets {
        input: PathBuf,
    },
    /// Learn a pruned feature matrix.
    Features {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Entity::Edge)]
        entity: Entity,
        #[command(flatten)]
        learn: LearnArgs,
    },
    /// Factorize the feature matrix (or a given matrix) at a fixed rank.
    Fit {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Read `input` as a numeric matrix instead of an edge list.
        #[arg(long)]
        matrix: bool,
        #[arg(long, value_enum, default_value_t = Entity::Edge)]
        entity: Entity,
        #[command(flatten)]
        learn: LearnArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Choose the rank by description length.
    Select {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        rmin: usize,
        #[arg(long, default_value_t = 8)]
        rmax: usize,
        #[arg(long)]
        matrix: bool,
        #[arg(long, value_enum, default_value_t = Entity::Edge)]
        entity: Entity,
        #[command(flatten)]
        learn: LearnArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Roles over time on a timestamped edge list.
    Dynamic {
        input: PathBuf,
        /// Snapshot width in time units.
        #[arg(long)]
        window: Option<u64>,
        /// Candidate widths; the best one replaces `--window`.
        #[arg(long, value_delimiter = ',')]
        timescales: Vec<u64>,
        /// Start of the first snapshot; defaults to the earliest timestamp.
        #[arg(long)]
        start: Option<u64>,
        /// Number of leading snapshots used for training; defaults to half.
        #[arg(long)]
        train_k: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        drift_factor: f64,
        /// Fixed rank; selected by description length when absent.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 1)]
        rmin: usize,
        #[arg(long, default_value_t = 8)]
        rmax: usize,
        #[arg(long, value_enum, default_value_t = Entity::Edge)]
        entity: Entity,
        #[command(flatten)]
        learn: LearnArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Features, rank selection and role assignment for edges and nodes,
    /// finishing with a colored DOT drawing.
    Pipeline {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        rmin: usize,
        #[arg(long, default_value_t = 8)]
        rmax: usize,
        #[command(flatten)]
        learn: LearnArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Color a graph from role label files.
    ExportDot {
        input: PathBuf,
        /// CSV `src,dst,role` in edge order.
        #[arg(long)]
        edge_roles: PathBuf,
        /// CSV `node,role` in node order.
        #[arg(long)]
        node_roles: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Graphlets { .. } => "graphlets",
            Command::Features { .. } => "features",
            Command::Fit { .. } => "fit",
            Command::Select { .. } => "select",
            Command::Dynamic { .. } => "dynamic",
            Command::Pipeline { .. } => "pipeline",
            Command::ExportDot { .. } => "export-dot",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    Edge,
    Node,
}

impl From<Entity> for EntityKind {
    fn from(e: Entity) -> Self {
        match e {
            Entity::Edge => EntityKind::Edge,
            Entity::Node => EntityKind::Node,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    pub eps: f64,
    #[arg(long, default_value_t = 2)]
    pub max_layers: usize,
    #[arg(long, value_delimiter = ',', default_value = "mean,sum,min,max,variance,l1,product,rbf")]
    pub ops: Vec<OpKind>,
    /// Neighborhood radius.
    #[arg(long = "h", default_value_t = 1)]
    pub hops: usize,
    /// Report rescaled values instead of log-bin indices.
    #[arg(long)]
    pub values: bool,
}

impl LearnArgs {
    pub fn to_config(&self) -> LearnConfig {
        LearnConfig {
            alpha: self.alpha,
            eps: self.eps,
            max_layers: self.max_layers,
            ops: self.ops.clone(),
            hops: self.hops,
            representation: if self.values {
                Representation::Values
            } else {
                Representation::Bins
            },
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, default_value = "fro")]
    pub div: Divergence,
    #[arg(long, default_value_t = 200)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl FitArgs {
    pub fn to_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            max_sweeps: self.sweeps,
            rel_tol: self.tol,
            seed,
            ..FitConfig::default()
        }
    }
}
