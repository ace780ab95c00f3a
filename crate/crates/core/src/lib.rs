//! Structural role discovery for edges and nodes.
//!
//! The pipeline counts graphlet orbits per edge or node, grows a set of
//! recursive neighborhood features with redundancy pruning, factorizes the
//! feature matrix into non-negative role memberships and role definitions,
//! and picks the number of roles by description length. Timestamped graphs
//! are split into snapshots whose memberships are inferred against frozen
//! definitions.

pub mod dynamic;
pub mod error;
pub mod factorize;
pub mod featlearn;
pub mod gen;
pub mod graph;
pub mod graphlets;
pub mod mdl;

pub use error::{Error, Result};
pub use factorize::{Divergence, FitConfig, RoleModel};
pub use featlearn::{EntityKind, FeatureDef, FeatureMatrix, FeatureSet, LearnConfig};
pub use graph::{Graph, GraphBuilder, SnapshotSeries};
pub use graphlets::GraphletProfile;
