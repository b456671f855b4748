//! Distributed online learning: weighted majority over shared experts and
//! online mirror descent, run by a round-synchronous multi-agent simulator,
//! with closed-form mistake and regret bounds to check runs against.
//!
//! The `parallel` feature (on by default) lets per-agent work and batches of
//! runs use rayon. Results do not depend on it.

pub mod bounds;
pub mod data;
pub mod dwm;
pub mod error;
pub mod exec;
pub mod experts;
pub mod omd;
pub mod sim;
pub mod topology;
pub mod types;

pub use data::{Dataset, PartitionPlan, PartitionStrategy, SyntheticSpec};
pub use dwm::{DwmConfig, MergeRule};
pub use error::{Error, Result};
pub use experts::{DecisionStump, ExpertPool};
pub use omd::{OmdConfig, OmdVariant};
pub use sim::{run, run_many, Algorithm, AlgorithmConfig, ExperimentSpec, Metrics};
pub use topology::{Topology, TopologyKind};
pub use types::{AgentState, Label, LabeledExample, SparseVector};
