//! Simulation library for a tree-structured, real-time QEC decode-and-feedback
//! fabric: surface-code syndromes, union-find decoding at the root, 64B/66B
//! links, PTP timer alignment, and stage-level latency accounting.
//!
//! The analytic rate and capacity code is generic over [`scalar::Scalar`];
//! the aliases below pick the common instantiations.

pub mod capacity;
pub mod code_model;
pub mod decoder;
pub mod fabric;
pub mod link;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scalar;

use num_rational::Ratio;

pub use capacity::{PlatformProfile, ScalingModel};
pub use code_model::{build_decoding_graph, build_layout, CodeLayout, DecodingGraph, Sector, SyndromeRounds};
pub use decoder::{decode, oracle_decode, Correction};
pub use fabric::{NodeId, SimTime};
pub use link::LinkModel;
pub use pipeline::{run_campaign, Pipeline, PipelineConfig, ShotReport};

/// Exact rational scalar.
pub type Exact = Ratio<i128>;

pub type ThroughputMarginF64 = capacity::ThroughputMargin<f64>;
pub type ThroughputMarginF32 = capacity::ThroughputMargin<f32>;
pub type ThroughputMarginExact = capacity::ThroughputMargin<Exact>;
