//! The decode-and-feedback loop: leaves aggregate the final syndrome round,
//! send it up the tree, the root decodes, and corrections travel back down.

mod campaign;
mod config;
mod leaves;
mod shot;
mod worst_case;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use campaign::{
    ler_campaign, ler_shot, run_campaign, wilson_interval, CampaignReport, Z95, Histogram, LerEstimate, LerOutcome,
    StageStats,
};
pub use config::{
    DecodePoint, DecodeTable, JitterMode, LerBasis, LinkRate, PipelineConfig, RouterStageConfig, StageLatencyConfig, StageSpec, SyncConfig,
    SyndromeSource,
};
pub use leaves::{
    assemble_syndrome, assign_qubits_to_leaves, route_corrections, CorrectionMessage, LeafMap, RoutedFault,
    SyndromeMessage,
};
pub use shot::{Pipeline, ShotReport, ShotTrace, StageInterval};
pub use worst_case::{worst_case_d3, worst_case_d3_syndrome, WorstCase};

use crate::code_model::CodeError;
use crate::decoder::DecodeError;
use crate::fabric::SimError;
use crate::link::LinkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{required_qubits} qubits exceed the {max_qubits} supported with {router_layers} router layer(s); add a router layer")]
    Capacity { required_qubits: u64, max_qubits: u64, router_layers: u32 },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("pipeline invariant violated: {0}")]
    Invariant(String),
}

/// Timed stages of one shot, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    LeafAgg,
    Uplink,
    RootAgg,
    Decode,
    RootDist,
    Downlink,
    LeafDist,
    RouterProc,
    RouterNet,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::LeafAgg,
        Stage::Uplink,
        Stage::RootAgg,
        Stage::Decode,
        Stage::RootDist,
        Stage::Downlink,
        Stage::LeafDist,
        Stage::RouterProc,
        Stage::RouterNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::LeafAgg => "leaf_agg",
            Stage::Uplink => "uplink",
            Stage::RootAgg => "root_agg",
            Stage::Decode => "decode",
            Stage::RootDist => "root_dist",
            Stage::Downlink => "downlink",
            Stage::LeafDist => "leaf_dist",
            Stage::RouterProc => "router_proc",
            Stage::RouterNet => "router_net",
        }
    }

    /// Stages present in a tree with `router_layers` layers.
    pub fn active(router_layers: u32) -> &'static [Stage] {
        if router_layers == 0 {
            &Self::ALL[..7]
        } else {
            &Self::ALL
        }
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
