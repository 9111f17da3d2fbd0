//! Discrete-event fabric: simulated time, the event engine, the control tree,
//! and node timers.

pub mod clock;
pub mod engine;
pub mod time;
pub mod topology;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clock::{drift_bound, global_sync, ptp_sync, NodeClock, SyncPath, SyncReport, SyncTimestamps};
pub use engine::{Engine, Event, TraceRecord};
pub use time::SimTime;
pub use topology::{NodeState, Role, Topology, TopologyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot schedule at {at} before current time {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error("sync exchange is missing a timestamp")]
    MissingTimestamp,
    #[error("{leaves} leaves exceed the tree capacity of {capacity}; add a router layer")]
    Capacity { leaves: u64, capacity: u64 },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("{0}")]
    Protocol(String),
}
