//! Node timers and PTP-style two-way alignment.

use serde::{Deserialize, Serialize};

use super::engine::Engine;
use super::time::SimTime;
use super::topology::Topology;
use super::{NodeId, SimError};

/// Local timer of one board relative to ideal simulation time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeClock {
    pub offset_ps: i64,
    /// Rate error in parts per billion.
    pub drift_ppb: i64,
}

impl NodeClock {
    pub fn new(offset_ps: i64, drift_ppb: i64) -> Self {
        NodeClock { offset_ps, drift_ppb }
    }

    pub fn from_ppm(offset_ps: i64, drift_ppm: i64) -> Self {
        NodeClock { offset_ps, drift_ppb: drift_ppm * 1_000 }
    }

    /// Timer reading at ideal time `t`.
    pub fn read(&self, t: SimTime) -> i64 {
        let drift = (t.as_ps() as i128 * self.drift_ppb as i128).div_euclid(1_000_000_000) as i64;
        t.as_ps() as i64 + self.offset_ps + drift
    }

    pub fn apply_correction(&mut self, correction_ps: i64) {
        self.offset_ps -= correction_ps;
    }
}

/// Worst timer divergence accumulated between re-syncs.
pub fn drift_bound(drift_ppb: i64, interval: SimTime) -> SimTime {
    SimTime::from_ps((drift_ppb.unsigned_abs() as u128 * interval.as_ps() as u128).div_ceil(1_000_000_000) as u64)
}

/// One-way delays of the path between a parent and a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncPath {
    pub down_ps: u64,
    pub up_ps: u64,
}

impl SyncPath {
    pub fn symmetric(one_way_ps: u64) -> Self {
        SyncPath { down_ps: one_way_ps, up_ps: one_way_ps }
    }

    /// `up - down`.
    pub fn asymmetry_ps(&self) -> i64 {
        self.up_ps as i64 - self.down_ps as i64
    }
}

/// Timestamps of one two-way exchange: `t1` parent send, `t2` child receive,
/// `t3` child send, `t4` parent receive, each on the stamping node's timer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SyncTimestamps {
    pub t1: Option<i64>,
    pub t2: Option<i64>,
    pub t3: Option<i64>,
    pub t4: Option<i64>,
}

impl SyncTimestamps {
    /// Estimated child-minus-parent offset, `((t2 - t1) - (t4 - t3)) / 2`,
    /// rounded half to even.
    pub fn offset_estimate(&self) -> Result<i64, SimError> {
        let (Some(t1), Some(t2), Some(t3), Some(t4)) = (self.t1, self.t2, self.t3, self.t4) else {
            return Err(SimError::MissingTimestamp);
        };
        Ok(div2_half_even((t2 - t1) - (t4 - t3)))
    }
}

fn div2_half_even(x: i64) -> i64 {
    let q = x.div_euclid(2);
    if x.rem_euclid(2) == 1 && q % 2 != 0 {
        q + 1
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SyncMsg {
    Sync { t1: i64 },
    DelayReq { t1: i64, t2: i64, t3: i64 },
}

/// Runs one exchange between `parent` and `child` starting at `start` and
/// returns the stamped timestamps. Delays come from `path`; the nodes only
/// see their own timer readings.
pub fn exchange(parent: &NodeClock, child: &NodeClock, path: SyncPath, start: SimTime) -> Result<(SyncTimestamps, SimTime), SimError> {
    const PARENT: NodeId = NodeId(0);
    const CHILD: NodeId = NodeId(1);
    let mut engine: Engine<SyncMsg> = Engine::new();
    engine.schedule(start + SimTime(path.down_ps), CHILD, SyncMsg::Sync { t1: parent.read(start) })?;
    let mut stamps = SyncTimestamps::default();
    let mut done = start;
    engine.run_until(SimTime::MAX, |eng, ev| {
        match ev.payload {
            SyncMsg::Sync { t1 } => {
                let t2 = child.read(eng.now());
                let t3 = t2;
                eng.schedule_after(SimTime(path.up_ps), PARENT, SyncMsg::DelayReq { t1, t2, t3 })?;
            }
            SyncMsg::DelayReq { t1, t2, t3 } => {
                stamps = SyncTimestamps { t1: Some(t1), t2: Some(t2), t3: Some(t3), t4: Some(parent.read(eng.now())) };
                done = eng.now();
            }
        }
        Ok(())
    })?;
    Ok((stamps, done))
}

/// Aligns `child` to `parent` and returns the correction it applied.
pub fn ptp_sync(parent: &NodeClock, child: &mut NodeClock, path: SyncPath, start: SimTime) -> Result<i64, SimError> {
    let (stamps, _) = exchange(parent, child, path, start)?;
    let correction = stamps.offset_estimate()?;
    child.apply_correction(correction);
    Ok(correction)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport {
    /// Timer reading of each node minus the root's, at the end of the sync pass.
    pub residual_ps: Vec<i64>,
    pub max_abs_residual_ps: u64,
    pub finished_at: SimTime,
}

/// Syncs every edge top-down, parents before children, one exchange at a time.
pub fn global_sync(
    topology: &mut Topology,
    path_of: impl Fn(NodeId) -> SyncPath,
    start: SimTime,
) -> Result<SyncReport, SimError> {
    let mut now = start;
    for id in topology.top_down() {
        let Some(parent) = topology.node(id).parent else { continue };
        let parent_clock = topology.node(parent).clock;
        let mut clock = topology.node(id).clock;
        let (stamps, done) = exchange(&parent_clock, &clock, path_of(id), now)?;
        clock.apply_correction(stamps.offset_estimate()?);
        topology.node_mut(id).clock = clock;
        now = done;
    }
    let root_reading = topology.node(topology.root()).clock.read(now);
    let residual_ps: Vec<i64> = topology.nodes().iter().map(|n| n.clock.read(now) - root_reading).collect();
    let max_abs_residual_ps = residual_ps.iter().map(|r| r.unsigned_abs()).max().unwrap_or(0);
    Ok(SyncReport { residual_ps, max_abs_residual_ps, finished_at: now })
}
