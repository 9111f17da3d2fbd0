use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::code_model::Sector;
use crate::fabric::time::PS_PER_NS;
use crate::link::LinkModel;

/// Mean and uniform half-width of one stage, in ps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub mean_ps: u64,
    pub jitter_ps: u64,
}

impl StageSpec {
    pub const fn ns(mean: u64, jitter: u64) -> Self {
        StageSpec { mean_ps: mean * PS_PER_NS, jitter_ps: jitter * PS_PER_NS }
    }

    pub fn fixed(mean_ps: u64) -> Self {
        StageSpec { mean_ps, jitter_ps: 0 }
    }

    /// `[mean - jitter, mean + jitter]`, saturating at zero.
    pub fn bounds(&self) -> (u64, u64) {
        (self.mean_ps.saturating_sub(self.jitter_ps), self.mean_ps + self.jitter_ps)
    }
}

/// Decode duration by code distance. Distances between anchors are linearly
/// interpolated; distances outside the anchors take the nearest anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DecodePoint>", into = "Vec<DecodePoint>")]
pub struct DecodeTable {
    points: BTreeMap<u32, u64>,
}

impl DecodeTable {
    pub fn new(points: BTreeMap<u32, u64>) -> Result<Self, PipelineError> {
        if points.is_empty() {
            return Err(PipelineError::Config("decode table is empty".into()));
        }
        if let Some(d) = points.keys().find(|d| *d % 2 == 0) {
            return Err(PipelineError::Config(format!("decode table key {d} is not an odd distance")));
        }
        Ok(DecodeTable { points })
    }

    /// 56, 65, 90 and 250 ns at d = 3, 5, 7, 13.
    pub fn prototype() -> Self {
        let points = [(3, 56), (5, 65), (7, 90), (13, 250)].into_iter().map(|(d, ns)| (d, ns * PS_PER_NS)).collect();
        DecodeTable { points }
    }

    pub fn points(&self) -> &BTreeMap<u32, u64> {
        &self.points
    }

    /// True if `d` is not an anchor point.
    pub fn is_estimate(&self, d: u32) -> bool {
        !self.points.contains_key(&d)
    }

    /// Decode duration at `d`, rounded half up to whole ps.
    pub fn lookup(&self, d: u32) -> u64 {
        if let Some(&ps) = self.points.get(&d) {
            return ps;
        }
        let below = self.points.range(..d).next_back();
        let above = self.points.range(d..).next();
        match (below, above) {
            (Some((&d0, &v0)), Some((&d1, &v1))) => {
                let t = Ratio::new((d - d0) as i128, (d1 - d0) as i128);
                let v = Ratio::from_integer(v0 as i128) + t * (v1 as i128 - v0 as i128);
                (v + Ratio::new(1, 2)).floor().to_integer() as u64
            }
            (Some((_, &v)), None) | (None, Some((_, &v))) => v,
            (None, None) => unreachable!("decode table is never empty"),
        }
    }
}

/// One anchor of a [`DecodeTable`] in its serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodePoint {
    pub distance: u32,
    pub ps: u64,
}

impl TryFrom<Vec<DecodePoint>> for DecodeTable {
    type Error = PipelineError;

    fn try_from(points: Vec<DecodePoint>) -> Result<Self, Self::Error> {
        let n = points.len();
        let map: BTreeMap<u32, u64> = points.into_iter().map(|p| (p.distance, p.ps)).collect();
        if map.len() != n {
            return Err(PipelineError::Config("decode table lists a distance twice".into()));
        }
        DecodeTable::new(map)
    }
}

impl From<DecodeTable> for Vec<DecodePoint> {
    fn from(table: DecodeTable) -> Self {
        table.points.into_iter().map(|(distance, ps)| DecodePoint { distance, ps }).collect()
    }
}

/// Extra work on each router hop. Both figures are totals for the way up
/// plus the way down; each direction takes half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterStageConfig {
    pub processing_ps: u64,
    pub network_round_trip_ps: u64,
}

impl RouterStageConfig {
    pub fn prototype() -> Self {
        RouterStageConfig { processing_ps: 45 * PS_PER_NS, network_round_trip_ps: 312 * PS_PER_NS }
    }

    pub fn processing_one_way(&self) -> (u64, u64) {
        split(self.processing_ps)
    }

    pub fn network_one_way(&self) -> (u64, u64) {
        split(self.network_round_trip_ps)
    }

    pub fn total_ps(&self) -> u64 {
        self.processing_ps + self.network_round_trip_ps
    }
}

/// Up and down halves of `total`; the odd picosecond goes up.
fn split(total: u64) -> (u64, u64) {
    (total - total / 2, total / 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageLatencyConfig {
    pub leaf_aggregate: StageSpec,
    pub uplink: StageSpec,
    pub root_aggregate: StageSpec,
    pub decode: DecodeTable,
    pub decode_jitter_ps: u64,
    pub root_distribute: StageSpec,
    pub downlink: StageSpec,
    pub leaf_distribute: StageSpec,
    pub router: RouterStageConfig,
}

impl StageLatencyConfig {
    /// Stage means and spreads measured on the two-leaf prototype.
    pub fn prototype() -> Self {
        StageLatencyConfig {
            leaf_aggregate: StageSpec::ns(29, 3),
            uplink: StageSpec::ns(157, 16),
            root_aggregate: StageSpec::ns(20, 10),
            decode: DecodeTable::prototype(),
            decode_jitter_ps: 0,
            root_distribute: StageSpec::ns(25, 3),
            downlink: StageSpec::ns(155, 9),
            leaf_distribute: StageSpec::ns(9, 1),
            router: RouterStageConfig::prototype(),
        }
    }

    /// Sum of the non-decode stage means of a router-less tree.
    pub fn non_decode_sum_ps(&self) -> u64 {
        [self.leaf_aggregate, self.uplink, self.root_aggregate, self.root_distribute, self.downlink, self.leaf_distribute]
            .iter()
            .map(|s| s.mean_ps)
            .sum()
    }

    pub fn zero_jitter(&self) -> Self {
        let mut out = self.clone();
        for s in [
            &mut out.leaf_aggregate,
            &mut out.uplink,
            &mut out.root_aggregate,
            &mut out.root_distribute,
            &mut out.downlink,
            &mut out.leaf_distribute,
        ] {
            s.jitter_ps = 0;
        }
        out.decode_jitter_ps = 0;
        out
    }
}

impl Default for StageLatencyConfig {
    fn default() -> Self {
        Self::prototype()
    }
}

/// How jitter draws are shared between nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterMode {
    /// One draw per stage and shot, shared by every node of the tree.
    #[default]
    CommonMode,
    /// Independent draws per node, stage and shot.
    PerNode,
}

/// Memory-experiment basis whose logical failures are counted. A Z-basis
/// memory is spoiled by X-type residuals, which the Z sector decodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LerBasis {
    X,
    #[default]
    Z,
    /// Either sector failing counts.
    Both,
}

impl LerBasis {
    pub fn failed(self, sector_failures: [bool; 2]) -> bool {
        match self {
            LerBasis::X => sector_failures[Sector::X.index()],
            LerBasis::Z => sector_failures[Sector::Z.index()],
            LerBasis::Both => sector_failures[0] || sector_failures[1],
        }
    }
}

/// Where the timed shot's syndrome comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyndromeSource {
    #[default]
    Sampled,
    /// The slowest-to-decode d=3 pattern; requires `distance = 3, rounds = 3`.
    WorstCaseD3,
}

/// PTP alignment run before every shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    /// Initial timer offsets are uniform in `[-spread, +spread]`.
    pub initial_offset_spread_ps: u64,
    pub one_way_ps: u64,
    /// `up - down` on every edge.
    pub asymmetry_ps: i64,
    pub drift_ppb: i64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig { initial_offset_spread_ps: 1_000_000, one_way_ps: 156_000, asymmetry_ps: 0, drift_ppb: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkRate {
    pub line_rate_bps: u64,
    pub lanes: u32,
}

impl Default for LinkRate {
    fn default() -> Self {
        LinkRate { line_rate_bps: 10_000_000_000, lanes: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub distance: u32,
    pub rounds: u32,
    pub physical_error_rate: f64,
    pub qubits_per_leaf: u32,
    pub root_ports: u32,
    pub router_children: u32,
    /// `None` picks the fewest layers that fit.
    pub router_layers: Option<u32>,
    pub stages: StageLatencyConfig,
    pub link: LinkRate,
    pub jitter_mode: JitterMode,
    pub syndrome_source: SyndromeSource,
    pub ler_basis: LerBasis,
    pub sync: SyncConfig,
}

impl PipelineConfig {
    /// The two-leaf d=3 prototype: ZCU216 root, measured stage latencies.
    pub fn prototype() -> Self {
        PipelineConfig {
            distance: 3,
            rounds: 3,
            physical_error_rate: 0.001,
            qubits_per_leaf: 14,
            root_ports: 4,
            router_children: 29,
            router_layers: None,
            stages: StageLatencyConfig::prototype(),
            link: LinkRate::default(),
            jitter_mode: JitterMode::CommonMode,
            syndrome_source: SyndromeSource::Sampled,
            ler_basis: LerBasis::Z,
            sync: SyncConfig::default(),
        }
    }

    pub fn with_distance(mut self, d: u32) -> Self {
        self.distance = d;
        self.rounds = d;
        self
    }

    pub fn zero_jitter(mut self) -> Self {
        self.stages = self.stages.zero_jitter();
        self
    }

    pub fn uplink_model(&self) -> Result<LinkModel, PipelineError> {
        Ok(LinkModel::new(self.link.line_rate_bps, self.link.lanes, self.stages.uplink.mean_ps, self.stages.uplink.jitter_ps)?)
    }

    pub fn downlink_model(&self) -> Result<LinkModel, PipelineError> {
        Ok(LinkModel::new(
            self.link.line_rate_bps,
            self.link.lanes,
            self.stages.downlink.mean_ps,
            self.stages.downlink.jitter_ps,
        )?)
    }

    /// Link model of a router-to-router or router-to-root hop in one direction.
    pub fn router_hop_model(&self, one_way_ps: u64) -> Result<LinkModel, PipelineError> {
        Ok(LinkModel::new(self.link.line_rate_bps, self.link.lanes, one_way_ps.max(1), 0)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.distance == 0 || self.distance.is_multiple_of(2) {
            return Err(PipelineError::Config(format!("distance {} must be odd and positive", self.distance)));
        }
        if self.rounds == 0 {
            return Err(PipelineError::Config("rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.physical_error_rate) {
            return Err(PipelineError::Config(format!(
                "physical error rate {} is outside [0, 1]",
                self.physical_error_rate
            )));
        }
        if self.qubits_per_leaf == 0 || self.root_ports == 0 || self.router_children == 0 {
            return Err(PipelineError::Config("qubit and port counts must be positive".into()));
        }
        if self.syndrome_source == SyndromeSource::WorstCaseD3 && (self.distance, self.rounds) != (3, 3) {
            return Err(PipelineError::Config("the worst-case syndrome exists only for distance 3 with 3 rounds".into()));
        }
        self.uplink_model()?;
        self.downlink_model()?;
        Ok(())
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::prototype()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototype_sums() {
        let s = StageLatencyConfig::prototype();
        assert_eq!(s.non_decode_sum_ps(), 395_000);
        assert_eq!(s.non_decode_sum_ps() + s.decode.lookup(3), 451_000);
        assert_eq!(s.router.processing_one_way(), (22_500, 22_500));
        assert_eq!(s.router.network_one_way(), (156_000, 156_000));
        assert_eq!(s.router.total_ps(), 357_000);
    }

    #[test]
    fn decode_table_interpolates() {
        let t = DecodeTable::prototype();
        assert_eq!(t.lookup(3), 56_000);
        assert_eq!(t.lookup(5), 65_000);
        assert_eq!(t.lookup(9), 143_333);
        assert_eq!(t.lookup(11), 196_667);
        assert_eq!(t.lookup(1), 56_000);
        assert_eq!(t.lookup(21), 250_000);
        assert!(t.is_estimate(9) && !t.is_estimate(13));
        let mut prev = 0;
        for d in (1..40).step_by(2) {
            assert!(t.lookup(d) >= prev);
            prev = t.lookup(d);
        }
    }

    #[test]
    fn decode_table_rejects_even_keys() {
        assert!(DecodeTable::new(BTreeMap::from([(4, 1)])).is_err());
        assert!(DecodeTable::new(BTreeMap::new()).is_err());
    }

    #[test]
    fn stage_bounds() {
        assert_eq!(StageSpec::ns(157, 16).bounds(), (141_000, 173_000));
        assert_eq!(StageSpec::ns(1, 3).bounds(), (0, 4_000));
    }

    #[test]
    fn validation() {
        PipelineConfig::prototype().validate().unwrap();
        assert!(PipelineConfig::prototype().with_distance(4).validate().is_err());
        let mut c = PipelineConfig::prototype();
        c.physical_error_rate = 1.5;
        assert!(c.validate().is_err());
        c = PipelineConfig::prototype().with_distance(5);
        c.syndrome_source = SyndromeSource::WorstCaseD3;
        assert!(c.validate().is_err());
    }
}
