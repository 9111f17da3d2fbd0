use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{JitterMode, PipelineConfig, StageSpec, SyndromeSource};
use super::leaves::{
    assemble_syndrome, assign_qubits_to_leaves, route_corrections, CorrectionMessage, LeafMap, RoutedFault,
    SyndromeMessage,
};
use super::worst_case::worst_case_d3;
use super::{PipelineError, Stage};
use crate::code_model::{
    build_decoding_graph, build_layout, sample_fault_ids, syndrome_of_ids, CodeLayout, DecodingGraph, FaultId, Sector,
    SyndromeRounds,
};
use crate::decoder::{decode_with_stats, is_valid, residual_crosses_cut, Correction};
use crate::fabric::{global_sync, Engine, NodeClock, NodeId, Role, SimError, SimTime, SyncPath, Topology, TopologyConfig};
use crate::link::{uniform_jitter, LinkChannel, LinkModel};
use crate::rng::{stream, StreamKey};

/// Largest tree depth tried when picking router layers automatically.
const MAX_ROUTER_LAYERS: u32 = 16;
/// Node id used for jitter draws shared by the whole tree.
const COMMON_NODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageInterval {
    pub stage: Stage,
    pub ps: i64,
}

/// Timing and outcome of one shot. Intervals follow the critical path and
/// sum to `end_to_end_ps` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotReport {
    pub shot: u64,
    pub intervals: Vec<StageInterval>,
    pub end_to_end_ps: i64,
    pub valid: bool,
    /// Failure in the configured memory basis.
    pub logical_failure: bool,
    /// Residual is a logical operator, per sector.
    pub sector_failures: [bool; 2],
    pub decode_iterations: u32,
    pub syndrome_bits_received: u64,
    pub correction_faults: u64,
    pub sync_residual_ps: u64,
    pub trace_hash: String,
}

impl ShotReport {
    pub fn interval(&self, stage: Stage) -> Option<i64> {
        self.intervals.iter().find(|i| i.stage == stage).map(|i| i.ps)
    }
}

/// A shot together with its event trace and messages.
#[derive(Debug, Clone)]
pub struct ShotTrace {
    pub report: ShotReport,
    pub trace: String,
    pub syndrome_messages: Vec<SyndromeMessage>,
    pub correction_messages: Vec<CorrectionMessage>,
    /// Decoder output per sector, before routing.
    pub corrections: [Correction; 2],
}

/// Everything about a configuration that does not change between shots.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    layout: CodeLayout,
    graphs: [DecodingGraph; 2],
    map: LeafMap,
    topology: TopologyConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let layout = build_layout(config.distance as usize)?;
        let rounds = config.rounds as usize;
        let graphs = [build_decoding_graph(&layout, Sector::X, rounds)?, build_decoding_graph(&layout, Sector::Z, rounds)?];
        let map = assign_qubits_to_leaves(&layout, config.qubits_per_leaf as usize);
        let leaves = map.leaf_count() as u32;
        let mut topology = TopologyConfig {
            root_ports: config.root_ports,
            router_children: config.router_children,
            router_layers: config.router_layers.unwrap_or(0),
            leaves,
        };
        if config.router_layers.is_none() {
            while (leaves as u64) > topology.leaf_capacity() && topology.router_layers < MAX_ROUTER_LAYERS {
                topology.router_layers += 1;
            }
        }
        if leaves as u64 > topology.leaf_capacity() {
            return Err(PipelineError::Capacity {
                required_qubits: layout.total_qubits() as u64,
                max_qubits: topology.leaf_capacity().saturating_mul(config.qubits_per_leaf as u64),
                router_layers: topology.router_layers,
            });
        }
        Ok(Pipeline { config, layout, graphs, map, topology })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn graph(&self, sector: Sector) -> &DecodingGraph {
        &self.graphs[sector.index()]
    }

    pub fn leaf_map(&self) -> &LeafMap {
        &self.map
    }

    pub fn topology_config(&self) -> &TopologyConfig {
        &self.topology
    }

    pub fn router_layers(&self) -> u32 {
        self.topology.router_layers
    }

    pub fn run_shot(&self, seed: u64, shot: u64) -> Result<ShotReport, PipelineError> {
        self.run_shot_traced(seed, shot).map(|t| t.report)
    }

    pub fn run_shot_traced(&self, seed: u64, shot: u64) -> Result<ShotTrace, PipelineError> {
        let mut topo = Topology::build(self.topology)?;
        let start = self.synchronize(&mut topo, seed, shot)?;
        let (syndrome, faults) = self.shot_syndrome(seed, shot)?;
        let mut sim = ShotSim::new(self, &topo, seed, shot, &syndrome)?;
        let mut engine: Engine<Ev> = Engine::with_trace();
        for &leaf in topo.leaves() {
            engine.schedule(start.time, leaf, Ev::Readout)?;
        }
        let run = engine.run_until(SimTime::MAX, |eng, ev| sim.handle(eng, ev));
        if let Some(err) = sim.failure.take() {
            return Err(err);
        }
        run?;
        let report = sim.finish(&engine, &faults, start.residual)?;
        let corrections = sim.corrections.take().expect("decode ran");
        Ok(ShotTrace {
            report,
            trace: engine.trace_dump(),
            syndrome_messages: sim.up_msgs,
            correction_messages: sim.down_msgs,
            corrections,
        })
    }

    /// Randomizes node timers, aligns them, and returns the readout instant.
    fn synchronize(&self, topo: &mut Topology, seed: u64, shot: u64) -> Result<SyncStart, PipelineError> {
        let sync = self.config.sync;
        let spread = sync.initial_offset_spread_ps.min(i64::MAX as u64) as i64;
        for i in 0..topo.len() {
            let id = NodeId(i as u32);
            let mut rng = stream(seed, StreamKey::Clock { node: id.0, shot });
            let offset = if spread == 0 { 0 } else { rng.gen_range(-spread..=spread) };
            topo.node_mut(id).clock = NodeClock::new(offset, sync.drift_ppb);
        }
        let up = (sync.one_way_ps as i64 + sync.asymmetry_ps).max(0) as u64;
        let path = SyncPath { down_ps: sync.one_way_ps, up_ps: up };
        let report = global_sync(topo, |_| path, SimTime::ZERO)?;
        Ok(SyncStart { time: report.finished_at, residual: report.max_abs_residual_ps })
    }

    fn shot_syndrome(&self, seed: u64, shot: u64) -> Result<(SyndromeRounds, [Vec<FaultId>; 2]), PipelineError> {
        let mut syndrome = SyndromeRounds::for_layout(&self.layout, self.config.rounds as usize);
        let mut faults = [Vec::new(), Vec::new()];
        match self.config.syndrome_source {
            SyndromeSource::Sampled => {
                for sector in Sector::BOTH {
                    let graph = self.graph(sector);
                    let ids = sample_fault_ids(graph, self.config.physical_error_rate, seed, shot)?;
                    syndrome.xor_assign(&syndrome_of_ids(graph, &ids)?);
                    faults[sector.index()] = ids;
                }
            }
            SyndromeSource::WorstCaseD3 => {
                let worst = worst_case_d3();
                syndrome = worst.syndrome.clone();
                faults[worst.sector.index()] = worst.faults.clone();
            }
        }
        Ok((syndrome, faults))
    }
}

struct SyncStart {
    time: SimTime,
    residual: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Readout,
    SyndromeTx { msg: usize },
    SyndromeRx { msg: usize },
    DecodeStart,
    DecodeDone,
    Distribute,
    CorrectionTx { msg: usize },
    CorrectionRx { msg: usize },
    Applied { msg: usize },
}

/// Arrival or departure of a message at a node: true time and local reading.
#[derive(Debug, Clone, Copy)]
struct Stamp {
    time: SimTime,
    reading: i64,
}

struct ShotSim<'a> {
    pipe: &'a Pipeline,
    topo: &'a Topology,
    seed: u64,
    shot: u64,
    up_links: Vec<Option<LinkChannel>>,
    down_links: Vec<Option<LinkChannel>>,
    up_msgs: Vec<SyndromeMessage>,
    /// Index of each leaf's timed message in `up_msgs`.
    timed: Vec<usize>,
    up_path: Vec<Vec<Stamp>>,
    down_msgs: Vec<CorrectionMessage>,
    down_path: Vec<Vec<Stamp>>,
    /// Root-to-leaf node lists, by leaf index.
    routes: Vec<Vec<NodeId>>,
    pending_up: usize,
    bits_received: u64,
    root_stamps: Vec<Stamp>,
    critical_up: Option<usize>,
    corrections: Option<[Correction; 2]>,
    decode_iterations: u32,
    applied: Vec<RoutedFault>,
    failure: Option<PipelineError>,
}

impl<'a> ShotSim<'a> {
    fn new(
        pipe: &'a Pipeline,
        topo: &'a Topology,
        seed: u64,
        shot: u64,
        syndrome: &SyndromeRounds,
    ) -> Result<Self, PipelineError> {
        let cfg = &pipe.config;
        let (net_up, net_down) = cfg.stages.router.network_one_way();
        let mut up_links = Vec::with_capacity(topo.len());
        let mut down_links = Vec::with_capacity(topo.len());
        for n in topo.nodes() {
            let (up, down): (Option<LinkModel>, Option<LinkModel>) = match n.role {
                Role::Root => (None, None),
                Role::Leaf => (Some(cfg.uplink_model()?), Some(cfg.downlink_model()?)),
                Role::Router => (Some(cfg.router_hop_model(net_up)?), Some(cfg.router_hop_model(net_down)?)),
            };
            up_links.push(up.map(LinkChannel::new));
            down_links.push(down.map(LinkChannel::new));
        }

        let map = &pipe.map;
        let rounds = cfg.rounds;
        let mut up_msgs = Vec::new();
        let mut timed = Vec::new();
        for leaf in 0..map.leaf_count() as u32 {
            if rounds > 1 {
                up_msgs.push(SyndromeMessage::from_syndrome(shot, leaf, map, syndrome, 0..rounds - 1));
            }
            timed.push(up_msgs.len());
            up_msgs.push(SyndromeMessage::from_syndrome(shot, leaf, map, syndrome, rounds - 1..rounds));
        }
        let routes = topo
            .leaves()
            .iter()
            .map(|&l| {
                let mut p = topo.path_to_root(l);
                p.reverse();
                p
            })
            .collect();
        let pending_up = timed.len();
        let streamed: u64 = up_msgs.iter().filter(|m| m.rounds.end < rounds).map(|m| m.payload_bits()).sum();
        let up_path = vec![Vec::new(); up_msgs.len()];
        Ok(ShotSim {
            pipe,
            topo,
            seed,
            shot,
            up_links,
            down_links,
            up_msgs,
            timed,
            up_path,
            down_msgs: Vec::new(),
            down_path: Vec::new(),
            routes,
            pending_up,
            bits_received: streamed,
            root_stamps: Vec::new(),
            critical_up: None,
            corrections: None,
            decode_iterations: 0,
            applied: Vec::new(),
            failure: None,
        })
    }

    fn stamp(&self, eng: &Engine<Ev>, node: NodeId) -> Stamp {
        Stamp { time: eng.now(), reading: self.topo.node(node).clock.read(eng.now()) }
    }

    fn jitter(&self, stage: Stage, node: NodeId, half_width_ps: u64) -> i64 {
        if half_width_ps == 0 {
            return 0;
        }
        let node = match self.pipe.config.jitter_mode {
            JitterMode::CommonMode => COMMON_NODE,
            JitterMode::PerNode => node.0,
        };
        let key = StreamKey::Jitter { node, stage: stage.tag(), shot: self.shot, round: self.pipe.config.rounds - 1 };
        uniform_jitter(&mut stream(self.seed, key), half_width_ps)
    }

    fn duration(&self, stage: Stage, node: NodeId, spec: StageSpec) -> SimTime {
        let j = self.jitter(stage, node, spec.jitter_ps);
        SimTime::from_ps((spec.mean_ps as i64 + j).max(0) as u64)
    }

    fn handle(&mut self, eng: &mut Engine<Ev>, ev: crate::fabric::Event<Ev>) -> Result<(), SimError> {
        let node = ev.target;
        let stages = &self.pipe.config.stages;
        match ev.payload {
            Ev::Readout => {
                let leaf = self.topo.node(node).leaf_index.expect("readout only at leaves") as usize;
                let msg = self.timed[leaf];
                eng.record(node, format!("readout m{msg}"));
                let s = self.stamp(eng, node);
                self.up_path[msg].push(s);
                let d = self.duration(Stage::LeafAgg, node, stages.leaf_aggregate);
                eng.schedule_after(d, node, Ev::SyndromeTx { msg })?;
            }
            Ev::SyndromeTx { msg } => {
                eng.record(node, format!("syndrome_tx m{msg}"));
                let s = self.stamp(eng, node);
                self.up_path[msg].push(s);
                let parent = self.topo.node(node).parent.expect("senders have parents");
                let jitter = match self.topo.node(node).role {
                    Role::Leaf => self.jitter(Stage::Uplink, node, stages.uplink.jitter_ps),
                    _ => 0,
                };
                let bits = self.up_msgs[msg].payload_bits();
                let at = self.up_links[node.index()].as_mut().expect("non-root link").transfer(bits, eng.now(), jitter);
                self.up_msgs[msg].emitted_ps.get_or_insert(s.reading);
                eng.schedule(at, parent, Ev::SyndromeRx { msg })?;
            }
            Ev::SyndromeRx { msg } => {
                eng.record(node, format!("syndrome_rx m{msg}"));
                let s = self.stamp(eng, node);
                self.up_path[msg].push(s);
                if self.topo.node(node).role == Role::Router {
                    let d = SimTime::from_ps(stages.router.processing_one_way().0);
                    eng.schedule_after(d, node, Ev::SyndromeTx { msg })?;
                    return Ok(());
                }
                self.up_msgs[msg].received_ps = Some(s.reading);
                self.bits_received += self.up_msgs[msg].payload_bits();
                self.pending_up -= 1;
                if self.pending_up == 0 {
                    self.critical_up = Some(msg);
                    self.root_stamps.push(s);
                    let d = self.duration(Stage::RootAgg, node, stages.root_aggregate);
                    eng.schedule_after(d, node, Ev::DecodeStart)?;
                }
            }
            Ev::DecodeStart => {
                eng.record(node, "decode_start");
                let s = self.stamp(eng, node);
                self.root_stamps.push(s);
                if let Err(e) = self.decode() {
                    self.failure = Some(e);
                    return Err(SimError::Protocol("decode failed".into()));
                }
                let cfg = &self.pipe.config;
                let spec = StageSpec { mean_ps: cfg.stages.decode.lookup(cfg.distance), jitter_ps: cfg.stages.decode_jitter_ps };
                let d = self.duration(Stage::Decode, node, spec);
                eng.schedule_after(d, node, Ev::DecodeDone)?;
            }
            Ev::DecodeDone => {
                eng.record(node, "decode_done");
                let s = self.stamp(eng, node);
                self.root_stamps.push(s);
                let d = self.duration(Stage::RootDist, node, stages.root_distribute);
                eng.schedule_after(d, node, Ev::Distribute)?;
            }
            Ev::Distribute => {
                eng.record(node, "distribute");
                let s = self.stamp(eng, node);
                self.root_stamps.push(s);
                let corrections = self.corrections.as_ref().expect("decode precedes distribution");
                let faults: Vec<RoutedFault> = corrections
                    .iter()
                    .flat_map(|c| {
                        let g = self.pipe.graph(c.sector);
                        c.faults.iter().map(move |&id| RoutedFault { sector: c.sector, fault: g.edge(id).fault })
                    })
                    .collect();
                self.down_msgs = route_corrections(self.shot, &self.pipe.layout, &self.pipe.map, faults);
                self.down_path = vec![Vec::new(); self.down_msgs.len()];
                for msg in 0..self.down_msgs.len() {
                    self.send_down(eng, node, msg, s)?;
                }
            }
            Ev::CorrectionTx { msg } => {
                let s = self.stamp(eng, node);
                self.send_down(eng, node, msg, s)?;
            }
            Ev::CorrectionRx { msg } => {
                eng.record(node, format!("correction_rx m{msg}"));
                let s = self.stamp(eng, node);
                self.down_path[msg].push(s);
                if self.topo.node(node).role == Role::Router {
                    let d = SimTime::from_ps(stages.router.processing_one_way().1);
                    eng.schedule_after(d, node, Ev::CorrectionTx { msg })?;
                    return Ok(());
                }
                self.down_msgs[msg].received_ps = Some(s.reading);
                let d = self.duration(Stage::LeafDist, node, stages.leaf_distribute);
                eng.schedule_after(d, node, Ev::Applied { msg })?;
            }
            Ev::Applied { msg } => {
                eng.record(node, format!("applied m{msg}"));
                let s = self.stamp(eng, node);
                self.down_path[msg].push(s);
                self.applied.extend(self.down_msgs[msg].faults.iter().copied());
            }
        }
        Ok(())
    }

    fn send_down(&mut self, eng: &mut Engine<Ev>, node: NodeId, msg: usize, s: Stamp) -> Result<(), SimError> {
        eng.record(node, format!("correction_tx m{msg}"));
        self.down_path[msg].push(s);
        let leaf = self.down_msgs[msg].leaf as usize;
        let route = &self.routes[leaf];
        let pos = route.iter().position(|&n| n == node).expect("sender lies on the route");
        let next = route[pos + 1];
        let jitter = match self.topo.node(next).role {
            Role::Leaf => self.jitter(Stage::Downlink, next, self.pipe.config.stages.downlink.jitter_ps),
            _ => 0,
        };
        let bits = self.down_msgs[msg].payload_bits(&self.pipe.map);
        let at = self.down_links[next.index()].as_mut().expect("non-root link").transfer(bits, eng.now(), jitter);
        self.down_msgs[msg].emitted_ps.get_or_insert(s.reading);
        eng.schedule(at, next, Ev::CorrectionRx { msg })?;
        Ok(())
    }

    fn decode(&mut self) -> Result<(), PipelineError> {
        let cfg = &self.pipe.config;
        let syndrome = assemble_syndrome(&self.pipe.map, cfg.distance as usize, cfg.rounds as usize, &self.up_msgs);
        let mut out = [Correction::empty(Sector::X), Correction::empty(Sector::Z)];
        for sector in Sector::BOTH {
            let graph = self.pipe.graph(sector);
            let (c, stats) = decode_with_stats(graph, &syndrome)?;
            if !is_valid(&c, &syndrome, graph) {
                return Err(PipelineError::Invariant(format!("{sector:?} correction does not match its syndrome")));
            }
            self.decode_iterations += stats.growth_iterations;
            out[sector.index()] = c;
        }
        self.corrections = Some(out);
        Ok(())
    }

    fn finish(&self, engine: &Engine<Ev>, faults: &[Vec<FaultId>; 2], sync_residual: u64) -> Result<ShotReport, PipelineError> {
        let cfg = &self.pipe.config;
        let layers = self.pipe.router_layers() as usize;
        let expected_bits = (cfg.distance as u64 * cfg.distance as u64 - 1) * cfg.rounds as u64;
        if self.bits_received != expected_bits {
            return Err(PipelineError::Invariant(format!(
                "root received {} syndrome bits, expected {expected_bits}",
                self.bits_received
            )));
        }
        let corrections = self.corrections.as_ref().expect("decode ran");
        let sent: usize = corrections.iter().map(|c| c.weight()).sum();
        let mut applied = self.applied.clone();
        applied.sort();
        let mut decoded: Vec<RoutedFault> = corrections
            .iter()
            .flat_map(|c| {
                let g = self.pipe.graph(c.sector);
                c.faults.iter().map(move |&id| RoutedFault { sector: c.sector, fault: g.edge(id).fault })
            })
            .collect();
        decoded.sort();
        if applied != decoded {
            return Err(PipelineError::Invariant("corrections applied at leaves differ from decoder output".into()));
        }

        let mut acc = [0i64; 9];
        let mut add = |stage: Stage, from: Stamp, to: Stamp| acc[stage as usize] += to.reading - from.reading;

        let up = &self.up_path[self.critical_up.expect("all syndromes arrived")];
        if up.len() != 3 + 2 * layers {
            return Err(PipelineError::Invariant("uplink path has the wrong number of hops".into()));
        }
        add(Stage::LeafAgg, up[0], up[1]);
        add(Stage::Uplink, up[1], up[2]);
        for k in 0..layers {
            add(Stage::RouterProc, up[2 + 2 * k], up[3 + 2 * k]);
            add(Stage::RouterNet, up[3 + 2 * k], up[4 + 2 * k]);
        }
        let root = &self.root_stamps;
        add(Stage::RootAgg, root[0], root[1]);
        add(Stage::Decode, root[1], root[2]);
        add(Stage::RootDist, root[2], root[3]);

        let critical_down = (0..self.down_path.len())
            .max_by_key(|&m| (self.down_path[m].last().map(|s| s.time), std::cmp::Reverse(m)))
            .expect("at least one leaf");
        let down = &self.down_path[critical_down];
        if down.len() != 3 + 2 * layers {
            return Err(PipelineError::Invariant("downlink path has the wrong number of hops".into()));
        }
        for k in 0..layers {
            add(Stage::RouterNet, down[2 * k], down[2 * k + 1]);
            add(Stage::RouterProc, down[2 * k + 1], down[2 * k + 2]);
        }
        add(Stage::Downlink, down[2 * layers], down[2 * layers + 1]);
        add(Stage::LeafDist, down[2 * layers + 1], down[2 * layers + 2]);

        let intervals: Vec<StageInterval> = Stage::active(layers as u32)
            .iter()
            .map(|&stage| StageInterval { stage, ps: acc[stage as usize] })
            .collect();
        let end_to_end_ps = down[2 * layers + 2].reading - up[0].reading;

        let mut sector_failures = [false; 2];
        for c in corrections {
            let g = self.pipe.graph(c.sector);
            sector_failures[c.sector.index()] = residual_crosses_cut(g, &faults[c.sector.index()], &c.faults);
        }
        Ok(ShotReport {
            shot: self.shot,
            intervals,
            end_to_end_ps,
            valid: true,
            logical_failure: cfg.ler_basis.failed(sector_failures),
            sector_failures,
            decode_iterations: self.decode_iterations,
            syndrome_bits_received: self.bits_received,
            correction_faults: sent as u64,
            sync_residual_ps: sync_residual,
            trace_hash: engine.trace_hash(),
        })
    }
}
