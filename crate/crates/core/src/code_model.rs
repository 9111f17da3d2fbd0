//! Rotated surface code layout, space-time decoding graphs, and
//! phenomenological noise.
//!
//! Coordinates: data qubit `(row, col)` with `0 <= row, col < d` has index
//! `row * d + col`. Stabilizers sit on plaquette corners `(i, j)` with
//! `0 <= i, j <= d` and touch the data qubits at `(i-1..=i, j-1..=j)` that lie
//! inside the grid. X-type plaquettes have `i + j` even and fill the top and
//! bottom boundaries; Z-type plaquettes have `i + j` odd and fill the left and
//! right boundaries. Both lists are ordered row-major by corner coordinate.
//!
//! A sector is named after the stabilizer type whose outcomes it decodes: the
//! X sector sees Z errors, the Z sector sees X errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, StreamKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("code distance must be odd and at least 1, got {0}")]
    InvalidDistance(usize),
    #[error("a decoding graph needs at least one round")]
    NoRounds,
    #[error("error rate {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("fault {0:?} is not an edge of the decoding graph")]
    UnknownFault(Fault),
    #[error("fault id {0} out of range for a graph with {1} edges")]
    UnknownFaultId(u32, usize),
    #[error("pattern belongs to sector {pattern:?}, graph to {graph:?}")]
    SectorMismatch { pattern: Sector, graph: Sector },
    #[error("syndrome shape {got:?} does not match expected {expected:?} (distance, rounds)")]
    ShapeMismatch {
        got: (usize, usize),
        expected: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    X,
    Z,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::X, Sector::Z];

    pub fn index(self) -> usize {
        match self {
            Sector::X => 0,
            Sector::Z => 1,
        }
    }
}

/// One stabilizer (ancilla) of the layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilizer {
    pub corner: (usize, usize),
    /// Incident data qubit indices, ascending. Two on the boundary, four in the bulk.
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeLayout {
    distance: usize,
    stabilizers: [Vec<Stabilizer>; 2],
    /// Undetectable error chain of each sector (a representative logical operator).
    logical_chain: [Vec<usize>; 2],
    /// Support of the conjugate logical; residuals crossing it an odd number
    /// of times are logical failures.
    logical_cut: [Vec<usize>; 2],
}

/// Builds the rotated surface code of odd `distance`.
pub fn build_layout(distance: usize) -> Result<CodeLayout, CodeError> {
    if distance == 0 || distance.is_multiple_of(2) {
        return Err(CodeError::InvalidDistance(distance));
    }
    let d = distance;
    let mut x = Vec::new();
    let mut z = Vec::new();
    for i in 0..=d {
        for j in 0..=d {
            let x_type = (i + j) % 2 == 0;
            let bulk = (1..d).contains(&i) && (1..d).contains(&j);
            let keep = bulk
                || (x_type && (i == 0 || i == d) && (1..d).contains(&j))
                || (!x_type && (j == 0 || j == d) && (1..d).contains(&i));
            if !keep {
                continue;
            }
            let mut qubits = Vec::with_capacity(4);
            for r in i.saturating_sub(1)..=i.min(d - 1) {
                for c in j.saturating_sub(1)..=j.min(d - 1) {
                    qubits.push(r * d + c);
                }
            }
            let stab = Stabilizer { corner: (i, j), qubits };
            if x_type {
                x.push(stab);
            } else {
                z.push(stab);
            }
        }
    }
    let row0: Vec<usize> = (0..d).collect();
    let col0: Vec<usize> = (0..d).map(|r| r * d).collect();
    Ok(CodeLayout {
        distance: d,
        stabilizers: [x, z],
        // Z errors along a row commute with every X check; X errors along a column with every Z check.
        logical_chain: [row0.clone(), col0.clone()],
        logical_cut: [col0, row0],
    })
}

impl CodeLayout {
    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn data_qubit_count(&self) -> usize {
        self.distance * self.distance
    }

    pub fn stabilizer_count_per_sector(&self) -> usize {
        self.stabilizers[0].len()
    }

    /// Syndrome bits produced per round over both sectors.
    pub fn syndrome_bits_per_round(&self) -> usize {
        self.stabilizers[0].len() + self.stabilizers[1].len()
    }

    /// Data plus ancilla qubits.
    pub fn total_qubits(&self) -> usize {
        self.data_qubit_count() + self.syndrome_bits_per_round()
    }

    pub fn stabilizers(&self, sector: Sector) -> &[Stabilizer] {
        &self.stabilizers[sector.index()]
    }

    pub fn logical_chain(&self, sector: Sector) -> &[usize] {
        &self.logical_chain[sector.index()]
    }

    pub fn logical_cut(&self, sector: Sector) -> &[usize] {
        &self.logical_cut[sector.index()]
    }

    /// Offset of `sector`'s bits within one syndrome row.
    pub fn sector_offset(&self, sector: Sector) -> usize {
        match sector {
            Sector::X => 0,
            Sector::Z => self.stabilizers[0].len(),
        }
    }

    /// Physical index of the ancilla measuring syndrome bit `bit` of a row.
    /// Ancillas follow the data qubits in syndrome bit order.
    pub fn ancilla_qubit(&self, bit: usize) -> usize {
        self.data_qubit_count() + bit
    }

    /// Stabilizers of `sector` touching data qubit `q`, ascending.
    pub fn incident_stabilizers(&self, sector: Sector, q: usize) -> Vec<usize> {
        self.stabilizers(sector)
            .iter()
            .enumerate()
            .filter(|(_, s)| s.qubits.contains(&q))
            .map(|(i, _)| i)
            .collect()
    }

    /// Debug dump, one record per line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let d = self.distance;
        let _ = writeln!(out, "layout distance={d} data={} total={}", self.data_qubit_count(), self.total_qubits());
        for q in 0..self.data_qubit_count() {
            let _ = writeln!(out, "data id={q} row={} col={}", q / d, q % d);
        }
        for sector in Sector::BOTH {
            for (i, s) in self.stabilizers(sector).iter().enumerate() {
                let qs: Vec<String> = s.qubits.iter().map(|q| q.to_string()).collect();
                let _ = writeln!(
                    out,
                    "stabilizer sector={sector:?} id={i} corner={},{} qubits={}",
                    s.corner.0,
                    s.corner.1,
                    qs.join(",")
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Spacelike,
    Timelike,
}

/// Elementary fault mechanism behind one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Fault {
    /// Data qubit flipped during `round`.
    Data { qubit: usize, round: usize },
    /// Outcome of `stabilizer` misreported in `round`.
    Measurement { stabilizer: usize, round: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaultId(pub u32);

impl FaultId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: u32,
    /// `None` is the virtual boundary vertex.
    pub b: Option<u32>,
    pub kind: EdgeKind,
    pub fault: Fault,
}

/// Space-time graph of one sector: vertex `round * S + s` is the detector of
/// stabilizer `s` in `round`.
#[derive(Debug, Clone)]
pub struct DecodingGraph {
    distance: usize,
    sector: Sector,
    rounds: usize,
    stabilizers: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<FaultId>>,
    /// Spacelike fault id of data qubit `q` in round 0; `None` if `q` touches no check.
    data_edge: Vec<Option<u32>>,
    spacelike_per_round: usize,
    logical_cut: Vec<bool>,
    logical_chain: Vec<usize>,
}

pub fn build_decoding_graph(
    layout: &CodeLayout,
    sector: Sector,
    rounds: usize,
) -> Result<DecodingGraph, CodeError> {
    if rounds == 0 {
        return Err(CodeError::NoRounds);
    }
    let s_count = layout.stabilizer_count_per_sector();
    let n_data = layout.data_qubit_count();

    let mut touching: Vec<Vec<u32>> = vec![Vec::new(); n_data];
    for (si, stab) in layout.stabilizers(sector).iter().enumerate() {
        for &q in &stab.qubits {
            touching[q].push(si as u32);
        }
    }

    let mut data_edge = vec![None; n_data];
    let mut space_template = Vec::new();
    for (q, stabs) in touching.iter().enumerate() {
        let (a, b) = match stabs.as_slice() {
            [] => continue,
            [a] => (*a, None),
            [a, b] => (*a.min(b), Some(*a.max(b))),
            _ => unreachable!("data qubit touches more than two checks of one sector"),
        };
        data_edge[q] = Some(space_template.len() as u32);
        space_template.push((q, a, b));
    }

    let mut edges = Vec::with_capacity(space_template.len() * rounds + s_count * (rounds - 1));
    for t in 0..rounds {
        let base = (t * s_count) as u32;
        for &(q, a, b) in &space_template {
            edges.push(Edge {
                a: base + a,
                b: b.map(|b| base + b),
                kind: EdgeKind::Spacelike,
                fault: Fault::Data { qubit: q, round: t },
            });
        }
    }
    for t in 0..rounds.saturating_sub(1) {
        for s in 0..s_count {
            edges.push(Edge {
                a: (t * s_count + s) as u32,
                b: Some(((t + 1) * s_count + s) as u32),
                kind: EdgeKind::Timelike,
                fault: Fault::Measurement { stabilizer: s, round: t },
            });
        }
    }

    let mut adjacency = vec![Vec::new(); s_count * rounds];
    for (id, e) in edges.iter().enumerate() {
        adjacency[e.a as usize].push(FaultId(id as u32));
        if let Some(b) = e.b {
            adjacency[b as usize].push(FaultId(id as u32));
        }
    }

    let mut logical_cut = vec![false; n_data];
    for &q in layout.logical_cut(sector) {
        logical_cut[q] = true;
    }

    Ok(DecodingGraph {
        distance: layout.distance(),
        sector,
        rounds,
        stabilizers: s_count,
        edges,
        adjacency,
        data_edge,
        spacelike_per_round: space_template.len(),
        logical_cut,
        logical_chain: layout.logical_chain(sector).to_vec(),
    })
}

impl DecodingGraph {
    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn stabilizers_per_round(&self) -> usize {
        self.stabilizers
    }

    pub fn vertex_count(&self) -> usize {
        self.stabilizers * self.rounds
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: FaultId) -> &Edge {
        &self.edges[id.index()]
    }

    /// Edges incident to vertex `v`, ascending by fault id.
    pub fn incident(&self, v: u32) -> &[FaultId] {
        &self.adjacency[v as usize]
    }

    pub fn count_kind(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn vertex(&self, stabilizer: usize, round: usize) -> u32 {
        (round * self.stabilizers + stabilizer) as u32
    }

    pub fn fault_id(&self, fault: Fault) -> Result<FaultId, CodeError> {
        let id = match fault {
            Fault::Data { qubit, round } if round < self.rounds && qubit < self.data_edge.len() => self.data_edge
                [qubit]
                .map(|local| round * self.spacelike_per_round + local as usize),
            Fault::Measurement { stabilizer, round }
                if stabilizer < self.stabilizers && round + 1 < self.rounds =>
            {
                Some(self.rounds * self.spacelike_per_round + round * self.stabilizers + stabilizer)
            }
            _ => None,
        };
        id.map(|i| FaultId(i as u32)).ok_or(CodeError::UnknownFault(fault))
    }

    pub fn check_fault_id(&self, id: FaultId) -> Result<(), CodeError> {
        if id.index() < self.edges.len() {
            Ok(())
        } else {
            Err(CodeError::UnknownFaultId(id.0, self.edges.len()))
        }
    }

    /// Whether data qubit `q` lies on the conjugate logical cut.
    pub fn on_logical_cut(&self, q: usize) -> bool {
        self.logical_cut[q]
    }

    pub fn logical_chain(&self) -> &[usize] {
        &self.logical_chain
    }

    /// Debug dump, one record per line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "graph sector={:?} distance={} rounds={} vertices={} edges={}",
            self.sector,
            self.distance,
            self.rounds,
            self.vertex_count(),
            self.edge_count()
        );
        for v in 0..self.vertex_count() {
            let _ = writeln!(out, "vertex id={v} stabilizer={} round={}", v % self.stabilizers, v / self.stabilizers);
        }
        for (id, e) in self.edges.iter().enumerate() {
            let b = e.b.map_or_else(|| "BOUNDARY".to_string(), |b| b.to_string());
            let _ = writeln!(out, "edge id={id} a={} b={b} kind={:?} fault={:?}", e.a, e.kind, e.fault);
        }
        out
    }
}

/// Faults of one sector for one shot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ErrorPattern {
    pub sector: Option<Sector>,
    pub data_faults: BTreeSet<(usize, usize)>,
    pub measurement_faults: BTreeSet<(usize, usize)>,
    pub rng_seed: u64,
}

impl ErrorPattern {
    pub fn empty(sector: Sector) -> Self {
        ErrorPattern { sector: Some(sector), ..Default::default() }
    }

    pub fn from_fault_ids(graph: &DecodingGraph, ids: &[FaultId], rng_seed: u64) -> Result<Self, CodeError> {
        let mut pattern = ErrorPattern { sector: Some(graph.sector()), rng_seed, ..Default::default() };
        for &id in ids {
            graph.check_fault_id(id)?;
            pattern.toggle(graph.edge(id).fault);
        }
        Ok(pattern)
    }

    /// Adds `fault`, or removes it if already present.
    pub fn toggle(&mut self, fault: Fault) {
        let (set, key) = match fault {
            Fault::Data { qubit, round } => (&mut self.data_faults, (qubit, round)),
            Fault::Measurement { stabilizer, round } => (&mut self.measurement_faults, (stabilizer, round)),
        };
        if !set.remove(&key) {
            set.insert(key);
        }
    }

    pub fn faults(&self) -> impl Iterator<Item = Fault> + '_ {
        self.data_faults
            .iter()
            .map(|&(qubit, round)| Fault::Data { qubit, round })
            .chain(
                self.measurement_faults
                    .iter()
                    .map(|&(stabilizer, round)| Fault::Measurement { stabilizer, round }),
            )
    }

    pub fn weight(&self) -> usize {
        self.data_faults.len() + self.measurement_faults.len()
    }

    /// Fault ids on `graph`, ascending.
    pub fn fault_ids(&self, graph: &DecodingGraph) -> Result<Vec<FaultId>, CodeError> {
        if let Some(sector) = self.sector {
            if sector != graph.sector() {
                return Err(CodeError::SectorMismatch { pattern: sector, graph: graph.sector() });
            }
        }
        let mut ids = self.faults().map(|f| graph.fault_id(f)).collect::<Result<Vec<_>, _>>()?;
        ids.sort_unstable();
        Ok(ids)
    }

    /// Symmetric difference.
    pub fn xor(&self, other: &ErrorPattern) -> ErrorPattern {
        let mut out = self.clone();
        for f in other.faults() {
            out.toggle(f);
        }
        out
    }
}

/// Samples independent faults on every edge of `graph` with probability `p`.
/// Uses stream `(shot 0, sector)` of `seed`.
pub fn sample_errors(graph: &DecodingGraph, p: f64, seed: u64) -> Result<ErrorPattern, CodeError> {
    sample_shot_errors(graph, p, seed, 0)
}

pub fn sample_shot_errors(graph: &DecodingGraph, p: f64, seed: u64, shot: u64) -> Result<ErrorPattern, CodeError> {
    let ids = sample_fault_ids(graph, p, seed, shot)?;
    ErrorPattern::from_fault_ids(graph, &ids, seed)
}

/// Faulted edge ids for one shot, ascending.
///
/// Gaps between faults are drawn geometrically, which is distributed exactly
/// like one Bernoulli(p) draw per edge but costs O(faults) instead of O(edges).
pub fn sample_fault_ids(graph: &DecodingGraph, p: f64, seed: u64, shot: u64) -> Result<Vec<FaultId>, CodeError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CodeError::InvalidProbability(p));
    }
    let n = graph.edge_count();
    if p == 0.0 || n == 0 {
        return Ok(Vec::new());
    }
    if p == 1.0 {
        return Ok((0..n as u32).map(FaultId).collect());
    }
    let mut rng = rng::stream(seed, StreamKey::Noise { shot, sector: graph.sector() });
    let log_q = (1.0 - p).ln();
    let mut out = Vec::new();
    let mut next = 0usize;
    loop {
        let u: f64 = rng.gen();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (n - next) as f64 {
            break;
        }
        next += gap as usize;
        out.push(FaultId(next as u32));
        next += 1;
        if next >= n {
            break;
        }
    }
    Ok(out)
}

/// Detector outcomes of a shot over both sectors, `rounds x (d^2 - 1)`,
/// X-sector bits first in every row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyndromeRounds {
    distance: usize,
    rounds: usize,
    sector_split: usize,
    bits: Vec<bool>,
}

impl SyndromeRounds {
    pub fn zeros(distance: usize, rounds: usize) -> Self {
        let row = distance * distance - 1;
        SyndromeRounds { distance, rounds, sector_split: row / 2, bits: vec![false; row * rounds] }
    }

    pub fn for_layout(layout: &CodeLayout, rounds: usize) -> Self {
        Self::zeros(layout.distance(), rounds)
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn row_len(&self) -> usize {
        2 * self.sector_split
    }

    pub fn sector_split(&self) -> usize {
        self.sector_split
    }

    pub fn get(&self, round: usize, bit: usize) -> bool {
        self.bits[round * self.row_len() + bit]
    }

    pub fn set(&mut self, round: usize, bit: usize, value: bool) {
        let row = self.row_len();
        self.bits[round * row + bit] = value;
    }

    pub fn row(&self, round: usize) -> &[bool] {
        let row = self.row_len();
        &self.bits[round * row..(round + 1) * row]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_zero(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn sector_bit(&self, sector: Sector, s: usize) -> usize {
        match sector {
            Sector::X => s,
            Sector::Z => self.sector_split + s,
        }
    }

    /// Detector flags of one sector in graph vertex order.
    pub fn sector_defects(&self, sector: Sector) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.sector_split * self.rounds);
        for t in 0..self.rounds {
            for s in 0..self.sector_split {
                out.push(self.get(t, self.sector_bit(sector, s)));
            }
        }
        out
    }

    pub fn set_sector_defects(&mut self, sector: Sector, defects: &[bool]) {
        assert_eq!(defects.len(), self.sector_split * self.rounds);
        for (v, &flag) in defects.iter().enumerate() {
            let (t, s) = (v / self.sector_split, v % self.sector_split);
            let bit = self.sector_bit(sector, s);
            self.set(t, bit, flag);
        }
    }

    pub fn xor_assign(&mut self, other: &SyndromeRounds) {
        assert_eq!((self.distance, self.rounds), (other.distance, other.rounds));
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= *b;
        }
    }

    /// Row `round` packed little-endian into 64-bit words.
    pub fn packed_row(&self, round: usize) -> Vec<u64> {
        pack_bits(self.row(round))
    }

    /// Checks that this syndrome fits `graph`.
    pub fn check_shape(&self, graph: &DecodingGraph) -> Result<(), CodeError> {
        if self.distance != graph.distance() || self.rounds != graph.rounds() {
            return Err(CodeError::ShapeMismatch {
                got: (self.distance, self.rounds),
                expected: (graph.distance(), graph.rounds()),
            });
        }
        Ok(())
    }
}

pub fn pack_bits(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64)
        .map(|chunk| chunk.iter().enumerate().fold(0u64, |w, (i, &b)| w | ((b as u64) << i)))
        .collect()
}

/// Vertex parities produced by a set of faulted edges; the boundary absorbs silently.
pub fn defects_of(graph: &DecodingGraph, ids: &[FaultId]) -> Result<Vec<bool>, CodeError> {
    let mut defects = vec![false; graph.vertex_count()];
    for &id in ids {
        graph.check_fault_id(id)?;
        let e = graph.edge(id);
        defects[e.a as usize] ^= true;
        if let Some(b) = e.b {
            defects[b as usize] ^= true;
        }
    }
    Ok(defects)
}

/// Syndrome of `pattern`; the other sector's bits stay zero.
pub fn syndrome_of(pattern: &ErrorPattern, graph: &DecodingGraph) -> Result<SyndromeRounds, CodeError> {
    let ids = pattern.fault_ids(graph)?;
    syndrome_of_ids(graph, &ids)
}

pub fn syndrome_of_ids(graph: &DecodingGraph, ids: &[FaultId]) -> Result<SyndromeRounds, CodeError> {
    let defects = defects_of(graph, ids)?;
    let mut syndrome = SyndromeRounds::zeros(graph.distance(), graph.rounds());
    syndrome.set_sector_defects(graph.sector(), &defects);
    Ok(syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(d: usize, sector: Sector, rounds: usize) -> DecodingGraph {
        build_decoding_graph(&build_layout(d).unwrap(), sector, rounds).unwrap()
    }

    #[test]
    fn layout_counts() {
        for (d, total, bits) in [(1, 1, 0), (3, 17, 8), (5, 49, 24), (17, 577, 288), (21, 881, 440)] {
            let layout = build_layout(d).unwrap();
            assert_eq!(layout.total_qubits(), total, "d={d}");
            assert_eq!(layout.syndrome_bits_per_round(), bits, "d={d}");
            assert_eq!(layout.stabilizers(Sector::X).len(), layout.stabilizers(Sector::Z).len());
        }
    }

    #[test]
    fn rejects_even_and_zero_distance() {
        assert_eq!(build_layout(0), Err(CodeError::InvalidDistance(0)));
        assert_eq!(build_layout(4), Err(CodeError::InvalidDistance(4)));
    }

    #[test]
    fn checks_touch_each_qubit_at_most_twice_per_sector() {
        for d in [3, 5, 7, 9] {
            let layout = build_layout(d).unwrap();
            for sector in Sector::BOTH {
                for q in 0..layout.data_qubit_count() {
                    let n = layout.incident_stabilizers(sector, q).len();
                    assert!((1..=2).contains(&n), "d={d} q={q} sector={sector:?}");
                }
                for stab in layout.stabilizers(sector) {
                    assert!(stab.qubits.len() == 2 || stab.qubits.len() == 4);
                    if stab.qubits.len() == 4 {
                        let (i, j) = stab.corner;
                        let expect = vec![(i - 1) * d + j - 1, (i - 1) * d + j, i * d + j - 1, i * d + j];
                        assert_eq!(stab.qubits, expect);
                    }
                }
            }
        }
    }

    #[test]
    fn checks_of_opposite_type_overlap_evenly() {
        // X and Z stabilizers must commute.
        for d in [3, 5, 7] {
            let layout = build_layout(d).unwrap();
            for x in layout.stabilizers(Sector::X) {
                for z in layout.stabilizers(Sector::Z) {
                    let overlap = x.qubits.iter().filter(|q| z.qubits.contains(q)).count();
                    assert_eq!(overlap % 2, 0);
                }
            }
        }
    }

    #[test]
    fn logical_chain_is_undetectable_and_crosses_cut_once() {
        for d in [3, 5, 7] {
            let layout = build_layout(d).unwrap();
            for sector in Sector::BOTH {
                let chain = layout.logical_chain(sector);
                for stab in layout.stabilizers(sector) {
                    let overlap = stab.qubits.iter().filter(|q| chain.contains(q)).count();
                    assert_eq!(overlap % 2, 0);
                }
                let other = match sector {
                    Sector::X => Sector::Z,
                    Sector::Z => Sector::X,
                };
                let cut = layout.logical_cut(sector);
                for stab in layout.stabilizers(other) {
                    let overlap = stab.qubits.iter().filter(|q| cut.contains(q)).count();
                    assert_eq!(overlap % 2, 0, "cut must commute with the sector's stabilizer group");
                }
                let crossing = chain.iter().filter(|q| cut.contains(q)).count();
                assert_eq!(crossing, 1);
            }
        }
    }

    #[test]
    fn graph_sizes() {
        let g = graph(3, Sector::X, 3);
        assert_eq!(g.vertex_count(), 12);
        assert_eq!(g.count_kind(EdgeKind::Timelike), 8);
        assert_eq!(g.count_kind(EdgeKind::Spacelike), 27);
        assert_eq!(graph(3, Sector::Z, 1).count_kind(EdgeKind::Timelike), 0);
        assert_eq!(graph(5, Sector::X, 5).vertex_count(), 60);
        assert_eq!(graph(1, Sector::X, 4).edge_count(), 0);
    }

    #[test]
    fn fault_ids_round_trip() {
        let g = graph(5, Sector::Z, 3);
        for (id, e) in g.edges().iter().enumerate() {
            assert_eq!(g.fault_id(e.fault).unwrap(), FaultId(id as u32));
        }
        assert!(g.fault_id(Fault::Measurement { stabilizer: 0, round: 2 }).is_err());
        assert!(g.fault_id(Fault::Data { qubit: 99, round: 0 }).is_err());
    }

    #[test]
    fn timelike_edges_join_consecutive_rounds() {
        let g = graph(3, Sector::Z, 4);
        for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Timelike) {
            assert_eq!(e.b.unwrap(), e.a + g.stabilizers_per_round() as u32);
        }
    }

    #[test]
    fn sampling_extremes_and_determinism() {
        let g = graph(3, Sector::X, 3);
        assert_eq!(sample_errors(&g, 0.0, 1).unwrap().weight(), 0);
        assert_eq!(sample_errors(&g, 1.0, 1).unwrap().weight(), g.edge_count());
        let a = sample_errors(&g, 0.2, 99).unwrap();
        let b = sample_errors(&g, 0.2, 99).unwrap();
        assert_eq!(a, b);
        assert!(sample_errors(&g, 1.5, 1).is_err());
    }

    #[test]
    fn single_faults_flip_one_or_two_bits() {
        let g = graph(3, Sector::X, 3);
        let empty = syndrome_of(&ErrorPattern::empty(Sector::X), &g).unwrap();
        assert!(empty.is_zero());
        for (id, e) in g.edges().iter().enumerate() {
            let s = syndrome_of_ids(&g, &[FaultId(id as u32)]).unwrap();
            match (e.kind, e.b) {
                (EdgeKind::Spacelike, Some(_)) => {
                    let Fault::Data { round, .. } = e.fault else { unreachable!() };
                    assert_eq!(s.weight(), 2);
                    assert_eq!(s.row(round).iter().filter(|&&b| b).count(), 2);
                }
                (EdgeKind::Spacelike, None) => assert_eq!(s.weight(), 1),
                (EdgeKind::Timelike, _) => {
                    let Fault::Measurement { stabilizer, round } = e.fault else { unreachable!() };
                    assert_eq!(s.weight(), 2);
                    assert!(s.get(round, stabilizer) && s.get(round + 1, stabilizer));
                }
            }
        }
    }

    #[test]
    fn z_sector_bits_follow_x_bits() {
        let layout = build_layout(3).unwrap();
        let g = graph(3, Sector::Z, 1);
        let s = syndrome_of_ids(&g, &[FaultId(0)]).unwrap();
        assert!(s.row(0)[..layout.sector_offset(Sector::Z)].iter().all(|b| !b));
        assert!(s.weight() > 0);
    }

    #[test]
    fn unknown_fault_rejected() {
        let g = graph(3, Sector::X, 2);
        let mut p = ErrorPattern::empty(Sector::X);
        p.toggle(Fault::Measurement { stabilizer: 0, round: 1 });
        assert!(matches!(syndrome_of(&p, &g), Err(CodeError::UnknownFault(_))));
        assert!(syndrome_of(&ErrorPattern::empty(Sector::Z), &g).is_err());
    }

    #[test]
    fn records_have_one_line_per_item() {
        let g = graph(3, Sector::X, 2);
        let lines = g.to_records().lines().count();
        assert_eq!(lines, 1 + g.vertex_count() + g.edge_count());
        assert!(build_layout(3).unwrap().to_records().contains("stabilizer sector=Z id=3"));
    }

    #[test]
    fn pack_bits_little_endian() {
        let mut bits = vec![false; 70];
        bits[0] = true;
        bits[65] = true;
        assert_eq!(pack_bits(&bits), vec![1, 2]);
    }
}
