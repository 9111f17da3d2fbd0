use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::code_model::{CodeLayout, Fault, Sector, SyndromeRounds};

/// Contiguous blocks of physical qubits, one per leaf board. Data qubits
/// come first, then ancillas in syndrome bit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafMap {
    qubits_per_leaf: usize,
    total_qubits: usize,
    data_qubits: usize,
}

pub fn assign_qubits_to_leaves(layout: &CodeLayout, qubits_per_leaf: usize) -> LeafMap {
    assert!(qubits_per_leaf >= 1, "a leaf controls at least one qubit");
    LeafMap { qubits_per_leaf, total_qubits: layout.total_qubits(), data_qubits: layout.data_qubit_count() }
}

impl LeafMap {
    pub fn leaf_count(&self) -> usize {
        self.total_qubits.div_ceil(self.qubits_per_leaf)
    }

    pub fn qubits_per_leaf(&self) -> usize {
        self.qubits_per_leaf
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn leaf_of(&self, qubit: usize) -> usize {
        qubit / self.qubits_per_leaf
    }

    pub fn qubits(&self, leaf: usize) -> Range<usize> {
        let start = leaf * self.qubits_per_leaf;
        start..(start + self.qubits_per_leaf).min(self.total_qubits)
    }

    /// Syndrome bits (row positions) measured by ancillas on `leaf`.
    pub fn syndrome_bits(&self, leaf: usize) -> Range<usize> {
        let q = self.qubits(leaf);
        q.start.max(self.data_qubits) - self.data_qubits..q.end.max(self.data_qubits) - self.data_qubits
    }

    /// Leaf owning the physical qubit a fault acts on.
    pub fn owner(&self, layout: &CodeLayout, sector: Sector, fault: Fault) -> usize {
        match fault {
            Fault::Data { qubit, .. } => self.leaf_of(qubit),
            Fault::Measurement { stabilizer, .. } => {
                self.leaf_of(layout.ancilla_qubit(layout.sector_offset(sector) + stabilizer))
            }
        }
    }
}

/// One leaf's ancilla outcomes for a range of rounds, round-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeMessage {
    pub shot: u64,
    pub leaf: u32,
    pub rounds: Range<u32>,
    pub bits: Vec<bool>,
    /// Leaf timer reading at send; `None` for rounds streamed before the timed window.
    pub emitted_ps: Option<i64>,
    /// Root timer reading at arrival.
    pub received_ps: Option<i64>,
}

impl SyndromeMessage {
    pub fn from_syndrome(shot: u64, leaf: u32, map: &LeafMap, syndrome: &SyndromeRounds, rounds: Range<u32>) -> Self {
        let cols = map.syndrome_bits(leaf as usize);
        let mut bits = Vec::with_capacity(cols.len() * rounds.len());
        for t in rounds.clone() {
            bits.extend_from_slice(&syndrome.row(t as usize)[cols.clone()]);
        }
        SyndromeMessage { shot, leaf, rounds, bits, emitted_ps: None, received_ps: None }
    }

    pub fn payload_bits(&self) -> u64 {
        self.bits.len() as u64
    }
}

/// Rebuilds the full syndrome from the messages of every leaf.
pub fn assemble_syndrome(map: &LeafMap, distance: usize, rounds: usize, messages: &[SyndromeMessage]) -> SyndromeRounds {
    let mut out = SyndromeRounds::zeros(distance, rounds);
    for m in messages {
        let cols = map.syndrome_bits(m.leaf as usize);
        let mut it = m.bits.iter();
        for t in m.rounds.clone() {
            for c in cols.clone() {
                out.set(t as usize, c, *it.next().expect("message bit count matches its shape"));
            }
        }
    }
    out
}

/// One identified fault as routed to a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoutedFault {
    pub sector: Sector,
    pub fault: Fault,
}

/// Error bits for one leaf: the faults of the decoder output that act on its qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionMessage {
    pub shot: u64,
    pub leaf: u32,
    pub faults: Vec<RoutedFault>,
    pub emitted_ps: Option<i64>,
    pub received_ps: Option<i64>,
}

impl CorrectionMessage {
    /// One flip flag per local qubit and Pauli type, so a leaf message is
    /// `2 * qubits_per_leaf` bits regardless of content.
    pub fn payload_bits(&self, map: &LeafMap) -> u64 {
        2 * map.qubits(self.leaf as usize).len() as u64
    }
}

/// Splits decoder output into per-leaf correction messages, each fault to its owner.
pub fn route_corrections(
    shot: u64,
    layout: &CodeLayout,
    map: &LeafMap,
    faults: impl IntoIterator<Item = RoutedFault>,
) -> Vec<CorrectionMessage> {
    let mut out: Vec<CorrectionMessage> = (0..map.leaf_count() as u32)
        .map(|leaf| CorrectionMessage { shot, leaf, faults: Vec::new(), emitted_ps: None, received_ps: None })
        .collect();
    for f in faults {
        out[map.owner(layout, f.sector, f.fault)].faults.push(f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::build_layout;

    #[test]
    fn leaf_counts() {
        let leaves = |d, per| assign_qubits_to_leaves(&build_layout(d).unwrap(), per).leaf_count();
        assert_eq!(leaves(3, 14), 2);
        assert_eq!(leaves(17, 14), 42);
        assert_eq!(leaves(1, 14), 1);
        assert_eq!(leaves(3, 1), 17);
    }

    #[test]
    fn every_qubit_has_one_leaf() {
        for d in [1, 3, 5, 7] {
            let layout = build_layout(d).unwrap();
            for per in [1, 5, 14, 100] {
                let map = assign_qubits_to_leaves(&layout, per);
                let mut seen = vec![0; layout.total_qubits()];
                for leaf in 0..map.leaf_count() {
                    for q in map.qubits(leaf) {
                        seen[q] += 1;
                        assert_eq!(map.leaf_of(q), leaf);
                    }
                }
                assert!(seen.iter().all(|&c| c == 1));
                let bits: usize = (0..map.leaf_count()).map(|l| map.syndrome_bits(l).len()).sum();
                assert_eq!(bits, layout.syndrome_bits_per_round());
            }
        }
    }

    #[test]
    fn d3_split() {
        let layout = build_layout(3).unwrap();
        let map = assign_qubits_to_leaves(&layout, 14);
        assert_eq!(map.syndrome_bits(0), 0..5);
        assert_eq!(map.syndrome_bits(1), 5..8);
    }

    #[test]
    fn messages_reassemble() {
        let layout = build_layout(5).unwrap();
        let map = assign_qubits_to_leaves(&layout, 14);
        let mut s = SyndromeRounds::for_layout(&layout, 4);
        for (i, t) in (0..4).flat_map(|t| (0..24).map(move |b| (t, b))).enumerate() {
            s.set(t.0, t.1, i % 3 == 0);
        }
        let mut msgs = Vec::new();
        for leaf in 0..map.leaf_count() as u32 {
            msgs.push(SyndromeMessage::from_syndrome(0, leaf, &map, &s, 0..3));
            msgs.push(SyndromeMessage::from_syndrome(0, leaf, &map, &s, 3..4));
        }
        let total: u64 = msgs.iter().map(|m| m.payload_bits()).sum();
        assert_eq!(total, 24 * 4);
        assert_eq!(assemble_syndrome(&map, 5, 4, &msgs), s);
    }
}
