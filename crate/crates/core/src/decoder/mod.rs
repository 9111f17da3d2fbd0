//! Union-find decoding of one sector, plus an independent minimum-weight
//! oracle for small instances.

mod oracle;
mod union_find;

pub use oracle::{oracle_decode, oracle_min_weight, OracleCap, DEFAULT_ORACLE_CAP};
pub use union_find::{decode, decode_defects, decode_with_stats, DecodeStats};

use thiserror::Error;

use crate::code_model::{defects_of, CodeError, DecodingGraph, ErrorPattern, FaultId, Sector, SyndromeRounds};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("defect vector has {got} entries, graph has {expected} vertices")]
    DefectCount { got: usize, expected: usize },
    #[error("an odd cluster can neither grow nor reach the boundary")]
    Stalled,
    #[error("instance with {edges} edges and {defects} defects exceeds the oracle cap")]
    OracleCap { edges: usize, defects: usize },
    #[error("correction does not reproduce the syndrome")]
    InvalidCorrection,
}

/// Selected fault ids of one sector, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Correction {
    pub sector: Sector,
    pub faults: Vec<FaultId>,
}

impl Correction {
    pub fn empty(sector: Sector) -> Self {
        Correction { sector, faults: Vec::new() }
    }

    pub fn weight(&self) -> usize {
        self.faults.len()
    }
}

/// True iff the correction's edge parities reproduce the graph's sector of `syndrome` exactly.
pub fn is_valid(correction: &Correction, syndrome: &SyndromeRounds, graph: &DecodingGraph) -> bool {
    if correction.sector != graph.sector() || syndrome.check_shape(graph).is_err() {
        return false;
    }
    match defects_of(graph, &correction.faults) {
        Ok(flipped) => flipped == syndrome.sector_defects(graph.sector()),
        Err(_) => false,
    }
}

/// True iff the residual `pattern + correction` is a nontrivial logical operator.
pub fn is_logical_failure(
    graph: &DecodingGraph,
    pattern: &ErrorPattern,
    correction: &Correction,
) -> Result<bool, DecodeError> {
    let ids = pattern.fault_ids(graph)?;
    let syndrome = crate::code_model::syndrome_of_ids(graph, &ids)?;
    if !is_valid(correction, &syndrome, graph) {
        return Err(DecodeError::InvalidCorrection);
    }
    Ok(residual_crosses_cut(graph, &ids, &correction.faults))
}

/// Parity of the net data-qubit residual on the logical cut. Both id lists
/// are trusted to belong to `graph` and annihilate each other's syndrome.
pub fn residual_crosses_cut(graph: &DecodingGraph, pattern: &[FaultId], correction: &[FaultId]) -> bool {
    let mut crossing = false;
    for &id in pattern.iter().chain(correction) {
        if let crate::code_model::Fault::Data { qubit, .. } = graph.edge(id).fault {
            crossing ^= graph.on_logical_cut(qubit);
        }
    }
    crossing
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::{build_decoding_graph, build_layout, syndrome_of, Fault};

    #[test]
    fn validity_of_trivial_cases() {
        let layout = build_layout(3).unwrap();
        let g = build_decoding_graph(&layout, Sector::X, 2).unwrap();
        let zero = SyndromeRounds::for_layout(&layout, 2);
        assert!(is_valid(&Correction::empty(Sector::X), &zero, &g));
        let mut nonzero = zero.clone();
        nonzero.set(0, 0, true);
        assert!(!is_valid(&Correction::empty(Sector::X), &nonzero, &g));
        assert!(!is_valid(&Correction::empty(Sector::Z), &zero, &g));
    }

    #[test]
    fn logical_failure_trivial_cases() {
        let layout = build_layout(3).unwrap();
        let g = build_decoding_graph(&layout, Sector::X, 1).unwrap();
        let mut pattern = ErrorPattern::empty(Sector::X);
        pattern.toggle(Fault::Data { qubit: 4, round: 0 });
        let same = Correction { sector: Sector::X, faults: pattern.fault_ids(&g).unwrap() };
        assert!(!is_logical_failure(&g, &pattern, &same).unwrap());

        let mut chain = ErrorPattern::empty(Sector::X);
        for &q in layout.logical_chain(Sector::X) {
            chain.toggle(Fault::Data { qubit: q, round: 0 });
        }
        assert!(syndrome_of(&chain, &g).unwrap().is_zero());
        assert!(is_logical_failure(&g, &chain, &Correction::empty(Sector::X)).unwrap());

        assert_eq!(
            is_logical_failure(&g, &pattern, &Correction::empty(Sector::X)),
            Err(DecodeError::InvalidCorrection)
        );
    }
}
