use std::sync::OnceLock;

use crate::code_model::{build_decoding_graph, build_layout, syndrome_of_ids, FaultId, Sector, SyndromeRounds};
use crate::decoder::{decode_with_stats, DecodeStats};

/// The slowest d=3 syndrome for this decoder, with one fault set producing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorstCase {
    pub sector: Sector,
    pub faults: Vec<FaultId>,
    pub syndrome: SyndromeRounds,
    pub stats: DecodeStats,
}

/// Searches every weight-1 and weight-2 fault set of both d=3, 3-round
/// graphs for the most growth iterations. Ties keep the first pattern found
/// (X before Z, then lexicographic fault ids).
pub fn worst_case_d3() -> &'static WorstCase {
    static CELL: OnceLock<WorstCase> = OnceLock::new();
    CELL.get_or_init(search)
}

pub fn worst_case_d3_syndrome() -> &'static SyndromeRounds {
    &worst_case_d3().syndrome
}

fn search() -> WorstCase {
    let layout = build_layout(3).expect("d=3 is valid");
    let mut best: Option<WorstCase> = None;
    for sector in Sector::BOTH {
        let graph = build_decoding_graph(&layout, sector, 3).expect("d=3 graph");
        let n = graph.edge_count() as u32;
        let singles = (0..n).map(|a| vec![FaultId(a)]);
        let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![FaultId(a), FaultId(b)]));
        for faults in singles.chain(pairs) {
            let syndrome = syndrome_of_ids(&graph, &faults).expect("ids in range");
            if syndrome.is_zero() {
                continue;
            }
            let (_, stats) = decode_with_stats(&graph, &syndrome).expect("decodable");
            if best.as_ref().is_none_or(|b| stats.growth_iterations > b.stats.growth_iterations) {
                best = Some(WorstCase { sector, faults, syndrome, stats });
            }
        }
    }
    best.expect("some pattern has a nonzero syndrome")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::build_decoding_graph;
    use crate::decoder::{decode, is_valid};

    #[test]
    fn worst_case_dominates_single_faults() {
        let w = worst_case_d3();
        assert!(!w.syndrome.is_zero());
        let layout = build_layout(3).unwrap();
        for sector in Sector::BOTH {
            let g = build_decoding_graph(&layout, sector, 3).unwrap();
            for a in 0..g.edge_count() as u32 {
                let s = syndrome_of_ids(&g, &[FaultId(a)]).unwrap();
                let (_, stats) = decode_with_stats(&g, &s).unwrap();
                assert!(w.stats.growth_iterations >= stats.growth_iterations);
            }
        }
        let g = build_decoding_graph(&layout, w.sector, 3).unwrap();
        assert!(is_valid(&decode(&g, &w.syndrome).unwrap(), &w.syndrome, &g));
        assert!(std::ptr::eq(worst_case_d3_syndrome(), &w.syndrome));
    }
}
