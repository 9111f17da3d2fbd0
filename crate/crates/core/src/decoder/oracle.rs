//! Minimum-weight reference decoder.
//!
//! Two independent exact routes:
//! - small graphs (edges and vertices within [`OracleCap`]): exhaustive
//!   meet-in-the-middle search over every edge subset;
//! - otherwise, few defects: shortest paths between defects and to the
//!   boundary, paired by exact subset DP. The minimum-weight edge set with a
//!   given parity profile is a T-join, whose weight equals the optimal pairing.

use std::collections::{HashMap, VecDeque};

use crate::code_model::{DecodingGraph, FaultId, SyndromeRounds};

use super::{Correction, DecodeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCap {
    /// Largest edge count handled by exhaustive search.
    pub exhaustive_edges: usize,
    /// Largest defect count handled by shortest-path pairing.
    pub pairing_defects: usize,
}

pub const DEFAULT_ORACLE_CAP: OracleCap = OracleCap { exhaustive_edges: 40, pairing_defects: 12 };

pub fn oracle_decode(graph: &DecodingGraph, syndrome: &SyndromeRounds) -> Result<Correction, DecodeError> {
    oracle_decode_capped(graph, syndrome, DEFAULT_ORACLE_CAP)
}

pub fn oracle_min_weight(graph: &DecodingGraph, syndrome: &SyndromeRounds) -> Result<usize, DecodeError> {
    oracle_decode(graph, syndrome).map(|c| c.weight())
}

pub fn oracle_decode_capped(
    graph: &DecodingGraph,
    syndrome: &SyndromeRounds,
    cap: OracleCap,
) -> Result<Correction, DecodeError> {
    syndrome.check_shape(graph)?;
    let defects = syndrome.sector_defects(graph.sector());
    let defect_count = defects.iter().filter(|&&d| d).count();
    let faults = if defect_count == 0 {
        Vec::new()
    } else if graph.edge_count() <= cap.exhaustive_edges && graph.vertex_count() <= 64 {
        exhaustive(graph, &defects)?
    } else if defect_count <= cap.pairing_defects {
        pairing(graph, &defects)?
    } else {
        return Err(DecodeError::OracleCap { edges: graph.edge_count(), defects: defect_count });
    };
    Ok(Correction { sector: graph.sector(), faults })
}

fn edge_mask(graph: &DecodingGraph, id: usize) -> u64 {
    let e = &graph.edges()[id];
    let mut m = 1u64 << e.a;
    if let Some(b) = e.b {
        m ^= 1u64 << b;
    }
    m
}

/// All subsets of `edges` as (syndrome mask, subset bits), in subset order.
fn subset_masks(graph: &DecodingGraph, edges: &[usize]) -> Vec<u64> {
    let mut masks = vec![0u64; 1 << edges.len()];
    for s in 1..masks.len() {
        let low = s.trailing_zeros() as usize;
        masks[s] = masks[s & (s - 1)] ^ edge_mask(graph, edges[low]);
    }
    masks
}

fn exhaustive(graph: &DecodingGraph, defects: &[bool]) -> Result<Vec<FaultId>, DecodeError> {
    let target = defects.iter().enumerate().fold(0u64, |m, (v, &d)| m | ((d as u64) << v));
    let n = graph.edge_count();
    let left: Vec<usize> = (0..n / 2).collect();
    let right: Vec<usize> = (n / 2..n).collect();

    // Lightest left subset per syndrome mask; ties keep the smaller subset index.
    let mut best_left: HashMap<u64, usize> = HashMap::new();
    for (s, &m) in subset_masks(graph, &left).iter().enumerate() {
        best_left
            .entry(m)
            .and_modify(|cur| {
                if (s.count_ones(), s) < (cur.count_ones(), *cur) {
                    *cur = s;
                }
            })
            .or_insert(s);
    }

    let mut best: Option<(u32, usize, usize)> = None;
    for (r, &m) in subset_masks(graph, &right).iter().enumerate() {
        if let Some(&l) = best_left.get(&(target ^ m)) {
            let cand = (l.count_ones() + r.count_ones(), r, l);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
    }
    let (_, r, l) = best.ok_or(DecodeError::Stalled)?;
    let mut out: Vec<FaultId> = left
        .iter()
        .enumerate()
        .filter(|(i, _)| l >> i & 1 == 1)
        .chain(right.iter().enumerate().filter(|(i, _)| r >> i & 1 == 1))
        .map(|(_, &e)| FaultId(e as u32))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Unit-weight BFS tree from `src`; vertex `n` is the boundary.
fn bfs(graph: &DecodingGraph, src: usize) -> (Vec<u32>, Vec<Option<(FaultId, usize)>>) {
    let n = graph.vertex_count();
    let mut dist = vec![u32::MAX; n + 1];
    let mut prev = vec![None; n + 1];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        if v == n {
            continue;
        }
        for &id in graph.incident(v as u32) {
            let e = graph.edge(id);
            let w = if e.a as usize == v { e.b.map_or(n, |b| b as usize) } else { e.a as usize };
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                prev[w] = Some((id, v));
                queue.push_back(w);
            }
        }
    }
    (dist, prev)
}

fn pairing(graph: &DecodingGraph, defects: &[bool]) -> Result<Vec<FaultId>, DecodeError> {
    let n = graph.vertex_count();
    let nodes: Vec<usize> = (0..n).filter(|&v| defects[v]).collect();
    let k = nodes.len();
    let trees: Vec<_> = nodes.iter().map(|&v| bfs(graph, v)).collect();

    // cost[mask] resolves every defect in mask; choice records how the lowest one was matched.
    let full = (1usize << k) - 1;
    let mut cost = vec![u32::MAX; 1 << k];
    let mut choice = vec![usize::MAX; 1 << k];
    cost[0] = 0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best = (u32::MAX, usize::MAX);
        let to_boundary = trees[i].0[n];
        if to_boundary != u32::MAX && cost[rest] != u32::MAX {
            best = (to_boundary + cost[rest], k);
        }
        for j in (i + 1)..k {
            if rest >> j & 1 == 0 {
                continue;
            }
            let d = trees[i].0[nodes[j]];
            let sub = cost[rest & !(1 << j)];
            if d != u32::MAX && sub != u32::MAX && d + sub < best.0 {
                best = (d + sub, j);
            }
        }
        cost[mask] = best.0;
        choice[mask] = best.1;
    }
    if cost[full] == u32::MAX {
        return Err(DecodeError::Stalled);
    }

    let mut in_set = vec![false; graph.edge_count()];
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = choice[mask];
        let target = if j == k { n } else { nodes[j] };
        let mut v = target;
        while let Some((id, p)) = trees[i].1[v] {
            in_set[id.index()] ^= true;
            v = p;
        }
        mask &= !(1 << i);
        if j != k {
            mask &= !(1 << j);
        }
    }
    Ok((0..graph.edge_count()).filter(|&e| in_set[e]).map(|e| FaultId(e as u32)).collect())
}
