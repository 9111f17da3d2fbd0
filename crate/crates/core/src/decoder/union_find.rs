use crate::code_model::{DecodingGraph, FaultId, SyndromeRounds};

use super::{Correction, DecodeError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Rounds of half-edge growth until every cluster was frozen.
    pub growth_iterations: u32,
    pub merges: u32,
    /// Edges fully grown when growth stopped.
    pub grown_edges: u32,
}

const HALF: u8 = 1;
const FULL: u8 = 2;

/// Cluster bookkeeping for one decode. Vertex `n` (one past the last
/// detector) is the boundary.
struct ClusterState {
    parent: Vec<u32>,
    rank: Vec<u8>,
    odd: Vec<bool>,
    touches_boundary: Vec<bool>,
    members: Vec<Vec<u32>>,
    growth: Vec<u8>,
}

impl ClusterState {
    fn new(graph: &DecodingGraph, defects: &[bool]) -> Self {
        let n = graph.vertex_count();
        let mut touches_boundary = vec![false; n + 1];
        touches_boundary[n] = true;
        let mut odd = defects.to_vec();
        odd.push(false);
        ClusterState {
            parent: (0..=n as u32).collect(),
            rank: vec![0; n + 1],
            odd,
            touches_boundary,
            members: (0..=n as u32).map(|v| vec![v]).collect(),
            growth: vec![0; graph.edge_count()],
        }
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let grandparent = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grandparent;
            v = grandparent;
        }
        v
    }

    /// Union by rank; equal ranks keep the lower id as root.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (root, child) = match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Greater => (ra, rb),
            std::cmp::Ordering::Less => (rb, ra),
            std::cmp::Ordering::Equal => {
                let (root, child) = (ra.min(rb), ra.max(rb));
                self.rank[root as usize] += 1;
                (root, child)
            }
        };
        self.parent[child as usize] = root;
        self.odd[root as usize] ^= self.odd[child as usize];
        self.touches_boundary[root as usize] |= self.touches_boundary[child as usize];
        let moved = std::mem::take(&mut self.members[child as usize]);
        self.members[root as usize].extend(moved);
        true
    }

    fn is_active(&self, root: u32) -> bool {
        self.odd[root as usize] && !self.touches_boundary[root as usize]
    }
}

/// Decodes the graph's sector of `syndrome`.
pub fn decode(graph: &DecodingGraph, syndrome: &SyndromeRounds) -> Result<Correction, DecodeError> {
    decode_with_stats(graph, syndrome).map(|(c, _)| c)
}

pub fn decode_with_stats(
    graph: &DecodingGraph,
    syndrome: &SyndromeRounds,
) -> Result<(Correction, DecodeStats), DecodeError> {
    syndrome.check_shape(graph)?;
    decode_defects(graph, &syndrome.sector_defects(graph.sector()))
}

/// Decodes a defect vector given in graph vertex order.
pub fn decode_defects(graph: &DecodingGraph, defects: &[bool]) -> Result<(Correction, DecodeStats), DecodeError> {
    let n = graph.vertex_count();
    if defects.len() != n {
        return Err(DecodeError::DefectCount { got: defects.len(), expected: n });
    }
    let mut stats = DecodeStats::default();
    if !defects.iter().any(|&d| d) {
        return Ok((Correction::empty(graph.sector()), stats));
    }

    let boundary = n as u32;
    let mut state = ClusterState::new(graph, defects);
    let mut active: Vec<u32> = (0..n as u32).filter(|&v| defects[v as usize]).collect();
    let mut newly_full = Vec::new();

    while !active.is_empty() {
        stats.growth_iterations += 1;
        newly_full.clear();
        let mut grew_any = false;
        for &root in &active {
            for mi in 0..state.members[root as usize].len() {
                let v = state.members[root as usize][mi];
                if v == boundary {
                    continue;
                }
                for &id in graph.incident(v) {
                    let g = state.growth[id.index()];
                    if g >= FULL {
                        continue;
                    }
                    let e = graph.edge(id);
                    let other = if e.a == v { e.b.unwrap_or(boundary) } else { e.a };
                    if state.find(other) == root {
                        continue;
                    }
                    state.growth[id.index()] = g + HALF;
                    grew_any = true;
                    if g + HALF == FULL {
                        newly_full.push(id);
                    }
                }
            }
        }
        if !grew_any {
            return Err(DecodeError::Stalled);
        }
        newly_full.sort_unstable();
        for &id in &newly_full {
            let e = graph.edge(id);
            if state.union(e.a, e.b.unwrap_or(boundary)) {
                stats.merges += 1;
            }
        }
        let mut next: Vec<u32> = active.iter().map(|&r| state.find(r)).collect();
        next.retain(|&r| state.is_active(r));
        next.sort_unstable();
        next.dedup();
        active = next;
    }

    let faults = peel(graph, &state.growth, defects)?;
    stats.grown_edges = state.growth.iter().filter(|&&g| g == FULL).count() as u32;
    Ok((Correction { sector: graph.sector(), faults }, stats))
}

/// Spanning-forest peeling over fully grown edges. The tree containing the
/// boundary is rooted there; other trees at their lowest vertex. Leaves are
/// resolved first.
fn peel(graph: &DecodingGraph, growth: &[u8], defects: &[bool]) -> Result<Vec<FaultId>, DecodeError> {
    let n = graph.vertex_count();
    let boundary = n;
    let mut grown_adj: Vec<Vec<(FaultId, usize)>> = vec![Vec::new(); n + 1];
    for (i, e) in graph.edges().iter().enumerate() {
        if growth[i] == FULL {
            let id = FaultId(i as u32);
            let b = e.b.map_or(boundary, |b| b as usize);
            grown_adj[e.a as usize].push((id, b));
            grown_adj[b].push((id, e.a as usize));
        }
    }

    let mut visited = vec![false; n + 1];
    let mut parent_edge: Vec<Option<(FaultId, usize)>> = vec![None; n + 1];
    let mut order = Vec::new();
    let roots = std::iter::once(boundary).chain(0..n);
    for root in roots {
        if visited[root] || (grown_adj[root].is_empty() && !(root < n && defects[root])) {
            continue;
        }
        visited[root] = true;
        let start = order.len();
        order.push(root);
        let mut head = start;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(id, w) in &grown_adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    parent_edge[w] = Some((id, v));
                    order.push(w);
                }
            }
        }
    }

    let mut flag: Vec<bool> = defects.to_vec();
    flag.push(false);
    let mut chosen = Vec::new();
    for &v in order.iter().rev() {
        if !flag[v] {
            continue;
        }
        match parent_edge[v] {
            Some((id, p)) => {
                chosen.push(id);
                flag[v] = false;
                flag[p] ^= true;
            }
            None if v == boundary => {}
            None => return Err(DecodeError::Stalled),
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}
