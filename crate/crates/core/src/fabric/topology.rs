use serde::{Deserialize, Serialize};

use super::clock::NodeClock;
use super::{NodeId, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Leaf,
    Router,
    Root,
}

/// Shape of the control tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyConfig {
    /// Child links on the root board.
    pub root_ports: u32,
    /// Child links on each router board.
    pub router_children: u32,
    pub router_layers: u32,
    pub leaves: u32,
}

impl TopologyConfig {
    /// Leaves reachable through `router_layers` full layers.
    pub fn leaf_capacity(&self) -> u64 {
        (self.root_ports as u64).saturating_mul((self.router_children as u64).saturating_pow(self.router_layers))
    }

    /// Routers in layer `k` (1 = directly under the root), when leaves are packed contiguously.
    pub fn routers_in_layer(&self, k: u32) -> u64 {
        let span = (self.router_children as u64).pow(self.router_layers - k + 1);
        (self.leaves as u64).div_ceil(span)
    }

    pub fn expected_node_count(&self) -> u64 {
        1 + (1..=self.router_layers).map(|k| self.routers_in_layer(k)).sum::<u64>() + self.leaves as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub role: Role,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Hops from the root.
    pub depth: u32,
    pub clock: NodeClock,
    /// Position among leaves, for leaf nodes.
    pub leaf_index: Option<u32>,
}

/// Control tree. Node 0 is the root; ids follow depth-first construction, so
/// leaves appear in leaf order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    config: TopologyConfig,
    nodes: Vec<NodeState>,
    leaves: Vec<NodeId>,
}

impl Topology {
    pub fn build(config: TopologyConfig) -> Result<Self, SimError> {
        if config.root_ports == 0 || (config.router_layers > 0 && config.router_children == 0) {
            return Err(SimError::InvalidTopology("port counts must be positive".into()));
        }
        if config.leaves as u64 > config.leaf_capacity() {
            return Err(SimError::Capacity { leaves: config.leaves as u64, capacity: config.leaf_capacity() });
        }
        let mut topo = Topology { config, nodes: Vec::new(), leaves: Vec::new() };
        let root = topo.push(Role::Root, None, 0);
        topo.attach(root, 0, config.leaves, config.router_layers);
        Ok(topo)
    }

    fn push(&mut self, role: Role, parent: Option<NodeId>, depth: u32) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let leaf_index = (role == Role::Leaf).then_some(self.leaves.len() as u32);
        self.nodes.push(NodeState {
            id,
            role,
            parent,
            children: Vec::new(),
            depth,
            clock: NodeClock::default(),
            leaf_index,
        });
        if let Some(p) = parent {
            self.nodes[p.index()].children.push(id);
        }
        if role == Role::Leaf {
            self.leaves.push(id);
        }
        id
    }

    /// Hangs leaves `first..first+count` below `parent` with `layers` router levels in between.
    fn attach(&mut self, parent: NodeId, first: u32, count: u32, layers: u32) {
        let depth = self.nodes[parent.index()].depth + 1;
        if layers == 0 {
            for _ in 0..count {
                self.push(Role::Leaf, Some(parent), depth);
            }
            return;
        }
        let span = (self.config.router_children as u64).pow(layers) as u32;
        let mut start = first;
        while start < first + count {
            let n = span.min(first + count - start);
            let router = self.push(Role::Router, Some(parent), depth);
            self.attach(router, start, n, layers - 1);
            start += n;
        }
    }

    pub fn config(&self) -> &TopologyConfig {
        &self.config
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf node ids in leaf order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Nodes in breadth-first order from the root.
    pub fn top_down(&self) -> Vec<NodeId> {
        let mut order = vec![self.root()];
        let mut head = 0;
        while head < order.len() {
            let id = order[head];
            head += 1;
            order.extend(self.node(id).children.iter().copied());
        }
        order
    }

    /// Path from `id` up to the root, inclusive on both ends.
    pub fn path_to_root(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.node(cur).parent {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Checks tree invariants: one parent per non-root node, no cycles, port limits.
    pub fn validate(&self) -> Result<(), SimError> {
        for n in &self.nodes {
            let limit = match n.role {
                Role::Root => self.config.root_ports,
                Role::Router => self.config.router_children,
                Role::Leaf => 0,
            };
            if n.children.len() as u32 > limit {
                return Err(SimError::InvalidTopology(format!("{} exceeds its port limit", n.id)));
            }
            if (n.role == Role::Root) != n.parent.is_none() {
                return Err(SimError::InvalidTopology(format!("{} has a bad parent link", n.id)));
            }
            if self.path_to_root(n.id).len() as u32 != n.depth + 1 {
                return Err(SimError::InvalidTopology(format!("{} depth mismatch", n.id)));
            }
        }
        Ok(())
    }
}
