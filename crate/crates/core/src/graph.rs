//! Time-indexed directed graph with node and link churn.
//!
//! Node ids are allocated monotonically and never reused within a graph's
//! lifetime, so any per-node time series keyed by [`NodeId`] stays
//! unambiguous after deletions. Adjacency sets are ordered by id, which makes
//! every iteration (and therefore every seeded run) reproducible.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

/// Stable node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("missing edge ({0}, {1})")]
    MissingEdge(NodeId, NodeId),
    #[error("node {0} already exists")]
    DuplicateNode(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct NodeEntry {
    birth: u64,
    out: BTreeSet<NodeId>,
    inc: BTreeSet<NodeId>,
}

/// Directed graph `G_t = (U_t, E_t)` at the current discrete time `t`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TemporalGraph {
    time: u64,
    next_id: u64,
    nodes: BTreeMap<NodeId, NodeEntry>,
    // sorted mirror of `nodes` keys for O(1) uniform picks
    live: Vec<NodeId>,
    edge_count: usize,
}

impl TemporalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn set_time(&mut self, t: u64) {
        self.time = t;
    }

    /// Advances the clock by one step and returns the new time.
    pub fn tick(&mut self) -> u64 {
        self.time += 1;
        self.time
    }

    /// `N_t`, the number of live nodes.
    pub fn population_size(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, i: NodeId) -> bool {
        self.nodes.contains_key(&i)
    }

    /// The id the next call to [`add_node`](Self::add_node) will return.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.next_id)
    }

    /// Live nodes in ascending id order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.live
    }

    /// The `index`-th live node in ascending order.
    pub fn node_at(&self, index: usize) -> Option<NodeId> {
        self.live.get(index).copied()
    }

    pub fn birth_time(&self, i: NodeId) -> Result<u64, GraphError> {
        self.entry(i).map(|e| e.birth)
    }

    pub fn add_node(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(
            id,
            NodeEntry {
                birth: self.time,
                ..NodeEntry::default()
            },
        );
        self.live.push(id);
        id
    }

    /// Inserts a node with an explicit id and birth time, as needed when
    /// restoring a snapshot. Later allocations continue above the largest id
    /// seen so far.
    pub fn insert_node(&mut self, id: NodeId, birth: u64) -> Result<(), GraphError> {
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        self.nodes.insert(
            id,
            NodeEntry {
                birth,
                ..NodeEntry::default()
            },
        );
        let pos = self.live.partition_point(|&n| n < id);
        self.live.insert(pos, id);
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    /// Removes `i` together with every incident edge. The removed edges are
    /// returned in ascending `(src, dst)` order.
    pub fn remove_node(&mut self, i: NodeId) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
        let entry = self.nodes.remove(&i).ok_or(GraphError::UnknownNode(i))?;
        let pos = self.live.binary_search(&i).expect("live index out of sync");
        self.live.remove(pos);

        let mut removed = Vec::with_capacity(entry.out.len() + entry.inc.len());
        for &j in &entry.out {
            if let Some(e) = self.nodes.get_mut(&j) {
                e.inc.remove(&i);
            }
            removed.push((i, j));
        }
        for &j in &entry.inc {
            if let Some(e) = self.nodes.get_mut(&j) {
                e.out.remove(&i);
            }
            removed.push((j, i));
        }
        self.edge_count -= removed.len();
        removed.sort_unstable();
        Ok(removed)
    }

    /// Adds `e(i,j)`, and `e(j,i)` too when `symmetric`. Duplicates are
    /// ignored. Returns the number of edges actually created.
    pub fn add_edge(&mut self, i: NodeId, j: NodeId, symmetric: bool) -> Result<usize, GraphError> {
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        self.entry(i)?;
        self.entry(j)?;
        let mut created = usize::from(self.link(i, j));
        if symmetric {
            created += usize::from(self.link(j, i));
        }
        Ok(created)
    }

    fn link(&mut self, i: NodeId, j: NodeId) -> bool {
        let fresh = self.nodes.get_mut(&i).expect("checked").out.insert(j);
        if fresh {
            self.nodes.get_mut(&j).expect("checked").inc.insert(i);
            self.edge_count += 1;
        }
        fresh
    }

    pub fn remove_edge(&mut self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        let src = self.nodes.get_mut(&i).ok_or(GraphError::UnknownNode(i))?;
        if !src.out.remove(&j) {
            return Err(GraphError::MissingEdge(i, j));
        }
        if let Some(dst) = self.nodes.get_mut(&j) {
            dst.inc.remove(&i);
        }
        self.edge_count -= 1;
        Ok(())
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.nodes.get(&i).is_some_and(|e| e.out.contains(&j))
    }

    /// Out-neighbours of `i`, ascending.
    pub fn out_links(&self, i: NodeId) -> Result<&BTreeSet<NodeId>, GraphError> {
        self.entry(i).map(|e| &e.out)
    }

    /// In-neighbours of `i`, ascending.
    pub fn in_links(&self, i: NodeId) -> Result<&BTreeSet<NodeId>, GraphError> {
        self.entry(i).map(|e| &e.inc)
    }

    /// `d_t(i)`.
    pub fn out_degree(&self, i: NodeId) -> Result<usize, GraphError> {
        self.entry(i).map(|e| e.out.len())
    }

    pub fn in_degree(&self, i: NodeId) -> Result<usize, GraphError> {
        self.entry(i).map(|e| e.inc.len())
    }

    /// All edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes
            .iter()
            .flat_map(|(&i, e)| e.out.iter().map(move |&j| (i, j)))
    }

    /// Links `e(i,j)` with `i` in `sample` and `j` outside it. Sample members
    /// that are no longer alive are skipped. `#E_{s+}` is the length of the
    /// result.
    pub fn boundary_edges(&self, sample: &BTreeSet<NodeId>) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for &i in sample {
            if let Some(e) = self.nodes.get(&i) {
                out.extend(e.out.iter().filter(|j| !sample.contains(j)).map(|&j| (i, j)));
            }
        }
        out
    }

    fn entry(&self, i: NodeId) -> Result<&NodeEntry, GraphError> {
        self.nodes.get(&i).ok_or(GraphError::UnknownNode(i))
    }

    /// Full consistency scan: edge endpoints live, mirrored in/out sets, no
    /// self-loops and a correct edge count.
    pub fn check_invariants(&self) -> bool {
        let mut count = 0;
        for (&i, e) in &self.nodes {
            if e.out.contains(&i) {
                return false;
            }
            for j in &e.out {
                match self.nodes.get(j) {
                    Some(d) if d.inc.contains(&i) => count += 1,
                    _ => return false,
                }
            }
            for j in &e.inc {
                match self.nodes.get(j) {
                    Some(s) if s.out.contains(&i) => {}
                    _ => return false,
                }
            }
        }
        count == self.edge_count
            && self.live.len() == self.nodes.len()
            && self.live.iter().zip(self.nodes.keys()).all(|(a, b)| a == b)
    }
}
