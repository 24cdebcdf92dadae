//! Problem instances and schedules.
//!
//! A problem instance is a connected, undirected network of IoT nodes plus a
//! set of battery-free sensor tags, each hosted by exactly one node. A
//! schedule is an ordered list of timeslots; in each timeslot every node
//! holds one [`Role`], and every tag interrogation is recorded explicitly as
//! a `(host, tag, carrier)` triple.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node identifier in `[0, N)`.
pub type NodeId = usize;

/// Positive tag identifier. Lower IDs are interrogated earlier by the
/// canonical (symmetry-broken) schedule.
pub type TagId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("topology must contain at least one node")]
    EmptyTopology,
    #[error("edge ({0}, {1}) references a node outside [0, {2})")]
    NodeOutOfRange(NodeId, NodeId, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("topology is not connected: node {0} is unreachable from node 0")]
    Disconnected(NodeId),
    #[error("instance has no tags")]
    NoTags,
    #[error("tag ids must be positive")]
    ZeroTagId,
    #[error("duplicate tag id {0}")]
    DuplicateTag(TagId),
    #[error("tag {tag} is hosted by node {host}, which is not in the topology")]
    HostOutOfRange { tag: TagId, host: NodeId },
}

/// Undirected connected graph of IoT nodes. Edges are stored once, as
/// `(u, v)` with `u < v`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds a topology, rejecting self-loops, duplicate edges (in either
    /// orientation), out-of-range endpoints and disconnected graphs.
    pub fn new(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, ModelError> {
        if node_count == 0 {
            return Err(ModelError::EmptyTopology);
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(ModelError::NodeOutOfRange(u, v, node_count));
            }
            if u == v {
                return Err(ModelError::SelfLoop(u));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let topology = Self {
            node_count,
            edges: normalized,
            adjacency,
        };
        if let Some(unreachable) = topology.first_unreachable() {
            return Err(ModelError::Disconnected(unreachable));
        }
        Ok(topology)
    }

    fn first_unreachable(&self) -> Option<NodeId> {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Sorted neighbor list of `node`.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Relabels nodes: node `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::new(self.node_count, &edges).expect("relabeling preserves validity")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tag {
    pub id: TagId,
    pub host: NodeId,
}

/// A topology together with its tag set and tag-to-host map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    topology: Topology,
    /// Sorted by tag id.
    tags: Vec<Tag>,
}

impl ProblemInstance {
    pub fn new(topology: Topology, mut tags: Vec<Tag>) -> Result<Self, ModelError> {
        if tags.is_empty() {
            return Err(ModelError::NoTags);
        }
        tags.sort_unstable();
        for tag in &tags {
            if tag.id == 0 {
                return Err(ModelError::ZeroTagId);
            }
            if tag.host >= topology.node_count() {
                return Err(ModelError::HostOutOfRange {
                    tag: tag.id,
                    host: tag.host,
                });
            }
        }
        if let Some(w) = tags.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ModelError::DuplicateTag(w[0].id));
        }
        Ok(Self { topology, tags })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn tag_count(&self) -> usize {
        self.tags.len()
    }

    /// Tags in ascending id order.
    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, id: TagId) -> Option<&Tag> {
        self.tags
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.tags[i])
    }

    pub fn host_of(&self, id: TagId) -> Option<NodeId> {
        self.tag(id).map(|t| t.host)
    }

    pub fn max_tag_id(&self) -> TagId {
        self.tags.last().map_or(0, |t| t.id)
    }

    pub fn tag_ids(&self) -> BTreeSet<TagId> {
        self.tags.iter().map(|t| t.id).collect()
    }

    /// Same instance with nodes relabeled by `perm` (node `u` becomes
    /// `perm[u]`); tag ids are unchanged.
    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        let tags = self
            .tags
            .iter()
            .map(|t| Tag {
                id: t.id,
                host: perm[t.host],
            })
            .collect();
        Self::new(self.topology.permuted(perm), tags).expect("relabeling preserves validity")
    }
}

/// What a node does during one timeslot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// Emits an unmodulated carrier for neighboring tags.
    Carrier,
    /// Interrogates one of its hosted tags.
    TagQuery,
    Idle,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Carrier, Role::TagQuery, Role::Idle];

    /// Class index used by the GNN output layer and training labels.
    pub fn class_index(self) -> usize {
        match self {
            Role::Carrier => 0,
            Role::TagQuery => 1,
            Role::Idle => 2,
        }
    }

    pub fn from_class_index(index: usize) -> Option<Role> {
        Role::ALL.get(index).copied()
    }
}

/// One tag interrogation: `host` queries `tag` while `carrier` powers it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interrogation {
    pub host: NodeId,
    pub tag: TagId,
    pub carrier: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeslot {
    pub roles: Vec<Role>,
    pub interrogations: Vec<Interrogation>,
}

impl Timeslot {
    /// Derives the role vector from the interrogation records: hosts query,
    /// recorded carriers provide carrier, everybody else idles.
    ///
    /// Panics if a record references a node `>= node_count`.
    pub fn from_interrogations(node_count: usize, mut interrogations: Vec<Interrogation>) -> Self {
        interrogations.sort_unstable_by_key(|i| (i.tag, i.host, i.carrier));
        let mut roles = vec![Role::Idle; node_count];
        for rec in &interrogations {
            roles[rec.carrier] = Role::Carrier;
        }
        for rec in &interrogations {
            roles[rec.host] = Role::TagQuery;
        }
        Self {
            roles,
            interrogations,
        }
    }

    pub fn carrier_count(&self) -> usize {
        self.roles.iter().filter(|&&r| r == Role::Carrier).count()
    }

    pub fn nodes_with_role(&self, role: Role) -> impl Iterator<Item = NodeId> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, &r)| r == role)
            .map(|(u, _)| u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub slots: Vec<Timeslot>,
}

impl Schedule {
    pub fn new(slots: Vec<Timeslot>) -> Self {
        Self { slots }
    }

    /// Schedule length `L`.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Total carrier-role assignments `C` over all slots.
    pub fn carrier_count(&self) -> usize {
        self.slots.iter().map(Timeslot::carrier_count).sum()
    }

    pub fn interrogations(&self) -> impl Iterator<Item = (usize, &Interrogation)> {
        self.slots
            .iter()
            .enumerate()
            .flat_map(|(s, slot)| slot.interrogations.iter().map(move |i| (s, i)))
    }
}
