//! Cache-network graphs: lattice and regular-tree generators, edge-list
//! loading, BFS hop distances and h-hop neighborhoods.
//!
//! A [`Topology`] is immutable once built; all queries take `&self` and are
//! safe to run concurrently.

use std::collections::VecDeque;
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Dense node index, `0..|V|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// How the topology was constructed. Generators remember their shape so the
/// analytic formulas can locate reference users (mid-boundary node, leaf).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Lattice { side: usize },
    Tree { arity: usize, depth: usize },
    Generic,
}

/// Undirected graph of caching nodes with a per-node buffer capacity.
#[derive(Debug, Clone)]
pub struct Topology {
    adjacency: Vec<Vec<usize>>,
    buffers: Vec<usize>,
    kind: TopologyKind,
}

/// A user co-located with one of the cache nodes. Hop distances for cost
/// evaluation are measured from the attachment node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserAttachment {
    pub user: usize,
    pub node: NodeId,
}

impl UserAttachment {
    pub fn new(user: usize, node: NodeId) -> Self {
        UserAttachment { user, node }
    }
}

/// All nodes within `radius` hops of `center`, with their BFS distances.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub center: NodeId,
    pub radius: usize,
    /// `(node, hop distance)` sorted by node id; contains `center` at 0.
    members: Vec<(NodeId, usize)>,
}

impl Neighborhood {
    pub fn members(&self) -> &[(NodeId, usize)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.distance(v).is_some()
    }

    /// Hop distance from the center, `None` if `v` is outside the radius.
    pub fn distance(&self, v: NodeId) -> Option<usize> {
        self.members
            .binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| self.members[i].1)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().map(|&(n, _)| n)
    }
}

impl Topology {
    /// n-by-n grid with 4-neighbor adjacency and unit buffers.
    pub fn lattice(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "lattice side must be at least 2, got {n}"
            )));
        }
        let idx = |r: usize, c: usize| r * n + c;
        let mut adjacency = vec![Vec::new(); n * n];
        for r in 0..n {
            for c in 0..n {
                if r + 1 < n {
                    adjacency[idx(r, c)].push(idx(r + 1, c));
                    adjacency[idx(r + 1, c)].push(idx(r, c));
                }
                if c + 1 < n {
                    adjacency[idx(r, c)].push(idx(r, c + 1));
                    adjacency[idx(r, c + 1)].push(idx(r, c));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Topology {
            buffers: vec![1; n * n],
            adjacency,
            kind: TopologyKind::Lattice { side: n },
        })
    }

    /// Full regular tree: every internal node has `arity` children, leaves at
    /// depth `depth`. Nodes are numbered level by level, root first.
    pub fn regular_tree(arity: usize, depth: usize) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidParameter(format!(
                "tree arity must be at least 2, got {arity}"
            )));
        }
        if depth < 1 {
            return Err(Error::InvalidParameter(format!(
                "tree depth must be at least 1, got {depth}"
            )));
        }
        // node count = (arity^(depth+1) - 1) / (arity - 1)
        let mut level_start = vec![0usize];
        let mut level_size = 1usize;
        let mut total = 1usize;
        for _ in 0..depth {
            level_size = level_size
                .checked_mul(arity)
                .ok_or_else(|| Error::InvalidParameter("tree too large".into()))?;
            level_start.push(total);
            total = total
                .checked_add(level_size)
                .ok_or_else(|| Error::InvalidParameter("tree too large".into()))?;
        }
        let mut adjacency = vec![Vec::new(); total];
        for parent in 0..level_start[depth] {
            for k in 0..arity {
                let child = 1 + parent * arity + k;
                adjacency[parent].push(child);
                adjacency[child].push(parent);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Topology {
            buffers: vec![1; total],
            adjacency,
            kind: TopologyKind::Tree { arity, depth },
        })
    }

    fn from_parts(adjacency: Vec<Vec<usize>>, buffers: Vec<usize>, kind: TopologyKind) -> Self {
        Topology {
            adjacency,
            buffers,
            kind,
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.node_count()
    }

    pub fn neighbors(&self, v: NodeId) -> &[usize] {
        &self.adjacency[v.0]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.0].len()
    }

    pub fn buffer(&self, v: NodeId) -> usize {
        self.buffers[v.0]
    }

    pub fn total_buffer(&self) -> usize {
        self.buffers.iter().sum()
    }

    /// Replace a node's buffer capacity. Intended for scenario setup before
    /// the topology is shared between threads.
    pub fn set_buffer(&mut self, v: NodeId, capacity: usize) {
        self.buffers[v.0] = capacity;
    }

    pub fn set_uniform_buffers(&mut self, capacity: usize) {
        self.buffers.iter_mut().for_each(|b| *b = capacity);
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    /// BFS distances from `source` over the whole graph; `None` marks nodes
    /// unreachable from the source.
    pub fn distances_from(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[source.0] = Some(0);
        let mut queue = VecDeque::from([source.0]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Shortest-path hop count, or `None` when `b` is unreachable from `a`.
    pub fn hop_distance(&self, a: NodeId, b: NodeId) -> Option<usize> {
        if a == b {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.node_count()];
        dist[a.0] = 0;
        let mut queue = VecDeque::from([a.0]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    if w == b.0 {
                        return Some(dist[w]);
                    }
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Nodes within `radius` hops of `center` (the set S_v), by bounded BFS.
    pub fn neighborhood(&self, center: NodeId, radius: usize) -> Neighborhood {
        let mut dist = vec![usize::MAX; self.node_count()];
        dist[center.0] = 0;
        let mut queue = VecDeque::from([center.0]);
        let mut members = vec![(center, 0)];
        while let Some(u) = queue.pop_front() {
            if dist[u] == radius {
                continue;
            }
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    members.push((NodeId(w), dist[w]));
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable_by_key(|&(n, _)| n);
        Neighborhood {
            center,
            radius,
            members,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count() == 0 {
            return true;
        }
        self.distances_from(NodeId(0)).iter().all(Option::is_some)
    }

    /// Grid coordinates of a lattice node.
    pub fn lattice_coords(&self, v: NodeId) -> Option<(usize, usize)> {
        match self.kind {
            TopologyKind::Lattice { side } => Some((v.0 / side, v.0 % side)),
            _ => None,
        }
    }

    /// Midpoint of the first boundary row of a lattice — the reference user
    /// position of the grid analysis.
    pub fn boundary_midpoint(&self) -> Option<NodeId> {
        match self.kind {
            TopologyKind::Lattice { side } => Some(NodeId((side - 1) / 2)),
            _ => None,
        }
    }

    /// First (lowest-id) leaf of a generated tree — the reference user
    /// position of the tree analysis.
    pub fn first_leaf(&self) -> Option<NodeId> {
        match self.kind {
            TopologyKind::Tree { arity, depth } => {
                let mut level_start = 0usize;
                let mut level_size = 1usize;
                for _ in 0..depth {
                    level_start += level_size;
                    level_size *= arity;
                }
                Some(NodeId(level_start))
            }
            _ => None,
        }
    }

    /// Edge-list rendering in the same format `from_edge_list` accepts.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        out.push_str("# edge list: u v\n");
        for u in 0..self.node_count() {
            for &w in &self.adjacency[u] {
                if u < w {
                    out.push_str(&format!("{u} {w}\n"));
                }
            }
        }
        out
    }

    /// Parse a textual edge list. Each non-comment line is `u v` with an
    /// optional trailing `buffer_u buffer_v` pair. Node ids need not be
    /// contiguous; they are densified in first-seen order and the mapping is
    /// reported back.
    pub fn from_edge_list(reader: impl BufRead) -> Result<EdgeListLoad> {
        let mut adjacency: Vec<Vec<usize>> = Vec::new();
        let mut buffers: Vec<usize> = Vec::new();
        let mut id_map: Vec<u64> = Vec::new();
        let mut dense: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
        let mut warnings = Vec::new();
        let mut edges = 0usize;

        let mut intern = |raw: u64,
                          adjacency: &mut Vec<Vec<usize>>,
                          buffers: &mut Vec<usize>,
                          id_map: &mut Vec<u64>|
         -> usize {
            *dense.entry(raw).or_insert_with(|| {
                adjacency.push(Vec::new());
                buffers.push(1);
                id_map.push(raw);
                adjacency.len() - 1
            })
        };

        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 2 && fields.len() != 4 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!(
                        "expected `u v` or `u v buffer_u buffer_v`, got {} fields",
                        fields.len()
                    ),
                });
            }
            let parse = |s: &str| -> Result<u64> {
                s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("`{s}` is not a non-negative integer"),
                })
            };
            let (raw_u, raw_v) = (parse(fields[0])?, parse(fields[1])?);
            if raw_u == raw_v {
                warnings.push(format!("line {lineno}: self-loop {raw_u} ignored"));
                continue;
            }
            let u = intern(raw_u, &mut adjacency, &mut buffers, &mut id_map);
            let v = intern(raw_v, &mut adjacency, &mut buffers, &mut id_map);
            if fields.len() == 4 {
                buffers[u] = parse(fields[2])? as usize;
                buffers[v] = parse(fields[3])? as usize;
            }
            if adjacency[u].contains(&v) {
                warnings.push(format!("line {lineno}: duplicate edge {raw_u} {raw_v} ignored"));
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
            edges += 1;
        }
        if edges == 0 {
            return Err(Error::EmptyGraph);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(EdgeListLoad {
            topology: Topology::from_parts(adjacency, buffers, TopologyKind::Generic),
            id_map,
            warnings,
        })
    }

    /// Build a generic topology directly from dense edge pairs. Used by tests
    /// and the randomized verification batteries.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in edges {
            if u != v && !adjacency[u].contains(&v) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Topology::from_parts(adjacency, vec![1; node_count], TopologyKind::Generic)
    }
}

/// Result of loading an edge list: the topology plus the dense-id mapping
/// (dense index -> original id) and any lenient-parse warnings.
#[derive(Debug)]
pub struct EdgeListLoad {
    pub topology: Topology,
    pub id_map: Vec<u64>,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn smallest_lattice() {
        let t = Topology::lattice(2).unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.edge_count(), 4);
    }

    #[test]
    fn lattice_degrees() {
        let t = Topology::lattice(3).unwrap();
        assert_eq!(t.degree(NodeId(4)), 4); // center
        for corner in [0, 2, 6, 8] {
            assert_eq!(t.degree(NodeId(corner)), 2);
        }
    }

    #[test]
    fn lattice_rejects_tiny_side() {
        assert!(Topology::lattice(1).is_err());
        assert!(Topology::lattice(0).is_err());
    }

    #[test]
    fn lattice_boundary_user_reach() {
        // h=2 ball of the mid-boundary node of a 7x7 grid: the 9 nodes of the
        // half-diamond, matching the 9 placed contents of the grid analysis.
        let t = Topology::lattice(7).unwrap();
        let user = t.boundary_midpoint().unwrap();
        assert_eq!(user, NodeId(3));
        assert_eq!(t.neighborhood(user, 2).len(), 9);
    }

    #[test]
    fn tree_sizes() {
        let t = Topology::regular_tree(2, 1).unwrap();
        assert_eq!(t.node_count(), 3);
        assert!(Topology::regular_tree(1, 3).is_err());
        assert!(Topology::regular_tree(2, 0).is_err());
    }

    #[test]
    fn tree_leaf_reach_h2() {
        let t = Topology::regular_tree(2, 4).unwrap();
        let leaf = t.first_leaf().unwrap();
        let ball = t.neighborhood(leaf, 2);
        let mut dists: Vec<usize> = ball.members().iter().map(|&(_, d)| d).collect();
        dists.sort_unstable();
        assert_eq!(dists, vec![0, 1, 2, 2]);
    }

    #[test]
    fn tree_leaf_reach_h3() {
        let t = Topology::regular_tree(2, 5).unwrap();
        let leaf = t.first_leaf().unwrap();
        let ball = t.neighborhood(leaf, 3);
        let mut dists: Vec<usize> = ball.members().iter().map(|&(_, d)| d).collect();
        dists.sort_unstable();
        assert_eq!(dists, vec![0, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn hop_distances() {
        let t = Topology::lattice(3).unwrap();
        assert_eq!(t.hop_distance(NodeId(0), NodeId(8)), Some(4));
        assert_eq!(t.hop_distance(NodeId(5), NodeId(5)), Some(0));

        let tree = Topology::regular_tree(2, 3).unwrap();
        let leaf = tree.first_leaf().unwrap();
        let sibling = NodeId(leaf.0 + 1);
        assert_eq!(tree.hop_distance(leaf, sibling), Some(2));
    }

    #[test]
    fn neighborhood_radius_zero_and_one() {
        let t = Topology::lattice(7).unwrap();
        let center = NodeId(3 * 7 + 3);
        assert_eq!(t.neighborhood(center, 0).len(), 1);
        assert_eq!(t.neighborhood(center, 1).len(), 5);
    }

    #[test]
    fn edge_list_roundtrip_and_path() {
        let load = Topology::from_edge_list(Cursor::new("0 1\n1 2\n")).unwrap();
        assert_eq!(load.topology.node_count(), 3);
        assert_eq!(
            load.topology.hop_distance(NodeId(0), NodeId(2)),
            Some(2)
        );
        assert!(load.warnings.is_empty());
    }

    #[test]
    fn edge_list_errors_and_warnings() {
        assert!(matches!(
            Topology::from_edge_list(Cursor::new("# nothing\n")),
            Err(Error::EmptyGraph)
        ));
        let err = Topology::from_edge_list(Cursor::new("0 x\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));

        let load = Topology::from_edge_list(Cursor::new("0 1\n1 0\n2 2\n1 2\n")).unwrap();
        assert_eq!(load.warnings.len(), 2);
        assert_eq!(load.topology.edge_count(), 2);
    }

    #[test]
    fn edge_list_densifies_sparse_ids() {
        let load = Topology::from_edge_list(Cursor::new("10 30\n30 7\n")).unwrap();
        assert_eq!(load.id_map, vec![10, 30, 7]);
        assert_eq!(load.topology.node_count(), 3);
    }

    #[test]
    fn edge_list_buffer_overrides() {
        let load = Topology::from_edge_list(Cursor::new("0 1 3 2\n1 2\n")).unwrap();
        let t = &load.topology;
        assert_eq!(t.buffer(NodeId(0)), 3);
        assert_eq!(t.buffer(NodeId(1)), 2);
        assert_eq!(t.buffer(NodeId(2)), 1);
    }

    #[test]
    fn disconnected_distance_is_none() {
        let t = Topology::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(t.hop_distance(NodeId(0), NodeId(3)), None);
        assert!(!t.is_connected());
    }
}
