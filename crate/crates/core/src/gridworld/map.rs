use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::marker::{coord_in, marker_in, Coord, MarkerId, DEFAULT_SIZE};
use super::GridError;

/// Unordered pair of axis-adjacent nodes, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[MarkerId; 2]", into = "[MarkerId; 2]")]
pub struct Edge {
    a: MarkerId,
    b: MarkerId,
}

impl Edge {
    /// Normalises the pair; does not check adjacency (see [`GridMap::edge`]).
    pub fn new(a: MarkerId, b: MarkerId) -> Self {
        if a <= b {
            Edge { a, b }
        } else {
            Edge { a: b, b: a }
        }
    }

    pub fn a(self) -> MarkerId {
        self.a
    }

    pub fn b(self) -> MarkerId {
        self.b
    }

    pub fn touches(self, node: MarkerId) -> bool {
        self.a == node || self.b == node
    }

    pub fn other(self, node: MarkerId) -> Option<MarkerId> {
        if node == self.a {
            Some(self.b)
        } else if node == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

impl From<[MarkerId; 2]> for Edge {
    fn from([a, b]: [MarkerId; 2]) -> Self {
        Edge::new(a, b)
    }
}

impl From<Edge> for [MarkerId; 2] {
    fn from(e: Edge) -> Self {
        [e.a, e.b]
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Name of a single-track stretch of road: one vehicle at a time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub String);

impl SegmentId {
    pub fn new(name: impl Into<String>) -> Self {
        SegmentId(name.into())
    }

    /// `S1`, `S2`, ... for the zero-based position in a scenario file.
    pub fn numbered(index: usize) -> Self {
        SegmentId(format!("S{}", index + 1))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "label", rename_all = "snake_case")]
pub enum NodeLabel {
    Depot(String),
    Customer(String),
}

impl NodeLabel {
    pub fn name(&self) -> &str {
        match self {
            NodeLabel::Depot(s) | NodeLabel::Customer(s) => s,
        }
    }
}

/// Road network over the marker grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMap {
    width: u16,
    height: u16,
    edges: BTreeSet<Edge>,
    segments: BTreeMap<SegmentId, BTreeSet<Edge>>,
    labels: BTreeMap<MarkerId, NodeLabel>,
}

impl Default for GridMap {
    fn default() -> Self {
        GridMap::full(DEFAULT_SIZE, DEFAULT_SIZE)
    }
}

impl GridMap {
    /// Every axis-adjacent pair connected.
    pub fn full(width: u16, height: u16) -> Self {
        let mut edges = BTreeSet::new();
        for x in 0..width {
            for y in 0..height {
                let here = MarkerId(x * height + y);
                if x + 1 < width {
                    edges.insert(Edge::new(here, MarkerId((x + 1) * height + y)));
                }
                if y + 1 < height {
                    edges.insert(Edge::new(here, MarkerId(x * height + y + 1)));
                }
            }
        }
        GridMap {
            width,
            height,
            edges,
            segments: BTreeMap::new(),
            labels: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn node_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    pub fn nodes(&self) -> impl Iterator<Item = MarkerId> {
        (0..self.width * self.height).map(MarkerId)
    }

    pub fn contains(&self, id: MarkerId) -> bool {
        usize::from(id.0) < self.node_count()
    }

    pub fn check_node(&self, id: MarkerId) -> Result<(), GridError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(GridError::MarkerOutOfRange(u32::from(id.0)))
        }
    }

    pub fn coord(&self, id: MarkerId) -> Result<Coord, GridError> {
        coord_in(id, self.width, self.height)
    }

    pub fn marker(&self, coord: Coord) -> Result<MarkerId, GridError> {
        marker_in(coord, self.width, self.height)
    }

    /// Builds a normalised edge after checking both ends lie on the grid and
    /// are axis-adjacent. The edge may still be absent from the road set.
    pub fn edge(&self, a: MarkerId, b: MarkerId) -> Result<Edge, GridError> {
        let ca = self.coord(a)?;
        let cb = self.coord(b)?;
        if ca.manhattan(cb) != 1 {
            return Err(GridError::NotAdjacent { a, b });
        }
        Ok(Edge::new(a, b))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, edge: Edge) -> bool {
        self.edges.contains(&edge)
    }

    pub fn connected(&self, a: MarkerId, b: MarkerId) -> bool {
        self.edges.contains(&Edge::new(a, b))
    }

    pub fn remove_edge(&mut self, a: MarkerId, b: MarkerId) -> Result<(), GridError> {
        let edge = self.edge(a, b)?;
        if !self.edges.remove(&edge) {
            return Err(GridError::UnknownEdge(edge));
        }
        for seg in self.segments.values_mut() {
            seg.remove(&edge);
        }
        Ok(())
    }

    /// Neighbours in ascending id order.
    pub fn neighbors(&self, id: MarkerId) -> Vec<MarkerId> {
        let Ok(c) = self.coord(id) else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(4);
        let candidates = [
            (c.x > 0).then(|| Coord::new(c.x - 1, c.y)),
            (c.y > 0).then(|| Coord::new(c.x, c.y - 1)),
            (c.y + 1 < self.height).then(|| Coord::new(c.x, c.y + 1)),
            (c.x + 1 < self.width).then(|| Coord::new(c.x + 1, c.y)),
        ];
        for n in candidates.into_iter().flatten() {
            let m = MarkerId(n.x * self.height + n.y);
            if self.connected(id, m) {
                out.push(m);
            }
        }
        out.sort();
        out
    }

    pub fn add_segment(
        &mut self,
        id: SegmentId,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<(), GridError> {
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for &e in &edges {
            self.edge(e.a, e.b)?;
            if !self.has_edge(e) {
                return Err(GridError::UnknownEdge(e));
            }
            if let Some((other, _)) = self.segments.iter().find(|(_, s)| s.contains(&e)) {
                return Err(GridError::OverlappingSegment {
                    edge: e,
                    segment: other.clone(),
                });
            }
        }
        self.segments.insert(id, edges);
        Ok(())
    }

    pub fn segments(&self) -> impl Iterator<Item = (&SegmentId, &BTreeSet<Edge>)> {
        self.segments.iter()
    }

    /// The single-track segment containing `edge`, if any.
    pub fn segment_of(&self, edge: Edge) -> Result<Option<&SegmentId>, GridError> {
        if !self.has_edge(edge) {
            return Err(GridError::UnknownEdge(edge));
        }
        Ok(self
            .segments
            .iter()
            .find(|(_, s)| s.contains(&edge))
            .map(|(id, _)| id))
    }

    pub fn label(&mut self, id: MarkerId, label: NodeLabel) -> Result<(), GridError> {
        self.check_node(id)?;
        self.labels.insert(id, label);
        Ok(())
    }

    pub fn label_of(&self, id: MarkerId) -> Option<&NodeLabel> {
        self.labels.get(&id)
    }

    pub fn labels(&self) -> impl Iterator<Item = (MarkerId, &NodeLabel)> {
        self.labels.iter().map(|(k, v)| (*k, v))
    }

    /// Checks that every labelled node can reach every other.
    pub fn check_labels_connected(&self) -> Result<(), GridError> {
        let mut labelled = self.labels.keys().copied();
        let Some(root) = labelled.next() else {
            return Ok(());
        };
        let dist = self.bfs(root);
        for node in labelled {
            if dist[usize::from(node.0)].is_none() {
                return Err(GridError::Disconnected { root, node });
            }
        }
        Ok(())
    }

    fn bfs(&self, root: MarkerId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[usize::from(root.0)] = Some(0);
        queue.push_back(root);
        while let Some(n) = queue.pop_front() {
            let d = dist[usize::from(n.0)].unwrap_or(0);
            for m in self.neighbors(n) {
                let slot = &mut dist[usize::from(m.0)];
                if slot.is_none() {
                    *slot = Some(d + 1);
                    queue.push_back(m);
                }
            }
        }
        dist
    }

    /// Minimal edge-count path; among equal-length paths, the
    /// lexicographically smallest node sequence.
    pub fn shortest_path(&self, from: MarkerId, to: MarkerId) -> Result<Vec<MarkerId>, GridError> {
        self.check_node(from)?;
        self.check_node(to)?;
        let to_target = self.bfs(to);
        walk_down(self, &to_target, from, to).ok_or(GridError::NoPath { from, to })
    }

    /// Number of hops in `route`, each of which must be a road edge.
    pub fn route_length(&self, route: &[MarkerId]) -> Result<u32, GridError> {
        for &n in route {
            self.check_node(n)?;
        }
        for (index, w) in route.windows(2).enumerate() {
            if !self.connected(w[0], w[1]) || w[0] == w[1] {
                return Err(GridError::InvalidRoute {
                    index,
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(route.len().saturating_sub(1) as u32)
    }

    /// All-pairs distances and tie-broken paths, computed once.
    pub fn path_table(&self) -> PathTable {
        let n = self.node_count();
        let mut to_target = Vec::with_capacity(n);
        for t in self.nodes() {
            to_target.push(self.bfs(t));
        }
        PathTable {
            map: self.clone(),
            to_target,
        }
    }
}

fn walk_down(
    map: &GridMap,
    to_target: &[Option<u32>],
    from: MarkerId,
    to: MarkerId,
) -> Option<Vec<MarkerId>> {
    let mut d = to_target[usize::from(from.0)]?;
    let mut path = Vec::with_capacity(d as usize + 1);
    let mut cur = from;
    path.push(cur);
    while cur != to {
        // neighbours come sorted, so the first closer one is the smallest id
        let next = map
            .neighbors(cur)
            .into_iter()
            .find(|m| to_target[usize::from(m.0)] == Some(d - 1))?;
        path.push(next);
        cur = next;
        d -= 1;
    }
    Some(path)
}

/// Precomputed shortest-path distances for a fixed map.
#[derive(Debug, Clone)]
pub struct PathTable {
    map: GridMap,
    to_target: Vec<Vec<Option<u32>>>,
}

impl PathTable {
    pub fn distance(&self, from: MarkerId, to: MarkerId) -> Option<u32> {
        self.to_target
            .get(usize::from(to.0))?
            .get(usize::from(from.0))
            .copied()
            .flatten()
    }

    pub fn path(&self, from: MarkerId, to: MarkerId) -> Option<Vec<MarkerId>> {
        let table = self.to_target.get(usize::from(to.0))?;
        if usize::from(from.0) >= table.len() {
            return None;
        }
        walk_down(&self.map, table, from, to)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }
}
