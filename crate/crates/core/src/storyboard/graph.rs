use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::LocationId;

/// Directed location graph. Edges say which location is reachable from which
/// in a single move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationGraph {
    pub vertices: Vec<LocationId>,
    pub edges: Vec<(LocationId, LocationId)>,
    pub start: LocationId,
}

impl LocationGraph {
    /// Complete directed graph (every ordered pair of distinct vertices).
    pub fn complete(vertices: Vec<LocationId>, start: LocationId) -> Self {
        let edges = vertices
            .iter()
            .flat_map(|a| {
                vertices
                    .iter()
                    .filter(move |b| *b != a)
                    .map(move |b| (a.clone(), b.clone()))
            })
            .collect();
        Self { vertices, edges, start }
    }

    /// Undirected star: `hub` connected both ways to every other vertex.
    pub fn star(vertices: Vec<LocationId>, hub: LocationId) -> Self {
        let edges = vertices
            .iter()
            .filter(|v| **v != hub)
            .flat_map(|v| [(hub.clone(), v.clone()), (v.clone(), hub.clone())])
            .collect();
        Self {
            vertices,
            edges,
            start: hub,
        }
    }

    pub fn contains(&self, v: &LocationId) -> bool {
        self.vertices.contains(v)
    }

    pub fn has_edge(&self, from: &LocationId, to: &LocationId) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    pub fn is_complete(&self) -> bool {
        let n = self.vertices.len();
        let index = GraphIndex::new(self);
        index.is_some_and(|ix| {
            (0..n).all(|a| (0..n).all(|b| a == b || ix.has_edge(a, b)))
        })
    }
}

/// Index-based view of a [`LocationGraph`] for the simulator and tracker.
#[derive(Debug, Clone)]
pub struct GraphIndex {
    names: Vec<LocationId>,
    lookup: HashMap<LocationId, usize>,
    out: Vec<Vec<usize>>,
    adjacency: Vec<Vec<bool>>,
    start: usize,
}

impl GraphIndex {
    /// `None` when the start vertex or an edge endpoint is not a vertex.
    pub fn new(graph: &LocationGraph) -> Option<Self> {
        let names = graph.vertices.clone();
        let lookup: HashMap<LocationId, usize> =
            names.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let n = names.len();
        let mut adjacency = vec![vec![false; n]; n];
        for (a, b) in &graph.edges {
            let (ia, ib) = (*lookup.get(a)?, *lookup.get(b)?);
            adjacency[ia][ib] = true;
        }
        // out-lists in vertex order keep every traversal deterministic
        let out = adjacency
            .iter()
            .map(|row| (0..n).filter(|&j| row[j]).collect())
            .collect();
        let start = *lookup.get(&graph.start)?;
        Some(Self {
            names,
            lookup,
            out,
            adjacency,
            start,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn index(&self, v: &LocationId) -> Option<usize> {
        self.lookup.get(v).copied()
    }

    pub fn name(&self, i: usize) -> &LocationId {
        &self.names[i]
    }

    pub fn out(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a][b]
    }

    /// Vertices reachable from the start vertex.
    pub fn reachable_from_start(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(v) = queue.pop_front() {
            for &w in self.out(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Shortest path `from -> goal`, excluding `from`; empty when equal.
    pub fn shortest_path(&self, from: usize, goal: usize) -> Option<Vec<usize>> {
        if from == goal {
            return Some(Vec::new());
        }
        self.bfs(from, |v| v == goal)
    }

    /// Shortest path (excluding `from`) to a vertex from which `dest` is one
    /// legal move away. Empty when `from` already is such a vertex.
    pub fn path_to_predecessor(&self, from: usize, dest: usize) -> Option<Vec<usize>> {
        if from != dest && self.has_edge(from, dest) {
            return Some(Vec::new());
        }
        self.bfs(from, |v| v != dest && self.has_edge(v, dest))
    }

    fn bfs(&self, from: usize, is_goal: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &w in self.out(v) {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                parent[w] = v;
                if is_goal(w) {
                    let mut path = vec![w];
                    let mut cur = w;
                    while parent[cur] != from {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
        None
    }

    /// Number of hops from `from` to `goal`, `None` if unreachable.
    pub fn distance(&self, from: usize, goal: usize) -> Option<usize> {
        self.shortest_path(from, goal).map(|p| p.len())
    }

    /// Moves needed before a pinned move into `dest` is legal.
    pub fn pre_hops(&self, from: usize, dest: usize) -> Option<usize> {
        self.path_to_predecessor(from, dest).map(|p| p.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[&str]) -> Vec<LocationId> {
        xs.iter().map(|x| LocationId::from(*x)).collect()
    }

    #[test]
    fn complete_graph_edges() {
        let g = LocationGraph::complete(ids(&["a", "b", "c"]), "a".into());
        assert_eq!(g.edges.len(), 6);
        assert!(g.is_complete());
        assert!(!g.has_edge(&"a".into(), &"a".into()));
    }

    #[test]
    fn star_paths_route_through_hub() {
        let g = LocationGraph::star(ids(&["hub", "x", "y"]), "hub".into());
        assert!(!g.is_complete());
        let ix = GraphIndex::new(&g).unwrap();
        let (x, y, hub) = (ix.index(&"x".into()).unwrap(), ix.index(&"y".into()).unwrap(), 0);
        assert_eq!(ix.shortest_path(x, y).unwrap(), vec![hub, y]);
        assert_eq!(ix.distance(x, x), Some(0));
        // a pinned move x -> y needs one hop to the hub first
        assert_eq!(ix.pre_hops(x, y), Some(1));
        // already at the destination: leave and come back via the hub
        assert_eq!(ix.path_to_predecessor(y, y).unwrap(), vec![hub]);
        assert_eq!(ix.pre_hops(hub, y), Some(0));
    }

    #[test]
    fn directed_reachability() {
        let g = LocationGraph {
            vertices: ids(&["s", "a", "b"]),
            edges: vec![("s".into(), "a".into()), ("a".into(), "s".into())],
            start: "s".into(),
        };
        let ix = GraphIndex::new(&g).unwrap();
        assert_eq!(ix.reachable_from_start(), vec![true, true, false]);
        assert_eq!(ix.distance(0, 2), None);
    }
}
