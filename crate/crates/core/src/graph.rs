//! Undirected loopless graphs and breadth-first distances.

use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Undirected simple graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

pub(crate) const UNREACHED: u64 = u64::MAX;

thread_local! {
    static SCRATCH: RefCell<(Vec<u32>, u32)> = const { RefCell::new((Vec::new(), 0)) };
}

/// Runs `f` with a per-thread visited array of length ≥ `n` and a fresh stamp;
/// a slot is visited iff it equals the stamp.
fn with_scratch<T>(n: usize, f: impl FnOnce(&mut [u32], u32) -> T) -> T {
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (marks, stamp) = &mut *guard;
        if marks.len() < n {
            marks.resize(n, 0);
        }
        *stamp = stamp.wrapping_add(1);
        if *stamp == 0 {
            marks.iter_mut().for_each(|m| *m = 0);
            *stamp = 1;
        }
        let s = *stamp;
        f(&mut marks[..n], s)
    })
}

impl Graph {
    pub fn empty(n_vertices: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n_vertices],
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse; loops are rejected.
    pub fn from_edges(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n_vertices];
        for (u, v) in edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::Construction(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n_vertices}"
                )));
            }
            if u == v {
                return Err(Error::Construction(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adj })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edges(n, edges).expect("complete graph is loopless")
    }

    pub fn cycle(n: usize) -> Self {
        let edges = (0..n).map(|i| (i, (i + 1) % n)).filter(|(u, v)| u != v);
        Graph::from_edges(n, edges).expect("cycle is loopless")
    }

    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path is loopless")
    }

    pub fn n_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj.get(u).is_some_and(|l| l.binary_search(&v).is_ok())
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn is_loopless(&self) -> bool {
        self.adj.iter().enumerate().all(|(u, l)| !l.contains(&u))
    }

    pub fn is_connected(&self) -> bool {
        self.n_vertices() == 0 || self.bfs_ticks(0).iter().all(|&d| d != UNREACHED)
    }

    /// Hop distances from `source`; `None` marks unreachable vertices.
    pub fn distances(&self, source: usize) -> Result<Vec<Option<u64>>> {
        if source >= self.n_vertices() {
            return Err(Error::Index {
                index: source,
                n_points: self.n_vertices(),
            });
        }
        Ok(self
            .bfs_ticks(source)
            .into_iter()
            .map(|d| (d != UNREACHED).then_some(d))
            .collect())
    }

    pub(crate) fn bfs_ticks(&self, source: usize) -> Vec<u64> {
        self.multi_source_ticks(std::iter::once(source))
    }

    pub(crate) fn multi_source_ticks(&self, sources: impl IntoIterator<Item = usize>) -> Vec<u64> {
        let mut dist = vec![UNREACHED; self.n_vertices()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in &self.adj[u] {
                if dist[v] == UNREACHED {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// For every vertex, the position in `sources` of its nearest source,
    /// ties to the lowest position; `usize::MAX` when no source is reachable.
    pub(crate) fn nearest_source(&self, sources: &[usize]) -> Vec<usize> {
        let n = self.n_vertices();
        let mut dist = vec![UNREACHED; n];
        let mut label = vec![usize::MAX; n];
        let mut layer = Vec::new();
        for (i, &s) in sources.iter().enumerate() {
            if dist[s] == UNREACHED {
                dist[s] = 0;
                label[s] = i;
                layer.push(s);
            }
        }
        let mut depth = 0;
        while !layer.is_empty() {
            let mut next = Vec::new();
            for &u in &layer {
                for &v in &self.adj[u] {
                    if dist[v] == UNREACHED {
                        dist[v] = depth + 1;
                        label[v] = label[u];
                        next.push(v);
                    } else if dist[v] == depth + 1 {
                        label[v] = label[v].min(label[u]);
                    }
                }
            }
            layer = next;
            depth += 1;
        }
        label
    }

    /// Vertices within `max_hops` of `source`, with their hop distance, in BFS order.
    pub(crate) fn truncated_bfs(&self, source: usize, max_hops: u64) -> Vec<(usize, u64)> {
        with_scratch(self.n_vertices(), |seen, stamp| {
            let mut order = vec![(source, 0u64)];
            seen[source] = stamp;
            let mut head = 0;
            while head < order.len() {
                let (u, d) = order[head];
                head += 1;
                if d == max_hops {
                    continue;
                }
                for &v in &self.adj[u] {
                    if seen[v] != stamp {
                        seen[v] = stamp;
                        order.push((v, d + 1));
                    }
                }
            }
            order
        })
    }

    /// Number of vertices at each hop distance `0..=max_hops` from `source`.
    pub(crate) fn layer_sizes(&self, source: usize, max_hops: u64) -> Vec<u64> {
        let mut layers = vec![0u64; max_hops as usize + 1];
        for (_, d) in self.truncated_bfs(source, max_hops) {
            layers[d as usize] += 1;
        }
        layers
    }

    /// Hop distance between two vertices, stopping as soon as `target` is reached.
    pub(crate) fn hop_distance(&self, source: usize, target: usize) -> Option<u64> {
        if source == target {
            return Some(0);
        }
        with_scratch(self.n_vertices(), |seen, stamp| {
            seen[source] = stamp;
            let mut frontier = vec![source];
            let mut d = 0;
            while !frontier.is_empty() {
                d += 1;
                let mut next = Vec::new();
                for u in frontier {
                    for &v in &self.adj[u] {
                        if v == target {
                            return Some(d);
                        }
                        if seen[v] != stamp {
                            seen[v] = stamp;
                            next.push(v);
                        }
                    }
                }
                frontier = next;
            }
            None
        })
    }

    /// Connected component label per vertex, labels in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n_vertices()];
        let mut next = 0;
        for start in 0..self.n_vertices() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Induced subgraph on `vertices`; vertex `i` of the result is `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let index: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adj = vec![Vec::new(); vertices.len()];
        for (i, &v) in vertices.iter().enumerate() {
            adj[i] = self.adj[v].iter().filter_map(|w| index.get(w).copied()).collect();
            adj[i].sort_unstable();
        }
        Graph { adj }
    }

    /// Sorted edge list, one `"u v"` pair per line, vertices 0-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Parses an edge list. Lines starting with `#` are comments; a
    /// `# vertices N` comment fixes the vertex count, otherwise it is
    /// one more than the largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut edges = Vec::new();
        let mut declared = None;
        let mut max_seen = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("vertices") {
                    declared = Some(n.trim().parse::<usize>().map_err(|_| Error::parse(i + 1, "bad vertex count"))?);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(i + 1, "expected \"u v\""));
            };
            let u: usize = a.parse().map_err(|_| Error::parse(i + 1, "bad vertex index"))?;
            let v: usize = b.parse().map_err(|_| Error::parse(i + 1, "bad vertex index"))?;
            max_seen = Some(max_seen.unwrap_or(0).max(u).max(v));
            edges.push((u, v));
        }
        let n = declared.unwrap_or(max_seen.map_or(0, |m| m + 1));
        Graph::from_edges(n, edges)
    }
}

/// BFS distances from `source` in `g`; unreachable vertices are `None`.
pub fn graph_distances(g: &Graph, source: usize) -> Result<Vec<Option<u64>>> {
    g.distances(source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_cycle_distances() {
        let g = Graph::cycle(6);
        let d: Vec<_> = graph_distances(&g, 0).unwrap().into_iter().map(Option::unwrap).collect();
        assert_eq!(d, vec![0, 1, 2, 3, 2, 1]);
    }

    #[test]
    fn edgeless_and_complete() {
        let g = Graph::empty(4);
        assert_eq!(graph_distances(&g, 0).unwrap(), vec![Some(0), None, None, None]);
        let k = Graph::complete(5);
        assert_eq!(graph_distances(&k, 2).unwrap(), vec![Some(1), Some(1), Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn rejects_loops_and_bad_source() {
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
        assert!(graph_distances(&Graph::path(3), 3).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edges(5, [(3, 1), (0, 4), (1, 0)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "0 1\n0 4\n1 3\n");
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        let h = Graph::parse_edge_list("# vertices 7\n0 1\n").unwrap();
        assert_eq!(h.n_vertices(), 7);
    }

    #[test]
    fn truncated_bfs_matches_full() {
        let g = Graph::cycle(10);
        let full = g.bfs_ticks(0);
        for (v, d) in g.truncated_bfs(0, 3) {
            assert_eq!(full[v], d);
        }
        assert_eq!(g.layer_sizes(0, 3), vec![1, 2, 2, 2]);
        assert_eq!(g.hop_distance(0, 5), Some(5));
    }
}
