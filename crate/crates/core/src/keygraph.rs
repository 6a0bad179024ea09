//! Physical and key graphs, minimum-hop key-paths, and their expansion into
//! physical routes.

use crate::keying::{KeyTable, Point};
use crate::mobility::Vec3;
use crate::par::{map_indices, ExecMode};
use crate::radio::contact_pairs;

/// Undirected simple graph over `0..n`, stored as adjacency bitsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u < self.n && v < self.n, "edge ({u}, {v}) out of range for {} nodes", self.n);
        if u == v {
            return;
        }
        self.bits[u * self.words + v / 64] |= 1 << (v % 64);
        self.bits[v * self.words + u / 64] |= 1 << (u % 64);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.bits[u * self.words..(u + 1) * self.words]
    }

    /// Neighbors of `u` in ascending order.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(u).iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// True when every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }
}

pub fn build_phys_graph(positions: &[Vec3], r: f64) -> Graph {
    Graph::from_edges(positions.len(), contact_pairs(positions, r))
}

/// Edge `{i, j}` iff each of `i` and `j` holds the other's current public
/// key in a record still valid at `now`.
pub fn build_key_graph(tables: &[KeyTable], current_keys: &[Point], now: f64) -> Graph {
    assert_eq!(tables.len(), current_keys.len());
    let mut g = Graph::new(tables.len());
    for (i, table) in tables.iter().enumerate() {
        for rec in table.records() {
            let j = rec.owner;
            if j > i
                && j < tables.len()
                && rec.key == current_keys[j]
                && rec.is_valid(now)
                && tables[j].holds_valid(i, &current_keys[i], now)
            {
                g.add_edge(i, j);
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathResult {
    pub nodes: Vec<usize>,
}

impl PathResult {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

pub const UNREACHABLE: u32 = u32::MAX;

/// Level-synchronous BFS tree. A node's parent is the lowest-index node of
/// the previous level adjacent to it.
#[derive(Debug, Clone)]
pub struct BfsTree {
    pub source: usize,
    pub dist: Vec<u32>,
    pub parent: Vec<u32>,
}

impl BfsTree {
    pub fn path_to(&self, d: usize) -> Option<PathResult> {
        if self.dist[d] == UNREACHABLE {
            return None;
        }
        let mut nodes = Vec::with_capacity(self.dist[d] as usize + 1);
        let mut cur = d;
        nodes.push(cur);
        while cur != self.source {
            cur = self.parent[cur] as usize;
            nodes.push(cur);
        }
        nodes.reverse();
        Some(PathResult { nodes })
    }
}

pub fn bfs(g: &Graph, source: usize) -> BfsTree {
    let n = g.node_count();
    let mut dist = vec![UNREACHABLE; n];
    let mut parent = vec![UNREACHABLE; n];
    dist[source] = 0;
    parent[source] = source as u32;
    let mut frontier = vec![source];
    let mut next = Vec::new();
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        // frontier is sorted, so the first discoverer is the lowest index
        for &u in &frontier {
            for v in g.neighbors(u) {
                if dist[v] == UNREACHABLE {
                    dist[v] = level;
                    parent[v] = u as u32;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    BfsTree { source, dist, parent }
}

pub fn shortest_path(g: &Graph, s: usize, d: usize) -> Option<PathResult> {
    bfs(g, s).path_to(d)
}

/// Intermediate decrypt/re-encrypt steps along a key-path.
pub fn de_steps(path: &PathResult) -> usize {
    path.hops().saturating_sub(1)
}

/// Physical hop count realizing every key hop of `key_path` in `phys`, or
/// `None` if some key hop has no physical route.
pub fn overall_path_len(key_path: &PathResult, phys: &Graph) -> Option<usize> {
    key_path
        .nodes
        .windows(2)
        .map(|w| match bfs(phys, w[0]).dist[w[1]] {
            UNREACHABLE => None,
            h => Some(h as usize),
        })
        .sum()
}

pub fn is_connected(g: &Graph) -> bool {
    let n = g.node_count();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// All-pairs hop distances, `UNREACHABLE` where disconnected.
#[derive(Debug, Clone)]
pub struct HopMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl HopMatrix {
    pub fn compute(g: &Graph, mode: ExecMode) -> Self {
        let n = g.node_count();
        let rows = map_indices(mode, n, |s| bfs(g, s).dist);
        HopMatrix {
            n,
            dist: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, u: usize, v: usize) -> Option<u32> {
        match self.dist[u * self.n + v] {
            UNREACHABLE => None,
            h => Some(h),
        }
    }

    /// Same as [`overall_path_len`] using precomputed distances.
    pub fn expand(&self, key_path: &PathResult) -> Option<usize> {
        key_path
            .nodes
            .windows(2)
            .map(|w| self.get(w[0], w[1]).map(|h| h as usize))
            .sum()
    }
}
