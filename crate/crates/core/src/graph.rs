//! Simple undirected graphs on labeled nodes `0..n`, plus the line-oriented
//! record format used to exchange graph sets between pipeline stages.
//!
//! Graphs are immutable after construction: mutation operators return new
//! values, so graphs can be shared freely across threads. Structural equality
//! is label-sensitive; no isomorphism testing happens anywhere in this crate.

use std::collections::VecDeque;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node {node} out of range for graph on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0} is not allowed")]
    SelfLoop(usize),
    #[error("malformed graph record: {0}")]
    Parse(String),
    #[error("{path}:{line}: {source}")]
    ParseAt {
        path: String,
        line: usize,
        source: Box<GraphError>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Simple undirected graph on `n` labeled nodes.
///
/// Invariants: no self-loops, no duplicate edges, every edge stored once as
/// `(u, v)` with `u < v` in lexicographic order.
#[derive(Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    neighbors: Vec<Vec<u32>>,
    /// Row-major adjacency bitset, `stride` words per node.
    bits: Vec<u64>,
    stride: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}
impl Eq for Graph {}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let stride = n.div_ceil(64);
        Ok(Graph {
            n,
            edges: Vec::new(),
            neighbors: vec![Vec::new(); n],
            bits: vec![0; n * stride],
            stride,
        })
    }

    /// Graph containing exactly the given pairs, deduplicated and normalized
    /// to `u < v`.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n)?;
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (u, v) in pairs {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            edges.push((a as u32, b as u32));
        }
        edges.sort_unstable();
        edges.dedup();
        for &(u, v) in &edges {
            g.insert_edge(u as usize, v as usize);
        }
        g.edges = edges;
        Ok(g)
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edges(n, pairs)
    }

    fn insert_edge(&mut self, u: usize, v: usize) {
        self.neighbors[u].push(v as u32);
        self.neighbors[v].push(u as u32);
        self.bits[u * self.stride + v / 64] |= 1 << (v % 64);
        self.bits[v * self.stride + u / 64] |= 1 << (u % 64);
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` pairs with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.stride + v / 64] >> (v % 64) & 1 == 1
    }

    /// Adjacency bitset row of `u` (`stride` words).
    #[inline]
    pub(crate) fn adjacency_row(&self, u: usize) -> &[u64] {
        &self.bits[u * self.stride..(u + 1) * self.stride]
    }

    /// Number of edges between neighbors of `u` (= triangles through `u`).
    pub fn triangles_at(&self, u: usize) -> usize {
        let row_u = self.adjacency_row(u);
        let mut twice = 0usize;
        for &v in &self.neighbors[u] {
            let row_v = self.adjacency_row(v as usize);
            for (a, b) in row_u.iter().zip(row_v) {
                twice += (a & b).count_ones() as usize;
            }
        }
        twice / 2
    }

    /// New graph with the edge `(u, v)` flipped and everything else unchanged.
    pub fn toggle_edge(&self, u: usize, v: usize) -> Result<Self, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for node in [u, v] {
            if node >= self.n {
                return Err(GraphError::NodeOutOfRange { node, n: self.n });
            }
        }
        let key = (u.min(v) as u32, u.max(v) as u32);
        let mut g = self.clone();
        match g.edges.binary_search(&key) {
            Ok(pos) => {
                g.edges.remove(pos);
                g.neighbors[u].retain(|&w| w != v as u32);
                g.neighbors[v].retain(|&w| w != u as u32);
                g.bits[u * g.stride + v / 64] &= !(1 << (v % 64));
                g.bits[v * g.stride + u / 64] &= !(1 << (u % 64));
            }
            Err(pos) => {
                g.edges.insert(pos, key);
                let iu = g.neighbors[u].binary_search(&(v as u32)).unwrap_err();
                g.neighbors[u].insert(iu, v as u32);
                let iv = g.neighbors[v].binary_search(&(u as u32)).unwrap_err();
                g.neighbors[v].insert(iv, u as u32);
                g.bits[u * g.stride + v / 64] |= 1 << (v % 64);
                g.bits[v * g.stride + u / 64] |= 1 << (u % 64);
            }
        }
        Ok(g)
    }

    /// Hop distances from `source` to every node; `None` where unreachable.
    pub fn bfs_from(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::with_capacity(self.n);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have distances");
            for &v in &self.neighbors[u] {
                let v = v as usize;
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances via one BFS per node.
    pub fn bfs_all_pairs(&self) -> DistanceMatrixAllPairs {
        let mut d = Vec::with_capacity(self.n * self.n);
        for source in 0..self.n {
            d.extend(self.bfs_from(source));
        }
        DistanceMatrixAllPairs { n: self.n, d }
    }

    /// Sizes of the connected components, in discovery order.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut size = 0;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &v in &self.neighbors[u] {
                    let v = v as usize;
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }

    /// Deterministic one-line text record (see the graph set file format).
    pub fn encode(&self) -> String {
        let record = GraphRecord {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        };
        serde_json::to_string(&record).expect("graph record serializes")
    }

    /// Parse a single record produced by [`Graph::encode`].
    pub fn decode(text: &str) -> Result<Self, GraphError> {
        let record: GraphRecord =
            serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        Graph::from_edges(
            record.n,
            record.edges.iter().map(|e| (e[0] as usize, e[1] as usize)),
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    n: usize,
    edges: Vec<[u32; 2]>,
}

/// All-pairs hop distances. Unreachable pairs are an explicit `None`, never a
/// sentinel count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrixAllPairs {
    n: usize,
    d: Vec<Option<u32>>,
}

impl DistanceMatrixAllPairs {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<u32> {
        self.d[u * self.n + v]
    }

    /// Row of distances from `u`.
    pub fn row(&self, u: usize) -> &[Option<u32>] {
        &self.d[u * self.n..(u + 1) * self.n]
    }
}

/// Read a graph set file: one record per line, blank lines and `#` comments
/// are skipped.
pub fn read_graph_set(path: &Path) -> Result<Vec<Graph>, GraphError> {
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut graphs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let g = Graph::decode(trimmed).map_err(|e| GraphError::ParseAt {
            path: path.display().to_string(),
            line: idx + 1,
            source: Box::new(e),
        })?;
        graphs.push(g);
    }
    Ok(graphs)
}

/// Write a graph set file, one record per line, in the given order.
pub fn write_graph_set(path: &Path, graphs: &[Graph]) -> Result<(), GraphError> {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&g.encode());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Render a whole graph set as the file contents (used for byte-level
/// determinism checks).
pub fn encode_graph_set(graphs: &[Graph]) -> String {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&g.encode());
        out.push('\n');
    }
    out
}
