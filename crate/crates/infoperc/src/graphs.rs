//! Graph representations, deterministic generators, and edge-list I/O.
//!
//! Graphs are immutable after construction and safe to share across threads.
//! Vertex ids are dense `0..n`. Adjacency lists are sorted, symmetric, with
//! no self-loops or duplicate edges; `d_max` is the true maximum degree.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Immutable adjacency structure with maximum degree `d_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<Vec<u32>>,
    d_max: usize,
}

/// Graph families used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    /// Cycle on `n >= 3` vertices.
    Cycle(usize),
    /// Torus `Z_side^dim` with `side >= 3`.
    Torus { dim: usize, side: usize },
    /// Complete binary tree with `depth` levels below the root.
    BinaryTree { depth: usize },
    /// Hypercube `{0,1}^dim`.
    Hypercube { dim: usize },
    /// Uniform random `d`-regular graph via the pairing model.
    RandomRegular { n: usize, d: usize },
    /// Erdos-Renyi `G(n, p)`; may be disconnected.
    ErdosRenyi { n: usize, p: f64 },
}

impl Graph {
    /// Build from an edge list, validating all invariants.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("graph must have at least one vertex".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Parameter(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                return Err(Error::Parameter(format!("self-loop at vertex {u}")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let d_max = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph { n, adjacency, d_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    /// Local index of `u` in the sorted neighbor list of `v`, if adjacent.
    pub fn local_index(&self, v: u32, u: u32) -> Option<usize> {
        self.adjacency[v as usize].binary_search(&u).ok()
    }

    /// Canonical edge list, lexicographic (min endpoint, max endpoint).
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (v, list) in self.adjacency.iter().enumerate() {
            for &u in list {
                if (v as u32) < u {
                    out.push((v as u32, u));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// `(d_max, degree histogram)`; the histogram sums to `n`.
    pub fn degree_stats(&self) -> (usize, BTreeMap<usize, usize>) {
        let mut hist = BTreeMap::new();
        for list in &self.adjacency {
            *hist.entry(list.len()).or_insert(0) += 1;
        }
        (self.d_max, hist)
    }
}

/// Generate a graph of the given family; deterministic for a fixed seed.
pub fn generate_graph(kind: GraphKind, seed: u64) -> Result<Graph> {
    match kind {
        GraphKind::Cycle(n) => {
            if n < 3 {
                return Err(Error::Parameter(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n as u32)
                .map(|v| (v, if v + 1 == n as u32 { 0 } else { v + 1 }))
                .collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Torus { dim, side } => {
            if dim == 0 || side < 3 {
                return Err(Error::Parameter(format!(
                    "torus needs dim >= 1 and side >= 3, got dim={dim} side={side}"
                )));
            }
            let n = side.checked_pow(dim as u32).ok_or_else(|| {
                Error::Parameter("torus size overflows".into())
            })?;
            let mut edges = Vec::new();
            let mut stride = 1usize;
            for _ in 0..dim {
                for v in 0..n {
                    let coord = (v / stride) % side;
                    let next = if coord + 1 == side {
                        v + stride - side * stride
                    } else {
                        v + stride
                    };
                    edges.push((v as u32, next as u32));
                }
                stride *= side;
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::BinaryTree { depth } => {
            if depth == 0 {
                return Err(Error::Parameter("binary tree needs depth >= 1".into()));
            }
            let n = (1usize << (depth + 1)) - 1;
            let mut edges = Vec::new();
            for v in 1..n {
                edges.push((((v - 1) / 2) as u32, v as u32));
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::Hypercube { dim } => {
            if dim == 0 {
                return Err(Error::Parameter("hypercube needs dim >= 1".into()));
            }
            let n = 1usize << dim;
            let mut edges = Vec::new();
            for v in 0..n {
                for b in 0..dim {
                    let u = v ^ (1 << b);
                    if v < u {
                        edges.push((v as u32, u as u32));
                    }
                }
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::RandomRegular { n, d } => random_regular(n, d, seed),
        GraphKind::ErdosRenyi { n, p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!("p={p} outside [0,1]")));
            }
            if n == 0 {
                return Err(Error::Parameter("erdos_renyi needs n >= 1".into()));
            }
            let mut rng = rng::stream(seed, &[0x4752_4e50]);
            let mut edges = Vec::new();
            for v in 0..n as u32 {
                for u in (v + 1)..n as u32 {
                    if rng.gen::<f64>() < p {
                        edges.push((v, u));
                    }
                }
            }
            Graph::from_edges(n, &edges)
        }
    }
}

/// Pairing model with whole-matching rejection: exactly uniform over simple
/// pairings. Requires `n*d` even and `d < n`.
fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if n == 0 || d == 0 {
        return Err(Error::Parameter("random_regular needs n >= 1, d >= 1".into()));
    }
    if n * d % 2 != 0 {
        return Err(Error::Parameter(format!(
            "random_regular: n*d must be even, got n={n} d={d}"
        )));
    }
    if d >= n {
        return Err(Error::Parameter(format!(
            "random_regular: need d < n, got n={n} d={d}"
        )));
    }
    let mut rng = rng::stream(seed, &[0x5252_4547]);
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    'resample: loop {
        // Fisher-Yates, then pair consecutive stubs.
        for i in (1..stubs.len()).rev() {
            let j = rng.gen_range(0..=i);
            stubs.swap(i, j);
        }
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        let mut seen = std::collections::HashSet::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'resample;
            }
            edges.push((u, v));
        }
        return Graph::from_edges(n, &edges);
    }
}

/// Parse a whitespace-separated "u v" edge list, 0-based ids.
/// The vertex count is inferred as `max id + 1`.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id = 0u32;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two tokens, got {}", tokens.len()),
            });
        }
        let mut pair = [0u32; 2];
        for (slot, tok) in pair.iter_mut().zip(&tokens) {
            *slot = tok.parse::<u32>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-integer token `{tok}`"),
            })?;
        }
        if pair[0] == pair[1] {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("self-loop at vertex {}", pair[0]),
            });
        }
        max_id = max_id.max(pair[0]).max(pair[1]);
        edges.push((pair[0], pair[1]));
    }
    if edges.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty edge list".into(),
        });
    }
    Graph::from_edges(max_id as usize + 1, &edges)
}

/// Canonical edge-list text: one "u v" per line, lexicographic order,
/// trailing newline. Byte-stable for a given graph.
pub fn save_edge_list(graph: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}
