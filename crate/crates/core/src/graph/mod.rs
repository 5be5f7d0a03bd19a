//! Spatial adjacency networks.
//!
//! A [`SpatialGraph`] is the contiguity substrate: clusters must induce
//! connected subgraphs of it. Builders cover rook adjacency on grids,
//! Delaunay (Voronoi-neighbour) adjacency on scattered points, mutual
//! k-nearest-neighbour adjacency, and explicit edge lists.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

mod delaunay;
mod spanning;

pub use delaunay::build_delaunay_adjacency;
pub use spanning::{euclidean_weights, log_spanning_tree_count, minimum_spanning_tree};

/// Undirected simple graph over `n_nodes` locations.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    n_nodes: usize,
    coordinates: Option<Vec<(f64, f64)>>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl SpatialGraph {
    /// Build from an edge list. Duplicate and reversed pairs are merged;
    /// self-loops and out-of-range ids are rejected.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        coordinates: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if let Some(c) = &coordinates {
            if c.len() != n_nodes {
                return Err(Error::Input(format!("{} coordinates given for {n_nodes} nodes", c.len())));
            }
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::Input(format!("self-loop at node {i}")));
            }
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::Input(format!("edge ({i}, {j}) references a node outside 0..{n_nodes}")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n_nodes];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n_nodes, coordinates, edges, neighbors })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn coordinates(&self) -> Option<&[(f64, f64)]> {
        self.coordinates.as_deref()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors.get(i).is_some_and(|n| n.binary_search(&j).is_ok())
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n_nodes];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.n_nodes {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes > 0 && self.components().len() == 1
    }

    /// Error unless the graph is non-empty and connected.
    pub fn ensure_connected(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::Graph("graph has no nodes".into()));
        }
        let comps = self.components();
        if comps.len() > 1 {
            return Err(Error::Disconnected { sizes: comps.iter().map(Vec::len).collect() });
        }
        Ok(())
    }

    /// Whether every label class induces a connected subgraph.
    pub fn clusters_are_connected(&self, labels: &[usize]) -> bool {
        if labels.len() != self.n_nodes {
            return false;
        }
        let mut seen = vec![false; self.n_nodes];
        let mut seen_labels = std::collections::HashSet::new();
        let mut stack = Vec::new();
        for start in 0..self.n_nodes {
            if seen[start] {
                continue;
            }
            // a second flood from an already-visited label means a split class
            if !seen_labels.insert(labels[start]) {
                return false;
            }
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if !seen[w] && labels[w] == labels[start] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        true
    }

    /// Pairs of distinct labels joined by at least one edge, as `(a, b)` with
    /// `a < b`.
    pub fn cluster_adjacency(&self, labels: &[usize]) -> Result<BTreeSet<(usize, usize)>> {
        if labels.len() != self.n_nodes {
            return Err(Error::Input(format!("{} labels for a graph of {} nodes", labels.len(), self.n_nodes)));
        }
        Ok(self
            .edges
            .iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (labels[i], labels[j]);
                (a != b).then(|| (a.min(b), a.max(b)))
            })
            .collect())
    }

    /// Rook (4-neighbour) adjacency on a `rows x cols` grid. Nodes are the
    /// retained cells in row-major order.
    pub fn grid(rows: usize, cols: usize, mask: Option<&[bool]>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input("grid dimensions must be positive".into()));
        }
        if let Some(m) = mask {
            if m.len() != rows * cols {
                return Err(Error::Input(format!("mask has {} cells, grid has {}", m.len(), rows * cols)));
            }
        }
        let keep = |cell: usize| mask.is_none_or(|m| m[cell]);
        let mut id = vec![usize::MAX; rows * cols];
        let mut n = 0;
        for (cell, slot) in id.iter_mut().enumerate() {
            if keep(cell) {
                *slot = n;
                n += 1;
            }
        }
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let cell = r * cols + c;
                if !keep(cell) {
                    continue;
                }
                if c + 1 < cols && keep(cell + 1) {
                    edges.push((id[cell], id[cell + 1]));
                }
                if r + 1 < rows && keep(cell + cols) {
                    edges.push((id[cell], id[cell + cols]));
                }
            }
        }
        let coords = (0..rows * cols)
            .filter(|&cell| keep(cell))
            .map(|cell| ((cell % cols) as f64, (cell / cols) as f64))
            .collect();
        let g = Self::from_edges(n, edges, Some(coords))?;
        g.ensure_connected()?;
        Ok(g)
    }

    /// Mutual k-nearest-neighbour adjacency: `i ~ j` when each is among the
    /// other's `k` nearest points (ties by index). May be disconnected.
    pub fn mutual_knn(points: &[(f64, f64)], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("k must be at least 1".into()));
        }
        let n = points.len();
        let knn: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let d2 = |j: usize| {
                    let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                    dx * dx + dy * dy
                };
                others.sort_by(|&a, &b| d2(a).total_cmp(&d2(b)).then(a.cmp(&b)));
                others.truncate(k);
                others.sort_unstable();
                others
            })
            .collect();
        let edges = (0..n).flat_map(|i| {
            let knn = &knn;
            knn[i].iter().copied().filter(move |&j| i < j && knn[j].binary_search(&i).is_ok()).map(move |j| (i, j))
        });
        Self::from_edges(n, edges.collect::<Vec<_>>(), Some(points.to_vec()))
    }

    /// Read a whitespace-separated `i j` edge list with 0-based ids. Blank
    /// lines and `#` comments are skipped.
    pub fn read_edge_list(path: &Path, n_nodes: usize, coordinates: Option<Vec<(f64, f64)>>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut edges = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Input(format!("{}:{}: expected `i j`", path.display(), lineno + 1)))
            };
            let i = parse(parts.next())?;
            let j = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Input(format!("{}:{}: expected exactly two ids", path.display(), lineno + 1)));
            }
            edges.push((i, j));
        }
        Self::from_edges(n_nodes, edges, coordinates)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for &(i, j) in &self.edges {
            writeln!(out, "{i} {j}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Labels `1..=k` numbered by each set's smallest element.
    pub fn canonical_labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut label_of_root = vec![0usize; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if label_of_root[r] == 0 {
                    next += 1;
                    label_of_root[r] = next;
                }
                label_of_root[r]
            })
            .collect()
    }
}

/// Relabel arbitrary cluster ids to `1..=D` in order of each cluster's
/// smallest member.
pub fn canonicalize_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len() + 1;
            *map.entry(l).or_insert(next)
        })
        .collect()
}
