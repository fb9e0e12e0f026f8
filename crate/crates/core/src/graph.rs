//! Hop-count graph metrics over an undirected simple graph: algebraic
//! connectivity, average shortest path, betweenness and diameter.
//!
//! Disconnected graphs: distances between unreachable pairs are infinite, so
//! the average shortest path and the diameter are `f64::INFINITY`; unreachable
//! pairs contribute nothing to betweenness; λ2 is 0.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::eigen::jacobi_eigen;
use crate::network::BusId;

/// λ2 below this is reported as exactly zero (disconnected).
pub const CONNECTIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("metric needs at least {needed} vertices, graph has {actual}")]
    TooFewVertices { needed: usize, actual: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(BusId),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(BusId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(BusId),
}

/// Undirected simple graph with vertices labelled by bus id.
///
/// Vertices are kept in ascending id order and neighbour lists are sorted,
/// so every traversal is deterministic regardless of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphView {
    vertices: Vec<BusId>,
    adjacency: Vec<Vec<usize>>,
}

impl GraphView {
    pub fn from_edges(
        vertices: impl IntoIterator<Item = BusId>,
        edges: impl IntoIterator<Item = (BusId, BusId)>,
    ) -> Result<Self, GraphError> {
        let mut vertices: Vec<BusId> = vertices.into_iter().collect();
        vertices.sort_unstable();
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateVertex(w[0]));
        }

        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); vertices.len()];
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let ia = vertices.binary_search(&a).map_err(|_| GraphError::UnknownVertex(a))?;
            let ib = vertices.binary_search(&b).map_err(|_| GraphError::UnknownVertex(b))?;
            sets[ia].insert(ib);
            sets[ib].insert(ia);
        }

        Ok(GraphView {
            vertices,
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> &[BusId] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> BusId {
        self.vertices[index]
    }

    pub fn index_of(&self, bus: BusId) -> Option<usize> {
        self.vertices.binary_search(&bus).ok()
    }

    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.adjacency[index]
    }

    pub fn has_edge(&self, a: BusId, b: BusId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.adjacency[i].binary_search(&j).is_ok(),
            _ => false,
        }
    }

    pub fn edges(&self) -> Vec<(BusId, BusId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs.iter().filter(|&&j| j > i) {
                out.push((self.vertices[i], self.vertices[j]));
            }
        }
        out
    }

    /// Hop distances from `source`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components as vertex-index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut members = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.len() <= 1 || self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Subgraph induced by the given bus ids (unknown ids are ignored).
    pub fn induced(&self, keep: &BTreeSet<BusId>) -> GraphView {
        let vertices: Vec<BusId> = self.vertices.iter().copied().filter(|v| keep.contains(v)).collect();
        let edges = self
            .edges()
            .into_iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b));
        GraphView::from_edges(vertices, edges).expect("induced subgraph of a simple graph")
    }

    /// Dense Laplacian D - A in vertex order.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut l = vec![vec![0.0; n]; n];
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            l[i][i] = nbrs.len() as f64;
            for &j in nbrs {
                l[i][j] = -1.0;
            }
        }
        l
    }

    fn require(&self, needed: usize) -> Result<(), GraphError> {
        if self.len() < needed {
            Err(GraphError::TooFewVertices {
                needed,
                actual: self.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Second-smallest Laplacian eigenvalue and its eigenvector (Fiedler pair).
pub fn fiedler_pair(g: &GraphView) -> Result<(f64, Vec<f64>), GraphError> {
    g.require(2)?;
    let eig = jacobi_eigen(&g.laplacian());
    let value = eig.values[1];
    let value = if value < CONNECTIVITY_TOLERANCE { 0.0 } else { value };
    Ok((value, eig.vectors[1].clone()))
}

pub fn algebraic_connectivity(g: &GraphView) -> Result<f64, GraphError> {
    g.require(2)?;
    if !g.is_connected() {
        return Ok(0.0);
    }
    fiedler_pair(g).map(|(value, _)| value)
}

/// Mean hop distance over unordered vertex pairs; infinite if any pair is unreachable.
pub fn average_shortest_path(g: &GraphView) -> Result<f64, GraphError> {
    g.require(2)?;
    let n = g.len();
    let mut total: u64 = 0;
    for s in 0..n {
        for d in g.bfs_distances(s).into_iter().skip(s + 1) {
            match d {
                Some(d) => total += u64::from(d),
                None => return Ok(f64::INFINITY),
            }
        }
    }
    Ok(2.0 * total as f64 / (n * (n - 1)) as f64)
}

/// Longest shortest path in hops; infinite on a disconnected graph.
pub fn diameter(g: &GraphView) -> Result<f64, GraphError> {
    g.require(2)?;
    let mut best = 0;
    for s in 0..g.len() {
        for d in g.bfs_distances(s) {
            match d {
                Some(d) => best = best.max(d),
                None => return Ok(f64::INFINITY),
            }
        }
    }
    Ok(f64::from(best))
}

/// Betweenness of every vertex (Brandes accumulation), summed over unordered
/// source/target pairs and without normalisation.
pub fn betweenness_all(g: &GraphView) -> Vec<f64> {
    let n = g.len();
    let mut centrality = vec![0.0; n];

    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist: Vec<i64> = vec![-1; n];
        sigma[s] = 1.0;
        dist[s] = 0;

        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }

    // every unordered pair was visited from both ends
    centrality.iter_mut().for_each(|c| *c /= 2.0);
    centrality
}

pub fn betweenness(g: &GraphView, bus: BusId) -> Result<f64, GraphError> {
    let index = g.index_of(bus).ok_or(GraphError::UnknownVertex(bus))?;
    Ok(betweenness_all(g)[index])
}

pub fn average_betweenness(g: &GraphView) -> Result<f64, GraphError> {
    g.require(1)?;
    let all = betweenness_all(g);
    Ok(all.iter().sum::<f64>() / all.len() as f64)
}

/// Raw topological metrics; path and diameter may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyMetrics {
    pub lambda2: f64,
    pub avg_shortest_path: f64,
    pub avg_betweenness: f64,
    pub diameter: f64,
}

impl TopologyMetrics {
    pub fn compute(g: &GraphView) -> Result<Self, GraphError> {
        Ok(TopologyMetrics {
            lambda2: algebraic_connectivity(g)?,
            avg_shortest_path: average_shortest_path(g)?,
            avg_betweenness: average_betweenness(g)?,
            diameter: diameter(g)?,
        })
    }

    /// Orient every metric so that larger is better.
    ///
    /// Infinite path length or diameter map to 0. A zero average betweenness
    /// maps to `betweenness_cap`.
    pub fn inverted(&self, betweenness_cap: f64) -> MetricVector {
        let inv = |x: f64| if x.is_finite() && x > 0.0 { 1.0 / x } else { 0.0 };
        MetricVector {
            lambda2: self.lambda2,
            avg_path_inv: inv(self.avg_shortest_path),
            betweenness_inv: if self.avg_betweenness > 0.0 {
                1.0 / self.avg_betweenness
            } else {
                betweenness_cap
            },
            diameter_inv: inv(self.diameter),
        }
    }
}

/// λ2 together with the inverses of L, C_AB and D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricVector {
    pub lambda2: f64,
    pub avg_path_inv: f64,
    pub betweenness_inv: f64,
    pub diameter_inv: f64,
}

impl MetricVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.lambda2, self.avg_path_inv, self.betweenness_inv, self.diameter_inv]
    }
}

pub fn metric_vector(g: &GraphView, betweenness_cap: f64) -> Result<MetricVector, GraphError> {
    Ok(TopologyMetrics::compute(g)?.inverted(betweenness_cap))
}
