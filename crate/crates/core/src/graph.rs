//! Nearest-neighbour graph over the patch cloud and its shortest-path
//! (geodesic) distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::image::PatchMatrix;
use crate::{Error, Result};

/// Euclidean distance between two patch vectors.
pub fn patch_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "patch lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(squared_distance(a, b).sqrt())
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Simple undirected weighted graph. Adjacency lists are sorted by neighbour.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PatchGraph {
    /// Builds a graph from undirected edges. Repeated pairs keep the smaller
    /// weight.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut normalised = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) has weight {w}"
                )));
            }
            normalised.push((a.min(b), a.max(b), w));
        }
        Ok(Self::from_sorted_unique(vertex_count, normalised))
    }

    fn from_sorted_unique(vertex_count: usize, mut edges: Vec<(usize, usize, f64)>) -> Self {
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
        edges.dedup_by(|later, earlier| later.0 == earlier.0 && later.1 == earlier.1);
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (a, b, w) in edges {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        Self { adjacency }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a]
            .binary_search_by_key(&b, |&(v, _)| v)
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    /// Undirected edges with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| {
                list.iter()
                    .filter(move |&&(b, _)| a < b)
                    .map(move |&(b, w)| (a, b, w))
            })
            .collect()
    }

    /// Component label for every vertex, labels numbered in order of their
    /// smallest vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adjacency[v] {
                    if label[u] == usize::MAX {
                        label[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }
}

/// Joins every patch to its `delta` nearest patches, then symmetrizes by
/// union. Ties at equal distance go to the lower vertex index.
pub fn build_knn_graph(patches: &PatchMatrix, delta: usize) -> Result<PatchGraph> {
    knn_graph_from_rows(patches.rows(), delta)
}

/// Same as [`build_knn_graph`] for an arbitrary point cloud (one point per row).
pub fn knn_graph_from_rows(points: ArrayView2<f64>, delta: usize) -> Result<PatchGraph> {
    let n = points.nrows();
    if delta == 0 {
        return Err(Error::InvalidParameter(
            "neighbour count must be at least 1".into(),
        ));
    }
    if delta >= n {
        return Err(Error::InvalidParameter(format!(
            "neighbour count {delta} must be below the number of patches {n}"
        )));
    }

    let directed: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(pi, points.row(j)), j))
                .collect();
            let by_dist =
                |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
            if delta < cand.len() {
                cand.select_nth_unstable_by(delta - 1, by_dist);
                cand.truncate(delta);
            }
            cand.sort_by(by_dist);
            cand.into_iter()
                .map(|(d2, j)| (i.min(j), i.max(j), d2.sqrt()))
                .collect()
        })
        .collect();

    let edges = directed.into_iter().flatten().collect();
    Ok(PatchGraph::from_sorted_unique(n, edges))
}

/// Result of [`ensure_connected`].
#[derive(Clone, Debug)]
pub struct Connected {
    pub graph: PatchGraph,
    pub added_edges: usize,
}

/// Adds shortest Euclidean bridges between components until the graph is
/// connected. With `k` components exactly `k - 1` edges are added, forming
/// a minimum spanning tree over the contracted components.
pub fn ensure_connected(graph: &PatchGraph, patches: &PatchMatrix) -> Result<Connected> {
    connect_rows(graph, patches.rows())
}

pub fn connect_rows(graph: &PatchGraph, points: ArrayView2<f64>) -> Result<Connected> {
    let n = graph.vertex_count();
    if points.nrows() != n {
        return Err(Error::InvalidArgument(format!(
            "graph has {n} vertices but {} points were given",
            points.nrows()
        )));
    }
    let (count, label) = graph.components();
    if count <= 1 {
        return Ok(Connected {
            graph: graph.clone(),
            added_edges: 0,
        });
    }

    let mut members = vec![Vec::new(); count];
    for (v, &c) in label.iter().enumerate() {
        members[c].push(v);
    }

    // Prim's algorithm on the contracted graph: whole components join the
    // tree at once, and each step takes the shortest edge leaving it.
    let mut in_tree = vec![false; n];
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
    let mut bridges = Vec::with_capacity(count - 1);

    let absorb = |comp: usize, in_tree: &mut Vec<bool>, best: &mut Vec<(f64, usize)>| {
        for &v in &members[comp] {
            in_tree[v] = true;
        }
        let fresh = &members[comp];
        best.par_iter_mut().enumerate().for_each(|(u, slot)| {
            if label[u] == comp {
                return;
            }
            for &v in fresh {
                let d = squared_distance(points.row(u), points.row(v));
                if d < slot.0 || (d == slot.0 && v < slot.1) {
                    *slot = (d, v);
                }
            }
        });
    };

    absorb(0, &mut in_tree, &mut best);
    for _ in 1..count {
        let (u, (d2, v)) = best
            .iter()
            .enumerate()
            .filter(|(u, _)| !in_tree[*u])
            .min_by(|a, b| {
                a.1 .0
                    .total_cmp(&b.1 .0)
                    .then(a.1 .1.cmp(&b.1 .1))
                    .then(a.0.cmp(&b.0))
            })
            .map(|(u, s)| (u, *s))
            .expect("an unabsorbed component remains");
        bridges.push((u.min(v), u.max(v), d2.sqrt()));
        absorb(label[u], &mut in_tree, &mut best);
    }

    let added_edges = bridges.len();
    let mut edges = graph.edges();
    edges.extend(bridges);
    Ok(Connected {
        graph: PatchGraph::from_sorted_unique(n, edges),
        added_edges,
    })
}

/// Dense symmetric matrix of shortest-path distances.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicMatrix(Array2<f64>);

impl GeodesicMatrix {
    pub fn from_array(distances: Array2<f64>) -> Result<Self> {
        if distances.nrows() != distances.ncols() {
            return Err(Error::InvalidArgument(format!(
                "distance matrix must be square, got {:?}",
                distances.dim()
            )));
        }
        Ok(Self(distances))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[[a, b]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    vertex: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then on vertex index.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Adjacency flattened into one array, indexed by per-vertex offsets.
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<(u32, f64)>,
}

impl Csr {
    fn new(graph: &PatchGraph) -> Self {
        let mut offsets = Vec::with_capacity(graph.vertex_count() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in &graph.adjacency {
            targets.extend(list.iter().map(|&(u, w)| (u as u32, w)));
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }
}

fn dijkstra_into(graph: &Csr, source: usize, dist: &mut [f64], heap: &mut BinaryHeap<Frontier>) {
    dist.fill(f64::INFINITY);
    dist[source] = 0.0;
    heap.clear();
    heap.push(Frontier {
        dist: 0.0,
        vertex: source,
    });
    while let Some(Frontier { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in &graph.targets[graph.offsets[v]..graph.offsets[v + 1]] {
            let u = u as usize;
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Frontier {
                    dist: nd,
                    vertex: u,
                });
            }
        }
    }
}

/// All-pairs shortest paths, one Dijkstra run per source. The two
/// directions of each pair are reconciled by taking the smaller value so the
/// result is exactly symmetric.
pub fn geodesic_distances(graph: &PatchGraph) -> Result<GeodesicMatrix> {
    let n = graph.vertex_count();
    let (components, _) = graph.components();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let csr = Csr::new(graph);
    let mut d = Array2::<f64>::zeros((n, n));
    d.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each_init(BinaryHeap::new, |heap, (s, row)| {
            dijkstra_into(&csr, s, row, heap)
        });

    // Symmetrize tile by tile to stay in cache.
    const TILE: usize = 64;
    for a0 in (0..n).step_by(TILE) {
        for b0 in (a0..n).step_by(TILE) {
            for a in a0..(a0 + TILE).min(n) {
                for b in b0.max(a + 1)..(b0 + TILE).min(n) {
                    let m = d[[a, b]].min(d[[b, a]]);
                    d[[a, b]] = m;
                    d[[b, a]] = m;
                }
            }
        }
    }
    Ok(GeodesicMatrix(d))
}
