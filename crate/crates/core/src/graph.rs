//! Undirected simple graphs: representation, random generation, shortest
//! paths, edge-list files, and dataset assembly with train/val/test splits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::seeding::derive_seed;

/// Immutable connected undirected simple graph with dense node indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Build from an edge list over `n` nodes. Edges are normalized to
    /// `(min, max)`, deduplicated, and self-loops are rejected. The graph is
    /// not required to be connected here; see [`Graph::largest_component`].
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: normalized,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_from(0).iter().all(|d| d.is_some())
    }

    fn bfs_from(&self, start: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n];
        dist[start] = Some(0);
        let mut queue = VecDeque::with_capacity(self.n);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Largest connected component, relabeled to dense indices `0..m` in
    /// ascending original order. Returns the subgraph and whether nodes were
    /// dropped.
    pub fn largest_component(&self) -> (Graph, bool) {
        let mut component = vec![usize::MAX; self.n];
        let mut sizes: Vec<usize> = Vec::new();
        for start in 0..self.n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::new();
            component[start] = id;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &v in &self.adjacency[u] {
                    if component[v] == usize::MAX {
                        component[v] = id;
                        queue.push_back(v);
                    }
                }
            }
            sizes.push(size);
        }
        let best = sizes
            .iter()
            .enumerate()
            .max_by_key(|&(i, &s)| (s, std::cmp::Reverse(i)))
            .map(|(i, _)| i)
            .unwrap();
        if sizes.len() == 1 {
            return (self.clone(), false);
        }
        let mut relabel = vec![usize::MAX; self.n];
        let mut next = 0;
        for u in 0..self.n {
            if component[u] == best {
                relabel[u] = next;
                next += 1;
            }
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|&&(u, v)| component[u] == best && component[v] == best)
            .map(|&(u, v)| (relabel[u], relabel[v]))
            .collect();
        let sub = Graph::new(next, &edges).expect("component relabeling is valid");
        (sub, true)
    }

    /// Apply a node permutation: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::InvalidArgument(
                "permutation length != node count".into(),
            ));
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        Graph::new(self.n, &edges)
    }
}

/// All-pairs shortest-path distances of a connected graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.n + j]
    }

    /// Number of unordered node pairs, the averaging divisor for stress.
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// Exact unweighted all-pairs shortest paths via one BFS per node.
pub fn bfs_all_pairs(g: &Graph) -> Result<DistanceMatrix> {
    let n = g.node_count();
    let mut d = vec![0u32; n * n];
    for start in 0..n {
        let dist = g.bfs_from(start);
        for (v, dv) in dist.iter().enumerate() {
            match dv {
                Some(x) => d[start * n + v] = *x,
                None => return Err(Error::Disconnected { a: start, b: v }),
            }
        }
    }
    Ok(DistanceMatrix { n, d })
}

/// G(n, p) sampling with geometric skips, so the cost is proportional to the
/// number of generated edges rather than the number of candidate pairs.
fn sample_gnp(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    debug_assert!((0.0..1.0).contains(&p) && p > 0.0);
    let mut edges = Vec::new();
    let log_q = (1.0 - p).ln();
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let r: f64 = rng.gen_range(0.0..1.0);
        let skip = ((1.0 - r).ln() / log_q).floor() as i64;
        w += 1 + skip;
        while v < n && w >= v as i64 {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((v, w as usize));
        }
    }
    edges
}

const GENERATOR_RETRIES: usize = 64;

/// Largest connected component of a G(n, p) sample. Deterministic per seed;
/// retries with successor seeds when the component has fewer than 2 nodes.
pub fn generate_er_sparse(n: usize, p: f64, seed: u64) -> Result<Graph> {
    assert!(n >= 2, "need at least 2 nodes");
    assert!(p > 0.0 && p < 1.0, "edge probability must be in (0, 1)");
    for attempt in 0..GENERATOR_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let edges = sample_gnp(n, p, &mut rng);
        let g = Graph::new(n, &edges)?;
        let (component, _) = g.largest_component();
        if component.node_count() >= 2 {
            return Ok(component);
        }
    }
    Err(Error::GeneratorExhausted {
        attempts: GENERATOR_RETRIES,
    })
}

/// Split tag for dataset graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// A collection of graphs with disjoint train/validation/test assignments.
#[derive(Clone, Debug)]
pub struct GraphDataset {
    pub graphs: Vec<Graph>,
    pub splits: Vec<Split>,
}

impl GraphDataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }
}

/// 75/10/15 split assignment: shuffle with the dataset seed, then slice.
/// Rounding assigns validation and test first, the remainder (including a
/// singleton dataset) goes to train.
fn assign_splits(count: usize, seed: u64) -> Vec<Split> {
    let n_val = (0.10 * count as f64).round() as usize;
    let n_test = (0.15 * count as f64).round() as usize;
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x517A_17));
    // Fisher-Yates
    for i in (1..count).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut splits = vec![Split::Train; count];
    for &i in order.iter().skip(count - n_val - n_test).take(n_val) {
        splits[i] = Split::Validation;
    }
    for &i in order.iter().skip(count - n_test) {
        splits[i] = Split::Test;
    }
    splits
}

const DATASET_ATTEMPTS: usize = 1000;

/// One sparse-dataset slot: n uniform in [20, 100], p uniform in (0.01, 0.05),
/// discard samples with more than 60 nodes and more than 120 edges, keep the
/// largest connected component (regenerating until it has at least
/// `min_nodes` nodes).
fn sparse_graph_for_slot(seed: u64, slot: u64, min_nodes: usize) -> Result<Graph> {
    for attempt in 0..DATASET_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, slot, attempt as u64));
        let n = rng.gen_range(20..=100usize);
        let p = rng.gen_range(0.01..0.05f64);
        let edges = sample_gnp(n, p, &mut rng);
        let g = Graph::new(n, &edges)?;
        if g.node_count() > 60 && g.edge_count() > 120 {
            continue;
        }
        let (component, _) = g.largest_component();
        if component.node_count() >= min_nodes.max(2) {
            return Ok(component);
        }
    }
    Err(Error::GeneratorExhausted {
        attempts: DATASET_ATTEMPTS,
    })
}

/// Sparse random-graph dataset: `count` largest components of G(n, p) samples
/// with n in [20, 100] and p in (0.01, 0.05), split 75/10/15.
pub fn build_sparse_dataset(count: usize, seed: u64) -> Result<GraphDataset> {
    build_sparse_dataset_with_min_nodes(count, seed, 2)
}

/// Same recipe as [`build_sparse_dataset`] but regenerates any slot whose
/// largest component is smaller than `min_nodes`. Positional encodings of
/// dimension k need graphs with at least k + 1 nodes, so training datasets
/// set a floor here.
pub fn build_sparse_dataset_with_min_nodes(
    count: usize,
    seed: u64,
    min_nodes: usize,
) -> Result<GraphDataset> {
    assert!(count >= 1, "dataset needs at least one graph");
    let graphs: Result<Vec<Graph>> = (0..count)
        .into_par_iter()
        .map(|slot| sparse_graph_for_slot(seed, slot as u64, min_nodes))
        .collect();
    Ok(GraphDataset {
        graphs: graphs?,
        splits: assign_splits(count, seed),
    })
}

/// Result of parsing an edge-list file.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// True when largest-component extraction dropped nodes.
    pub dropped_nodes: bool,
}

/// Parse the plain edge-list format: first line is the node count, each
/// following non-empty line is `u v`, `#` starts a comment line.
pub fn load_edge_list(text: &str) -> Result<LoadedGraph> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if n.is_none() {
            n = Some(line.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("expected node count, got {line:?}"),
            })?);
            continue;
        }
        let mut parts = line.split_whitespace();
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => {
                let u: usize = a.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node index {a:?}"),
                })?;
                let v: usize = b.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node index {b:?}"),
                })?;
                (u, v)
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected \"u v\", got {line:?}"),
                })
            }
        };
        if u == v {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("self-loop {u} {u}"),
            });
        }
        let limit = n.unwrap();
        if u >= limit || v >= limit {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("edge ({u}, {v}) out of range for {limit} nodes"),
            });
        }
        edges.push((u, v));
    }
    let n = n.ok_or(Error::EmptyGraph)?;
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let g = Graph::new(n, &edges)?;
    let connected = g.is_connected();
    let (component, _) = g.largest_component();
    Ok(LoadedGraph {
        dropped_nodes: !connected,
        graph: component,
    })
}

/// Serialize a graph in the edge-list format accepted by [`load_edge_list`].
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = String::with_capacity(8 * g.edge_count() + 16);
    out.push_str(&g.node_count().to_string());
    out.push('\n');
    for &(u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn bfs_path_distances() {
        let d = bfs_all_pairs(&path3()).unwrap();
        let expect = [[0, 1, 2], [1, 0, 1], [2, 1, 0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn bfs_complete_graph_diameter_one() {
        let k4 = Graph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let d = bfs_all_pairs(&k4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.get(i, j), u32::from(i != j));
            }
        }
    }

    #[test]
    fn bfs_matches_floyd_warshall_on_er_sample() {
        let g = generate_er_sparse(20, 0.3, 99).unwrap();
        let d = bfs_all_pairs(&g).unwrap();
        let fw = oracles::floyd_warshall(&g);
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                assert_eq!(d.get(i, j) as f64, fw[i][j]);
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn bfs_disconnected_names_pair() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let err = bfs_all_pairs(&g).unwrap_err();
        assert!(matches!(err, Error::Disconnected { .. }), "{err}");
    }

    #[test]
    fn er_dense_probability_keeps_almost_all_nodes() {
        let g = generate_er_sparse(40, 0.99, 5).unwrap();
        assert!(g.node_count() >= 39);
        assert!(g.is_connected());
    }

    #[test]
    fn er_sparse_component_is_small() {
        let g = generate_er_sparse(30, 0.01, 5).unwrap();
        assert!(g.node_count() <= 30);
        assert!(g.node_count() >= 2);
        assert!(g.is_connected());
    }

    #[test]
    fn er_deterministic_per_seed() {
        let a = generate_er_sparse(50, 0.03, 1234).unwrap();
        let b = generate_er_sparse(50, 0.03, 1234).unwrap();
        assert_eq!(a, b);
        let c = generate_er_sparse(50, 0.03, 1235).unwrap();
        assert!(a != c || a.edge_count() == c.edge_count());
    }

    #[test]
    fn dataset_discard_rule_holds() {
        let ds = build_sparse_dataset(200, 7).unwrap();
        assert_eq!(ds.len(), 200);
        for g in &ds.graphs {
            assert!(
                !(g.node_count() > 60 && g.edge_count() > 120),
                "{} nodes / {} edges violates the discard rule",
                g.node_count(),
                g.edge_count()
            );
            assert!(g.is_connected());
        }
    }

    #[test]
    fn dataset_split_sizes() {
        let ds = build_sparse_dataset(200, 7).unwrap();
        assert_eq!(ds.indices_of(Split::Train).len(), 150);
        assert_eq!(ds.indices_of(Split::Validation).len(), 20);
        assert_eq!(ds.indices_of(Split::Test).len(), 30);
    }

    #[test]
    fn dataset_singleton_goes_to_train() {
        let ds = build_sparse_dataset(1, 3).unwrap();
        assert_eq!(ds.splits, vec![Split::Train]);
    }

    #[test]
    fn dataset_is_pure_function_of_count_and_seed() {
        let a = build_sparse_dataset(20, 42).unwrap();
        let b = build_sparse_dataset(20, 42).unwrap();
        assert_eq!(a.graphs, b.graphs);
        assert_eq!(a.splits, b.splits);
    }

    #[test]
    fn dataset_orders_concentrate_low() {
        // sparse connection pattern: most components stay well under the cap
        let ds = build_sparse_dataset(300, 11).unwrap();
        let small = ds.graphs.iter().filter(|g| g.node_count() <= 60).count();
        assert!(small as f64 >= 0.7 * ds.len() as f64);
    }

    #[test]
    fn load_simple_path() {
        let loaded = load_edge_list("3\n0 1\n1 2\n").unwrap();
        assert_eq!(loaded.graph, path3());
        assert!(!loaded.dropped_nodes);
    }

    #[test]
    fn load_dedups_both_orientations() {
        let loaded = load_edge_list("2\n0 1\n1 0\n").unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
    }

    #[test]
    fn load_rejects_self_loop_with_line_number() {
        let err = load_edge_list("3\n0 1\n2 2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_rejects_malformed_line() {
        let err = load_edge_list("3\n0 1\nhello\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn load_empty_is_error() {
        assert!(load_edge_list("").is_err());
        assert!(load_edge_list("# only a comment\n").is_err());
    }

    #[test]
    fn load_extracts_largest_component_with_warning() {
        let loaded = load_edge_list("5\n0 1\n1 2\n3 4\n").unwrap();
        assert!(loaded.dropped_nodes);
        assert_eq!(loaded.graph.node_count(), 3);
        assert!(loaded.graph.is_connected());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = generate_er_sparse(30, 0.2, 8).unwrap();
        let text = to_edge_list(&g);
        let back = load_edge_list(&text).unwrap();
        assert_eq!(back.graph, g);
        assert!(!back.dropped_nodes);
    }
}
