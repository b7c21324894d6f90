//! Immutable simple undirected graphs in compressed adjacency form.
//!
//! Nodes carry dense internal ids `0..n`; the original labels read from an
//! edge-list file are kept alongside so results can be reported in terms of
//! the input. Internal ids are assigned in label order (numeric when every
//! label is an unsigned integer, lexicographic otherwise), which makes the
//! canonical writer and the loader inverse to each other.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Internal node id.
pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: expected at least two tokens")]
    MalformedLine { line: usize },
    #[error("line {line}: unexpected extra columns")]
    ExtraColumns { line: usize },
    #[error("line {line}: self-loop on {label}")]
    SelfLoop { line: usize, label: String },
    #[error("line {line}: duplicate edge {a} {b}")]
    DuplicateEdge { line: usize, a: String, b: String },
    #[error("no edges")]
    NoEdges,
    #[error("node {node} out of range for graph with {node_count} nodes")]
    InvalidNode { node: NodeId, node_count: usize },
    #[error("graph is empty")]
    Empty,
    #[error("graph has no edges")]
    Edgeless,
    #[error("density needs at least two nodes")]
    TooSmall,
    #[error(
        "power iteration did not converge after {iterations} iterations (last estimate {estimate})"
    )]
    NoConvergence { iterations: usize, estimate: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Simple undirected graph. Adjacency lists are sorted and duplicate free.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    labels: Vec<String>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.node_count())
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl Graph {
    /// Builds a graph on `n` nodes labelled `"0".."n-1"`. Self-loops are
    /// dropped and repeated edges collapsed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_labeled_edges(labels, edges)
    }

    pub(crate) fn from_labeled_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Self {
        let n = labels.len();
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(
                (u as usize) < n && (v as usize) < n,
                "edge ({u}, {v}) out of range for {n} nodes"
            );
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Graph {
            offsets,
            neighbors,
            labels,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.offsets
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Looks up the internal id of an original label.
    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        let key = LabelKey::new(label);
        self.labels
            .binary_search_by(|l| LabelKey::new(l).cmp(&key))
            .ok()
            .map(|i| i as NodeId)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        0..self.node_count() as NodeId
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn check_node(&self, v: NodeId) -> Result<(), GraphError> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidNode {
                node: v,
                node_count: self.node_count(),
            })
        }
    }

    /// Induced subgraph on `keep` (sorted, distinct). Relative id order and
    /// labels are preserved.
    pub fn induced_subgraph(&self, keep: &NodeSet) -> Graph {
        let mut remap = vec![NodeId::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old as usize] = new as NodeId;
        }
        let labels = keep
            .iter()
            .map(|&v| self.labels[v as usize].clone())
            .collect();
        let edges = self.edges().filter_map(|(u, v)| {
            let (a, b) = (remap[u as usize], remap[v as usize]);
            (a != NodeId::MAX && b != NodeId::MAX).then_some((a, b))
        });
        Graph::from_labeled_edges(labels, edges)
    }
}

/// Sort key for labels: unsigned integers numerically, then everything else
/// lexicographically.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum LabelKey<'a> {
    // (significant digit count, significant digits, full label)
    Numeric(usize, &'a str, &'a str),
    Text(&'a str),
}

impl<'a> LabelKey<'a> {
    fn new(label: &'a str) -> Self {
        if !label.is_empty() && label.bytes().all(|b| b.is_ascii_digit()) {
            let digits = label.trim_start_matches('0');
            LabelKey::Numeric(digits.len(), digits, label)
        } else {
            LabelKey::Text(label)
        }
    }
}

fn label_cmp(a: &str, b: &str) -> Ordering {
    LabelKey::new(a).cmp(&LabelKey::new(b))
}

/// Sorted set of distinct node ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(Vec<NodeId>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(Vec::new())
    }

    pub fn from_sorted(ids: Vec<NodeId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        NodeSet(ids)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Inserts `v`, returning false if it was already present.
    pub fn insert(&mut self, v: NodeId) -> bool {
        match self.0.binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, v);
                true
            }
        }
    }

    pub fn remove(&mut self, v: NodeId) -> bool {
        match self.0.binary_search(&v) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, NodeId> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut ids: Vec<NodeId> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        NodeSet(ids)
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = &'a NodeId;
    type IntoIter = std::slice::Iter<'a, NodeId>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    pub collapse_duplicates: bool,
    pub drop_self_loops: bool,
    pub ignore_extra_columns: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            collapse_duplicates: true,
            drop_self_loops: true,
            ignore_extra_columns: true,
        }
    }
}

/// Reads a whitespace-separated edge list. Lines starting with `#` or `%`
/// are comments; direction and any extra columns (weights, signs) are
/// discarded.
pub fn load_edge_list<R: BufRead>(reader: R, options: LoadOptions) -> Result<Graph, GraphError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut raw_edges: Vec<(usize, usize, usize)> = Vec::new();

    let mut intern = |tok: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&id) = ids.get(tok) {
            return id;
        }
        let id = labels.len();
        labels.push(tok.to_owned());
        ids.insert(tok.to_owned(), id);
        id
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let (a, b) = match (toks.next(), toks.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(GraphError::MalformedLine { line: lineno }),
        };
        if !options.ignore_extra_columns && toks.next().is_some() {
            return Err(GraphError::ExtraColumns { line: lineno });
        }
        if a == b {
            if options.drop_self_loops {
                continue;
            }
            return Err(GraphError::SelfLoop {
                line: lineno,
                label: a.to_owned(),
            });
        }
        let u = intern(a, &mut raw_labels);
        let v = intern(b, &mut raw_labels);
        raw_edges.push((u.min(v), u.max(v), lineno));
    }

    if raw_edges.is_empty() {
        return Err(GraphError::NoEdges);
    }

    // Renumber in label order.
    let mut order: Vec<usize> = (0..raw_labels.len()).collect();
    order.sort_by(|&a, &b| label_cmp(&raw_labels[a], &raw_labels[b]));
    let mut rank = vec![0 as NodeId; raw_labels.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new as NodeId;
    }
    let labels: Vec<String> = order.iter().map(|&i| raw_labels[i].clone()).collect();

    let mut edges: Vec<(NodeId, NodeId, usize)> = raw_edges
        .into_iter()
        .map(|(u, v, line)| {
            let (a, b) = (rank[u], rank[v]);
            (a.min(b), a.max(b), line)
        })
        .collect();
    edges.sort_unstable();
    if !options.collapse_duplicates {
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(GraphError::DuplicateEdge {
                line: w[0].2.max(w[1].2),
                a: labels[w[1].0 as usize].clone(),
                b: labels[w[1].1 as usize].clone(),
            });
        }
    }
    Ok(Graph::from_labeled_edges(
        labels,
        edges.into_iter().map(|(u, v, _)| (u, v)),
    ))
}

pub fn load_edge_list_str(text: &str, options: LoadOptions) -> Result<Graph, GraphError> {
    load_edge_list(text.as_bytes(), options)
}

/// Writes the canonical form: one `u v` line per edge with `u < v`, internal
/// ids, ascending.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> io::Result<()> {
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

/// Writes the `id<TAB>original_label` sidecar.
pub fn write_label_map<W: Write>(g: &Graph, mut out: W) -> io::Result<()> {
    for v in g.nodes() {
        writeln!(out, "{v}\t{}", g.label(v))?;
    }
    out.flush()
}

/// Connected components as sorted node sets, ordered by their minimum id.
pub fn connected_components(g: &Graph) -> Vec<NodeSet> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[start] = id;
        queue.push_back(start as NodeId);
        let mut members = Vec::new();
        while let Some(u) = queue.pop_front() {
            members.push(u);
            for &v in g.neighbors(u) {
                if comp[v as usize] == usize::MAX {
                    comp[v as usize] = id;
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        out.push(NodeSet(members));
    }
    out
}

/// Induced subgraph on the largest component. Ties go to the component
/// holding the smallest original label.
pub fn largest_connected_component(g: &Graph) -> Graph {
    let comps = connected_components(g);
    // Components come out ordered by minimum id, and ids follow label order,
    // so the first maximal component wins ties.
    let best = comps
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
        .map(|(_, c)| c.clone());
    match best {
        Some(c) if c.len() == g.node_count() => g.clone(),
        Some(c) => g.induced_subgraph(&c),
        None => g.clone(),
    }
}

/// Number of edges leaving `cluster`.
pub fn cluster_degree(g: &Graph, cluster: &NodeSet) -> Result<usize, GraphError> {
    let mut total = 0;
    for &u in cluster {
        g.check_node(u)?;
        total += g
            .neighbors(u)
            .iter()
            .filter(|&&v| !cluster.contains(v))
            .count();
    }
    Ok(total)
}

/// Multi-source BFS hop counts; `None` for nodes no source reaches.
pub fn bfs_distances(g: &Graph, sources: &NodeSet) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.node_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s as usize] = Some(0);
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize].expect("queued nodes have a distance");
        for &v in g.neighbors(u) {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

#[derive(Clone, Debug)]
pub struct PeripheryReport {
    pub hub_set: NodeSet,
    /// Hops to the closest hub; `None` when no hub is reachable.
    pub hop_distance: Vec<Option<u32>>,
    pub peripheral_set: NodeSet,
    pub hub_fraction: f64,
    pub min_hops: u32,
}

/// Hubs are nodes whose degree is strictly greater than
/// `hub_fraction * max_degree`; peripheral nodes sit at least `min_hops`
/// from every hub (or cannot reach one).
pub fn classify_periphery(
    g: &Graph,
    hub_fraction: f64,
    min_hops: u32,
) -> Result<PeripheryReport, GraphError> {
    if g.node_count() == 0 {
        return Err(GraphError::Empty);
    }
    if !(hub_fraction > 0.0 && hub_fraction <= 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "hub_fraction must lie in (0, 1], got {hub_fraction}"
        )));
    }
    let threshold = hub_fraction * g.max_degree() as f64;
    let hub_set: NodeSet = g
        .nodes()
        .filter(|&v| g.degree(v) as f64 > threshold)
        .collect();
    let hop_distance = bfs_distances(g, &hub_set);
    let peripheral_set = g
        .nodes()
        .filter(|&v| hop_distance[v as usize].is_none_or(|d| d >= min_hops))
        .collect();
    Ok(PeripheryReport {
        hub_set,
        hop_distance,
        peripheral_set,
        hub_fraction,
        min_hops,
    })
}

/// Spectral radius of the adjacency matrix by power iteration.
///
/// Iterates on `A + I` so bipartite graphs do not oscillate between `±α`,
/// starting from the normalised degree vector. Stops when successive
/// Rayleigh quotients differ by less than `tol`.
pub fn largest_eigenvalue(g: &Graph, tol: f64, max_iter: usize) -> Result<f64, GraphError> {
    if g.node_count() == 0 {
        return Err(GraphError::Empty);
    }
    if g.edge_count() == 0 {
        return Err(GraphError::Edgeless);
    }
    let n = g.node_count();
    let mut x: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        shifted_matvec(g, &x, &mut y);
        // x is unit length, so x·(A+I)x is the Rayleigh quotient.
        let rq: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        estimate = rq - 1.0;
        if (estimate - prev).abs() < tol {
            return Ok(estimate);
        }
        prev = estimate;
        std::mem::swap(&mut x, &mut y);
        normalize(&mut x);
    }
    Err(GraphError::NoConvergence {
        iterations: max_iter,
        estimate,
    })
}

fn shifted_matvec(g: &Graph, x: &[f64], y: &mut [f64]) {
    for (u, out) in y.iter_mut().enumerate() {
        let s: f64 = g
            .neighbors(u as NodeId)
            .iter()
            .map(|&v| x[v as usize])
            .sum();
        *out = s + x[u];
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Edge density `m / (n (n-1) / 2)`.
pub fn density(g: &Graph) -> Result<f64, GraphError> {
    let n = g.node_count();
    if n < 2 {
        return Err(GraphError::TooSmall);
    }
    Ok(g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0) / 2.0))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n as NodeId).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n as NodeId).map(|i| (i, (i + 1) % n as NodeId)))
    }

    pub fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves as NodeId).map(|i| (0, i)))
    }

    pub fn complete(n: usize) -> Graph {
        let n = n as NodeId;
        Graph::from_edges(
            n as usize,
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))),
        )
    }
}
