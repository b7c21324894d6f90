//! Expected Reach by exhaustive enumeration of infection clusters, its Monte
//! Carlo counterpart, Expected Wait quantization, and the accessibility
//! baseline.
//!
//! A cluster grows one infection at a time from the seed. Its degree (edges
//! from members to non-members) is maintained incrementally: adding a
//! frontier node `v` with `e_v` edges into the cluster changes the degree by
//! `deg(v) - 2 e_v`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};

/// Default enumeration depth cap.
pub const DEFAULT_X_MAX: u32 = 5;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("x = {x} exceeds the enumeration cap {x_max}")]
    DepthTooLarge { x: u32, x_max: u32 },
    #[error("expected reach must be positive, got {0}")]
    NonPositiveReach(f64),
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("node {0} is isolated")]
    IsolatedNode(NodeId),
    #[error("walk length must be at least 1")]
    ZeroWalkLength,
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("unknown expectation mode `{0}`")]
    UnknownMode(String),
}

/// How terminal clusters are weighted when taking the expectation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ErMode {
    /// Each branch weighted by the probability the SI process takes it:
    /// `e_v / cluster_deg` per step.
    #[default]
    Process,
    /// Every infection sequence counts once.
    SequenceUniform,
    /// Every distinct terminal member set counts once.
    ClusterUniform,
}

impl ErMode {
    pub const ALL: [ErMode; 3] = [
        ErMode::Process,
        ErMode::SequenceUniform,
        ErMode::ClusterUniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErMode::Process => "process",
            ErMode::SequenceUniform => "sequence_uniform",
            ErMode::ClusterUniform => "cluster_uniform",
        }
    }
}

impl fmt::Display for ErMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErMode {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "process" => Ok(ErMode::Process),
            "sequence_uniform" => Ok(ErMode::SequenceUniform),
            "cluster_uniform" => Ok(ErMode::ClusterUniform),
            other => Err(MetricError::UnknownMode(other.to_owned())),
        }
    }
}

/// Probability of reaching a branch. Exact while numerator and denominator
/// fit in `i128`, floating point after that.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchWeight {
    Exact(Ratio<i128>),
    Approx(f64),
}

impl BranchWeight {
    pub const ONE: BranchWeight = BranchWeight::Exact(Ratio::new_raw(1, 1));

    pub fn to_f64(self) -> f64 {
        match self {
            BranchWeight::Exact(r) => ratio_to_f64(r),
            BranchWeight::Approx(x) => x,
        }
    }

    /// Multiplies by `num / den`.
    fn scaled(self, num: usize, den: usize) -> BranchWeight {
        match self {
            BranchWeight::Exact(r) => {
                let n = r.numer().checked_mul(num as i128);
                let d = r.denom().checked_mul(den as i128);
                match (n, d) {
                    (Some(n), Some(d)) => BranchWeight::Exact(Ratio::new(n, d)),
                    _ => BranchWeight::Approx(ratio_to_f64(r) * num as f64 / den as f64),
                }
            }
            BranchWeight::Approx(x) => BranchWeight::Approx(x * num as f64 / den as f64),
        }
    }
}

fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    // Split off the integer part so large numerators keep their precision.
    let (n, d) = (*r.numer(), *r.denom());
    let whole = n / d;
    let rem = n % d;
    whole as f64 + rem as f64 / d as f64
}

/// Running sum of `weight * value` that stays exact as long as it can.
#[derive(Clone, Copy, Debug)]
struct WeightedSum {
    exact: Option<Ratio<i128>>,
    approx: f64,
}

impl WeightedSum {
    fn new() -> Self {
        WeightedSum {
            exact: Some(Ratio::from_integer(0)),
            approx: 0.0,
        }
    }

    fn add(&mut self, w: BranchWeight, value: usize) {
        let term_f = w.to_f64() * value as f64;
        self.approx += term_f;
        self.exact = match (self.exact, w) {
            (Some(acc), BranchWeight::Exact(r)) => r
                .numer()
                .checked_mul(value as i128)
                .map(|n| Ratio::new(n, *r.denom()))
                .and_then(|t| checked_ratio_add(acc, t)),
            _ => None,
        };
    }

    fn value(&self) -> f64 {
        match self.exact {
            Some(r) => ratio_to_f64(r),
            None => self.approx,
        }
    }
}

fn checked_ratio_add(a: Ratio<i128>, b: Ratio<i128>) -> Option<Ratio<i128>> {
    let g = gcd_i128(*a.denom(), *b.denom());
    let lcm = (a.denom() / g).checked_mul(*b.denom())?;
    let an = a.numer().checked_mul(lcm / a.denom())?;
    let bn = b.numer().checked_mul(lcm / b.denom())?;
    Some(Ratio::new(an.checked_add(bn)?, lcm))
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// A growing infected cluster.
#[derive(Clone, Debug)]
pub struct ClusterState {
    members: Vec<NodeId>,
    cluster_deg: usize,
    weight: BranchWeight,
}

impl ClusterState {
    fn seeded(g: &Graph, seed: NodeId) -> Self {
        ClusterState {
            members: vec![seed],
            cluster_deg: g.degree(seed),
            weight: BranchWeight::ONE,
        }
    }

    /// Members in ascending order.
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn cluster_deg(&self) -> usize {
        self.cluster_deg
    }

    /// Process-mode probability of this branch.
    pub fn weight(&self) -> BranchWeight {
        self.weight
    }

    /// Infections so far.
    pub fn depth(&self) -> usize {
        self.members.len() - 1
    }

    fn contains(&self, v: NodeId) -> bool {
        self.members.contains(&v)
    }

    /// Susceptible neighbours with their edge counts into the cluster,
    /// ordered by node id.
    fn frontier(&self, g: &Graph, buf: &mut Vec<NodeId>, out: &mut Vec<(NodeId, usize)>) {
        buf.clear();
        for &u in &self.members {
            buf.extend(
                g.neighbors(u)
                    .iter()
                    .copied()
                    .filter(|&v| !self.contains(v)),
            );
        }
        buf.sort_unstable();
        out.clear();
        for &v in buf.iter() {
            match out.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => out.push((v, 1)),
            }
        }
    }
}

/// One terminal branch of the enumeration.
#[derive(Debug)]
pub struct Terminal<'a> {
    pub state: &'a ClusterState,
    /// The cluster absorbed its component before reaching depth `x`.
    pub truncated: bool,
}

impl Terminal<'_> {
    /// Cluster degree at depth `x`; zero for truncated branches.
    pub fn value(&self) -> usize {
        if self.truncated {
            0
        } else {
            self.state.cluster_deg
        }
    }
}

/// Visits every infection sequence of length `x` from `seed`, depth first in
/// ascending node order, calling `visit` once per terminal branch.
pub fn enumerate_clusters<F>(
    g: &Graph,
    seed: NodeId,
    x: u32,
    mut visit: F,
) -> Result<(), MetricError>
where
    F: FnMut(Terminal<'_>),
{
    g.check_node(seed)?;
    let mut state = ClusterState::seeded(g, seed);
    let mut scratch = Vec::new();
    descend(g, &mut state, x as usize, &mut scratch, &mut visit);
    Ok(())
}

fn descend<F>(
    g: &Graph,
    state: &mut ClusterState,
    x: usize,
    scratch: &mut Vec<NodeId>,
    visit: &mut F,
) where
    F: FnMut(Terminal<'_>),
{
    debug_assert_eq!(
        state.cluster_deg,
        crate::graph::cluster_degree(
            g,
            &crate::graph::NodeSet::from_sorted(state.members.clone())
        )
        .unwrap()
    );
    if state.depth() == x {
        visit(Terminal {
            state,
            truncated: false,
        });
        return;
    }
    if state.cluster_deg == 0 {
        visit(Terminal {
            state,
            truncated: true,
        });
        return;
    }
    let mut frontier = Vec::new();
    state.frontier(g, scratch, &mut frontier);
    let parent_deg = state.cluster_deg;
    let parent_weight = state.weight;
    for (v, e_v) in frontier {
        let pos = state.members.binary_search(&v).unwrap_err();
        state.members.insert(pos, v);
        state.cluster_deg = parent_deg + g.degree(v) - 2 * e_v;
        state.weight = parent_weight.scaled(e_v, parent_deg);
        descend(g, state, x, scratch, visit);
        state.members.remove(pos);
    }
    state.cluster_deg = parent_deg;
    state.weight = parent_weight;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErResult {
    pub seed: NodeId,
    pub x: u32,
    pub mode: ErMode,
    pub value: f64,
    pub distinct_clusters: usize,
    pub branches_explored: u64,
    pub truncated_branches: u64,
}

/// Expected Reach of `seed` after `x` infections.
pub fn expected_reach(
    g: &Graph,
    seed: NodeId,
    x: u32,
    mode: ErMode,
) -> Result<ErResult, MetricError> {
    expected_reach_capped(g, seed, x, mode, DEFAULT_X_MAX)
}

pub fn expected_reach_capped(
    g: &Graph,
    seed: NodeId,
    x: u32,
    mode: ErMode,
    x_max: u32,
) -> Result<ErResult, MetricError> {
    if x > x_max {
        return Err(MetricError::DepthTooLarge { x, x_max });
    }
    if x > 3 {
        log::warn!("expected reach at x = {x}: enumeration grows factorially beyond x = 3");
    }

    let mut process = WeightedSum::new();
    let mut seq_sum: u128 = 0;
    let mut clusters: HashSet<Vec<NodeId>> = HashSet::new();
    let mut cluster_sum: u128 = 0;
    let mut branches = 0u64;
    let mut truncated = 0u64;

    enumerate_clusters(g, seed, x, |t| {
        let value = t.value();
        branches += 1;
        if t.truncated {
            truncated += 1;
        }
        if mode == ErMode::Process {
            process.add(t.state.weight, value);
        }
        seq_sum += value as u128;
        if !clusters.contains(t.state.members()) {
            clusters.insert(t.state.members().to_vec());
            cluster_sum += value as u128;
        }
    })?;

    let value = match mode {
        ErMode::Process => process.value(),
        ErMode::SequenceUniform => seq_sum as f64 / branches as f64,
        ErMode::ClusterUniform => cluster_sum as f64 / clusters.len() as f64,
    };
    Ok(ErResult {
        seed,
        x,
        mode,
        value,
        distinct_clusters: clusters.len(),
        branches_explored: branches,
        truncated_branches: truncated,
    })
}

/// Sample mean and standard error of the terminal cluster degree over
/// `runs` simulated SI chains of `x` infection events.
pub fn expected_reach_mc<R: Rng + ?Sized>(
    g: &Graph,
    seed: NodeId,
    x: u32,
    runs: usize,
    rng: &mut R,
) -> Result<(f64, f64), MetricError> {
    g.check_node(seed)?;
    if runs == 0 {
        return Err(MetricError::NoRuns);
    }
    let mut members: Vec<NodeId> = Vec::with_capacity(x as usize + 1);
    let mut boundary: Vec<NodeId> = Vec::new();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..runs {
        members.clear();
        members.push(seed);
        let mut deg = g.degree(seed);
        for _ in 0..x {
            if deg == 0 {
                break;
            }
            // Uniform infected-susceptible edge; its susceptible end is the
            // next infection.
            boundary.clear();
            for &u in &members {
                boundary.extend(
                    g.neighbors(u)
                        .iter()
                        .copied()
                        .filter(|v| !members.contains(v)),
                );
            }
            debug_assert_eq!(boundary.len(), deg);
            let v = boundary[rng.random_range(0..boundary.len())];
            let e_v = boundary.iter().filter(|&&w| w == v).count();
            members.push(v);
            deg = deg + g.degree(v) - 2 * e_v;
        }
        let value = deg as f64;
        sum += value;
        sum_sq += value * value;
    }
    let n = runs as f64;
    let mean = sum / n;
    let stderr = if runs > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

/// Default quantization: hundredths.
pub const DEFAULT_EW_RESOLUTION: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EwValue {
    pub beta: f64,
    /// `beta / er`.
    pub raw: f64,
    /// `1 / er` truncated to the next lower hundredth.
    pub quantized: f64,
}

pub fn expected_wait(er: f64, beta: f64) -> Result<EwValue, MetricError> {
    if !(beta > 0.0) {
        return Err(MetricError::NonPositiveBeta(beta));
    }
    let bin = ew_bin(er, DEFAULT_EW_RESOLUTION)?;
    Ok(EwValue {
        beta,
        raw: beta / er,
        quantized: ew_bin_value(bin, DEFAULT_EW_RESOLUTION),
    })
}

/// Bin index `floor(resolution / er)`; the bin's EW value is
/// `index / resolution`.
pub fn ew_bin(er: f64, resolution: u32) -> Result<u64, MetricError> {
    if !(er > 0.0) || !er.is_finite() {
        return Err(MetricError::NonPositiveReach(er));
    }
    Ok((resolution as f64 / er).floor() as u64)
}

pub fn ew_bin_value(bin: u64, resolution: u32) -> f64 {
    bin as f64 / resolution as f64
}

/// Exponential of the Shannon entropy of the `h`-step random-walk
/// distribution started at `node`.
pub fn accessibility(g: &Graph, node: NodeId, h: u32) -> Result<f64, MetricError> {
    g.check_node(node)?;
    if h == 0 {
        return Err(MetricError::ZeroWalkLength);
    }
    if g.degree(node) == 0 {
        return Err(MetricError::IsolatedNode(node));
    }
    let n = g.node_count();
    let mut p = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut support = vec![node];
    let mut next_support = Vec::new();
    p[node as usize] = 1.0;
    for _ in 0..h {
        for &u in &support {
            let mass = p[u as usize] / g.degree(u) as f64;
            for &v in g.neighbors(u) {
                if next[v as usize] == 0.0 {
                    next_support.push(v);
                }
                next[v as usize] += mass;
            }
            p[u as usize] = 0.0;
        }
        std::mem::swap(&mut p, &mut next);
        std::mem::swap(&mut support, &mut next_support);
        next_support.clear();
    }
    support.sort_unstable();
    let entropy: f64 = support
        .iter()
        .map(|&v| p[v as usize])
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum();
    Ok(entropy.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::netgen::RngStream;

    #[test]
    fn star_closed_forms() {
        let g = star(4);
        for mode in ErMode::ALL {
            assert_eq!(expected_reach(&g, 0, 0, mode).unwrap().value, 4.0);
            assert_eq!(expected_reach(&g, 0, 1, mode).unwrap().value, 3.0);
            assert_eq!(expected_reach(&g, 1, 1, mode).unwrap().value, 3.0);
            // {center, two leaves}: 4 + 1 + 1 - 4.
            assert_eq!(expected_reach(&g, 0, 2, mode).unwrap().value, 2.0);
            assert_eq!(expected_reach(&g, 1, 2, mode).unwrap().value, 2.0);
        }
    }

    #[test]
    fn path_modes_differ() {
        let g = path(5);
        let p = expected_reach(&g, 2, 2, ErMode::Process).unwrap();
        assert_eq!(p.value, 1.5);
        assert_eq!(p.distinct_clusters, 3);
        assert_eq!(p.branches_explored, 4);
        let c = expected_reach(&g, 2, 2, ErMode::ClusterUniform).unwrap();
        assert_eq!(c.value, 4.0 / 3.0);
        // Sequences c-b-a, c-b-d, c-d-b, c-d-e have degrees 1, 2, 2, 1.
        let s = expected_reach(&g, 2, 2, ErMode::SequenceUniform).unwrap();
        assert_eq!(s.value, 1.5);
    }

    #[test]
    fn process_weights_follow_edge_counts() {
        // Triangle 0-1-2 with pendant 3 on node 2. From {0, 1} the frontier
        // is node 2 with two edges into the cluster.
        let g = crate::graph::Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]);
        let mut seen = Vec::new();
        enumerate_clusters(&g, 0, 2, |t| {
            seen.push((t.state.members().to_vec(), t.state.weight(), t.value()));
        })
        .unwrap();
        let total = seen
            .iter()
            .fold(Ratio::from_integer(0), |acc, (_, w, _)| match w {
                BranchWeight::Exact(r) => acc + r,
                BranchWeight::Approx(_) => panic!("small weights stay exact"),
            });
        assert_eq!(total, Ratio::from_integer(1));
        // 0 -> 1 (1/2) -> 2 (1): {0,1,2}; 0 -> 2 (1/2) -> 1 (2/3), 3 (1/3).
        assert_eq!(seen.len(), 3);
        assert_eq!(seen[0].0, vec![0, 1, 2]);
        assert_eq!(seen[0].1, BranchWeight::Exact(Ratio::new(1, 2)));
        assert_eq!(seen[1].1, BranchWeight::Exact(Ratio::new(1, 3)));
        assert_eq!(seen[2].0, vec![0, 2, 3]);
        assert_eq!(seen[2].1, BranchWeight::Exact(Ratio::new(1, 6)));
    }

    #[test]
    fn truncation_and_errors() {
        let g = crate::graph::Graph::from_edges(5, [(0, 1), (2, 3)]);
        let r = expected_reach(&g, 4, 1, ErMode::Process).unwrap();
        assert_eq!((r.value, r.truncated_branches), (0.0, 1));
        assert_eq!(
            expected_reach(&g, 4, 0, ErMode::Process).unwrap().value,
            0.0
        );
        // Edge 0-1 is exhausted after one infection.
        let r = expected_reach(&g, 0, 3, ErMode::Process).unwrap();
        assert_eq!(
            (r.value, r.truncated_branches, r.branches_explored),
            (0.0, 1, 1)
        );
        assert!(matches!(
            expected_reach(&g, 0, 6, ErMode::Process),
            Err(MetricError::DepthTooLarge { x: 6, x_max: 5 })
        ));
        assert!(expected_reach(&g, 9, 1, ErMode::Process).is_err());
        assert_eq!(
            "cluster_uniform".parse::<ErMode>().unwrap(),
            ErMode::ClusterUniform
        );
        assert!("mean".parse::<ErMode>().is_err());
    }

    #[test]
    fn monte_carlo_examples() {
        let mut rng = RngStream::new(5, 0);
        let g = path(5);
        assert_eq!(
            expected_reach_mc(&g, 2, 0, 10, &mut rng).unwrap(),
            (2.0, 0.0)
        );
        let (mean, se) = expected_reach_mc(&star(4), 1, 1, 500, &mut rng).unwrap();
        assert_eq!((mean, se), (3.0, 0.0));
        let (mean, se) = expected_reach_mc(&g, 2, 2, 100_000, &mut rng).unwrap();
        assert!((mean - 1.5).abs() <= 3.0 * se, "{mean} ± {se}");
        assert!(expected_reach_mc(&g, 2, 2, 0, &mut rng).is_err());
    }

    #[test]
    fn quantization_boundaries() {
        assert_eq!(expected_wait(25.0, 1.0).unwrap().quantized, 0.04);
        assert_eq!(expected_wait(20.0001, 1.0).unwrap().quantized, 0.04);
        assert_eq!(expected_wait(21.0, 1.0).unwrap().quantized, 0.04);
        assert_eq!(expected_wait(24.0, 1.0).unwrap().quantized, 0.04);
        assert_eq!(expected_wait(20.0, 1.0).unwrap().quantized, 0.05);
        assert_eq!(expected_wait(3.0, 1.0).unwrap().quantized, 0.33);
        let ew = expected_wait(4.0, 0.5).unwrap();
        assert_eq!((ew.raw, ew.beta), (0.125, 0.5));
        assert!(expected_wait(0.0, 1.0).is_err());
        assert!(expected_wait(-1.0, 1.0).is_err());
        assert!(expected_wait(1.0, 0.0).is_err());
        assert_eq!(ew_bin(25.0, 100).unwrap(), 4);
        assert_eq!(ew_bin(25.0, 1000).unwrap(), 40);
    }

    #[test]
    fn accessibility_examples() {
        for n in [3, 7, 20] {
            assert!((accessibility(&cycle(n), 0, 1).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!((accessibility(&star(4), 0, 1).unwrap() - 4.0).abs() < 1e-12);
        assert!((accessibility(&star(4), 1, 1).unwrap() - 1.0).abs() < 1e-12);
        // Two steps from a leaf: back to itself w.p. 1/4, else another leaf.
        assert!((accessibility(&star(4), 1, 2).unwrap() - 4.0).abs() < 1e-12);
        let g = crate::graph::Graph::from_edges(3, [(0, 1)]);
        assert!(matches!(
            accessibility(&g, 2, 1),
            Err(MetricError::IsolatedNode(2))
        ));
        assert!(matches!(
            accessibility(&g, 0, 0),
            Err(MetricError::ZeroWalkLength)
        ));
    }
}
