//! Chung-Lu random graphs with Pareto expected degrees.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, NodeId};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("need at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("pareto scale must be positive, got {0}")]
    BadScale(f64),
    #[error("pareto shape must exceed 1 (finite mean), got {0}")]
    BadShape(f64),
    #[error("weights must be positive and finite")]
    BadWeight,
}

/// Reproducible random stream identified by `(master_seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id mapped onto the cipher's stream
/// counter, so distinct ids never overlap.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// Stream keyed by a tuple of ids under the same master seed, e.g.
    /// `(tag, network, seed, run)`.
    pub fn keyed(master_seed: u64, key: &[u64]) -> Self {
        let mut h = 0x243f_6a88_85a3_08d3_u64;
        for &k in key {
            h = splitmix64(h ^ k);
        }
        Self::new(master_seed, h)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Expected-degree sequence.
#[derive(Clone, Debug)]
pub struct WeightSeq {
    weights: Vec<f64>,
    total: f64,
}

impl WeightSeq {
    pub fn new(weights: Vec<f64>) -> Result<Self, GenError> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(GenError::BadWeight);
        }
        let total = weights.iter().sum();
        Ok(WeightSeq { weights, total })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Inverse Pareto CDF for `u` in (0, 1].
pub fn pareto_quantile(u: f64, scale: f64, shape: f64) -> f64 {
    scale * u.powf(-1.0 / shape)
}

pub fn pareto_weights<R: Rng + ?Sized>(
    n: usize,
    scale: f64,
    shape: f64,
    rng: &mut R,
) -> Result<WeightSeq, GenError> {
    if n < 1 {
        return Err(GenError::TooFewNodes { min: 1, got: n });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(GenError::BadScale(scale));
    }
    if !(shape > 1.0 && shape.is_finite()) {
        return Err(GenError::BadShape(shape));
    }
    let weights = (0..n)
        .map(|_| {
            // random() is uniform on [0, 1); flip it onto (0, 1].
            let u = 1.0 - rng.random::<f64>();
            pareto_quantile(u, scale, shape)
        })
        .collect();
    WeightSeq::new(weights)
}

/// How a pair's connection probability follows from the weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairRule {
    /// Each unordered pair once: `p = min(1, w_i w_j / S)`.
    #[default]
    Unordered,
    /// Each ordered pair `(i, j)` and `(j, i)` tried once with
    /// `min(1, w_i w_j / S)`, so the unordered pair appears with
    /// `1 - (1 - p)^2`. Doubles the realised mean degree.
    OrderedPairs,
}

impl PairRule {
    #[inline]
    fn probability(self, wu: f64, wv: f64, total: f64) -> f64 {
        let p = (wu * wv / total).min(1.0);
        match self {
            PairRule::Unordered => p,
            PairRule::OrderedPairs => p * (2.0 - p),
        }
    }
}

/// Chung-Lu graph: pair `{i, j}` is an edge independently with probability
/// `min(1, w_i w_j / S)`.
pub fn chung_lu<R: Rng + ?Sized>(w: &WeightSeq, rng: &mut R) -> Result<Graph, GenError> {
    chung_lu_with(w, PairRule::Unordered, rng)
}

/// Chung-Lu sampling under an explicit [`PairRule`].
///
/// Uses geometric skipping over weights sorted in decreasing order: pair
/// probabilities are non-increasing along each row, so every pair's
/// marginal stays exact while the run time is `O(n + m)` expected.
pub fn chung_lu_with<R: Rng + ?Sized>(
    w: &WeightSeq,
    rule: PairRule,
    rng: &mut R,
) -> Result<Graph, GenError> {
    let n = w.len();
    if n < 2 {
        return Err(GenError::TooFewNodes { min: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in index order, so output depends only on inputs.
    order.sort_by(|&a, &b| w.weights[b].total_cmp(&w.weights[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| w.weights[i]).collect();
    let total = w.total;

    let mut edges = Vec::new();
    for u in 0..n - 1 {
        let wu = sorted[u];
        let mut v = u + 1;
        let mut p = rule.probability(wu, sorted[v], total);
        while v < n && p > 0.0 {
            if p < 1.0 {
                let r = 1.0 - rng.random::<f64>();
                let skip = (r.ln() / (1.0 - p).ln()).floor();
                if skip >= (n - v) as f64 {
                    break;
                }
                v += skip as usize;
            }
            let q = rule.probability(wu, sorted[v], total);
            if rng.random::<f64>() < q / p {
                edges.push((order[u] as NodeId, order[v] as NodeId));
            }
            p = q;
            v += 1;
        }
    }
    Ok(Graph::from_edges(n, edges))
}
