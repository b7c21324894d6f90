//! End-to-end experiment protocols: network ensembles, periphery selection,
//! per-bin seed sampling, the SI / SIS / competitive experiments, beta
//! tuning, and CSV output.
//!
//! Every random draw comes from an [`RngStream`] keyed by the master seed and
//! the work item's coordinates (network, seed, run, ...), so results do not
//! depend on scheduling. Rows are emitted in a canonical order.

mod spec;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use spec::{BetaRule, ExperimentSpec, NetworkSource, Preset, SpecError};

use crate::graph::{
    classify_periphery, largest_connected_component, largest_eigenvalue, load_edge_list, Graph,
    GraphError, LoadOptions, NodeId, NodeSet, PeripheryReport,
};
use crate::metrics::{accessibility, ew_bin, ew_bin_value, expected_reach, MetricError};
use crate::netgen::{chung_lu_with, pareto_weights, GenError, RngStream};
use crate::sim::{potential_of, simulate_competitive, simulate_si, sis_runs, Side, SimError};
use crate::stats::exponential_mle;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const TAG_NETWORK: u64 = 1;
const TAG_SELECT: u64 = 2;
const TAG_SI: u64 = 3;
const TAG_SIS: u64 = 4;
const TAG_GRID: u64 = 5;
const TAG_TUNE: u64 = 6;

const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 100_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{}: {source}", path.display())]
    Load { path: PathBuf, source: GraphError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("network {network}: no peripheral node with positive expected reach")]
    EmptyPeriphery { network: usize },
    #[error("no multiplier reached target potential {target}; achieved {achieved:?}")]
    TuneFailed {
        target: f64,
        achieved: Vec<(f64, f64)>,
    },
}

/// A network prepared for seeding: graph, periphery and the ER of every
/// peripheral node.
#[derive(Clone, Debug)]
pub struct Network {
    pub id: usize,
    pub graph: Graph,
    pub periphery: PeripheryReport,
    /// `(node, ER_x)` for peripheral nodes with positive reach, by node id.
    pub reach: Vec<(NodeId, f64)>,
}

impl Network {
    /// Peripheral nodes grouped by EW bin index.
    pub fn bins(&self, resolution: u32) -> BTreeMap<u64, Vec<NodeId>> {
        let mut bins: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
        for &(v, er) in &self.reach {
            let bin = ew_bin(er, resolution).expect("reach values are positive");
            bins.entry(bin).or_default().push(v);
        }
        bins
    }

    pub fn reach_of(&self, v: NodeId) -> Option<f64> {
        self.reach
            .binary_search_by_key(&v, |&(u, _)| u)
            .ok()
            .map(|i| self.reach[i].1)
    }
}

/// Loads or generates network `id` of the ensemble, reduced to its largest
/// component when the spec asks for it.
pub fn load_network(spec: &ExperimentSpec, id: usize) -> Result<Graph, HarnessError> {
    let g = match &spec.network {
        NetworkSource::ChungLu {
            nodes,
            scale,
            shape,
            rule,
            ..
        } => {
            let mut rng = RngStream::keyed(spec.master_seed, &[TAG_NETWORK, id as u64]);
            let w = pareto_weights(*nodes, *scale, *shape, &mut rng)?;
            chung_lu_with(&w, *rule, &mut rng)?
        }
        NetworkSource::Files(paths) => {
            let path = &paths[id];
            let file = File::open(path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            load_edge_list(BufReader::new(file), LoadOptions::default()).map_err(|source| {
                HarnessError::Load {
                    path: path.clone(),
                    source,
                }
            })?
        }
    };
    Ok(if spec.lcc_reduce {
        largest_connected_component(&g)
    } else {
        g
    })
}

pub fn prepare_network(spec: &ExperimentSpec, id: usize) -> Result<Network, HarnessError> {
    let graph = load_network(spec, id)?;
    let periphery = classify_periphery(&graph, spec.hub_fraction, spec.min_hops)?;
    let reach = periphery
        .peripheral_set
        .as_slice()
        .par_iter()
        .map(|&v| expected_reach(&graph, v, spec.x, spec.er_mode).map(|r| (v, r.value)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|&(_, er)| er > 0.0)
        .collect();
    log::info!(
        "network {id}: {} nodes, {} edges, {} peripheral",
        graph.node_count(),
        graph.edge_count(),
        periphery.peripheral_set.len()
    );
    Ok(Network {
        id,
        graph,
        periphery,
        reach,
    })
}

/// Seeds sampled from one EW bin.
#[derive(Clone, Debug, PartialEq)]
pub struct BinSample {
    pub bin: u64,
    pub ew_bin: f64,
    pub candidates: usize,
    pub chosen: NodeSet,
}

/// Groups `reach` by quantized EW and draws `min(seeds_per_bin, bin size)`
/// distinct nodes from each bin. Bins come out in ascending EW order.
pub fn select_seeds_per_bin<R: Rng + ?Sized>(
    reach: &[(NodeId, f64)],
    seeds_per_bin: usize,
    resolution: u32,
    rng: &mut R,
) -> Result<Vec<BinSample>, MetricError> {
    let mut bins: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    for &(v, er) in reach {
        bins.entry(ew_bin(er, resolution)?).or_default().push(v);
    }
    Ok(bins
        .into_iter()
        .map(|(bin, mut members)| {
            members.sort_unstable();
            let take = seeds_per_bin.min(members.len());
            let chosen = sample(rng, members.len(), take)
                .into_iter()
                .map(|i| members[i])
                .collect();
            BinSample {
                bin,
                ew_bin: ew_bin_value(bin, resolution),
                candidates: members.len(),
                chosen,
            }
        })
        .collect())
}

fn sample_network(spec: &ExperimentSpec, net: &Network) -> Result<Vec<BinSample>, HarnessError> {
    if net.reach.is_empty() {
        return Err(HarnessError::EmptyPeriphery { network: net.id });
    }
    let mut rng = RngStream::keyed(spec.master_seed, &[TAG_SELECT, net.id as u64]);
    Ok(select_seeds_per_bin(
        &net.reach,
        spec.seeds_per_bin,
        spec.ew_resolution,
        &mut rng,
    )?)
}

fn seed_list(samples: &[BinSample]) -> Vec<(f64, NodeId)> {
    samples
        .iter()
        .flat_map(|s| s.chosen.iter().map(move |&v| (s.ew_bin, v)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TthcRow {
    pub network_id: usize,
    pub seed: NodeId,
    pub seed_label: String,
    pub ew_bin: f64,
    pub er: f64,
    pub accessibility: f64,
    pub runs: usize,
    pub reached: usize,
    pub mean_tthc: Option<f64>,
    pub fit_rate: Option<f64>,
}

/// SI time-to-coverage per sampled seed, with an exponential fit over the
/// runs that reached the threshold.
pub fn tthc_experiment(spec: &ExperimentSpec) -> Result<Vec<TthcRow>, HarnessError> {
    let mut rows = Vec::new();
    for id in 0..spec.network.ensemble_size() {
        let net = prepare_network(spec, id)?;
        let seeds = seed_list(&sample_network(spec, &net)?);
        let mut part = seeds
            .par_iter()
            .map(|&(ew, v)| -> Result<TthcRow, HarnessError> {
                let mut rng = RngStream::keyed(spec.master_seed, &[TAG_SI, id as u64, v as u64]);
                let mut times = Vec::with_capacity(spec.runs_per_seed);
                for _ in 0..spec.runs_per_seed {
                    let o = simulate_si(&net.graph, v, spec.si_beta, spec.coverage, &mut rng)?;
                    times.extend(o.tthc);
                }
                let fit = exponential_mle(&times);
                Ok(TthcRow {
                    network_id: id,
                    seed: v,
                    seed_label: net.graph.label(v).to_owned(),
                    ew_bin: ew,
                    er: net.reach_of(v).expect("seeds are peripheral"),
                    accessibility: accessibility(&net.graph, v, spec.x.max(1))?,
                    runs: spec.runs_per_seed,
                    reached: times.len(),
                    mean_tthc: fit.map(|f| f.0),
                    fit_rate: fit.map(|f| f.1),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.append(&mut part);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialRow {
    pub network_id: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: NodeId,
    pub seed_label: String,
    pub ew_bin: f64,
    pub er: f64,
    pub potential: f64,
    /// Extinction iteration of each run that died out.
    pub extinctions: Vec<u32>,
}

/// The `count` peripheral nodes with the highest reach (ties to lower id).
pub fn highest_reach_seeds(net: &Network, count: usize) -> NodeSet {
    let mut by_reach = net.reach.clone();
    by_reach.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    by_reach.into_iter().take(count).map(|(v, _)| v).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOutcome {
    pub multiplier: f64,
    pub beta: f64,
    /// `(multiplier, beta, mean potential)` for every multiplier tried.
    pub trace: Vec<(f64, f64, f64)>,
}

/// Smallest multiplier `k` whose `beta = k / alpha` (capped at 1) gives a
/// mean epidemic potential of at least `target` over `seeds`.
#[allow(clippy::too_many_arguments)]
pub fn tune_beta<R: Rng + ?Sized>(
    g: &Graph,
    seeds: &NodeSet,
    alpha: f64,
    target: f64,
    multipliers: &[f64],
    runs: usize,
    horizon: u32,
    rng: &mut R,
) -> Result<TuneOutcome, HarnessError> {
    let mut trace = Vec::new();
    for &k in multipliers {
        let beta = (k / alpha).min(1.0);
        let mut total = 0.0;
        for &v in seeds {
            total += potential_of(&sis_runs(g, v, beta, runs, horizon, rng)?);
        }
        let mean = if seeds.is_empty() {
            0.0
        } else {
            total / seeds.len() as f64
        };
        trace.push((k, beta, mean));
        if mean >= target {
            return Ok(TuneOutcome {
                multiplier: k,
                beta,
                trace,
            });
        }
    }
    Err(HarnessError::TuneFailed {
        target,
        achieved: trace.iter().map(|&(k, _, m)| (k, m)).collect(),
    })
}

fn resolve_beta(spec: &ExperimentSpec, net: &Network, alpha: f64) -> Result<f64, HarnessError> {
    Ok(match &spec.beta_rule {
        BetaRule::Fixed(b) => *b,
        BetaRule::AlphaMultiple(k) => (k / alpha).min(1.0),
        BetaRule::Tuned {
            target,
            multipliers,
        } => {
            let seeds = highest_reach_seeds(net, spec.seeds_per_bin);
            let mut rng = RngStream::keyed(spec.master_seed, &[TAG_TUNE, net.id as u64]);
            tune_beta(
                &net.graph,
                &seeds,
                alpha,
                *target,
                multipliers,
                spec.sis_runs,
                spec.horizon,
                &mut rng,
            )?
            .beta
        }
    })
}

/// SIS epidemic potential per sampled seed.
pub fn potential_experiment(spec: &ExperimentSpec) -> Result<Vec<PotentialRow>, HarnessError> {
    let mut rows = Vec::new();
    for id in 0..spec.network.ensemble_size() {
        let net = prepare_network(spec, id)?;
        let alpha = largest_eigenvalue(&net.graph, EIGEN_TOL, EIGEN_MAX_ITER)?;
        let beta = resolve_beta(spec, &net, alpha)?;
        log::info!("network {id}: alpha {alpha:.4}, beta {beta:.6}");
        let seeds = seed_list(&sample_network(spec, &net)?);
        let mut part = seeds
            .par_iter()
            .map(|&(ew, v)| -> Result<PotentialRow, HarnessError> {
                let mut rng = RngStream::keyed(spec.master_seed, &[TAG_SIS, id as u64, v as u64]);
                let outcomes =
                    sis_runs(&net.graph, v, beta, spec.sis_runs, spec.horizon, &mut rng)?;
                Ok(PotentialRow {
                    network_id: id,
                    alpha,
                    beta,
                    seed: v,
                    seed_label: net.graph.label(v).to_owned(),
                    ew_bin: ew,
                    er: net.reach_of(v).expect("seeds are peripheral"),
                    potential: potential_of(&outcomes),
                    extinctions: outcomes
                        .iter()
                        .filter_map(|o| o.extinction_iteration)
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.append(&mut part);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneRow {
    pub network_id: usize,
    pub alpha: f64,
    pub multiplier: f64,
    pub beta: f64,
    pub mean_potential: f64,
    pub selected: bool,
}

/// Beta tuning trace per network. Networks where no multiplier reaches the
/// target report every multiplier with `selected = false`.
pub fn tune_beta_experiment(spec: &ExperimentSpec) -> Result<Vec<TuneRow>, HarnessError> {
    let (target, multipliers) = match &spec.beta_rule {
        BetaRule::Tuned {
            target,
            multipliers,
        } => (*target, multipliers.clone()),
        _ => (0.95, (1..=20).map(f64::from).collect()),
    };
    let mut rows = Vec::new();
    for id in 0..spec.network.ensemble_size() {
        let net = prepare_network(spec, id)?;
        let alpha = largest_eigenvalue(&net.graph, EIGEN_TOL, EIGEN_MAX_ITER)?;
        let seeds = highest_reach_seeds(&net, spec.seeds_per_bin);
        let mut rng = RngStream::keyed(spec.master_seed, &[TAG_TUNE, id as u64]);
        let trace = match tune_beta(
            &net.graph,
            &seeds,
            alpha,
            target,
            &multipliers,
            spec.sis_runs,
            spec.horizon,
            &mut rng,
        ) {
            Ok(t) => t.trace,
            Err(HarnessError::TuneFailed { .. }) => {
                // Re-run the trace without stopping so the row set is complete.
                let mut rng = RngStream::keyed(spec.master_seed, &[TAG_TUNE, id as u64]);
                let mut trace = Vec::new();
                for &k in &multipliers {
                    let beta = (k / alpha).min(1.0);
                    let mut total = 0.0;
                    for &v in &seeds {
                        total += potential_of(&sis_runs(
                            &net.graph,
                            v,
                            beta,
                            spec.sis_runs,
                            spec.horizon,
                            &mut rng,
                        )?);
                    }
                    trace.push((k, beta, total / seeds.len().max(1) as f64));
                }
                trace
            }
            Err(e) => return Err(e),
        };
        let last = trace.len() - 1;
        rows.extend(
            trace
                .into_iter()
                .enumerate()
                .map(|(i, (k, beta, mean))| TuneRow {
                    network_id: id,
                    alpha,
                    multiplier: k,
                    beta,
                    mean_potential: mean,
                    selected: i == last && mean >= target,
                }),
        );
    }
    Ok(rows)
}

/// One point of the competitive grid, aggregated over the ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub bin_z: u64,
    pub bin_h: u64,
    pub ew_z: f64,
    pub ew_h: f64,
    /// Networks that could supply a seed pair for this cell.
    pub networks: usize,
    pub trials: usize,
    pub human_wins: usize,
}

impl GridCell {
    pub fn human_win_fraction(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.human_wins as f64 / self.trials as f64)
    }
}

/// Competitive spreading over every pairing of observed EW bins: per network
/// and cell, `pairs_per_cell` zombie/hunter seed pairs drawn from the two
/// bins, each run `grid_runs` times.
pub fn competitive_grid(spec: &ExperimentSpec) -> Result<Vec<GridCell>, HarnessError> {
    let mut cells: BTreeMap<(u64, u64), (usize, usize, usize)> = BTreeMap::new();
    for id in 0..spec.network.ensemble_size() {
        let net = prepare_network(spec, id)?;
        if net.reach.is_empty() {
            return Err(HarnessError::EmptyPeriphery { network: id });
        }
        let bins = net.bins(spec.ew_resolution);
        let keys: Vec<u64> = bins.keys().copied().collect();
        let pairs: Vec<(u64, u64)> = keys
            .iter()
            .flat_map(|&z| keys.iter().map(move |&h| (z, h)))
            .collect();
        let results = pairs
            .par_iter()
            .map(
                |&(bz, bh)| -> Result<Option<(usize, usize)>, HarnessError> {
                    let zs = &bins[&bz];
                    let hs = &bins[&bh];
                    if bz == bh && zs.len() < 2 {
                        return Ok(None);
                    }
                    let mut rng =
                        RngStream::keyed(spec.master_seed, &[TAG_GRID, id as u64, bz, bh]);
                    let mut trials = 0;
                    let mut wins = 0;
                    for _ in 0..spec.pairs_per_cell {
                        let z = zs[rng.random_range(0..zs.len())];
                        let h = loop {
                            let h = hs[rng.random_range(0..hs.len())];
                            if h != z {
                                break h;
                            }
                        };
                        for _ in 0..spec.grid_runs {
                            let o = simulate_competitive(&net.graph, z, h, spec.rates, &mut rng)?;
                            trials += 1;
                            if o.winner_by(spec.win_rule, &mut rng) == Side::Humans {
                                wins += 1;
                            }
                        }
                    }
                    Ok(Some((trials, wins)))
                },
            )
            .collect::<Result<Vec<_>, _>>()?;
        for (&key, res) in pairs.iter().zip(results) {
            let entry = cells.entry(key).or_insert((0, 0, 0));
            if let Some((trials, wins)) = res {
                entry.0 += 1;
                entry.1 += trials;
                entry.2 += wins;
            }
        }
    }

    // Fill in the union grid so sparse cells show up with zero coverage.
    let bins: Vec<u64> = {
        let mut b: Vec<u64> = cells.keys().flat_map(|&(z, h)| [z, h]).collect();
        b.sort_unstable();
        b.dedup();
        b
    };
    let res = spec.ew_resolution;
    Ok(bins
        .iter()
        .flat_map(|&bz| bins.iter().map(move |&bh| (bz, bh)))
        .map(|(bz, bh)| {
            let (networks, trials, human_wins) = cells.get(&(bz, bh)).copied().unwrap_or((0, 0, 0));
            GridCell {
                bin_z: bz,
                bin_h: bh,
                ew_z: ew_bin_value(bz, res),
                ew_h: ew_bin_value(bh, res),
                networks,
                trials,
                human_wins,
            }
        })
        .collect())
}

/// Which experiment to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Tthc,
    Potential,
    Grid,
    TuneBeta,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Tthc => "tthc",
            ExperimentKind::Potential => "potential",
            ExperimentKind::Grid => "grid",
            ExperimentKind::TuneBeta => "tune-beta",
        }
    }
}

pub const TTHC_HEADER: &str =
    "network_id,seed,ew_bin,er,accessibility,runs,reached,mean_tthc,fit_rate";
pub const POTENTIAL_HEADER: &str = "network_id,alpha,beta,seed,ew_bin,er,potential";
pub const GRID_HEADER: &str = "ew_z,ew_h,networks,trials,human_wins,human_win_fraction";
pub const TUNE_HEADER: &str = "network_id,alpha,multiplier,beta,mean_potential,selected";

/// Quotes a CSV field when it holds a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_tthc_csv<W: Write>(rows: &[TthcRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TTHC_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.network_id,
            csv_field(&r.seed_label),
            r.ew_bin,
            r.er,
            r.accessibility,
            r.runs,
            r.reached,
            opt(r.mean_tthc),
            opt(r.fit_rate)
        )?;
    }
    out.flush()
}

pub fn write_potential_csv<W: Write>(rows: &[PotentialRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{POTENTIAL_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.network_id,
            r.alpha,
            r.beta,
            csv_field(&r.seed_label),
            r.ew_bin,
            r.er,
            r.potential
        )?;
    }
    out.flush()
}

pub fn write_grid_csv<W: Write>(cells: &[GridCell], mut out: W) -> io::Result<()> {
    writeln!(out, "{GRID_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.ew_z,
            c.ew_h,
            c.networks,
            c.trials,
            c.human_wins,
            opt(c.human_win_fraction())
        )?;
    }
    out.flush()
}

pub fn write_tune_csv<W: Write>(rows: &[TuneRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TUNE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.network_id, r.alpha, r.multiplier, r.beta, r.mean_potential, r.selected
        )?;
    }
    out.flush()
}

/// Manifest text: tool version and experiment name as comments, then the
/// resolved spec. The whole text parses back as a spec.
pub fn manifest(kind: ExperimentKind, spec: &ExperimentSpec) -> String {
    format!(
        "# tool = expected-reach {VERSION}\n# experiment = {}\n{}",
        kind.name(),
        spec.to_text()
    )
}

/// Runs `kind` and writes `<kind>.csv` plus `manifest.txt` into `out_dir`.
/// Returns the CSV path.
pub fn run_experiment(
    kind: ExperimentKind,
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<PathBuf, HarnessError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join(format!("{}.csv", kind.name()));
    let mut buf = Vec::new();
    match kind {
        ExperimentKind::Tthc => write_tthc_csv(&tthc_experiment(spec)?, &mut buf),
        ExperimentKind::Potential => write_potential_csv(&potential_experiment(spec)?, &mut buf),
        ExperimentKind::Grid => write_grid_csv(&competitive_grid(spec)?, &mut buf),
        ExperimentKind::TuneBeta => write_tune_csv(&tune_beta_experiment(spec)?, &mut buf),
    }
    .map_err(io_err(&csv_path))?;
    let write = |path: &Path, bytes: &[u8]| -> Result<(), HarnessError> {
        let mut f = BufWriter::new(File::create(path).map_err(io_err(path))?);
        f.write_all(bytes)
            .and_then(|_| f.flush())
            .map_err(io_err(path))
    };
    write(&csv_path, &buf)?;
    write(
        &out_dir.join("manifest.txt"),
        manifest(kind, spec).as_bytes(),
    )?;
    Ok(csv_path)
}
