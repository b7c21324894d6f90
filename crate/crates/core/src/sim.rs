//! Epidemic simulators: continuous-time SI to a coverage threshold,
//! discrete-time SIS with unit recovery, and continuous-time competitive
//! spreading of two hostile strains.
//!
//! The continuous-time engines are event driven. Each channel keeps an exact
//! count of its live edges and a pool of candidate edges that may hold stale
//! entries; a firing edge is drawn uniformly from the pool, discarding stale
//! entries as they are met, which is uniform over the live edges.

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("beta must lie in {range}, got {beta}")]
    BadBeta { beta: f64, range: &'static str },
    #[error("coverage threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("rate `{name}` must be positive, got {value}")]
    BadRate { name: &'static str, value: f64 },
    #[error("zombie and hunter seeds must differ")]
    SameSeeds,
    #[error("runs must be at least 1")]
    NoRuns,
}

/// Exponential waiting time with the given rate.
fn exp_wait<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// Pool of directed candidate edges with lazy removal.
#[derive(Default)]
struct EdgePool {
    edges: Vec<(NodeId, NodeId)>,
}

impl EdgePool {
    fn push(&mut self, from: NodeId, to: NodeId) {
        self.edges.push((from, to));
    }

    /// Uniform draw over entries satisfying `live`. Must only be called when
    /// at least one live entry exists.
    fn draw<R, F>(&mut self, rng: &mut R, live: F) -> (NodeId, NodeId)
    where
        R: Rng + ?Sized,
        F: Fn(NodeId, NodeId) -> bool,
    {
        loop {
            let i = rng.random_range(0..self.edges.len());
            let (a, b) = self.edges[i];
            if live(a, b) {
                return (a, b);
            }
            self.edges.swap_remove(i);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiOutcome {
    pub seed: NodeId,
    /// Time to reach the coverage threshold; `None` when the component ran
    /// out first.
    pub tthc: Option<f64>,
    pub final_infected: usize,
    pub events: usize,
}

/// Infected count needed to stop: `ceil(threshold * n)`, seed included.
pub fn coverage_target(node_count: usize, threshold: f64) -> usize {
    (threshold * node_count as f64).ceil() as usize
}

/// Continuous-time SI with per-edge rate `beta`, run until
/// `ceil(threshold * n)` nodes are infected.
pub fn simulate_si<R: Rng + ?Sized>(
    g: &Graph,
    seed: NodeId,
    beta: f64,
    coverage_threshold: f64,
    rng: &mut R,
) -> Result<SiOutcome, SimError> {
    g.check_node(seed)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(SimError::BadBeta {
            beta,
            range: "(0, inf)",
        });
    }
    if !(coverage_threshold > 0.0 && coverage_threshold <= 1.0) {
        return Err(SimError::BadThreshold(coverage_threshold));
    }
    let target = coverage_target(g.node_count(), coverage_threshold);
    let mut infected = vec![false; g.node_count()];
    infected[seed as usize] = true;
    let mut count = 1;
    let mut time = 0.0;
    let mut events = 0;
    let mut pool = EdgePool::default();
    let mut live_edges = 0usize;

    let infect = |v: NodeId, infected: &mut [bool], pool: &mut EdgePool, live: &mut usize| {
        infected[v as usize] = true;
        for &w in g.neighbors(v) {
            if infected[w as usize] {
                *live -= 1;
            } else {
                pool.push(v, w);
                *live += 1;
            }
        }
    };
    for &w in g.neighbors(seed) {
        pool.push(seed, w);
        live_edges += 1;
    }

    while count < target {
        if live_edges == 0 {
            return Ok(SiOutcome {
                seed,
                tthc: None,
                final_infected: count,
                events,
            });
        }
        time += exp_wait(beta * live_edges as f64, rng);
        let (_, v) = pool.draw(rng, |_, b| !infected[b as usize]);
        // The edge into v is one of the live edges counted below.
        infect(v, &mut infected, &mut pool, &mut live_edges);
        count += 1;
        events += 1;
    }
    Ok(SiOutcome {
        seed,
        tthc: Some(time),
        final_infected: count,
        events,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SisOutcome {
    pub seed: NodeId,
    pub persisted: bool,
    pub extinction_iteration: Option<u32>,
    pub max_prevalence: usize,
}

/// Synchronous discrete-time SIS with one-step recovery. A susceptible node
/// with `k` infected neighbours is infected next step with probability
/// `1 - (1 - beta)^k`; every infected node is susceptible again next step.
pub fn simulate_sis<R: Rng + ?Sized>(
    g: &Graph,
    seed: NodeId,
    beta: f64,
    horizon: u32,
    rng: &mut R,
) -> Result<SisOutcome, SimError> {
    let mut scratch = SisScratch::new(g.node_count());
    simulate_sis_with(g, seed, beta, horizon, rng, &mut scratch)
}

struct SisScratch {
    pressure: Vec<u32>,
    infected_now: Vec<bool>,
}

impl SisScratch {
    fn new(n: usize) -> Self {
        SisScratch {
            pressure: vec![0; n],
            infected_now: vec![false; n],
        }
    }
}

fn simulate_sis_with<R: Rng + ?Sized>(
    g: &Graph,
    seed: NodeId,
    beta: f64,
    horizon: u32,
    rng: &mut R,
    scratch: &mut SisScratch,
) -> Result<SisOutcome, SimError> {
    g.check_node(seed)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(SimError::BadBeta {
            beta,
            range: "[0, 1]",
        });
    }
    let escape = 1.0 - beta;
    let mut current = vec![seed];
    let mut next = Vec::new();
    let mut touched = Vec::new();
    let mut max_prevalence = 1;

    for t in 1..=horizon {
        for &u in &current {
            scratch.infected_now[u as usize] = true;
        }
        for &u in &current {
            for &v in g.neighbors(u) {
                if scratch.infected_now[v as usize] {
                    continue;
                }
                if scratch.pressure[v as usize] == 0 {
                    touched.push(v);
                }
                scratch.pressure[v as usize] += 1;
            }
        }
        next.clear();
        for &v in &touched {
            let k = scratch.pressure[v as usize];
            scratch.pressure[v as usize] = 0;
            let p = 1.0 - escape.powi(k as i32);
            if rng.random::<f64>() < p {
                next.push(v);
            }
        }
        touched.clear();
        for &u in &current {
            scratch.infected_now[u as usize] = false;
        }
        std::mem::swap(&mut current, &mut next);
        if current.is_empty() {
            return Ok(SisOutcome {
                seed,
                persisted: false,
                extinction_iteration: Some(t),
                max_prevalence,
            });
        }
        max_prevalence = max_prevalence.max(current.len());
    }
    Ok(SisOutcome {
        seed,
        persisted: true,
        extinction_iteration: None,
        max_prevalence,
    })
}

/// Fraction of `runs` SIS epidemics from `seed` still alive at `horizon`.
pub fn epidemic_potential<R: Rng + ?Sized>(
    g: &Graph,
    seed: NodeId,
    beta: f64,
    runs: usize,
    horizon: u32,
    rng: &mut R,
) -> Result<f64, SimError> {
    let outcomes = sis_runs(g, seed, beta, runs, horizon, rng)?;
    Ok(potential_of(&outcomes))
}

/// `runs` SIS epidemics from one stream.
pub fn sis_runs<R: Rng + ?Sized>(
    g: &Graph,
    seed: NodeId,
    beta: f64,
    runs: usize,
    horizon: u32,
    rng: &mut R,
) -> Result<Vec<SisOutcome>, SimError> {
    if runs == 0 {
        return Err(SimError::NoRuns);
    }
    let mut scratch = SisScratch::new(g.node_count());
    (0..runs)
        .map(|_| simulate_sis_with(g, seed, beta, horizon, rng, &mut scratch))
        .collect()
}

pub fn potential_of(outcomes: &[SisOutcome]) -> f64 {
    outcomes.iter().filter(|o| o.persisted).count() as f64 / outcomes.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Humans,
    Zombies,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Humans => "humans",
            Side::Zombies => "zombies",
        }
    }
}

/// How a finished competitive run is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WinRule {
    /// Humans win iff no zombie is left. Contained zombies still win.
    #[default]
    Extinction,
    /// The side with more surviving members wins; ties go to a fair coin.
    Majority,
}

impl WinRule {
    pub fn as_str(self) -> &'static str {
        match self {
            WinRule::Extinction => "extinction",
            WinRule::Majority => "majority",
        }
    }
}

impl std::str::FromStr for WinRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "extinction" => Ok(WinRule::Extinction),
            "majority" => Ok(WinRule::Majority),
            _ => Err(format!(
                "unknown win rule `{s}` (expected extinction or majority)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompetitiveOutcome {
    pub winner: Side,
    pub final_zombies: usize,
    pub final_hunters: usize,
    pub final_susceptible: usize,
    pub final_removed: usize,
    pub elapsed: f64,
}

impl CompetitiveOutcome {
    /// Winner under `rule`. `winner` itself always follows
    /// [`WinRule::Extinction`]. A majority tie consumes one draw from `rng`.
    pub fn winner_by<R: Rng + ?Sized>(&self, rule: WinRule, rng: &mut R) -> Side {
        match rule {
            WinRule::Extinction => self.winner,
            WinRule::Majority => match self.final_hunters.cmp(&self.final_zombies) {
                std::cmp::Ordering::Greater => Side::Humans,
                std::cmp::Ordering::Less => Side::Zombies,
                std::cmp::Ordering::Equal if rng.random::<bool>() => Side::Humans,
                std::cmp::Ordering::Equal => Side::Zombies,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompetitiveRates {
    /// Per Z-S edge.
    pub zombify: f64,
    /// Per H-S edge.
    pub train: f64,
    /// Per Z-H edge; both endpoints are removed.
    pub clash: f64,
}

impl Default for CompetitiveRates {
    fn default() -> Self {
        CompetitiveRates {
            zombify: 1.0,
            train: 1.0,
            clash: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Susceptible,
    Zombie,
    Hunter,
    Removed,
}

/// Zombies and hunters recruit susceptible neighbours and annihilate each
/// other pairwise along Z-H edges. Runs until no channel can fire; humans
/// win iff no zombie is left.
pub fn simulate_competitive<R: Rng + ?Sized>(
    g: &Graph,
    zombie_seed: NodeId,
    hunter_seed: NodeId,
    rates: CompetitiveRates,
    rng: &mut R,
) -> Result<CompetitiveOutcome, SimError> {
    g.check_node(zombie_seed)?;
    g.check_node(hunter_seed)?;
    if zombie_seed == hunter_seed {
        return Err(SimError::SameSeeds);
    }
    for (name, value) in [
        ("rate_z", rates.zombify),
        ("rate_h", rates.train),
        ("rate_clash", rates.clash),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(SimError::BadRate { name, value });
        }
    }

    let mut sim = Competition {
        g,
        state: vec![State::Susceptible; g.node_count()],
        zs: EdgePool::default(),
        hs: EdgePool::default(),
        zh: EdgePool::default(),
        n_zs: 0,
        n_hs: 0,
        n_zh: 0,
        zombies: 0,
        hunters: 0,
        removed: 0,
    };
    sim.convert(zombie_seed, State::Zombie);
    sim.convert(hunter_seed, State::Hunter);

    let mut elapsed = 0.0;
    loop {
        let r_z = rates.zombify * sim.n_zs as f64;
        let r_h = rates.train * sim.n_hs as f64;
        let r_c = rates.clash * sim.n_zh as f64;
        let total = r_z + r_h + r_c;
        if total <= 0.0 {
            break;
        }
        elapsed += exp_wait(total, rng);
        let pick = rng.random::<f64>() * total;
        let state = &sim.state;
        if pick < r_z && sim.n_zs > 0 {
            let (_, s) = sim.zs.draw(rng, |z, s| {
                state[z as usize] == State::Zombie && state[s as usize] == State::Susceptible
            });
            sim.convert(s, State::Zombie);
        } else if pick < r_z + r_h && sim.n_hs > 0 {
            let (_, s) = sim.hs.draw(rng, |h, s| {
                state[h as usize] == State::Hunter && state[s as usize] == State::Susceptible
            });
            sim.convert(s, State::Hunter);
        } else if sim.n_zh > 0 {
            let (z, h) = sim.zh.draw(rng, |z, h| {
                state[z as usize] == State::Zombie && state[h as usize] == State::Hunter
            });
            sim.convert(z, State::Removed);
            sim.convert(h, State::Removed);
        } else {
            // Floating-point edge case: `pick` landed past a channel with
            // zero live edges. Redraw.
            continue;
        }
    }

    let n = g.node_count();
    let final_susceptible = n - sim.zombies - sim.hunters - sim.removed;
    Ok(CompetitiveOutcome {
        winner: if sim.zombies == 0 {
            Side::Humans
        } else {
            Side::Zombies
        },
        final_zombies: sim.zombies,
        final_hunters: sim.hunters,
        final_susceptible,
        final_removed: sim.removed,
        elapsed,
    })
}

struct Competition<'g> {
    g: &'g Graph,
    state: Vec<State>,
    zs: EdgePool,
    hs: EdgePool,
    zh: EdgePool,
    n_zs: usize,
    n_hs: usize,
    n_zh: usize,
    zombies: usize,
    hunters: usize,
    removed: usize,
}

impl Competition<'_> {
    /// Moves `v` to `to`, updating live-edge counts and pools. States only
    /// move S -> Z, S -> H, Z -> R, H -> R, so each edge enters a pool at
    /// most once.
    fn convert(&mut self, v: NodeId, to: State) {
        let from = self.state[v as usize];
        for &w in self.g.neighbors(v) {
            let other = self.state[w as usize];
            self.adjust(from, other, false);
            self.adjust(to, other, true);
            match (to, other) {
                (State::Zombie, State::Susceptible) => self.zs.push(v, w),
                (State::Hunter, State::Susceptible) => self.hs.push(v, w),
                (State::Zombie, State::Hunter) => self.zh.push(v, w),
                (State::Hunter, State::Zombie) => self.zh.push(w, v),
                _ => {}
            }
        }
        match from {
            State::Zombie => self.zombies -= 1,
            State::Hunter => self.hunters -= 1,
            _ => {}
        }
        match to {
            State::Zombie => self.zombies += 1,
            State::Hunter => self.hunters += 1,
            State::Removed => self.removed += 1,
            State::Susceptible => unreachable!("nodes never return to susceptible"),
        }
        self.state[v as usize] = to;
    }

    fn adjust(&mut self, a: State, b: State, add: bool) {
        let slot = match (a, b) {
            (State::Zombie, State::Susceptible) | (State::Susceptible, State::Zombie) => {
                &mut self.n_zs
            }
            (State::Hunter, State::Susceptible) | (State::Susceptible, State::Hunter) => {
                &mut self.n_hs
            }
            (State::Zombie, State::Hunter) | (State::Hunter, State::Zombie) => &mut self.n_zh,
            _ => return,
        };
        if add {
            *slot += 1;
        } else {
            *slot -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::netgen::RngStream;

    #[test]
    fn si_triangle_half_coverage() {
        let g = complete(3);
        let mut rng = RngStream::new(1, 0);
        let runs = 100_000;
        let times: Vec<f64> = (0..runs)
            .map(|_| {
                simulate_si(&g, 0, 1.0, 0.5, &mut rng)
                    .unwrap()
                    .tthc
                    .unwrap()
            })
            .collect();
        let mean = times.iter().sum::<f64>() / runs as f64;
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let se = (var / runs as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn si_edge_cases() {
        let mut rng = RngStream::new(2, 0);
        let g = path(5);
        // ceil(0.1 * 5) = 1: the seed already suffices.
        let o = simulate_si(&g, 2, 1.0, 0.1, &mut rng).unwrap();
        assert_eq!((o.tthc, o.events, o.final_infected), (Some(0.0), 0, 1));

        let two =
            crate::graph::Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let o = simulate_si(&two, 0, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!((o.tthc, o.final_infected, o.events), (None, 3, 2));

        assert!(simulate_si(&g, 9, 1.0, 0.5, &mut rng).is_err());
        assert!(simulate_si(&g, 0, 0.0, 0.5, &mut rng).is_err());
        assert!(simulate_si(&g, 0, 1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn sis_examples() {
        let mut rng = RngStream::new(3, 0);
        let g = star(4);
        let o = simulate_sis(&g, 0, 0.0, 50, &mut rng).unwrap();
        assert_eq!(o.extinction_iteration, Some(1));
        assert!(!o.persisted);

        let o = simulate_sis(&g, 0, 1.0, 50, &mut rng).unwrap();
        assert!(o.persisted);
        assert_eq!((o.extinction_iteration, o.max_prevalence), (None, 4));

        let iso = crate::graph::Graph::from_edges(3, [(0, 1)]);
        assert_eq!(
            simulate_sis(&iso, 2, 0.7, 50, &mut rng)
                .unwrap()
                .extinction_iteration,
            Some(1)
        );
        assert!(simulate_sis(&g, 0, 1.5, 50, &mut rng).is_err());
        assert!(simulate_sis(&g, 0, -0.1, 50, &mut rng).is_err());

        assert_eq!(
            epidemic_potential(&g, 0, 0.0, 100, 50, &mut rng).unwrap(),
            0.0
        );
        assert_eq!(
            epidemic_potential(&g, 0, 1.0, 100, 50, &mut rng).unwrap(),
            1.0
        );
        assert!(epidemic_potential(&g, 0, 1.0, 0, 50, &mut rng).is_err());
    }

    #[test]
    fn sis_beta_one_alternates_on_path() {
        // Infection on P3 from the middle bounces between ends and middle.
        let mut rng = RngStream::new(4, 0);
        let o = simulate_sis(&path(3), 1, 1.0, 7, &mut rng).unwrap();
        assert!(o.persisted);
        assert_eq!(o.max_prevalence, 2);
    }

    #[test]
    fn competitive_single_edge() {
        let g = crate::graph::Graph::from_edges(2, [(0, 1)]);
        let mut rng = RngStream::new(5, 0);
        let o = simulate_competitive(&g, 0, 1, CompetitiveRates::default(), &mut rng).unwrap();
        assert_eq!(o.winner, Side::Humans);
        assert_eq!(
            (
                o.final_zombies,
                o.final_hunters,
                o.final_susceptible,
                o.final_removed
            ),
            (0, 0, 0, 2)
        );
    }

    #[test]
    fn competitive_isolated_zombie_wins() {
        let mut edges: Vec<(NodeId, NodeId)> = (1..6).map(|i| (i, i + 1)).collect();
        edges.push((6, 1));
        let g = crate::graph::Graph::from_edges(7, edges);
        let mut rng = RngStream::new(6, 0);
        let o = simulate_competitive(&g, 0, 3, CompetitiveRates::default(), &mut rng).unwrap();
        assert_eq!(o.winner, Side::Zombies);
        assert_eq!(
            (o.final_zombies, o.final_hunters, o.final_susceptible),
            (1, 6, 0)
        );
    }

    #[test]
    fn cycle_win_rules() {
        // Antipodal seeds on C_20 almost always leave both strains walled in.
        let g = cycle(20);
        let mut rng = RngStream::new(9, 0);
        let mut extinct = 0;
        let mut majority = 0;
        let runs = 10_000;
        for _ in 0..runs {
            let o = simulate_competitive(&g, 0, 10, CompetitiveRates::default(), &mut rng).unwrap();
            if o.winner == Side::Humans {
                extinct += 1;
            }
            if o.winner_by(WinRule::Majority, &mut rng) == Side::Humans {
                majority += 1;
            }
        }
        assert!(extinct < runs / 100);
        assert!((majority as f64 / runs as f64 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn competitive_errors() {
        let g = cycle(4);
        let mut rng = RngStream::new(7, 0);
        let r = CompetitiveRates::default();
        assert!(matches!(
            simulate_competitive(&g, 1, 1, r, &mut rng),
            Err(SimError::SameSeeds)
        ));
        assert!(simulate_competitive(&g, 1, 9, r, &mut rng).is_err());
        let bad = CompetitiveRates { clash: 0.0, ..r };
        assert!(matches!(
            simulate_competitive(&g, 0, 2, bad, &mut rng),
            Err(SimError::BadRate {
                name: "rate_clash",
                ..
            })
        ));
    }

    #[test]
    fn competitive_counts_add_up() {
        let g = cycle(20);
        let mut rng = RngStream::new(8, 0);
        for _ in 0..200 {
            let o = simulate_competitive(&g, 0, 10, CompetitiveRates::default(), &mut rng).unwrap();
            assert_eq!(
                o.final_zombies + o.final_hunters + o.final_susceptible + o.final_removed,
                20
            );
            assert_eq!(o.final_removed % 2, 0);
            assert_eq!(o.winner == Side::Zombies, o.final_zombies > 0);
        }
    }

    #[test]
    fn simulations_are_reproducible() {
        let g = cycle(12);
        let run = |s| {
            let mut rng = RngStream::new(s, 3);
            (
                simulate_si(&g, 0, 1.0, 0.5, &mut rng).unwrap(),
                simulate_sis(&g, 0, 0.6, 50, &mut rng).unwrap(),
                simulate_competitive(&g, 0, 6, CompetitiveRates::default(), &mut rng).unwrap(),
            )
        };
        assert_eq!(run(9), run(9));
    }
}
