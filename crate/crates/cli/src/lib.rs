//! Command-line front end for the `expected-reach` library.
//!
//! `parse_invocation` turns argv into a typed [`Cli`]; `run` dispatches it.
//! Data goes to `--out` files or stdout, diagnostics go to stderr.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use expected_reach::graph::{
    classify_periphery, largest_eigenvalue, load_edge_list, write_edge_list, Graph, LoadOptions,
    NodeId,
};
use expected_reach::harness::{
    csv_field, run_experiment, ExperimentKind, ExperimentSpec, SpecError, VERSION,
};
use expected_reach::metrics::{accessibility, expected_reach, expected_wait, ErMode};
use expected_reach::netgen::{chung_lu_with, pareto_weights, PairRule, RngStream};
use expected_reach::sim::{
    simulate_competitive, simulate_si, simulate_sis, CompetitiveRates, WinRule,
};

/// Expected Reach: spreading-power metric, network generator and epidemic
/// experiments.
#[derive(Debug, Parser, PartialEq)]
#[command(name = "reach", version = VERSION, propagate_version = true)]
pub struct Cli {
    /// Worker threads for experiments (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Line-based progress log on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum Command {
    /// Generate a Chung-Lu graph with Pareto weights.
    Netgen(NetgenArgs),
    /// Node metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Single-seed simulations.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Ensemble experiments driven by a spec file.
    #[command(subcommand)]
    Exp(ExpCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairRuleArg {
    Unordered,
    Ordered,
}

impl From<PairRuleArg> for PairRule {
    fn from(r: PairRuleArg) -> Self {
        match r {
            PairRuleArg::Unordered => PairRule::Unordered,
            PairRuleArg::Ordered => PairRule::OrderedPairs,
        }
    }
}

#[derive(Debug, Args, PartialEq)]
pub struct NetgenArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1.0)]
    pub pareto_scale: f64,
    #[arg(long, default_value_t = 2.3)]
    pub pareto_shape: f64,
    /// Master seed.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// `ordered` tries every ordered pair once (mean degree ~ 2 mean(w)).
    #[arg(long, value_enum, default_value_t = PairRuleArg::Ordered)]
    pub pair_rule: PairRuleArg,
    /// Output edge list (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Which nodes to report: `all`, `peripheral`, or a comma list of labels.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeSelection {
    All,
    Peripheral,
    Labels(Vec<String>),
}

impl std::str::FromStr for NodeSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(NodeSelection::All),
            "peripheral" => Ok(NodeSelection::Peripheral),
            _ => {
                let labels: Vec<String> = s.split(',').map(|l| l.trim().to_owned()).collect();
                if labels.iter().any(String::is_empty) {
                    return Err(format!("empty node label in `{s}`"));
                }
                Ok(NodeSelection::Labels(labels))
            }
        }
    }
}

#[derive(Debug, Args, PartialEq)]
pub struct PeripheryArgs {
    /// Hubs have degree above this fraction of the maximum degree.
    #[arg(long, default_value_t = 0.6)]
    pub hub_fraction: f64,
    /// Peripheral nodes are at least this many hops from every hub.
    #[arg(long, default_value_t = 3)]
    pub min_hops: u32,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum MetricsCommand {
    /// Expected Reach and quantized Expected Wait.
    Er {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 3)]
        x: u32,
        #[arg(long, default_value_t = ErMode::Process)]
        mode: ErMode,
        #[arg(long, default_value = "peripheral")]
        nodes: NodeSelection,
        /// Transmission rate used for the raw expected wait.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        periphery: PeripheryArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponential entropy of the h-step random walk.
    Accessibility {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 3)]
        h: u32,
        #[arg(long, default_value = "all")]
        nodes: NodeSelection,
        #[command(flatten)]
        periphery: PeripheryArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, PartialEq)]
pub struct SisBeta {
    #[arg(long)]
    pub beta: Option<f64>,
    /// Use beta = k / alpha, alpha the adjacency spectral radius.
    #[arg(long, conflicts_with = "beta")]
    pub beta_mult: Option<f64>,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum SimCommand {
    /// Continuous-time SI until a coverage threshold.
    Si {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        seed_node: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        coverage: f64,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Master seed for the run streams.
        #[arg(long, default_value_t = 0)]
        rng: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete-time SIS with unit recovery.
    Sis {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        seed_node: String,
        #[command(flatten)]
        beta: SisBeta,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 50)]
        horizon: u32,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Competitive zombie/hunter spreading.
    Compete {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        zombie: String,
        #[arg(long)]
        hunter: String,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 1.0)]
        rate_z: f64,
        #[arg(long, default_value_t = 1.0)]
        rate_h: f64,
        #[arg(long, default_value_t = 1.0)]
        rate_clash: f64,
        #[arg(long, value_enum, default_value_t = WinRuleArg::Extinction)]
        win_rule: WinRuleArg,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WinRuleArg {
    Extinction,
    Majority,
}

impl From<WinRuleArg> for WinRule {
    fn from(r: WinRuleArg) -> Self {
        match r {
            WinRuleArg::Extinction => WinRule::Extinction,
            WinRuleArg::Majority => WinRule::Majority,
        }
    }
}

#[derive(Debug, Args, PartialEq)]
pub struct ExpArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum ExpCommand {
    /// SI time to coverage per sampled seed.
    Tthc(ExpArgs),
    /// SIS epidemic potential per sampled seed.
    Potential(ExpArgs),
    /// Competitive grid over EW bin pairs.
    Grid(ExpArgs),
    /// Beta tuning trace.
    TuneBeta(ExpArgs),
}

/// Parses argv (program name first). `--help` and `--version` come back as
/// errors whose exit code is 0.
pub fn parse_invocation<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation or configuration (exit 2).
    Usage(anyhow::Error),
    /// Anything that went wrong while running (exit 1).
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses and runs; prints diagnostics to stderr and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match parse_invocation(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::Usage(anyhow::anyhow!(
                "--workers must be at least 1"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Netgen(a) => netgen(a)?,
        Command::Metrics(m) => metrics(m)?,
        Command::Sim(s) => sim(s)?,
        Command::Exp(e) => exp(e)?,
    }
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("{}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut out: Box<dyn Write>, path: Option<&Path>) -> Result<()> {
    out.flush().with_context(|| match path {
        Some(p) => p.display().to_string(),
        None => "stdout".into(),
    })
}

fn load_graph(path: &Path) -> Result<Graph> {
    let file = File::open(path).with_context(|| format!("{}", path.display()))?;
    load_edge_list(BufReader::new(file), LoadOptions::default())
        .with_context(|| format!("{}", path.display()))
}

fn node(g: &Graph, label: &str) -> Result<NodeId> {
    match g.node_by_label(label) {
        Some(v) => Ok(v),
        None => bail!("node `{label}` not in graph"),
    }
}

fn select(g: &Graph, sel: &NodeSelection, p: &PeripheryArgs) -> Result<Vec<NodeId>> {
    Ok(match sel {
        NodeSelection::All => g.nodes().collect(),
        NodeSelection::Peripheral => classify_periphery(g, p.hub_fraction, p.min_hops)?
            .peripheral_set
            .as_slice()
            .to_vec(),
        NodeSelection::Labels(labels) => {
            labels.iter().map(|l| node(g, l)).collect::<Result<_>>()?
        }
    })
}

fn netgen(a: NetgenArgs) -> Result<()> {
    let mut rng = RngStream::new(a.seed, a.stream);
    let w = pareto_weights(a.nodes, a.pareto_scale, a.pareto_shape, &mut rng)?;
    let g = chung_lu_with(&w, a.pair_rule.into(), &mut rng)?;
    log::info!(
        "generated {} nodes, {} edges",
        g.node_count(),
        g.edge_count()
    );
    let mut out = output(a.out.as_deref())?;
    write_edge_list(&g, &mut out).with_context(|| describe(a.out.as_deref()))?;
    finish(out, a.out.as_deref())
}

fn describe(path: Option<&Path>) -> String {
    path.map_or_else(|| "stdout".into(), |p| p.display().to_string())
}

fn metrics(m: MetricsCommand) -> Result<()> {
    match m {
        MetricsCommand::Er {
            graph,
            x,
            mode,
            nodes,
            beta,
            periphery,
            out,
        } => {
            let g = load_graph(&graph)?;
            let targets = select(&g, &nodes, &periphery)?;
            let mut w = output(out.as_deref())?;
            let ctx = describe(out.as_deref());
            writeln!(
                w,
                "node,x,mode,er,ew_raw,ew_quantized,distinct_clusters,branches,truncated"
            )
            .with_context(|| ctx.clone())?;
            for v in targets {
                let r = expected_reach(&g, v, x, mode)?;
                let (raw, quantized) = match expected_wait(r.value, beta) {
                    Ok(ew) => (ew.raw.to_string(), ew.quantized.to_string()),
                    Err(_) => (String::new(), String::new()),
                };
                writeln!(
                    w,
                    "{},{x},{mode},{},{raw},{quantized},{},{},{}",
                    csv_field(g.label(v)),
                    r.value,
                    r.distinct_clusters,
                    r.branches_explored,
                    r.truncated_branches
                )
                .with_context(|| ctx.clone())?;
            }
            finish(w, out.as_deref())
        }
        MetricsCommand::Accessibility {
            graph,
            h,
            nodes,
            periphery,
            out,
        } => {
            let g = load_graph(&graph)?;
            let targets = select(&g, &nodes, &periphery)?;
            let mut w = output(out.as_deref())?;
            let ctx = describe(out.as_deref());
            writeln!(w, "node,h,accessibility").with_context(|| ctx.clone())?;
            for v in targets {
                let value = match accessibility(&g, v, h) {
                    Ok(a) => a.to_string(),
                    Err(_) => String::new(),
                };
                writeln!(w, "{},{h},{value}", csv_field(g.label(v)))
                    .with_context(|| ctx.clone())?;
            }
            finish(w, out.as_deref())
        }
    }
}

fn sim(s: SimCommand) -> Result<(), Failure> {
    match s {
        SimCommand::Si {
            graph,
            seed_node,
            beta,
            coverage,
            runs,
            rng,
            out,
        } => {
            let g = load_graph(&graph)?;
            let seed = node(&g, &seed_node)?;
            let mut w = output(out.as_deref())?;
            let ctx = describe(out.as_deref());
            writeln!(w, "run,seed,tthc,final_infected").with_context(|| ctx.clone())?;
            for run in 0..runs {
                let mut r = RngStream::keyed(rng, &[run as u64]);
                let o =
                    simulate_si(&g, seed, beta, coverage, &mut r).map_err(anyhow::Error::from)?;
                let tthc = o.tthc.map(|t| t.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{run},{},{tthc},{}",
                    csv_field(&seed_node),
                    o.final_infected
                )
                .with_context(|| ctx.clone())?;
            }
            Ok(finish(w, out.as_deref())?)
        }
        SimCommand::Sis {
            graph,
            seed_node,
            beta,
            runs,
            horizon,
            rng,
            out,
        } => {
            let g = load_graph(&graph)?;
            let seed = node(&g, &seed_node)?;
            let beta = match (beta.beta, beta.beta_mult) {
                (Some(b), None) => b,
                (None, Some(k)) => {
                    let alpha =
                        largest_eigenvalue(&g, 1e-10, 100_000).map_err(anyhow::Error::from)?;
                    let b = (k / alpha).min(1.0);
                    log::info!("alpha {alpha}, beta {b}");
                    b
                }
                _ => {
                    return Err(Failure::Usage(anyhow::anyhow!(
                        "sim sis needs exactly one of --beta or --beta-mult"
                    )))
                }
            };
            let mut w = output(out.as_deref())?;
            let ctx = describe(out.as_deref());
            writeln!(w, "run,seed,persisted,extinction_iteration").with_context(|| ctx.clone())?;
            for run in 0..runs {
                let mut r = RngStream::keyed(rng, &[run as u64]);
                let o =
                    simulate_sis(&g, seed, beta, horizon, &mut r).map_err(anyhow::Error::from)?;
                let ext = o
                    .extinction_iteration
                    .map(|t| t.to_string())
                    .unwrap_or_default();
                writeln!(w, "{run},{},{},{ext}", csv_field(&seed_node), o.persisted)
                    .with_context(|| ctx.clone())?;
            }
            Ok(finish(w, out.as_deref())?)
        }
        SimCommand::Compete {
            graph,
            zombie,
            hunter,
            runs,
            rate_z,
            rate_h,
            rate_clash,
            win_rule,
            rng,
            out,
        } => {
            let g = load_graph(&graph)?;
            let (z, h) = (node(&g, &zombie)?, node(&g, &hunter)?);
            let rates = CompetitiveRates {
                zombify: rate_z,
                train: rate_h,
                clash: rate_clash,
            };
            let mut w = output(out.as_deref())?;
            let ctx = describe(out.as_deref());
            writeln!(w, "run,winner,z,h,s,r,elapsed").with_context(|| ctx.clone())?;
            for run in 0..runs {
                let mut r = RngStream::keyed(rng, &[run as u64]);
                let o =
                    simulate_competitive(&g, z, h, rates, &mut r).map_err(anyhow::Error::from)?;
                let winner = o.winner_by(win_rule.into(), &mut r);
                writeln!(
                    w,
                    "{run},{},{},{},{},{},{}",
                    winner.as_str(),
                    o.final_zombies,
                    o.final_hunters,
                    o.final_susceptible,
                    o.final_removed,
                    o.elapsed
                )
                .with_context(|| ctx.clone())?;
            }
            Ok(finish(w, out.as_deref())?)
        }
    }
}

fn exp(e: ExpCommand) -> Result<(), Failure> {
    let (kind, args) = match e {
        ExpCommand::Tthc(a) => (ExperimentKind::Tthc, a),
        ExpCommand::Potential(a) => (ExperimentKind::Potential, a),
        ExpCommand::Grid(a) => (ExperimentKind::Grid, a),
        ExpCommand::TuneBeta(a) => (ExperimentKind::TuneBeta, a),
    };
    let text =
        std::fs::read_to_string(&args.spec).with_context(|| format!("{}", args.spec.display()))?;
    let spec = ExperimentSpec::parse(&text).map_err(|e: SpecError| {
        Failure::Usage(anyhow::Error::from(e).context(args.spec.display().to_string()))
    })?;
    let csv = run_experiment(kind, &spec, &args.out).map_err(anyhow::Error::from)?;
    log::info!("wrote {}", csv.display());
    Ok(())
}
