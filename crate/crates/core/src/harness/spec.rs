//! `key = value` experiment description.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! known; `master_seed` is required. A `preset` key (`desk` or `full`)
//! sets the network and replication defaults before the remaining keys are
//! applied, regardless of line order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::metrics::{ErMode, DEFAULT_EW_RESOLUTION};
use crate::netgen::PairRule;
use crate::sim::{CompetitiveRates, WinRule};

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum NetworkSource {
    ChungLu {
        nodes: usize,
        scale: f64,
        shape: f64,
        rule: PairRule,
        ensemble_size: usize,
    },
    /// One network per file, in the given order.
    Files(Vec<PathBuf>),
}

impl NetworkSource {
    pub fn ensemble_size(&self) -> usize {
        match self {
            NetworkSource::ChungLu { ensemble_size, .. } => *ensemble_size,
            NetworkSource::Files(paths) => paths.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BetaRule {
    Fixed(f64),
    /// `beta = k / alpha`.
    AlphaMultiple(f64),
    /// Smallest `k / alpha` over `multipliers` reaching `target` mean
    /// potential on the highest-ER peripheral seeds.
    Tuned {
        target: f64,
        multipliers: Vec<f64>,
    },
}

impl BetaRule {
    fn render(&self) -> String {
        match self {
            BetaRule::Fixed(b) => format!("fixed:{b}"),
            BetaRule::AlphaMultiple(k) => format!("alpha:{k}"),
            BetaRule::Tuned { .. } => "tuned".to_owned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub network: NetworkSource,
    pub lcc_reduce: bool,
    pub hub_fraction: f64,
    pub min_hops: u32,
    pub x: u32,
    pub er_mode: ErMode,
    /// EW bins per unit: the bin of `er` is `floor(resolution / er)`.
    pub ew_resolution: u32,
    pub seeds_per_bin: usize,
    /// SI runs per seed.
    pub runs_per_seed: usize,
    pub si_beta: f64,
    pub coverage: f64,
    pub sis_runs: usize,
    pub horizon: u32,
    pub beta_rule: BetaRule,
    pub grid_runs: usize,
    pub pairs_per_cell: usize,
    pub rates: CompetitiveRates,
    pub win_rule: WinRule,
    pub master_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
}

impl ExperimentSpec {
    /// Defaults for a preset. `master_seed` still has to be supplied.
    pub fn preset(preset: Preset, master_seed: u64) -> Self {
        let (nodes, ensemble_size, runs_per_seed) = match preset {
            Preset::Desk => (1 << 10, 1 << 5, 1 << 5),
            Preset::Full => (1 << 13, 1 << 5, 1 << 7),
        };
        ExperimentSpec {
            network: NetworkSource::ChungLu {
                nodes,
                scale: 1.0,
                shape: 2.3,
                rule: PairRule::OrderedPairs,
                ensemble_size,
            },
            lcc_reduce: true,
            hub_fraction: 0.6,
            min_hops: 3,
            x: 3,
            er_mode: ErMode::Process,
            ew_resolution: DEFAULT_EW_RESOLUTION,
            seeds_per_bin: 5,
            runs_per_seed,
            si_beta: 1.0,
            coverage: 0.5,
            sis_runs: 100,
            horizon: 50,
            beta_rule: BetaRule::AlphaMultiple(5.0),
            grid_runs: 10,
            pairs_per_cell: 1,
            rates: CompetitiveRates::default(),
            win_rule: WinRule::Extinction,
            master_seed,
        }
    }

    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(SpecError::Syntax { line })?;
            let key = key.trim().to_owned();
            if key.is_empty() {
                return Err(SpecError::Syntax { line });
            }
            if !KEYS.contains(&key.as_str()) {
                return Err(SpecError::UnknownKey { line, key });
            }
            if entries.contains_key(&key) {
                return Err(SpecError::DuplicateKey { line, key });
            }
            entries.insert(key, (line, value.trim().to_owned()));
        }

        let take = |entries: &mut BTreeMap<String, (usize, String)>, key: &str| {
            entries.remove(key).map(|(_, v)| v)
        };

        let master_seed: u64 = match take(&mut entries, "master_seed") {
            Some(v) => parse_value("master_seed", &v)?,
            None => return Err(SpecError::Missing("master_seed")),
        };
        let preset = match take(&mut entries, "preset").as_deref() {
            None | Some("desk") => Preset::Desk,
            Some("full") => Preset::Full,
            Some(other) => {
                return Err(bad(
                    "preset",
                    format!("expected desk or full, got `{other}`"),
                ))
            }
        };
        let mut spec = ExperimentSpec::preset(preset, master_seed);

        let network_kind = take(&mut entries, "network");
        let files = take(&mut entries, "files");
        let mut nodes = None;
        let mut scale = None;
        let mut shape = None;
        let mut rule = None;
        let mut ensemble = None;
        let mut tune_target = None;
        let mut tune_multipliers = None;
        let mut beta_rule = None;

        for (key, (_, value)) in std::mem::take(&mut entries) {
            let v = value.as_str();
            match key.as_str() {
                "nodes" => nodes = Some(parse_value(&key, v)?),
                "pareto_scale" => scale = Some(parse_value(&key, v)?),
                "pareto_shape" => shape = Some(parse_value(&key, v)?),
                "pair_rule" => {
                    rule = Some(match v {
                        "unordered" => PairRule::Unordered,
                        "ordered" => PairRule::OrderedPairs,
                        _ => {
                            return Err(bad(
                                &key,
                                format!("expected unordered or ordered, got `{v}`"),
                            ))
                        }
                    })
                }
                "ensemble_size" => ensemble = Some(parse_value(&key, v)?),
                "lcc" => spec.lcc_reduce = parse_value(&key, v)?,
                "hub_fraction" => spec.hub_fraction = parse_value(&key, v)?,
                "min_hops" => spec.min_hops = parse_value(&key, v)?,
                "x" => spec.x = parse_value(&key, v)?,
                "er_mode" => spec.er_mode = v.parse().map_err(|e| bad(&key, format!("{e}")))?,
                "ew_resolution" => spec.ew_resolution = parse_value(&key, v)?,
                "seeds_per_bin" => spec.seeds_per_bin = parse_value(&key, v)?,
                "runs_per_seed" => spec.runs_per_seed = parse_value(&key, v)?,
                "si_beta" => spec.si_beta = parse_value(&key, v)?,
                "coverage" => spec.coverage = parse_value(&key, v)?,
                "sis_runs" => spec.sis_runs = parse_value(&key, v)?,
                "horizon" => spec.horizon = parse_value(&key, v)?,
                "beta_rule" => beta_rule = Some(v.to_owned()),
                "tune_target" => tune_target = Some(parse_value(&key, v)?),
                "tune_multipliers" => tune_multipliers = Some(parse_list(&key, v)?),
                "grid_runs" => spec.grid_runs = parse_value(&key, v)?,
                "pairs_per_cell" => spec.pairs_per_cell = parse_value(&key, v)?,
                "rate_z" => spec.rates.zombify = parse_value(&key, v)?,
                "rate_h" => spec.rates.train = parse_value(&key, v)?,
                "rate_clash" => spec.rates.clash = parse_value(&key, v)?,
                "win_rule" => spec.win_rule = v.parse().map_err(|e: String| bad(&key, e))?,
                _ => unreachable!("keys are validated above"),
            }
        }

        spec.network = match network_kind.as_deref() {
            None | Some("chung_lu") => {
                if files.is_some() {
                    return Err(bad("files", "only valid with network = files".into()));
                }
                let NetworkSource::ChungLu {
                    nodes: n0,
                    scale: s0,
                    shape: h0,
                    rule: r0,
                    ensemble_size: e0,
                } = spec.network
                else {
                    unreachable!("presets generate networks")
                };
                NetworkSource::ChungLu {
                    nodes: nodes.unwrap_or(n0),
                    scale: scale.unwrap_or(s0),
                    shape: shape.unwrap_or(h0),
                    rule: rule.unwrap_or(r0),
                    ensemble_size: ensemble.unwrap_or(e0),
                }
            }
            Some("files") => {
                if nodes.is_some()
                    || scale.is_some()
                    || shape.is_some()
                    || rule.is_some()
                    || ensemble.is_some()
                {
                    return Err(bad(
                        "network",
                        "generator keys are not valid with network = files".into(),
                    ));
                }
                let list = files.ok_or(SpecError::Missing("files"))?;
                let paths: Vec<PathBuf> = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect();
                NetworkSource::Files(paths)
            }
            Some(other) => {
                return Err(bad(
                    "network",
                    format!("expected chung_lu or files, got `{other}`"),
                ))
            }
        };

        spec.beta_rule = match beta_rule.as_deref() {
            None => {
                if tune_target.is_some() || tune_multipliers.is_some() {
                    return Err(bad(
                        "beta_rule",
                        "tune_* keys need beta_rule = tuned".into(),
                    ));
                }
                spec.beta_rule
            }
            Some("tuned") => BetaRule::Tuned {
                target: tune_target.unwrap_or(0.95),
                multipliers: tune_multipliers.unwrap_or_else(|| (1..=20).map(f64::from).collect()),
            },
            Some(rule) => {
                if tune_target.is_some() || tune_multipliers.is_some() {
                    return Err(bad(
                        "beta_rule",
                        "tune_* keys need beta_rule = tuned".into(),
                    ));
                }
                match rule.split_once(':') {
                    Some(("fixed", b)) => BetaRule::Fixed(parse_value("beta_rule", b)?),
                    Some(("alpha", k)) => BetaRule::AlphaMultiple(parse_value("beta_rule", k)?),
                    _ => {
                        return Err(bad(
                            "beta_rule",
                            format!("expected fixed:B, alpha:K or tuned, got `{rule}`"),
                        ))
                    }
                }
            }
        };

        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let positive = |key: &str, v: usize| {
            if v == 0 {
                Err(bad(key, "must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        match &self.network {
            NetworkSource::ChungLu {
                nodes,
                scale,
                shape,
                ensemble_size,
                ..
            } => {
                if *nodes < 2 {
                    return Err(bad("nodes", "must be at least 2".into()));
                }
                if !(*scale > 0.0) {
                    return Err(bad("pareto_scale", "must be positive".into()));
                }
                if !(*shape > 1.0) {
                    return Err(bad("pareto_shape", "must exceed 1".into()));
                }
                positive("ensemble_size", *ensemble_size)?;
            }
            NetworkSource::Files(paths) => positive("files", paths.len())?,
        }
        positive("seeds_per_bin", self.seeds_per_bin)?;
        positive("runs_per_seed", self.runs_per_seed)?;
        positive("sis_runs", self.sis_runs)?;
        positive("grid_runs", self.grid_runs)?;
        positive("pairs_per_cell", self.pairs_per_cell)?;
        positive("ew_resolution", self.ew_resolution as usize)?;
        if !(self.hub_fraction > 0.0 && self.hub_fraction <= 1.0) {
            return Err(bad("hub_fraction", "must lie in (0, 1]".into()));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(bad("coverage", "must lie in (0, 1]".into()));
        }
        if !(self.si_beta > 0.0) {
            return Err(bad("si_beta", "must be positive".into()));
        }
        match &self.beta_rule {
            BetaRule::Fixed(b) if !(0.0..=1.0).contains(b) => {
                return Err(bad("beta_rule", "fixed beta must lie in [0, 1]".into()))
            }
            BetaRule::AlphaMultiple(k) if !(*k >= 0.0) => {
                return Err(bad("beta_rule", "multiplier must be non-negative".into()))
            }
            BetaRule::Tuned { multipliers, .. }
                if multipliers.is_empty() || multipliers.windows(2).any(|w| w[0] >= w[1]) =>
            {
                return Err(bad(
                    "tune_multipliers",
                    "must be non-empty and strictly ascending".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Fully resolved spec in the same `key = value` format; parsing the
    /// output yields an equal spec.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.network {
            NetworkSource::ChungLu {
                nodes,
                scale,
                shape,
                rule,
                ensemble_size,
            } => {
                kv("network", "chung_lu".into());
                kv("nodes", nodes.to_string());
                kv("pareto_scale", scale.to_string());
                kv("pareto_shape", shape.to_string());
                kv(
                    "pair_rule",
                    match rule {
                        PairRule::Unordered => "unordered",
                        PairRule::OrderedPairs => "ordered",
                    }
                    .into(),
                );
                kv("ensemble_size", ensemble_size.to_string());
            }
            NetworkSource::Files(paths) => {
                kv("network", "files".into());
                let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                kv("files", list.join(","));
            }
        }
        kv("lcc", self.lcc_reduce.to_string());
        kv("hub_fraction", self.hub_fraction.to_string());
        kv("min_hops", self.min_hops.to_string());
        kv("x", self.x.to_string());
        kv("er_mode", self.er_mode.to_string());
        kv("ew_resolution", self.ew_resolution.to_string());
        kv("seeds_per_bin", self.seeds_per_bin.to_string());
        kv("runs_per_seed", self.runs_per_seed.to_string());
        kv("si_beta", self.si_beta.to_string());
        kv("coverage", self.coverage.to_string());
        kv("sis_runs", self.sis_runs.to_string());
        kv("horizon", self.horizon.to_string());
        kv("beta_rule", self.beta_rule.render());
        if let BetaRule::Tuned {
            target,
            multipliers,
        } = &self.beta_rule
        {
            kv("tune_target", target.to_string());
            let list: Vec<String> = multipliers.iter().map(|m| m.to_string()).collect();
            kv("tune_multipliers", list.join(","));
        }
        kv("grid_runs", self.grid_runs.to_string());
        kv("pairs_per_cell", self.pairs_per_cell.to_string());
        kv("rate_z", self.rates.zombify.to_string());
        kv("rate_h", self.rates.train.to_string());
        kv("rate_clash", self.rates.clash.to_string());
        kv("win_rule", self.win_rule.as_str().to_owned());
        kv("master_seed", self.master_seed.to_string());
        out
    }
}

const KEYS: &[&str] = &[
    "preset",
    "network",
    "files",
    "nodes",
    "pareto_scale",
    "pareto_shape",
    "pair_rule",
    "ensemble_size",
    "lcc",
    "hub_fraction",
    "min_hops",
    "x",
    "er_mode",
    "ew_resolution",
    "seeds_per_bin",
    "runs_per_seed",
    "si_beta",
    "coverage",
    "sis_runs",
    "horizon",
    "beta_rule",
    "tune_target",
    "tune_multipliers",
    "grid_runs",
    "pairs_per_cell",
    "rate_z",
    "rate_h",
    "rate_clash",
    "win_rule",
    "master_seed",
];

fn bad(key: &str, reason: String) -> SpecError {
    SpecError::BadValue {
        key: key.to_owned(),
        reason,
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, SpecError>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e: T::Err| bad(key, format!("`{v}`: {e}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, SpecError> {
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}
