//! Experiment configuration: sectioned `key = value` text.
//!
//! ```text
//! [server]
//! variant = asym1
//! opportunism = on
//!
//! [run]
//! horizon = 200000
//! seeds = 0..100
//!
//! [client.c1]
//! usage = 1000..1200
//! early_release_lead = 800..1000
//!
//! [delays]
//! C2.a+ = 2..4
//! ```
//!
//! Intervals are written `lo..hi` or as a single tick count. Seed ranges
//! `a..b` are half-open.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use thiserror::Error;

use crate::prs::{builtin_asym_netlist, parse_prs, Netlist};
use crate::servers::{build_server, ServerKind, ServerVariant, Workload};
use crate::sim::Sampling;
use crate::timing::{ClientTimingParams, Time, TimeInterval};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("[{section}] unknown key `{key}`")]
    UnknownKey { section: String, key: String },
    #[error("[{section}] {key}: {msg}")]
    Value { section: String, key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// Where the gate-level netlist comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetlistSource {
    Builtin,
    File(PathBuf),
}

impl FromStr for NetlistSource {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(if s == "builtin" { NetlistSource::Builtin } else { NetlistSource::File(s.into()) })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrsConfig {
    pub netlist: NetlistSource,
    pub stimulus: Option<PathBuf>,
    pub env_response: Time,
    pub gate_delays: BTreeMap<String, TimeInterval>,
}

impl Default for PrsConfig {
    fn default() -> Self {
        Self { netlist: NetlistSource::Builtin, stimulus: None, env_response: 0, gate_delays: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub variant: ServerVariant,
    pub clients: [ClientTimingParams; 2],
    pub requests: [Option<usize>; 2],
    pub ack_delay: TimeInterval,
    pub sampling: Sampling,
    pub delays: BTreeMap<String, TimeInterval>,
    pub horizon: Time,
    pub seeds: Range<u64>,
    pub out: PathBuf,
    pub depth: usize,
    pub max_runs: usize,
    pub prs: PrsConfig,
}

fn iv(lo: Time, hi: Time) -> TimeInterval {
    TimeInterval::new_const(lo, hi)
}

impl Default for Config {
    /// The safe asymmetric single-arbiter setup: w1 = 950, w2 = 1100.
    fn default() -> Self {
        let c1 = ClientTimingParams {
            usage_time: iv(1000, 1200),
            early_release_lead: iv(800, 1000),
            idle_gap: iv(100, 900),
            link_delay_early: iv(50, 100),
            ..Default::default()
        };
        let c2 = ClientTimingParams {
            usage_time: iv(300, 600),
            preemption_lead: iv(1200, 1500),
            idle_gap: iv(50, 1500),
            link_delay_request: iv(50, 100),
            ..Default::default()
        };
        Self {
            variant: ServerVariant::new(ServerKind::AsymSingleArbiter, true),
            clients: [c1, c2],
            requests: [None, None],
            ack_delay: TimeInterval::point(1),
            sampling: Sampling::UniformRandom,
            delays: BTreeMap::new(),
            horizon: 50_000,
            seeds: 0..1,
            out: PathBuf::from("out"),
            depth: 16,
            max_runs: 1_000_000,
            prs: PrsConfig::default(),
        }
    }
}

/// Parses `on`/`off` (also `true`/`false`).
pub fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(format!("expected on or off, got `{other}`")),
    }
}

/// Parses `n` or a half-open range `a..b`.
pub fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let num = |v: &str| v.trim().parse::<u64>().map_err(|_| format!("bad seed `{v}`"));
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..num(b)?,
        None => {
            let n = num(s)?;
            n..n.checked_add(1).ok_or("seed out of range")?
        }
    };
    if r.is_empty() {
        return Err(format!("empty seed range `{s}`"));
    }
    Ok(r)
}

fn client_index(section: &str) -> Option<usize> {
    match section {
        "client.c1" => Some(0),
        "client.c2" => Some(1),
        _ => None,
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut cfg = Config::default();
        let mut kind = cfg.variant.kind;
        let mut opportunism = cfg.variant.opportunism_enabled;
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ConfigError::Invalid(format!("key `{key}` outside any section")));
                }
                continue;
            };
            for (key, value) in props.iter() {
                let bad = |msg: String| ConfigError::Value { section: section.into(), key: key.into(), msg };
                let unknown = || ConfigError::UnknownKey { section: section.into(), key: key.into() };
                let interval = || value.parse::<TimeInterval>().map_err(|e| bad(e.to_string()));
                let number = || value.parse::<u64>().map_err(|e| bad(e.to_string()));
                match section {
                    "server" => match key {
                        "variant" => {
                            kind = value.parse().map_err(|e: crate::servers::UnknownServer| bad(e.to_string()))?
                        }
                        "opportunism" => opportunism = parse_switch(value).map_err(bad)?,
                        "ack_delay" => cfg.ack_delay = interval()?,
                        "sampling" => cfg.sampling = value.parse().map_err(bad)?,
                        _ => return Err(unknown()),
                    },
                    "run" => match key {
                        "horizon" => cfg.horizon = number()?,
                        "seed" | "seeds" => cfg.seeds = parse_seeds(value).map_err(bad)?,
                        "out" => cfg.out = value.into(),
                        "depth" => cfg.depth = number()? as usize,
                        "max_runs" => cfg.max_runs = number()? as usize,
                        _ => return Err(unknown()),
                    },
                    "delays" => {
                        cfg.delays.insert(key.to_string(), interval()?);
                    }
                    "prs" => match key {
                        "netlist" => cfg.prs.netlist = value.parse().unwrap(),
                        "stimulus" => cfg.prs.stimulus = Some(value.into()),
                        "env_response" => cfg.prs.env_response = number()?,
                        _ => return Err(unknown()),
                    },
                    "prs.delays" => {
                        cfg.prs.gate_delays.insert(key.to_string(), interval()?);
                    }
                    s => {
                        let idx = client_index(s).ok_or_else(|| ConfigError::UnknownSection(s.into()))?;
                        let c = &mut cfg.clients[idx];
                        match key {
                            "usage" => c.usage_time = interval()?,
                            "early_release_lead" => c.early_release_lead = interval()?,
                            "preemption_lead" => c.preemption_lead = interval()?,
                            "idle_gap" => c.idle_gap = interval()?,
                            "link_request" => c.link_delay_request = interval()?,
                            "link_early" => c.link_delay_early = interval()?,
                            "link_ack" => c.link_delay_ack = interval()?,
                            "requests" => {
                                cfg.requests[idx] = if value == "unbounded" { None } else { Some(number()? as usize) }
                            }
                            _ => return Err(unknown()),
                        }
                    }
                }
            }
        }
        cfg.variant = ServerVariant::new(kind, opportunism);
        Ok(cfg)
    }

    pub fn workload(&self) -> Workload {
        let mut w = Workload::new(self.variant, self.clients).with_requests(self.requests[0], self.requests[1]);
        w.ack_delay = self.ack_delay;
        w.sampling = self.sampling;
        w.node_delays = self.delays.clone();
        w
    }

    /// Cross-field checks: client timing, delay keys against the server's
    /// nodes, and run bounds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("empty seed range".into()));
        }
        self.workload().environments().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let ps = build_server(self.variant);
        let nodes = ps.nodes();
        for key in self.delays.keys() {
            let node = key.strip_suffix(['+', '-']).unwrap_or(key);
            if !nodes.contains(node) {
                return Err(ConfigError::Invalid(format!("[delays] `{key}` is not a node of {}", self.variant)));
            }
        }
        Ok(())
    }

    /// Loads the configured netlist and applies `[prs.delays]`.
    pub fn netlist(&self) -> Result<Netlist, ConfigError> {
        let mut net = match &self.prs.netlist {
            NetlistSource::Builtin => builtin_asym_netlist(),
            NetlistSource::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
                parse_prs(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))?
            }
        };
        for (node, d) in &self.prs.gate_delays {
            net.set_delay(node, *d).map_err(|e| ConfigError::Invalid(format!("[prs.delays] {e}")))?;
        }
        Ok(net)
    }
}
