//! Command-line front end.
//!
//! Exit codes: 0 when nothing was found, 2 when a run produced a safety
//! violation (or hazard, or inequivalence), 1 for configuration and I/O
//! errors.

mod config;

pub use config::{parse_seeds, parse_switch, Config, ConfigError, NetlistSource, PrsConfig};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::prs::{check_timing_assumption_with, simulate};
use crate::servers::{ChannelSpec, ServerKind, WorkloadError};
use crate::sim::{read_trace, write_trace, Trace, TraceError};
use crate::timing::{server_bounds, Time};
use crate::verify::{
    check_all, check_too_early, explore_workload, metrics, trace_equiv, ExploreOptions, Metrics, Violation,
    ViolationKind,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "opmutex", version, about = "Simulate and verify opportunistic mutex servers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Server variant: baseline, asym3, asym1, symmetric or naive.
    #[arg(long)]
    pub server: Option<String>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Half-open seed range `A..B`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `on` or `off`.
    #[arg(long)]
    pub opportunism: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trace per seed and check every run.
    Run(Overrides),
    /// Enumerate channel orderings up to a depth.
    Explore(Overrides),
    /// Compare the orderings of two server variants.
    Compare {
        a: String,
        b: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Simulate a gate-level netlist (`builtin` or a file) against a stimulus.
    Prs {
        netlist: Option<String>,
        #[arg(long)]
        stimulus: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a trace file for violations and report its metrics.
    Check {
        trace: PathBuf,
        #[arg(long)]
        server: Option<String>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Whether a command found a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Violation,
}

impl Outcome {
    fn from_flag(bad: bool) -> Self {
        if bad {
            Outcome::Violation
        } else {
            Outcome::Clean
        }
    }
}

fn parse_kind(name: &str) -> Result<ServerKind, ConfigError> {
    name.parse().map_err(|e: crate::servers::UnknownServer| ConfigError::Invalid(e.to_string()))
}

/// Loads the config file (or defaults) and applies command-line overrides.
/// The result is validated.
pub fn resolve_config(o: &Overrides) -> Result<Config, ConfigError> {
    let mut cfg = match &o.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = &o.server {
        cfg.variant.kind = parse_kind(s)?;
    }
    if let Some(s) = &o.opportunism {
        cfg.variant.opportunism_enabled = parse_switch(s).map_err(ConfigError::Invalid)?;
    }
    if let Some(n) = o.seed {
        cfg.seeds = parse_seeds(&n.to_string()).map_err(ConfigError::Invalid)?;
    }
    if let Some(s) = &o.seeds {
        cfg.seeds = parse_seeds(s).map_err(ConfigError::Invalid)?;
    }
    if let Some(d) = o.depth {
        cfg.depth = d;
    }
    if let Some(out) = &o.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Violations for a trace of a server with the given channels. Asymmetric
/// servers are also checked for grants to a client that requested too early.
pub fn violations(trace: &Trace, channels: &[ChannelSpec; 2]) -> Vec<Violation> {
    let mut out = check_all(trace, channels);
    if channels[1].role == crate::servers::ChannelRole::Simple {
        out.extend(check_too_early(trace, &channels[0], &channels[1]));
    }
    out
}

fn cert_lines(cfg: &Config) -> String {
    let [c1, c2] = &cfg.clients;
    let mut s = format!("zigzag C1->C2: {}\n", server_bounds(c1, c2));
    if cfg.variant.kind.is_symmetric() {
        let _ = writeln!(s, "zigzag C2->C1: {}", server_bounds(c2, c1));
    }
    s
}

/// Result of one seeded run.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub violations: Vec<Violation>,
    pub metrics: Metrics,
}

impl SeedResult {
    fn line(&self) -> String {
        let m = &self.metrics;
        let hs: Vec<String> = m.handshakes_completed.iter().map(|(c, n)| format!("{c}:{n}")).collect();
        format!(
            "seed={} violations={} idle_while_pending={} ack_overlap_time={} opportunistic_grants={} handshakes={}",
            self.seed,
            self.violations.len(),
            m.total_idle_while_pending,
            m.ack_overlap_time,
            m.opportunistic_grants,
            hs.join(",")
        )
    }
}

pub fn trace_file_name(seed: u64) -> String {
    format!("seed-{seed}.trace")
}

fn run_seed(cfg: &Config, seed: u64) -> Result<SeedResult, CliError> {
    let channels = cfg.variant.kind.channels();
    let (trace, runtime) = match cfg.workload().run(cfg.horizon, seed) {
        Ok(t) => (t, None),
        Err(WorkloadError::Run(e)) => {
            let v = Violation { kind: ViolationKind::Runtime, time: 0, involved: Vec::new(), detail: e.to_string() };
            let mut t = Trace::new();
            t.meta.seed = Some(seed);
            (t, Some(v))
        }
        Err(e @ WorkloadError::Client(_)) => return Err(CliError::Usage(e.to_string())),
    };
    let path = cfg.out.join(trace_file_name(seed));
    write_trace(&trace, &path).map_err(|source| CliError::Trace { path, source })?;
    let mut found = violations(&trace, &channels);
    found.extend(runtime);
    Ok(SeedResult { seed, violations: found, metrics: metrics(&trace) })
}

pub fn cmd_run(cfg: &Config) -> Result<Outcome, CliError> {
    print!("{}", cert_lines(cfg));
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let seeds: Vec<u64> = cfg.seeds.clone().collect();
    let results: Vec<SeedResult> = seeds.par_iter().map(|&s| run_seed(cfg, s)).collect::<Result<_, _>>()?;

    let mut summary = String::new();
    let _ = writeln!(summary, "variant={} horizon={}", cfg.variant, cfg.horizon);
    for r in &results {
        let _ = writeln!(summary, "{}", r.line());
        for v in &r.violations {
            let _ = writeln!(summary, "  {v}");
        }
    }
    let bad = results.iter().filter(|r| !r.violations.is_empty()).count();
    let with_grant = results.iter().filter(|r| r.metrics.opportunistic_grants > 0).count();
    let idle: Time = results.iter().map(|r| r.metrics.total_idle_while_pending).sum();
    let _ = writeln!(
        summary,
        "runs={} violating_runs={} runs_with_opportunistic_grant={} total_idle_while_pending={}",
        results.len(),
        bad,
        with_grant,
        idle
    );
    let path = cfg.out.join("summary.txt");
    fs::write(&path, &summary).map_err(io_err(&path))?;
    print!("{summary}");
    Ok(Outcome::from_flag(bad > 0))
}

fn explore_opts(cfg: &Config) -> ExploreOptions {
    ExploreOptions { depth: cfg.depth, max_runs: cfg.max_runs, horizon: cfg.horizon }
}

fn format_ordering(o: &[(String, bool)]) -> String {
    o.iter().map(|(n, v)| format!("{n}{}", if *v { '+' } else { '-' })).collect::<Vec<_>>().join(" ")
}

pub fn cmd_explore(cfg: &Config) -> Result<Outcome, CliError> {
    print!("{}", cert_lines(cfg));
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let ex = explore_workload(&cfg.workload(), explore_opts(cfg));
    let listing: String = ex.orderings.iter().map(|o| format_ordering(o) + "\n").collect();
    let path = cfg.out.join("orderings.txt");
    fs::write(&path, listing).map_err(io_err(&path))?;
    if let Some(t) = &ex.counterexample {
        let path = cfg.out.join("counterexample.trace");
        write_trace(t, &path).map_err(|source| CliError::Trace { path, source })?;
    }
    println!(
        "variant={} depth={} runs={} orderings={} partial={} violating_runs={}",
        cfg.variant,
        cfg.depth,
        ex.runs,
        ex.orderings.len(),
        ex.partial,
        ex.violating_runs
    );
    for v in &ex.violations {
        println!("  {v}");
    }
    Ok(Outcome::from_flag(!ex.violations.is_empty()))
}

pub fn cmd_compare(cfg: &Config, a: ServerKind, b: ServerKind) -> Result<Outcome, CliError> {
    if a.channels() != b.channels() {
        return Err(CliError::Usage(format!("{a} and {b} serve different channels")));
    }
    let mut wa = cfg.workload();
    wa.variant.kind = a;
    let mut wb = cfg.workload();
    wb.variant.kind = b;
    let report = trace_equiv(&wa, &wb, explore_opts(cfg)).map_err(|e| CliError::Usage(e.to_string()))?;
    if report.equivalent {
        println!("EQUIVALENT");
    } else {
        println!("NOT EQUIVALENT");
    }
    println!("{a}: {} orderings, {b}: {} orderings, depth {}", report.orderings.0, report.orderings.1, cfg.depth);
    for o in report.only_in_a.iter().take(5) {
        println!("  only {a}: {}", format_ordering(o));
    }
    for o in report.only_in_b.iter().take(5) {
        println!("  only {b}: {}", format_ordering(o));
    }
    Ok(Outcome::from_flag(!report.equivalent))
}

/// Reads a stimulus in trace transition-line format.
pub fn read_stimulus(path: &Path) -> Result<Vec<(Time, String, bool)>, CliError> {
    let t = read_trace(path).map_err(|source| CliError::Trace { path: path.to_path_buf(), source })?;
    if !t.usage.is_empty() {
        return Err(CliError::Usage(format!("{}: stimulus files hold transitions only", path.display())));
    }
    Ok(t.transitions.into_iter().map(|t| (t.time, t.node, t.value)).collect())
}

pub fn cmd_prs(cfg: &Config) -> Result<Outcome, CliError> {
    let net = cfg.netlist()?;
    let stimulus = match &cfg.prs.stimulus {
        Some(p) => read_stimulus(p)?,
        None => Vec::new(),
    };
    match check_timing_assumption_with(&net, "G_arb", "f", cfg.prs.env_response) {
        Ok(r) => println!("timing: {r}"),
        Err(e) => println!("timing: not checked ({e})"),
    }
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let seeds: Vec<u64> = cfg.seeds.clone().collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let run = simulate(&net, &stimulus, cfg.horizon, seed).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut trace = run.trace.clone();
            trace.meta.seed = Some(seed);
            let path = cfg.out.join(format!("prs-{}", trace_file_name(seed)));
            write_trace(&trace, &path).map_err(|source| CliError::Trace { path, source })?;
            Ok((seed, run))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut hazards = 0;
    for (seed, run) in &runs {
        println!("seed={seed} transitions={} hazards={}", run.trace.transitions.len(), run.hazards.len());
        print!("{}", run.hazard_report());
        hazards += run.hazards.len();
    }
    println!("runs={} hazards={hazards}", runs.len());
    Ok(Outcome::from_flag(hazards > 0))
}

/// Channels of the server that produced `trace`: the named server if given,
/// else the variant recorded in the trace, else inferred from its wires.
pub fn channels_for(trace: &Trace, server: Option<&str>) -> Result<[ChannelSpec; 2], ConfigError> {
    if let Some(s) = server {
        return Ok(parse_kind(s)?.channels());
    }
    if let Some(v) = &trace.meta.variant {
        let name = v.split('/').next().unwrap_or(v);
        if let Ok(k) = name.parse::<ServerKind>() {
            return Ok(k.channels());
        }
    }
    let kind = if trace.nodes().contains("C2.r_e") { ServerKind::Symmetric } else { ServerKind::AsymSingleArbiter };
    Ok(kind.channels())
}

pub fn cmd_check(path: &Path, server: Option<&str>) -> Result<Outcome, CliError> {
    let trace = read_trace(path).map_err(|source| CliError::Trace { path: path.to_path_buf(), source })?;
    let channels = channels_for(&trace, server)?;
    let found = violations(&trace, &channels);
    for v in &found {
        println!("{v}");
    }
    print!("{}", metrics(&trace).summary());
    println!("violations={}", found.len());
    Ok(Outcome::from_flag(!found.is_empty()))
}

pub fn dispatch(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Run(o) => cmd_run(&resolve_config(&o)?),
        Command::Explore(o) => cmd_explore(&resolve_config(&o)?),
        Command::Compare { a, b, overrides } => {
            let (a, b) = (parse_kind(&a)?, parse_kind(&b)?);
            cmd_compare(&resolve_config(&overrides)?, a, b)
        }
        Command::Prs { netlist, stimulus, overrides } => {
            let mut cfg = resolve_config(&overrides)?;
            if let Some(n) = netlist {
                cfg.prs.netlist = n.parse().unwrap();
            }
            if let Some(s) = stimulus {
                cfg.prs.stimulus = Some(s);
            }
            cmd_prs(&cfg)
        }
        Command::Check { trace, server } => cmd_check(&trace, server.as_deref()),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Clean) => EXIT_OK,
        Ok(Outcome::Violation) => EXIT_VIOLATION,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
