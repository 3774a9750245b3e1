//! Timestamped transition traces and their text format.
//!
//! ```text
//! # seed=7
//! # variant=asym1
//! # horizon=100000
//! # deadlocked=false
//! 120,C1.r_e,1
//! usage,C1,131,1290
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::timing::Time;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub time: Time,
    pub node: String,
    pub value: bool,
}

/// Half-open interval `[start, end)` during which a client used the
/// resource.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Usage {
    pub client: String,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceMeta {
    pub seed: Option<u64>,
    pub variant: Option<String>,
    pub horizon: Option<Time>,
    pub deadlocked: bool,
    pub deadlock_time: Option<Time>,
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub transitions: Vec<Transition>,
    pub usage: Vec<Usage>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: Time, node: impl Into<String>, value: bool) {
        self.transitions.push(Transition { time, node: node.into(), value });
    }

    pub fn end_time(&self) -> Time {
        let t = self.transitions.last().map_or(0, |t| t.time);
        let u = self.usage.iter().map(|u| u.end).max().unwrap_or(0);
        t.max(u)
    }

    pub fn nodes(&self) -> BTreeSet<&str> {
        self.transitions.iter().map(|t| t.node.as_str()).collect()
    }

    /// Transitions restricted to `nodes`, in trace order.
    pub fn restrict<'a>(&'a self, nodes: &'a [&str]) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| nodes.contains(&t.node.as_str()))
    }

    /// Visible ordering over `nodes`: the sequence of `(node, value)` pairs.
    pub fn ordering(&self, nodes: &[&str]) -> Vec<(String, bool)> {
        self.restrict(nodes).map(|t| (t.node.clone(), t.value)).collect()
    }

    /// First transition per node that does not alternate with the previous
    /// one; `None` if every node alternates.
    pub fn non_alternating(&self) -> Option<&Transition> {
        let mut last: HashMap<&str, bool> = HashMap::new();
        self.transitions.iter().find(|t| last.insert(t.node.as_str(), t.value) == Some(t.value))
    }

    pub fn is_time_sorted(&self) -> bool {
        self.transitions.windows(2).all(|w| w[0].time <= w[1].time)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.meta;
        if let Some(seed) = m.seed {
            let _ = writeln!(out, "# seed={seed}");
        }
        if let Some(v) = &m.variant {
            let _ = writeln!(out, "# variant={v}");
        }
        if let Some(h) = m.horizon {
            let _ = writeln!(out, "# horizon={h}");
        }
        let _ = writeln!(out, "# deadlocked={}", m.deadlocked);
        if let Some(t) = m.deadlock_time {
            let _ = writeln!(out, "# deadlock_time={t}");
        }
        for (k, v) in &m.extra {
            let _ = writeln!(out, "# {k}={v}");
        }
        for t in &self.transitions {
            let _ = writeln!(out, "{},{},{}", t.time, t.node, u8::from(t.value));
        }
        for u in &self.usage {
            let _ = writeln!(out, "usage,{},{},{}", u.client, u.start, u.end);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut trace = Trace::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| TraceError::Parse { line, msg };
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(h) = l.strip_prefix('#') {
                let Some((k, v)) = h.trim().split_once('=') else {
                    continue;
                };
                let (k, v) = (k.trim(), v.trim());
                let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad number `{v}` for `{k}`")));
                match k {
                    "seed" => trace.meta.seed = Some(num(v)?),
                    "horizon" => trace.meta.horizon = Some(num(v)?),
                    "variant" => trace.meta.variant = Some(v.to_string()),
                    "deadlocked" => trace.meta.deadlocked = v.parse().map_err(|_| err(format!("bad flag `{v}`")))?,
                    "deadlock_time" => trace.meta.deadlock_time = Some(num(v)?),
                    _ => {
                        trace.meta.extra.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad number `{v}`")));
            match fields.as_slice() {
                ["usage", client, start, end] => {
                    let (start, end) = (num(start)?, num(end)?);
                    if end < start {
                        return Err(err(format!("usage interval ends before it starts ({start}, {end})")));
                    }
                    trace.usage.push(Usage { client: client.to_string(), start, end });
                }
                [time, node, value] => {
                    let value = match *value {
                        "0" => false,
                        "1" => true,
                        other => return Err(err(format!("bad value `{other}` (expected 0 or 1)"))),
                    };
                    if node.is_empty() {
                        return Err(err("empty node name".into()));
                    }
                    let time = num(time)?;
                    if trace.transitions.last().is_some_and(|p| p.time > time) {
                        return Err(err(format!("time {time} goes backwards")));
                    }
                    trace.push(time, *node, value);
                }
                _ => return Err(err(format!("unrecognized line `{l}`"))),
            }
        }
        Ok(trace)
    }
}

pub fn write_trace(t: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    std::fs::write(path, t.to_text())?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    let text = std::fs::read_to_string(path)?;
    Trace::parse(&text)
}
