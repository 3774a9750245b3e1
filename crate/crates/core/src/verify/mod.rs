//! Safety checks, performance metrics and exhaustive exploration.

mod explore;

pub use explore::{
    explore, explore_workload, trace_equiv, CapExceeded, EquivReport, Exploration, ExploreOptions, ScriptedSource,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::servers::{ChannelRole, ChannelSpec};
use crate::sim::{Trace, Usage};
use crate::timing::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    MutexOverlap,
    HandshakeOrder,
    Deadlock,
    /// A waiting client was granted although it asked before the holder's
    /// early release.
    PrematureGrant,
    /// The interpreter stopped on a stability, interference or livelock error.
    Runtime,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::MutexOverlap => "mutex-overlap",
            ViolationKind::HandshakeOrder => "handshake-order",
            ViolationKind::Deadlock => "deadlock",
            ViolationKind::PrematureGrant => "premature-grant",
            ViolationKind::Runtime => "runtime",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub kind: ViolationKind,
    pub time: Time,
    /// Clients or nodes involved.
    pub involved: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {} [{}]: {}", self.kind, self.time, self.involved.join(","), self.detail)
    }
}

/// Every pair of usage intervals from different clients that intersect.
/// Intervals are half-open, so touching endpoints do not count.
pub fn check_mutex(trace: &Trace) -> Vec<Violation> {
    let mut usage: Vec<&Usage> = trace.usage.iter().filter(|u| u.start < u.end).collect();
    usage.sort_by_key(|u| (u.start, u.end));
    let mut out = Vec::new();
    for (i, a) in usage.iter().enumerate() {
        for b in &usage[i + 1..] {
            if b.start >= a.end {
                break;
            }
            if a.client != b.client {
                out.push(Violation {
                    kind: ViolationKind::MutexOverlap,
                    time: b.start,
                    involved: vec![a.client.clone(), b.client.clone()],
                    detail: format!("[{},{}) overlaps [{},{})", a.start, a.end, b.start, b.end),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Requested,
    Granted,
    Released,
}

/// Checks the four-phase protocol on one channel; for early/actual channels
/// also that the early wire falls first in every cycle.
pub fn check_handshake(trace: &Trace, spec: &ChannelSpec) -> Vec<Violation> {
    let requests = spec.requests();
    let ack = spec.ack();
    let mut values: BTreeMap<&str, bool> = requests.iter().map(|r| (r.as_str(), false)).collect();
    values.insert(ack.as_str(), false);
    let mut phase = Phase::Idle;
    let mut out = Vec::new();
    for t in &trace.transitions {
        let Some(prev) = values.get_mut(t.node.as_str()) else { continue };
        let mut bad = |msg: String| {
            out.push(Violation {
                kind: ViolationKind::HandshakeOrder,
                time: t.time,
                involved: vec![t.node.clone()],
                detail: msg,
            })
        };
        if *prev == t.value {
            bad(format!("{} driven to {} twice", t.node, t.value as u8));
            continue;
        }
        *prev = t.value;
        let all_req = requests.iter().all(|r| values[r.as_str()]);
        let no_req = requests.iter().all(|r| !values[r.as_str()]);
        let is_ack = t.node == ack;
        let edge = if t.value { '+' } else { '-' };
        let expected = match (phase, is_ack, t.value) {
            (Phase::Idle, false, true) => Some(if all_req { Phase::Requested } else { Phase::Idle }),
            (Phase::Requested, true, true) => Some(Phase::Granted),
            (Phase::Granted, false, false) => {
                if spec.role == ChannelRole::EarlyActual && t.node == requests[1] && values[requests[0].as_str()] {
                    bad(format!("{}- before {}-", requests[1], requests[0]));
                }
                Some(if no_req { Phase::Released } else { Phase::Granted })
            }
            (Phase::Released, true, false) => Some(Phase::Idle),
            _ => None,
        };
        phase = match expected {
            Some(p) => p,
            None => {
                bad(format!("{}{edge} out of order", t.node));
                match (values[ack.as_str()], all_req, no_req) {
                    (false, true, _) => Phase::Requested,
                    (false, _, _) => Phase::Idle,
                    (true, _, true) => Phase::Released,
                    (true, _, false) => Phase::Granted,
                }
            }
        };
    }
    out
}

/// Checks that whenever `waiter` has an outstanding request at the moment
/// `holder` lowers its early wire, the waiter is granted only after the
/// holder's acknowledge falls.
pub fn check_too_early(trace: &Trace, holder: &ChannelSpec, waiter: &ChannelSpec) -> Vec<Violation> {
    let early = holder.requests()[0].clone();
    let h_ack = holder.ack();
    let w_req = waiter.requests()[0].clone();
    let w_ack = waiter.ack();
    let mut values: BTreeMap<&str, bool> = BTreeMap::new();
    let mut watching: Option<Time> = None;
    let mut out = Vec::new();
    for t in &trace.transitions {
        let get = |v: &BTreeMap<&str, bool>, n: &str| v.get(n).copied().unwrap_or(false);
        if t.node == early && !t.value && get(&values, &h_ack) && get(&values, &w_req) && !get(&values, &w_ack) {
            watching = Some(t.time);
        } else if t.node == h_ack && !t.value {
            watching = None;
        } else if t.node == w_ack && t.value {
            if let Some(since) = watching {
                out.push(Violation {
                    kind: ViolationKind::PrematureGrant,
                    time: t.time,
                    involved: vec![waiter.name.clone(), holder.name.clone()],
                    detail: format!("{w_ack}+ before {h_ack}- although {w_req} was raised before {early}- at {since}"),
                });
            }
        }
        values.insert(t.node.as_str(), t.value);
    }
    out
}

/// Violations visible in a finished simulation of `channels`.
pub fn check_all(trace: &Trace, channels: &[ChannelSpec]) -> Vec<Violation> {
    let mut out = check_mutex(trace);
    for c in channels {
        out.extend(check_handshake(trace, c));
    }
    if trace.meta.deadlocked {
        out.push(Violation {
            kind: ViolationKind::Deadlock,
            time: trace.meta.deadlock_time.unwrap_or_else(|| trace.end_time()),
            involved: Vec::new(),
            detail: "no process can progress".into(),
        });
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    pub total_idle_while_pending: Time,
    pub ack_overlap_time: Time,
    /// Completed handshakes (acknowledge falls) per channel.
    pub handshakes_completed: BTreeMap<String, usize>,
    /// Acknowledge rises while another client still holds its acknowledge
    /// with its actual request high.
    pub opportunistic_grants: usize,
}

impl Metrics {
    /// `key=value` lines.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "idle_while_pending={}\nack_overlap_time={}\nopportunistic_grants={}\n",
            self.total_idle_while_pending, self.ack_overlap_time, self.opportunistic_grants
        );
        for (c, n) in &self.handshakes_completed {
            s.push_str(&format!("handshakes.{c}={n}\n"));
        }
        s
    }
}

fn channel_of(node: &str) -> Option<(&str, &str)> {
    node.split_once('.')
}

/// Metrics over the span from time 0 to the trace's end.
pub fn metrics(trace: &Trace) -> Metrics {
    let end = trace.usage.iter().map(|u| u.end).chain([trace.end_time()]).max().unwrap_or(0);
    let mut m = Metrics::default();

    // Breakpoints where the piecewise-constant state may change.
    let mut points: BTreeSet<Time> = trace.transitions.iter().map(|t| t.time).collect();
    let mut usage_delta: BTreeMap<Time, i64> = BTreeMap::new();
    for u in trace.usage.iter().filter(|u| u.start < u.end) {
        *usage_delta.entry(u.start).or_default() += 1;
        *usage_delta.entry(u.end).or_default() -= 1;
    }
    points.extend(usage_delta.keys().copied());
    points.insert(end);
    let mut active = 0i64;

    let mut values: BTreeMap<&str, bool> = BTreeMap::new();
    let mut idx = 0;
    let mut prev: Option<Time> = None;
    for &p in &points {
        if let Some(q) = prev {
            let span = p - q;
            let pending = values
                .iter()
                .any(|(n, v)| *v && channel_of(n).is_some_and(|(_, w)| w == "r" || w == "r_e" || w == "r_a"));
            if pending && active == 0 {
                m.total_idle_while_pending += span;
            }
            let acks = values.iter().filter(|(n, v)| **v && channel_of(n).is_some_and(|(_, w)| w == "a")).count();
            if acks >= 2 {
                m.ack_overlap_time += span;
            }
        }
        while idx < trace.transitions.len() && trace.transitions[idx].time == p {
            let t = &trace.transitions[idx];
            if let Some((chan, "a")) = channel_of(&t.node) {
                if t.value {
                    let holder_unreleased = values.iter().any(|(n, v)| {
                        *v && channel_of(n).is_some_and(|(c, w)| {
                            c != chan && w == "r_a" && values.get(format!("{c}.a").as_str()) == Some(&true)
                        })
                    });
                    if holder_unreleased {
                        m.opportunistic_grants += 1;
                    }
                } else {
                    *m.handshakes_completed.entry(chan.to_string()).or_default() += 1;
                }
            }
            values.insert(t.node.as_str(), t.value);
            idx += 1;
        }
        active += usage_delta.get(&p).copied().unwrap_or(0);
        prev = Some(p);
    }
    m
}
