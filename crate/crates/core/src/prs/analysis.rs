use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::hse::{Environment, Stimulus};
use crate::servers::{build_server, server_delays, ServerKind, ServerVariant};
use crate::sim::{SimRng, Stream, Trace};
use crate::timing::{Time, TimeInterval};
use crate::verify::{explore, ExploreOptions};

use super::netlist::Netlist;
use super::sim::simulate;

/// A signal transition `node+` or `node-`.
pub type Transition = (String, bool);

fn show(t: &Transition) -> String {
    format!("{}{}", t.0, if t.1 { '+' } else { '-' })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingReport {
    pub guard_node: String,
    pub mode_node: String,
    /// Upper bound of the guard gate's delay.
    pub guard_delay: Time,
    /// Lower bound of the fastest `mode+` to `mode-` sequence.
    pub path_delay: Time,
    pub path: Vec<Transition>,
    pub satisfied: bool,
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(show).collect();
        write!(
            f,
            "{} gate delay sup {} vs {}+ -> {}- path inf {} ({}): {}",
            self.guard_node,
            self.guard_delay,
            self.mode_node,
            self.mode_node,
            self.path_delay,
            path.join(" "),
            if self.satisfied { "satisfied" } else { "violated" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimingCheckError {
    #[error("node `{0}` is not driven by production rules")]
    MissingNode(String),
    #[error("no {0}+ to {0}- path through one environment response")]
    NoPath(String),
}

/// Edges of the transition graph: `(from, to, weight, environment hop)`.
pub fn transition_edges(net: &Netlist, env_response: Time) -> Vec<(Transition, Transition, Time, bool)> {
    let mut out = Vec::new();
    for r in net.all_rules() {
        for (node, positive) in r.guard.literals() {
            out.push(((node, positive), (r.target.clone(), r.up), r.delay.lo(), false));
        }
    }
    for a in &net.arbiters {
        for (i, o) in [(&a.in1, &a.out1), (&a.in2, &a.out2)] {
            for dir in [true, false] {
                out.push(((i.clone(), dir), (o.clone(), dir), a.delay.lo(), false));
            }
        }
    }
    // Four-phase environment: an acknowledge edge is answered by the
    // opposite edge on the same channel's requests.
    for o in &net.outputs {
        let Some((chan, "a")) = o.split_once('.') else { continue };
        for i in net.inputs.iter().filter(|i| i.split_once('.').is_some_and(|(c, _)| c == chan)) {
            for dir in [true, false] {
                out.push(((o.clone(), dir), (i.clone(), !dir), env_response, true));
            }
        }
    }
    out
}

/// Fastest `mode+` to `mode-` transition sequence passing through exactly
/// one environment response, compared against the guard gate's delay.
/// The assumption holds when the guard gate is strictly faster.
pub fn check_timing_assumption_with(
    net: &Netlist,
    guard: &str,
    mode: &str,
    env_response: Time,
) -> Result<TimingReport, TimingCheckError> {
    let guard_delay = net.delay_of(guard).ok_or_else(|| TimingCheckError::MissingNode(guard.into()))?.hi();
    if net.delay_of(mode).is_none() {
        return Err(TimingCheckError::MissingNode(mode.into()));
    }
    let edges = transition_edges(net, env_response);
    let mut adj: BTreeMap<&Transition, Vec<(&Transition, Time, bool)>> = BTreeMap::new();
    for (a, b, w, env) in &edges {
        adj.entry(a).or_default().push((b, *w, *env));
    }
    let start: Transition = (mode.to_string(), true);
    let goal: Transition = (mode.to_string(), false);
    let mut dist: BTreeMap<(&Transition, bool), Time> = BTreeMap::new();
    let mut prev: BTreeMap<(&Transition, bool), (&Transition, bool)> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert((&start, false), 0);
    heap.push(Reverse((0, &start, false)));
    while let Some(Reverse((d, t, hopped))) = heap.pop() {
        if dist.get(&(t, hopped)).is_some_and(|&best| best < d) {
            continue;
        }
        if *t == goal && hopped {
            let mut path = vec![t.clone()];
            let mut cur = (t, hopped);
            while let Some(&p) = prev.get(&cur) {
                path.push(p.0.clone());
                cur = p;
            }
            path.reverse();
            return Ok(TimingReport {
                guard_node: guard.into(),
                mode_node: mode.into(),
                guard_delay,
                path_delay: d,
                path,
                satisfied: guard_delay < d,
            });
        }
        for &(next, w, env) in adj.get(t).map(Vec::as_slice).unwrap_or_default() {
            if env && hopped {
                continue;
            }
            let key = (next, hopped || env);
            let nd = d + w;
            if dist.get(&key).is_none_or(|&best| nd < best) {
                dist.insert(key, nd);
                prev.insert(key, (t, hopped));
                heap.push(Reverse((nd, next, key.1)));
            }
        }
    }
    Err(TimingCheckError::NoPath(mode.into()))
}

/// [`check_timing_assumption_with`] for the arbiter guard `G_arb` and mode
/// variable `f`, with an instantaneous environment.
pub fn check_timing_assumption(net: &Netlist) -> Result<TimingReport, TimingCheckError> {
    check_timing_assumption_with(net, "G_arb", "f", 0)
}

/// Channel wires of the asymmetric server.
pub const ASYM_WIRES: [&str; 5] = ["C1.r_e", "C1.r_a", "C1.a", "C2.r", "C2.a"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Round {
    C1Alone,
    C2Alone,
    Advance,
    TooEarly,
    C2ThenC1,
}

/// A random stimulus for the asymmetric server built from protocol-correct
/// rounds (solo use by either client, advance approval, a request that
/// arrives too early, and C1 queued behind C2). Consecutive events are
/// `spacing` ticks apart, give or take a quarter.
pub fn random_asym_stimulus(seed: u64, rounds: usize, spacing: Time) -> Vec<(Time, String, bool)> {
    let mut rng = SimRng::new(seed, Stream::Client(0));
    let mut out = Vec::new();
    let mut t = spacing;
    let jitter = spacing / 4;
    let mut ev = |t: &mut Time, rng: &mut SimRng, changes: &[(&str, bool)]| {
        for &(n, v) in changes {
            out.push((*t, n.to_string(), v));
        }
        *t += spacing + rng.uniform(TimeInterval::new(0, jitter).expect("ordered"));
    };
    use Round::*;
    for _ in 0..rounds {
        let round = [C1Alone, C2Alone, Advance, TooEarly, C2ThenC1][rng.below(5)];
        let c1_up: &[(&str, bool)] = &[("C1.r_e", true), ("C1.r_a", true)];
        match round {
            C1Alone => {
                ev(&mut t, &mut rng, c1_up);
                ev(&mut t, &mut rng, &[("C1.r_e", false)]);
                ev(&mut t, &mut rng, &[("C1.r_a", false)]);
            }
            C2Alone => {
                ev(&mut t, &mut rng, &[("C2.r", true)]);
                ev(&mut t, &mut rng, &[("C2.r", false)]);
            }
            Advance => {
                ev(&mut t, &mut rng, c1_up);
                ev(&mut t, &mut rng, &[("C1.r_e", false)]);
                ev(&mut t, &mut rng, &[("C2.r", true)]);
                ev(&mut t, &mut rng, &[("C1.r_a", false)]);
                ev(&mut t, &mut rng, &[("C2.r", false)]);
            }
            TooEarly => {
                ev(&mut t, &mut rng, c1_up);
                ev(&mut t, &mut rng, &[("C2.r", true)]);
                ev(&mut t, &mut rng, &[("C1.r_e", false)]);
                ev(&mut t, &mut rng, &[("C1.r_a", false)]);
                ev(&mut t, &mut rng, &[("C2.r", false)]);
            }
            C2ThenC1 => {
                ev(&mut t, &mut rng, &[("C2.r", true)]);
                ev(&mut t, &mut rng, c1_up);
                ev(&mut t, &mut rng, &[("C2.r", false)]);
                ev(&mut t, &mut rng, &[("C1.r_e", false)]);
                ev(&mut t, &mut rng, &[("C1.r_a", false)]);
            }
        }
    }
    out
}

/// Channel-wire orderings the single-arbiter server can produce under
/// `stimulus`, over all arbiter resolutions.
pub fn hse_orderings(stimulus: &[(Time, String, bool)], wires: &[&str]) -> BTreeSet<Vec<(String, bool)>> {
    let ps = build_server(ServerVariant::new(ServerKind::AsymSingleArbiter, true));
    let delays = server_delays(&ps, TimeInterval::point(1));
    let events: Vec<(Time, String, bool)> =
        stimulus.iter().filter(|(_, n, _)| wires.contains(&n.as_str())).cloned().collect();
    let make = || -> Vec<Box<dyn Environment>> { vec![Box::new(Stimulus::new(events.clone()))] };
    let opts = ExploreOptions::new(usize::MAX);
    let channels = ServerKind::AsymSingleArbiter.channels();
    explore(&ps, &delays, &make, &channels, opts).orderings
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConformanceError {
    #[error("traces were driven by different stimuli (inputs {0:?} vs {1:?})")]
    Stimulus(BTreeSet<String>, BTreeSet<String>),
}

/// True when the netlist's channel-wire ordering in `prs_trace` is one the
/// handshaking-level server reaches from the same stimulus. Both traces must
/// carry the same input transitions; the stimulus is replayed from them.
pub fn prs_vs_hse_conformance(prs_trace: &Trace, hse_trace: &Trace) -> Result<bool, ConformanceError> {
    const INPUTS: [&str; 3] = ["C1.r_e", "C1.r_a", "C2.r"];
    let stimulus_of = |t: &Trace| -> Vec<(Time, String, bool)> {
        t.transitions
            .iter()
            .filter(|x| INPUTS.contains(&x.node.as_str()))
            .map(|x| (x.time, x.node.clone(), x.value))
            .collect()
    };
    let (a, b) = (stimulus_of(prs_trace), stimulus_of(hse_trace));
    if a != b {
        let names = |v: &[(Time, String, bool)]| v.iter().map(|x| x.1.clone()).collect::<BTreeSet<_>>();
        return Err(ConformanceError::Stimulus(names(&a), names(&b)));
    }
    let reachable = hse_orderings(&b, &ASYM_WIRES);
    Ok(reachable.contains(&prs_trace.ordering(&ASYM_WIRES)))
}

/// Runs the netlist on `stimulus` and checks its channel ordering against
/// the handshaking-level server.
pub fn conforms_on(
    net: &Netlist,
    stimulus: &[(Time, String, bool)],
    horizon: Time,
    seed: u64,
) -> Result<bool, super::SimError> {
    let run = simulate(net, stimulus, horizon, seed)?;
    let reachable = hse_orderings(stimulus, &ASYM_WIRES);
    Ok(reachable.contains(&run.trace.ordering(&ASYM_WIRES)))
}
