use std::collections::BTreeSet;

use crate::hse::{compile_with_envs, Engine, Environment, ProcessSet};
use crate::servers::{build_server, ChannelSpec, Workload};
use crate::sim::{DecisionSource, DelayPolicy, Stream, Trace};
use crate::timing::{Time, TimeInterval};

use super::{check_all, Violation, ViolationKind};

/// Decision source that replays a choice script and extends it with first
/// choices, recording how many alternatives each decision had. Delays take
/// an interval endpoint.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    script: Vec<usize>,
    arity: Vec<usize>,
    pos: usize,
}

impl ScriptedSource {
    pub fn new(script: Vec<usize>) -> Self {
        Self { arity: Vec::with_capacity(script.len()), script, pos: 0 }
    }

    pub fn script(&self) -> &[usize] {
        &self.script
    }

    fn next(&mut self, n: usize) -> usize {
        let c = match self.script.get(self.pos) {
            Some(&c) => c.min(n - 1),
            None => {
                self.script.push(0);
                0
            }
        };
        self.arity.truncate(self.pos);
        self.arity.push(n);
        self.pos += 1;
        c
    }

    /// Advances to the next unexplored script; false once exhausted.
    pub fn advance(&mut self) -> bool {
        self.script.truncate(self.pos);
        self.arity.truncate(self.pos);
        while let (Some(c), Some(n)) = (self.script.pop(), self.arity.pop()) {
            if c + 1 < n {
                self.script.push(c + 1);
                self.pos = 0;
                self.arity.clear();
                return true;
            }
        }
        false
    }
}

impl DecisionSource for ScriptedSource {
    fn delay(&mut self, _stream: Stream, iv: TimeInterval) -> Time {
        if iv.is_point() || self.next(2) == 0 {
            iv.lo()
        } else {
            iv.hi()
        }
    }

    fn choose(&mut self, _stream: Stream, n: usize) -> usize {
        if n <= 1 {
            0
        } else {
            self.next(n)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Visible channel-wire transitions per execution.
    pub depth: usize,
    /// Executions before giving up with a partial result.
    pub max_runs: usize,
    pub horizon: Time,
}

impl ExploreOptions {
    pub fn new(depth: usize) -> Self {
        Self { depth, max_runs: 1_000_000, horizon: Time::MAX / 4 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Exploration {
    pub orderings: BTreeSet<Vec<(String, bool)>>,
    /// Distinct violations (first occurrence of each kind and detail).
    pub violations: Vec<Violation>,
    pub violating_runs: usize,
    /// First execution that produced a violation.
    pub counterexample: Option<Trace>,
    pub runs: usize,
    /// True when `max_runs` stopped the search early.
    pub partial: bool,
}

impl Exploration {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Enumerates every execution of `ps` against the environments built by
/// `envs`, over all interval-endpoint delays and arbiter resolutions, up to
/// `opts.depth` visible transitions on the channels' wires.
pub fn explore<'e>(
    ps: &ProcessSet,
    delays: &DelayPolicy,
    envs: &dyn Fn() -> Vec<Box<dyn Environment + 'e>>,
    channels: &[ChannelSpec],
    opts: ExploreOptions,
) -> Exploration {
    let wires: Vec<String> = channels.iter().flat_map(|c| c.wires()).collect();
    let visible: Vec<&str> = wires.iter().map(String::as_str).collect();
    let prog = compile_with_envs(ps, &envs());
    let mut out = Exploration::default();
    let mut src = ScriptedSource::default();
    let mut seen = BTreeSet::new();
    loop {
        if out.runs == opts.max_runs {
            out.partial = true;
            break;
        }
        out.runs += 1;
        let mut engine = Engine::new(&prog, delays, envs(), opts.horizon);
        engine.limit_visible(&visible, opts.depth);
        let result = engine.run_to_end(&mut src);
        let trace = engine.into_trace();
        let mut found = check_all(&trace, channels);
        if let Err(e) = result {
            found.push(Violation {
                kind: ViolationKind::Runtime,
                time: trace.end_time(),
                involved: Vec::new(),
                detail: e.to_string(),
            });
        }
        if !found.is_empty() {
            out.violating_runs += 1;
            if out.counterexample.is_none() {
                out.counterexample = Some(trace.clone());
            }
            for v in found {
                if seen.insert((v.kind, v.detail.clone())) {
                    out.violations.push(v);
                }
            }
        }
        out.orderings.insert(trace.ordering(&visible));
        if !src.advance() {
            break;
        }
    }
    out
}

/// [`explore`] over a server/client workload.
pub fn explore_workload(w: &Workload, opts: ExploreOptions) -> Exploration {
    let ps = build_server(w.variant);
    let delays = w.delay_policy(&ps);
    let make = || w.environments().expect("workload clients are valid");
    explore(&ps, &delays, &make, &w.variant.kind.channels(), opts)
}

#[derive(Debug, Clone)]
pub struct EquivReport {
    pub equivalent: bool,
    pub orderings: (usize, usize),
    pub only_in_a: Vec<Vec<(String, bool)>>,
    pub only_in_b: Vec<Vec<(String, bool)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("exploration of {0} exceeded the run cap")]
pub struct CapExceeded(pub String);

/// Compares the channel-wire orderings reachable by two workloads that
/// differ only in their server.
pub fn trace_equiv(a: &Workload, b: &Workload, opts: ExploreOptions) -> Result<EquivReport, CapExceeded> {
    let ea = explore_workload(a, opts);
    if ea.partial {
        return Err(CapExceeded(a.variant.to_string()));
    }
    let eb = explore_workload(b, opts);
    if eb.partial {
        return Err(CapExceeded(b.variant.to_string()));
    }
    let only_in_a: Vec<_> = ea.orderings.difference(&eb.orderings).cloned().collect();
    let only_in_b: Vec<_> = eb.orderings.difference(&ea.orderings).cloned().collect();
    Ok(EquivReport {
        equivalent: only_in_a.is_empty() && only_in_b.is_empty(),
        orderings: (ea.orderings.len(), eb.orderings.len()),
        only_in_a,
        only_in_b,
    })
}
