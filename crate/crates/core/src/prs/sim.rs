use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::hse::{CGuard, Guard};
use crate::sim::{DecisionSource, EventQueue, RandomSource, Sampling, Stream, Trace};
use crate::timing::{Time, TimeInterval};

use super::netlist::{index, Netlist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HazardKind {
    /// An enabled transition lost its guard before it fired.
    Instability,
    /// Pull-up and pull-down of one node enabled together.
    Interference,
}

impl fmt::Display for HazardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HazardKind::Instability => "instability",
            HazardKind::Interference => "interference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hazard {
    pub kind: HazardKind,
    pub node: String,
    /// When the hazard was detected.
    pub time: Time,
    /// When the disrupted transition became enabled.
    pub enabled_at: Time,
    pub detail: String,
}

impl fmt::Display for Hazard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} at {} (enabled at {}): {}", self.kind, self.node, self.time, self.enabled_at, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("stimulus drives `{0}`, which is not an input")]
    NotAnInput(String),
    #[error("more than {0} events at time {1}; the netlist oscillates with zero delays")]
    Livelock(usize, Time),
}

#[derive(Debug, Clone, Default)]
pub struct PrsRun {
    pub trace: Trace,
    pub hazards: Vec<Hazard>,
}

impl PrsRun {
    pub fn hazard_report(&self) -> String {
        self.hazards.iter().map(|h| format!("{h}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    value: bool,
    token: u64,
    since: Time,
}

#[derive(Debug)]
enum Ev {
    Input { node: usize, value: bool },
    Fire { node: usize, value: bool, token: u64 },
    Resolve { arb: usize, token: u64 },
}

struct Gate {
    up: Option<CGuard>,
    down: Option<CGuard>,
    up_delay: TimeInterval,
    down_delay: TimeInterval,
}

struct Arb {
    ins: [usize; 2],
    outs: [usize; 2],
    delay: TimeInterval,
    resolution: TimeInterval,
}

struct Resolving {
    token: u64,
    since: Time,
    flagged: bool,
}

const EVENTS_PER_INSTANT: usize = 1_000_000;

fn lower(g: &Guard, idx: &BTreeMap<String, usize>) -> CGuard {
    match g {
        Guard::Const(b) => CGuard::Const(*b),
        Guard::Node(n) => CGuard::Node(idx[n]),
        Guard::Not(a) => CGuard::Not(Box::new(lower(a, idx))),
        Guard::And(a, b) => CGuard::And(Box::new(lower(a, idx)), Box::new(lower(b, idx))),
        Guard::Xor(a, b) => CGuard::Xor(Box::new(lower(a, idx)), Box::new(lower(b, idx))),
        Guard::Or(a, b) => CGuard::Or(Box::new(lower(a, idx)), Box::new(lower(b, idx))),
    }
}

fn reads(g: &CGuard, out: &mut Vec<usize>) {
    match g {
        CGuard::Const(_) => {}
        CGuard::Node(n) => out.push(*n),
        CGuard::Not(a) => reads(a, out),
        CGuard::And(a, b) | CGuard::Xor(a, b) | CGuard::Or(a, b) => {
            reads(a, out);
            reads(b, out);
        }
    }
}

struct Sim<'d> {
    names: Vec<String>,
    gates: Vec<Option<Gate>>,
    arbs: Vec<Arb>,
    gate_fanout: Vec<Vec<usize>>,
    arb_fanout: Vec<Vec<usize>>,
    values: Vec<bool>,
    pending: Vec<Option<Pending>>,
    interfering: Vec<bool>,
    resolving: Vec<Option<Resolving>>,
    queue: EventQueue<Ev>,
    token: u64,
    decisions: &'d mut dyn DecisionSource,
    run: PrsRun,
}

impl<'d> Sim<'d> {
    fn new(net: &Netlist, decisions: &'d mut dyn DecisionSource) -> Self {
        let idx = index(net);
        let n = idx.len();
        let mut names = vec![String::new(); n];
        for (name, &i) in &idx {
            names[i] = name.clone();
        }
        let mut gates: Vec<Option<Gate>> = (0..n).map(|_| None).collect();
        for r in net.all_rules() {
            let i = idx[&r.target];
            let g = gates[i].get_or_insert(Gate { up: None, down: None, up_delay: r.delay, down_delay: r.delay });
            let cg = Some(lower(&r.guard, &idx));
            if r.up {
                g.up = cg;
                g.up_delay = r.delay;
            } else {
                g.down = cg;
                g.down_delay = r.delay;
            }
        }
        let mut gate_fanout = vec![Vec::new(); n];
        for (i, g) in gates.iter().enumerate() {
            let Some(g) = g else { continue };
            let mut r = vec![i];
            for c in [&g.up, &g.down].into_iter().flatten() {
                reads(c, &mut r);
            }
            r.sort_unstable();
            r.dedup();
            for src in r {
                gate_fanout[src].push(i);
            }
        }
        let arbs: Vec<Arb> = net
            .arbiters
            .iter()
            .map(|a| Arb {
                ins: [idx[&a.in1], idx[&a.in2]],
                outs: [idx[&a.out1], idx[&a.out2]],
                delay: a.delay,
                resolution: a.resolution_delay,
            })
            .collect();
        let mut arb_fanout = vec![Vec::new(); n];
        for (k, a) in arbs.iter().enumerate() {
            for node in a.ins.iter().chain(&a.outs) {
                arb_fanout[*node].push(k);
            }
        }
        let resolving = arbs.iter().map(|_| None).collect();
        Sim {
            names,
            gates,
            arbs,
            gate_fanout,
            arb_fanout,
            values: vec![false; n],
            pending: vec![None; n],
            interfering: vec![false; n],
            resolving,
            queue: EventQueue::new(),
            token: 0,
            decisions,
            run: PrsRun::default(),
        }
    }

    fn gate_target(&self, i: usize) -> (bool, bool) {
        let Some(g) = &self.gates[i] else { return (false, false) };
        let up = g.up.as_ref().is_some_and(|c| c.eval(&self.values));
        let down = g.down.as_ref().is_some_and(|c| c.eval(&self.values));
        (up, down)
    }

    /// Settles all gates without delay from the reset state.
    fn settle_reset(&mut self, reset: Option<usize>) {
        if let Some(r) = reset {
            self.values[r] = true;
        }
        for _ in 0..self.values.len() * 4 + 4 {
            let mut changed = false;
            for i in 0..self.values.len() {
                let (up, down) = self.gate_target(i);
                let v = match (up, down) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => continue,
                };
                if self.values[i] != v {
                    self.values[i] = v;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn hazard(&mut self, kind: HazardKind, node: usize, enabled_at: Time, detail: String) {
        self.run.hazards.push(Hazard {
            kind,
            node: self.names[node].clone(),
            time: self.queue.now(),
            enabled_at,
            detail,
        });
    }

    fn schedule(&mut self, node: usize, value: bool, delay: Time) {
        self.token += 1;
        let token = self.token;
        self.pending[node] = Some(Pending { value, token, since: self.queue.now() });
        self.queue.schedule_after(delay, Ev::Fire { node, value, token });
    }

    fn sample(&mut self, iv: TimeInterval) -> Time {
        self.decisions.delay(Stream::Gates, iv)
    }

    fn eval_gate(&mut self, i: usize) {
        let Some(g) = &self.gates[i] else { return };
        let (up_delay, down_delay) = (g.up_delay, g.down_delay);
        let (up, down) = self.gate_target(i);
        if up && down {
            if !self.interfering[i] {
                self.interfering[i] = true;
                self.hazard(HazardKind::Interference, i, self.queue.now(), "pull-up and pull-down both enabled".into());
            }
            self.pending[i] = None;
            return;
        }
        self.interfering[i] = false;
        let target = match (up, down) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        };
        if let Some(p) = self.pending[i] {
            if target == Some(p.value) {
                return;
            }
            self.pending[i] = None;
            let edge = if p.value { '+' } else { '-' };
            let detail = format!("guard of {}{edge} fell before it fired", self.names[i]);
            self.hazard(HazardKind::Instability, i, p.since, detail);
        }
        if let Some(v) = target {
            if self.values[i] != v {
                let d = self.sample(if v { up_delay } else { down_delay });
                self.schedule(i, v, d);
            }
        }
    }

    fn eval_arbiter(&mut self, k: usize) {
        let Arb { ins, outs, delay, resolution } = self.arbs[k];
        for s in 0..2 {
            let (inp, out) = (ins[s], outs[s]);
            if !self.values[out] {
                continue;
            }
            match (self.values[inp], self.pending[out]) {
                (false, None) => {
                    let d = self.sample(delay);
                    self.schedule(out, false, d);
                }
                (true, Some(p)) => {
                    self.pending[out] = None;
                    self.hazard(
                        HazardKind::Instability,
                        inp,
                        p.since,
                        "request re-raised before its grant fell".into(),
                    );
                }
                _ => {}
            }
        }
        if self.values[outs[0]] || self.values[outs[1]] {
            return;
        }
        for s in 0..2 {
            if let Some(p) = self.pending[outs[s]] {
                if p.value && !self.values[ins[s]] {
                    self.pending[outs[s]] = None;
                    let detail = format!("request withdrawn before grant {}+", self.names[outs[s]]);
                    self.hazard(HazardKind::Instability, ins[s], p.since, detail);
                }
            }
        }
        let (a, b) = (self.values[ins[0]], self.values[ins[1]]);
        if let Some(r) = &mut self.resolving[k] {
            if !(a && b) && !r.flagged {
                r.flagged = true;
                let since = r.since;
                let low = if a { ins[1] } else { ins[0] };
                self.hazard(HazardKind::Instability, low, since, "request withdrawn during arbitration".into());
            }
            if !a && !b {
                self.resolving[k] = None;
            }
            return;
        }
        if self.pending[outs[0]].is_some() || self.pending[outs[1]].is_some() {
            return;
        }
        if a && b {
            self.token += 1;
            let token = self.token;
            self.resolving[k] = Some(Resolving { token, since: self.queue.now(), flagged: false });
            let d = self.sample(resolution);
            self.queue.schedule_after(d, Ev::Resolve { arb: k, token });
        } else if a || b {
            let s = if a { 0 } else { 1 };
            let d = self.sample(delay);
            self.schedule(outs[s], true, d);
        }
    }

    fn apply(&mut self, node: usize, value: bool) {
        if self.values[node] == value {
            return;
        }
        self.values[node] = value;
        self.run.trace.push(self.queue.now(), &self.names[node], value);
        for g in self.gate_fanout[node].clone() {
            self.eval_gate(g);
        }
        for a in self.arb_fanout[node].clone() {
            self.eval_arbiter(a);
        }
    }

    fn resolve(&mut self, k: usize, token: u64) {
        if self.resolving[k].as_ref().map(|r| r.token) != Some(token) {
            return;
        }
        self.resolving[k] = None;
        let Arb { ins, outs, .. } = self.arbs[k];
        let s = match (self.values[ins[0]], self.values[ins[1]]) {
            (true, true) => self.decisions.choose(Stream::Gates, 2),
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => return,
        };
        self.schedule(outs[s], true, 0);
    }

    fn run(mut self, horizon: Time) -> Result<PrsRun, SimError> {
        for i in 0..self.values.len() {
            self.eval_gate(i);
        }
        for k in 0..self.arbs.len() {
            self.eval_arbiter(k);
        }
        let mut last = 0;
        let mut at_instant = 0;
        while let Some(t) = self.queue.peek_time() {
            if t >= horizon {
                break;
            }
            let (t, _, ev) = self.queue.pop().expect("peeked");
            if t == last {
                at_instant += 1;
                if at_instant > EVENTS_PER_INSTANT {
                    return Err(SimError::Livelock(EVENTS_PER_INSTANT, t));
                }
            } else {
                last = t;
                at_instant = 0;
            }
            match ev {
                Ev::Input { node, value } => self.apply(node, value),
                Ev::Fire { node, value, token } => {
                    if self.pending[node].is_some_and(|p| p.token == token) {
                        self.pending[node] = None;
                        self.apply(node, value);
                    }
                }
                Ev::Resolve { arb, token } => self.resolve(arb, token),
            }
        }
        self.run.trace.meta.horizon = Some(horizon);
        Ok(self.run)
    }
}

/// Simulates `net` from its reset state. `Reset`, if the netlist has it,
/// starts high and is released at time 0 unless the stimulus drives it.
pub fn simulate_with(
    net: &Netlist,
    stimuli: &[(Time, String, bool)],
    horizon: Time,
    decisions: &mut dyn DecisionSource,
) -> Result<PrsRun, SimError> {
    for (_, node, _) in stimuli {
        if !net.inputs.contains(node) {
            return Err(SimError::NotAnInput(node.clone()));
        }
    }
    let mut sim = Sim::new(net, decisions);
    let reset = sim.names.iter().position(|n| n == "Reset").filter(|&r| net.inputs.contains(&sim.names[r]));
    sim.settle_reset(reset);
    if let Some(r) = reset {
        if !stimuli.iter().any(|(_, n, _)| n == "Reset") {
            sim.queue.schedule_at(0, Ev::Input { node: r, value: false });
        }
    }
    let mut sorted: Vec<&(Time, String, bool)> = stimuli.iter().collect();
    sorted.sort_by_key(|(t, _, _)| *t);
    for (t, node, value) in sorted {
        let node = sim.names.iter().position(|n| n == node).expect("input exists");
        sim.queue.schedule_at(*t, Ev::Input { node, value: *value });
    }
    sim.run(horizon)
}

pub fn simulate(net: &Netlist, stimuli: &[(Time, String, bool)], horizon: Time, seed: u64) -> Result<PrsRun, SimError> {
    let mut src = RandomSource::new(seed, Sampling::UniformRandom);
    let mut run = simulate_with(net, stimuli, horizon, &mut src)?;
    run.trace.meta.seed = Some(seed);
    Ok(run)
}

/// Values of every node settled with `Reset` high and all other inputs low;
/// simulations start here.
pub fn reset_state(net: &Netlist) -> BTreeMap<String, bool> {
    settled(net, false)
}

/// Values of every node once `Reset` is released and the gates settle with
/// all inputs low.
pub fn quiescent_state(net: &Netlist) -> BTreeMap<String, bool> {
    settled(net, true)
}

fn settled(net: &Netlist, release: bool) -> BTreeMap<String, bool> {
    let mut src = crate::sim::FixedSource { branch: 0 };
    let mut sim = Sim::new(net, &mut src);
    let reset = sim.names.iter().position(|n| n == "Reset");
    sim.settle_reset(reset);
    if let (Some(r), true) = (reset, release) {
        sim.values[r] = false;
        sim.settle_reset(None);
    }
    sim.names.iter().cloned().zip(sim.values.iter().copied()).collect()
}
