//! Discrete-event interpreter for compiled handshaking expansions.
//!
//! Each top-level process (and each branch of a parallel composition) is a
//! thread with a program counter. An assignment completes after a delay
//! drawn from the [`DelayPolicy`]; guards are re-evaluated instantly at every
//! event time. Zero-delay assignments take effect immediately, after which
//! every thread is re-examined from the lowest process index, so a process
//! listed earlier reacts before a later one within the same instant.

use thiserror::Error;

use super::ast::ProcessSet;
use super::compile::{compile, Instr, NodeId, NodeTable, Pc, Program};
use crate::sim::{DecisionSource, DelayPolicy, EventQueue, Stream, Trace, Transition, Usage};
use crate::timing::{Time, TimeInterval};

/// Upper bound on instructions executed within one instant before the
/// interpreter declares a zero-time livelock.
const SETTLE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HseError {
    #[error("t={time}: deterministic selection in process {process} has {count} true guards (stability violation)")]
    Stability { time: Time, process: usize, count: usize },
    #[error("t={time}: interference on `{node}`: driven both high and low")]
    Interference { time: Time, node: String },
    #[error("t={time}: zero-time livelock")]
    Livelock { time: Time },
}

/// A run that stopped on an interpreter error, with the trace so far.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct RunError {
    pub error: HseError,
    pub trace: Trace,
}

/// Reactive environment attached to the interpreter (clients, stimulus
/// generators).
pub trait Environment {
    fn name(&self) -> &str;

    /// Nodes this environment drives or observes.
    fn nodes(&self) -> Vec<String>;

    fn start(&mut self, ctx: &mut EnvCtx<'_>);

    fn on_timer(&mut self, tag: u64, ctx: &mut EnvCtx<'_>);

    /// Called after any node changes value (including nodes it drives).
    fn on_change(&mut self, node: &str, value: bool, ctx: &mut EnvCtx<'_>);

    /// True when the environment expects nothing more from the server.
    fn is_done(&self) -> bool;

    fn usage(&self) -> Vec<Usage> {
        Vec::new()
    }
}

impl<T: Environment + ?Sized> Environment for &mut T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn nodes(&self) -> Vec<String> {
        (**self).nodes()
    }
    fn start(&mut self, ctx: &mut EnvCtx<'_>) {
        (**self).start(ctx)
    }
    fn on_timer(&mut self, tag: u64, ctx: &mut EnvCtx<'_>) {
        (**self).on_timer(tag, ctx)
    }
    fn on_change(&mut self, node: &str, value: bool, ctx: &mut EnvCtx<'_>) {
        (**self).on_change(node, value, ctx)
    }
    fn is_done(&self) -> bool {
        (**self).is_done()
    }
    fn usage(&self) -> Vec<Usage> {
        (**self).usage()
    }
}

#[derive(Debug)]
pub(crate) enum Payload {
    Assign { thread: usize, node: NodeId, value: bool },
    Drive { node: NodeId, value: bool },
    Timer { env: usize, tag: u64 },
}

/// Scheduling handle passed to an [`Environment`].
pub struct EnvCtx<'a> {
    owner: usize,
    queue: &'a mut EventQueue<Payload>,
    decisions: &'a mut dyn DecisionSource,
    nodes: &'a NodeTable,
}

impl EnvCtx<'_> {
    pub fn now(&self) -> Time {
        self.queue.now()
    }

    pub fn sample(&mut self, stream: Stream, iv: TimeInterval) -> Time {
        self.decisions.delay(stream, iv)
    }

    /// # Panics
    /// If `node` was not declared by [`Environment::nodes`].
    pub fn drive_at(&mut self, at: Time, node: &str, value: bool) {
        let node = self.nodes.get(node).unwrap_or_else(|| panic!("undeclared environment node `{node}`"));
        self.queue.schedule_at(at, Payload::Drive { node, value });
    }

    pub fn drive_after(&mut self, delay: Time, node: &str, value: bool) {
        let at = self.now() + delay;
        self.drive_at(at, node, value);
    }

    pub fn timer_after(&mut self, delay: Time, tag: u64) {
        self.queue.schedule_after(delay, Payload::Timer { env: self.owner, tag });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ThreadState {
    Ready,
    Pending,
    Joining(usize),
    Done,
}

#[derive(Debug, Clone)]
struct Thread {
    process: usize,
    pc: Pc,
    state: ThreadState,
    parent: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finish {
    /// Queue empty and every environment done.
    Quiescent,
    /// Queue empty while some environment still waits on the server.
    Deadlock,
    Horizon,
    /// The visible-transition budget was exhausted.
    DepthLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced(Vec<Transition>),
    Finished(Finish),
}

pub struct Engine<'a> {
    prog: &'a Program,
    policy: &'a DelayPolicy,
    envs: Vec<Box<dyn Environment + 'a>>,
    values: Vec<bool>,
    threads: Vec<Thread>,
    pending: Vec<Vec<(usize, bool)>>,
    queue: EventQueue<Payload>,
    trace: Trace,
    emitted: Vec<Transition>,
    horizon: Time,
    visible: Vec<bool>,
    visible_limit: Option<usize>,
    visible_count: usize,
    stopped: bool,
    started: bool,
    finished: Option<Finish>,
}

impl<'a> Engine<'a> {
    pub fn new(
        prog: &'a Program,
        policy: &'a DelayPolicy,
        envs: Vec<Box<dyn Environment + 'a>>,
        horizon: Time,
    ) -> Self {
        let threads = prog
            .entries
            .iter()
            .enumerate()
            .map(|(process, &pc)| Thread { process, pc, state: ThreadState::Ready, parent: None })
            .collect();
        let mut values = prog.init.clone();
        for (id, g) in &prog.defs {
            values[*id] = g.eval(&values);
        }
        let n = prog.nodes.len();
        let mut trace = Trace::new();
        trace.meta.horizon = Some(horizon);
        Self {
            prog,
            policy,
            envs,
            values,
            threads,
            pending: vec![Vec::new(); n],
            queue: EventQueue::new(),
            trace,
            emitted: Vec::new(),
            horizon,
            visible: vec![false; n],
            visible_limit: None,
            visible_count: 0,
            stopped: false,
            started: false,
            finished: None,
        }
    }

    /// Stops the run just before the `limit + 1`-th transition on any of
    /// `nodes`.
    pub fn limit_visible(&mut self, nodes: &[&str], limit: usize) {
        for n in nodes {
            if let Some(id) = self.prog.nodes.get(n) {
                self.visible[id] = true;
            }
        }
        self.visible_limit = Some(limit);
    }

    pub fn now(&self) -> Time {
        self.queue.now()
    }

    pub fn value(&self, node: &str) -> Option<bool> {
        self.prog.nodes.get(node).map(|id| self.values[id])
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(mut self) -> Trace {
        let mut usage: Vec<Usage> = self.envs.iter().flat_map(|e| e.usage()).collect();
        usage.sort_by(|a, b| (a.start, &a.client).cmp(&(b.start, &b.client)));
        self.trace.usage = usage;
        if self.finished == Some(Finish::Deadlock) {
            self.trace.meta.deadlocked = true;
            self.trace.meta.deadlock_time = Some(self.queue.now());
        }
        self.trace
    }

    fn env_ctx_call(
        &mut self,
        idx: usize,
        decisions: &mut dyn DecisionSource,
        f: impl FnOnce(&mut dyn Environment, &mut EnvCtx<'_>),
    ) {
        let mut ctx = EnvCtx { owner: idx, queue: &mut self.queue, decisions, nodes: &self.prog.nodes };
        f(self.envs[idx].as_mut(), &mut ctx);
    }

    /// Changes a node, records it, updates definitions and notifies the
    /// environments.
    fn set_node(&mut self, id: NodeId, value: bool, decisions: &mut dyn DecisionSource) {
        if self.values[id] == value || self.stopped {
            return;
        }
        if self.visible[id] {
            if self.visible_limit.is_some_and(|l| self.visible_count >= l) {
                self.stopped = true;
                return;
            }
            self.visible_count += 1;
        }
        self.values[id] = value;
        let now = self.queue.now();
        let name = self.prog.nodes.name(id).to_string();
        self.trace.push(now, name.clone(), value);
        self.emitted.push(Transition { time: now, node: name.clone(), value });
        let mut changed = vec![(name, value)];
        let prog = self.prog;
        for _ in 0..=prog.defs.len() {
            let mut any = false;
            for (did, g) in &prog.defs {
                let v = g.eval(&self.values);
                if v != self.values[*did] {
                    self.values[*did] = v;
                    let dname = prog.nodes.name(*did).to_string();
                    self.trace.push(now, dname.clone(), v);
                    self.emitted.push(Transition { time: now, node: dname.clone(), value: v });
                    changed.push((dname, v));
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
        for (n, v) in changed {
            for i in 0..self.envs.len() {
                self.env_ctx_call(i, decisions, |e, ctx| e.on_change(&n, v, ctx));
            }
        }
    }

    fn sweep_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> =
            (0..self.threads.len()).filter(|&i| self.threads[i].state == ThreadState::Ready).collect();
        order.sort_by_key(|&i| (self.threads[i].process, i));
        order
    }

    /// Runs every ready thread until all are blocked at the current instant.
    fn settle(&mut self, decisions: &mut dyn DecisionSource) -> Result<(), HseError> {
        let mut budget = SETTLE_BUDGET;
        'outer: loop {
            let mut progressed = false;
            for t in self.sweep_order() {
                if self.stopped {
                    return Ok(());
                }
                if self.threads[t].state != ThreadState::Ready {
                    continue;
                }
                let (moved, zero_applied) = self.exec(t, decisions, &mut budget)?;
                progressed |= moved;
                if zero_applied {
                    continue 'outer;
                }
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    /// Executes thread `t` until it blocks or applies a zero-delay
    /// assignment. Returns `(progressed, zero_delay_applied)`.
    fn exec(
        &mut self,
        t: usize,
        decisions: &mut dyn DecisionSource,
        budget: &mut usize,
    ) -> Result<(bool, bool), HseError> {
        let now = self.queue.now();
        let prog = self.prog;
        let mut progressed = false;
        loop {
            if *budget == 0 {
                return Err(HseError::Livelock { time: now });
            }
            *budget -= 1;
            let pc = self.threads[t].pc;
            match &prog.code[pc] {
                Instr::Jump(target) => {
                    self.threads[t].pc = *target;
                }
                Instr::Halt => {
                    self.threads[t].state = ThreadState::Done;
                    return Ok((true, false));
                }
                Instr::Join => {
                    self.threads[t].state = ThreadState::Done;
                    if let Some(p) = self.threads[t].parent {
                        if let ThreadState::Joining(n) = self.threads[p].state {
                            self.threads[p].state =
                                if n <= 1 { ThreadState::Ready } else { ThreadState::Joining(n - 1) };
                        }
                    }
                    return Ok((true, false));
                }
                Instr::Fork { children, join } => {
                    let process = self.threads[t].process;
                    for &c in children {
                        self.threads.push(Thread { process, pc: c, state: ThreadState::Ready, parent: Some(t) });
                    }
                    self.threads[t].pc = *join;
                    self.threads[t].state = ThreadState::Joining(children.len());
                    return Ok((true, false));
                }
                Instr::Wait { guard, next } => {
                    if !guard.eval(&self.values) {
                        return Ok((progressed, false));
                    }
                    self.threads[t].pc = *next;
                }
                Instr::Select { det, arms } => {
                    let open: Vec<Pc> = arms.iter().filter(|(g, _)| g.eval(&self.values)).map(|(_, pc)| *pc).collect();
                    let target = match open.len() {
                        0 => return Ok((progressed, false)),
                        1 => open[0],
                        n if *det => {
                            return Err(HseError::Stability { time: now, process: self.threads[t].process, count: n })
                        }
                        n => open[decisions.choose(Stream::Server, n)],
                    };
                    self.threads[t].pc = target;
                }
                Instr::Assign { node, value, next } => {
                    let (node, value, next) = (*node, *value, *next);
                    if self.pending[node].iter().any(|&(o, v)| o != t && v != value) {
                        return Err(HseError::Interference { time: now, node: self.prog.nodes.name(node).to_string() });
                    }
                    self.threads[t].pc = next;
                    if self.values[node] == value && self.pending[node].is_empty() {
                        return Ok((true, false));
                    }
                    let iv = self.policy.interval(self.prog.nodes.name(node), value);
                    let delay = decisions.delay(Stream::Server, iv);
                    if delay == 0 {
                        let changed = self.values[node] != value;
                        self.set_node(node, value, decisions);
                        return Ok((true, changed));
                    }
                    self.pending[node].push((t, value));
                    self.threads[t].state = ThreadState::Pending;
                    self.queue.schedule_after(delay, Payload::Assign { thread: t, node, value });
                    return Ok((true, false));
                }
            }
            progressed = true;
        }
    }

    fn ensure_started(&mut self, decisions: &mut dyn DecisionSource) {
        if self.started {
            return;
        }
        self.started = true;
        for i in 0..self.envs.len() {
            self.env_ctx_call(i, decisions, |e, ctx| e.start(ctx));
        }
    }

    /// Settles the current instant, then applies the next scheduled event.
    pub fn step(&mut self, decisions: &mut dyn DecisionSource) -> Result<StepOutcome, HseError> {
        if let Some(f) = self.finished {
            return Ok(StepOutcome::Finished(f));
        }
        if self.horizon == 0 {
            return Ok(self.finish(Finish::Horizon));
        }
        self.ensure_started(decisions);
        self.emitted.clear();
        self.settle(decisions)?;
        if self.stopped {
            return Ok(self.finish(Finish::DepthLimit));
        }
        let Some(next) = self.queue.peek_time() else {
            let done = self.envs.iter().all(|e| e.is_done());
            return Ok(self.finish(if done { Finish::Quiescent } else { Finish::Deadlock }));
        };
        if next >= self.horizon {
            return Ok(self.finish(Finish::Horizon));
        }
        let (_, _, payload) = self.queue.pop().expect("peeked");
        match payload {
            Payload::Assign { thread, node, value } => {
                if let Some(i) = self.pending[node].iter().position(|&(o, v)| o == thread && v == value) {
                    self.pending[node].swap_remove(i);
                }
                self.set_node(node, value, decisions);
                if self.threads[thread].state == ThreadState::Pending {
                    self.threads[thread].state = ThreadState::Ready;
                }
            }
            Payload::Drive { node, value } => self.set_node(node, value, decisions),
            Payload::Timer { env, tag } => self.env_ctx_call(env, decisions, |e, ctx| e.on_timer(tag, ctx)),
        }
        if self.stopped {
            return Ok(self.finish(Finish::DepthLimit));
        }
        Ok(StepOutcome::Advanced(std::mem::take(&mut self.emitted)))
    }

    fn finish(&mut self, f: Finish) -> StepOutcome {
        self.finished = Some(f);
        StepOutcome::Finished(f)
    }

    /// Steps until the run finishes.
    pub fn run_to_end(&mut self, decisions: &mut dyn DecisionSource) -> Result<Finish, HseError> {
        loop {
            if let StepOutcome::Finished(f) = self.step(decisions)? {
                return Ok(f);
            }
        }
    }
}

/// Compiles `ps` together with the wires of `envs`.
pub fn compile_with_envs(ps: &ProcessSet, envs: &[Box<dyn Environment + '_>]) -> Program {
    let extra: Vec<String> = envs.iter().flat_map(|e| e.nodes()).collect();
    compile(ps, &extra)
}

/// Runs `ps` against `envs` until quiescence, deadlock or `horizon`
/// (exclusive). Deterministic in all of its arguments.
#[allow(clippy::result_large_err)]
pub fn run_with(
    ps: &ProcessSet,
    envs: Vec<Box<dyn Environment + '_>>,
    horizon: Time,
    decisions: &mut dyn DecisionSource,
    delays: &DelayPolicy,
) -> Result<Trace, RunError> {
    let prog = compile_with_envs(ps, &envs);
    let mut engine = Engine::new(&prog, delays, envs, horizon);
    match engine.run_to_end(decisions) {
        Ok(_) => Ok(engine.into_trace()),
        Err(error) => Err(RunError { error, trace: engine.into_trace() }),
    }
}

/// Seeded run with a [`crate::sim::RandomSource`] using the policy's
/// sampling mode.
#[allow(clippy::result_large_err)]
pub fn run(
    ps: &ProcessSet,
    envs: Vec<Box<dyn Environment + '_>>,
    horizon: Time,
    seed: u64,
    delays: &DelayPolicy,
) -> Result<Trace, RunError> {
    let mut src = crate::sim::RandomSource::new(seed, delays.sampling);
    let mut trace = run_with(ps, envs, horizon, &mut src, delays)?;
    trace.meta.seed = Some(seed);
    Ok(trace)
}
