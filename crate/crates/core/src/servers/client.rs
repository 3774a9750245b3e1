//! Client environment processes.
//!
//! A client requests after an idle gap, derives when it actually needs the
//! resource from its pre-emption lead, starts using it at
//! `max(grant observed, required-use time)`, and releases after its usage
//! time. Early/actual clients lower the early wire a lead time before the
//! actual release. Wire changes reach the server after the configured link
//! delays; acknowledges reach the client after the ack link delay.

use thiserror::Error;

use crate::hse::{EnvCtx, Environment};
use crate::sim::{Stream, Usage};
use crate::timing::{ClientTimingParams, ParamsError, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelRole {
    /// Wires `r_e`, `r_a`, `a`.
    EarlyActual,
    /// Wires `r`, `a`.
    Simple,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelSpec {
    pub name: String,
    pub role: ChannelRole,
}

impl ChannelSpec {
    pub fn early_actual(name: &str) -> Self {
        Self { name: name.into(), role: ChannelRole::EarlyActual }
    }

    pub fn simple(name: &str) -> Self {
        Self { name: name.into(), role: ChannelRole::Simple }
    }

    fn wire(&self, w: &str) -> String {
        format!("{}.{w}", self.name)
    }

    pub fn ack(&self) -> String {
        self.wire("a")
    }

    /// Request wires, early wire first.
    pub fn requests(&self) -> Vec<String> {
        match self.role {
            ChannelRole::EarlyActual => vec![self.wire("r_e"), self.wire("r_a")],
            ChannelRole::Simple => vec![self.wire("r")],
        }
    }

    /// The wire whose fall marks the actual release.
    pub fn actual_request(&self) -> String {
        match self.role {
            ChannelRole::EarlyActual => self.wire("r_a"),
            ChannelRole::Simple => self.wire("r"),
        }
    }

    pub fn wires(&self) -> Vec<String> {
        let mut w = self.requests();
        w.push(self.ack());
        w
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(
        "channel {0}: early wire may reach the server after the actual wire \
         (need early_release_lead.lo + link_delay_request.lo > link_delay_early.hi)"
    )]
    WireOrder(String),
}

const RAISE: u64 = 0;
const GRANT_SEEN: u64 = 1;
const EARLY_RELEASE: u64 = 2;
const RELEASE: u64 = 3;
const ACK_LOW_SEEN: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Requesting,
    Using,
    Releasing,
    Done,
}

/// Client-side timestamps of one completed request cycle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleLog {
    pub raise: Time,
    pub required: Time,
    pub grant_seen: Time,
    pub start: Time,
    pub early_release: Option<Time>,
    pub release: Time,
}

#[derive(Debug, Clone)]
pub struct ClientProcess {
    pub channel: ChannelSpec,
    pub params: ClientTimingParams,
    /// `None` requests forever.
    pub request_count: Option<usize>,
    stream: Stream,
    phase: Phase,
    remaining: Option<usize>,
    current: CycleLog,
    log: Vec<CycleLog>,
}

/// Builds a client environment for `spec`; `stream_index` selects its
/// private random stream.
pub fn build_client(
    spec: ChannelSpec,
    params: ClientTimingParams,
    n: Option<usize>,
    stream_index: usize,
) -> Result<ClientProcess, ClientError> {
    params.validate()?;
    if spec.role == ChannelRole::EarlyActual
        && params.early_release_lead.lo() + params.link_delay_request.lo() <= params.link_delay_early.hi()
        && !(params.early_release_lead.hi() == 0 && params.link_delay_early.hi() == 0)
    {
        return Err(ClientError::WireOrder(spec.name));
    }
    Ok(ClientProcess {
        channel: spec,
        params,
        request_count: n,
        stream: Stream::Client(stream_index),
        phase: Phase::Idle,
        remaining: n,
        current: CycleLog::default(),
        log: Vec::new(),
    })
}

impl ClientProcess {
    pub fn cycles(&self) -> &[CycleLog] {
        &self.log
    }

    fn schedule_next_request(&mut self, ctx: &mut EnvCtx<'_>) {
        if self.remaining == Some(0) {
            self.phase = Phase::Done;
            return;
        }
        self.phase = Phase::Idle;
        let gap = ctx.sample(self.stream, self.params.idle_gap);
        ctx.timer_after(gap, RAISE);
    }
}

impl Environment for ClientProcess {
    fn name(&self) -> &str {
        &self.channel.name
    }

    fn nodes(&self) -> Vec<String> {
        self.channel.wires()
    }

    fn start(&mut self, ctx: &mut EnvCtx<'_>) {
        self.schedule_next_request(ctx);
    }

    fn on_timer(&mut self, tag: u64, ctx: &mut EnvCtx<'_>) {
        let now = ctx.now();
        let p = self.params;
        match tag {
            RAISE => {
                self.phase = Phase::Requesting;
                let link = ctx.sample(self.stream, p.link_delay_request);
                for w in self.channel.requests() {
                    ctx.drive_after(link, &w, true);
                }
                let lead = ctx.sample(self.stream, p.preemption_lead);
                self.current = CycleLog { raise: now, required: now + lead, ..CycleLog::default() };
            }
            GRANT_SEEN => {
                self.phase = Phase::Using;
                let start = now.max(self.current.required);
                let usage = ctx.sample(self.stream, p.usage_time);
                let end = start + usage;
                self.current.grant_seen = now;
                self.current.start = start;
                self.current.release = end;
                if self.channel.role == ChannelRole::EarlyActual {
                    let lead = ctx.sample(self.stream, p.early_release_lead);
                    let early = end - lead.min(usage);
                    self.current.early_release = Some(early);
                    ctx.timer_after(early - now, EARLY_RELEASE);
                }
                ctx.timer_after(end - now, RELEASE);
            }
            EARLY_RELEASE => {
                let link = ctx.sample(self.stream, p.link_delay_early);
                let w = self.channel.requests()[0].clone();
                ctx.drive_after(link, &w, false);
            }
            RELEASE => {
                self.phase = Phase::Releasing;
                let link = ctx.sample(self.stream, p.link_delay_request);
                let w = self.channel.actual_request();
                ctx.drive_after(link, &w, false);
            }
            ACK_LOW_SEEN => {
                self.log.push(std::mem::take(&mut self.current));
                if let Some(r) = self.remaining.as_mut() {
                    *r -= 1;
                }
                self.schedule_next_request(ctx);
            }
            _ => unreachable!("unknown client timer {tag}"),
        }
    }

    fn on_change(&mut self, node: &str, value: bool, ctx: &mut EnvCtx<'_>) {
        if node != self.channel.ack() {
            return;
        }
        let expected = match (self.phase, value) {
            (Phase::Requesting, true) => Some(GRANT_SEEN),
            (Phase::Releasing, false) => Some(ACK_LOW_SEEN),
            _ => None,
        };
        if let Some(tag) = expected {
            let d = ctx.sample(self.stream, self.params.link_delay_ack);
            ctx.timer_after(d, tag);
        }
    }

    fn is_done(&self) -> bool {
        self.phase == Phase::Done || (self.phase == Phase::Idle && self.remaining.is_none())
    }

    fn usage(&self) -> Vec<Usage> {
        let mut out: Vec<Usage> = self
            .log
            .iter()
            .map(|c| Usage { client: self.channel.name.clone(), start: c.start, end: c.release })
            .collect();
        if matches!(self.phase, Phase::Using | Phase::Releasing) {
            out.push(Usage { client: self.channel.name.clone(), start: self.current.start, end: self.current.release });
        }
        out
    }
}
