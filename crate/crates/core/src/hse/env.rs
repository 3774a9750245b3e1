//! Simple environments: a fixed stimulus schedule and a reactive
//! four-phase requester.

use super::engine::{EnvCtx, Environment};
use crate::timing::Time;

/// Drives input nodes at fixed absolute times, ignoring the server.
#[derive(Debug, Clone, Default)]
pub struct Stimulus {
    pub events: Vec<(Time, String, bool)>,
}

impl Stimulus {
    pub fn new(events: Vec<(Time, String, bool)>) -> Self {
        Self { events }
    }
}

impl Environment for Stimulus {
    fn name(&self) -> &str {
        "stimulus"
    }

    fn nodes(&self) -> Vec<String> {
        self.events.iter().map(|(_, n, _)| n.clone()).collect()
    }

    fn start(&mut self, ctx: &mut EnvCtx<'_>) {
        for (t, n, v) in &self.events {
            ctx.drive_at(*t, n, *v);
        }
    }

    fn on_timer(&mut self, _tag: u64, _ctx: &mut EnvCtx<'_>) {}

    fn on_change(&mut self, _node: &str, _value: bool, _ctx: &mut EnvCtx<'_>) {}

    fn is_done(&self) -> bool {
        true
    }
}

/// Performs `cycles` four-phase handshakes on `(req, ack)`, answering every
/// acknowledge edge after a fixed `response` delay.
#[derive(Debug, Clone)]
pub struct FourPhaseRequester {
    pub req: String,
    pub ack: String,
    pub response: Time,
    pub start_at: Time,
    remaining: usize,
    busy: bool,
}

impl FourPhaseRequester {
    pub fn new(req: &str, ack: &str, cycles: usize, start_at: Time, response: Time) -> Self {
        Self { req: req.into(), ack: ack.into(), response, start_at, remaining: cycles, busy: false }
    }
}

impl Environment for FourPhaseRequester {
    fn name(&self) -> &str {
        &self.req
    }

    fn nodes(&self) -> Vec<String> {
        vec![self.req.clone(), self.ack.clone()]
    }

    fn start(&mut self, ctx: &mut EnvCtx<'_>) {
        if self.remaining > 0 {
            self.busy = true;
            ctx.drive_at(self.start_at, &self.req.clone(), true);
        }
    }

    fn on_timer(&mut self, _tag: u64, _ctx: &mut EnvCtx<'_>) {}

    fn on_change(&mut self, node: &str, value: bool, ctx: &mut EnvCtx<'_>) {
        if node != self.ack || !self.busy {
            return;
        }
        let req = self.req.clone();
        if value {
            ctx.drive_after(self.response, &req, false);
        } else {
            self.remaining -= 1;
            if self.remaining > 0 {
                ctx.drive_after(self.response, &req, true);
            } else {
                self.busy = false;
            }
        }
    }

    fn is_done(&self) -> bool {
        !self.busy
    }
}
