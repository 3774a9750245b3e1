//! Mutex servers (baseline, opportunistic asymmetric and symmetric, and an
//! unsafe early-grant server) and the client processes that drive them.
//!
//! Server sources are also shipped as `.hse` files under `assets/`.

mod client;
mod variants;

pub use client::{build_client, ChannelRole, ChannelSpec, ClientError, ClientProcess, CycleLog};
pub use variants::{build_server, server_delays, ServerKind, ServerVariant, UnknownServer};

use std::collections::BTreeMap;

use crate::hse::{run, Environment, ProcessSet, RunError};
use crate::sim::{DelayPolicy, Sampling, Trace};
use crate::timing::{ClientTimingParams, Time, TimeInterval};

/// Shipped source text of a server variant with opportunism enabled.
pub fn asset_source(kind: ServerKind) -> &'static str {
    match kind {
        ServerKind::Baseline => include_str!("../../assets/baseline.hse"),
        ServerKind::AsymThreeArbiter => include_str!("../../assets/asym3.hse"),
        ServerKind::AsymSingleArbiter => include_str!("../../assets/asym1.hse"),
        ServerKind::Symmetric => include_str!("../../assets/symmetric.hse"),
        ServerKind::NaiveEarlyGrant => include_str!("../../assets/naive.hse"),
        ServerKind::AsymTwoProcess => include_str!("../../assets/asym2proc.hse"),
        ServerKind::AsymFourWay => include_str!("../../assets/asym4way.hse"),
        ServerKind::SymmetricSixWay => include_str!("../../assets/sym6way.hse"),
    }
}

/// A server together with its two clients.
#[derive(Debug, Clone)]
pub struct Workload {
    pub variant: ServerVariant,
    pub clients: [ClientTimingParams; 2],
    /// Requests per client; `None` requests until the horizon.
    pub requests: [Option<usize>; 2],
    pub ack_delay: TimeInterval,
    pub sampling: Sampling,
    /// Server node delays overriding the defaults of [`server_delays`].
    pub node_delays: BTreeMap<String, TimeInterval>,
}

impl Workload {
    pub fn new(variant: ServerVariant, clients: [ClientTimingParams; 2]) -> Self {
        Self {
            variant,
            clients,
            requests: [None, None],
            ack_delay: TimeInterval::point(1),
            sampling: Sampling::UniformRandom,
            node_delays: BTreeMap::new(),
        }
    }

    pub fn with_requests(mut self, c1: Option<usize>, c2: Option<usize>) -> Self {
        self.requests = [c1, c2];
        self
    }

    pub fn environments(&self) -> Result<Vec<Box<dyn Environment>>, ClientError> {
        let specs = self.variant.kind.channels();
        let mut out: Vec<Box<dyn Environment>> = Vec::new();
        for (i, spec) in specs.into_iter().enumerate() {
            let c = build_client(spec, self.clients[i], self.requests[i], i)?;
            out.push(Box::new(c));
        }
        Ok(out)
    }

    pub fn delay_policy(&self, ps: &ProcessSet) -> DelayPolicy {
        let mut delays = server_delays(ps, self.ack_delay);
        delays.sampling = self.sampling;
        for (k, iv) in &self.node_delays {
            delays.set(k.clone(), *iv);
        }
        delays
    }

    pub fn run(&self, horizon: Time, seed: u64) -> Result<Trace, WorkloadError> {
        let ps = build_server(self.variant);
        let delays = self.delay_policy(&ps);
        let mut trace = run(&ps, self.environments()?, horizon, seed, &delays)?;
        trace.meta.variant = Some(self.variant.to_string());
        Ok(trace)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Run(#[from] Box<RunError>),
}

impl From<RunError> for WorkloadError {
    fn from(e: RunError) -> Self {
        WorkloadError::Run(Box::new(e))
    }
}
