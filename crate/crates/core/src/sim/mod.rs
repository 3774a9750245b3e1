//! Discrete-event kernel shared by the handshake interpreter and the
//! production-rule simulator.

pub mod delay;
pub mod queue;
pub mod rng;
pub mod trace;

pub use delay::{sample_delay, DecisionSource, DelayPolicy, FixedSource, RandomSource, Sampling};
pub use queue::{Event, EventQueue, Source};
pub use rng::{SimRng, Stream};
pub use trace::{read_trace, write_trace, Trace, TraceError, TraceMeta, Transition, Usage};
