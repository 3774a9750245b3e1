use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::rng::{SimRng, Stream};
use crate::timing::{Time, TimeInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Sampling {
    #[default]
    UniformRandom,
    LowEndpoint,
    HighEndpoint,
    /// Only interval endpoints. Random runs pick one at random; exhaustive
    /// exploration enumerates both.
    ExhaustiveEndpoints,
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::UniformRandom => "uniform",
            Sampling::LowEndpoint => "low",
            Sampling::HighEndpoint => "high",
            Sampling::ExhaustiveEndpoints => "endpoints",
        })
    }
}

impl FromStr for Sampling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Sampling::UniformRandom),
            "low" => Ok(Sampling::LowEndpoint),
            "high" => Ok(Sampling::HighEndpoint),
            "endpoints" => Ok(Sampling::ExhaustiveEndpoints),
            other => Err(format!("unknown sampling mode `{other}`")),
        }
    }
}

/// Draws one delay from `iv` according to `mode`.
pub fn sample_delay(iv: TimeInterval, mode: Sampling, rng: &mut SimRng) -> Time {
    match mode {
        Sampling::UniformRandom => rng.uniform(iv),
        Sampling::LowEndpoint => iv.lo(),
        Sampling::HighEndpoint => iv.hi(),
        Sampling::ExhaustiveEndpoints => {
            if iv.is_point() || !rng.coin() {
                iv.lo()
            } else {
                iv.hi()
            }
        }
    }
}

/// Per-node delay intervals. Keys are a node name (both edges) or a node
/// name with a `+`/`-` suffix (one edge only); edge keys win.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayPolicy {
    pub default: TimeInterval,
    pub per_node: BTreeMap<String, TimeInterval>,
    pub sampling: Sampling,
}

impl Default for DelayPolicy {
    fn default() -> Self {
        Self { default: TimeInterval::point(1), per_node: BTreeMap::new(), sampling: Sampling::UniformRandom }
    }
}

impl DelayPolicy {
    pub fn with_default(default: TimeInterval) -> Self {
        Self { default, ..Self::default() }
    }

    pub fn set(&mut self, key: impl Into<String>, iv: TimeInterval) -> &mut Self {
        self.per_node.insert(key.into(), iv);
        self
    }

    pub fn interval(&self, node: &str, rising: bool) -> TimeInterval {
        let edge = format!("{node}{}", if rising { '+' } else { '-' });
        self.per_node.get(&edge).or_else(|| self.per_node.get(node)).copied().unwrap_or(self.default)
    }
}

/// Resolves every nondeterministic quantity of a run: delay samples and
/// arbiter decisions.
pub trait DecisionSource {
    fn delay(&mut self, stream: Stream, iv: TimeInterval) -> Time;

    /// Picks one of `n >= 2` simultaneously enabled alternatives.
    fn choose(&mut self, stream: Stream, n: usize) -> usize;
}

/// Seeded source with one independent generator per [`Stream`].
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    sampling: Sampling,
    streams: BTreeMap<Stream, SimRng>,
}

impl RandomSource {
    pub fn new(seed: u64, sampling: Sampling) -> Self {
        Self { seed, sampling, streams: BTreeMap::new() }
    }

    fn rng(&mut self, stream: Stream) -> &mut SimRng {
        let seed = self.seed;
        self.streams.entry(stream).or_insert_with(|| SimRng::new(seed, stream))
    }
}

impl DecisionSource for RandomSource {
    fn delay(&mut self, stream: Stream, iv: TimeInterval) -> Time {
        let mode = self.sampling;
        sample_delay(iv, mode, self.rng(stream))
    }

    fn choose(&mut self, stream: Stream, n: usize) -> usize {
        self.rng(stream).below(n)
    }
}

/// Always takes the low endpoint and a fixed arbiter branch. Handy for
/// hand-checked traces.
#[derive(Debug, Clone, Copy)]
pub struct FixedSource {
    pub branch: usize,
}

impl DecisionSource for FixedSource {
    fn delay(&mut self, _stream: Stream, iv: TimeInterval) -> Time {
        iv.lo()
    }

    fn choose(&mut self, _stream: Stream, n: usize) -> usize {
        self.branch.min(n - 1)
    }
}
