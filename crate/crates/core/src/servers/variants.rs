use std::fmt;
use std::str::FromStr;

use crate::hse::{parse_hse, ProcessSet};
use crate::sim::DelayPolicy;
use crate::timing::TimeInterval;

use super::client::ChannelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServerKind {
    Baseline,
    AsymThreeArbiter,
    AsymSingleArbiter,
    Symmetric,
    NaiveEarlyGrant,
    /// Intermediate asymmetric form: a completer process plus nested arbitrations.
    #[doc(hidden)]
    AsymTwoProcess,
    /// Intermediate asymmetric form: a single 4-way arbitrated selection.
    #[doc(hidden)]
    AsymFourWay,
    /// Symmetric server with its 6-way arbitrated selection undecomposed.
    #[doc(hidden)]
    SymmetricSixWay,
}

impl ServerKind {
    pub const PUBLIC: [ServerKind; 5] = [
        ServerKind::Baseline,
        ServerKind::AsymThreeArbiter,
        ServerKind::AsymSingleArbiter,
        ServerKind::Symmetric,
        ServerKind::NaiveEarlyGrant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ServerKind::Baseline => "baseline",
            ServerKind::AsymThreeArbiter => "asym3",
            ServerKind::AsymSingleArbiter => "asym1",
            ServerKind::Symmetric => "symmetric",
            ServerKind::NaiveEarlyGrant => "naive",
            ServerKind::AsymTwoProcess => "asym2proc",
            ServerKind::AsymFourWay => "asym4way",
            ServerKind::SymmetricSixWay => "sym6way",
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, ServerKind::Symmetric | ServerKind::SymmetricSixWay)
    }

    /// Client channels served by this variant.
    pub fn channels(self) -> [ChannelSpec; 2] {
        if self.is_symmetric() {
            [ChannelSpec::early_actual("C1"), ChannelSpec::early_actual("C2")]
        } else {
            [ChannelSpec::early_actual("C1"), ChannelSpec::simple("C2")]
        }
    }
}

impl fmt::Display for ServerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown server variant `{0}` (expected baseline, asym3, asym1, symmetric or naive)")]
pub struct UnknownServer(pub String);

impl FromStr for ServerKind {
    type Err = UnknownServer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ServerKind::PUBLIC.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownServer(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ServerVariant {
    pub kind: ServerKind,
    pub opportunism_enabled: bool,
}

impl ServerVariant {
    pub fn new(kind: ServerKind, opportunism_enabled: bool) -> Self {
        Self { kind, opportunism_enabled }
    }
}

impl fmt::Display for ServerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.opportunism_enabled {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}/no-opportunism", self.kind)
        }
    }
}

const ASYM_CHANNELS: &str = "chan C1(r_e, r_a, a); chan C2(r, a);";
const SYM_CHANNELS: &str = "chan C1(r_e, r_a, a); chan C2(r_e, r_a, a);";

fn source(kind: ServerKind, opportunism: bool) -> String {
    // Early-release condition for C1 (and C2 in the symmetric server).
    // Without opportunism it also demands the actual release.
    let e1 = if opportunism { "~C1.r_e" } else { "(~C1.r_e & ~C1.r_a)" };
    let e2 = if opportunism { "~C2.r_e" } else { "(~C2.r_e & ~C2.r_a)" };
    let body = match kind {
        ServerKind::Baseline => "*[[| C1.r_e & C1.r_a -> C1.a+; [~C1.r_e & ~C1.r_a]; C1.a- \
             [] C2.r -> C2.a+; [~C2.r]; C2.a- |]]"
            .to_string(),
        ServerKind::NaiveEarlyGrant => format!(
            "*[[| C1.r_e & C1.r_a -> C1.a+; [{e1}];
                  [| C2.r -> C2.a+; [~C1.r_a]; C1.a-; [~C2.r]; C2.a-
                  [] ~C1.r_a -> C1.a- |]
               [] C2.r -> C2.a+; [~C2.r]; C2.a- |]]"
        ),
        ServerKind::AsymThreeArbiter => format!(
            "x=0;
             *[[| C1.r_e & C1.r_a -> C1.a+ [] x | C2.r -> C2.a+ |];
               [ ~C2.a -> [| {e1} -> [| ~C1.r_a -> C1.a- [] C2.r -> C2.a+; x+; [~C1.r_a]; C1.a- |]
                          [] C2.r -> [~C1.r_a]; C1.a- |]
               [] ~C1.a -> [~C2.r]; C2.a-; x-
               ]]"
        ),
        ServerKind::AsymTwoProcess => format!(
            "g=0;
             *[[g & ~C1.r_a & ~C1.r_e]; C1.a-; g-]
             ||
             *[[| ~g & C1.r_e -> [C1.r_a]; C1.a+; [| C2.r -> g+; [~g] [] {e1} -> g+ |]
               [] C2.r -> C2.a+; [~g & ~C2.r]; C2.a- |]]"
        ),
        ServerKind::AsymFourWay => format!(
            "g=0; f=0;
             *[[g & ~C1.r_a & ~C1.r_e]; C1.a-; g-]
             ||
             *[[| ~f & ~g & C1.r_e -> [C1.r_a]; C1.a+; f+
               [] ~f & C2.r -> C2.a+; [~g & ~C2.r]; C2.a-
               [] f & C2.r -> g+; [~g]; f-
               [] f & {e1} -> g+; f- |]]"
        ),
        ServerKind::AsymSingleArbiter => {
            let g = if opportunism {
                "~g & (f ^ C1.r_e)".to_string()
            } else {
                "~g & (f ^ C1.r_e) & (~f | ~C1.r_a)".to_string()
            };
            format!(
                "g=0; f=0;
                 G := {g};
                 *[[g & ~C1.r_a & ~C1.r_e]; C1.a-; g-]
                 ||
                 *[[| G -> v+; [~G]; v- [] C2.r -> u+; [~C2.r]; u- |]]
                 ||
                 *[[ ~f & v -> [C1.r_a]; C1.a+; f+
                   [] ~f & u -> C2.a+; [~g & ~C2.r]; C2.a-
                   [] f & u -> g+; [~g]; f-
                   [] f & v -> g+; f- ]]"
            )
        }
        ServerKind::SymmetricSixWay => format!(
            "g1=0; g2=0; f1=0; f2=0;
             *[[g1 & ~C1.r_a & ~C1.r_e]; C1.a-; g1-]
             ||
             *[[g2 & ~C2.r_a & ~C2.r_e]; C2.a-; g2-]
             ||
             *[[| ~f1 & ~f2 & ~g1 & C1.r_e -> [C1.r_a]; C1.a+; f1+
               [] ~f1 & ~f2 & ~g2 & C2.r_e -> [C2.r_a]; C2.a+; f2+
               [] f1 & ~f2 & ~g2 & C2.r_a & C2.r_e -> g1+; [~g1]; f1-
               [] f1 & ~f2 & {e1} -> g1+; f1-
               [] ~f1 & f2 & ~g1 & C1.r_a & C1.r_e -> g2+; [~g2]; f2-
               [] ~f1 & f2 & {e2} -> g2+; f2- |]]"
        ),
        ServerKind::Symmetric => format!(
            "g1=0; g2=0; f1=0; f2=0;
             GA := ~g1 & (~f1 & ~f2 & C1.r_e | f1 & {e1} | f2 & C1.r_a & C1.r_e);
             GB := ~g2 & (~f1 & ~f2 & C2.r_e | f2 & {e2} | f1 & C2.r_a & C2.r_e);
             *[[g1 & ~C1.r_a & ~C1.r_e]; C1.a-; g1-]
             ||
             *[[g2 & ~C2.r_a & ~C2.r_e]; C2.a-; g2-]
             ||
             *[[| GA -> v+; [~GA]; v- [] GB -> u+; [~GB]; u- |]]
             ||
             *[[ ~f1 & ~f2 & v -> [C1.r_a]; C1.a+; f1+
               [] ~f1 & ~f2 & u -> [C2.r_a]; C2.a+; f2+
               [] f1 & u -> g1+; [~g1]; f1-
               [] f1 & v -> g1+; f1-
               [] f2 & v -> g2+; [~g2]; f2-
               [] f2 & u -> g2+; f2- ]]"
        ),
    };
    let chans = if kind.is_symmetric() { SYM_CHANNELS } else { ASYM_CHANNELS };
    format!("{chans}\n{body}")
}

/// Returns the server's process set.
pub fn build_server(variant: ServerVariant) -> ProcessSet {
    let text = source(variant.kind, variant.opportunism_enabled);
    parse_hse(&text).unwrap_or_else(|e| panic!("built-in server {variant} does not parse: {e}"))
}

/// Delay policy under which the servers behave as intended: internal state
/// variables and arbiter outputs switch instantly, acknowledges take `ack`.
pub fn server_delays(ps: &ProcessSet, ack: TimeInterval) -> DelayPolicy {
    let mut policy = DelayPolicy { default: ack, ..DelayPolicy::default() };
    for node in ps.nodes() {
        if !node.contains('.') {
            policy.set(node, TimeInterval::ZERO);
        }
    }
    policy
}
