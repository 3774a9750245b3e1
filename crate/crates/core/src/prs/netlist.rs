use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::hse::{tokenize, Cursor, Tok};
use crate::hse::{Guard, Pos};
use crate::timing::TimeInterval;

/// Default delay of every gate.
pub const DEFAULT_GATE_DELAY: TimeInterval = TimeInterval::new_const(1, 2);
/// Default arbiter delays: uncontested grant and contention resolution.
pub const DEFAULT_ARBITER_DELAY: TimeInterval = TimeInterval::new_const(1, 2);
pub const DEFAULT_RESOLUTION_DELAY: TimeInterval = TimeInterval::new_const(2, 6);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionRule {
    pub guard: Guard,
    pub target: String,
    pub up: bool,
    /// Marked `(*)`: the opposing rule is the complement of `guard`.
    pub combinational: bool,
    pub delay: TimeInterval,
}

impl ProductionRule {
    /// The opposing rule a combinational rule implies.
    pub fn complement(&self) -> Option<ProductionRule> {
        self.combinational.then(|| ProductionRule {
            guard: self.guard.clone().not(),
            target: self.target.clone(),
            up: !self.up,
            combinational: false,
            delay: self.delay,
        })
    }
}

impl fmt::Display for ProductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}{}", self.guard, self.target, if self.up { '+' } else { '-' })?;
        if self.combinational {
            f.write_str(" (*)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbiterInstance {
    pub in1: String,
    pub in2: String,
    pub out1: String,
    pub out2: String,
    pub delay: TimeInterval,
    pub resolution_delay: TimeInterval,
}

impl fmt::Display for ArbiterInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arbiter({}, {}) -> ({}, {})", self.in1, self.in2, self.out1, self.out2)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    /// Written rules; implied complements are not stored.
    pub rules: Vec<ProductionRule>,
    pub arbiters: Vec<ArbiterInstance>,
    /// Nodes no rule or arbiter drives.
    pub inputs: BTreeSet<String>,
    /// Driven channel wires.
    pub outputs: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrsError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("node `{0}` is driven by both an arbiter and production rules")]
    DriverConflict(String),
    #[error("node `{0}` is driven by more than one arbiter output")]
    DuplicateArbiterOutput(String),
    #[error("node `{0}` has more than one {1} rule")]
    DuplicateRule(String, &'static str),
    #[error("arbiter output `{0}` is never read and is not a channel wire")]
    Dangling(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// `C1.a` is a channel wire; `_C1.a`, its inverted internal copy, is not.
pub fn is_channel_wire(node: &str) -> bool {
    node.contains('.') && !node.starts_with('_')
}

impl From<(Pos, String)> for PrsError {
    fn from((pos, msg): (Pos, String)) -> Self {
        PrsError::Syntax { pos, msg }
    }
}

impl Netlist {
    /// Written rules plus the complements of combinational ones.
    pub fn all_rules(&self) -> Vec<ProductionRule> {
        let mut out = Vec::with_capacity(self.rules.len() * 2);
        for r in &self.rules {
            out.push(r.clone());
            out.extend(r.complement());
        }
        out
    }

    pub fn combinational_count(&self) -> usize {
        self.rules.iter().filter(|r| r.combinational).count()
    }

    pub fn nodes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            out.insert(r.target.clone());
            let mut s = BTreeSet::new();
            r.guard.collect_nodes(&mut s);
            out.extend(s.into_iter().map(str::to_string));
        }
        for a in &self.arbiters {
            out.extend([a.in1.clone(), a.in2.clone(), a.out1.clone(), a.out2.clone()]);
        }
        out
    }

    /// Sets the delay of every rule driving `node` (and of arbiters whose
    /// output it is).
    pub fn set_delay(&mut self, node: &str, delay: TimeInterval) -> Result<(), PrsError> {
        let mut found = false;
        for r in self.rules.iter_mut().filter(|r| r.target == node) {
            r.delay = delay;
            found = true;
        }
        for a in self.arbiters.iter_mut().filter(|a| a.out1 == node || a.out2 == node) {
            a.delay = delay;
            found = true;
        }
        if found {
            Ok(())
        } else {
            Err(PrsError::UnknownNode(node.to_string()))
        }
    }

    /// Delay of the gate driving `node`.
    pub fn delay_of(&self, node: &str) -> Option<TimeInterval> {
        self.rules.iter().find(|r| r.target == node).map(|r| r.delay)
    }

    /// Removes every rule driving `node`.
    pub fn remove_rules(&mut self, node: &str) {
        self.rules.retain(|r| r.target != node);
        self.classify();
    }

    fn classify(&mut self) {
        let driven: BTreeSet<&str> = self
            .rules
            .iter()
            .map(|r| r.target.as_str())
            .chain(self.arbiters.iter().flat_map(|a| [a.out1.as_str(), a.out2.as_str()]))
            .collect();
        let all = self.nodes();
        self.inputs = all.iter().filter(|n| !driven.contains(n.as_str())).cloned().collect();
        self.outputs = driven.iter().filter(|n| is_channel_wire(n)).map(|n| n.to_string()).collect();
    }

    fn validate(&self) -> Result<(), PrsError> {
        let mut arb_out = BTreeSet::new();
        for a in &self.arbiters {
            for o in [&a.out1, &a.out2] {
                if !arb_out.insert(o.as_str()) {
                    return Err(PrsError::DuplicateArbiterOutput(o.clone()));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for r in self.all_rules() {
            if arb_out.contains(r.target.as_str()) {
                return Err(PrsError::DriverConflict(r.target));
            }
            if !seen.insert((r.target.clone(), r.up)) {
                return Err(PrsError::DuplicateRule(r.target, if r.up { "pull-up" } else { "pull-down" }));
            }
        }
        let mut read = BTreeSet::new();
        for r in &self.rules {
            r.guard.collect_nodes(&mut read);
        }
        for o in arb_out {
            if !read.contains(o) && !is_channel_wire(o) {
                return Err(PrsError::Dangling(o.to_string()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.arbiters {
            writeln!(f, "{a}")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Parses production rules `guard -> node+` / `guard -> node-` (optionally
/// followed by `(*)`) and `arbiter(in1, in2) -> (out1, out2)` declarations.
pub fn parse_prs(text: &str) -> Result<Netlist, PrsError> {
    let mut cur = Cursor::new(tokenize(text)?);
    let mut net = Netlist::default();
    while cur.peek() != &Tok::Eof {
        let is_arbiter = matches!(cur.peek(), Tok::Ident(s) if s == "arbiter") && cur.peek_at(1) == &Tok::LParen;
        if is_arbiter {
            cur.bump();
            cur.expect(&Tok::LParen)?;
            let (in1, _) = cur.ident()?;
            cur.expect(&Tok::Comma)?;
            let (in2, _) = cur.ident()?;
            cur.expect(&Tok::RParen)?;
            cur.expect(&Tok::Arrow)?;
            cur.expect(&Tok::LParen)?;
            let (out1, _) = cur.ident()?;
            cur.expect(&Tok::Comma)?;
            let (out2, _) = cur.ident()?;
            cur.expect(&Tok::RParen)?;
            net.arbiters.push(ArbiterInstance {
                in1,
                in2,
                out1,
                out2,
                delay: DEFAULT_ARBITER_DELAY,
                resolution_delay: DEFAULT_RESOLUTION_DELAY,
            });
            continue;
        }
        let guard = cur.guard(&mut |_, _| Ok(()))?;
        cur.expect(&Tok::Arrow)?;
        let (target, _) = cur.ident()?;
        let pos = cur.pos();
        let up = match cur.bump().tok {
            Tok::Plus => true,
            Tok::Minus => false,
            other => return Err(PrsError::Syntax { pos, msg: format!("expected `+` or `-`, found {other}") }),
        };
        let combinational = cur.peek() == &Tok::LParen && cur.peek_at(1) == &Tok::Star;
        if combinational {
            cur.bump();
            cur.bump();
            cur.expect(&Tok::RParen)?;
        }
        net.rules.push(ProductionRule { guard, target, up, combinational, delay: DEFAULT_GATE_DELAY });
    }
    net.validate()?;
    net.classify();
    Ok(net)
}

/// The single-arbiter asymmetric server netlist.
pub fn builtin_asym_netlist() -> Netlist {
    parse_prs(builtin_asym_source()).expect("built-in netlist parses")
}

pub fn builtin_asym_source() -> &'static str {
    include_str!("../../assets/asym.prs")
}

/// Node-to-index map used by the simulator and analyses.
pub(crate) fn index(net: &Netlist) -> BTreeMap<String, usize> {
    net.nodes().into_iter().enumerate().map(|(i, n)| (n, i)).collect()
}
