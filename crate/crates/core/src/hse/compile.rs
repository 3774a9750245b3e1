//! Lowers a [`ProcessSet`] to a flat instruction graph so interpreter state
//! is a handful of program counters.

use std::collections::HashMap;

use super::ast::{Guard, ProcessSet, Statement};

pub type NodeId = usize;
pub type Pc = usize;

#[derive(Debug, Clone)]
pub enum CGuard {
    Const(bool),
    Node(NodeId),
    Not(Box<CGuard>),
    And(Box<CGuard>, Box<CGuard>),
    Xor(Box<CGuard>, Box<CGuard>),
    Or(Box<CGuard>, Box<CGuard>),
}

impl CGuard {
    pub fn eval(&self, v: &[bool]) -> bool {
        match self {
            CGuard::Const(b) => *b,
            CGuard::Node(n) => v[*n],
            CGuard::Not(g) => !g.eval(v),
            CGuard::And(a, b) => a.eval(v) && b.eval(v),
            CGuard::Xor(a, b) => a.eval(v) ^ b.eval(v),
            CGuard::Or(a, b) => a.eval(v) || b.eval(v),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Instr {
    Assign { node: NodeId, value: bool, next: Pc },
    Wait { guard: CGuard, next: Pc },
    Select { det: bool, arms: Vec<(CGuard, Pc)> },
    Fork { children: Vec<Pc>, join: Pc },
    Join,
    Jump(Pc),
    Halt,
}

/// Interned node names.
#[derive(Debug, Clone, Default)]
pub struct NodeTable {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeTable {
    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Program {
    pub code: Vec<Instr>,
    /// Entry pc of each top-level process.
    pub entries: Vec<Pc>,
    pub defs: Vec<(NodeId, CGuard)>,
    pub nodes: NodeTable,
    pub init: Vec<bool>,
}

struct Compiler {
    code: Vec<Instr>,
    nodes: NodeTable,
}

impl Compiler {
    fn guard(&mut self, g: &Guard) -> CGuard {
        match g {
            Guard::Const(b) => CGuard::Const(*b),
            Guard::Node(n) => CGuard::Node(self.nodes.intern(n)),
            Guard::Not(g) => CGuard::Not(Box::new(self.guard(g))),
            Guard::And(a, b) => CGuard::And(Box::new(self.guard(a)), Box::new(self.guard(b))),
            Guard::Xor(a, b) => CGuard::Xor(Box::new(self.guard(a)), Box::new(self.guard(b))),
            Guard::Or(a, b) => CGuard::Or(Box::new(self.guard(a)), Box::new(self.guard(b))),
        }
    }

    fn emit(&mut self, i: Instr) -> Pc {
        self.code.push(i);
        self.code.len() - 1
    }

    /// Compiles `s` so that it continues at `next`; returns its entry.
    fn stmt(&mut self, s: &Statement, next: Pc) -> Pc {
        match s {
            Statement::Skip => next,
            Statement::Assign { node, value } => {
                let node = self.nodes.intern(node);
                self.emit(Instr::Assign { node, value: *value, next })
            }
            Statement::Wait(g) => {
                let guard = self.guard(g);
                self.emit(Instr::Wait { guard, next })
            }
            Statement::Seq(items) => items.iter().rev().fold(next, |k, s| self.stmt(s, k)),
            Statement::Par(items) => {
                let join = self.emit(Instr::Join);
                let children = items.iter().map(|s| self.stmt(s, join)).collect();
                self.emit(Instr::Fork { children, join: next })
            }
            Statement::DetSel(arms) | Statement::NondetSel(arms) => {
                let det = matches!(s, Statement::DetSel(_));
                let arms = arms
                    .iter()
                    .map(|a| {
                        let g = self.guard(&a.guard);
                        (g, self.stmt(&a.body, next))
                    })
                    .collect();
                self.emit(Instr::Select { det, arms })
            }
            Statement::Loop(body) => {
                let head = self.emit(Instr::Jump(usize::MAX));
                let entry = self.stmt(body, head);
                self.code[head] = Instr::Jump(entry);
                head
            }
        }
    }
}

/// Compiles `ps`, interning `extra` node names (environment wires) first
/// after the program's own nodes.
pub fn compile(ps: &ProcessSet, extra: &[String]) -> Program {
    let mut c = Compiler { code: Vec::new(), nodes: NodeTable::default() };
    for n in ps.nodes() {
        c.nodes.intern(n);
    }
    for n in extra {
        c.nodes.intern(n);
    }
    let halt = c.emit(Instr::Halt);
    let entries = ps.processes.iter().map(|p| c.stmt(p, halt)).collect();
    let defs = ps
        .defs
        .iter()
        .map(|(n, g)| {
            let id = c.nodes.intern(n);
            (id, c.guard(g))
        })
        .collect();
    let mut init = vec![false; c.nodes.len()];
    for (n, v) in &ps.init {
        init[c.nodes.intern(n)] = *v;
    }
    init.resize(c.nodes.len(), false);
    Program { code: c.code, entries, defs, nodes: c.nodes, init }
}
