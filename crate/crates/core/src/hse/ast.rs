use std::collections::BTreeSet;

/// Boolean expression over node values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    Const(bool),
    Node(String),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Xor(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn node(name: impl Into<String>) -> Guard {
        Guard::Node(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Guard {
        Guard::Not(Box::new(self))
    }

    pub fn and(self, rhs: Guard) -> Guard {
        Guard::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Guard) -> Guard {
        Guard::Or(Box::new(self), Box::new(rhs))
    }

    pub fn xor(self, rhs: Guard) -> Guard {
        Guard::Xor(Box::new(self), Box::new(rhs))
    }

    pub fn eval(&self, value: &impl Fn(&str) -> bool) -> bool {
        match self {
            Guard::Const(b) => *b,
            Guard::Node(n) => value(n),
            Guard::Not(g) => !g.eval(value),
            Guard::And(a, b) => a.eval(value) && b.eval(value),
            Guard::Xor(a, b) => a.eval(value) ^ b.eval(value),
            Guard::Or(a, b) => a.eval(value) || b.eval(value),
        }
    }

    pub fn collect_nodes<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Guard::Const(_) => {}
            Guard::Node(n) => {
                out.insert(n);
            }
            Guard::Not(g) => g.collect_nodes(out),
            Guard::And(a, b) | Guard::Xor(a, b) | Guard::Or(a, b) => {
                a.collect_nodes(out);
                b.collect_nodes(out);
            }
        }
    }

    /// Literals `(node, polarity)` appearing in the expression, where a
    /// literal under an odd number of negations has polarity `false`.
    /// Nodes under `^` appear with both polarities.
    pub fn literals(&self) -> BTreeSet<(String, bool)> {
        fn walk(g: &Guard, pol: bool, out: &mut BTreeSet<(String, bool)>) {
            match g {
                Guard::Const(_) => {}
                Guard::Node(n) => {
                    out.insert((n.clone(), pol));
                }
                Guard::Not(g) => walk(g, !pol, out),
                Guard::And(a, b) | Guard::Or(a, b) => {
                    walk(a, pol, out);
                    walk(b, pol, out);
                }
                Guard::Xor(a, b) => {
                    for p in [true, false] {
                        walk(a, p, out);
                        walk(b, p, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(self, true, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arm {
    pub guard: Guard,
    pub body: Statement,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Statement {
    Skip,
    Assign {
        node: String,
        value: bool,
    },
    /// `[G]`: wait until the guard holds.
    Wait(Guard),
    Seq(Vec<Statement>),
    Par(Vec<Statement>),
    /// `[G1 -> S1 [] ...]`: guards must be stable and mutually exclusive.
    DetSel(Vec<Arm>),
    /// `[| G1 -> S1 [] ... |]`: arbitrated choice.
    NondetSel(Vec<Arm>),
    /// `*[S]`
    Loop(Box<Statement>),
}

impl Statement {
    pub fn assign(node: impl Into<String>, value: bool) -> Statement {
        Statement::Assign { node: node.into(), value }
    }

    pub fn up(node: impl Into<String>) -> Statement {
        Self::assign(node, true)
    }

    pub fn down(node: impl Into<String>) -> Statement {
        Self::assign(node, false)
    }

    pub fn seq(items: impl IntoIterator<Item = Statement>) -> Statement {
        let mut flat = Vec::new();
        for s in items {
            match s {
                Statement::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Statement::Seq(flat)
        }
    }

    pub fn looped(body: Statement) -> Statement {
        Statement::Loop(Box::new(body))
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Statement)) {
        f(self);
        match self {
            Statement::Seq(v) | Statement::Par(v) => v.iter().for_each(|s| s.walk(f)),
            Statement::DetSel(arms) | Statement::NondetSel(arms) => arms.iter().for_each(|a| a.body.walk(f)),
            Statement::Loop(b) => b.walk(f),
            _ => {}
        }
    }

    pub fn collect_nodes<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        self.walk(&mut |s| match s {
            Statement::Assign { node, .. } => {
                out.insert(node.as_str());
            }
            Statement::Wait(g) => g.collect_nodes(out),
            Statement::DetSel(arms) | Statement::NondetSel(arms) => {
                arms.iter().for_each(|a| a.guard.collect_nodes(out))
            }
            _ => {}
        });
    }
}

/// Wire set of one channel, e.g. `chan C1(r_e, r_a, a)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelDecl {
    pub name: String,
    pub wires: Vec<String>,
}

/// Top-level processes composed in parallel, plus declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessSet {
    pub channels: Vec<ChannelDecl>,
    /// Declared initial values; undeclared nodes start low.
    pub init: Vec<(String, bool)>,
    /// Zero-delay combinational definitions `name := guard`.
    pub defs: Vec<(String, Guard)>,
    pub processes: Vec<Statement>,
}

impl ProcessSet {
    pub fn nodes(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for (n, _) in &self.init {
            out.insert(n.as_str());
        }
        for (n, g) in &self.defs {
            out.insert(n.as_str());
            g.collect_nodes(&mut out);
        }
        for p in &self.processes {
            p.collect_nodes(&mut out);
        }
        out
    }

    pub fn initial_value(&self, node: &str) -> bool {
        self.init.iter().find(|(n, _)| n == node).is_some_and(|(_, v)| *v)
    }

    pub fn count(&self, pred: impl Fn(&Statement) -> bool) -> usize {
        let mut n = 0;
        for p in &self.processes {
            p.walk(&mut |s| {
                if pred(s) {
                    n += 1
                }
            });
        }
        n
    }

    pub fn nondet_selections(&self) -> usize {
        self.count(|s| matches!(s, Statement::NondetSel(_)))
    }

    pub fn det_selections(&self) -> usize {
        self.count(|s| matches!(s, Statement::DetSel(_)))
    }
}
