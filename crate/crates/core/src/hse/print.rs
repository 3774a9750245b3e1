use std::fmt;

use super::ast::{Arm, Guard, ProcessSet, Statement};

fn prec(g: &Guard) -> u8 {
    match g {
        Guard::Or(..) => 1,
        Guard::Xor(..) => 2,
        Guard::And(..) => 3,
        Guard::Not(_) => 4,
        Guard::Const(_) | Guard::Node(_) => 5,
    }
}

fn write_guard(f: &mut fmt::Formatter<'_>, g: &Guard, min: u8) -> fmt::Result {
    let p = prec(g);
    if p < min {
        f.write_str("(")?;
    }
    match g {
        Guard::Const(b) => write!(f, "{b}")?,
        Guard::Node(n) => f.write_str(n)?,
        Guard::Not(inner) => {
            f.write_str("~")?;
            write_guard(f, inner, 4)?;
        }
        Guard::And(a, b) | Guard::Xor(a, b) | Guard::Or(a, b) => {
            let op = match g {
                Guard::And(..) => " & ",
                Guard::Xor(..) => " ^ ",
                _ => " | ",
            };
            write_guard(f, a, p)?;
            f.write_str(op)?;
            write_guard(f, b, p + 1)?;
        }
    }
    if p < min {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_guard(f, self, 0)
    }
}

fn write_arms(f: &mut fmt::Formatter<'_>, arms: &[Arm]) -> fmt::Result {
    for (i, arm) in arms.iter().enumerate() {
        if i > 0 {
            f.write_str(" [] ")?;
        }
        write!(f, "{} -> {}", arm.guard, arm.body)?;
    }
    Ok(())
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Skip => f.write_str("skip"),
            Statement::Assign { node, value } => write!(f, "{node}{}", if *value { '+' } else { '-' }),
            Statement::Wait(g) => write!(f, "[{g}]"),
            Statement::Seq(items) => {
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    match s {
                        Statement::Seq(_) | Statement::Par(_) => write!(f, "({s})")?,
                        _ => write!(f, "{s}")?,
                    }
                }
                Ok(())
            }
            Statement::Par(items) => {
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    match s {
                        Statement::Par(_) => write!(f, "({s})")?,
                        _ => write!(f, "{s}")?,
                    }
                }
                Ok(())
            }
            Statement::DetSel(arms) => {
                f.write_str("[")?;
                write_arms(f, arms)?;
                f.write_str("]")
            }
            Statement::NondetSel(arms) => {
                f.write_str("[| ")?;
                write_arms(f, arms)?;
                f.write_str(" |]")
            }
            Statement::Loop(body) => write!(f, "*[{body}]"),
        }
    }
}

impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.channels {
            writeln!(f, "chan {}({});", c.name, c.wires.join(", "))?;
        }
        for (n, v) in &self.init {
            writeln!(f, "{n}={};", u8::from(*v))?;
        }
        for (n, g) in &self.defs {
            writeln!(f, "{n} := {g};")?;
        }
        for (i, p) in self.processes.iter().enumerate() {
            if i > 0 {
                writeln!(f, "||")?;
            }
            match p {
                Statement::Par(_) => writeln!(f, "({p})")?,
                _ => writeln!(f, "{p}")?,
            }
        }
        Ok(())
    }
}
