use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{Arm, ChannelDecl, Guard, ProcessSet, Statement};
use super::lexer::{tokenize, Cursor, Pos, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: `{name}` is not a wire of channel `{channel}`")]
    UndeclaredWire { pos: Pos, name: String, channel: String },
    #[error("{pos}: empty selection")]
    EmptySelection { pos: Pos },
}

impl From<(Pos, String)> for ParseError {
    fn from((pos, msg): (Pos, String)) -> Self {
        ParseError::Syntax { pos, msg }
    }
}

struct Parser {
    cur: Cursor,
    channels: BTreeMap<String, Vec<String>>,
    defined: Vec<String>,
}

fn check_node(
    channels: &BTreeMap<String, Vec<String>>,
    defined: &[String],
    name: &str,
    pos: Pos,
) -> Result<(), ParseError> {
    if defined.iter().any(|d| d == name) {
        return Ok(());
    }
    if let Some((chan, wire)) = name.split_once('.') {
        if let Some(wires) = channels.get(chan) {
            if !wires.iter().any(|w| w == wire) {
                return Err(ParseError::UndeclaredWire { pos, name: name.to_string(), channel: chan.to_string() });
            }
        }
    }
    Ok(())
}

impl Parser {
    fn check_node(&self, name: &str, pos: Pos) -> Result<(), ParseError> {
        check_node(&self.channels, &self.defined, name, pos)
    }

    fn guard(&mut self) -> Result<Guard, ParseError> {
        let mut wire_err = None;
        let (channels, defined) = (&self.channels, &self.defined);
        let mut check = |name: &str, pos: Pos| -> Result<(), (Pos, String)> {
            check_node(channels, defined, name, pos).map_err(|e| {
                wire_err = Some(e);
                (pos, String::new())
            })
        };
        match self.cur.guard(&mut check) {
            Ok(g) => Ok(g),
            Err(e) => Err(wire_err.unwrap_or_else(|| e.into())),
        }
    }

    fn file(&mut self) -> Result<ProcessSet, ParseError> {
        let mut ps = ProcessSet::default();
        loop {
            match (self.cur.peek().clone(), self.cur.peek_at(1).clone()) {
                (Tok::Ident(kw), Tok::Ident(_)) if kw == "chan" => {
                    self.cur.bump();
                    let (name, _) = self.cur.ident()?;
                    self.cur.expect(&Tok::LParen)?;
                    let mut wires = vec![self.cur.ident()?.0];
                    while self.cur.eat(&Tok::Comma) {
                        wires.push(self.cur.ident()?.0);
                    }
                    self.cur.expect(&Tok::RParen)?;
                    self.cur.expect(&Tok::Semi)?;
                    self.channels.insert(name.clone(), wires.clone());
                    ps.channels.push(ChannelDecl { name, wires });
                }
                (Tok::Ident(name), Tok::Eq) => {
                    let pos = self.cur.pos();
                    self.check_node(&name, pos)?;
                    self.cur.bump();
                    self.cur.bump();
                    let vpos = self.cur.pos();
                    let value = match self.cur.bump().tok {
                        Tok::Num(0) => false,
                        Tok::Num(1) => true,
                        other => {
                            return Err(ParseError::Syntax {
                                pos: vpos,
                                msg: format!("expected 0 or 1, found {other}"),
                            })
                        }
                    };
                    self.cur.expect(&Tok::Semi)?;
                    ps.init.push((name, value));
                }
                (Tok::Ident(name), Tok::Define) => {
                    self.cur.bump();
                    self.cur.bump();
                    let g = self.guard()?;
                    self.cur.expect(&Tok::Semi)?;
                    self.defined.push(name.clone());
                    ps.defs.push((name, g));
                }
                _ => break,
            }
        }
        let body = self.par()?;
        if self.cur.peek() != &Tok::Eof {
            let pos = self.cur.pos();
            return Err(ParseError::Syntax { pos, msg: format!("unexpected {}", self.cur.peek()) });
        }
        ps.processes = match body {
            Statement::Par(items) => items,
            other => vec![other],
        };
        Ok(ps)
    }

    /// `seq ('||' seq)*`
    fn par(&mut self) -> Result<Statement, ParseError> {
        let mut items = vec![self.seq()?];
        while self.cur.eat(&Tok::ParBar) {
            items.push(self.seq()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Statement::Par(items) })
    }

    /// `stmt (';' stmt)* [';']`
    fn seq(&mut self) -> Result<Statement, ParseError> {
        let mut items = vec![self.stmt()?];
        while self.cur.eat(&Tok::Semi) {
            if matches!(
                self.cur.peek(),
                Tok::RBracket | Tok::NondetClose | Tok::Box | Tok::ParBar | Tok::RParen | Tok::Eof
            ) {
                break;
            }
            items.push(self.stmt()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Statement::Seq(items) })
    }

    fn arms(&mut self, first: Guard) -> Result<Vec<Arm>, ParseError> {
        let mut arms = Vec::new();
        let mut guard = first;
        loop {
            self.cur.expect(&Tok::Arrow)?;
            let body = self.par()?;
            arms.push(Arm { guard, body });
            if !self.cur.eat(&Tok::Box) {
                return Ok(arms);
            }
            guard = self.guard()?;
        }
    }

    fn stmt(&mut self) -> Result<Statement, ParseError> {
        let pos = self.cur.pos();
        match self.cur.peek().clone() {
            Tok::Ident(s) if s == "skip" => {
                self.cur.bump();
                Ok(Statement::Skip)
            }
            Tok::Ident(name) => {
                self.check_node(&name, pos)?;
                self.cur.bump();
                let value = match self.cur.bump().tok {
                    Tok::Plus => true,
                    Tok::Minus => false,
                    other => {
                        return Err(ParseError::Syntax {
                            pos,
                            msg: format!("expected `+` or `-` after `{name}`, found {other}"),
                        })
                    }
                };
                Ok(Statement::Assign { node: name, value })
            }
            Tok::LoopOpen => {
                self.cur.bump();
                if self.cur.peek() == &Tok::RBracket {
                    return Err(ParseError::Syntax { pos, msg: "empty repetition".into() });
                }
                let body = self.par()?;
                self.cur.expect(&Tok::RBracket)?;
                Ok(Statement::looped(body))
            }
            Tok::LBracket => {
                self.cur.bump();
                let g = self.guard()?;
                if self.cur.eat(&Tok::RBracket) {
                    return Ok(Statement::Wait(g));
                }
                let arms = self.arms(g)?;
                self.cur.expect(&Tok::RBracket)?;
                Ok(Statement::DetSel(arms))
            }
            Tok::NondetOpen => {
                self.cur.bump();
                if self.cur.peek() == &Tok::NondetClose {
                    return Err(ParseError::EmptySelection { pos });
                }
                let g = self.guard()?;
                let arms = self.arms(g)?;
                self.cur.expect(&Tok::NondetClose)?;
                Ok(Statement::NondetSel(arms))
            }
            Tok::Box => Err(ParseError::EmptySelection { pos }),
            Tok::LParen => {
                self.cur.bump();
                let s = self.par()?;
                self.cur.expect(&Tok::RParen)?;
                Ok(s)
            }
            other => Err(ParseError::Syntax { pos, msg: format!("expected statement, found {other}") }),
        }
    }
}

/// Parses handshaking-expansion source text.
pub fn parse_hse(text: &str) -> Result<ProcessSet, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { cur: Cursor::new(toks), channels: BTreeMap::new(), defined: Vec::new() };
    p.file()
}

/// Parses a single guard expression (no channel checking).
pub fn parse_guard(text: &str) -> Result<Guard, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { cur: Cursor::new(toks), channels: BTreeMap::new(), defined: Vec::new() };
    let g = p.guard()?;
    p.cur.expect(&Tok::Eof)?;
    Ok(g)
}
