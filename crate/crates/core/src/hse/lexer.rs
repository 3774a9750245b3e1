//! Tokenizer shared by the handshake and production-rule parsers.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(u64),
    /// `*[`
    LoopOpen,
    LBracket,
    RBracket,
    /// `[|`
    NondetOpen,
    /// `|]`
    NondetClose,
    /// `[]`
    Box,
    Arrow,
    Semi,
    ParBar,
    Bar,
    Amp,
    Caret,
    Tilde,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Eq,
    Define,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(n) => return write!(f, "`{n}`"),
            Tok::LoopOpen => "`*[`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::NondetOpen => "`[|`",
            Tok::NondetClose => "`|]`",
            Tok::Box => "`[]`",
            Tok::Arrow => "`->`",
            Tok::Semi => "`;`",
            Tok::ParBar => "`||`",
            Tok::Bar => "`|`",
            Tok::Amp => "`&`",
            Tok::Caret => "`^`",
            Tok::Tilde => "`~`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Eq => "`=`",
            Tok::Define => "`:=`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

/// Splits `src` into tokens. `#` starts a comment running to end of line.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, (Pos, String)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let peek = |i: usize| chars.get(i).copied();
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if is_ident_start(c) {
            let start = i;
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let s: String = chars[start..j].iter().collect();
            if s.ends_with('.') || s.contains("..") {
                return Err((pos, format!("malformed identifier `{s}`")));
            }
            (Tok::Ident(s), j - start)
        } else if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[start..j].iter().collect();
            let n = s.parse().map_err(|_| (pos, format!("number `{s}` out of range")))?;
            (Tok::Num(n), j - start)
        } else {
            match (c, peek(i + 1)) {
                ('*', Some('[')) => (Tok::LoopOpen, 2),
                ('[', Some('|')) => (Tok::NondetOpen, 2),
                ('[', Some(']')) => (Tok::Box, 2),
                ('|', Some(']')) => (Tok::NondetClose, 2),
                ('|', Some('|')) => (Tok::ParBar, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                (':', Some('=')) => (Tok::Define, 2),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                (';', _) => (Tok::Semi, 1),
                ('|', _) => (Tok::Bar, 1),
                ('&', _) => (Tok::Amp, 1),
                ('^', _) => (Tok::Caret, 1),
                ('~', _) => (Tok::Tilde, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (',', _) => (Tok::Comma, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('=', _) => (Tok::Eq, 1),
                _ => return Err((pos, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Spanned { tok, pos });
        i += len;
        col += len;
    }
    out.push(Spanned { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

/// Callback that validates a node name referenced in a guard.
pub(crate) type IdentCheck<'a> = dyn FnMut(&str, Pos) -> Result<(), (Pos, String)> + 'a;

/// Cursor over a token stream with guard-expression parsing shared by both
/// front ends.
pub(crate) struct Cursor {
    toks: Vec<Spanned>,
    at: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Spanned>) -> Self {
        Self { toks, at: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    pub fn bump(&mut self) -> Spanned {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Pos, (Pos, String)> {
        let pos = self.pos();
        if self.eat(tok) {
            Ok(pos)
        } else {
            Err((pos, format!("expected {tok}, found {}", self.peek())))
        }
    }

    pub fn ident(&mut self) -> Result<(String, Pos), (Pos, String)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            other => Err((pos, format!("expected identifier, found {other}"))),
        }
    }

    /// `or := xor ('|' xor)*`, `xor := and ('^' and)*`,
    /// `and := unary ('&' unary)*`, `unary := '~' unary | atom`.
    /// `on_ident` validates node references.
    pub fn guard(&mut self, on_ident: &mut IdentCheck<'_>) -> Result<super::ast::Guard, (Pos, String)> {
        let mut lhs = self.guard_xor(on_ident)?;
        while self.eat(&Tok::Bar) {
            let rhs = self.guard_xor(on_ident)?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn guard_xor(&mut self, on_ident: &mut IdentCheck<'_>) -> Result<super::ast::Guard, (Pos, String)> {
        let mut lhs = self.guard_and(on_ident)?;
        while self.eat(&Tok::Caret) {
            let rhs = self.guard_and(on_ident)?;
            lhs = lhs.xor(rhs);
        }
        Ok(lhs)
    }

    fn guard_and(&mut self, on_ident: &mut IdentCheck<'_>) -> Result<super::ast::Guard, (Pos, String)> {
        let mut lhs = self.guard_unary(on_ident)?;
        while self.eat(&Tok::Amp) {
            let rhs = self.guard_unary(on_ident)?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn guard_unary(&mut self, on_ident: &mut IdentCheck<'_>) -> Result<super::ast::Guard, (Pos, String)> {
        use super::ast::Guard;
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(self.guard_unary(on_ident)?.not())
            }
            Tok::LParen => {
                self.bump();
                let g = self.guard(on_ident)?;
                self.expect(&Tok::RParen)?;
                Ok(g)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Guard::Const(s == "true"))
            }
            Tok::Ident(s) => {
                on_ident(&s, pos)?;
                self.bump();
                Ok(Guard::Node(s))
            }
            other => Err((pos, format!("expected guard expression, found {other}"))),
        }
    }
}
