//! Line-oriented parser for the IL text format.
//!
//! ```text
//! # comment
//! x := alloc E        x := free E         x := load <ty> E
//! store <ty> E E      memcpy E E E        x := <intrinsic> E [E]
//! x := E              assert E            goto L
//! ifgoto E L          halt                fail [message]
//! L:
//! ```
//!
//! Expressions are integer literals (decimal or `0x` hex), variables and the
//! binary operators `*`, `+`, `-`, `=`/`==`, `<`, `<=` with the usual
//! precedence. Operands are juxtaposed, so `memcpy b + 1 a 16` reads as
//! `memcpy (b + 1) a 16`.

use std::collections::HashMap;
use std::fmt;

use super::ast::{BinOp, Expr, Instr, Intrinsic, Label, Program};
use crate::value::CheriType;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const KEYWORDS: &[&str] = &[
    "alloc", "free", "load", "store", "memcpy", "assert", "goto", "ifgoto", "halt", "fail",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Op(BinOp),
    Minus,
    LParen,
    RParen,
    Assign,
    Colon,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Op(op) => write!(f, "`{}`", op.symbol()),
            Tok::Minus => f.write_str("`-`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Colon => f.write_str("`:`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    column: usize,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |column: usize, message: String| ParseError {
        line: lineno,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, width) = match c {
            '+' => (Tok::Op(BinOp::Add), 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Op(BinOp::Mul), 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '=' if chars.get(i + 1) == Some(&'=') => (Tok::Op(BinOp::Eq), 2),
            '=' => (Tok::Op(BinOp::Eq), 1),
            '<' if chars.get(i + 1) == Some(&'=') => (Tok::Op(BinOp::Le), 2),
            '<' => (Tok::Op(BinOp::Lt), 1),
            ':' if chars.get(i + 1) == Some(&'=') => (Tok::Assign, 2),
            ':' => (Tok::Colon, 1),
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[start..j].iter().filter(|&&c| c != '_').collect();
                let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
                    Some(hex) => u64::from_str_radix(hex, 16).map(|v| v as i64),
                    None => text.parse::<u64>().map(|v| v as i64),
                };
                let n =
                    parsed.map_err(|_| err(column, format!("invalid integer literal `{text}`")))?;
                (Tok::Int(n), j - start)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                (Tok::Ident(chars[start..j].iter().collect()), j - start)
            }
            other => return Err(err(column, format!("unexpected character `{other}`"))),
        };
        toks.push(Spanned { tok, column });
        i += width;
    }
    Ok(toks)
}

/// A jump whose label is resolved after the whole program is read.
struct PendingJump {
    instr: usize,
    line: usize,
    column: usize,
}

struct LineParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    eol_column: usize,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map_or(self.eol_column, |s| s.column)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line,
            column: self.column(),
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.error(format!("unexpected {t} after instruction")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            Some(t) => self.error(format!("expected {what}, found {t}")),
            None => self.error(format!("expected {what}")),
        }
    }

    fn var(&mut self) -> Result<String, ParseError> {
        let column = self.column();
        let name = self.ident("variable")?;
        if KEYWORDS.contains(&name.as_str()) || Intrinsic::from_name(&name).is_some() {
            return Err(ParseError {
                line: self.line,
                column,
                message: format!("`{name}` is reserved"),
            });
        }
        Ok(name)
    }

    fn ty(&mut self) -> Result<CheriType, ParseError> {
        let column = self.column();
        let name = self.ident("type")?;
        name.parse().map_err(|message| ParseError {
            line: self.line,
            column,
            message,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        match self.peek() {
            Some(Tok::Op(op @ (BinOp::Eq | BinOp::Lt | BinOp::Le))) => {
                self.pos += 1;
                let rhs = self.additive()?;
                Ok(Expr::bin(*op, lhs, rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(BinOp::Add)) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        while let Some(Tok::Op(BinOp::Mul)) = self.peek() {
            self.pos += 1;
            let rhs = self.atom()?;
            lhs = Expr::bin(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Int(*n))
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                match self.next() {
                    Some(Tok::Int(n)) => Ok(Expr::Int(n.wrapping_neg())),
                    _ => {
                        self.pos -= 1;
                        self.error("expected integer literal after unary `-`")
                    }
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        self.error("expected `)`")
                    }
                }
            }
            Some(Tok::Ident(_)) => Ok(Expr::Var(self.var()?)),
            Some(t) => self.error(format!("expected expression, found {t}")),
            None => self.error("expected expression"),
        }
    }
}

/// Parses a whole program and resolves its labels.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut program = Program::default();
    let mut labels: HashMap<String, (usize, usize)> = HashMap::new();
    let mut pending: Vec<PendingJump> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokenize(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line,
            eol_column: raw.chars().count() + 1,
        };

        if let [Spanned {
            tok: Tok::Ident(name),
            column,
        }, Spanned {
            tok: Tok::Colon, ..
        }] = toks.as_slice()
        {
            if labels.insert(name.clone(), (program.len(), line)).is_some() {
                return Err(ParseError {
                    line,
                    column: *column,
                    message: format!("label `{name}` defined twice"),
                });
            }
            continue;
        }

        let instr = parse_instr(&mut p, raw)?;
        if let Instr::Goto(_) | Instr::IfGoto(..) = instr {
            // label token is the last one on the line
            pending.push(PendingJump {
                instr: program.len(),
                line,
                column: toks.last().map_or(1, |t| t.column),
            });
        }
        program.instrs.push(instr);
        program.lines.push(line);
    }

    for jump in pending {
        let label = match &mut program.instrs[jump.instr] {
            Instr::Goto(l) | Instr::IfGoto(_, l) => l,
            _ => unreachable!(),
        };
        match labels.get(&label.name) {
            Some(&(target, _)) => label.target = target,
            None => {
                return Err(ParseError {
                    line: jump.line,
                    column: jump.column,
                    message: format!("undefined label `{}`", label.name),
                })
            }
        }
    }
    Ok(program)
}

fn parse_instr(p: &mut LineParser<'_>, raw: &str) -> Result<Instr, ParseError> {
    let head_column = p.column();
    let head = match p.peek() {
        Some(Tok::Ident(s)) => s.clone(),
        Some(t) => return p.error(format!("expected instruction, found {t}")),
        None => return p.error("expected instruction"),
    };

    if p.toks.get(1).map(|s| &s.tok) == Some(&Tok::Assign) {
        let dest = p.var()?;
        p.pos += 1;
        let instr = match p.peek() {
            Some(Tok::Ident(k)) if k == "alloc" => {
                p.pos += 1;
                Instr::Alloc(dest, p.expr()?)
            }
            Some(Tok::Ident(k)) if k == "free" => {
                p.pos += 1;
                Instr::Free(dest, p.expr()?)
            }
            Some(Tok::Ident(k)) if k == "load" => {
                p.pos += 1;
                let ty = p.ty()?;
                Instr::Load(dest, ty, p.expr()?)
            }
            Some(Tok::Ident(k)) if Intrinsic::from_name(k).is_some() => {
                let intrinsic = Intrinsic::from_name(k).unwrap();
                p.pos += 1;
                let mut args = Vec::new();
                while !p.at_end() {
                    if args.len() == intrinsic.arity() {
                        return p.error(format!(
                            "`{}` takes {} argument(s)",
                            intrinsic.name(),
                            intrinsic.arity()
                        ));
                    }
                    args.push(p.expr()?);
                }
                if args.len() != intrinsic.arity() {
                    return p.error(format!(
                        "`{}` takes {} argument(s)",
                        intrinsic.name(),
                        intrinsic.arity()
                    ));
                }
                Instr::Intrinsic(dest, intrinsic, args)
            }
            Some(Tok::Ident(k)) if KEYWORDS.contains(&k.as_str()) => {
                return p.error(format!("`{k}` cannot appear on the right of `:=`"));
            }
            _ => Instr::Assign(dest, p.expr()?),
        };
        p.expect_end()?;
        return Ok(instr);
    }

    p.pos += 1;
    let instr = match head.as_str() {
        "store" => {
            let ty = p.ty()?;
            let addr = p.expr()?;
            Instr::Store(ty, addr, p.expr()?)
        }
        "memcpy" => {
            let dst = p.expr()?;
            let src = p.expr()?;
            Instr::Memcpy(dst, src, p.expr()?)
        }
        "assert" => Instr::Assert(p.expr()?),
        "goto" => Instr::Goto(Label {
            name: p.ident("label")?,
            target: 0,
        }),
        "ifgoto" => {
            let cond = p.expr()?;
            Instr::IfGoto(
                cond,
                Label {
                    name: p.ident("label")?,
                    target: 0,
                },
            )
        }
        "halt" => Instr::Halt,
        "fail" => {
            // free-form message: everything after the keyword, minus comments
            let rest = raw.trim_start();
            let rest = rest["fail".len()..].split('#').next().unwrap_or("").trim();
            return Ok(Instr::Fail((!rest.is_empty()).then(|| rest.to_string())));
        }
        _ => {
            return Err(ParseError {
                line: p.line,
                column: head_column,
                message: format!("unknown instruction `{head}`"),
            })
        }
    };
    p.expect_end()?;
    Ok(instr)
}

impl fmt::Display for Program {
    /// Canonical text: label lines are emitted for every jump target.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut at: HashMap<usize, Vec<&str>> = HashMap::new();
        for instr in &self.instrs {
            if let Instr::Goto(l) | Instr::IfGoto(_, l) = instr {
                let names = at.entry(l.target).or_default();
                if !names.contains(&l.name.as_str()) {
                    names.push(&l.name);
                }
            }
        }
        for (i, instr) in self.instrs.iter().enumerate() {
            for name in at.get(&i).into_iter().flatten() {
                writeln!(f, "{name}:")?;
            }
            writeln!(f, "{instr}")?;
        }
        for name in at.get(&self.instrs.len()).into_iter().flatten() {
            writeln!(f, "{name}:")?;
        }
        Ok(())
    }
}
