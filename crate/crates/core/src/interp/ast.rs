//! Abstract syntax of the IL. `Display` prints the canonical text form,
//! which parses back to the same instruction.

use std::fmt;

use crate::value::CheriType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    Le,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Var(String),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    fn fmt_nested(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bin(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) if *n < 0 => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Bin(op, l, r) => {
                l.fmt_nested(f)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_nested(f)
            }
        }
    }
}

/// Capability intrinsics callable from the IL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intrinsic {
    TagGet,
    TagClear,
    PermsAnd,
    PermsGet,
    BoundsSet,
    AddressGet,
    BaseGet,
    LengthGet,
}

impl Intrinsic {
    pub const ALL: [Intrinsic; 8] = [
        Intrinsic::TagGet,
        Intrinsic::TagClear,
        Intrinsic::PermsAnd,
        Intrinsic::PermsGet,
        Intrinsic::BoundsSet,
        Intrinsic::AddressGet,
        Intrinsic::BaseGet,
        Intrinsic::LengthGet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::TagGet => "cheri_tag_get",
            Intrinsic::TagClear => "cheri_tag_clear",
            Intrinsic::PermsAnd => "cheri_perms_and",
            Intrinsic::PermsGet => "cheri_perms_get",
            Intrinsic::BoundsSet => "cheri_bounds_set",
            Intrinsic::AddressGet => "cheri_address_get",
            Intrinsic::BaseGet => "cheri_base_get",
            Intrinsic::LengthGet => "cheri_length_get",
        }
    }

    pub fn from_name(name: &str) -> Option<Intrinsic> {
        Intrinsic::ALL.into_iter().find(|i| i.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Intrinsic::PermsAnd | Intrinsic::BoundsSet => 2,
            _ => 1,
        }
    }
}

/// A jump target: the label name and the instruction index it denotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Assign(String, Expr),
    Alloc(String, Expr),
    Free(String, Expr),
    Load(String, CheriType, Expr),
    Store(CheriType, Expr, Expr),
    Memcpy(Expr, Expr, Expr),
    Intrinsic(String, Intrinsic, Vec<Expr>),
    Assert(Expr),
    Goto(Label),
    IfGoto(Expr, Label),
    Halt,
    Fail(Option<String>),
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Assign(x, e) => write!(f, "{x} := {e}"),
            Instr::Alloc(x, e) => write!(f, "{x} := alloc {e}"),
            Instr::Free(x, e) => write!(f, "{x} := free {e}"),
            Instr::Load(x, t, e) => write!(f, "{x} := load {t} {e}"),
            Instr::Store(t, a, v) => write!(f, "store {t} {} {}", Paren(a), Paren(v)),
            Instr::Memcpy(d, s, n) => write!(f, "memcpy {} {} {}", Paren(d), Paren(s), Paren(n)),
            Instr::Intrinsic(x, i, args) => {
                write!(f, "{x} := {}", i.name())?;
                for a in args {
                    write!(f, " {}", Paren(a))?;
                }
                Ok(())
            }
            Instr::Assert(e) => write!(f, "assert {e}"),
            Instr::Goto(l) => write!(f, "goto {}", l.name),
            Instr::IfGoto(e, l) => write!(f, "ifgoto {} {}", Paren(e), l.name),
            Instr::Halt => f.write_str("halt"),
            Instr::Fail(None) => f.write_str("fail"),
            Instr::Fail(Some(m)) => write!(f, "fail {m}"),
        }
    }
}

/// Parenthesises compound expressions in operand position so adjacent
/// operands cannot merge.
struct Paren<'a>(&'a Expr);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt_nested(f)
    }
}

/// A parsed program with resolved labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub instrs: Vec<Instr>,
    /// Source line of each instruction, 1-based.
    pub lines: Vec<usize>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }
}
