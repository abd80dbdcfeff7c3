//! A GOTO-based intermediate language over the memory model.

pub mod ast;
pub mod machine;
pub mod parser;

pub use ast::{BinOp, Expr, Instr, Intrinsic, Label, Program};
pub use machine::{
    eval_expr, run, MachineState, RunConfig, RunOutcome, RunReport, Status, Value, CAP_SIZE_VAR,
};
pub use parser::{parse_program, ParseError};
