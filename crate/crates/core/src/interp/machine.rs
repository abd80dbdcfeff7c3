//! Evaluator for the IL.
//!
//! Memory instructions go through [`ActionExec::exec`] on the heap; a failed
//! action moves the machine to `Faulted` with the pc left on the faulting
//! instruction. The variable `cap_size` is predefined to the capability size
//! in bytes.

use std::collections::BTreeMap;
use std::fmt;

use super::ast::{BinOp, Expr, Instr, Intrinsic, Program};
use crate::action::{Action, ActionExec, Outcome};
use crate::capability::{CapSize, Capability, Perms};
use crate::error::{CapErr, LogicErr, MemError, MemResult};
use crate::heap::Heap;
use crate::value::{CheriType, CheriValue, IntValue};

/// Name of the predefined variable holding the capability size.
pub const CAP_SIZE_VAR: &str = "cap_size";

/// IL values. Integers are untyped 64-bit; typed integers read from memory
/// are widened under their signedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Cap(Capability),
    CapFrag(Capability, u32),
    Undef,
}

impl From<CheriValue> for Value {
    fn from(v: CheriValue) -> Self {
        match v {
            CheriValue::Int(i) => Value::Int(i.as_i64()),
            CheriValue::Cap(c) => Value::Cap(c),
            CheriValue::CapFrag(c, k) => Value::CapFrag(c, k),
            CheriValue::Undef => Value::Undef,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Cap(c) => write!(f, "{c}"),
            Value::CapFrag(c, k) => write!(f, "frag[{k}] of {c}"),
            Value::Undef => f.write_str("undef"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Halted(i64),
    Faulted(MemError),
    AssertFailed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub heap: Heap,
    pub env: BTreeMap<String, Value>,
    pub pc: usize,
    pub status: Status,
    /// Instructions executed so far.
    pub steps: u64,
}

fn wrong_type<T>() -> MemResult<T> {
    Err(LogicErr::WrongArgType.into())
}

impl MachineState {
    pub fn new(cap_size: CapSize) -> MachineState {
        let mut env = BTreeMap::new();
        env.insert(
            CAP_SIZE_VAR.to_string(),
            Value::Int(cap_size.bytes() as i64),
        );
        MachineState {
            heap: Heap::new(cap_size),
            env,
            pc: 0,
            status: Status::Running,
            steps: 0,
        }
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.env.get(var)
    }

    pub fn eval(&self, e: &Expr) -> MemResult<Value> {
        eval_expr(&self.env, e)
    }

    fn eval_int(&self, e: &Expr) -> MemResult<i64> {
        match self.eval(e)? {
            Value::Int(n) => Ok(n),
            _ => wrong_type(),
        }
    }

    fn eval_size(&self, e: &Expr) -> MemResult<u64> {
        u64::try_from(self.eval_int(e)?).or_else(|_| wrong_type())
    }

    fn eval_cap(&self, e: &Expr) -> MemResult<Capability> {
        match self.eval(e)? {
            Value::Cap(c) => Ok(c),
            _ => wrong_type(),
        }
    }

    /// Executes the instruction at `pc`. No-op unless the machine is running.
    pub fn step(&mut self, program: &Program) {
        if self.status != Status::Running {
            return;
        }
        let Some(instr) = program.instrs.get(self.pc) else {
            self.status = Status::Halted(0);
            return;
        };
        self.steps += 1;
        match self.exec(instr) {
            Ok(Flow::Next) => {
                self.pc += 1;
                if self.pc >= program.len() {
                    self.status = Status::Halted(0);
                }
            }
            Ok(Flow::Jump(target)) => {
                self.pc = target;
                if self.pc >= program.len() {
                    self.status = Status::Halted(0);
                }
            }
            Ok(Flow::Stop(status)) => self.status = status,
            Err(e) => self.status = Status::Faulted(e),
        }
    }

    fn action(&mut self, action: Action) -> MemResult<Outcome> {
        self.heap.exec(&action)
    }

    fn exec(&mut self, instr: &Instr) -> MemResult<Flow> {
        match instr {
            Instr::Assign(x, e) => {
                let v = self.eval(e)?;
                self.env.insert(x.clone(), v);
            }
            Instr::Alloc(x, e) => {
                let n = self.eval_size(e)?;
                let Outcome::Allocated(c) = self.action(Action::Alloc(n))? else {
                    unreachable!()
                };
                self.env.insert(x.clone(), Value::Cap(c));
            }
            Instr::Free(x, e) => {
                let c = self.eval_cap(e)?;
                let Outcome::Freed(c) = self.action(Action::Free(c))? else {
                    unreachable!()
                };
                self.env.insert(x.clone(), Value::Cap(c));
            }
            Instr::Load(x, ty, e) => {
                let c = self.eval_cap(e)?;
                let Outcome::Loaded(v) = self.action(Action::Load(c, *ty))? else {
                    unreachable!()
                };
                self.env.insert(x.clone(), v.into());
            }
            Instr::Store(ty, a, v) => {
                let c = self.eval_cap(a)?;
                let v = to_cheri(*ty, self.eval(v)?)?;
                self.action(Action::Store(c, v))?;
            }
            Instr::Memcpy(d, s, n) => {
                let dst = self.eval_cap(d)?;
                let src = self.eval_cap(s)?;
                let n = self.eval_size(n)?;
                self.action(Action::Memcpy { dst, src, n })?;
            }
            Instr::Intrinsic(x, i, args) => {
                let v = self.intrinsic(*i, args)?;
                self.env.insert(x.clone(), v);
            }
            Instr::Assert(e) => {
                if self.eval_int(e)? == 0 {
                    return Ok(Flow::Stop(Status::AssertFailed(self.pc)));
                }
            }
            Instr::Goto(l) => return Ok(Flow::Jump(l.target)),
            Instr::IfGoto(e, l) => {
                if self.eval_int(e)? != 0 {
                    return Ok(Flow::Jump(l.target));
                }
            }
            Instr::Halt => return Ok(Flow::Stop(Status::Halted(0))),
            Instr::Fail(_) => return Ok(Flow::Stop(Status::AssertFailed(self.pc))),
        }
        Ok(Flow::Next)
    }

    fn intrinsic(&self, i: Intrinsic, args: &[Expr]) -> MemResult<Value> {
        let c = self.eval_cap(&args[0])?;
        let v = match i {
            Intrinsic::TagGet => Value::Int(i64::from(c.tag_get())),
            Intrinsic::TagClear => Value::Cap(c.tag_clear()),
            Intrinsic::PermsAnd => {
                let mask = self.eval_int(&args[1])?;
                Value::Cap(c.perms_and(Perms::from_bits_truncate(mask as u8)))
            }
            Intrinsic::PermsGet => Value::Int(i64::from(c.perms().bits())),
            Intrinsic::BoundsSet => {
                let len = self.eval_size(&args[1])?;
                let base =
                    u64::try_from(c.offset()).or(Err(MemError::Cap(CapErr::LengthViolation)))?;
                Value::Cap(c.bounds_set(base, len)?)
            }
            Intrinsic::AddressGet => Value::Int(c.offset()),
            Intrinsic::BaseGet => Value::Int(c.meta().base() as i64),
            Intrinsic::LengthGet => Value::Int(c.meta().length() as i64),
        };
        Ok(v)
    }
}

enum Flow {
    Next,
    Jump(usize),
    Stop(Status),
}

/// Converts an IL value to the memory value a `store <ty>` writes.
fn to_cheri(ty: CheriType, v: Value) -> MemResult<CheriValue> {
    match (ty, v) {
        (_, Value::Undef) => Ok(CheriValue::Undef),
        (CheriType::Cap, Value::Cap(c)) => Ok(CheriValue::Cap(c)),
        (CheriType::Cap, _) => wrong_type(),
        (t, Value::Int(n)) => Ok(CheriValue::Int(
            IntValue::wrapping(t, n).expect("primitive type"),
        )),
        (t, Value::CapFrag(c, k)) if t.is_byte() => Ok(CheriValue::CapFrag(c, k)),
        _ => wrong_type(),
    }
}

/// Evaluates `e` under `env`. Integer arithmetic wraps at 64 bits;
/// capabilities only take part in `+`/`-` with an integer.
pub fn eval_expr(env: &BTreeMap<String, Value>, e: &Expr) -> MemResult<Value> {
    match e {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Var(x) => env.get(x).copied().ok_or(LogicErr::WrongArgType.into()),
        Expr::Bin(op, l, r) => {
            let l = eval_expr(env, l)?;
            let r = eval_expr(env, r)?;
            match (op, l, r) {
                (_, Value::Int(a), Value::Int(b)) => Ok(Value::Int(match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Eq => i64::from(a == b),
                    BinOp::Lt => i64::from(a < b),
                    BinOp::Le => i64::from(a <= b),
                })),
                (BinOp::Add, Value::Cap(c), Value::Int(d))
                | (BinOp::Add, Value::Int(d), Value::Cap(c)) => Ok(Value::Cap(c.arith(d))),
                (BinOp::Sub, Value::Cap(c), Value::Int(d)) => {
                    Ok(Value::Cap(c.arith(d.wrapping_neg())))
                }
                _ => wrong_type(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub cap_size: CapSize,
    pub trace: bool,
    pub max_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cap_size: CapSize::Bytes16,
            trace: false,
            max_steps: 1_000_000,
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Halted(i64),
    Faulted { pc: usize, err: MemError },
    AssertFailed { pc: usize },
    BudgetExhausted { steps: u64 },
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Halted(code) => write!(f, "halted with code {code}"),
            RunOutcome::Faulted {
                pc,
                err: MemError::Cap(e),
            } => write!(f, "CHERI error: {e} at pc={pc}"),
            RunOutcome::Faulted {
                pc,
                err: MemError::Logic(e),
            } => write!(f, "logic error: {e} at pc={pc}"),
            RunOutcome::AssertFailed { pc } => write!(f, "assertion failed at pc={pc}"),
            RunOutcome::BudgetExhausted { steps } => {
                write!(f, "step budget exhausted after {steps} steps")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub state: MachineState,
    pub outcome: RunOutcome,
    /// One `pc=<n> <instruction>` line per executed instruction, if tracing.
    pub trace: Vec<String>,
}

/// Runs `program` from a fresh state until it stops or `max_steps`
/// instructions have executed.
pub fn run(program: &Program, config: &RunConfig) -> RunReport {
    let mut state = MachineState::new(config.cap_size);
    let mut trace = Vec::new();
    while state.status == Status::Running && state.steps < config.max_steps {
        if config.trace {
            if let Some(instr) = program.instrs.get(state.pc) {
                trace.push(format!("pc={} {}", state.pc, instr));
            }
        }
        state.step(program);
    }
    let outcome = match state.status {
        Status::Running => RunOutcome::BudgetExhausted { steps: state.steps },
        Status::Halted(code) => RunOutcome::Halted(code),
        Status::Faulted(err) => RunOutcome::Faulted { pc: state.pc, err },
        Status::AssertFailed(pc) => RunOutcome::AssertFailed { pc },
    };
    RunReport {
        state,
        outcome,
        trace,
    }
}
