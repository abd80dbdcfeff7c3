//! Uniform action interface: one entry point that dispatches a memory action
//! with its operands and returns its outcome.
//!
//! The interpreter drives the heap through [`Heap::exec`], and reference
//! models can implement [`ActionExec`] to be compared against it action by
//! action.

use crate::capability::Capability;
use crate::error::MemResult;
use crate::heap::Heap;
use crate::value::{CheriType, CheriValue};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Alloc(u64),
    Free(Capability),
    Load(Capability, CheriType),
    Store(Capability, CheriValue),
    Memcpy {
        dst: Capability,
        src: Capability,
        n: u64,
    },
}

/// Value returned by a successful action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Allocated(Capability),
    Freed(Capability),
    Loaded(CheriValue),
    Stored,
    Copied,
}

/// Something that can execute memory actions.
pub trait ActionExec {
    fn exec(&mut self, action: &Action) -> MemResult<Outcome>;

    /// Runs `actions` in order, collecting every outcome. Failed actions do
    /// not stop the sequence.
    fn exec_all(&mut self, actions: &[Action]) -> Vec<MemResult<Outcome>> {
        actions.iter().map(|a| self.exec(a)).collect()
    }
}

impl ActionExec for Heap {
    fn exec(&mut self, action: &Action) -> MemResult<Outcome> {
        match action {
            Action::Alloc(n) => Ok(Outcome::Allocated(self.alloc(*n))),
            Action::Free(c) => self.free(c).map(Outcome::Freed),
            Action::Load(c, t) => self.load(c, *t).map(Outcome::Loaded),
            Action::Store(c, v) => self.store(c, v).map(|()| Outcome::Stored),
            Action::Memcpy { dst, src, n } => self.memcpy(dst, src, *n).map(|()| Outcome::Copied),
        }
    }
}
