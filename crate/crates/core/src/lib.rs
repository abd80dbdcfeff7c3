//! An executable CHERI-C memory model.
//!
//! Capabilities are abstract `(block, offset, bounds, permissions)` values
//! with an out-of-band tag. The heap is block-offset based, keeps tagged
//! memory apart from contents, and remembers freed blocks so temporal
//! violations are caught alongside the spatial checks a CHERI processor
//! performs. A small GOTO-style IL in [`interp`] drives the model.

pub mod action;
pub mod capability;
pub mod error;
pub mod heap;
pub mod interp;
pub mod sepalg;
pub mod value;

pub use action::{Action, ActionExec, Outcome};
pub use capability::{
    AccessKind, BlockId, CapInfo, CapSize, Capability, MemCapability, Metadata, Perms,
};
pub use error::{CapErr, LogicErr, MemError, MemResult};
pub use heap::{BlockState, Heap, LiveBlock};
pub use value::{CheriType, CheriValue, IntValue, MemCell};
