//! The block-offset heap and its core actions.
//!
//! A heap maps block ids to either `Freed` or a live pair of maps: byte
//! offset to [`MemCell`] for contents, and capability-aligned offset to tag
//! bit for tagged memory. Missing content entries are uninitialised memory.
//!
//! Every action validates all of its inputs before touching the heap, so a
//! failed action leaves the heap exactly as it was.

use std::collections::BTreeMap;

use crate::capability::{AccessKind, BlockId, CapSize, Capability, Metadata, Perms};
use crate::error::{CapErr, LogicErr, MemResult};
use crate::value::{
    decode_prim, encode_prim, reassemble_cap, split_cap, CheriType, CheriValue, MemCell,
};

/// Contents and tagged memory of a live block.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LiveBlock {
    pub cells: BTreeMap<u64, MemCell>,
    pub tags: BTreeMap<u64, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockState {
    Freed,
    Live(LiveBlock),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heap {
    cap_size: CapSize,
    blocks: BTreeMap<BlockId, BlockState>,
    next_block: i64,
}

impl Default for Heap {
    fn default() -> Self {
        Heap::new(CapSize::default())
    }
}

impl Heap {
    /// The empty heap.
    pub fn new(cap_size: CapSize) -> Heap {
        Heap {
            cap_size,
            blocks: BTreeMap::new(),
            next_block: 0,
        }
    }

    /// Builds a heap from raw blocks. The allocation counter is set one past
    /// the largest block id. Contents are not validated; see [`Heap::wf`].
    pub fn from_blocks(cap_size: CapSize, blocks: BTreeMap<BlockId, BlockState>) -> Heap {
        let next_block = blocks
            .keys()
            .next_back()
            .map_or(0, |b| b.0.saturating_add(1));
        Heap {
            cap_size,
            blocks,
            next_block,
        }
    }

    pub fn cap_size(&self) -> CapSize {
        self.cap_size
    }

    pub fn next_block(&self) -> i64 {
        self.next_block
    }

    pub fn blocks(&self) -> &BTreeMap<BlockId, BlockState> {
        &self.blocks
    }

    pub fn into_blocks(self) -> BTreeMap<BlockId, BlockState> {
        self.blocks
    }

    pub fn block(&self, id: BlockId) -> Option<&BlockState> {
        self.blocks.get(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Tag bit stored for the slot at `offset`, if the block is live and the
    /// slot has ever been written.
    pub fn tag_at(&self, id: BlockId, offset: u64) -> Option<bool> {
        match self.blocks.get(&id)? {
            BlockState::Live(b) => b.tags.get(&offset).copied(),
            BlockState::Freed => None,
        }
    }

    pub fn cell_at(&self, id: BlockId, offset: u64) -> Option<&MemCell> {
        match self.blocks.get(&id)? {
            BlockState::Live(b) => b.cells.get(&offset),
            BlockState::Freed => None,
        }
    }

    /// Well-formedness: tags only at capability-aligned offsets, and the
    /// allocation counter above every block id.
    pub fn wf(&self) -> bool {
        let tags_aligned = self.blocks.values().all(|state| match state {
            BlockState::Live(b) => b.tags.keys().all(|&k| self.cap_size.is_aligned(k)),
            BlockState::Freed => true,
        });
        let counter_fresh = self.blocks.keys().all(|b| b.0 < self.next_block);
        tags_aligned && counter_fresh
    }

    /// Allocates a fresh block of `size` bytes. Never fails.
    pub fn alloc(&mut self, size: u64) -> Capability {
        let id = BlockId(self.next_block);
        self.next_block += 1;
        self.blocks
            .insert(id, BlockState::Live(LiveBlock::default()));
        let meta = Metadata::new(0, size, Perms::all()).expect("zero base cannot overflow");
        Capability::new(id, 0, meta, true)
    }

    fn live(&self, id: BlockId) -> MemResult<&LiveBlock> {
        match self.blocks.get(&id) {
            None => Err(LogicErr::MissingResource.into()),
            Some(BlockState::Freed) => Err(LogicErr::UseAfterFree.into()),
            Some(BlockState::Live(b)) => Ok(b),
        }
    }

    fn live_mut(&mut self, id: BlockId) -> &mut LiveBlock {
        match self.blocks.get_mut(&id) {
            Some(BlockState::Live(b)) => b,
            _ => unreachable!("block checked live before mutation"),
        }
    }

    /// Frees the block `c` points to and returns `c` with its tag cleared.
    ///
    /// `c` must be tagged, within its bounds, and at the allocation base.
    pub fn free(&mut self, c: &Capability) -> MemResult<Capability> {
        c.check_tag()?;
        let meta = c.meta();
        let offset = i128::from(c.offset());
        if offset < i128::from(meta.base()) || offset > i128::from(meta.top()) {
            return Err(CapErr::LengthViolation.into());
        }
        if c.offset() != 0 {
            return Err(LogicErr::InvalidFree.into());
        }
        self.live(c.block())?;
        self.blocks.insert(c.block(), BlockState::Freed);
        Ok(c.tag_clear())
    }

    /// Loads a value of type `ty` through `c`.
    pub fn load(&self, c: &Capability, ty: CheriType) -> MemResult<CheriValue> {
        let size = ty.size_of(self.cap_size);
        c.check_access(AccessKind::Load, size, ty == CheriType::Cap, self.cap_size)?;
        let block = self.live(c.block())?;
        // bounds checks guarantee a non-negative offset
        let start = c.offset() as u64;
        let cells: Option<Vec<MemCell>> = (start..start + size)
            .map(|i| block.cells.get(&i).copied())
            .collect();
        let Some(cells) = cells else {
            return Ok(CheriValue::Undef);
        };
        if ty == CheriType::Cap {
            let tag = c.perms().contains(Perms::CAP_LOAD)
                && block.tags.get(&start).copied().unwrap_or(false);
            Ok(reassemble_cap(&cells, tag))
        } else {
            Ok(decode_prim(ty, &cells))
        }
    }

    /// Stores `v` through `c`.
    pub fn store(&mut self, c: &Capability, v: &CheriValue) -> MemResult<()> {
        c.check_tag()?;
        c.check_perm(AccessKind::Store)?;
        if let CheriValue::Cap(cap) = v {
            if cap.tag && !c.perms().contains(Perms::CAP_STORE) {
                return Err(CapErr::PermitStoreCapViolation.into());
            }
        }
        let Some(ty) = v.type_of() else {
            return Err(LogicErr::WrongArgType.into());
        };
        let size = ty.size_of(self.cap_size);
        c.check_bounds(size)?;
        if ty == CheriType::Cap {
            c.check_align(self.cap_size)?;
        }
        self.live(c.block())?;

        let cap_size = self.cap_size;
        let start = c.offset() as u64;
        let block = self.live_mut(c.block());
        match v {
            CheriValue::Int(i) => {
                for (k, cell) in encode_prim(i).into_iter().enumerate() {
                    block.cells.insert(start + k as u64, cell);
                }
                clear_tags(block, cap_size, start, size);
            }
            CheriValue::CapFrag(cap, k) => {
                block.cells.insert(start, MemCell::CapFrag(cap.mcap, *k));
                clear_tags(block, cap_size, start, 1);
            }
            CheriValue::Cap(cap) => {
                let (cells, tag) = split_cap(cap, cap_size);
                for (k, cell) in cells.into_iter().enumerate() {
                    block.cells.insert(start + k as u64, cell);
                }
                block.tags.insert(start, tag);
            }
            CheriValue::Undef => unreachable!(),
        }
        Ok(())
    }

    /// Copies `n` bytes from `src` to `dst`, overlap-safe.
    ///
    /// Cell contents are copied byte for byte. A destination tag slot keeps
    /// the source's tag only when the copy covers it entirely, source and
    /// destination share the same offset modulo the capability size, `src`
    /// may load capabilities and `dst` may store them. Every other slot the
    /// copy touches is cleared.
    pub fn memcpy(&mut self, dst: &Capability, src: &Capability, n: u64) -> MemResult<()> {
        if n == 0 {
            return Ok(());
        }
        src.check_access(AccessKind::Load, n, false, self.cap_size)?;
        dst.check_access(AccessKind::Store, n, false, self.cap_size)?;
        let src_block = self.live(src.block())?;
        self.live(dst.block())?;

        let cs = self.cap_size.bytes();
        let s = src.offset() as u64;
        let d = dst.offset() as u64;
        let cells: Vec<Option<MemCell>> = (s..s + n)
            .map(|i| src_block.cells.get(&i).copied())
            .collect();
        let in_phase = (s % cs) == (d % cs)
            && src.perms().contains(Perms::CAP_LOAD)
            && dst.perms().contains(Perms::CAP_STORE);
        let mut slot_tags = Vec::new();
        let mut slot = self.cap_size.slot_of(d);
        while slot < d + n {
            let covered = slot >= d && slot + cs <= d + n;
            let tag = covered
                && in_phase
                && src_block
                    .tags
                    .get(&(slot - d + s))
                    .copied()
                    .unwrap_or(false);
            slot_tags.push((slot, tag));
            slot += cs;
        }

        let block = self.live_mut(dst.block());
        for (k, cell) in cells.into_iter().enumerate() {
            let at = d + k as u64;
            match cell {
                Some(cell) => block.cells.insert(at, cell),
                None => block.cells.remove(&at),
            };
        }
        for (slot, tag) in slot_tags {
            block.tags.insert(slot, tag);
        }
        Ok(())
    }
}

/// Clears every tag slot overlapping `[start, start + len)`.
fn clear_tags(block: &mut LiveBlock, cap_size: CapSize, start: u64, len: u64) {
    let mut slot = cap_size.slot_of(start);
    while slot < start + len {
        block.tags.insert(slot, false);
        slot += cap_size.bytes();
    }
}
