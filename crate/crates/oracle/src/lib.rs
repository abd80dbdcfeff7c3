//! Brute-force reference model of the CHERI-C heap.
//!
//! This model shares data types with `cheri-core` but none of its logic.
//! Blocks are dense arrays sized at allocation, tags are tracked per byte
//! and cleared eagerly for a whole capability slot on every write, and every
//! check is spelled out inline. It exists to be compared against
//! [`cheri_core::Heap`] action by action; it is slow and not meant for
//! anything else.

pub mod gen;

use cheri_core::{
    Action, ActionExec, BlockId, CapErr, CapSize, Capability, CheriType, CheriValue, IntValue,
    LogicErr, MemCell, MemError, MemResult, Metadata, Outcome, Perms,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefBlock {
    pub freed: bool,
    /// One entry per allocated byte; `None` is uninitialised.
    pub cells: Vec<Option<MemCell>>,
    /// One flag per allocated byte. Every byte of a slot carries the slot's
    /// tag.
    pub tag_bytes: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefHeap {
    cap_bytes: usize,
    /// Block `i` has id `i`.
    pub blocks: Vec<RefBlock>,
}

fn cap_err<T>(e: CapErr) -> MemResult<T> {
    Err(MemError::Cap(e))
}

fn logic_err<T>(e: LogicErr) -> MemResult<T> {
    Err(MemError::Logic(e))
}

fn type_bytes(t: CheriType, cap_bytes: usize) -> usize {
    match t {
        CheriType::U8 | CheriType::S8 => 1,
        CheriType::U16 | CheriType::S16 => 2,
        CheriType::U32 | CheriType::S32 => 4,
        CheriType::U64 | CheriType::S64 => 8,
        CheriType::Cap => cap_bytes,
    }
}

/// `[off, off + size)` within `[base, base + length)`, all in wide integers.
fn in_bounds(c: &Capability, size: usize) -> bool {
    let off = c.mcap.offset as i128;
    let lo = c.mcap.meta.base() as i128;
    let hi = lo + c.mcap.meta.length() as i128;
    off >= lo && off + size as i128 <= hi
}

impl RefHeap {
    pub fn new(cap_size: CapSize) -> RefHeap {
        RefHeap {
            cap_bytes: cap_size.bytes() as usize,
            blocks: Vec::new(),
        }
    }

    fn index(&self, b: BlockId) -> MemResult<usize> {
        if b.0 < 0 || b.0 as usize >= self.blocks.len() {
            return logic_err(LogicErr::MissingResource);
        }
        let i = b.0 as usize;
        if self.blocks[i].freed {
            return logic_err(LogicErr::UseAfterFree);
        }
        Ok(i)
    }

    /// Clears every byte's tag in the slot containing byte `at`.
    fn clear_slot(&mut self, i: usize, at: usize) {
        let start = at / self.cap_bytes * self.cap_bytes;
        let block = &mut self.blocks[i];
        for t in start..(start + self.cap_bytes).min(block.tag_bytes.len()) {
            block.tag_bytes[t] = false;
        }
    }

    fn set_slot(&mut self, i: usize, start: usize, tag: bool) {
        let block = &mut self.blocks[i];
        for t in start..(start + self.cap_bytes).min(block.tag_bytes.len()) {
            block.tag_bytes[t] = tag;
        }
    }

    pub fn alloc(&mut self, n: u64) -> Capability {
        let id = self.blocks.len() as i64;
        self.blocks.push(RefBlock {
            freed: false,
            cells: vec![None; n as usize],
            tag_bytes: vec![false; n as usize],
        });
        Capability {
            mcap: cheri_core::MemCapability {
                block: BlockId(id),
                offset: 0,
                meta: Metadata::new(
                    0,
                    n,
                    Perms::LOAD | Perms::STORE | Perms::CAP_LOAD | Perms::CAP_STORE,
                )
                .unwrap(),
            },
            tag: true,
        }
    }

    pub fn free(&mut self, c: &Capability) -> MemResult<Capability> {
        if !c.tag {
            return cap_err(CapErr::TagViolation);
        }
        let off = c.mcap.offset as i128;
        let lo = c.mcap.meta.base() as i128;
        let hi = lo + c.mcap.meta.length() as i128;
        if off < lo || off > hi {
            return cap_err(CapErr::LengthViolation);
        }
        if off != 0 {
            return logic_err(LogicErr::InvalidFree);
        }
        let i = self.index(c.mcap.block)?;
        let block = &mut self.blocks[i];
        block.freed = true;
        block.cells.clear();
        block.tag_bytes.clear();
        let mut out = *c;
        out.tag = false;
        Ok(out)
    }

    pub fn load(&self, c: &Capability, t: CheriType) -> MemResult<CheriValue> {
        let size = type_bytes(t, self.cap_bytes);
        if !c.tag {
            return cap_err(CapErr::TagViolation);
        }
        if !c.mcap.meta.perms().contains(Perms::LOAD) {
            return cap_err(CapErr::PermitLoadViolation);
        }
        if !in_bounds(c, size) {
            return cap_err(CapErr::LengthViolation);
        }
        if t == CheriType::Cap && c.mcap.offset % self.cap_bytes as i64 != 0 {
            return logic_err(LogicErr::Unaligned);
        }
        let i = self.index(c.mcap.block)?;
        let block = &self.blocks[i];
        let off = c.mcap.offset as usize;
        let region = &block.cells[off..off + size];

        if region.iter().any(Option::is_none) {
            return Ok(CheriValue::Undef);
        }
        let region: Vec<MemCell> = region.iter().map(|c| c.unwrap()).collect();

        if t == CheriType::Cap {
            let MemCell::CapFrag(m0, _) = region[0] else {
                return Ok(CheriValue::Undef);
            };
            for (k, cell) in region.iter().enumerate() {
                match cell {
                    MemCell::CapFrag(m, idx) if *m == m0 && *idx as usize == k => {}
                    _ => return Ok(CheriValue::Undef),
                }
            }
            let tag = c.mcap.meta.perms().contains(Perms::CAP_LOAD) && block.tag_bytes[off];
            return Ok(CheriValue::Cap(Capability { mcap: m0, tag }));
        }

        if size == 1 {
            if let MemCell::CapFrag(m, idx) = region[0] {
                return Ok(CheriValue::CapFrag(
                    Capability {
                        mcap: m,
                        tag: false,
                    },
                    idx,
                ));
            }
        }
        let mut bits: u64 = 0;
        for (k, cell) in region.iter().enumerate() {
            match cell {
                MemCell::Byte(b) => bits |= u64::from(*b) << (8 * k),
                MemCell::CapFrag(..) => return Ok(CheriValue::Undef),
            }
        }
        Ok(CheriValue::Int(IntValue::new(t, bits).unwrap()))
    }

    pub fn store(&mut self, c: &Capability, v: &CheriValue) -> MemResult<()> {
        if !c.tag {
            return cap_err(CapErr::TagViolation);
        }
        let perms = c.mcap.meta.perms();
        if !perms.contains(Perms::STORE) {
            return cap_err(CapErr::PermitStoreViolation);
        }
        if let CheriValue::Cap(v) = v {
            if v.tag && !perms.contains(Perms::CAP_STORE) {
                return cap_err(CapErr::PermitStoreCapViolation);
            }
        }
        let size = match v {
            CheriValue::Int(iv) => type_bytes(iv.ty(), self.cap_bytes),
            CheriValue::Cap(_) => self.cap_bytes,
            CheriValue::CapFrag(..) => 1,
            CheriValue::Undef => return logic_err(LogicErr::WrongArgType),
        };
        if !in_bounds(c, size) {
            return cap_err(CapErr::LengthViolation);
        }
        if matches!(v, CheriValue::Cap(_)) && c.mcap.offset % self.cap_bytes as i64 != 0 {
            return logic_err(LogicErr::Unaligned);
        }
        let i = self.index(c.mcap.block)?;
        let off = c.mcap.offset as usize;
        match v {
            CheriValue::Int(iv) => {
                for k in 0..size {
                    let byte = ((iv.bits() >> (8 * k)) & 0xff) as u8;
                    self.blocks[i].cells[off + k] = Some(MemCell::Byte(byte));
                    self.clear_slot(i, off + k);
                }
            }
            CheriValue::CapFrag(cap, idx) => {
                self.blocks[i].cells[off] = Some(MemCell::CapFrag(cap.mcap, *idx));
                self.clear_slot(i, off);
            }
            CheriValue::Cap(cap) => {
                for k in 0..size {
                    self.blocks[i].cells[off + k] = Some(MemCell::CapFrag(cap.mcap, k as u32));
                }
                self.set_slot(i, off, cap.tag);
            }
            CheriValue::Undef => unreachable!(),
        }
        Ok(())
    }

    pub fn memcpy(&mut self, dst: &Capability, src: &Capability, n: u64) -> MemResult<()> {
        if n == 0 {
            return Ok(());
        }
        let n = n as usize;
        if !src.tag {
            return cap_err(CapErr::TagViolation);
        }
        if !src.mcap.meta.perms().contains(Perms::LOAD) {
            return cap_err(CapErr::PermitLoadViolation);
        }
        if !in_bounds(src, n) {
            return cap_err(CapErr::LengthViolation);
        }
        if !dst.tag {
            return cap_err(CapErr::TagViolation);
        }
        if !dst.mcap.meta.perms().contains(Perms::STORE) {
            return cap_err(CapErr::PermitStoreViolation);
        }
        if !in_bounds(dst, n) {
            return cap_err(CapErr::LengthViolation);
        }
        let si = self.index(src.mcap.block)?;
        let di = self.index(dst.mcap.block)?;
        let s = src.mcap.offset as usize;
        let d = dst.mcap.offset as usize;
        let cs = self.cap_bytes;

        let cells: Vec<Option<MemCell>> = self.blocks[si].cells[s..s + n].to_vec();
        let src_tags: Vec<bool> = self.blocks[si].tag_bytes.clone();
        let carry = s % cs == d % cs
            && src.mcap.meta.perms().contains(Perms::CAP_LOAD)
            && dst.mcap.meta.perms().contains(Perms::CAP_STORE);

        for (k, cell) in cells.into_iter().enumerate() {
            self.blocks[di].cells[d + k] = cell;
            self.clear_slot(di, d + k);
        }
        // restore tags for slots the copy covers completely
        if carry {
            let mut slot = d.div_ceil(cs) * cs;
            while slot + cs <= d + n {
                let from = slot - d + s;
                self.set_slot(di, slot, src_tags[from]);
                slot += cs;
            }
        }
        Ok(())
    }
}

impl ActionExec for RefHeap {
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

/// Runs `actions` against a fresh reference heap.
pub fn ref_exec(cap_size: CapSize, actions: &[Action]) -> Vec<MemResult<Outcome>> {
    RefHeap::new(cap_size).exec_all(actions)
}
