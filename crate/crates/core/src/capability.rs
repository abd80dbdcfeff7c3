//! Abstract, uncompressed capabilities.
//!
//! A capability is a `(block, offset, metadata)` triple plus an out-of-band
//! tag bit. Metadata carries the bounds as a block-relative `[base,
//! base + length)` range and a permission set. Nothing here fixes a bit
//! layout; the only layout-dependent quantity is [`CapSize`], the number of
//! bytes a capability occupies in memory.

use std::fmt;

use bitflags::bitflags;

use crate::error::{CapErr, LogicErr, MemResult};

bitflags! {
    /// Capability permissions.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct Perms: u8 {
        const LOAD = 1;
        const STORE = 1 << 1;
        const CAP_LOAD = 1 << 2;
        const CAP_STORE = 1 << 3;
    }
}

/// Size in bytes of a capability in memory. Always a multiple of 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum CapSize {
    /// 128-bit layout.
    #[default]
    Bytes16,
    /// 256-bit layout.
    Bytes32,
}

impl CapSize {
    pub fn new(bytes: u64) -> Option<CapSize> {
        match bytes {
            16 => Some(CapSize::Bytes16),
            32 => Some(CapSize::Bytes32),
            _ => None,
        }
    }

    pub const fn bytes(self) -> u64 {
        match self {
            CapSize::Bytes16 => 16,
            CapSize::Bytes32 => 32,
        }
    }

    pub const fn usize(self) -> usize {
        self.bytes() as usize
    }

    /// Start of the capability-aligned slot containing `offset`.
    pub const fn slot_of(self, offset: u64) -> u64 {
        offset - offset % self.bytes()
    }

    pub const fn is_aligned(self, offset: u64) -> bool {
        offset.is_multiple_of(self.bytes())
    }
}

impl fmt::Display for CapSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bytes())
    }
}

/// Block identifier. Blocks are drawn from the integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BlockId(pub i64);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

/// Bounds and permissions of a capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Metadata {
    base: u64,
    length: u64,
    perms: Perms,
}

impl Metadata {
    /// Returns `None` if `base + length` overflows.
    pub fn new(base: u64, length: u64, perms: Perms) -> Option<Metadata> {
        base.checked_add(length)?;
        Some(Metadata {
            base,
            length,
            perms,
        })
    }

    pub const fn empty() -> Metadata {
        Metadata {
            base: 0,
            length: 0,
            perms: Perms::empty(),
        }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    /// Exclusive upper bound.
    pub fn top(&self) -> u64 {
        self.base + self.length
    }

    pub fn perms(&self) -> Perms {
        self.perms
    }
}

/// A capability as it lives in memory: no tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemCapability {
    pub block: BlockId,
    /// Block-relative address. May lie outside the bounds.
    pub offset: i64,
    pub meta: Metadata,
}

/// A tagged capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Capability {
    pub mcap: MemCapability,
    pub tag: bool,
}

/// Read-only projection of a capability's fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapInfo {
    pub address: i64,
    pub base: u64,
    pub length: u64,
    pub perms: Perms,
    pub tag: bool,
}

/// Which permission an access requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Load,
    Store,
}

impl Capability {
    pub fn new(block: BlockId, offset: i64, meta: Metadata, tag: bool) -> Capability {
        Capability {
            mcap: MemCapability {
                block,
                offset,
                meta,
            },
            tag,
        }
    }

    /// The NULL capability: untagged, empty bounds, no permissions.
    pub const fn null() -> Capability {
        Capability {
            mcap: MemCapability {
                block: BlockId(0),
                offset: 0,
                meta: Metadata::empty(),
            },
            tag: false,
        }
    }

    pub fn block(&self) -> BlockId {
        self.mcap.block
    }

    pub fn offset(&self) -> i64 {
        self.mcap.offset
    }

    pub fn meta(&self) -> &Metadata {
        &self.mcap.meta
    }

    pub fn perms(&self) -> Perms {
        self.mcap.meta.perms
    }

    pub fn tag_get(&self) -> bool {
        self.tag
    }

    pub fn tag_clear(self) -> Capability {
        Capability { tag: false, ..self }
    }

    /// Moves the address by `delta` bytes. The tag survives: abstract
    /// capabilities have no unrepresentable addresses.
    pub fn arith(self, delta: i64) -> Capability {
        let mut c = self;
        c.mcap.offset = c.mcap.offset.wrapping_add(delta);
        c
    }

    /// Intersects the permission set with `mask`.
    pub fn perms_and(self, mask: Perms) -> Capability {
        let mut c = self;
        c.mcap.meta.perms &= mask;
        c
    }

    /// Narrows the bounds to `[new_base, new_base + new_length)`, which must
    /// lie inside the current bounds.
    pub fn bounds_set(self, new_base: u64, new_length: u64) -> MemResult<Capability> {
        let meta = &self.mcap.meta;
        let fits = new_base >= meta.base
            && new_base
                .checked_add(new_length)
                .is_some_and(|top| top <= meta.top());
        if !fits {
            return Err(CapErr::LengthViolation.into());
        }
        let mut c = self;
        c.mcap.meta.base = new_base;
        c.mcap.meta.length = new_length;
        Ok(c)
    }

    pub fn query(&self) -> CapInfo {
        CapInfo {
            address: self.mcap.offset,
            base: self.mcap.meta.base,
            length: self.mcap.meta.length,
            perms: self.mcap.meta.perms,
            tag: self.tag,
        }
    }

    pub(crate) fn check_tag(&self) -> MemResult<()> {
        if self.tag {
            Ok(())
        } else {
            Err(CapErr::TagViolation.into())
        }
    }

    pub(crate) fn check_perm(&self, kind: AccessKind) -> MemResult<()> {
        let (needed, err) = match kind {
            AccessKind::Load => (Perms::LOAD, CapErr::PermitLoadViolation),
            AccessKind::Store => (Perms::STORE, CapErr::PermitStoreViolation),
        };
        if self.perms().contains(needed) {
            Ok(())
        } else {
            Err(err.into())
        }
    }

    pub(crate) fn check_bounds(&self, size: u64) -> MemResult<()> {
        let offset = i128::from(self.mcap.offset);
        let meta = &self.mcap.meta;
        if offset < i128::from(meta.base) || offset + i128::from(size) > i128::from(meta.top()) {
            Err(CapErr::LengthViolation.into())
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_align(&self, cap_size: CapSize) -> MemResult<()> {
        if self.mcap.offset.rem_euclid(cap_size.bytes() as i64) == 0 {
            Ok(())
        } else {
            Err(LogicErr::Unaligned.into())
        }
    }

    /// Runs the access checks in hardware order: tag, permission, bounds,
    /// then (for capability-width accesses) alignment. The first failing
    /// check decides the error.
    pub fn check_access(
        &self,
        kind: AccessKind,
        size: u64,
        require_cap_align: bool,
        cap_size: CapSize,
    ) -> MemResult<()> {
        self.check_tag()?;
        self.check_perm(kind)?;
        self.check_bounds(size)?;
        if require_cap_align {
            self.check_align(cap_size)?;
        }
        Ok(())
    }
}

impl Default for Capability {
    fn default() -> Self {
        Capability::null()
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.mcap;
        write!(
            f,
            "cap({}+{} [{}, {}) {:?} tag={})",
            m.block,
            m.offset,
            m.meta.base,
            m.meta.top(),
            m.meta.perms,
            self.tag
        )
    }
}
