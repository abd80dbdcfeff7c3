//! Types and values, at language level ([`CheriValue`]) and memory level
//! ([`MemCell`]), with the byte encoding between them.
//!
//! Primitive integers are stored little-endian. A capability is stored as
//! one fragment per byte, each fragment remembering the memory capability it
//! came from and its index; the tag goes to tagged memory, not to the cells.

use std::fmt;
use std::str::FromStr;

use crate::capability::{CapSize, Capability, MemCapability};

/// Types of values that can be loaded and stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheriType {
    U8,
    S8,
    U16,
    S16,
    U32,
    S32,
    U64,
    S64,
    Cap,
}

impl CheriType {
    pub const ALL: [CheriType; 9] = [
        CheriType::U8,
        CheriType::S8,
        CheriType::U16,
        CheriType::S16,
        CheriType::U32,
        CheriType::S32,
        CheriType::U64,
        CheriType::S64,
        CheriType::Cap,
    ];

    pub const PRIMITIVES: [CheriType; 8] = [
        CheriType::U8,
        CheriType::S8,
        CheriType::U16,
        CheriType::S16,
        CheriType::U32,
        CheriType::S32,
        CheriType::U64,
        CheriType::S64,
    ];

    /// Size in bytes.
    pub fn size_of(self, cap_size: CapSize) -> u64 {
        match self {
            CheriType::U8 | CheriType::S8 => 1,
            CheriType::U16 | CheriType::S16 => 2,
            CheriType::U32 | CheriType::S32 => 4,
            CheriType::U64 | CheriType::S64 => 8,
            CheriType::Cap => cap_size.bytes(),
        }
    }

    pub fn is_signed(self) -> bool {
        matches!(
            self,
            CheriType::S8 | CheriType::S16 | CheriType::S32 | CheriType::S64
        )
    }

    pub fn is_byte(self) -> bool {
        matches!(self, CheriType::U8 | CheriType::S8)
    }

    fn width_bits(self) -> Option<u32> {
        match self {
            CheriType::Cap => None,
            t => Some(t.size_of(CapSize::default()) as u32 * 8),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CheriType::U8 => "u8",
            CheriType::S8 => "s8",
            CheriType::U16 => "u16",
            CheriType::S16 => "s16",
            CheriType::U32 => "u32",
            CheriType::S32 => "s32",
            CheriType::U64 => "u64",
            CheriType::S64 => "s64",
            CheriType::Cap => "cap",
        }
    }
}

impl fmt::Display for CheriType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheriType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheriType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown type `{s}`"))
    }
}

/// A sized integer. `bits` always fits the width of `ty`; signed types read
/// the same bits as two's complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntValue {
    ty: CheriType,
    bits: u64,
}

impl IntValue {
    /// `None` if `ty` is the capability type or `bits` does not fit.
    pub fn new(ty: CheriType, bits: u64) -> Option<IntValue> {
        let width = ty.width_bits()?;
        if width < 64 && bits >> width != 0 {
            return None;
        }
        Some(IntValue { ty, bits })
    }

    /// Truncates `v` to the width of `ty`. `None` only for the capability type.
    pub fn wrapping(ty: CheriType, v: i64) -> Option<IntValue> {
        let width = ty.width_bits()?;
        let bits = if width == 64 {
            v as u64
        } else {
            (v as u64) & ((1u64 << width) - 1)
        };
        Some(IntValue { ty, bits })
    }

    pub fn ty(&self) -> CheriType {
        self.ty
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Integer value under the signedness of the type. Unsigned 64-bit values
    /// above `i64::MAX` wrap.
    pub fn as_i64(&self) -> i64 {
        let width = self.ty.width_bits().unwrap_or(64);
        if self.ty.is_signed() && width < 64 {
            let shift = 64 - width;
            ((self.bits << shift) as i64) >> shift
        } else {
            self.bits as i64
        }
    }
}

/// Language-level values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheriValue {
    Int(IntValue),
    Cap(Capability),
    /// Byte `index` of a capability.
    CapFrag(Capability, u32),
    Undef,
}

impl CheriValue {
    /// Fragments report `U8`; `Undef` has no type.
    pub fn type_of(&self) -> Option<CheriType> {
        match self {
            CheriValue::Int(i) => Some(i.ty),
            CheriValue::Cap(_) => Some(CheriType::Cap),
            CheriValue::CapFrag(..) => Some(CheriType::U8),
            CheriValue::Undef => None,
        }
    }

    pub fn int(ty: CheriType, bits: u64) -> Option<CheriValue> {
        IntValue::new(ty, bits).map(CheriValue::Int)
    }
}

impl fmt::Display for CheriValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheriValue::Int(i) => write!(f, "{}:{}", i.as_i64(), i.ty),
            CheriValue::Cap(c) => write!(f, "{c}"),
            CheriValue::CapFrag(c, k) => write!(f, "frag[{k}] of {c}"),
            CheriValue::Undef => f.write_str("undef"),
        }
    }
}

/// Contents of one byte of memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemCell {
    Byte(u8),
    CapFrag(MemCapability, u32),
}

/// Little-endian bytes of `v`, one cell per byte.
pub fn encode_prim(v: &IntValue) -> Vec<MemCell> {
    let n = v.ty.size_of(CapSize::default()) as usize;
    v.bits.to_le_bytes()[..n]
        .iter()
        .map(|&b| MemCell::Byte(b))
        .collect()
}

/// Decodes `cells` as a value of primitive type `ty`.
///
/// Any non-byte cell yields `Undef`, except that a single fragment read as a
/// byte type comes back as an untagged fragment value.
pub fn decode_prim(ty: CheriType, cells: &[MemCell]) -> CheriValue {
    debug_assert_ne!(ty, CheriType::Cap);
    debug_assert_eq!(cells.len() as u64, ty.size_of(CapSize::default()));
    if let ([MemCell::CapFrag(m, k)], true) = (cells, ty.is_byte()) {
        return CheriValue::CapFrag(
            Capability {
                mcap: *m,
                tag: false,
            },
            *k,
        );
    }
    let mut buf = [0u8; 8];
    for (slot, cell) in buf.iter_mut().zip(cells) {
        match cell {
            MemCell::Byte(b) => *slot = *b,
            MemCell::CapFrag(..) => return CheriValue::Undef,
        }
    }
    CheriValue::int(ty, u64::from_le_bytes(buf)).unwrap_or(CheriValue::Undef)
}

/// Splits a capability into `cap_size` in-order fragments and its tag.
pub fn split_cap(cap: &Capability, cap_size: CapSize) -> (Vec<MemCell>, bool) {
    let cells = (0..cap_size.bytes() as u32)
        .map(|k| MemCell::CapFrag(cap.mcap, k))
        .collect();
    (cells, cap.tag)
}

/// Rebuilds a capability from fragments: they must share one memory
/// capability and appear with indices `0, 1, ..` in order.
pub fn reassemble_cap(cells: &[MemCell], tag: bool) -> CheriValue {
    let Some(MemCell::CapFrag(first, _)) = cells.first() else {
        return CheriValue::Undef;
    };
    let in_order = cells
        .iter()
        .enumerate()
        .all(|(i, cell)| matches!(cell, MemCell::CapFrag(m, k) if m == first && *k as usize == i));
    if in_order {
        CheriValue::Cap(Capability { mcap: *first, tag })
    } else {
        CheriValue::Undef
    }
}
