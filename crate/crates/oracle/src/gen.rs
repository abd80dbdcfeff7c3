//! Random action sequences for differential and property testing.
//!
//! Sequences mix valid and invalid operands. Capabilities are derived from
//! the ones earlier allocations will return (block ids are predicted from the
//! allocation count), then perturbed: shifted offsets, narrowed bounds,
//! stripped permissions, cleared tags. Forged tagged capabilities only ever
//! point at block ids no allocation will reach, so no generated capability
//! claims bounds beyond its real allocation.

use cheri_core::{
    Action, BlockId, CapSize, Capability, CheriType, CheriValue, IntValue, Metadata, Perms,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// First block id used for forged capabilities.
pub const FORGED_BASE: i64 = 1_000_000;

/// Tracks the capabilities a sequence is expected to have access to.
#[derive(Debug, Clone)]
pub struct Gen {
    cap_size: CapSize,
    allocs: Vec<Capability>,
}

impl Gen {
    pub fn new(cap_size: CapSize) -> Gen {
        Gen {
            cap_size,
            allocs: Vec::new(),
        }
    }

    /// Capabilities of every allocation emitted so far, in order.
    pub fn allocs(&self) -> &[Capability] {
        &self.allocs
    }

    fn cs(&self) -> u64 {
        self.cap_size.bytes()
    }

    /// An allocation whose returned capability is recorded.
    pub fn alloc<R: Rng>(&mut self, rng: &mut R) -> Action {
        let cs = self.cs();
        let n = match rng.gen_range(0..10) {
            0 => 0,
            1..=2 => rng.gen_range(1..=cs),
            3..=6 => rng.gen_range(1..=3) * cs,
            _ => rng.gen_range(1..=3 * cs),
        };
        self.alloc_n(n)
    }

    pub fn alloc_n(&mut self, n: u64) -> Action {
        let id = self.allocs.len() as i64;
        self.allocs.push(Capability::new(
            BlockId(id),
            0,
            Metadata::new(0, n, Perms::all()).unwrap(),
            true,
        ));
        Action::Alloc(n)
    }

    /// A capability, usually derived from a known allocation.
    pub fn cap<R: Rng>(&self, rng: &mut R) -> Capability {
        self.cap_for(rng, 1)
    }

    /// A capability biased towards offsets where an access of `size` bytes
    /// fits.
    pub fn cap_for<R: Rng>(&self, rng: &mut R, size: u64) -> Capability {
        let roll = rng.gen_range(0..100);
        if self.allocs.is_empty() || roll < 3 {
            return Capability::null();
        }
        if roll < 6 {
            let block = BlockId(FORGED_BASE + rng.gen_range(0..4));
            let meta = Metadata::new(0, 64, Perms::all()).unwrap();
            return Capability::new(block, rng.gen_range(0..4) * self.cs() as i64, meta, true);
        }
        // recent allocations are more likely to still be live
        let k = self.allocs.len();
        let base = if rng.gen_bool(0.5) {
            self.allocs[k - 1 - rng.gen_range(0..k.min(3))]
        } else {
            *self.allocs.choose(rng).unwrap()
        };
        self.perturb(rng, base, size as i64)
    }

    fn perturb<R: Rng>(&self, rng: &mut R, mut c: Capability, size: i64) -> Capability {
        let cs = self.cs() as i64;
        let (mut lo, mut len) = (0, c.meta().length() as i64);
        if len > 0 && rng.gen_bool(0.1) {
            lo = rng.gen_range(0..len);
            len = rng.gen_range(0..=len - lo);
            c = c.bounds_set(lo as u64, len as u64).unwrap();
        }
        let room = len - size;
        let offset = lo
            + match rng.gen_range(0..20) {
                0..=9 if room >= 0 => rng.gen_range(0..=room / cs) * cs,
                10..=16 if room >= 0 => rng.gen_range(0..=room),
                17 => rng.gen_range(0..=len / cs) * cs,
                _ => rng.gen_range(-2..=len + 2),
            };
        c = c.arith(offset);
        if rng.gen_bool(0.12) {
            c = c.perms_and(Perms::from_bits_truncate(rng.gen_range(0..16)));
        }
        if rng.gen_bool(0.06) {
            c = c.tag_clear();
        }
        c
    }

    pub fn value<R: Rng>(&self, rng: &mut R) -> CheriValue {
        match rng.gen_range(0..20) {
            0..=9 => {
                let ty = *CheriType::PRIMITIVES.choose(rng).unwrap();
                let bits = match rng.gen_range(0..4) {
                    0 => 0,
                    1 => u64::MAX,
                    _ => rng.gen(),
                };
                let mask = if ty.size_of(self.cap_size) >= 8 {
                    u64::MAX
                } else {
                    (1u64 << (8 * ty.size_of(self.cap_size))) - 1
                };
                CheriValue::Int(IntValue::new(ty, bits & mask).unwrap())
            }
            10..=16 => CheriValue::Cap(self.cap(rng)),
            17..=18 => CheriValue::CapFrag(self.cap(rng), rng.gen_range(0..self.cs() as u32)),
            _ => CheriValue::Undef,
        }
    }

    pub fn ty<R: Rng>(&self, rng: &mut R) -> CheriType {
        if rng.gen_bool(0.3) {
            CheriType::Cap
        } else {
            *CheriType::PRIMITIVES.choose(rng).unwrap()
        }
    }

    /// One random action.
    pub fn action<R: Rng>(&mut self, rng: &mut R) -> Action {
        let roll = rng.gen_range(0..100);
        if self.allocs.is_empty() && roll < 60 || roll < 15 {
            return self.alloc(rng);
        }
        match roll {
            15..=20 => Action::Free(self.cap_for(rng, 0)),
            21..=45 => {
                let ty = self.ty(rng);
                Action::Load(self.cap_for(rng, ty.size_of(self.cap_size)), ty)
            }
            46..=81 => {
                let v = self.value(rng);
                let size = v.type_of().map_or(1, |t| t.size_of(self.cap_size));
                Action::Store(self.cap_for(rng, size), v)
            }
            _ => {
                let n = match rng.gen_range(0..10) {
                    0 => 0,
                    1..=4 => self.cs() * rng.gen_range(1..=2),
                    _ => rng.gen_range(1..=2 * self.cs() + 2),
                };
                Action::Memcpy {
                    dst: self.cap_for(rng, n),
                    src: self.cap_for(rng, n),
                    n,
                }
            }
        }
    }

    /// A sequence of `len` random actions.
    pub fn sequence<R: Rng>(&mut self, rng: &mut R, len: usize) -> Vec<Action> {
        (0..len).map(|_| self.action(rng)).collect()
    }

    /// Loads covering every byte and every capability slot of every
    /// allocation, for comparing final states by observation.
    pub fn sweep(&self) -> Vec<Action> {
        let cs = self.cs();
        let mut out = Vec::new();
        for c in &self.allocs {
            let len = c.meta().length();
            for off in 0..len {
                out.push(Action::Load(c.arith(off as i64), CheriType::U8));
            }
            for slot in (0..len / cs).map(|k| k * cs) {
                out.push(Action::Load(c.arith(slot as i64), CheriType::Cap));
            }
        }
        out
    }
}

/// A fresh generator and a sequence of `len` actions.
pub fn random_sequence<R: Rng>(rng: &mut R, cap_size: CapSize, len: usize) -> (Gen, Vec<Action>) {
    let mut g = Gen::new(cap_size);
    let seq = g.sequence(rng, len);
    (g, seq)
}
