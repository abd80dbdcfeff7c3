//! Heaps as a separation algebra: the empty heap is the unit and composition
//! is disjoint union of block maps, defined only when the block ids do not
//! overlap.

use crate::heap::Heap;

/// A partial commutative monoid.
pub trait PartialMonoid: Sized {
    fn unit(&self) -> Self;
    fn disjoint(&self, other: &Self) -> bool;
    fn compose(&self, other: &Self) -> Option<Self>;
}

impl PartialMonoid for Heap {
    /// The empty heap with the same capability size.
    fn unit(&self) -> Heap {
        Heap::new(self.cap_size())
    }

    fn disjoint(&self, other: &Heap) -> bool {
        disjoint(self, other)
    }

    fn compose(&self, other: &Heap) -> Option<Heap> {
        compose(self, other)
    }
}

/// True iff no block id is present in both heaps.
pub fn disjoint(a: &Heap, b: &Heap) -> bool {
    let (small, large) = if a.blocks().len() <= b.blocks().len() {
        (a, b)
    } else {
        (b, a)
    };
    small
        .blocks()
        .keys()
        .all(|k| !large.blocks().contains_key(k))
}

/// Disjoint union. `None` if the heaps share a block id or disagree on the
/// capability size.
pub fn compose(a: &Heap, b: &Heap) -> Option<Heap> {
    if a.cap_size() != b.cap_size() || !disjoint(a, b) {
        return None;
    }
    let mut blocks = a.blocks().clone();
    blocks.extend(b.blocks().iter().map(|(k, v)| (*k, v.clone())));
    // the counter is max(a, b) since each is one past its largest id
    let joined = Heap::from_blocks(a.cap_size(), blocks);
    debug_assert_eq!(joined.next_block(), a.next_block().max(b.next_block()));
    Some(joined)
}
