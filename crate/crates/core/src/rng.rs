//! Seedable, platform-stable random streams.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream; the same seed always yields the same draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derive an independent substream. Advances `self` by one draw.
    pub fn fork(&mut self) -> Self {
        Self::new(self.inner.next_u64())
    }

    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }

    pub fn bit(&mut self) -> u8 {
        (self.inner.next_u32() & 1) as u8
    }

    pub fn permutation(&mut self, len: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut self.inner);
        order
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Lazily drawn uniform permutation of `0..len` (incremental Fisher-Yates).
///
/// Drawing the first `k` elements costs `k` random numbers, so an early-exit
/// scan over a random order does not pay for the full shuffle.
pub struct LazyPermutation<'a> {
    items: Vec<usize>,
    next: usize,
    rng: &'a mut RngStream,
}

impl<'a> LazyPermutation<'a> {
    pub fn new(len: usize, rng: &'a mut RngStream) -> Self {
        Self {
            items: (0..len).collect(),
            next: 0,
            rng,
        }
    }
}

impl Iterator for LazyPermutation<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let len = self.items.len();
        if self.next >= len {
            return None;
        }
        let pick = self.next + self.rng.below(len - self.next);
        self.items.swap(self.next, pick);
        self.next += 1;
        Some(self.items[self.next - 1])
    }
}
