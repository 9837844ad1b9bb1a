//! Deterministic permutations used between coding and precoding.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A fixed permutation: output position `j` takes input item `perm[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    /// Uniformly random permutation of `len` items, reproducible from `seed`.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm }
    }

    /// Row-column block interleaver: items are written down the columns of a
    /// `rows x cols` array and read out along the rows. Consecutive input
    /// items end up `cols` positions apart.
    pub fn block(rows: usize, cols: usize) -> Self {
        let mut perm = vec![0; rows * cols];
        for i in 0..rows * cols {
            let (row, col) = (i % rows, i / rows);
            perm[row * cols + col] = i;
        }
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Output position of input item `i`.
    pub fn position_of(&self, i: usize) -> usize {
        self.perm
            .iter()
            .position(|&p| p == i)
            .expect("item in range")
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.perm.len(), "interleaver length mismatch");
        self.perm.iter().map(|&p| items[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.perm.len(), "interleaver length mismatch");
        let mut out = vec![T::default(); items.len()];
        for (&p, &v) in self.perm.iter().zip(items) {
            out[p] = v;
        }
        out
    }

    /// One `output_position input_index` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.perm.len() * 12);
        for (j, p) in self.perm.iter().enumerate() {
            let _ = writeln!(out, "{j} {p}");
        }
        out
    }
}
