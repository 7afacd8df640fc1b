//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a [`SeededRng`], a
//! ChaCha8 generator addressed by a `(seed, stream)` pair. ChaCha is
//! counter based, so a stream can also be positioned at an arbitrary word
//! offset; [`DitherStream`] uses that to give each sample row a fixed block
//! of dithers independent of the order rows are processed in.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a path of integers (e.g. sweep point, trial, purpose) into a stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// ChaCha8 generator pinned to a `(seed, stream)` address.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child stream under the same seed, addressed by `path`.
    pub fn fork(&self, path: &[u64]) -> SeededRng {
        let mut full = Vec::with_capacity(path.len() + 1);
        full.push(self.stream);
        full.extend_from_slice(path);
        SeededRng::new(self.seed, stream_id(&full))
    }

    /// Repositions the generator at a 32-bit word offset of its stream.
    pub fn seek_word(&mut self, word: u128) {
        self.inner.set_word_pos(word);
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// A draw from `U[-1, 1)` using 53 random mantissa bits.
#[inline]
pub fn uniform_dither<T: Real, R: RngCore + ?Sized>(rng: &mut R) -> T {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    T::lit(2.0 * u - 1.0)
}

/// Dither source where row `i` always sees the same `width` dithers.
#[derive(Clone, Debug)]
pub struct DitherStream {
    rng: SeededRng,
    width: usize,
}

impl DitherStream {
    pub fn new(rng: SeededRng, width: usize) -> Self {
        Self { rng, width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Fills `out` with the dithers assigned to row `row`.
    pub fn row_into<T: Real>(&mut self, row: usize, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.width);
        // two 32-bit words per u64 draw
        self.rng.seek_word(2 * (row as u128) * (self.width as u128));
        for t in out.iter_mut() {
            *t = uniform_dither(&mut self.rng);
        }
    }

    pub fn row<T: Real>(&mut self, row: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.width];
        self.row_into(row, &mut out);
        out
    }
}
