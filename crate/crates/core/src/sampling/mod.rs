//! Integration domains and reproducible uniform sample streams.
//!
//! Every stream is addressed by a [`StreamKey`]. The numbers drawn for a key
//! depend on nothing else, so any worker can produce any chunk of any stream
//! and the result of a computation never depends on how it was scheduled.

mod philox;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use philox::philox4x32_10;

/// Samples per chunk; the unit of parallel work inside one estimate.
pub const CHUNK_SIZE: usize = 65_536;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("domain must have at least one dimension")]
    Empty,
    #[error("low has {low} bounds but high has {high}")]
    LengthMismatch { low: usize, high: usize },
    #[error("bounds for x{axis} must satisfy low < high (got [{low}, {high}])")]
    Degenerate { axis: usize, low: f64, high: f64 },
}

/// Axis-aligned box `[low_0, high_0) × ... × [low_{d-1}, high_{d-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRect", into = "RawRect")]
pub struct HyperRect {
    low: Vec<f64>,
    high: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawRect {
    low: Vec<f64>,
    high: Vec<f64>,
}

impl TryFrom<RawRect> for HyperRect {
    type Error = DomainError;
    fn try_from(r: RawRect) -> Result<Self, DomainError> {
        HyperRect::new(r.low, r.high)
    }
}

impl From<HyperRect> for RawRect {
    fn from(r: HyperRect) -> Self {
        RawRect {
            low: r.low,
            high: r.high,
        }
    }
}

impl HyperRect {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self, DomainError> {
        if low.len() != high.len() {
            return Err(DomainError::LengthMismatch {
                low: low.len(),
                high: high.len(),
            });
        }
        if low.is_empty() {
            return Err(DomainError::Empty);
        }
        for (axis, (&l, &h)) in low.iter().zip(&high).enumerate() {
            // also rejects NaN and infinite bounds
            if !(l < h) || !(h - l).is_finite() {
                return Err(DomainError::Degenerate {
                    axis: axis + 1,
                    low: l,
                    high: h,
                });
            }
        }
        Ok(HyperRect { low, high })
    }

    /// `[0, 1)^dim`.
    pub fn unit(dim: usize) -> Self {
        HyperRect::new(vec![0.0; dim], vec![1.0; dim]).expect("unit cube")
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.high[axis] - self.low[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Axis of the longest edge; the lowest such axis on ties.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for i in 1..self.dim() {
            if self.width(i) > self.width(best) {
                best = i;
            }
        }
        best
    }

    /// Splits at the midpoint of `axis` into (lower, upper) halves.
    pub fn bisect(&self, axis: usize) -> (HyperRect, HyperRect) {
        let mid = self.low[axis] + 0.5 * self.width(axis);
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.high[axis] = mid;
        upper.low[axis] = mid;
        (lower, upper)
    }

    /// Boundary `j` of `k` equal slices along `axis`; boundary `k` is exactly `high`.
    fn grid_boundary(&self, axis: usize, j: usize, k: usize) -> f64 {
        if j == k {
            self.high[axis]
        } else {
            self.low[axis] + self.width(axis) * (j as f64 / k as f64)
        }
    }

    /// Cell `index` of the `k^d` grid, in lexicographic order with the last
    /// axis varying fastest. Neighbouring cells share boundaries exactly.
    pub fn grid_cell(&self, k: usize, mut index: usize) -> HyperRect {
        let d = self.dim();
        let mut low = vec![0.0; d];
        let mut high = vec![0.0; d];
        for axis in (0..d).rev() {
            let j = index % k;
            index /= k;
            low[axis] = self.grid_boundary(axis, j, k);
            high[axis] = self.grid_boundary(axis, j + 1, k);
        }
        HyperRect { low, high }
    }
}

/// Address of one reproducible sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StreamKey {
    pub global_seed: u64,
    pub integrand_index: u64,
    pub trial_index: u64,
    pub chunk_index: u64,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(global_seed: u64, integrand_index: u64, trial_index: u64) -> Self {
        StreamKey {
            global_seed,
            integrand_index,
            trial_index,
            chunk_index: 0,
        }
    }

    /// Key for chunk `offset` of a stream rooted at `self`.
    pub fn chunk(self, offset: u64) -> Self {
        StreamKey {
            chunk_index: self.chunk_index.wrapping_add(offset),
            ..self
        }
    }

    /// Root key of an independent child stream (a stratum cell, a tree node).
    pub fn substream(self, child: u64) -> Self {
        let mixed = mix64(self.chunk_index ^ mix64(child.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        StreamKey {
            chunk_index: mix64(mixed.wrapping_add(0x632b_e59b_d9b4_e019)),
            ..self
        }
    }

    fn philox_key(&self) -> [u32; 2] {
        let mut h = mix64(self.global_seed ^ 0x5851_f42d_4c95_7f2d);
        h = mix64(h ^ self.integrand_index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h = mix64(h ^ self.trial_index.wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
        [h as u32, (h >> 32) as u32]
    }
}

/// Sequential reader over the stream for one key.
#[derive(Debug, Clone)]
pub struct UniformStream {
    key: [u32; 2],
    chunk: [u32; 2],
    block: u64,
    buf: [u32; 4],
    half: u8,
}

impl UniformStream {
    pub fn new(key: StreamKey) -> Self {
        UniformStream {
            key: key.philox_key(),
            chunk: [key.chunk_index as u32, (key.chunk_index >> 32) as u32],
            block: 0,
            buf: [0; 4],
            half: 2,
        }
    }

    /// Next uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        if self.half == 2 {
            self.buf = philox4x32_10(
                [
                    self.block as u32,
                    (self.block >> 32) as u32,
                    self.chunk[0],
                    self.chunk[1],
                ],
                self.key,
            );
            self.block += 1;
            self.half = 0;
        }
        let i = 2 * self.half as usize;
        self.half += 1;
        let bits = ((self.buf[i + 1] as u64) << 32) | self.buf[i] as u64;
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Fills `out` (point-major, `out.len() / rect.dim()` points) with uniform
/// points in `rect` drawn from the stream for `key`.
pub fn fill_uniform(rect: &HyperRect, key: StreamKey, out: &mut [f64]) {
    fill_from_stream(rect, &mut UniformStream::new(key), out);
}

/// Like [`fill_uniform`] but continues an existing stream, so a long request
/// can be produced block by block with identical results.
pub fn fill_from_stream(rect: &HyperRect, stream: &mut UniformStream, out: &mut [f64]) {
    let d = rect.dim();
    assert_eq!(out.len() % d, 0);
    for point in out.chunks_exact_mut(d) {
        for (j, x) in point.iter_mut().enumerate() {
            let u = stream.next_f64();
            let v = rect.low[j] + rect.width(j) * u;
            // rounding can land on the excluded upper bound
            *x = if v < rect.high[j] {
                v
            } else {
                rect.high[j].next_down()
            };
        }
    }
}

/// `count` uniform points in `rect`, point-major (`count * dim` values).
pub fn sample_uniform(rect: &HyperRect, key: StreamKey, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count * rect.dim()];
    fill_uniform(rect, key, &mut out);
    out
}
