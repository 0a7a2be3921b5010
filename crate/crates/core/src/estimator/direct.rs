use super::{check_inputs, require_finite, EstimateError, McEstimate, Moments};
use crate::exec;
use crate::expr::{BatchScratch, CompiledProgram, BATCH_LANES};
use crate::sampling::{fill_from_stream, HyperRect, StreamKey, UniformStream, CHUNK_SIZE};

/// Points sampled and evaluated together inside a chunk.
const BLOCK: usize = 16 * BATCH_LANES;

/// Moments of one chunk: `count` points drawn from the stream for `key`.
fn chunk_moments(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    key: StreamKey,
    count: usize,
) -> (Moments, u64) {
    let d = rect.dim();
    let mut stream = UniformStream::new(key);
    let mut points = vec![0.0; BLOCK.min(count) * d];
    let mut values = vec![0.0; BLOCK.min(count)];
    let mut scratch = BatchScratch::default();
    let mut m = Moments::default();
    let mut nonfinite = 0;
    let mut left = count;
    while left > 0 {
        let b = left.min(BLOCK);
        let (pts, vals) = (&mut points[..b * d], &mut values[..b]);
        fill_from_stream(rect, &mut stream, pts);
        program.evaluate_batch(pts, params, vals, &mut scratch);
        for &v in vals.iter() {
            if v.is_finite() {
                m.push(v);
            } else {
                nonfinite += 1;
            }
        }
        left -= b;
    }
    (m, nonfinite)
}

/// Moments of `n` samples over `rect`, chunk `c` drawn from `key.chunk(c)`.
/// Chunks may run in parallel; they are merged in ascending chunk order.
pub(crate) fn region_moments(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    n: u64,
    key: StreamKey,
) -> (Moments, u64) {
    let chunk = CHUNK_SIZE as u64;
    let n_chunks = n.div_ceil(chunk) as usize;
    let parts = exec::map_indexed(n_chunks, |c| {
        let count = (n - c as u64 * chunk).min(chunk) as usize;
        chunk_moments(program, params, rect, key.chunk(c as u64), count)
    });
    parts
        .into_iter()
        .fold((Moments::default(), 0), |(m, nf), (pm, pnf)| {
            (m.merge(pm), nf + pnf)
        })
}

/// Plain Monte Carlo: `volume * mean(f)` over `n_samples` uniform points,
/// discarding non-finite evaluations.
pub fn direct_mc(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    n_samples: u64,
    key_base: StreamKey,
) -> Result<McEstimate, EstimateError> {
    check_inputs(program, params, rect)?;
    if n_samples < 2 {
        return Err(EstimateError::TooFewSamples(n_samples));
    }
    let (m, nonfinite) = region_moments(program, params, rect, n_samples, key_base);
    require_finite(&m, nonfinite)?;
    Ok(McEstimate::from_moments(rect.volume(), &m, nonfinite))
}
