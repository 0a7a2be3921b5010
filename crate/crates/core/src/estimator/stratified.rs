use super::direct::region_moments;
use super::{check_inputs, require_finite, EstimateError, McEstimate, Moments};
use crate::exec;
use crate::expr::CompiledProgram;
use crate::sampling::{HyperRect, StreamKey};

/// Default upper bound on `cells_per_dim^dim`.
pub const DEFAULT_CELL_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedOutcome {
    pub estimate: McEstimate,
    /// Cells in lexicographic order (last axis fastest) with their estimates.
    pub cells: Vec<(HyperRect, McEstimate)>,
}

pub(crate) fn cell_count(k: usize, dim: usize, cap: u64) -> Result<usize, EstimateError> {
    let cells = (k as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if cells > cap as u128 {
        return Err(EstimateError::CellBudgetExceeded { cells, cap });
    }
    Ok(cells as usize)
}

/// Per-cell moments for the `k^d` grid; cell `i` draws from `key_base.substream(i)`.
pub(crate) fn grid_moments(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    k: usize,
    n_cells: usize,
    samples_per_cell: u64,
    key_base: StreamKey,
) -> Vec<(HyperRect, Moments, u64)> {
    exec::map_indexed(n_cells, |i| {
        let cell = rect.grid_cell(k, i);
        let (m, nf) = region_moments(
            program,
            params,
            &cell,
            samples_per_cell,
            key_base.substream(i as u64),
        );
        (cell, m, nf)
    })
}

/// Stratified sampling on a `k^d` grid of congruent cells, `samples_per_cell`
/// points in each.
///
/// With congruent cells of volume `V / k^d` the total is
/// `V * (sum of cell means) / k^d`, which equals the sum of the cell values
/// and stays exact for constant integrands.
pub fn stratified_mc(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    cells_per_dim: usize,
    samples_per_cell: u64,
    key_base: StreamKey,
) -> Result<StratifiedOutcome, EstimateError> {
    stratified_mc_capped(
        program,
        params,
        rect,
        cells_per_dim,
        samples_per_cell,
        key_base,
        DEFAULT_CELL_CAP,
    )
}

pub(crate) fn stratified_mc_capped(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    k: usize,
    samples_per_cell: u64,
    key_base: StreamKey,
    cap: u64,
) -> Result<StratifiedOutcome, EstimateError> {
    check_inputs(program, params, rect)?;
    if k == 0 {
        return Err(EstimateError::InvalidConfig(
            "cells_per_dim must be at least 1".into(),
        ));
    }
    if samples_per_cell < 2 {
        return Err(EstimateError::TooFewSamples(samples_per_cell));
    }
    let n_cells = cell_count(k, rect.dim(), cap)?;
    let parts = grid_moments(
        program,
        params,
        rect,
        k,
        n_cells,
        samples_per_cell,
        key_base,
    );

    let cell_volume = rect.volume() / n_cells as f64;
    let mut mean_sum = 0.0;
    let mut mean_var_sum = 0.0;
    let mut n = 0;
    let mut nonfinite = 0;
    let mut cells = Vec::with_capacity(n_cells);
    for (cell, m, nf) in parts {
        require_finite(&m, nf)?;
        mean_sum += m.mean;
        mean_var_sum += m.mean_variance();
        n += m.n + nf;
        nonfinite += nf;
        cells.push((cell, McEstimate::from_moments(cell_volume, &m, nf)));
    }
    let estimate = McEstimate {
        value: rect.volume() * (mean_sum / n_cells as f64),
        std_error: cell_volume * mean_var_sum.sqrt(),
        n_samples: n,
        n_nonfinite: nonfinite,
        budget_exhausted: false,
    };
    Ok(StratifiedOutcome { estimate, cells })
}
