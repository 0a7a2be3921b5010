//! Heuristic tree refinement on top of stratified sampling.
//!
//! Starting from a stratified grid, each round picks the leaves whose
//! standard error exceeds `mean + sigma_multiplier * stddev` of all leaf
//! errors, bisects each along its longest edge and re-samples both halves
//! with fresh streams. Refinement stops when no leaf qualifies, every
//! qualifying leaf is at `max_depth`, or the sample budget cannot pay for
//! another split.

use serde::{Deserialize, Serialize};

use super::direct::region_moments;
use super::stratified::{cell_count, stratified_mc_capped, DEFAULT_CELL_CAP};
use super::{check_inputs, require_finite, sum_estimates, EstimateError, McEstimate};
use crate::exec;
use crate::expr::CompiledProgram;
use crate::sampling::{HyperRect, StreamKey};

const DEFAULT_SAMPLES_PER_CELL: u64 = 2_048;
const DEFAULT_MAX_INITIAL_CELLS: u64 = 4_096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub cells_per_dim: usize,
    pub samples_per_cell: u64,
    pub max_depth: u32,
    pub sigma_multiplier: f64,
    /// Total samples the refinement may draw, initial pass included.
    pub budget: u64,
}

impl RefineConfig {
    /// Defaults for a `dim`-dimensional integrand with `budget` samples:
    /// up to 2,048 samples per cell, the largest grid with at most 4,096
    /// cells whose initial pass uses no more than half the budget, depth 6
    /// and a one-sigma threshold.
    pub fn for_budget(dim: usize, budget: u64) -> Self {
        let samples_per_cell = (budget / 4).clamp(2, DEFAULT_SAMPLES_PER_CELL);
        let max_cells = DEFAULT_MAX_INITIAL_CELLS
            .min(budget / 2 / samples_per_cell)
            .max(1);
        RefineConfig {
            cells_per_dim: largest_grid(dim, max_cells),
            samples_per_cell,
            max_depth: 6,
            sigma_multiplier: 1.0,
            budget,
        }
    }

    /// Grid for plain stratified sampling spending the whole budget up front.
    pub fn stratified_for_budget(dim: usize, budget: u64) -> Self {
        let max_cells = DEFAULT_MAX_INITIAL_CELLS
            .min(budget / DEFAULT_SAMPLES_PER_CELL)
            .max(1);
        let k = largest_grid(dim, max_cells);
        let cells = (k as u64).pow(dim as u32);
        RefineConfig {
            cells_per_dim: k,
            samples_per_cell: (budget / cells).max(2),
            budget,
            ..RefineConfig::for_budget(dim, budget)
        }
    }

    fn initial_cost(&self, dim: usize) -> Result<u64, EstimateError> {
        let cells = cell_count(self.cells_per_dim, dim, DEFAULT_CELL_CAP)? as u64;
        Ok(cells * self.samples_per_cell)
    }
}

/// Largest `k >= 1` with `k^dim <= max_cells`.
fn largest_grid(dim: usize, max_cells: u64) -> usize {
    let mut k = 1usize;
    while ((k + 1) as u128).pow(dim as u32) <= max_cells as u128 {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// No leaf error exceeded the threshold.
    Converged,
    /// Every leaf above the threshold was already at `max_depth`.
    MaxDepth,
    /// The remaining budget could not pay for the next split.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumNode {
    pub cell: HyperRect,
    pub estimate: McEstimate,
    pub depth: u32,
    pub children: Vec<StratumNode>,
}

impl StratumNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Leaves beneath this node, lower half before upper half.
    pub fn leaves(&self) -> Vec<&StratumNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a StratumNode>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            self.children.iter().for_each(|c| c.collect_leaves(out));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub estimate: McEstimate,
    /// Initial grid cells in lexicographic order, each with its subtree.
    pub roots: Vec<StratumNode>,
    pub stop: StopReason,
    /// All samples drawn, including those of cells that were later split.
    pub samples_drawn: u64,
    pub rounds: u32,
}

impl RefineOutcome {
    pub fn leaves(&self) -> Vec<&StratumNode> {
        self.roots.iter().flat_map(StratumNode::leaves).collect()
    }
}

struct Node {
    cell: HyperRect,
    estimate: McEstimate,
    depth: u32,
    key: StreamKey,
    children: Option<[usize; 2]>,
}

fn build(nodes: &[Node], i: usize) -> StratumNode {
    let n = &nodes[i];
    StratumNode {
        cell: n.cell.clone(),
        estimate: n.estimate,
        depth: n.depth,
        children: n
            .children
            .map(|c| c.iter().map(|&j| build(nodes, j)).collect())
            .unwrap_or_default(),
    }
}

fn leaf_indices(nodes: &[Node], i: usize, out: &mut Vec<usize>) {
    match nodes[i].children {
        None => out.push(i),
        Some([a, b]) => {
            leaf_indices(nodes, a, out);
            leaf_indices(nodes, b, out);
        }
    }
}

/// Adaptive refinement; see the module documentation for the policy.
pub fn tree_refine(
    program: &CompiledProgram,
    params: &[f64],
    rect: &HyperRect,
    config: &RefineConfig,
    key_base: StreamKey,
) -> Result<RefineOutcome, EstimateError> {
    check_inputs(program, params, rect)?;
    if !(config.sigma_multiplier >= 0.0) {
        return Err(EstimateError::InvalidConfig(
            "sigma_multiplier must be >= 0".into(),
        ));
    }
    let initial = config.initial_cost(rect.dim())?;
    if initial > config.budget {
        return Err(EstimateError::InvalidConfig(format!(
            "initial pass needs {initial} samples but the budget is {}",
            config.budget
        )));
    }
    let grid = stratified_mc_capped(
        program,
        params,
        rect,
        config.cells_per_dim,
        config.samples_per_cell,
        key_base,
        DEFAULT_CELL_CAP,
    )?;

    let n_roots = grid.cells.len();
    let mut nodes: Vec<Node> = grid
        .cells
        .iter()
        .enumerate()
        .map(|(i, (cell, est))| Node {
            cell: cell.clone(),
            estimate: *est,
            depth: 0,
            key: key_base.substream(i as u64),
            children: None,
        })
        .collect();
    let mut drawn = grid.estimate.n_samples;
    let split_cost = 2 * config.samples_per_cell;
    let mut rounds = 0;

    let stop = loop {
        let mut leaves = Vec::new();
        (0..n_roots).for_each(|r| leaf_indices(&nodes, r, &mut leaves));

        let errors: Vec<f64> = leaves
            .iter()
            .map(|&i| nodes[i].estimate.std_error)
            .collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / errors.len() as f64;
        let threshold = mean + config.sigma_multiplier * var.sqrt();

        let above: Vec<usize> = leaves
            .iter()
            .copied()
            .filter(|&i| nodes[i].estimate.std_error > threshold)
            .collect();
        if above.is_empty() {
            break StopReason::Converged;
        }
        let mut selected: Vec<usize> = above
            .into_iter()
            .filter(|&i| nodes[i].depth < config.max_depth)
            .collect();
        if selected.is_empty() {
            break StopReason::MaxDepth;
        }
        // worst first; the sort is stable so ties keep leaf order
        selected.sort_by(|&a, &b| {
            nodes[b]
                .estimate
                .std_error
                .total_cmp(&nodes[a].estimate.std_error)
        });
        let affordable = ((config.budget - drawn) / split_cost) as usize;
        let exhausted = affordable < selected.len();
        selected.truncate(affordable);
        if selected.is_empty() {
            break StopReason::BudgetExhausted;
        }

        let halves = exec::map_indexed(selected.len() * 2, |j| {
            let parent = &nodes[selected[j / 2]];
            let (lower, upper) = parent.cell.bisect(parent.cell.longest_axis());
            let cell = if j % 2 == 0 { lower } else { upper };
            let key = parent.key.substream((j % 2) as u64);
            let (m, nf) = region_moments(program, params, &cell, config.samples_per_cell, key);
            require_finite(&m, nf)?;
            let estimate = McEstimate::from_moments(cell.volume(), &m, nf);
            Ok::<_, EstimateError>((cell, key, estimate))
        });
        for (s, pair) in selected.iter().zip(halves.chunks(2)) {
            let depth = nodes[*s].depth + 1;
            let mut ids = [0; 2];
            for (slot, half) in ids.iter_mut().zip(pair) {
                let (cell, key, estimate) = half.clone()?;
                *slot = nodes.len();
                nodes.push(Node {
                    cell,
                    estimate,
                    depth,
                    key,
                    children: None,
                });
            }
            nodes[*s].children = Some(ids);
        }
        drawn += selected.len() as u64 * split_cost;
        rounds += 1;
        if exhausted {
            break StopReason::BudgetExhausted;
        }
    };

    let estimate = if rounds == 0 {
        grid.estimate
    } else {
        let mut leaves = Vec::new();
        (0..n_roots).for_each(|r| leaf_indices(&nodes, r, &mut leaves));
        sum_estimates(leaves.iter().map(|&i| &nodes[i].estimate))
    };
    Ok(RefineOutcome {
        estimate: McEstimate {
            budget_exhausted: stop == StopReason::BudgetExhausted,
            ..estimate
        },
        roots: (0..n_roots).map(|r| build(&nodes, r)).collect(),
        stop,
        samples_drawn: drawn,
        rounds,
    })
}
