//! Checkpoint grids.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("checkpoint grid is empty")]
    Empty,
    #[error("checkpoints must be strictly increasing (position {0})")]
    NotIncreasing(usize),
    #[error("checkpoint grid needs at least {required} points, got {got}")]
    TooShort { required: usize, got: usize },
    #[error("checkpoint grid spans {decades:.2} decades, at least {required} required")]
    TooNarrow { decades: f64, required: f64 },
    #[error("checkpoint grid starts at n = {0}; n >= {1} required")]
    StartsTooLow(u64, u64),
    #[error("invalid geometric grid: {0}")]
    Geometric(String),
}

/// Smallest n allowed on a plan grid (keeps log log n > 1 and floor(log n) >= 2).
pub const MIN_GRID_N: u64 = 16;

/// Rounded geometric grid from `start` to `stop` with `per_decade` points per
/// factor of ten. Both ends are included; duplicates after rounding are dropped.
pub fn geometric_grid(start: u64, stop: u64, per_decade: u32) -> Result<Vec<u64>, GridError> {
    if start == 0 || stop < start || per_decade == 0 {
        return Err(GridError::Geometric(format!(
            "start = {start}, stop = {stop}, per_decade = {per_decade}"
        )));
    }
    let decades = (stop as f64 / start as f64).log10();
    let steps = (decades * per_decade as f64 + 1e-9).floor() as u64;
    let mut out = Vec::with_capacity(steps as usize + 2);
    for i in 0..=steps {
        let v = (start as f64 * 10f64.powf(i as f64 / per_decade as f64)).round() as u64;
        let v = v.clamp(start, stop);
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    if out.last() != Some(&stop) {
        out.push(stop);
    }
    Ok(out)
}

pub fn ensure_increasing(grid: &[u64]) -> Result<(), GridError> {
    if grid.is_empty() {
        return Err(GridError::Empty);
    }
    match grid.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(GridError::NotIncreasing(i + 1)),
        None => Ok(()),
    }
}

/// Requirements for a grid on which limit hypotheses are judged.
pub fn validate_condition_grid(grid: &[u64]) -> Result<(), GridError> {
    ensure_increasing(grid)?;
    if grid.len() < 8 {
        return Err(GridError::TooShort {
            required: 8,
            got: grid.len(),
        });
    }
    if grid[0] < MIN_GRID_N {
        return Err(GridError::StartsTooLow(grid[0], MIN_GRID_N));
    }
    let decades = (*grid.last().unwrap() as f64 / grid[0] as f64).log10();
    if decades < 3.0 {
        return Err(GridError::TooNarrow {
            decades,
            required: 3.0,
        });
    }
    Ok(())
}
