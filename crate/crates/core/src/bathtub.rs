//! Discrete bathtub principle.
//!
//! Among cell fractions `0 ≤ η_i ≤ 1` with `Σ η_i m_i = A`, the linear
//! functional `Σ η_i u_i² m_i` is minimized by filling the cells in increasing
//! order of `u²` and spreading whatever measure is left uniformly over the
//! level where the running measure crosses `A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    /// Per-cell fraction η_i ∈ [0, 1].
    pub fractions: Vec<f64>,
    /// Threshold level `t` of `u²`.
    pub threshold: f64,
    /// Range of `u²` over the tie set; `(t, t)` for exact ties.
    pub tie_band: (f64, f64),
    /// Fraction assigned to every tie cell.
    pub tie_fraction: f64,
    /// Requested measure `A`.
    pub area: f64,
}

impl Indicator {
    /// Cells whose `u²` lies in the tie band.
    pub fn tie_cells(&self, u: &[f64]) -> Vec<usize> {
        let (lo, hi) = self.tie_band;
        (0..u.len()).filter(|&i| (lo..=hi).contains(&(u[i] * u[i]))).collect()
    }

    /// Checks `{u² < t} ⊂ S ⊂ {u² ≤ t}` under the tie rule: full below the
    /// band, empty above it, one common fraction inside it.
    pub fn is_sublevel_set_of(&self, u: &[f64]) -> bool {
        let (lo, hi) = self.tie_band;
        u.len() == self.fractions.len()
            && u.iter().zip(&self.fractions).all(|(x, &eta)| {
                let s = x * x;
                if s < lo {
                    eta == 1.0
                } else if s > hi {
                    eta == 0.0
                } else {
                    eta == self.tie_fraction
                }
            })
    }

    /// Same cells selected, fractions identical.
    pub fn same_partition(&self, other: &Indicator) -> bool {
        self.fractions == other.fractions
    }

    pub fn measure(&self, grid: &Grid) -> f64 {
        self.fractions.iter().zip(&grid.cell_measure).map(|(e, m)| e * m).sum()
    }

    /// `Σ η_i u_i² m_i`.
    pub fn functional(&self, grid: &Grid, u: &[f64]) -> f64 {
        weighted_functional(grid, &self.fractions, u)
    }
}

pub fn weighted_functional(grid: &Grid, eta: &[f64], u: &[f64]) -> f64 {
    eta.iter().zip(u).zip(&grid.cell_measure).map(|((e, x), m)| e * x * x * m).sum()
}

/// Bathtub rearrangement with exact ties.
pub fn bathtub_rearrange(grid: &Grid, u: &[f64], area: f64) -> Result<Indicator> {
    bathtub_rearrange_with(grid, u, area, 0.0)
}

/// Bathtub rearrangement where consecutive sorted values of `u²` closer than
/// `tie_tolerance · max u²` are one level.
///
/// Ordering is by `u²`, then by cell index. The tie set receives the single
/// fraction that makes the total measure equal to `area`.
pub fn bathtub_rearrange_with(grid: &Grid, u: &[f64], area: f64, tie_tolerance: f64) -> Result<Indicator> {
    Error::check_len(grid.len(), u.len())?;
    let total = grid.total_measure;
    if !(area >= 0.0) || area > total * (1.0 + 1e-12) {
        return Err(Error::domain(format!("area {area} outside [0, |Ω|_h = {total}]")));
    }
    if !(tie_tolerance >= 0.0) {
        return Err(Error::config("tie tolerance must be non-negative"));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("state field has non-finite entries"));
    }
    let area = area.min(total);
    let squares: Vec<f64> = u.iter().map(|x| x * x).collect();
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| squares[a].total_cmp(&squares[b]).then(a.cmp(&b)));
    let scale = squares[order[order.len() - 1]];
    let gap = tie_tolerance * scale;

    let mut fractions = vec![0.0; u.len()];
    let mut below = 0.0;
    let mut start = 0;
    loop {
        let mut end = start + 1;
        while end < order.len() && squares[order[end]] - squares[order[end - 1]] <= gap {
            end += 1;
        }
        let level: f64 = order[start..end].iter().map(|&i| grid.cell_measure[i]).sum();
        let last = end == order.len();
        if below + level >= area || last {
            let fraction = ((area - below) / level).clamp(0.0, 1.0);
            for &i in &order[start..end] {
                fractions[i] = fraction;
            }
            for &i in &order[..start] {
                fractions[i] = 1.0;
            }
            let lo = squares[order[start]];
            let hi = squares[order[end - 1]];
            return Ok(Indicator { fractions, threshold: lo, tie_band: (lo, hi), tie_fraction: fraction, area });
        }
        below += level;
        start = end;
    }
}
