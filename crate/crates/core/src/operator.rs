//! Discrete Laplacian and biharmonic operators.
//!
//! Operators are stored in measure-weighted (stiffness) form so that they are
//! symmetric on every grid, including the radial one: the Laplacian is
//! `A = W L` with `W = diag(cell_measure)` and `L` the pointwise difference
//! operator, and the biharmonic energy `Σ_i W_i (L u)_i²` is `K = A W⁻¹ A`.
//! Eigenproblems are pencils `(K, M)` with diagonal `M`; on uniform grids
//! `K u = λ W u` is the same as `L² u = λ u`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainKind, Grid, Link};
pub use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Hinged plate: `u = Δu = 0`.
    Navier,
    /// Clamped plate: `u = ∂u/∂ν = 0`.
    Dirichlet,
}

/// Diagonal quadratic form `Σ w_i u_i²` in cell space; `w_i = values_i · cell_measure_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalWeight {
    pub entries: Vec<f64>,
}

impl DiagonalWeight {
    pub fn form(&self, u: &[f64]) -> f64 {
        self.entries.iter().zip(u).map(|(w, x)| w * x * x).sum()
    }
}

pub fn assemble_weight(grid: &Grid, values: &[f64]) -> Result<DiagonalWeight> {
    Error::check_len(grid.len(), values.len())?;
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("weight value {v} is not a finite non-negative number")));
    }
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateWeight("weight vanishes identically".into()));
    }
    Ok(DiagonalWeight { entries: values.iter().zip(&grid.cell_measure).map(|(v, m)| v * m).collect() })
}

/// Map from solver unknowns (dofs) to cell values: `u_cell[i] = coeff_i · u_dof[source_i]`.
///
/// The identity everywhere except on the clamped radial grid, where the
/// outermost cell is eliminated through the one-sided condition `u'(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMap {
    links: Vec<(usize, f64)>,
    dofs: usize,
}

impl CellMap {
    pub fn identity(n: usize) -> Self {
        CellMap { links: (0..n).map(|i| (i, 1.0)).collect(), dofs: n }
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    pub fn cells(&self) -> usize {
        self.links.len()
    }

    pub fn is_identity(&self) -> bool {
        self.dofs == self.links.len()
    }

    pub fn to_cells(&self, dofs: &[f64]) -> Vec<f64> {
        self.links.iter().map(|&(j, c)| c * dofs[j]).collect()
    }

    /// Dof values reproducing `cells` on every primary (coefficient 1) cell.
    pub fn to_dofs(&self, cells: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dofs];
        for (i, &(j, c)) in self.links.iter().enumerate() {
            if c == 1.0 {
                out[j] = cells[i];
            }
        }
        out
    }

    /// `Pᵀ diag(w) P`, which stays diagonal because every cell has one source.
    pub fn restrict(&self, cell_diag: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dofs];
        for (&(j, c), w) in self.links.iter().zip(cell_diag) {
            out[j] += c * c * w;
        }
        out
    }

    /// `Pᵀ K P`, assembled on the upper triangle and mirrored.
    fn congruence(&self, k: &SparseOperator) -> SparseOperator {
        let mut upper: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.dofs];
        for i in 0..k.dim() {
            let (a, ca) = self.links[i];
            for (j, v) in k.row(i) {
                let (b, cb) = self.links[j];
                if a <= b {
                    *upper[a].entry(b).or_insert(0.0) += ca * cb * v;
                }
            }
        }
        let triplets: Vec<(usize, usize, f64)> = upper
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().flat_map(move |(&b, &v)| if a == b { vec![(a, b, v)] } else { vec![(a, b, v), (b, a, v)] }))
            .collect();
        SparseOperator::from_triplets(self.dofs, triplets)
    }
}

/// Biharmonic stiffness with the unknown-to-cell map and the unit mass.
#[derive(Debug, Clone)]
pub struct PlateOperator {
    pub bc: BoundaryCondition,
    pub stiffness: SparseOperator,
    pub map: CellMap,
    mass: Vec<f64>,
}

impl PlateOperator {
    pub fn dofs(&self) -> usize {
        self.map.dofs()
    }

    /// Unit-density mass matrix diagonal in dof space.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Cell-space weight expressed on the dofs.
    pub fn restrict(&self, weight: &DiagonalWeight) -> Vec<f64> {
        self.map.restrict(&weight.entries)
    }
}

/// Weighted Dirichlet Laplacian `A = W L`.
///
/// 2D: five-point stencil; a face that crosses ∂Ω at `θ h` contributes
/// `1/(θ h²)` to the diagonal of `L` (θ = 1 on the square, where the excluded
/// boundary layer carries the zero values). Radial: the flux form of
/// `u'' + u'/r` on cell-centered nodes, no flux through the axis, `u(1) = 0`
/// through the odd ghost value at `r = 1 + h/2`.
pub fn assemble_laplacian(grid: &Grid) -> SparseOperator {
    laplacian_with_outer_flux(grid, true)
}

fn laplacian_with_outer_flux(grid: &Grid, dirichlet_outer: bool) -> SparseOperator {
    let n = grid.len();
    let h = grid.h;
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    match grid.kind() {
        DomainKind::UnitSquare | DomainKind::UnitDisk => {
            for p in 0..n {
                let scale = grid.cell_measure[p] / (h * h);
                for link in &grid.neighbors[p] {
                    match *link {
                        Link::Cell(q) => {
                            *rows[p].entry(p).or_insert(0.0) += scale;
                            *rows[p].entry(q).or_insert(0.0) -= scale;
                        }
                        Link::Wall { fraction } => {
                            *rows[p].entry(p).or_insert(0.0) += scale / fraction;
                        }
                    }
                }
            }
        }
        DomainKind::RadialDisk => {
            let two_pi = 2.0 * std::f64::consts::PI;
            for i in 0..n {
                // W_i · r_{i±1/2} / (r_i h²) with W_i = 2π r_i h and r_{i+1/2} = (i+1) h
                let outer = two_pi * (i + 1) as f64;
                let inner = two_pi * i as f64;
                if i > 0 {
                    *rows[i].entry(i).or_insert(0.0) += inner;
                    rows[i].insert(i - 1, -inner);
                }
                if i + 1 < n {
                    *rows[i].entry(i).or_insert(0.0) += outer;
                    rows[i].insert(i + 1, -outer);
                } else if dirichlet_outer {
                    *rows[i].entry(i).or_insert(0.0) += 2.0 * outer;
                }
            }
        }
    }
    SparseOperator::from_rows(rows)
}

/// `A W⁻¹ A` for symmetric `A`; each entry sums `(A_ik A_kj) / W_k` over
/// ascending `k`, which is the same expression for `(i, j)` and `(j, i)`.
fn weighted_square(a: &SparseOperator, w: &[f64]) -> SparseOperator {
    let n = a.dim();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (k, aik) in a.row(i) {
            for (j, akj) in a.row(k) {
                *row.entry(j).or_insert(0.0) += (aik * akj) / w[k];
            }
        }
    }
    SparseOperator::from_rows(rows)
}

/// Discrete biharmonic operator.
///
/// Navier: `K = A W⁻¹ A` with the Dirichlet Laplacian, i.e. the discrete
/// splitting `-Δu = v, -Δv = f` with `u = v = 0` on the boundary.
///
/// Dirichlet on 2D grids: the 13-point stencil with the even ghost
/// `u_ghost = u_mirror` across each wall face, which adds `2/h⁴` per wall face
/// to the Navier diagonal. Radial: the Laplacian with no outer flux (even
/// ghost) and the last cell eliminated through `u_{n-1} = u_{n-2}/9`, the
/// one-sided second-order form of `u'(1) = 0` given `u(1) = 0`.
pub fn assemble_bilaplacian(grid: &Grid, bc: BoundaryCondition) -> PlateOperator {
    let n = grid.len();
    let w = &grid.cell_measure;
    let h4 = grid.h.powi(4);
    match (grid.kind(), bc) {
        (_, BoundaryCondition::Navier) => {
            let a = assemble_laplacian(grid);
            PlateOperator { bc, stiffness: weighted_square(&a, w), map: CellMap::identity(n), mass: w.clone() }
        }
        (DomainKind::UnitSquare | DomainKind::UnitDisk, BoundaryCondition::Dirichlet) => {
            let a = assemble_laplacian(grid);
            let k = weighted_square(&a, w);
            let ghost: Vec<f64> = (0..n)
                .map(|p| {
                    let walls = grid.neighbors[p].iter().filter(|l| l.is_wall()).count();
                    2.0 * walls as f64 * w[p] / h4
                })
                .collect();
            PlateOperator { bc, stiffness: k.add_diagonal(&ghost), map: CellMap::identity(n), mass: w.clone() }
        }
        (DomainKind::RadialDisk, BoundaryCondition::Dirichlet) => {
            let a = laplacian_with_outer_flux(grid, false);
            let k = weighted_square(&a, w);
            let mut links: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
            links[n - 1] = (n - 2, 1.0 / 9.0);
            let map = CellMap { links, dofs: n - 1 };
            let stiffness = map.congruence(&k);
            let mass = map.restrict(w);
            PlateOperator { bc, stiffness, map, mass }
        }
    }
}
