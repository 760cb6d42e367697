//! Smallest eigenpair of symmetric pencils `(K + α D, M)` with diagonal `D`
//! and `M`, by inverse iteration on a single Cholesky factorization.
//!
//! Vectors here live in dof space (see [`crate::operator::CellMap`]).

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{BandCholesky, SparseOperator};

pub type Factorization = BandCholesky;

pub fn factorize(k: &SparseOperator) -> Result<Factorization> {
    BandCholesky::factor(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Relative eigenvalue change between iterations.
    pub tol: f64,
    /// Relative residual `‖A u − λ M u‖_{M⁻¹} / λ`. Raised automatically to
    /// the rounding floor of the operator when that is larger.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { tol: 1e-10, residual_tol: 1e-6, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// Eigenvector with `‖u‖_M = 1` and `Σ u_i M_ii > 0`.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Rayleigh quotient of the start vector followed by one entry per iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn m_norm(u: &[f64], mass: &[f64]) -> f64 {
    u.iter().zip(mass).map(|(x, m)| m * x * x).sum::<f64>().sqrt()
}

fn check_mass(mass: &[f64], n: usize) -> Result<()> {
    Error::check_len(n, mass.len())?;
    if mass.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::DegenerateWeight("mass matrix must be positive".into()));
    }
    Ok(())
}

/// `(uᵀKu + α uᵀDu) / uᵀMu`.
pub fn rayleigh(u: &[f64], k: &SparseOperator, alpha: f64, shift: Option<&[f64]>, mass: &[f64]) -> Result<f64> {
    Error::check_len(k.dim(), u.len())?;
    Error::check_len(k.dim(), mass.len())?;
    let denom: f64 = u.iter().zip(mass).map(|(x, m)| m * x * x).sum();
    if denom == 0.0 {
        return Err(Error::domain("Rayleigh quotient of the zero vector"));
    }
    let mut num = k.quad_form(u);
    if let Some(d) = shift {
        Error::check_len(k.dim(), d.len())?;
        num += alpha * u.iter().zip(d).map(|(x, w)| w * x * x).sum::<f64>();
    }
    Ok(num / denom)
}

/// Smallest eigenpair of `(K + α diag(shift), diag(mass))`.
pub fn smallest_eigenpair(
    k: &SparseOperator,
    shift: Option<&[f64]>,
    alpha: f64,
    mass: &[f64],
    u0: Option<&[f64]>,
    config: &EigenConfig,
) -> Result<EigenResult> {
    if !(alpha >= 0.0) {
        return Err(Error::domain(format!("shift scale α = {alpha} must be non-negative")));
    }
    let a: Cow<SparseOperator> = match shift {
        Some(d) if alpha > 0.0 => {
            Error::check_len(k.dim(), d.len())?;
            let scaled: Vec<f64> = d.iter().map(|w| alpha * w).collect();
            Cow::Owned(k.add_diagonal(&scaled))
        }
        _ => Cow::Borrowed(k),
    };
    let factor = factorize(&a)?;
    inverse_iteration(&factor, &a, mass, u0, config)
}

/// Inverse iteration with a prebuilt factorization of `a`.
pub fn inverse_iteration(
    factor: &Factorization,
    a: &SparseOperator,
    mass: &[f64],
    u0: Option<&[f64]>,
    config: &EigenConfig,
) -> Result<EigenResult> {
    let n = a.dim();
    Error::check_len(n, factor.dim())?;
    check_mass(mass, n)?;
    if !(config.tol > 0.0) || !(config.residual_tol > 0.0) {
        return Err(Error::config("eigen tolerances must be positive"));
    }

    let mut u: Vec<f64> = match u0 {
        Some(v) => {
            Error::check_len(n, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain("start vector has non-finite entries"));
            }
            v.to_vec()
        }
        None => vec![1.0; n],
    };
    if m_norm(&u, mass) == 0.0 {
        u = vec![1.0; n];
    }
    let norm = m_norm(&u, mass);
    u.iter_mut().for_each(|x| *x /= norm);

    let au = a.apply(&u);
    let mut lambda: f64 = u.iter().zip(&au).map(|(x, y)| x * y).sum();
    let mut history = vec![lambda];
    let bound = a.scaled_row_bound(mass);
    let mut residual = f64::INFINITY;
    let mut w = vec![0.0; n];

    // With `A w = M u` and `v = w / ‖w‖_M`, both `R(v) = wᵀMu / wᵀMw` and
    // `A v − R(v) M v = M (u − R(v) w) / ‖w‖_M` avoid forming `A v`, whose
    // entries cancel badly when `A` is stiff.
    for iteration in 1..=config.max_iter {
        for ((r, x), m) in w.iter_mut().zip(&u).zip(mass) {
            *r = m * x;
        }
        factor.solve_in_place(&mut w);
        let norm = m_norm(&w, mass);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain("inverse iteration produced a degenerate iterate"));
        }
        let previous = lambda;
        let cross: f64 = w.iter().zip(&u).zip(mass).map(|((y, x), m)| m * x * y).sum();
        lambda = cross / (norm * norm);
        history.push(lambda);
        residual = u
            .iter()
            .zip(&w)
            .zip(mass)
            .map(|((x, y), m)| {
                let r = x - lambda * y;
                m * r * r
            })
            .sum::<f64>()
            .sqrt()
            / (norm * lambda);
        for (x, y) in u.iter_mut().zip(&w) {
            *x = y / norm;
        }
        let floor = 16.0 * f64::EPSILON * bound / lambda;
        if (lambda - previous).abs() <= config.tol * lambda && residual <= config.residual_tol.max(floor) {
            orient(&mut u, mass);
            return Ok(EigenResult { eigenvalue: lambda, vector: u, residual, iterations: iteration, history, converged: true });
        }
    }
    orient(&mut u, mass);
    Err(Error::EigenNotConverged(Box::new(EigenResult {
        eigenvalue: lambda,
        vector: u,
        residual,
        iterations: config.max_iter,
        history,
        converged: false,
    })))
}

fn orient(u: &mut [f64], mass: &[f64]) {
    let s: f64 = u.iter().zip(mass).map(|(x, m)| x * m).sum();
    if s < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
}
