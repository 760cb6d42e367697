//! Optimal pairs by alternating minimization.
//!
//! Both problems are solved by block coordinate descent: with the region `S`
//! fixed, the smallest eigenpair is computed exactly; with `u` fixed, the
//! bathtub rearrangement picks the best `S` of the prescribed measure. Each
//! half-step can only lower the Rayleigh quotient, so the objective history
//! is non-increasing.
//!
//! * `(G)`: `Λ(α, A) = min_{|S| = A} λ₁(Δ² + α χ_S)`.
//! * `(CP)`: `Θ(h, H, M) = min_ρ λ₁(Δ², ρ)` over densities `h ≤ ρ ≤ H` with
//!   `∫ρ = M`; the optimal ρ is `h` on `S` and `H` off it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bathtub::{bathtub_rearrange, bathtub_rearrange_with, Indicator};
use crate::eigen::{factorize, inverse_iteration, smallest_eigenpair, EigenConfig, EigenResult, Factorization};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::grid::{build_grid, Domain, Grid};
use crate::operator::{assemble_bilaplacian, BoundaryCondition, PlateOperator};

/// A grid with its assembled biharmonic operator.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub op: PlateOperator,
}

impl Problem {
    pub fn new(domain: Domain, bc: BoundaryCondition) -> Result<Self> {
        let grid = build_grid(domain)?;
        let op = assemble_bilaplacian(&grid, bc);
        Ok(Problem { grid, op })
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.op.bc
    }

    pub fn total_measure(&self) -> f64 {
        self.grid.total_measure
    }

    /// `Σ values_i m_i u_i²` as a dof-space diagonal.
    pub fn weight_diagonal(&self, values: &[f64]) -> Vec<f64> {
        let cell: Vec<f64> = values.iter().zip(&self.grid.cell_measure).map(|(v, m)| v * m).collect();
        self.op.map.restrict(&cell)
    }

    /// First eigenpair with unit density, `μ(Ω)`.
    pub fn unweighted(&self, config: &EigenConfig) -> Result<EigenResult> {
        smallest_eigenpair(&self.op.stiffness, None, 0.0, self.op.mass(), None, config)
    }

    /// Cell values, oriented so that `Σ u_i m_i > 0`.
    pub fn cell_values(&self, dofs: &[f64]) -> Vec<f64> {
        let mut u = self.op.map.to_cells(dofs);
        let s: f64 = u.iter().zip(&self.grid.cell_measure).map(|(x, m)| x * m).sum();
        if s < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParams {
    pub alpha: f64,
    pub area: f64,
}

/// Composite plate data: densities `low = h < high = H` and total mass `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpParams {
    pub low: f64,
    pub high: f64,
    pub mass: f64,
}

impl CpParams {
    /// Measure of the light region, `(H|Ω| − M)/(H − h)`.
    pub fn light_area(&self, total: f64) -> f64 {
        (self.high * total - self.mass) / (self.high - self.low)
    }

    pub fn validate(&self, total: f64) -> Result<()> {
        let CpParams { low, high, mass } = *self;
        if !(low >= 0.0) || !low.is_finite() || !high.is_finite() {
            return Err(Error::domain(format!("densities must be finite with h >= 0, got h = {low}")));
        }
        if !(low < high) {
            return Err(Error::domain(format!("need h < H, got h = {low}, H = {high}")));
        }
        let slack = 1e-12 * high * total;
        if !(mass >= low * total - slack && mass <= high * total + slack) {
            return Err(Error::domain(format!("mass {mass} outside [h|Ω|_h, H|Ω|_h] = [{}, {}]", low * total, high * total)));
        }
        if low == 0.0 && (mass - high * total).abs() > slack {
            return Err(Error::domain("h = 0 admits only M = H|Ω|_h: a zero-density region must have measure zero"));
        }
        Ok(())
    }
}

/// `(α, A)` of the generalized problem equivalent to `cp` with minimal value `theta`.
pub fn cp_to_g(cp: &CpParams, theta: f64, total: f64) -> GParams {
    GParams { alpha: (cp.high - cp.low) * theta, area: cp.light_area(total) }
}

/// `Λ = H Θ`.
pub fn g_lambda_from_theta(theta: f64, high: f64) -> f64 {
    high * theta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eigen: EigenConfig,
    /// Relative change of the objective between outer iterations.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Consecutive iterations with an unchanged region required to stop.
    pub stable_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Values of `u²` closer than this (relative to `max u²`) are one level
    /// in the rearrangement.
    pub tie_tolerance: f64,
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eigen: EigenConfig::default(),
            outer_tol: 1e-8,
            max_outer: 500,
            stable_iterations: 2,
            restarts: 5,
            seed: 0,
            tie_tolerance: 1e-9,
            parallel: true,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::config("restarts must be at least 1"));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::config("outer tolerance must be positive"));
        }
        if self.max_outer == 0 || self.stable_iterations == 0 {
            return Err(Error::config("max_outer and stable_iterations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalPair {
    /// Cell values of the eigenfunction, `‖u‖_M = 1`, `Σ u_i m_i > 0`.
    pub u: Vec<f64>,
    /// Region `S`: the light material in CP mode.
    pub indicator: Indicator,
    /// `Λ` in G mode, `Θ` in CP mode.
    pub eigenvalue: f64,
    /// CP mode only: `h η + H (1 − η)`.
    pub density: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each outer iteration.
    pub history: Vec<f64>,
    pub residual: f64,
    /// Restart that produced this pair.
    pub restart: usize,
}

impl OptimalPair {
    pub fn area(&self, grid: &Grid) -> f64 {
        self.indicator.measure(grid)
    }

    /// Largest relative increase along the objective history.
    pub fn max_ascent(&self) -> f64 {
        self.history.windows(2).map(|w| (w[1] - w[0]) / w[0].abs()).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Random region of measure `area`, drawn from stream `restart` of `seed`.
pub fn random_indicator(grid: &Grid, area: f64, seed: u64, restart: usize) -> Result<Indicator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let field: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
    bathtub_rearrange(grid, &field, area)
}

fn check_area(area: f64, total: f64) -> Result<()> {
    if !(area >= 0.0) || area > total * (1.0 + 1e-12) {
        return Err(Error::domain(format!("area {area} outside [0, |Ω|_h = {total}]")));
    }
    Ok(())
}

fn check_g(params: &GParams, total: f64) -> Result<()> {
    if !(params.alpha > 0.0) || !params.alpha.is_finite() {
        return Err(Error::domain(format!("α = {} must be positive", params.alpha)));
    }
    check_area(params.area, total)
}

/// Lowest objective among converged runs, ties to the lowest restart index.
fn best_of(runs: Vec<Result<OptimalPair>>) -> Result<OptimalPair> {
    let mut best: Option<OptimalPair> = None;
    let mut fallback: Option<OptimalPair> = None;
    for run in runs {
        match run {
            Ok(pair) => {
                if best.as_ref().is_none_or(|b| pair.eigenvalue < b.eigenvalue) {
                    best = Some(pair);
                }
            }
            Err(Error::NotConverged(pair)) => {
                if fallback.as_ref().is_none_or(|b| pair.eigenvalue < b.eigenvalue) {
                    fallback = Some(*pair);
                }
            }
            Err(e) => return Err(e),
        }
    }
    match (best, fallback) {
        (Some(pair), _) => Ok(pair),
        (None, Some(pair)) => Err(Error::NotConverged(Box::new(pair))),
        (None, None) => Err(Error::config("no restarts were run")),
    }
}

/// Best `(G)` pair over `config.restarts` seeded random starts.
pub fn solve_g(problem: &Problem, params: GParams, config: &SolverConfig) -> Result<OptimalPair> {
    best_of(solve_g_all(problem, params, config)?)
}

/// Every restart of a `(G)` solve, in restart order.
pub fn solve_g_all(problem: &Problem, params: GParams, config: &SolverConfig) -> Result<Vec<Result<OptimalPair>>> {
    check_g(&params, problem.total_measure())?;
    config.validate()?;
    Ok(map_indexed(config.restarts, config.parallel, |r| {
        let start = random_indicator(&problem.grid, params.area, config.seed, r)?;
        alternate(problem, Objective::G(params), start, None, config, r, None)
    }))
}

/// One `(G)` run from a given region, optionally warm-started with cell values.
pub fn solve_g_from(problem: &Problem, params: GParams, start: Indicator, warm: Option<&[f64]>, config: &SolverConfig) -> Result<OptimalPair> {
    check_g(&params, problem.total_measure())?;
    config.validate()?;
    Error::check_len(problem.grid.len(), start.fractions.len())?;
    let warm = warm.map(|u| problem.op.map.to_dofs(u));
    alternate(problem, Objective::G(params), start, warm, config, 0, None)
}

/// Best `(CP)` pair over `config.restarts` seeded random starts.
pub fn solve_cp(problem: &Problem, params: CpParams, config: &SolverConfig) -> Result<OptimalPair> {
    best_of(solve_cp_all(problem, params, config)?)
}

/// Every restart of a `(CP)` solve, in restart order.
pub fn solve_cp_all(problem: &Problem, params: CpParams, config: &SolverConfig) -> Result<Vec<Result<OptimalPair>>> {
    let total = problem.total_measure();
    params.validate(total)?;
    config.validate()?;
    let area = params.light_area(total).clamp(0.0, total);
    let factor = factorize(&problem.op.stiffness)?;
    Ok(map_indexed(config.restarts, config.parallel, |r| {
        let start = random_indicator(&problem.grid, area, config.seed, r)?;
        alternate(problem, Objective::Cp(params, area), start, None, config, r, Some(&factor))
    }))
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    G(GParams),
    Cp(CpParams, f64),
}

impl Objective {
    fn area(&self) -> f64 {
        match *self {
            Objective::G(p) => p.area,
            Objective::Cp(_, area) => area,
        }
    }
}

fn density(params: &CpParams, eta: &[f64]) -> Vec<f64> {
    eta.iter().map(|e| params.low * e + params.high * (1.0 - e)).collect()
}

fn alternate(
    problem: &Problem,
    objective: Objective,
    start: Indicator,
    warm: Option<Vec<f64>>,
    config: &SolverConfig,
    restart: usize,
    factor: Option<&Factorization>,
) -> Result<OptimalPair> {
    let grid = &problem.grid;
    let op = &problem.op;
    let mut eta = start;
    let mut warm = warm;
    let mut history = Vec::new();
    let mut stable = 0;
    let mut last: Option<(Vec<f64>, Indicator, f64)> = None;

    for iteration in 1..=config.max_outer {
        let eig = match objective {
            Objective::G(p) => {
                let shift = problem.weight_diagonal(&eta.fractions);
                smallest_eigenpair(&op.stiffness, Some(&shift), p.alpha, op.mass(), warm.as_deref(), &config.eigen)?
            }
            Objective::Cp(p, _) => {
                let mass = problem.weight_diagonal(&density(&p, &eta.fractions));
                let owned;
                let factor = match factor {
                    Some(f) => f,
                    None => {
                        owned = factorize(&op.stiffness)?;
                        &owned
                    }
                };
                inverse_iteration(factor, &op.stiffness, &mass, warm.as_deref(), &config.eigen)?
            }
        };
        let value = eig.eigenvalue;
        let settled = history.last().is_some_and(|&prev: &f64| (value - prev).abs() <= config.outer_tol * value);
        history.push(value);

        let u = problem.cell_values(&eig.vector);
        let next = bathtub_rearrange_with(grid, &u, objective.area(), config.tie_tolerance)?;
        if settled && next.same_partition(&eta) {
            stable += 1;
        } else {
            stable = 0;
        }
        warm = Some(eig.vector);

        if stable >= config.stable_iterations {
            return Ok(finish(objective, u, next, value, iteration, true, history, eig.residual, restart));
        }
        last = Some((u, next.clone(), eig.residual));
        eta = next;
    }
    let (u, indicator, residual) = last.expect("max_outer >= 1");
    let value = *history.last().expect("at least one iteration");
    Err(Error::NotConverged(Box::new(finish(objective, u, indicator, value, config.max_outer, false, history, residual, restart))))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    objective: Objective,
    u: Vec<f64>,
    indicator: Indicator,
    eigenvalue: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
    residual: f64,
    restart: usize,
) -> OptimalPair {
    let density = match objective {
        Objective::G(_) => None,
        Objective::Cp(p, _) => Some(density(&p, &indicator.fractions)),
    };
    OptimalPair { u, indicator, eigenvalue, density, iterations, converged, history, residual, restart }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaStep {
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBarResult {
    pub area: f64,
    /// `μ(Ω)`, the starting point.
    pub mu: f64,
    pub alpha_bar: f64,
    /// `(α_k, Λ(α_k, A))` along the iteration.
    pub iterates: Vec<AlphaStep>,
    /// `|α_{k+1} − α_k| / |α_k − α_{k−1}|`.
    pub ratios: Vec<f64>,
    /// `|Λ(ᾱ, A) − ᾱ| / ᾱ`, from one extra evaluation at the returned value.
    pub defect: f64,
    /// `A / |Ω|_h`.
    pub lipschitz_bound: f64,
    pub converged: bool,
}

impl AlphaBarResult {
    /// Largest contraction ratio among steps whose denominator exceeds
    /// `min_step · α`; smaller steps are dominated by solver noise.
    pub fn observed_ratio(&self, min_step: f64) -> f64 {
        let alphas: Vec<f64> = self.iterates.iter().map(|s| s.alpha).chain(std::iter::once(self.alpha_bar)).collect();
        alphas
            .windows(3)
            .filter(|w| (w[1] - w[0]).abs() > min_step * w[1].abs())
            .map(|w| (w[2] - w[1]).abs() / (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig { tol: 1e-9, max_steps: 200 }
    }
}

/// `ᾱ(A)`, the fixed point of `α ↦ Λ(α, A)`, by Banach iteration from `μ(Ω)`.
///
/// The first evaluation uses seeded restarts; later ones start from the
/// previous optimal region and eigenfunction.
pub fn find_alpha_bar(problem: &Problem, area: f64, config: &SolverConfig, fixed: &FixedPointConfig) -> Result<(AlphaBarResult, OptimalPair)> {
    let total = problem.total_measure();
    check_area(area, total)?;
    if area >= total * (1.0 - 1e-12) {
        return Err(Error::domain("ᾱ(A) requires A < |Ω|_h"));
    }
    let mu = problem.unweighted(&config.eigen)?.eigenvalue;
    let mut alpha = mu;
    let mut pair = solve_g(problem, GParams { alpha, area }, config)?;
    let mut iterates = Vec::new();
    let mut converged = false;
    for _ in 0..fixed.max_steps {
        let lambda = pair.eigenvalue;
        iterates.push(AlphaStep { alpha, lambda });
        let next = lambda;
        let step = (next - alpha).abs();
        let prev_alpha = alpha;
        alpha = next;
        pair = solve_g_from(problem, GParams { alpha, area }, pair.indicator.clone(), Some(&pair.u), config)?;
        if step <= fixed.tol * prev_alpha {
            converged = true;
            break;
        }
    }
    let alphas: Vec<f64> = iterates.iter().map(|s| s.alpha).chain(std::iter::once(alpha)).collect();
    let ratios = alphas.windows(3).map(|w| (w[2] - w[1]).abs() / (w[1] - w[0]).abs()).filter(|r| r.is_finite()).collect();
    let result = AlphaBarResult {
        area,
        mu,
        alpha_bar: alpha,
        iterates,
        ratios,
        defect: (pair.eigenvalue - alpha).abs() / alpha,
        lipschitz_bound: area / total,
        converged,
    };
    if converged {
        Ok((result, pair))
    } else {
        Err(Error::FixedPointNotConverged(Box::new(result)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig { restarts: 2, ..SolverConfig::default() }
    }

    #[test]
    fn cp_translation_formulas() {
        let cp = CpParams { low: 1.0, high: 2.0, mass: 1.5 };
        assert_eq!(cp.light_area(1.0), 0.5);
        let g = cp_to_g(&cp, 10.0, 1.0);
        assert_eq!(g.alpha, 10.0);
        assert_eq!(g.area, 0.5);
        assert_eq!(g_lambda_from_theta(10.0, 2.0), 20.0);
    }

    #[test]
    fn cp_validation() {
        let t = 1.0;
        assert!(CpParams { low: 1.0, high: 1.0, mass: 1.0 }.validate(t).is_err());
        assert!(CpParams { low: 1.0, high: 2.0, mass: 2.5 }.validate(t).is_err());
        assert!(CpParams { low: 1.0, high: 2.0, mass: 0.5 }.validate(t).is_err());
        assert!(CpParams { low: 0.0, high: 2.0, mass: 1.0 }.validate(t).is_err());
        assert!(CpParams { low: 0.0, high: 2.0, mass: 2.0 }.validate(t).is_ok());
        assert!(CpParams { low: -1.0, high: 2.0, mass: 1.0 }.validate(t).is_err());
    }

    #[test]
    fn random_indicator_is_seeded() {
        let grid = build_grid(Domain::square(8)).unwrap();
        let a = random_indicator(&grid, 0.3, 7, 1).unwrap();
        let b = random_indicator(&grid, 0.3, 7, 1).unwrap();
        let c = random_indicator(&grid, 0.3, 7, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.fractions, c.fractions);
        assert!((a.measure(&grid) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn small_square_g_run_descends_and_is_consistent() {
        let problem = Problem::new(Domain::square(16), BoundaryCondition::Navier).unwrap();
        let area = 0.3 * problem.total_measure();
        let pair = solve_g(&problem, GParams { alpha: 100.0, area }, &cfg()).unwrap();
        assert!(pair.converged);
        assert!(pair.max_ascent() <= 1e-9);
        assert!(pair.indicator.is_sublevel_set_of(&pair.u));
        let again = bathtub_rearrange_with(&problem.grid, &pair.u, area, SolverConfig::default().tie_tolerance).unwrap();
        assert!(again.same_partition(&pair.indicator));
    }

    #[test]
    fn h_zero_full_mass_is_plain_eigenproblem() {
        let problem = Problem::new(Domain::square(12), BoundaryCondition::Navier).unwrap();
        let total = problem.total_measure();
        let mu = problem.unweighted(&EigenConfig::default()).unwrap().eigenvalue;
        let pair = solve_cp(&problem, CpParams { low: 0.0, high: 2.0, mass: 2.0 * total }, &cfg()).unwrap();
        assert!((pair.eigenvalue - mu / 2.0).abs() < 1e-8 * mu);
        assert!(pair.density.unwrap().iter().all(|&r| r == 2.0));
    }

    #[test]
    fn alpha_bar_rejects_full_area() {
        let problem = Problem::new(Domain::square(8), BoundaryCondition::Navier).unwrap();
        let total = problem.total_measure();
        assert!(matches!(find_alpha_bar(&problem, total, &cfg(), &FixedPointConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn g_rejects_bad_params() {
        let problem = Problem::new(Domain::square(8), BoundaryCondition::Navier).unwrap();
        assert!(solve_g(&problem, GParams { alpha: 0.0, area: 0.1 }, &cfg()).is_err());
        assert!(solve_g(&problem, GParams { alpha: 1.0, area: -0.1 }, &cfg()).is_err());
        assert!(solve_g(&problem, GParams { alpha: 1.0, area: 5.0 }, &cfg()).is_err());
        let zero = SolverConfig { restarts: 0, ..cfg() };
        assert!(matches!(solve_g(&problem, GParams { alpha: 1.0, area: 0.1 }, &zero), Err(Error::Config(_))));
    }
}
