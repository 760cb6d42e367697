//! Diagnostics for optimal pairs: positivity, radial symmetry and annulus
//! geometry on the disk, boundary-condition comparison, parameter sweeps and
//! the radial-vs-Cartesian disk cross-check.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bathtub::Indicator;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::grid::{shell_radius, Domain, Grid};
use crate::operator::BoundaryCondition;
use crate::optimize::{solve_cp, solve_g, CpParams, GParams, OptimalPair, Problem, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min: f64,
    /// Cell attaining the minimum.
    pub cell: usize,
    pub location: [f64; 2],
    pub pass: bool,
}

pub fn check_positivity(grid: &Grid, u: &[f64]) -> Result<PositivityReport> {
    Error::check_len(grid.len(), u.len())?;
    let (cell, &min) = u
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::domain("empty state field"))?;
    Ok(PositivityReport { min, cell, location: grid.center(cell), pass: min > 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    /// Outer edge of the bin.
    pub radius: f64,
    pub mean: f64,
    /// Mean fraction of `S` in the bin.
    pub fill: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max |u ∘ g − u| / max |u|` for each dihedral map `g`; empty on the radial grid.
    pub dihedral_defects: Vec<f64>,
    pub max_dihedral_defect: f64,
    /// `max |u_i − mean of its bin| / max |u|`.
    pub radial_scatter: f64,
    /// Radial bins of width `h`.
    pub profile: Vec<ProfileBin>,
    /// Bins whose mean exceeds that of the previous bin.
    pub increases: usize,
    /// At most one increasing bin.
    pub non_increasing: bool,
    /// Outer edge of the last bin mostly outside `S`.
    pub interface_radius: Option<f64>,
    /// Profile drops strictly from the last bin outside `S` to the first inside.
    pub interface_drop: bool,
    /// `r(A)` for the measure of `S`.
    pub shell_radius: f64,
    /// `Σ |η_i − χ(r_i > r(A))| m_i`.
    pub annulus_mismatch: f64,
}

/// Symmetry diagnostics of `u` and `S` on a disk grid.
pub fn check_radial(grid: &Grid, u: &[f64], indicator: &Indicator) -> Result<SymmetryReport> {
    if !grid.kind().is_disk() {
        return Err(Error::domain("radial diagnostics need a disk grid"));
    }
    Error::check_len(grid.len(), u.len())?;
    Error::check_len(grid.len(), indicator.fractions.len())?;
    let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::domain("state field is zero"));
    }

    let dihedral_defects: Vec<f64> = grid
        .symmetry_maps
        .iter()
        .map(|map| map.iter().enumerate().map(|(i, &j)| (u[j] - u[i]).abs()).fold(0.0, f64::max) / scale)
        .collect();
    let max_dihedral_defect = dihedral_defects.iter().copied().fold(0.0, f64::max);

    let h = grid.h;
    let bins = (1.0 / h).ceil() as usize;
    let bin_of = |cell: usize| ((grid.radius(cell) / h) as usize).min(bins - 1);
    let mut sum = vec![0.0; bins];
    let mut fill = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for i in 0..grid.len() {
        let b = bin_of(i);
        sum[b] += u[i];
        fill[b] += indicator.fractions[i];
        count[b] += 1;
    }
    let profile: Vec<ProfileBin> = (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| ProfileBin {
            radius: (b + 1) as f64 * h,
            mean: sum[b] / count[b] as f64,
            fill: fill[b] / count[b] as f64,
            count: count[b],
        })
        .collect();
    let radial_scatter = (0..grid.len())
        .map(|i| {
            let b = bin_of(i);
            (u[i] - sum[b] / count[b] as f64).abs()
        })
        .fold(0.0, f64::max)
        / scale;

    let increases = profile.windows(2).filter(|w| w[1].mean > w[0].mean).count();
    let outside = profile.iter().rposition(|b| b.fill < 0.5);
    let (interface_radius, interface_drop) = match outside {
        Some(k) if k + 1 < profile.len() => (Some(profile[k].radius), profile[k + 1].mean < profile[k].mean),
        Some(k) => (Some(profile[k].radius), true),
        None => (None, true),
    };

    let area = indicator.measure(grid).min(std::f64::consts::PI);
    let r_shell = shell_radius(area)?;
    let annulus_mismatch = (0..grid.len())
        .map(|i| {
            let target = if grid.radius(i) > r_shell { 1.0 } else { 0.0 };
            (indicator.fractions[i] - target).abs() * grid.cell_measure[i]
        })
        .sum();

    Ok(SymmetryReport {
        dihedral_defects,
        max_dihedral_defect,
        radial_scatter,
        profile,
        increases,
        non_increasing: increases <= 1,
        interface_radius,
        interface_drop,
        shell_radius: r_shell,
        annulus_mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcComparison {
    pub params: CpParams,
    pub theta_navier: f64,
    pub theta_dirichlet: f64,
    /// `Θ_D − Θ_N`.
    pub difference: f64,
    /// `Θ_D / Θ_N`.
    pub ratio: f64,
    pub navier: OptimalPair,
    pub dirichlet: OptimalPair,
}

/// Solves the same composite problem under both boundary conditions.
pub fn compare_bc(domain: Domain, params: CpParams, config: &SolverConfig) -> Result<BcComparison> {
    compare_pair(domain, [BoundaryCondition::Navier, BoundaryCondition::Dirichlet], params, config)
}

/// `compare_bc` with explicit conditions; `[bc, bc]` gives a zero difference.
pub fn compare_pair(domain: Domain, bcs: [BoundaryCondition; 2], params: CpParams, config: &SolverConfig) -> Result<BcComparison> {
    let mut pairs = map_indexed(2, config.parallel, |k| {
        let problem = Problem::new(domain, bcs[k])?;
        solve_cp(&problem, params, config)
    })
    .into_iter();
    let navier = pairs.next().expect("two solves")?;
    let dirichlet = pairs.next().expect("two solves")?;
    Ok(BcComparison {
        params,
        theta_navier: navier.eigenvalue,
        theta_dirichlet: dirichlet.eigenvalue,
        difference: dirichlet.eigenvalue - navier.eigenvalue,
        ratio: dirichlet.eigenvalue / navier.eigenvalue,
        navier,
        dirichlet,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Area,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub area: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    /// `Λ` strictly increasing along the rows.
    pub increasing: bool,
    /// `Λ` non-decreasing up to `1e-9` relative.
    pub non_decreasing: bool,
    /// Largest slope `ΔΛ/Δα` between consecutive rows (α sweeps only).
    pub max_slope: Option<f64>,
    /// `A / |Ω|_h` (α sweeps only).
    pub lipschitz_bound: Option<f64>,
    /// `max_slope ≤ 1.05 · lipschitz_bound`.
    pub lipschitz_ok: Option<bool>,
    /// `Λ − α` strictly decreasing (α sweeps only).
    pub gap_decreasing: Option<bool>,
    /// Consecutive α values across which `Λ − α` changes sign.
    pub bracket: Option<(f64, f64)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,area,lambda,gap,iterations,residual\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{},{:e}", r.alpha, r.area, r.lambda, r.lambda - r.alpha, r.iterations, r.residual);
        }
        out
    }
}

/// `Λ(α, A)` over `values` of the swept parameter, the other one held at `fixed`.
pub fn sweep(problem: &Problem, parameter: SweepParameter, values: &[f64], fixed: f64, config: &SolverConfig) -> Result<SweepTable> {
    if values.len() < 3 {
        return Err(Error::config("a sweep needs at least 3 points"));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let params = |v: f64| match parameter {
        SweepParameter::Alpha => GParams { alpha: v, area: fixed },
        SweepParameter::Area => GParams { alpha: fixed, area: v },
    };
    let solved = map_indexed(values.len(), config.parallel, |k| solve_g(problem, params(values[k]), config));
    let mut rows = Vec::with_capacity(values.len());
    for (v, pair) in values.iter().zip(solved) {
        let pair = pair?;
        let p = params(*v);
        rows.push(SweepRow { alpha: p.alpha, area: p.area, lambda: pair.eigenvalue, iterations: pair.iterations, residual: pair.residual });
    }
    Ok(tabulate(parameter, rows, problem.total_measure()))
}

fn tabulate(parameter: SweepParameter, rows: Vec<SweepRow>, total: f64) -> SweepTable {
    let increasing = rows.windows(2).all(|w| w[1].lambda > w[0].lambda);
    let non_decreasing = rows.windows(2).all(|w| w[1].lambda >= w[0].lambda * (1.0 - 1e-9));
    let (mut max_slope, mut lipschitz_bound, mut lipschitz_ok, mut gap_decreasing, mut bracket) = (None, None, None, None, None);
    if parameter == SweepParameter::Alpha {
        let bound = rows[0].area / total;
        let slope = rows
            .windows(2)
            .map(|w| (w[1].lambda - w[0].lambda) / (w[1].alpha - w[0].alpha))
            .fold(f64::NEG_INFINITY, f64::max);
        max_slope = Some(slope);
        lipschitz_bound = Some(bound);
        lipschitz_ok = Some(slope <= bound * 1.05 + 1e-12);
        gap_decreasing = Some(rows.windows(2).all(|w| w[1].lambda - w[1].alpha < w[0].lambda - w[0].alpha));
        bracket = rows
            .windows(2)
            .find(|w| (w[0].lambda - w[0].alpha) > 0.0 && (w[1].lambda - w[1].alpha) <= 0.0)
            .map(|w| (w[0].alpha, w[1].alpha));
    }
    SweepTable { parameter, rows, increasing, non_decreasing, max_slope, lipschitz_bound, lipschitz_ok, gap_decreasing, bracket }
}

/// Problem data for a disk cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskParams {
    G(GParams),
    Cp(CpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub n1d: usize,
    pub n2d: usize,
    pub eigenvalue_1d: f64,
    pub eigenvalue_2d: f64,
    /// `|λ_2D − λ_1D| / λ_1D`.
    pub eigenvalue_gap: f64,
    /// `max |u_2D − u_1D(r)| / max u_1D`, with `u_1D` interpolated in `r`.
    pub profile_gap: f64,
    pub annulus_mismatch_1d: f64,
    pub annulus_mismatch_2d: f64,
    /// Measure of a one-cell band around the shell circle on the 2D grid.
    pub band_2d: f64,
    pub symmetry: SymmetryReport,
}

/// Solves on the radial grid and on the masked Cartesian disk and compares.
///
/// In CP mode the mass is given for the exact disk and rescaled by
/// `|Ω|_h / π` on each grid, so both carry the same mean density.
pub fn cross_validate_disk(params: DiskParams, bc: BoundaryCondition, n1d: usize, n2d: usize, config: &SolverConfig) -> Result<CrossValidation> {
    let domains = [Domain::radial(n1d), Domain::disk(n2d)];
    let mut runs = map_indexed(2, config.parallel, |k| -> Result<(Problem, OptimalPair)> {
        let problem = Problem::new(domains[k], bc)?;
        let pair = match params {
            DiskParams::G(p) => solve_g(&problem, p, config)?,
            DiskParams::Cp(p) => {
                let scaled = CpParams { mass: p.mass * problem.total_measure() / std::f64::consts::PI, ..p };
                solve_cp(&problem, scaled, config)?
            }
        };
        Ok((problem, pair))
    })
    .into_iter();
    let (radial, p1) = runs.next().expect("two solves")?;
    let (disk, p2) = runs.next().expect("two solves")?;

    let r1: Vec<f64> = (0..radial.grid.len()).map(|i| radial.grid.radius(i)).collect();
    let scale = p1.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let profile_gap = (0..disk.grid.len())
        .map(|i| (p2.u[i] - interpolate(&r1, &p1.u, disk.grid.radius(i))).abs())
        .fold(0.0, f64::max)
        / scale;

    let sym1 = check_radial(&radial.grid, &p1.u, &p1.indicator)?;
    let symmetry = check_radial(&disk.grid, &p2.u, &p2.indicator)?;
    let band_2d = 2.0 * std::f64::consts::PI * symmetry.shell_radius * disk.grid.h;
    Ok(CrossValidation {
        n1d,
        n2d,
        eigenvalue_1d: p1.eigenvalue,
        eigenvalue_2d: p2.eigenvalue,
        eigenvalue_gap: (p2.eigenvalue - p1.eigenvalue).abs() / p1.eigenvalue,
        profile_gap,
        annulus_mismatch_1d: sym1.annulus_mismatch,
        annulus_mismatch_2d: symmetry.annulus_mismatch,
        band_2d,
        symmetry,
    })
}

/// Piecewise-linear in `r`, constant below the first node, zero at `r = 1`.
fn interpolate(nodes: &[f64], values: &[f64], r: f64) -> f64 {
    let last = nodes.len() - 1;
    if r <= nodes[0] {
        return values[0];
    }
    if r >= nodes[last] {
        let t = ((r - nodes[last]) / (1.0 - nodes[last])).min(1.0);
        return values[last] * (1.0 - t);
    }
    let k = nodes.partition_point(|&x| x <= r) - 1;
    let t = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] * (1.0 - t) + values[k + 1] * t
}
