//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use plate_forge::bathtub::weighted_functional;
use plate_forge::grid::{build_grid, Domain, Grid};

/// `Σ_k s^k (x/2)^{2k+ν} / (k! (k+ν)!)` with `s = −1` for `J_ν`, `+1` for `I_ν`.
fn bessel_series(nu: u32, x: f64, sign: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        term *= sign * half * half / (k as f64 * (k + nu) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn j0(x: f64) -> f64 {
    bessel_series(0, x, -1.0)
}

pub fn j1(x: f64) -> f64 {
    bessel_series(1, x, -1.0)
}

pub fn i0(x: f64) -> f64 {
    bessel_series(0, x, 1.0)
}

pub fn i1(x: f64) -> f64 {
    bessel_series(1, x, 1.0)
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) < 0.0, "root not bracketed");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < 1e-15 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// First zero of `J₀`.
pub fn j01() -> f64 {
    bisect(j0, 2.0, 3.0)
}

/// First root of the clamped-plate frequency equation `J₀ I₁ + I₀ J₁ = 0`.
pub fn clamped_beta() -> f64 {
    bisect(|b| j0(b) * i1(b) + i0(b) * j1(b), 2.5, 3.5)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &r)| row.iter().copied().chain([r]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Minimum of `Σ η_i u_i² m_i` over the vertices of `{0 ≤ η ≤ 1, Σ η_i m_i = A}`:
/// every vertex has at most one fractional entry.
pub fn vertex_minimum(grid: &Grid, u: &[f64], area: f64) -> f64 {
    let n = grid.len();
    let m = &grid.cell_measure;
    let mut best = f64::INFINITY;
    for free in 0..n {
        for mask in 0u32..(1 << (n - 1)) {
            let mut eta = vec![0.0; n];
            let mut used = 0.0;
            let mut bit = 0;
            for (i, e) in eta.iter_mut().enumerate() {
                if i == free {
                    continue;
                }
                if mask >> bit & 1 == 1 {
                    *e = 1.0;
                    used += m[i];
                }
                bit += 1;
            }
            let f = (area - used) / m[free];
            if !(-1e-12..=1.0 + 1e-12).contains(&f) {
                continue;
            }
            eta[free] = f.clamp(0.0, 1.0);
            best = best.min(weighted_functional(grid, &eta, u));
        }
    }
    best
}

pub fn small_grids() -> Vec<Grid> {
    let mut grids = vec![build_grid(Domain::square(4)).unwrap(), build_grid(Domain::disk(4)).unwrap()];
    grids.extend((4..=12).map(|n| build_grid(Domain::radial(n)).unwrap()));
    grids
}
