mod common;

use std::f64::consts::PI;

use common::{clamped_beta, dense_solve, j01, rel};
use plate_forge::eigen::{factorize, rayleigh, smallest_eigenpair, EigenConfig};
use plate_forge::grid::{build_grid, Domain};
use plate_forge::operator::{assemble_bilaplacian, assemble_laplacian, BoundaryCondition};
use plate_forge::sparse::{BandCholesky, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BCS: [BoundaryCondition; 2] = [BoundaryCondition::Navier, BoundaryCondition::Dirichlet];

fn all_domains() -> [Domain; 3] {
    [Domain::square(12), Domain::disk(16), Domain::radial(20)]
}

#[test]
fn bessel_oracles_are_accurate() {
    assert!((j01() - 2.404825557695773).abs() < 1e-12);
    assert!((clamped_beta() - 3.196220616582).abs() < 1e-9);
}

#[test]
fn square_laplacian_matches_discrete_and_continuum_spectrum() {
    let grid = build_grid(Domain::square(64)).unwrap();
    let a = assemble_laplacian(&grid);
    let r = smallest_eigenpair(&a, None, 0.0, &grid.cell_measure, None, &EigenConfig::default()).unwrap();
    let h = grid.h;
    let discrete = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
    assert!(rel(r.eigenvalue, discrete) < 1e-9);
    assert!(rel(r.eigenvalue, 2.0 * PI * PI) < 5e-3);
}

#[test]
fn radial_laplacian_matches_bessel_zero() {
    let grid = build_grid(Domain::radial(200)).unwrap();
    let a = assemble_laplacian(&grid);
    let r = smallest_eigenpair(&a, None, 0.0, &grid.cell_measure, None, &EigenConfig::default()).unwrap();
    assert!(rel(r.eigenvalue, j01().powi(2)) < 5e-3);
}

#[test]
fn navier_square_maps_sine_mode_exactly() {
    let grid = build_grid(Domain::square(16)).unwrap();
    let op = assemble_bilaplacian(&grid, BoundaryCondition::Navier);
    let h = grid.h;
    let mu = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
    let v: Vec<f64> = (0..grid.len())
        .map(|i| {
            let [x, y] = grid.center(i);
            (PI * x).sin() * (PI * y).sin()
        })
        .collect();
    let kv = op.stiffness.apply(&v);
    for i in 0..grid.len() {
        assert!((kv[i] - mu * mu * grid.cell_measure[i] * v[i]).abs() < 1e-9 * mu * mu * grid.cell_measure[i]);
    }
}

#[test]
fn clamped_square_ghost_rows() {
    let grid = build_grid(Domain::square(8)).unwrap();
    let op = assemble_bilaplacian(&grid, BoundaryCondition::Dirichlet);
    let h4 = grid.h.powi(4);
    let scaled = |c: usize| op.stiffness.get(c, c) * h4 / grid.cell_measure[c];
    let side = grid.lattice_side() as i64;
    let edge = grid.cell_at(0, side / 2).unwrap();
    let corner = grid.cell_at(0, 0).unwrap();
    let inner = grid.cell_at(side / 2, side / 2).unwrap();
    assert!((scaled(inner) - 20.0).abs() < 1e-9);
    assert!((scaled(edge) - 21.0).abs() < 1e-9);
    assert!((scaled(corner) - 22.0).abs() < 1e-9);
}

#[test]
fn band_solve_matches_dense_on_beam_operator() {
    let n = 8;
    let h = 1.0 / (n + 1) as f64;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        l[i][i] = 2.0 / (h * h);
        if i + 1 < n {
            l[i][i + 1] = -1.0 / (h * h);
            l[i + 1][i] = -1.0 / (h * h);
        }
    }
    let k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (0..n).map(|m| l[i][m] * l[m][j]).sum()).collect()).collect();
    let sparse = SparseOperator::from_dense(&k);
    assert_eq!(sparse.bandwidth(), 2);
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
    let x = BandCholesky::factor(&sparse).unwrap().solve(&b);
    let y = dense_solve(&k, &b);
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() <= 1e-10 * scale);
    }
}

#[test]
fn band_solve_matches_dense_on_plate_operators() {
    for domain in [Domain::square(6), Domain::disk(8), Domain::radial(10)] {
        for bc in BCS {
            let grid = build_grid(domain).unwrap();
            let op = assemble_bilaplacian(&grid, bc);
            let dense = op.stiffness.to_dense();
            let b: Vec<f64> = (0..op.dofs()).map(|i| 1.0 + (i as f64).sin()).collect();
            let x = factorize(&op.stiffness).unwrap().solve(&b);
            let y = dense_solve(&dense, &b);
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-9 * scale, "{domain:?} {bc:?}");
            }
        }
    }
}

#[test]
fn assemblies_are_symmetric_and_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for domain in all_domains() {
        for bc in BCS {
            let grid = build_grid(domain).unwrap();
            let op = assemble_bilaplacian(&grid, bc);
            assert_eq!(op.stiffness.symmetry_defect(), 0.0, "{domain:?} {bc:?}");
            assert!(factorize(&op.stiffness).is_ok());
            for _ in 0..100 {
                let u: Vec<f64> = (0..op.dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(op.stiffness.quad_form(&u) > 0.0);
            }
        }
        assert_eq!(assemble_laplacian(&build_grid(domain).unwrap()).symmetry_defect(), 0.0);
    }
}

/// Max error of `W⁻¹ K f` against `Δ²f` over nodes in `[0.25, 0.75]²`.
fn interior_consistency(n: usize, bc: BoundaryCondition) -> f64 {
    let grid = build_grid(Domain::square(n)).unwrap();
    let op = assemble_bilaplacian(&grid, bc);
    // Navier: the simply supported beam profile; Dirichlet: the clamped one.
    let (g, g2, g4): (fn(f64) -> f64, fn(f64) -> f64, fn(f64) -> f64) = match bc {
        BoundaryCondition::Navier => (|x| x - 2.0 * x.powi(3) + x.powi(4), |x| -12.0 * x + 12.0 * x * x, |_| 24.0),
        BoundaryCondition::Dirichlet => (|x| (x * (1.0 - x)).powi(2), |x| 2.0 - 12.0 * x + 12.0 * x * x, |_| 24.0),
    };
    let f: Vec<f64> = (0..grid.len())
        .map(|i| {
            let [x, y] = grid.center(i);
            g(x) * g(y)
        })
        .collect();
    let kf = op.stiffness.apply(&f);
    (0..grid.len())
        .filter(|&i| {
            let [x, y] = grid.center(i);
            (0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y)
        })
        .map(|i| {
            let [x, y] = grid.center(i);
            let exact = g4(x) * g(y) + 2.0 * g2(x) * g2(y) + g(x) * g4(y);
            (kf[i] / grid.cell_measure[i] - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn interior_consistency_is_second_order() {
    for bc in BCS {
        let coarse = interior_consistency(16, bc);
        let fine = interior_consistency(32, bc);
        let order = (coarse / fine).log2();
        assert!(order > 1.8, "{bc:?}: observed order {order}");
    }
}

#[test]
fn eigenvalue_is_below_random_rayleigh_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for domain in all_domains() {
        for bc in BCS {
            let grid = build_grid(domain).unwrap();
            let op = assemble_bilaplacian(&grid, bc);
            let shift = op.map.restrict(&grid.cell_measure.iter().enumerate().map(|(i, m)| if i % 3 == 0 { *m } else { 0.0 }).collect::<Vec<_>>());
            let r = smallest_eigenpair(&op.stiffness, Some(&shift), 40.0, op.mass(), None, &EigenConfig::default()).unwrap();
            assert!(rel(rayleigh(&r.vector, &op.stiffness, 40.0, Some(&shift), op.mass()).unwrap(), r.eigenvalue) < 1e-9);
            for _ in 0..50 {
                let w: Vec<f64> = (0..op.dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let q = rayleigh(&w, &op.stiffness, 40.0, Some(&shift), op.mass()).unwrap();
                assert!(r.eigenvalue <= q * (1.0 + 1e-12));
            }
            for pair in r.history.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{domain:?} {bc:?}");
            }
        }
    }
}

#[test]
fn warm_start_reaches_the_cold_start_answer() {
    let grid = build_grid(Domain::disk(24)).unwrap();
    let op = assemble_bilaplacian(&grid, BoundaryCondition::Navier);
    let cfg = EigenConfig::default();
    let cold = smallest_eigenpair(&op.stiffness, None, 0.0, op.mass(), None, &cfg).unwrap();
    let nudged: Vec<f64> = cold.vector.iter().enumerate().map(|(i, x)| x + 0.01 * (i as f64).sin()).collect();
    let warm = smallest_eigenpair(&op.stiffness, None, 0.0, op.mass(), Some(&nudged), &cfg).unwrap();
    assert!(rel(warm.eigenvalue, cold.eigenvalue) < 1e-10);
    assert!(warm.iterations <= cold.iterations);
    assert!(cold.vector.iter().zip(op.mass()).map(|(x, m)| x * m).sum::<f64>() > 0.0);
}

#[test]
fn constant_weight_scales_the_form() {
    let grid = build_grid(Domain::square(10)).unwrap();
    let u: Vec<f64> = (0..grid.len()).map(|i| (i as f64).cos()).collect();
    let unit = plate_forge::operator::assemble_weight(&grid, &vec![1.0; grid.len()]).unwrap();
    let heavy = plate_forge::operator::assemble_weight(&grid, &vec![2.5; grid.len()]).unwrap();
    assert!(unit.entries.iter().all(|&e| (e - grid.h * grid.h).abs() < 1e-15));
    assert!(rel(heavy.form(&u), 2.5 * unit.form(&u)) < 1e-14);
}
