//! Discrete domains: the unit square, the unit disk as a masked Cartesian
//! grid, and a one-dimensional cell-centered radial grid for the disk.
//!
//! Every grid carries its own total measure `|Ω|_h = Σ cell_measure`. All
//! constraints (areas, masses) are expressed against that discrete value so
//! that identities hold exactly on the mesh.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `n` for any domain.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    UnitSquare,
    UnitDisk,
    RadialDisk,
}

impl DomainKind {
    pub fn is_disk(self) -> bool {
        matches!(self, DomainKind::UnitDisk | DomainKind::RadialDisk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    /// Cells per side (square, disk) or radial cells.
    pub n: usize,
}

impl Domain {
    pub fn new(kind: DomainKind, n: usize) -> Self {
        Domain { kind, n }
    }

    pub fn square(n: usize) -> Self {
        Domain::new(DomainKind::UnitSquare, n)
    }

    pub fn disk(n: usize) -> Self {
        Domain::new(DomainKind::UnitDisk, n)
    }

    pub fn radial(n: usize) -> Self {
        Domain::new(DomainKind::RadialDisk, n)
    }
}

/// What lies across one face of a 2D cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// Another interior cell.
    Cell(usize),
    /// The boundary ∂Ω, crossed at `fraction · h` from the cell center
    /// (`fraction ∈ (0, 1]`; exactly 1 on the square).
    Wall { fraction: f64 },
}

impl Link {
    pub fn is_wall(&self) -> bool {
        matches!(self, Link::Wall { .. })
    }
}

/// Face directions of a 2D cell, in the order used by [`Grid::neighbors`].
pub const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    /// Grid spacing.
    pub h: f64,
    /// Side length of the lattice used for the interior index map (2D only).
    lattice_side: usize,
    /// Lattice slot → interior index. Bijective onto `0..len()`.
    lattice_index: Vec<Option<usize>>,
    /// Interior index → lattice coordinates (2D) or radial index.
    coords: Vec<(i64, i64)>,
    centers: Vec<[f64; 2]>,
    pub cell_measure: Vec<f64>,
    pub total_measure: f64,
    /// 2D face neighbors in [`DIRECTIONS`] order; empty for the radial grid.
    pub neighbors: Vec<[Link; 4]>,
    /// Cell touches ∂Ω through a face.
    pub boundary_flags: Vec<bool>,
    /// Index permutations induced by the eight dihedral symmetries of the
    /// lattice (2D grids); identity first.
    pub symmetry_maps: Vec<Vec<usize>>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.cell_measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_measure.is_empty()
    }

    pub fn kind(&self) -> DomainKind {
        self.domain.kind
    }

    /// Cell center; `[r, 0]` on the radial grid.
    pub fn center(&self, cell: usize) -> [f64; 2] {
        self.centers[cell]
    }

    pub fn radius(&self, cell: usize) -> f64 {
        let [x, y] = self.centers[cell];
        x.hypot(y)
    }

    pub fn lattice_side(&self) -> usize {
        self.lattice_side
    }

    pub fn lattice_coords(&self, cell: usize) -> (i64, i64) {
        self.coords[cell]
    }

    /// Interior index of lattice slot `(i, j)`, if it is an interior cell.
    pub fn cell_at(&self, i: i64, j: i64) -> Option<usize> {
        let side = self.lattice_side as i64;
        if i < 0 || j < 0 || i >= side || j >= side {
            return None;
        }
        self.lattice_index[(j * side + i) as usize]
    }

    fn from_cells(domain: Domain, h: f64, lattice_side: usize, coords: Vec<(i64, i64)>, centers: Vec<[f64; 2]>, cell_measure: Vec<f64>) -> Self {
        let mut lattice_index = vec![None; lattice_side * lattice_side];
        if domain.kind != DomainKind::RadialDisk {
            for (k, &(i, j)) in coords.iter().enumerate() {
                lattice_index[j as usize * lattice_side + i as usize] = Some(k);
            }
        }
        let total_measure = cell_measure.iter().sum();
        let n_cells = coords.len();
        Grid {
            domain,
            h,
            lattice_side,
            lattice_index,
            coords,
            centers,
            cell_measure,
            total_measure,
            neighbors: Vec::new(),
            boundary_flags: vec![false; n_cells],
            symmetry_maps: Vec::new(),
        }
    }
}

pub fn build_grid(domain: Domain) -> Result<Grid> {
    if domain.n < MIN_CELLS {
        return Err(Error::config(format!("grid needs n >= {MIN_CELLS}, got {}", domain.n)));
    }
    let grid = match domain.kind {
        DomainKind::UnitSquare => build_square(domain),
        DomainKind::UnitDisk => build_disk(domain),
        DomainKind::RadialDisk => build_radial(domain),
    };
    Ok(grid)
}

// Nodes (i h, j h), 1 <= i, j <= n-1; the boundary layer i, j in {0, n} is
// excluded. Lattice slot i is stored at i - 1.
fn build_square(domain: Domain) -> Grid {
    let n = domain.n;
    let h = 1.0 / n as f64;
    let side = n - 1;
    let mut coords = Vec::with_capacity(side * side);
    let mut centers = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            coords.push((i as i64, j as i64));
            centers.push([(i + 1) as f64 * h, (j + 1) as f64 * h]);
        }
    }
    let measure = vec![h * h; coords.len()];
    let mut grid = Grid::from_cells(domain, h, side, coords, centers, measure);
    fill_links(&mut grid, |_, _| 1.0);
    grid.symmetry_maps = dihedral_maps(&grid);
    grid
}

// Cell centers -1 + (i + 1/2) h with h = 2/n; interior iff |x| < 1.
fn build_disk(domain: Domain) -> Grid {
    let n = domain.n;
    let h = 2.0 / n as f64;
    let mut coords = Vec::new();
    let mut centers = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let x = -1.0 + (i as f64 + 0.5) * h;
            let y = -1.0 + (j as f64 + 0.5) * h;
            if x * x + y * y < 1.0 {
                coords.push((i as i64, j as i64));
                centers.push([x, y]);
            }
        }
    }
    let measure = vec![h * h; coords.len()];
    let mut grid = Grid::from_cells(domain, h, n, coords, centers, measure);
    fill_links(&mut grid, |center, dir| circle_gap(center, dir, h));
    grid.symmetry_maps = dihedral_maps(&grid);
    grid
}

fn build_radial(domain: Domain) -> Grid {
    let n = domain.n;
    let h = 1.0 / n as f64;
    let coords = (0..n).map(|i| (i as i64, 0)).collect();
    let centers: Vec<[f64; 2]> = (0..n).map(|i| [(i as f64 + 0.5) * h, 0.0]).collect();
    let measure = centers.iter().map(|c| 2.0 * PI * c[0] * h).collect();
    let mut grid = Grid::from_cells(domain, h, 0, coords, centers, measure);
    grid.boundary_flags[n - 1] = true;
    grid
}

fn fill_links(grid: &mut Grid, wall_fraction: impl Fn([f64; 2], (i64, i64)) -> f64) {
    let mut neighbors = Vec::with_capacity(grid.len());
    let mut flags = vec![false; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.coords[k];
        let links = DIRECTIONS.map(|(di, dj)| match grid.cell_at(i + di, j + dj) {
            Some(q) => Link::Cell(q),
            None => {
                flags[k] = true;
                Link::Wall { fraction: wall_fraction(grid.centers[k], (di, dj)) }
            }
        });
        neighbors.push(links);
    }
    grid.neighbors = neighbors;
    grid.boundary_flags = flags;
}

/// Distance (in units of `h`) from `center` to the unit circle along `dir`.
fn circle_gap(center: [f64; 2], dir: (i64, i64), h: f64) -> f64 {
    let [x, y] = center;
    let b = x * dir.0 as f64 + y * dir.1 as f64;
    let c = x * x + y * y - 1.0;
    let s = -b + (b * b - c).sqrt();
    (s / h).clamp(1e-3, 1.0)
}

fn dihedral_maps(grid: &Grid) -> Vec<Vec<usize>> {
    let m = grid.lattice_side as i64 - 1;
    let transforms: [fn(i64, i64, i64) -> (i64, i64); 8] = [
        |i, j, _| (i, j),
        |i, j, m| (m - i, j),
        |i, j, m| (i, m - j),
        |i, j, m| (m - i, m - j),
        |i, j, _| (j, i),
        |i, j, m| (m - j, i),
        |i, j, m| (j, m - i),
        |i, j, m| (m - j, m - i),
    ];
    transforms
        .iter()
        .map(|t| {
            (0..grid.len())
                .map(|k| {
                    let (i, j) = grid.coords[k];
                    let (ti, tj) = t(i, j, m);
                    grid.cell_at(ti, tj).expect("lattice mask is dihedrally symmetric")
                })
                .collect()
        })
        .collect()
}

/// `Σ indicator_i · cell_measure_i`.
pub fn measure_of_set(grid: &Grid, indicator: &[f64]) -> Result<f64> {
    Error::check_len(grid.len(), indicator.len())?;
    if let Some(bad) = indicator.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("indicator value {bad} outside [0, 1]")));
    }
    Ok(indicator.iter().zip(&grid.cell_measure).map(|(eta, m)| eta * m).sum())
}

/// Inner radius of the shell `{r(A) < |x| < 1}` of area `A` in the unit disk.
pub fn shell_radius(area: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&area) {
        return Err(Error::domain(format!("shell area {area} outside [0, π]")));
    }
    Ok((1.0 - area / PI).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_n4_has_nine_nodes() {
        let g = build_grid(Domain::square(4)).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.h, 0.25);
        assert!(g.cell_measure.iter().all(|&m| m == 0.0625));
        // only the center node is away from the boundary
        assert_eq!(g.boundary_flags.iter().filter(|&&b| !b).count(), 1);
    }

    #[test]
    fn disk_n8_mask() {
        let g = build_grid(Domain::disk(8)).unwrap();
        // direct count: 4 rows of (4, 6, 8, 8) cells mirrored
        assert_eq!(g.len(), 52);
        for k in 0..g.len() {
            assert!(g.radius(k) < 1.0);
        }
        assert!((g.total_measure - PI).abs() < 0.2 * PI);
    }

    #[test]
    fn radial_first_cell() {
        let g = build_grid(Domain::radial(10)).unwrap();
        assert!((g.center(0)[0] - 0.05).abs() < 1e-15);
        assert!((g.cell_measure[0] - 0.031_415_926_535_897_93).abs() < 1e-12);
        // annuli tile the disk exactly
        assert!((g.total_measure - PI).abs() < 1e-12);
    }

    #[test]
    fn too_small() {
        assert!(matches!(build_grid(Domain::square(3)), Err(Error::Config(_))));
    }

    #[test]
    fn index_map_is_bijective() {
        for domain in [Domain::square(9), Domain::disk(12), Domain::disk(13)] {
            let g = build_grid(domain).unwrap();
            let mut seen = vec![false; g.len()];
            for k in 0..g.len() {
                let (i, j) = g.lattice_coords(k);
                assert_eq!(g.cell_at(i, j), Some(k));
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
    }

    #[test]
    fn symmetry_maps_are_permutations() {
        for domain in [Domain::square(7), Domain::disk(16), Domain::disk(15)] {
            let g = build_grid(domain).unwrap();
            assert_eq!(g.symmetry_maps.len(), 8);
            for map in &g.symmetry_maps {
                let mut inverse = vec![usize::MAX; g.len()];
                for (k, &img) in map.iter().enumerate() {
                    inverse[img] = k;
                }
                for k in 0..g.len() {
                    assert_eq!(inverse[map[k]], k);
                    assert!((g.radius(map[k]) - g.radius(k)).abs() < 1e-12 || g.kind() == DomainKind::UnitSquare);
                }
            }
        }
    }

    #[test]
    fn wall_fractions_on_disk() {
        let g = build_grid(Domain::disk(32)).unwrap();
        for k in 0..g.len() {
            for (d, link) in g.neighbors[k].iter().enumerate() {
                if let Link::Wall { fraction } = *link {
                    assert!(fraction > 0.0 && fraction <= 1.0);
                    let [x, y] = g.center(k);
                    let (dx, dy) = DIRECTIONS[d];
                    let px = x + dx as f64 * fraction * g.h;
                    let py = y + dy as f64 * fraction * g.h;
                    assert!((px.hypot(py) - 1.0).abs() < 1e-9 || fraction == 1e-3);
                }
            }
        }
    }

    #[test]
    fn measure_of_set_basics() {
        let g = build_grid(Domain::square(8)).unwrap();
        assert_eq!(measure_of_set(&g, &vec![0.0; g.len()]).unwrap(), 0.0);
        let full = measure_of_set(&g, &vec![1.0; g.len()]).unwrap();
        assert!((full - g.total_measure).abs() < 1e-15);
        // 4 columns of nodes, the first two selected
        let g = build_grid(Domain::square(5)).unwrap();
        let half: Vec<f64> = (0..g.len()).map(|k| if g.lattice_coords(k).0 < 2 { 1.0 } else { 0.0 }).collect();
        assert!((measure_of_set(&g, &half).unwrap() - g.total_measure / 2.0).abs() < 1e-15);
        assert!(matches!(measure_of_set(&g, &[1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(measure_of_set(&g, &vec![1.5; g.len()]), Err(Error::Domain(_))));
    }

    #[test]
    fn shell_radius_values() {
        assert_eq!(shell_radius(PI).unwrap(), 0.0);
        assert_eq!(shell_radius(0.0).unwrap(), 1.0);
        assert!((shell_radius(PI / 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(shell_radius(-0.1).is_err());
        assert!(shell_radius(4.0).is_err());
    }
}
