//! Admissible finite-volume meshes and piecewise-constant fields.
//!
//! A [`Mesh`] is a list of control volumes, the interfaces between them and the
//! boundary faces. Each interface carries the two-point flux data
//! `m(sigma_KL)` and `d(K,L)` together with the unit normal pointing from the
//! first cell to the second. Nothing in the record types assumes a Cartesian
//! grid; [`Mesh::cartesian`] is simply the only builder shipped.

use crate::error::{Error, Result};

/// One control volume.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub center: [f64; 3],
    pub measure: f64,
    /// Used only by the regularity ratio.
    pub diameter: f64,
}

/// Interior interface `sigma_{K,L}` between cells `K = cells.0` and `L = cells.1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    pub cells: (usize, usize),
    pub measure: f64,
    pub distance: f64,
    /// Unit normal to the interface, oriented from `K` towards `L`.
    pub normal: [f64; 3],
}

impl Interface {
    #[inline]
    pub fn transmissibility(&self) -> f64 {
        self.measure / self.distance
    }
}

/// A face on the domain boundary. Only zero-flux data is ever attached to it.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub measure: f64,
}

/// Uniform grid metadata kept by the Cartesian builder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Row-major index of cell `(i, j)`, `i` along x.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    cells: Vec<Cell>,
    interfaces: Vec<Interface>,
    boundary_faces: Vec<BoundaryFace>,
    dimension: usize,
    domain_measure: f64,
    grid: Option<Grid>,
}

impl Mesh {
    /// Builds a general mesh from its records, checking the admissibility
    /// invariants that can be checked locally.
    pub fn new(
        dimension: usize,
        cells: Vec<Cell>,
        interfaces: Vec<Interface>,
        boundary_faces: Vec<BoundaryFace>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidMesh(format!("dimension {dimension}")));
        }
        if cells.is_empty() {
            return Err(Error::InvalidMesh("no cells".into()));
        }
        for (k, c) in cells.iter().enumerate() {
            if !(c.measure > 0.0 && c.measure.is_finite()) {
                return Err(Error::InvalidMesh(format!("cell {k} has measure {}", c.measure)));
            }
            if !(c.diameter > 0.0 && c.diameter.is_finite()) {
                return Err(Error::InvalidMesh(format!("cell {k} has diameter {}", c.diameter)));
            }
        }
        let n = cells.len();
        let mut seen = std::collections::HashSet::with_capacity(interfaces.len());
        for (s, f) in interfaces.iter().enumerate() {
            let (k, l) = f.cells;
            if k >= n || l >= n {
                return Err(Error::InvalidMesh(format!("interface {s} references missing cell")));
            }
            if k == l {
                return Err(Error::InvalidMesh(format!("interface {s} joins cell {k} to itself")));
            }
            if !seen.insert((k.min(l), k.max(l))) {
                return Err(Error::InvalidMesh(format!("duplicate interface between {k} and {l}")));
            }
            if !(f.measure > 0.0 && f.distance > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "interface {s} has measure {} and distance {}",
                    f.measure, f.distance
                )));
            }
        }
        for b in &boundary_faces {
            if b.cell >= n {
                return Err(Error::InvalidMesh("boundary face references missing cell".into()));
            }
        }
        let domain_measure = cells.iter().map(|c| c.measure).sum();
        Ok(Self { cells, interfaces, boundary_faces, dimension, domain_measure, grid: None })
    }

    /// Uniform `nx` by `ny` grid on `[0, lx] x [0, ly]`.
    ///
    /// Cells are numbered row-major (x fastest). Interfaces are listed x-faces
    /// first, then y-faces, each in lexicographic order of their lower cell.
    pub fn cartesian(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(format!("grid size {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain {lx}x{ly}")));
        }
        let grid = Grid { nx, ny, lx, ly };
        let (dx, dy) = (grid.dx(), grid.dy());
        let measure = dx * dy;
        let diameter = dx.hypot(dy);

        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(Cell { center: [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy, 0.0], measure, diameter });
            }
        }

        let mut interfaces = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1));
        for j in 0..ny {
            for i in 0..nx - 1 {
                interfaces.push(Interface {
                    cells: (grid.index(i, j), grid.index(i + 1, j)),
                    measure: dy,
                    distance: dx,
                    normal: [1.0, 0.0, 0.0],
                });
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                interfaces.push(Interface {
                    cells: (grid.index(i, j), grid.index(i, j + 1)),
                    measure: dx,
                    distance: dy,
                    normal: [0.0, 1.0, 0.0],
                });
            }
        }

        let mut boundary_faces = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary_faces.push(BoundaryFace { cell: grid.index(i, 0), measure: dx });
        }
        for i in 0..nx {
            boundary_faces.push(BoundaryFace { cell: grid.index(i, ny - 1), measure: dx });
        }
        for j in 0..ny {
            boundary_faces.push(BoundaryFace { cell: grid.index(0, j), measure: dy });
        }
        for j in 0..ny {
            boundary_faces.push(BoundaryFace { cell: grid.index(nx - 1, j), measure: dy });
        }

        Ok(Self { cells, interfaces, boundary_faces, dimension: 2, domain_measure: lx * ly, grid: Some(grid) })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Measure of the whole domain.
    pub fn domain_measure(&self) -> f64 {
        self.domain_measure
    }

    /// Present only for meshes produced by [`Mesh::cartesian`].
    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    /// Largest cell diameter, the mesh size `h`.
    pub fn size(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// `m(sigma_KL) / d(K,L)` for interface `index`.
    pub fn transmissibility(&self, index: usize) -> Result<f64> {
        self.interfaces
            .get(index)
            .map(Interface::transmissibility)
            .ok_or(Error::IndexOutOfRange { index, len: self.interfaces.len() })
    }

    /// `min d(K,L) / diam(K)` over every interface and both of its cells.
    pub fn regularity_ratio(&self) -> Result<f64> {
        if self.interfaces.is_empty() {
            return Err(Error::NotApplicable("regularity ratio of a mesh without interfaces"));
        }
        Ok(self
            .interfaces
            .iter()
            .map(|f| {
                let (k, l) = f.cells;
                let diam = self.cells[k].diameter.max(self.cells[l].diameter);
                f.distance / diam
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// The discrete gradient on the interior diamonds `T_{K,L}`, one vector per
    /// interface in interface order. It vanishes on boundary diamonds, which
    /// are therefore not listed.
    pub fn discrete_gradient(&self, f: &Field) -> Result<Vec<[f64; 3]>> {
        self.check_field(f)?;
        let u = f.values();
        Ok(self
            .interfaces
            .iter()
            .map(|s| {
                let (k, l) = s.cells;
                let g = s.transmissibility() * (u[l] - u[k]);
                [g * s.normal[0], g * s.normal[1], g * s.normal[2]]
            })
            .collect())
    }

    pub(crate) fn check_field(&self, f: &Field) -> Result<()> {
        if f.len() != self.cells.len() {
            return Err(Error::SizeMismatch { expected: self.cells.len(), found: f.len() });
        }
        Ok(())
    }
}

/// One value per cell, indexed like [`Mesh::cells`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    /// Rejects NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Self(vec![value; n])
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_unit_square() {
        let m = Mesh::cartesian(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(m.num_cells(), 4);
        assert!(m.cells().iter().all(|c| c.measure == 0.25));
        assert_eq!(m.interfaces().len(), 4);
        for (s, f) in m.interfaces().iter().enumerate() {
            assert_eq!(f.measure, 0.5);
            assert_eq!(f.distance, 0.5);
            assert_eq!(m.transmissibility(s).unwrap(), 1.0);
        }
        assert_eq!(m.boundary_faces().len(), 8);
        // x-faces first, lexicographic
        assert_eq!(m.interfaces()[0].cells, (0, 1));
        assert_eq!(m.interfaces()[1].cells, (2, 3));
        assert_eq!(m.interfaces()[2].cells, (0, 2));
        assert_eq!(m.interfaces()[3].cells, (1, 3));
    }

    #[test]
    fn single_cell() {
        let m = Mesh::cartesian(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.cells()[0].measure, 1.0);
        assert!(m.interfaces().is_empty());
        assert!(matches!(m.regularity_ratio(), Err(Error::NotApplicable(_))));
        assert!(m.discrete_gradient(&Field::constant(1, 3.0)).unwrap().is_empty());
    }

    #[test]
    fn fine_grid_cell_measure() {
        let m = Mesh::cartesian(300, 300, 1.0, 1.0).unwrap();
        assert_eq!(m.num_cells(), 90_000);
        let expected = 1.0 / (300.0 * 300.0);
        assert!(m.cells().iter().all(|c| (c.measure - expected).abs() <= 1e-18));
    }

    #[test]
    fn transmissibility_examples() {
        let m = Mesh::cartesian(4, 4, 1.0, 1.0).unwrap();
        for s in 0..m.interfaces().len() {
            assert_relative_eq!(m.transmissibility(s).unwrap(), 1.0, epsilon = 1e-15);
        }
        let m = Mesh::cartesian(2, 2, 2.0, 1.0).unwrap();
        // interface 0 is the vertical face between cells 0 and 1
        let f = &m.interfaces()[0];
        assert_eq!((f.measure, f.distance), (0.5, 1.0));
        assert_eq!(m.transmissibility(0).unwrap(), 0.5);
        assert!(matches!(m.transmissibility(4), Err(Error::IndexOutOfRange { index: 4, len: 4 })));
    }

    #[test]
    fn regularity_of_square_cells() {
        let r = Mesh::cartesian(2, 2, 1.0, 1.0).unwrap().regularity_ratio().unwrap();
        assert_relative_eq!(r, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let r = Mesh::cartesian(10, 10, 1.0, 1.0).unwrap().regularity_ratio().unwrap();
        assert_relative_eq!(r, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn regularity_matches_exhaustive_scan() {
        let m = Mesh::cartesian(2, 4, 1.0, 1.0).unwrap();
        // every ordered (K, L) neighbour pair, located by geometry alone
        let mut best = f64::INFINITY;
        for (k, ck) in m.cells().iter().enumerate() {
            for (l, cl) in m.cells().iter().enumerate() {
                if k == l {
                    continue;
                }
                let dx = (ck.center[0] - cl.center[0]).abs();
                let dy = (ck.center[1] - cl.center[1]).abs();
                let adjacent = (dx < 1e-12 && (dy - 0.25).abs() < 1e-12) || (dy < 1e-12 && (dx - 0.5).abs() < 1e-12);
                if adjacent {
                    best = best.min(dx.hypot(dy) / ck.diameter);
                }
            }
        }
        assert_relative_eq!(m.regularity_ratio().unwrap(), best, epsilon = 1e-15);
        assert_relative_eq!(best, 0.25 / 0.5f64.hypot(0.25), epsilon = 1e-15);
    }

    #[test]
    fn gradient_of_linear_field() {
        let m = Mesh::cartesian(2, 2, 1.0, 1.0).unwrap();
        let f = Field::new(m.cells().iter().map(|c| c.center[0]).collect()).unwrap();
        let g = m.discrete_gradient(&f).unwrap();
        // x-faces: tau * (u_L - u_K) = 1 * 0.5 along +x
        assert_eq!(g[0], [0.5, 0.0, 0.0]);
        assert_eq!(g[1], [0.5, 0.0, 0.0]);
        assert_eq!(g[2], [0.0, 0.0, 0.0]);
        assert_eq!(g[3], [0.0, 0.0, 0.0]);
        assert!(matches!(m.discrete_gradient(&Field::zeros(3)), Err(Error::SizeMismatch { expected: 4, found: 3 })));
    }

    #[test]
    fn general_mesh_rejects_bad_records() {
        let cell = Cell { center: [0.0; 3], measure: 1.0, diameter: 1.0 };
        let iface = |k, l| Interface { cells: (k, l), measure: 1.0, distance: 1.0, normal: [1.0, 0.0, 0.0] };
        let two = vec![cell.clone(), cell.clone()];
        assert!(Mesh::new(1, two.clone(), vec![iface(0, 1)], vec![]).is_ok());
        assert!(Mesh::new(1, two.clone(), vec![iface(0, 0)], vec![]).is_err());
        assert!(Mesh::new(1, two.clone(), vec![iface(0, 2)], vec![]).is_err());
        assert!(Mesh::new(1, two.clone(), vec![iface(0, 1), iface(1, 0)], vec![]).is_err());
        assert!(Mesh::new(4, two.clone(), vec![], vec![]).is_err());
        let bad = vec![Cell { measure: 0.0, ..cell }];
        assert!(Mesh::new(1, bad, vec![], vec![]).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        assert!(matches!(Field::new(vec![0.0, f64::NAN]), Err(Error::NonFinite(1))));
        assert!(Field::new(vec![1.0, f64::INFINITY]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cartesian_measure_sums_to_domain(nx in 1usize..40, ny in 1usize..40, lx in 0.01f64..50.0, ly in 0.01f64..50.0) {
                let m = Mesh::cartesian(nx, ny, lx, ly).unwrap();
                let total: f64 = m.cells().iter().map(|c| c.measure).sum();
                prop_assert!((total - lx * ly).abs() <= 1e-12 * lx * ly);
            }

            #[test]
            fn flux_antisymmetry(values in proptest::collection::vec(-10.0f64..10.0, 12)) {
                let m = Mesh::cartesian(4, 3, 1.0, 2.0).unwrap();
                // summing tau (u_L - u_K) over both orientations cancels exactly
                let mut acc = [0.0; 12];
                for f in m.interfaces() {
                    let (k, l) = f.cells;
                    let flux = f.transmissibility() * (values[l] - values[k]);
                    acc[k] += flux;
                    acc[l] -= flux;
                }
                for f in m.interfaces() {
                    let (k, l) = f.cells;
                    let t = f.transmissibility();
                    prop_assert_eq!(t * (values[l] - values[k]) + t * (values[k] - values[l]), 0.0);
                }
                let total: f64 = acc.iter().sum();
                prop_assert!(total.abs() < 1e-12);
            }

            #[test]
            fn gradient_of_constant_vanishes(c in -1e3f64..1e3, nx in 1usize..8, ny in 1usize..8) {
                let m = Mesh::cartesian(nx, ny, 1.0, 1.0).unwrap();
                let g = m.discrete_gradient(&Field::constant(nx * ny, c)).unwrap();
                prop_assert!(g.iter().all(|v| *v == [0.0; 3]));
            }
        }
    }
}
