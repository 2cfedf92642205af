//! Dirichlet Laplacian on a lattice domain and the solves built on it.
//!
//! The operator acts on interior vertices: `(A u)(x) = 4 u(x) - Σ u(y)` over
//! interior neighbours `y`. Boundary vertices are eliminated, so `A⁻¹` is the
//! discrete Dirichlet Green's function with `G(z, z) = 1/4` on a single-vertex
//! domain. Near the diagonal `G(x, y) ≈ (1/2π) log(1/|x - y|) + const` in
//! lattice units; any continuum normalisation is fitted downstream, never
//! assumed.

mod envelope;

use std::sync::{Arc, OnceLock};

use serde::Deserialize;

pub use envelope::{CsrMatrix, EnvelopeCholesky};
pub(crate) use envelope::dot_product;

use crate::domain::{GridPoint, LatticeDomain};
use crate::error::{Error, Result};
use crate::Point;

/// Default residual tolerance for direct solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// One real value per interior vertex of a domain.
#[derive(Clone, Debug)]
pub struct ScalarField {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: &Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_interior() {
            return Err(Error::DimensionMismatch { expected: domain.n_interior(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { domain: Arc::clone(domain), values })
    }

    pub fn zeros(domain: &Arc<LatticeDomain>) -> Self {
        Self { domain: Arc::clone(domain), values: vec![0.0; domain.n_interior()] }
    }

    pub fn from_fn(domain: &Arc<LatticeDomain>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = domain.interior().iter().map(|g| f(domain.position(*g))).collect();
        Self::new(domain, values)
    }

    pub(crate) fn from_parts(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.n_interior());
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `g`: interior value, or 0 on and beyond the boundary.
    pub fn at(&self, g: GridPoint) -> f64 {
        self.domain.interior_index(g).map_or(0.0, |i| self.values[i])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { domain: Arc::clone(&self.domain), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn same_domain(&self, other: &LatticeDomain) -> bool {
        self.domain.hash() == other.hash()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.domain.hash(), rhs.domain.hash(), "fields on different domains");
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        ScalarField { domain: Arc::clone(&self.domain), values }
    }
}

impl std::ops::Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.domain.hash(), rhs.domain.hash(), "fields on different domains");
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect();
        ScalarField { domain: Arc::clone(&self.domain), values }
    }
}

/// One real value per boundary vertex.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl BoundaryData {
    pub fn new(domain: &Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_boundary() {
            return Err(Error::DimensionMismatch { expected: domain.n_boundary(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { domain: Arc::clone(domain), values })
    }

    pub fn from_fn(domain: &Arc<LatticeDomain>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = domain.boundary().iter().map(|g| f(domain.position(*g))).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, g: GridPoint) -> Option<f64> {
        self.domain.boundary_index(g).map(|i| self.values[i])
    }
}

/// Factorised Dirichlet Laplacian of a lattice domain.
#[derive(Debug)]
pub struct DirichletOperator {
    domain: Arc<LatticeDomain>,
    matrix: CsrMatrix,
    /// Boundary-neighbour indices of each interior vertex, CSR layout.
    link_ptr: Vec<usize>,
    links: Vec<usize>,
    factor: EnvelopeCholesky,
    tol: f64,
}

impl DirichletOperator {
    /// Assemble and factorise. `tol` bounds the residual of every solve.
    pub fn assemble(domain: &Arc<LatticeDomain>, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("solve tolerance {tol}")));
        }
        let mut rows = Vec::with_capacity(domain.n_interior());
        let mut link_ptr = vec![0];
        let mut links = Vec::new();
        for (i, g) in domain.interior().iter().enumerate() {
            let mut row = vec![(i, 4.0)];
            for n in g.neighbours() {
                if let Some(j) = domain.interior_index(n) {
                    row.push((j, -1.0));
                } else if let Some(b) = domain.boundary_index(n) {
                    links.push(b);
                }
            }
            link_ptr.push(links.len());
            rows.push(row);
        }
        let matrix = CsrMatrix::from_rows(rows);
        let factor = EnvelopeCholesky::factor(&matrix)?;
        Ok(Self { domain: Arc::clone(domain), matrix, link_ptr, links, factor, tol })
    }

    pub fn new(domain: LatticeDomain) -> Result<Self> {
        Self::assemble(&Arc::new(domain), DEFAULT_TOL)
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn factor(&self) -> &EnvelopeCholesky {
        &self.factor
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Boundary neighbours of interior vertex `i`.
    pub fn boundary_links(&self, i: usize) -> &[usize] {
        &self.links[self.link_ptr[i]..self.link_ptr[i + 1]]
    }

    /// `A⁻¹ b` with one step of iterative refinement when the residual exceeds `tol`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: b.len() });
        }
        let mut x = self.factor.solve(b);
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut residual = self.residual(&x, b);
        if residual > self.tol * scale {
            let r: Vec<f64> = b.iter().zip(self.matrix.matvec(&x)).map(|(bi, ai)| bi - ai).collect();
            let dx = self.factor.solve(&r);
            x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
            residual = self.residual(&x, b);
        }
        if residual > self.tol * scale {
            return Err(Error::SolveInaccurate { residual, tol: self.tol });
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        self.matrix.matvec(x).iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn interior_index(&self, z: GridPoint) -> Result<usize> {
        self.domain.interior_index(z).ok_or(Error::VertexNotInterior(z.x, z.y))
    }

    /// Green's function column `G(·, z)`: the solution of `A g = e_z`.
    pub fn green_column(&self, z: GridPoint) -> Result<ScalarField> {
        let k = self.interior_index(z)?;
        let mut e = vec![0.0; self.n()];
        e[k] = 1.0;
        Ok(ScalarField::from_parts(Arc::clone(&self.domain), self.solve(&e)?))
    }

    pub fn green(&self, x: GridPoint, y: GridPoint) -> Result<f64> {
        let i = self.interior_index(x)?;
        Ok(self.green_column(y)?.values()[i])
    }

    /// Right-hand side `Σ_{b ~ x} bd(b)` coupling boundary data into the interior.
    fn boundary_rhs(&self, boundary_values: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.boundary_links(i).iter().map(|&b| boundary_values[b]).sum()).collect()
    }

    /// Discrete harmonic function in the interior with the given boundary values.
    pub fn harmonic_extension(&self, bd: &BoundaryData) -> Result<ScalarField> {
        if bd.values().len() != self.domain.n_boundary() {
            return Err(Error::DimensionMismatch { expected: self.domain.n_boundary(), got: bd.values().len() });
        }
        if bd.domain().hash() != self.domain.hash() {
            return Err(Error::DomainMismatch);
        }
        let u = self.solve(&self.boundary_rhs(bd.values()))?;
        Ok(ScalarField::from_parts(Arc::clone(&self.domain), u))
    }

    /// Largest violation of `4u(x) = Σ_neighbours u` over interior vertices.
    pub fn mean_value_residual(&self, u: &ScalarField, bd: &BoundaryData) -> f64 {
        let au = self.matrix.matvec(u.values());
        let rhs = self.boundary_rhs(bd.values());
        au.iter().zip(rhs).map(|(a, r)| (a - r).abs()).fold(0.0, f64::max)
    }

    /// Exit distribution of simple random walk from `z` over the boundary vertices.
    pub fn harmonic_measure_row(&self, z: GridPoint) -> Result<BoundaryData> {
        let g = self.green_column(z)?;
        let mut w = vec![0.0; self.domain.n_boundary()];
        for (i, gi) in g.values().iter().enumerate() {
            for &b in self.boundary_links(i) {
                w[b] += gi;
            }
        }
        Ok(BoundaryData { domain: Arc::clone(&self.domain), values: w })
    }

    /// Conformal radius estimate `R(z, D) = δ · exp(G(z, z)/s − c₀)`, with
    /// `(s, c₀)` read from the shipped calibration file.
    pub fn conformal_radius(&self, z: GridPoint) -> Result<f64> {
        let k = self.interior_index(z)?;
        let delta = self.domain.mesh_delta();
        if self.domain.distance_to_boundary(z) < 4.0 * delta - 1e-12 {
            return Err(Error::TooCloseToBoundary);
        }
        let mut e = vec![0.0; self.n()];
        e[k] = 1.0;
        let gzz = self.solve(&e)?[k];
        Ok(radius_calibration().radius(gzz, delta))
    }
}

/// Constants mapping the lattice Green's function diagonal to a conformal radius.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
pub struct RadiusCalibration {
    pub scale: f64,
    pub offset: f64,
}

impl RadiusCalibration {
    pub fn radius(&self, green_diagonal: f64, mesh_delta: f64) -> f64 {
        mesh_delta * (green_diagonal / self.scale - self.offset).exp()
    }

    /// Least-squares fit of `log(r/δ) = G(0,0)/s − c₀` on centred disks.
    pub fn fit(samples: &[(f64, f64)]) -> Self {
        // samples: (radius / mesh, G(0,0))
        let xs: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
        let (slope, intercept) = crate::stats::linear_fit(&xs, &ys);
        Self { scale: 1.0 / slope, offset: -intercept }
    }
}

#[derive(Deserialize)]
struct CalibrationFile {
    conformal_radius: RadiusCalibration,
}

/// Source of the shipped calibration constants.
pub const CALIBRATION_TOML: &str = include_str!("../../calibration/conformal_radius.toml");

pub fn radius_calibration() -> RadiusCalibration {
    static CAL: OnceLock<RadiusCalibration> = OnceLock::new();
    *CAL.get_or_init(|| {
        toml::from_str::<CalibrationFile>(CALIBRATION_TOML)
            .expect("shipped calibration file parses")
            .conformal_radius
    })
}

/// Disk-centre benchmark the calibration constants are fitted from.
pub fn radius_benchmark(resolutions: &[u32]) -> Result<Vec<(f64, f64)>> {
    resolutions
        .iter()
        .map(|&r| {
            let op = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / r as f64)?)?;
            Ok((r as f64, op.green(GridPoint::new(0, 0), GridPoint::new(0, 0))?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn mask(points: &[(i32, i32)]) -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::from_mask(points.iter().map(|&(x, y)| GridPoint::new(x, y)), 0.1).unwrap())
    }

    fn block(w: i32, h: i32) -> Arc<LatticeDomain> {
        let pts: Vec<_> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
        mask(&pts)
    }

    #[test]
    fn single_vertex() {
        let dom = mask(&[(0, 0)]);
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        assert_eq!(op.matrix().get(0, 0), 4.0);
        let g = op.green_column(GridPoint::new(0, 0)).unwrap();
        assert!((g.values()[0] - 0.25).abs() < 1e-15);
        let hm = op.harmonic_measure_row(GridPoint::new(0, 0)).unwrap();
        assert_eq!(hm.values().len(), 4);
        assert!(hm.values().iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn two_by_two_block_stencil() {
        let op = DirichletOperator::assemble(&block(2, 2), DEFAULT_TOL).unwrap();
        let m = op.matrix();
        let expect = [[4., -1., -1., 0.], [-1., 4., 0., -1.], [-1., 0., 4., -1.], [0., -1., -1., 4.]];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn three_by_three_matches_dense_lu() {
        let op = DirichletOperator::assemble(&block(3, 3), DEFAULT_TOL).unwrap();
        let dense = DMatrix::from_fn(9, 9, |i, j| op.matrix().get(i, j));
        let inv = dense.lu().try_inverse().unwrap();
        let c = GridPoint::new(1, 1);
        let g = op.green_column(c).unwrap();
        for i in 0..9 {
            assert!((g.values()[i] - inv[(i, 4)]).abs() < 1e-14);
        }
        assert!((op.green(c, c).unwrap() - inv[(4, 4)]).abs() < 1e-14);
    }

    #[test]
    fn disk_operator_is_symmetric_and_green_is_symmetric_positive() {
        let dom = Arc::new(LatticeDomain::disk(1.0, 1.0 / 64.0).unwrap());
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        assert_eq!(op.matrix().asymmetry(), 0.0);
        let x = GridPoint::new(10, -3);
        let y = GridPoint::new(-20, 17);
        let gx = op.green_column(x).unwrap();
        let gy = op.green_column(y).unwrap();
        assert!((gx.at(y) - gy.at(x)).abs() < 1e-10);
        assert!(gx.values().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn harmonic_extension_reproduces_constants_and_linear_functions() {
        let dom = Arc::new(LatticeDomain::disk(1.0, 1.0 / 16.0).unwrap());
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        let c = BoundaryData::from_fn(&dom, |_| 2.5).unwrap();
        let u = op.harmonic_extension(&c).unwrap();
        assert!(u.values().iter().all(|v| (v - 2.5).abs() < 1e-10));
        let lin = BoundaryData::from_fn(&dom, |p| p.re).unwrap();
        let u = op.harmonic_extension(&lin).unwrap();
        for (g, v) in dom.interior().iter().zip(u.values()) {
            assert!((v - dom.position(*g).re).abs() < 1e-10);
        }
        let bad = BoundaryData::new(&dom, vec![0.0; 3]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn harmonic_extension_of_random_data_has_small_residual_and_obeys_max_principle() {
        use rand::{Rng, SeedableRng};
        let dom = Arc::new(LatticeDomain::disk(1.0, 1.0 / 32.0).unwrap());
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..dom.n_boundary()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (lo, hi) = vals.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        let bd = BoundaryData::new(&dom, vals).unwrap();
        let u = op.harmonic_extension(&bd).unwrap();
        assert!(op.mean_value_residual(&u, &bd) <= 1e-10);
        assert!(u.values().iter().all(|v| *v >= lo && *v <= hi));
    }

    #[test]
    fn harmonic_measure_on_square_is_symmetric() {
        let dom = Arc::new(LatticeDomain::from_shape(Shape::Square { side: 1.0 }, 0.1).unwrap());
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        let hm = op.harmonic_measure_row(GridPoint::new(0, 0)).unwrap();
        assert!((hm.values().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for b in dom.boundary() {
            let p = hm.at(*b).unwrap();
            for s in [GridPoint::new(-b.x, b.y), GridPoint::new(b.y, b.x), GridPoint::new(b.x, -b.y)] {
                assert!((hm.at(s).unwrap() - p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn harmonic_measure_from_disk_centre_is_nearly_uniform_per_angle() {
        // Lattice boundary vertices are not equally spaced in angle, so compare
        // cumulative measure over angular sectors with the uniform law.
        let dom = Arc::new(LatticeDomain::disk(1.0, 1.0 / 64.0).unwrap());
        let op = DirichletOperator::assemble(&dom, DEFAULT_TOL).unwrap();
        let hm = op.harmonic_measure_row(GridPoint::new(0, 0)).unwrap();
        let sectors = 16;
        let mut mass = vec![0.0; sectors];
        for (b, p) in dom.boundary().iter().zip(hm.values()) {
            let theta = dom.position(*b).arg() + PI;
            let k = ((theta / (2.0 * PI) * sectors as f64) as usize).min(sectors - 1);
            mass[k] += p;
        }
        for m in mass {
            assert!((m * sectors as f64 - 1.0).abs() <= 0.05, "sector mass {m}");
        }
    }

    #[test]
    fn green_decreases_with_domain() {
        let big = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 32.0).unwrap()).unwrap();
        let small = DirichletOperator::new(LatticeDomain::disk(0.5, 1.0 / 32.0).unwrap()).unwrap();
        let z = GridPoint::new(2, 1);
        let gb = big.green_column(z).unwrap();
        let gs = small.green_column(z).unwrap();
        for (g, v) in small.domain().interior().iter().zip(gs.values()) {
            assert!(*v <= gb.at(*g) + 1e-12);
        }
    }

    #[test]
    fn vertex_errors() {
        let op = DirichletOperator::assemble(&block(2, 2), DEFAULT_TOL).unwrap();
        assert!(matches!(op.green_column(GridPoint::new(5, 5)), Err(Error::VertexNotInterior(5, 5))));
        assert!(matches!(op.harmonic_measure_row(GridPoint::new(-1, 0)), Err(Error::VertexNotInterior(..))));
        let disk = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 16.0).unwrap()).unwrap();
        assert!(matches!(disk.conformal_radius(GridPoint::new(14, 0)), Err(Error::TooCloseToBoundary)));
    }

    #[test]
    fn conformal_radius_estimates() {
        let op = DirichletOperator::new(LatticeDomain::disk(1.0, 1.0 / 128.0).unwrap()).unwrap();
        let r0 = op.conformal_radius(GridPoint::new(0, 0)).unwrap();
        assert!((r0 - 1.0).abs() < 0.05, "R(0) = {r0}");
        let r_half = op.conformal_radius(GridPoint::new(64, 0)).unwrap();
        assert!((r_half - 0.75).abs() / 0.75 < 0.07, "R(0.5) = {r_half}");
        let op2 = DirichletOperator::new(LatticeDomain::disk(2.0, 1.0 / 64.0).unwrap()).unwrap();
        let r2 = op2.conformal_radius(GridPoint::new(0, 0)).unwrap();
        assert!((r2 - 2.0).abs() / 2.0 < 0.05, "R = {r2}");
    }

    #[test]
    fn shipped_calibration_matches_benchmark() {
        let fresh = RadiusCalibration::fit(&radius_benchmark(&[16, 32, 64, 128]).unwrap());
        let shipped = radius_calibration();
        assert!((fresh.scale - shipped.scale).abs() < 1e-9);
        assert!((fresh.offset - shipped.offset).abs() < 1e-9);
    }
}
