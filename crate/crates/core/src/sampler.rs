//! Exact GFF sampling and the three averaging schemes.
//!
//! With `A = L Lᵀ` the factorised Dirichlet Laplacian, `h = L⁻ᵀ ξ` for i.i.d.
//! standard normal `ξ` has covariance `A⁻¹ = G`. Sample number `c` of a
//! sampler with seed `s` draws `ξ` from ChaCha8 seeded with `s` on stream `c`,
//! so any sample can be regenerated on its own and parallel runs are
//! independent of scheduling.
//!
//! A linear statistic `ℓᵀh` equals `(L⁻¹ℓ)ᵀ ξ`. [`GffSampler::functionals`]
//! uses this to evaluate a handful of functionals per sample without ever
//! forming `h`; the values agree with applying the functional to
//! [`GffSampler::sample_at`] up to rounding.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::domain::{GridPoint, LatticeDomain};
use crate::error::{Error, Result};
use crate::laplace::{dot_product, DirichletOperator, ScalarField, DEFAULT_TOL};
use crate::stats::BLOCK;
use crate::Point;

/// Exact sampler of the lattice GFF on one domain.
#[derive(Clone, Debug)]
pub struct GffSampler {
    op: Arc<DirichletOperator>,
    seed: u64,
    counter: u64,
    amplitude: f64,
}

impl GffSampler {
    pub fn new(op: Arc<DirichletOperator>, seed: u64) -> Self {
        Self { op, seed, counter: 0, amplitude: 1.0 }
    }

    /// Multiply every sample by `amplitude` (covariance scales by its square).
    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_counter(mut self, counter: u64) -> Self {
        self.counter = counter;
        self
    }

    pub fn op(&self) -> &Arc<DirichletOperator> {
        &self.op
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        self.op.domain()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn noise(&self, counter: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(counter);
        StandardNormal.sample_iter(&mut rng).take(self.op.n()).collect()
    }

    /// Sample number `counter`; does not advance the sampler.
    pub fn sample_at(&self, counter: u64) -> ScalarField {
        let mut h = self.op.factor().backward(&self.noise(counter));
        if self.amplitude != 1.0 {
            h.iter_mut().for_each(|v| *v *= self.amplitude);
        }
        ScalarField::from_parts(Arc::clone(self.domain()), h)
    }

    /// Next sample; advances the counter.
    pub fn sample(&mut self) -> ScalarField {
        let s = self.sample_at(self.counter);
        self.counter += 1;
        s
    }

    /// Apply `f` to samples `start..start + n` in parallel; results in counter order.
    pub fn map_samples<T: Send>(&self, start: u64, n: usize, f: impl Fn(&ScalarField) -> T + Sync) -> Vec<T> {
        (0..n as u64).into_par_iter().map(|k| f(&self.sample_at(start + k))).collect()
    }

    /// Values of `fs` on samples `start..start + n`, one column per functional.
    pub fn functionals_at(&self, fs: &[LinearFunctional], start: u64, n: usize) -> Result<Vec<Vec<f64>>> {
        for f in fs {
            if f.domain_hash != self.domain().hash() {
                return Err(Error::DomainMismatch);
            }
        }
        let projected: Vec<(usize, Vec<f64>)> = fs
            .iter()
            .map(|f| {
                let dense = f.dense(self.op.n());
                let first = f.terms.iter().map(|t| t.0).min().unwrap_or(self.op.n());
                let u = self.op.factor().forward(&dense);
                (first, u)
            })
            .collect();
        let blocks: Vec<Vec<Vec<f64>>> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let lo = b * BLOCK;
                let hi = (lo + BLOCK).min(n);
                (lo..hi)
                    .map(|k| {
                        let xi = self.noise(start + k as u64);
                        projected
                            .iter()
                            .map(|(first, u)| self.amplitude * dot_product(&u[*first..], &xi[*first..]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut cols = vec![Vec::with_capacity(n); fs.len()];
        for row in blocks.into_iter().flatten() {
            for (c, v) in cols.iter_mut().zip(row) {
                c.push(v);
            }
        }
        Ok(cols)
    }

    /// As [`functionals_at`](Self::functionals_at) from the current counter, then advance it.
    pub fn functionals(&mut self, fs: &[LinearFunctional], n: usize) -> Result<Vec<Vec<f64>>> {
        let out = self.functionals_at(fs, self.counter, n)?;
        self.counter += n as u64;
        Ok(out)
    }
}

/// Sparse linear statistic `h ↦ Σ c_i h(x_i)` over interior vertices of one domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFunctional {
    domain_hash: String,
    terms: Vec<(usize, f64)>,
}

impl LinearFunctional {
    /// Terms are merged by index and sorted.
    pub fn new(domain: &LatticeDomain, mut terms: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(i, _)) = terms.iter().find(|t| t.0 >= domain.n_interior()) {
            return Err(Error::DimensionMismatch { expected: domain.n_interior(), got: i + 1 });
        }
        if terms.iter().any(|t| !t.1.is_finite()) {
            return Err(Error::NonFinite);
        }
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        Ok(Self { domain_hash: domain.hash().to_owned(), terms: merged })
    }

    /// Point evaluation `h(g)`.
    pub fn point(domain: &LatticeDomain, g: GridPoint) -> Result<Self> {
        let i = domain.interior_index(g).ok_or(Error::VertexNotInterior(g.x, g.y))?;
        Self::new(domain, vec![(i, 1.0)])
    }

    /// The pairing `h ↦ (h, φ)` of a test function.
    pub fn pairing(tf: &TestFunction) -> Self {
        let d2 = tf.domain.mesh_delta().powi(2);
        let terms = tf.weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, w)| (i, d2 * w)).collect();
        Self { domain_hash: tf.domain.hash().to_owned(), terms }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn domain_hash(&self) -> &str {
        &self.domain_hash
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(i, c) in &self.terms {
            v[i] = c;
        }
        v
    }

    pub fn apply(&self, field: &ScalarField) -> Result<f64> {
        if field.domain().hash() != self.domain_hash {
            return Err(Error::DomainMismatch);
        }
        let v = field.values();
        Ok(self.terms.iter().map(|&(i, c)| c * v[i]).sum())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.domain_hash != other.domain_hash {
            return Err(Error::DomainMismatch);
        }
        let mut terms: Vec<(usize, f64)> = self.terms.iter().map(|&(i, c)| (i, a * c)).collect();
        terms.extend(other.terms.iter().map(|&(i, c)| (i, b * c)));
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        Ok(Self { domain_hash: self.domain_hash.clone(), terms: merged })
    }

    /// `Var(ℓᵀh) = ℓᵀ G ℓ` for the unit-amplitude field.
    pub fn variance(&self, op: &DirichletOperator) -> Result<f64> {
        Ok(self.covariance(op, self)?)
    }

    /// `Cov(ℓᵀh, mᵀh) = ℓᵀ G m`.
    pub fn covariance(&self, op: &DirichletOperator, other: &Self) -> Result<f64> {
        if self.domain_hash != op.domain().hash() || other.domain_hash != op.domain().hash() {
            return Err(Error::DomainMismatch);
        }
        let gm = op.solve(&other.dense(op.n()))?;
        Ok(self.terms.iter().map(|&(i, c)| c * gm[i]).sum())
    }
}

/// Density on interior vertices; pairs with fields as `δ² Σ φ(x) h(x)`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    domain: Arc<LatticeDomain>,
    weights: Vec<f64>,
}

impl TestFunction {
    pub fn new(domain: &Arc<LatticeDomain>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != domain.n_interior() {
            return Err(Error::DimensionMismatch { expected: domain.n_interior(), got: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { domain: Arc::clone(domain), weights })
    }

    pub fn from_fn(domain: &Arc<LatticeDomain>, f: impl Fn(Point) -> f64) -> Result<Self> {
        Self::new(domain, domain.interior().iter().map(|g| f(domain.position(*g))).collect())
    }

    /// Smooth radial bump supported on the annulus `r_in < |z| < r_out`, mass 1.
    pub fn annulus(domain: &Arc<LatticeDomain>, r_in: f64, r_out: f64) -> Result<Self> {
        if !(0.0 <= r_in && r_in < r_out) {
            return Err(Error::InvalidParameter(format!("annulus ({r_in}, {r_out})")));
        }
        let mid = 0.5 * (r_in + r_out);
        let half = 0.5 * (r_out - r_in);
        let tf = Self::from_fn(domain, |p| bump((p.norm() - mid) / half))?;
        tf.normalised()
    }

    /// Rescale to mass 1.
    pub fn normalised(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::InvalidParameter("test function has no mass on the lattice".into()));
        }
        self.weights.iter_mut().for_each(|w| *w /= m);
        Ok(self)
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `δ² Σ φ`.
    pub fn mass(&self) -> f64 {
        self.domain.mesh_delta().powi(2) * self.weights.iter().sum::<f64>()
    }

    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.domain.hash() != other.domain.hash() {
            return Err(Error::DomainMismatch);
        }
        let w = self.weights.iter().zip(&other.weights).map(|(x, y)| a * x + b * y).collect();
        Self::new(&self.domain, w)
    }
}

/// `exp(-1/(1 - u²))` on `|u| < 1`, zero outside.
pub fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Discrete pairing `(h, φ) = δ² Σ φ(x) h(x)`.
pub fn pair(field: &ScalarField, tf: &TestFunction) -> Result<f64> {
    if field.domain().hash() != tf.domain.hash() {
        return Err(Error::DimensionMismatch { expected: field.values().len(), got: tf.weights.len() });
    }
    let d2 = tf.domain.mesh_delta().powi(2);
    Ok(d2 * dot_product(field.values(), &tf.weights))
}

/// Radial mollifier profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `exp(-1/(1 - r²))`.
    #[default]
    Bump,
    /// Indicator of the unit disk.
    Flat,
}

impl Profile {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Profile::Bump => bump(r),
            Profile::Flat => f64::from(u8::from(r < 1.0)),
        }
    }
}

/// Mass-one radial mollifier `φ_ε^z(w) ∝ profile(|w - z| / ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    pub profile: Profile,
    pub center: Point,
    pub epsilon: f64,
}

impl MollifierSpec {
    pub fn bump(center: Point, epsilon: f64) -> Self {
        Self { profile: Profile::Bump, center, epsilon }
    }

    /// Discrete weights on `domain`; the support must consist of interior vertices.
    pub fn weights(&self, domain: &Arc<LatticeDomain>) -> Result<TestFunction> {
        let delta = domain.mesh_delta();
        let reach = (self.epsilon / delta).ceil() as i32 + 1;
        let c = domain.nearest_vertex(self.center);
        let mut weights = vec![0.0; domain.n_interior()];
        let mut any = false;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let g = GridPoint::new(c.x + dx, c.y + dy);
                let w = self.profile.eval((domain.position(g) - self.center).norm() / self.epsilon);
                if w > 0.0 {
                    let i = domain.interior_index(g).ok_or(Error::SupportEscapesDomain)?;
                    weights[i] = w;
                    any = true;
                }
            }
        }
        if !any {
            return Err(Error::InvalidParameter(format!("mollifier radius {} covers no vertex", self.epsilon)));
        }
        TestFunction::new(domain, weights)?.normalised()
    }
}

/// `h̃_ε(z) = (h, φ_ε^z)`.
pub fn mollified_value(field: &ScalarField, m: &MollifierSpec) -> Result<f64> {
    pair(field, &m.weights(field.domain())?)
}

/// Corner vertices and bilinear weights of `z`; a single corner when `z` is a vertex.
pub fn bilinear_corners(domain: &LatticeDomain, z: Point) -> Vec<(GridPoint, f64)> {
    if let Some(g) = domain.vertex_at(z) {
        return vec![(g, 1.0)];
    }
    let delta = domain.mesh_delta();
    let (x, y) = (z.re / delta, z.im / delta);
    let (i, j) = (x.floor(), y.floor());
    let (fx, fy) = (x - i, y - j);
    let (i, j) = (i as i32, j as i32);
    vec![
        (GridPoint::new(i, j), (1.0 - fx) * (1.0 - fy)),
        (GridPoint::new(i + 1, j), fx * (1.0 - fy)),
        (GridPoint::new(i, j + 1), (1.0 - fx) * fy),
        (GridPoint::new(i + 1, j + 1), fx * fy),
    ]
}

/// Harmonic averages over one subdomain `D′ ⊂ D`: the value at `z` of the
/// harmonic extension into `D′` of the field's trace on `∂D′`.
///
/// Off-lattice `z` are handled by bilinear interpolation of the harmonic
/// extension between the four surrounding vertices.
#[derive(Debug)]
pub struct HarmonicAverager {
    parent: Arc<LatticeDomain>,
    sub_op: DirichletOperator,
}

impl HarmonicAverager {
    pub fn new(parent: &Arc<LatticeDomain>, sub: LatticeDomain) -> Result<Self> {
        if !sub.is_subdomain_of(parent) {
            return Err(Error::SubdomainNotContained);
        }
        let sub_op = DirichletOperator::assemble(&Arc::new(sub), DEFAULT_TOL)?;
        Ok(Self { parent: Arc::clone(parent), sub_op })
    }

    /// Averager for the lattice ball `B_z(ε)`.
    pub fn ball(parent: &Arc<LatticeDomain>, z: Point, eps: f64) -> Result<Self> {
        Self::new(parent, parent.subdomain_ball(z, eps)?)
    }

    pub fn sub(&self) -> &Arc<LatticeDomain> {
        self.sub_op.domain()
    }

    pub fn sub_op(&self) -> &DirichletOperator {
        &self.sub_op
    }

    /// Harmonic-measure weights seen from `z`, as a functional on the parent domain.
    pub fn functional(&self, z: Point) -> Result<LinearFunctional> {
        let sub = self.sub();
        let corners = bilinear_corners(sub, z);
        if corners.iter().any(|(g, w)| *w != 0.0 && sub.interior_index(*g).is_none()) {
            return Err(Error::PointNotInSubdomain(z.re, z.im));
        }
        let mut terms = Vec::new();
        for (g, w) in corners {
            if w == 0.0 {
                continue;
            }
            let hm = self.sub_op.harmonic_measure_row(g)?;
            for (b, p) in sub.boundary().iter().zip(hm.values()) {
                // boundary vertices of D contribute nothing (zero boundary values)
                if let Some(i) = self.parent.interior_index(*b) {
                    terms.push((i, w * p));
                }
            }
        }
        LinearFunctional::new(&self.parent, terms)
    }

    pub fn value(&self, field: &ScalarField, z: Point) -> Result<f64> {
        self.functional(z)?.apply(field)
    }
}

/// Circle average `h_ε(z)` as a functional on `domain`.
pub fn circle_average_functional(domain: &Arc<LatticeDomain>, z: Point, eps: f64) -> Result<LinearFunctional> {
    HarmonicAverager::ball(domain, z, eps)?.functional(z).map_err(|e| match e {
        Error::PointNotInSubdomain(..) => Error::BallTooSmall(eps),
        e => e,
    })
}

/// Circle average `h_ε(z)`: harmonic-measure average over the lattice circle `∂B_z(ε)`.
pub fn circle_average(field: &ScalarField, z: Point, eps: f64) -> Result<f64> {
    circle_average_functional(field.domain(), z, eps)?.apply(field)
}

/// Harmonic average of `field` over `sub`, seen from `z`.
pub fn harmonic_average(field: &ScalarField, z: Point, sub: &LatticeDomain) -> Result<f64> {
    HarmonicAverager::new(field.domain(), sub.clone())?.value(field, z)
}
