//! Two- and four-point kernels of circle averages, Wick checks, coupling fits
//! and logarithmic bounds.
//!
//! Kernels are estimated at a fixed averaging radius `ε`: once the balls
//! `B_{z_i}(ε)` are pairwise disjoint, the product moments no longer depend on
//! `ε`, so no extrapolation is needed. Standard errors are delete-one-block
//! jackknife errors with blocks of [`BLOCK`] samples.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::{LatticeDomain, PointSet};
use crate::error::{Error, Result};
use crate::io::{num, CsvTable};
use crate::laplace::{DirichletOperator, DEFAULT_TOL};
use crate::sampler::{bilinear_corners, circle_average_functional, GffSampler, HarmonicAverager, LinearFunctional, TestFunction};
use crate::stats::{self, BlockMeans, BLOCK};
use crate::Point;

pub const MIN_SAMPLES: usize = 100;

/// Monte-Carlo kernel estimate on the tuples of a point set.
#[derive(Clone, Debug, Serialize)]
pub struct KernelEstimate {
    pub order: usize,
    pub points: Vec<Point>,
    pub eps: f64,
    /// Indices into `points`, one entry per estimated tuple.
    pub tuples: Vec<Vec<usize>>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl KernelEstimate {
    pub fn tuple_points(&self, k: usize) -> Vec<Point> {
        self.tuples[k].iter().map(|&i| self.points[i]).collect()
    }
}

fn check_design(pts: &PointSet, eps: f64, n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_SAMPLES, got: n });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("averaging radius {eps}")));
    }
    if pts.min_separation() <= 2.0 * eps {
        return Err(Error::PointsTooClose);
    }
    Ok(())
}

/// Circle-average functionals at each point of `pts`.
pub fn circle_average_functionals(dom: &Arc<LatticeDomain>, pts: &PointSet, eps: f64) -> Result<Vec<LinearFunctional>> {
    pts.points().iter().map(|z| circle_average_functional(dom, *z, eps)).collect()
}

/// `n` joint samples of `h_ε(z_i)`, one column per point. Advances the sampler.
pub fn circle_average_samples(sampler: &mut GffSampler, pts: &PointSet, eps: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    check_design(pts, eps, n)?;
    let fs = circle_average_functionals(sampler.domain(), pts, eps)?;
    sampler.functionals(&fs, n)
}

fn product(cols: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let n = cols[0].len();
    (0..n).map(|s| idx.iter().map(|&i| cols[i][s]).product()).collect()
}

fn estimate_from_columns(
    order: usize,
    pts: &PointSet,
    eps: f64,
    seed: u64,
    cols: &[Vec<f64>],
    tuples: Vec<Vec<usize>>,
) -> Result<KernelEstimate> {
    let mut mean = Vec::with_capacity(tuples.len());
    let mut se = Vec::with_capacity(tuples.len());
    for t in &tuples {
        let (m, s) = stats::mean_se(&product(cols, t), BLOCK)?;
        mean.push(m);
        se.push(s);
    }
    Ok(KernelEstimate { order, points: pts.points().to_vec(), eps, tuples, mean, se, n_samples: cols[0].len(), seed })
}

/// `E[h_ε(z_i) h_ε(z_j)]` for every pair `i < j` of `pts`.
pub fn estimate_k2(sampler: &mut GffSampler, pts: &PointSet, eps: f64, n: usize) -> Result<KernelEstimate> {
    let cols = circle_average_samples(sampler, pts, eps, n)?;
    let k = pts.len();
    let tuples = (0..k).flat_map(|i| (i + 1..k).map(move |j| vec![i, j])).collect();
    estimate_from_columns(2, pts, eps, sampler.seed(), &cols, tuples)
}

/// `E[h_ε(z_1) ⋯ h_ε(z_4)]` for a four-point set.
pub fn estimate_k4(sampler: &mut GffSampler, pts: &PointSet, eps: f64, n: usize) -> Result<KernelEstimate> {
    if pts.len() != 4 {
        return Err(Error::InvalidParameter(format!("four-point kernel needs 4 points, got {}", pts.len())));
    }
    let cols = circle_average_samples(sampler, pts, eps, n)?;
    estimate_from_columns(4, pts, eps, sampler.seed(), &cols, vec![vec![0, 1, 2, 3]])
}

/// Sum over the three pairings: `k₁₂k₃₄ + k₁₃k₂₄ + k₁₄k₂₃`.
///
/// Input order is `[k₁₂, k₁₃, k₁₄, k₂₃, k₂₄, k₃₄]`.
pub fn wick_predict(k: [f64; 6]) -> f64 {
    k[0] * k[5] + k[1] * k[4] + k[2] * k[3]
}

/// Fourth moment against the Wick prediction from the same samples.
#[derive(Clone, Debug, Serialize)]
pub struct WickCheck {
    pub points: Vec<Point>,
    pub k4: f64,
    pub k4_se: f64,
    /// Pair moments in the order expected by [`wick_predict`].
    pub k2: [f64; 6],
    pub predicted: f64,
    /// `k4 - predicted` and its jackknife standard error.
    pub diff: f64,
    pub diff_se: f64,
    pub n_samples: usize,
}

impl WickCheck {
    pub fn z(&self) -> f64 {
        self.diff / self.diff_se
    }

    pub fn passes(&self, k_se: f64) -> bool {
        self.diff.abs() <= k_se * self.diff_se
    }
}

const PAIRS: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Wick check from joint samples of four circle averages.
pub fn wick_from_columns(points: &[Point], cols: &[Vec<f64>]) -> Result<WickCheck> {
    let mut series = vec![product(cols, &[0, 1, 2, 3])];
    series.extend(PAIRS.iter().map(|p| product(cols, p)));
    let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    let bm = BlockMeans::new(&refs, BLOCK)?;
    let k2_of = |m: &[f64]| [m[1], m[2], m[3], m[4], m[5], m[6]];
    let (k4, k4_se) = bm.jackknife(|m| m[0]);
    let (diff, diff_se) = bm.jackknife(|m| m[0] - wick_predict(k2_of(m)));
    let totals = bm.totals();
    let k2 = k2_of(&totals);
    Ok(WickCheck {
        points: points.to_vec(),
        k4,
        k4_se,
        k2,
        predicted: wick_predict(k2),
        diff,
        diff_se,
        n_samples: bm.n_blocks() * BLOCK,
    })
}

pub fn wick_check(sampler: &mut GffSampler, pts: &PointSet, eps: f64, n: usize) -> Result<WickCheck> {
    if pts.len() != 4 {
        return Err(Error::InvalidParameter(format!("Wick check needs 4 points, got {}", pts.len())));
    }
    let cols = circle_average_samples(sampler, pts, eps, n)?;
    wick_from_columns(pts.points(), &cols)
}

/// Weighted least-squares fit `K₂ ≈ a·G` through the origin.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingFit {
    pub a_hat: f64,
    pub a_se: f64,
    pub r2: f64,
    /// `(mean_i - a_hat·G_i) / se_i`.
    pub residual_z: Vec<f64>,
}

pub fn fit_coupling(k2: &KernelEstimate, greens: &[f64]) -> Result<CouplingFit> {
    if greens.len() != k2.mean.len() {
        return Err(Error::DimensionMismatch { expected: k2.mean.len(), got: greens.len() });
    }
    if greens.len() < 5 {
        return Err(Error::DegenerateDesign(format!("{} tuples, need at least 5", greens.len())));
    }
    let spread = greens.iter().fold(f64::NEG_INFINITY, |m, g| m.max(*g))
        - greens.iter().fold(f64::INFINITY, |m, g| m.min(*g));
    if !(spread > 1e-12 * greens[0].abs().max(1e-300)) {
        return Err(Error::DegenerateDesign("all Green values equal".into()));
    }
    let fit = stats::origin_fit(greens, &k2.mean, &k2.se);
    let residual_z = k2
        .mean
        .iter()
        .zip(greens)
        .zip(&k2.se)
        .map(|((y, g), s)| (y - fit.slope * g) / if *s > 0.0 { *s } else { 1.0 })
        .collect();
    Ok(CouplingFit { a_hat: fit.slope, a_se: fit.slope_se, r2: fit.r2, residual_z })
}

/// `G` between two continuum points, bilinearly interpolated in both arguments.
///
/// For disjoint averaging balls this is exactly `E[h_ε(z) h_ε(w)]` of the
/// unit-amplitude lattice field.
pub fn green_interpolated(op: &DirichletOperator, z: Point, w: Point) -> Result<f64> {
    let dom = op.domain();
    let mut total = 0.0;
    for (c, a) in bilinear_corners(dom, z) {
        if a == 0.0 {
            continue;
        }
        let col = op.green_column(c)?;
        for (d, b) in bilinear_corners(dom, w) {
            total += a * b * col.at(d);
        }
    }
    Ok(total)
}

/// Green values for every tuple of a two-point estimate.
pub fn greens_for(op: &DirichletOperator, k2: &KernelEstimate) -> Result<Vec<f64>> {
    k2.tuples.iter().map(|t| green_interpolated(op, k2.points[t[0]], k2.points[t[1]])).collect()
}

/// Which logarithmic bound a [`LogBound`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    L2,
    L4,
    /// Pairwise form `Σ_{i≠j} log²(|z_i − z_j| / 4 diam D) ∨ log² 10`.
    L4Alt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogBound {
    pub kind: BoundKind,
    pub value: f64,
}

/// Conformal radii of the snapped points, from the calibrated lattice estimate.
pub fn conformal_radii(op: &DirichletOperator, pts: &PointSet) -> Result<Vec<f64>> {
    pts.snapped().iter().map(|g| op.conformal_radius(*g)).collect()
}

/// `R(z_i; z_1, …, z_k) = min_{j≠i} |z_i − z_j| ∧ R(z_i, D)/10`.
pub fn isolation_radius(points: &[Point], radii: &[f64], i: usize) -> Result<f64> {
    let mut d = radii[i] / 10.0;
    for (j, z) in points.iter().enumerate() {
        if j != i {
            let s = (points[i] - z).norm();
            if s == 0.0 {
                return Err(Error::CoincidentPoints);
            }
            d = d.min(s);
        }
    }
    Ok(d)
}

fn log_ratios(points: &[Point], radii: &[f64]) -> Result<Vec<f64>> {
    (0..points.len()).map(|i| Ok((radii[i] / isolation_radius(points, radii, i)?).ln())).collect()
}

/// `l₂(z, w) = [log(R(z)/R(z;z,w)) · log(R(w)/R(w;z,w))]^{1/2}` from given conformal radii.
pub fn l2_from_radii(points: [Point; 2], radii: [f64; 2]) -> Result<LogBound> {
    let l = log_ratios(&points, &radii)?;
    Ok(LogBound { kind: BoundKind::L2, value: (l[0] * l[1]).sqrt() })
}

/// `l₄ = (Π_i [log² + log](R(z_i)/R(z_i; z_1..z_4)))^{1/4}` from given conformal radii.
pub fn l4_from_radii(points: [Point; 4], radii: [f64; 4]) -> Result<LogBound> {
    let l = log_ratios(&points, &radii)?;
    let prod: f64 = l.iter().map(|x| x * x + x).product();
    Ok(LogBound { kind: BoundKind::L4, value: prod.powf(0.25) })
}

pub fn l2_bound(op: &DirichletOperator, pts: &PointSet) -> Result<LogBound> {
    if pts.len() != 2 {
        return Err(Error::InvalidParameter(format!("l2 needs 2 points, got {}", pts.len())));
    }
    let r = conformal_radii(op, pts)?;
    l2_from_radii([pts.points()[0], pts.points()[1]], [r[0], r[1]])
}

pub fn l4_bound(op: &DirichletOperator, pts: &PointSet) -> Result<LogBound> {
    if pts.len() != 4 {
        return Err(Error::InvalidParameter(format!("l4 needs 4 points, got {}", pts.len())));
    }
    let r = conformal_radii(op, pts)?;
    let p = pts.points();
    l4_from_radii([p[0], p[1], p[2], p[3]], [r[0], r[1], r[2], r[3]])
}

/// Pairwise alternative to `l₄`, using only distances and `diam D`.
pub fn l4_alt_bound(points: &[Point], diameter: f64) -> Result<LogBound> {
    let floor = 10f64.ln().powi(2);
    let mut total = 0.0;
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate() {
            if i != j {
                let d = (a - b).norm();
                if d == 0.0 {
                    return Err(Error::CoincidentPoints);
                }
                total += (d / (4.0 * diameter)).ln().powi(2).max(floor);
            }
        }
    }
    Ok(LogBound { kind: BoundKind::L4Alt, value: total })
}

/// One `(a, ε)` cell of the wedge fourth-moment scan.
#[derive(Clone, Debug, Serialize)]
pub struct WedgeRow {
    pub half_angle: f64,
    pub eps: f64,
    pub fourth_moment: f64,
    pub se: f64,
    /// Exact `3·Var²` of the Gaussian harmonic average.
    pub gaussian_prediction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WedgeFit {
    pub half_angle: f64,
    /// Least-squares slope of `log E[X⁴]` against `log ε`.
    pub exponent: f64,
    pub intercept: f64,
    /// Slope of the exact Gaussian prediction, for reference.
    pub gaussian_exponent: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WedgeScan {
    pub rows: Vec<WedgeRow>,
    pub fits: Vec<WedgeFit>,
    /// Smallest `c` with `E[X⁴] ≤ c log²(a)` over cells with `ε ≥ a`, if any.
    pub c_large_eps: Option<f64>,
}

/// Fourth moments of the harmonic average over `W_a` seen from `z = 1 − ε`,
/// for the field of `sampler` (which must live on the unit disk).
pub fn wedge_moment_scan(sampler: &mut GffSampler, eps_list: &[f64], angle_list: &[f64], n: usize) -> Result<WedgeScan> {
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_SAMPLES, got: n });
    }
    let parent = Arc::clone(sampler.domain());
    let delta = parent.mesh_delta();
    let amp2 = sampler.amplitude().powi(2);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &a in angle_list {
        let wedge = LatticeDomain::wedge(a, delta)?;
        let averager = HarmonicAverager::new(&parent, wedge)?;
        let fs = eps_list
            .iter()
            .map(|&e| averager.functional(Point::new(1.0 - e, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let cols = sampler.functionals(&fs, n)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut gs = Vec::new();
        for ((e, f), col) in eps_list.iter().zip(&fs).zip(&cols) {
            let fourth: Vec<f64> = col.iter().map(|x| x.powi(4)).collect();
            let (m, se) = stats::mean_se(&fourth, BLOCK)?;
            let var = amp2 * f.variance(sampler.op())?;
            rows.push(WedgeRow { half_angle: a, eps: *e, fourth_moment: m, se, gaussian_prediction: 3.0 * var * var });
            xs.push(e.ln());
            ys.push(m.ln());
            gs.push((3.0 * var * var).ln());
        }
        let (exponent, intercept) = if ys.iter().all(|y| y.is_finite()) { stats::linear_fit(&xs, &ys) } else { (0.0, 0.0) };
        let gaussian_exponent = if gs.iter().all(|g| g.is_finite()) { stats::linear_fit(&xs, &gs).0 } else { 0.0 };
        fits.push(WedgeFit { half_angle: a, exponent, intercept, gaussian_exponent });
    }
    let c_large_eps = rows
        .iter()
        .filter(|r| r.eps >= r.half_angle)
        .map(|r| r.fourth_moment / r.half_angle.ln().powi(2))
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))));
    Ok(WedgeScan { rows, fits, c_large_eps })
}

/// Mean-value defect of `y ↦ K₂(x, y)` on a ring of four lattice points.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicityProbe {
    pub centre_value: f64,
    pub ring_mean: f64,
    pub defect: f64,
    pub defect_se: f64,
}

/// Compares `K₂(x, y)` with the average of `K₂(x, y ± r e_k)` over the four
/// axis directions, `r` a whole number of lattice steps.
pub fn harmonicity_probe(sampler: &mut GffSampler, x: Point, y: Point, steps: i32, eps: f64, n: usize) -> Result<HarmonicityProbe> {
    let dom = Arc::clone(sampler.domain());
    let r = steps as f64 * dom.mesh_delta();
    let ring = [Point::new(r, 0.0), Point::new(-r, 0.0), Point::new(0.0, r), Point::new(0.0, -r)];
    let mut pts = vec![x, y];
    pts.extend(ring.iter().map(|d| y + d));
    let ps = PointSet::new(&dom, &pts)?;
    if (x - y).norm() <= 2.0 * eps + r {
        return Err(Error::PointsTooClose);
    }
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_SAMPLES, got: n });
    }
    let fs = circle_average_functionals(&dom, &ps, eps)?;
    let cols = sampler.functionals(&fs, n)?;
    let series: Vec<Vec<f64>> = (1..6).map(|k| product(&cols, &[0, k])).collect();
    let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    let bm = BlockMeans::new(&refs, BLOCK)?;
    let (defect, defect_se) = bm.jackknife(|m| m[0] - 0.25 * (m[1] + m[2] + m[3] + m[4]));
    let t = bm.totals();
    Ok(HarmonicityProbe { centre_value: t[0], ring_mean: 0.25 * (t[1] + t[2] + t[3] + t[4]), defect, defect_se })
}

/// Harmonic-measure stencil of the lattice ball `B_0(ε)` seen from its centre:
/// `(offset, weight)` pairs over the ball's boundary vertices.
pub fn ball_stencil(eps: f64, delta: f64) -> Result<Vec<(crate::domain::GridPoint, f64)>> {
    let ball = Arc::new(LatticeDomain::from_shape(crate::domain::Shape::Disk { radius: eps, center: [0.0, 0.0] }, delta)?);
    let op = DirichletOperator::assemble(&ball, DEFAULT_TOL)?;
    let hm = op.harmonic_measure_row(crate::domain::GridPoint::new(0, 0))?;
    Ok(ball.boundary().iter().copied().zip(hm.values().iter().copied()).collect())
}

/// The functional `h ↦ (h_ε, ψ) − (h, ψ)`, where `h_ε` is the vertexwise circle-average field.
pub fn circle_average_difference(tf: &TestFunction, eps: f64) -> Result<LinearFunctional> {
    let dom = tf.domain();
    let d2 = dom.mesh_delta().powi(2);
    let stencil = ball_stencil(eps, dom.mesh_delta())?;
    let mut terms = Vec::new();
    for (g, w) in dom.interior().iter().zip(tf.weights()) {
        if *w == 0.0 {
            continue;
        }
        if dom.clearance(dom.position(*g)) < eps + 2.0 * dom.mesh_delta() {
            return Err(Error::SupportEscapesDomain);
        }
        terms.push((dom.interior_index(*g).expect("interior vertex"), -d2 * w));
        for (off, p) in &stencil {
            let b = crate::domain::GridPoint::new(g.x + off.x, g.y + off.y);
            if let Some(i) = dom.interior_index(b) {
                terms.push((i, d2 * w * p));
            }
        }
    }
    LinearFunctional::new(dom, terms)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub variance: f64,
    pub se: f64,
    pub exact: f64,
}

/// `Var((h_ε, ψ) − (h, ψ))` along a list of radii.
pub fn circle_average_convergence(sampler: &mut GffSampler, tf: &TestFunction, eps_list: &[f64], n: usize) -> Result<Vec<ConvergenceRow>> {
    let fs = eps_list.iter().map(|e| circle_average_difference(tf, *e)).collect::<Result<Vec<_>>>()?;
    let cols = sampler.functionals(&fs, n)?;
    let amp2 = sampler.amplitude().powi(2);
    eps_list
        .iter()
        .zip(&fs)
        .zip(&cols)
        .map(|((e, f), c)| {
            let sq: Vec<f64> = c.iter().map(|x| x * x).collect();
            let (variance, se) = stats::mean_se(&sq, BLOCK)?;
            Ok(ConvergenceRow { eps: *e, variance, se, exact: amp2 * f.variance(sampler.op())? })
        })
        .collect()
}

/// One CSV row per tuple: coordinates, estimate, SE, Green value, bound, sample count, seed.
pub fn kernel_csv(est: &KernelEstimate, greens: &[f64], bounds: &[f64]) -> CsvTable {
    let mut header: Vec<String> = Vec::new();
    for i in 1..=est.order {
        header.push(format!("x{i}"));
        header.push(format!("y{i}"));
    }
    let bound = if est.order == 2 { "bound_l2" } else { "bound_l4" };
    for h in ["estimate", "se", "green", bound, "n_samples", "seed"] {
        header.push(h.into());
    }
    let mut t = CsvTable { header, rows: Vec::new() };
    for (k, tuple) in est.tuples.iter().enumerate() {
        let mut row: Vec<String> = tuple.iter().flat_map(|&i| [num(est.points[i].re), num(est.points[i].im)]).collect();
        row.push(num(est.mean[k]));
        row.push(num(est.se[k]));
        row.push(greens.get(k).map_or(String::new(), |g| num(*g)));
        row.push(bounds.get(k).map_or(String::new(), |b| num(*b)));
        row.push(est.n_samples.to_string());
        row.push(est.seed.to_string());
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(delta: f64) -> Arc<DirichletOperator> {
        Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, delta).unwrap()).unwrap())
    }

    #[test]
    fn wick_predict_examples() {
        assert_eq!(wick_predict([1.0; 6]), 3.0);
        assert_eq!(wick_predict([2.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(wick_predict([2.0, 0.0, 0.0, 0.0, 0.0, 2.0]), 4.0);
    }

    #[test]
    fn duplicate_points_are_too_close() {
        let op = disk(1.0 / 16.0);
        let z = Point::new(0.1, 0.1);
        let pts = PointSet::new(op.domain(), &[z, z]).unwrap();
        let mut s = GffSampler::new(op, 1);
        assert!(matches!(estimate_k2(&mut s, &pts, 0.1, 200), Err(Error::PointsTooClose)));
        let pts = PointSet::new(s.domain(), &[z, -z]).unwrap();
        assert!(matches!(estimate_k2(&mut s, &pts, 0.1, 50), Err(Error::InsufficientSamples { .. })));
    }

    fn synthetic(values: Vec<f64>) -> KernelEstimate {
        let k = values.len();
        KernelEstimate {
            order: 2,
            points: vec![],
            eps: 0.1,
            tuples: (0..k).map(|i| vec![i, i]).collect(),
            se: vec![0.01; k],
            mean: values,
            n_samples: 1000,
            seed: 0,
        }
    }

    #[test]
    fn coupling_fit_on_exact_data() {
        let g = [0.1, 0.2, 0.35, 0.5, 0.8];
        let fit = fit_coupling(&synthetic(g.iter().map(|x| 2.5 * x).collect()), &g).unwrap();
        assert!((fit.a_hat - 2.5).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.residual_z.iter().all(|z| z.abs() < 1e-9));
        assert!(matches!(fit_coupling(&synthetic(vec![1.0; 5]), &[0.3; 5]), Err(Error::DegenerateDesign(_))));
        assert!(matches!(fit_coupling(&synthetic(vec![1.0; 4]), &g[..4]), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn amplitude_two_quadruples_coupling() {
        let op = disk(1.0 / 16.0);
        let pts = PointSet::new(
            op.domain(),
            &[Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(-0.3, 0.3), Point::new(0.1, -0.5)],
        )
        .unwrap();
        let mut s1 = GffSampler::new(Arc::clone(&op), 3);
        let mut s2 = GffSampler::new(Arc::clone(&op), 3).with_amplitude(2.0);
        let e1 = estimate_k2(&mut s1, &pts, 0.125, 4000).unwrap();
        let e2 = estimate_k2(&mut s2, &pts, 0.125, 4000).unwrap();
        let g = greens_for(&op, &e1).unwrap();
        let f1 = fit_coupling(&e1, &g).unwrap();
        let f2 = fit_coupling(&e2, &g).unwrap();
        // identical noise streams: the ratio is exact up to rounding
        assert!((f2.a_hat / f1.a_hat - 4.0).abs() < 1e-9);
        assert!((f1.a_hat - 1.0).abs() <= 3.0 * f1.a_se, "a = {} ± {}", f1.a_hat, f1.a_se);
    }

    #[test]
    fn interpolated_green_is_the_exact_two_point_moment() {
        let op = disk(1.0 / 16.0);
        let dom = op.domain();
        let (z, w) = (Point::new(0.03, 0.1), Point::new(-0.4, 0.22));
        let fz = circle_average_functional(dom, z, 0.15).unwrap();
        let fw = circle_average_functional(dom, w, 0.15).unwrap();
        let exact = fz.covariance(&op, &fw).unwrap();
        assert!((exact - green_interpolated(&op, z, w).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn log_bound_algebra() {
        let z = Point::new(0.0, 0.0);
        // far apart: minimum saturates at R/10 and both factors are log 10
        let b = l2_from_radii([z, Point::new(0.5, 0.0)], [1.0, 0.75]).unwrap();
        assert!((b.value - 10f64.ln()).abs() < 1e-12);
        // close: halving the distance adds log 2 to each factor
        let near = |d: f64| l2_from_radii([z, Point::new(d, 0.0)], [1.0, 1.0]).unwrap().value;
        assert!((near(0.01) - near(0.02) - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(l2_from_radii([z, z], [1.0, 1.0]), Err(Error::CoincidentPoints)));
        assert!(matches!(l4_alt_bound(&[z, z, Point::new(0.1, 0.0), Point::new(0.2, 0.0)], 2.0), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn l2_is_rotation_invariant_on_the_disk() {
        let op = disk(1.0 / 64.0);
        let r = 0.5;
        let vals: Vec<f64> = [0.0, 0.7, 1.9, 3.0]
            .iter()
            .map(|t| {
                let pts = PointSet::new(op.domain(), &[Point::new(0.0, 0.0), Point::from_polar(r, *t)]).unwrap();
                l2_bound(&op, &pts).unwrap().value
            })
            .collect();
        for v in &vals {
            assert!((v - vals[0]).abs() / vals[0] < 0.03, "{vals:?}");
        }
    }

    #[test]
    fn zero_amplitude_wedge_scan_is_zero() {
        let op = disk(1.0 / 32.0);
        let mut s = GffSampler::new(op, 2).with_amplitude(0.0);
        let scan = wedge_moment_scan(&mut s, &[0.125, 0.25], &[std::f64::consts::FRAC_PI_2], 200).unwrap();
        assert!(scan.rows.iter().all(|r| r.fourth_moment == 0.0));
    }

    #[test]
    fn circle_average_difference_matches_exact_variance_and_shrinks() {
        let op = disk(1.0 / 32.0);
        let tf = TestFunction::from_fn(op.domain(), |p| crate::sampler::bump(p.norm() / 0.4)).unwrap();
        let v: Vec<f64> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|e| circle_average_difference(&tf, *e).unwrap().variance(&op).unwrap())
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    }

    #[test]
    fn csv_has_one_row_per_pair() {
        let est = KernelEstimate {
            order: 2,
            points: vec![Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(0.0, 0.5)],
            eps: 0.1,
            tuples: vec![vec![0, 1], vec![0, 2], vec![1, 2]],
            mean: vec![1.0; 3],
            se: vec![0.1; 3],
            n_samples: 100,
            seed: 9,
        };
        let t = kernel_csv(&est, &[0.5; 3], &[2.0; 3]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.header.len(), 4 + 6);
        assert_eq!(t.rows[2][0], "0.5");
    }
}
