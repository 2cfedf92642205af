//! One-dimensional harness suite.
//!
//! A process on intervals `[a, b]` that vanishes at both ends, is Markov with
//! linear interpolation as harmonic part, and is translation and Brownian
//! scaling invariant must be a multiple `σ` of the Brownian bridge. This module
//! samples such processes on finite grids and checks the consequences that can
//! be measured: bridge covariance, the Markov residual on subintervals, the
//! dyadic scaling identity, the Brownian motion obtained through
//! `W(t) = (1 + t) X(t/(1 + t))`, and Gaussian marginals. A deliberately
//! broken process ([`PoissonJitteredBridge`]) is shipped as a negative control.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::experiment::Check;
use crate::io::{num, CsvTable};
use crate::stats::{self, BlockMeans, BLOCK};

const GRID_TOL: f64 = 1e-12;

/// Path of a process pinned to zero at both ends of its interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgePath {
    pub interval: [f64; 2],
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: f64,
}

impl BridgePath {
    /// Value at a grid time.
    pub fn at(&self, t: f64) -> Result<f64> {
        grid_index(&self.grid, t).map(|i| self.values[i]).ok_or(Error::SubintervalOffGrid(t))
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["time", "value"]);
        for (s, v) in self.grid.iter().zip(&self.values) {
            t.push(vec![num(*s), num(*v)]);
        }
        t
    }
}

/// Path on `[0, T]` starting at zero (a Brownian motion sample, or a W-transform).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MotionPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl MotionPath {
    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("non-empty path")
    }

    /// Quadratic variation `Σ (ΔW)²` accumulated up to each grid time.
    pub fn quadratic_variation(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in self.values.windows(2) {
            acc += (w[1] - w[0]).powi(2);
            out.push(acc);
        }
        out
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["time", "value"]);
        for (s, v) in self.grid.iter().zip(&self.values) {
            t.push(vec![num(*s), num(*v)]);
        }
        t
    }
}

fn grid_index(grid: &[f64], t: f64) -> Option<usize> {
    let i = grid.partition_point(|g| *g < t - GRID_TOL);
    (i < grid.len() && (grid[i] - t).abs() <= GRID_TOL).then_some(i)
}

pub fn validate_grid(interval: [f64; 2], grid: &[f64]) -> Result<()> {
    let [a, b] = interval;
    if !(a < b) {
        return Err(Error::InvalidGrid(format!("interval [{a}, {b}] is empty")));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("grid needs at least two times".into()));
    }
    if grid[0] != a || *grid.last().expect("len >= 2") != b {
        return Err(Error::InvalidGrid("grid endpoints differ from the interval".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid is not strictly increasing".into()));
    }
    Ok(())
}

/// `steps + 1` equally spaced times from `a` to `b` (endpoints exact).
pub fn uniform_grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=steps).map(|k| a + (b - a) * k as f64 / steps as f64).collect();
    g[steps] = b;
    g
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Exact bridge sample by sequential conditioning on the right endpoint.
fn bridge_values(interval: [f64; 2], grid: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b = interval[1];
    let mut values = vec![0.0; grid.len()];
    for k in 1..grid.len() - 1 {
        let (t0, t1) = (grid[k - 1], grid[k]);
        let mean = values[k - 1] * (b - t1) / (b - t0);
        let var = sigma * sigma * (t1 - t0) * (b - t1) / (b - t0);
        let xi: f64 = StandardNormal.sample(rng);
        values[k] = mean + var.sqrt() * xi;
    }
    values
}

/// `σ` times a Brownian bridge on `interval`, sampled exactly on `grid`.
pub fn sample_bridge(interval: [f64; 2], grid: &[f64], sigma: f64, seed: u64) -> Result<BridgePath> {
    BrownianBridge { sigma }.sample(interval, grid, seed, 0)
}

/// `σ` times a Brownian motion from 0 on `grid` (which must start at 0).
pub fn sample_motion(grid: &[f64], sigma: f64, seed: u64, stream: u64) -> Result<MotionPath> {
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidGrid("motion grid must start at 0".into()));
    }
    validate_grid([0.0, *grid.last().expect("non-empty")], grid)?;
    let mut r = rng(seed, stream);
    let mut values = vec![0.0; grid.len()];
    for k in 1..grid.len() {
        let xi: f64 = StandardNormal.sample(&mut r);
        values[k] = values[k - 1] + sigma * (grid[k] - grid[k - 1]).sqrt() * xi;
    }
    Ok(MotionPath { grid: grid.to_vec(), values })
}

/// A family of processes indexed by intervals, sampled on grids.
pub trait HarnessProcess: Sync {
    fn name(&self) -> String;
    /// Nominal diffusion scale.
    fn sigma(&self) -> f64;
    fn sample(&self, interval: [f64; 2], grid: &[f64], seed: u64, stream: u64) -> Result<BridgePath>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BrownianBridge {
    pub sigma: f64,
}

impl HarnessProcess for BrownianBridge {
    fn name(&self) -> String {
        format!("brownian_bridge(sigma={})", self.sigma)
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn sample(&self, interval: [f64; 2], grid: &[f64], seed: u64, stream: u64) -> Result<BridgePath> {
        validate_grid(interval, grid)?;
        let values = bridge_values(interval, grid, self.sigma, &mut rng(seed, stream));
        Ok(BridgePath { interval, grid: grid.to_vec(), values, sigma: self.sigma })
    }
}

/// Negative control: Brownian bridge plus `amplitude·(N(t) − t′ N(b))`, with
/// `N` an independent Poisson process of the given rate and `t′` the relative
/// position in the interval. Pinned at both ends and centred, with bridge-like
/// covariance, but not Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoissonJitteredBridge {
    pub sigma: f64,
    pub rate: f64,
    pub amplitude: f64,
}

impl Default for PoissonJitteredBridge {
    fn default() -> Self {
        Self { sigma: 1.0, rate: 0.25, amplitude: 2.0 }
    }
}

impl HarnessProcess for PoissonJitteredBridge {
    fn name(&self) -> String {
        format!("poisson_jittered_bridge(sigma={}, rate={}, amplitude={})", self.sigma, self.rate, self.amplitude)
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn sample(&self, interval: [f64; 2], grid: &[f64], seed: u64, stream: u64) -> Result<BridgePath> {
        validate_grid(interval, grid)?;
        let mut r = rng(seed, stream);
        let mut values = bridge_values(interval, grid, self.sigma, &mut r);
        let mut counts = vec![0.0; grid.len()];
        for k in 1..grid.len() {
            let lambda = self.rate * (grid[k] - grid[k - 1]);
            let jumps: f64 = Poisson::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut r);
            counts[k] = counts[k - 1] + jumps;
        }
        let [a, b] = interval;
        let total = counts[grid.len() - 1];
        for (k, v) in values.iter_mut().enumerate() {
            *v += self.amplitude * (counts[k] - (grid[k] - a) / (b - a) * total);
        }
        let last = values.len() - 1;
        values[0] = 0.0;
        values[last] = 0.0;
        Ok(BridgePath { interval, grid: grid.to_vec(), values, sigma: self.sigma })
    }
}

/// Linear interpolation of the path between `sub` endpoints, and the residual
/// `path − linear` on `sub` (which vanishes at both sub-endpoints).
pub fn markov_1d_decompose(path: &BridgePath, sub: [f64; 2]) -> Result<(BridgePath, BridgePath)> {
    let [a, b] = sub;
    if !(a < b) || a < path.interval[0] || b > path.interval[1] {
        return Err(Error::InvalidParameter(format!("subinterval [{a}, {b}]")));
    }
    let i = grid_index(&path.grid, a).ok_or(Error::SubintervalOffGrid(a))?;
    let j = grid_index(&path.grid, b).ok_or(Error::SubintervalOffGrid(b))?;
    let grid = path.grid[i..=j].to_vec();
    let (xa, xb) = (path.values[i], path.values[j]);
    let linear: Vec<f64> = grid.iter().map(|t| xa + (xb - xa) * (t - a) / (b - a)).collect();
    let mut residual: Vec<f64> = path.values[i..=j].iter().zip(&linear).map(|(x, l)| x - l).collect();
    let last = residual.len() - 1;
    residual[0] = 0.0;
    residual[last] = 0.0;
    let lin = BridgePath { interval: sub, grid: grid.clone(), values: linear, sigma: path.sigma };
    let res = BridgePath { interval: sub, grid, values: residual, sigma: path.sigma };
    Ok((lin, res))
}

fn check_unit_interval(path: &BridgePath) -> Result<()> {
    if path.interval != [0.0, 1.0] {
        return Err(Error::InvalidGrid(format!("expected [0, 1], got {:?}", path.interval)));
    }
    Ok(())
}

/// Exact-grid W-transform: output times `t_k = s_k/(1 − s_k)` for every grid
/// time `s_k < 1`, values `(1 + t_k) X(s_k)`.
pub fn w_transform(path: &BridgePath) -> Result<MotionPath> {
    check_unit_interval(path)?;
    let n = path.grid.len() - 1;
    let grid: Vec<f64> = path.grid[..n].iter().map(|s| s / (1.0 - s)).collect();
    let values = grid.iter().zip(&path.values[..n]).map(|(t, x)| (1.0 + t) * x).collect();
    Ok(MotionPath { grid, values })
}

fn interpolate(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let i = grid.partition_point(|g| *g <= t).clamp(1, grid.len() - 1);
    let (t0, t1) = (grid[i - 1], grid[i]);
    let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    values[i - 1] * (1.0 - w) + values[i] * w
}

/// W-transform onto an arbitrary output grid starting at 0, evaluating `X`
/// at `t/(1 + t)` by linear interpolation.
pub fn w_transform_on(path: &BridgePath, t_grid: &[f64]) -> Result<MotionPath> {
    check_unit_interval(path)?;
    validate_grid([0.0, *t_grid.last().ok_or_else(|| Error::InvalidGrid("empty grid".into()))?], t_grid)?;
    let values = t_grid.iter().map(|t| (1.0 + t) * interpolate(&path.grid, &path.values, t / (1.0 + t))).collect();
    Ok(MotionPath { grid: t_grid.to_vec(), values })
}

/// Inverse companion of [`w_transform`]: `X(s) = (1 − s) Z(s/(1 − s))` on the
/// grid `s_k = t_k/(1 + t_k)` plus the endpoint `s = 1`.
pub fn bb_transform(motion: &MotionPath) -> Result<BridgePath> {
    let mut grid: Vec<f64> = motion.grid.iter().map(|t| t / (1.0 + t)).collect();
    let mut values: Vec<f64> = motion.grid.iter().zip(&motion.values).map(|(t, z)| z / (1.0 + t)).collect();
    grid.push(1.0);
    values.push(0.0);
    validate_grid([0.0, 1.0], &grid)?;
    Ok(BridgePath { interval: [0.0, 1.0], grid, values, sigma: f64::NAN })
}

/// [`bb_transform`] onto a given grid of `[0, 1]`, interpolating `Z` linearly.
pub fn bb_transform_on(motion: &MotionPath, s_grid: &[f64]) -> Result<BridgePath> {
    validate_grid([0.0, 1.0], s_grid)?;
    let need = s_grid[s_grid.len() - 2] / (1.0 - s_grid[s_grid.len() - 2]);
    if need > motion.horizon() + GRID_TOL {
        return Err(Error::HorizonTooShort { have: motion.horizon(), need });
    }
    let values = s_grid
        .iter()
        .map(|&s| if s >= 1.0 { 0.0 } else { (1.0 - s) * interpolate(&motion.grid, &motion.values, s / (1.0 - s)) })
        .collect();
    Ok(BridgePath { interval: [0.0, 1.0], grid: s_grid.to_vec(), values, sigma: f64::NAN })
}

/// Moment comparison at one dyadic level of the scaling identity.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingLevel {
    pub level: u32,
    /// Raw moments 1..4 of `2^{n/2} X(2^{−n})` with SE.
    pub direct: [(f64, f64); 4],
    /// Raw moments 1..4 of `2^{−n/2+1} Σ_{k<n} 2^{k/2} X_k(1/2)` with SE.
    pub composed: [(f64, f64); 4],
    pub z: [f64; 4],
    /// Common exact variance `σ²(1 − 2^{−n})` at nominal `σ`.
    pub exact_variance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub levels: Vec<ScalingLevel>,
    pub n_samples: usize,
}

impl ScalingReport {
    pub fn max_abs_z(&self) -> f64 {
        self.levels.iter().flat_map(|l| l.z).fold(0.0, |m, z| m.max(z.abs()))
    }
}

/// Samples of both sides of the scaling identity, `[level][sample]`.
fn scaling_samples(process: &dyn HarnessProcess, n_levels: u32, n: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let fine = uniform_grid(0.0, 1.0, 1usize << n_levels);
    let coarse = [0.0, 0.5, 1.0];
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let path = process.sample([0.0, 1.0], &fine, seed, k)?;
            let mids = (0..n_levels as u64)
                .map(|j| Ok(process.sample([0.0, 1.0], &coarse, seed, ((j + 1) << 40) | k)?.values[1]))
                .collect::<Result<Vec<f64>>>()?;
            let direct = (1..=n_levels).map(|l| 2f64.powf(l as f64 / 2.0) * path.values[1usize << (n_levels - l)]).collect();
            let composed = (1..=n_levels)
                .map(|l| {
                    let s: f64 = (0..l as usize).map(|j| 2f64.powf(j as f64 / 2.0) * mids[j]).sum();
                    2f64.powf(-(l as f64) / 2.0 + 1.0) * s
                })
                .collect();
            Ok((direct, composed))
        })
        .collect::<Result<_>>()?;
    let transpose = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Vec<Vec<f64>> {
        (0..n_levels as usize).map(|l| rows.iter().map(|r| pick(r)[l]).collect()).collect()
    };
    Ok((transpose(&|r| &r.0), transpose(&|r| &r.1)))
}

/// Compare the first four moments of both sides of the dyadic scaling identity.
pub fn scaling_check_for(process: &dyn HarnessProcess, n_levels: u32, n_samples: usize, seed: u64) -> Result<ScalingReport> {
    if n_levels == 0 || n_levels > 20 {
        return Err(Error::InvalidParameter(format!("n_levels = {n_levels} not in 1..=20")));
    }
    let (direct, composed) = scaling_samples(process, n_levels, n_samples, seed)?;
    let sigma2 = process.sigma().powi(2);
    let levels = (0..n_levels as usize)
        .map(|l| {
            let d = stats::raw_moments(&direct[l], BLOCK)?;
            let c = stats::raw_moments(&composed[l], BLOCK)?;
            let z = [0, 1, 2, 3].map(|k| stats::z_score(d[k], c[k]));
            let level = l as u32 + 1;
            Ok(ScalingLevel { level, direct: d, composed: c, z, exact_variance: sigma2 * (1.0 - 2f64.powi(-(level as i32))) })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport { levels, n_samples })
}

/// Scaling check for the standard Brownian bridge.
pub fn scaling_check(n_levels: u32, n_samples: usize, seed: u64) -> Result<ScalingReport> {
    scaling_check_for(&BrownianBridge { sigma: 1.0 }, n_levels, n_samples, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub level: u32,
    pub m: f64,
    pub estimate: f64,
    pub se: f64,
    pub oracle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TightnessReport {
    pub rows: Vec<TailRow>,
    pub sigma2: f64,
    /// Every empirical tail within 3 SE of `2Φ̄(M/σ_n)`.
    pub matches_oracle: bool,
    /// Empirical tails non-increasing in `M` at every level.
    pub monotone_in_m: bool,
    /// `max_n P(|X_n| ≥ M) ≤ 2Φ̄(M/σ) + 3 SE` at every `M`.
    pub uniform_in_n: bool,
}

/// `2Φ̄(x) = P(|N(0,1)| ≥ x)`.
pub fn two_sided_normal_tail(x: f64) -> f64 {
    erfc(x / std::f64::consts::SQRT_2)
}

/// `sigma2_se` is the standard error of a fitted `σ²` from independent data; it is
/// carried into the oracle comparison by the delta method.
fn tightness_from(direct: &[Vec<f64>], m_grid: &[f64], sigma2: f64, sigma2_se: f64) -> TightnessReport {
    let mut rows = Vec::new();
    let mut matches_oracle = true;
    let mut monotone_in_m = true;
    let normal_density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for (l, xs) in direct.iter().enumerate() {
        let level = l as u32 + 1;
        let sn = (sigma2 * (1.0 - 2f64.powi(-(level as i32)))).sqrt();
        let n = xs.len() as f64;
        let mut prev = f64::INFINITY;
        for &m in m_grid {
            let estimate = xs.iter().filter(|x| x.abs() >= m).count() as f64 / n;
            let x = m / sn;
            let oracle = two_sided_normal_tail(x);
            // d/dσ² of 2Φ̄(M/σ_n) is φ(x)·x/σ²
            let fit_se = normal_density(x) * x / sigma2 * sigma2_se;
            let se = (oracle * (1.0 - oracle) / n + fit_se * fit_se).sqrt().max(1.0 / n);
            matches_oracle &= (estimate - oracle).abs() <= 3.0 * se;
            monotone_in_m &= estimate <= prev;
            prev = estimate;
            rows.push(TailRow { level, m, estimate, se, oracle });
        }
    }
    let uniform_in_n = m_grid.iter().all(|&m| {
        let x = m / sigma2.sqrt();
        let limit = two_sided_normal_tail(x);
        let n = direct[0].len() as f64;
        let fit_se = normal_density(x) * x / sigma2 * sigma2_se;
        let se = (limit * (1.0 - limit) / n + fit_se * fit_se).sqrt().max(1.0 / n);
        rows.iter().filter(|r| r.m == m).all(|r| r.estimate <= limit + 3.0 * se)
    });
    TightnessReport { rows, sigma2, matches_oracle, monotone_in_m, uniform_in_n }
}

/// Tail probabilities of `X^{[0,2ⁿ]}(1) =_d 2^{n/2} X^{[0,1]}(2^{−n})` for the standard bridge.
pub fn tightness_probe(n_levels: u32, m_grid: &[f64], n_samples: usize, seed: u64) -> Result<TightnessReport> {
    if n_levels == 0 || n_levels > 20 {
        return Err(Error::InvalidParameter(format!("n_levels = {n_levels} not in 1..=20")));
    }
    let (direct, _) = scaling_samples(&BrownianBridge { sigma: 1.0 }, n_levels, n_samples, seed)?;
    Ok(tightness_from(&direct, m_grid, 1.0, 0.0))
}

/// Covariance estimate at one pair of times.
#[derive(Clone, Debug, Serialize)]
pub struct CovRow {
    pub s: f64,
    pub t: f64,
    pub estimate: f64,
    pub se: f64,
    /// `σ̂² · k(s, t)` for the bridge kernel `k` of the relevant interval.
    pub predicted: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementRow {
    pub s: f64,
    pub t: f64,
    pub corr: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub n_paths: usize,
    pub steps: usize,
    pub n_levels: u32,
    pub scaling_samples: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, steps: 1024, n_levels: 4, scaling_samples: 100_000, seed: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub process: String,
    pub n_paths: usize,
    pub steps: usize,
    pub sigma2_hat: f64,
    pub sigma2_se: f64,
    pub covariance: Vec<CovRow>,
    pub markov_residual: Vec<CovRow>,
    pub qv_slope: f64,
    pub increments: Vec<IncrementRow>,
    pub kurtosis: f64,
    pub kurtosis_se: f64,
    pub scaling: ScalingReport,
    pub tightness: TightnessReport,
    pub scale_invariance_max_z: f64,
    pub continuity: Vec<(f64, f64)>,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Bridge covariance pairs on `[0, 1]`.
pub const COV_PAIRS: [(f64, f64); 5] = [(0.25, 0.75), (0.125, 0.5), (0.5, 0.875), (0.375, 0.375), (0.1875, 0.625)];
/// Markov residual pairs inside the subinterval [`MARKOV_SUB`].
pub const RESIDUAL_PAIRS: [(f64, f64); 5] = [(0.3125, 0.5), (0.375, 0.625), (0.5, 0.5), (0.4375, 0.6875), (0.5625, 0.71875)];
pub const MARKOV_SUB: [f64; 2] = [0.25, 0.75];
/// Bridge times `(s, t)` whose W-images give the increment probes `W(s′)`, `W(t′) − W(s′)`.
pub const INCREMENT_PAIRS: [(f64, f64); 3] = [(0.25, 0.5), (0.125, 0.375), (0.375, 0.75)];
const QV_HORIZON: f64 = 1.0;

fn bridge_kernel(s: f64, t: f64, a: f64, b: f64) -> f64 {
    let (s, t) = (s.min(t), s.max(t));
    (s - a) * (b - t) / (b - a)
}

/// Per-path features, in a fixed layout.
struct Features {
    cov: [f64; 5],
    res: [f64; 5],
    inc: [(f64, f64); 3],
    mid: f64,
}

fn features(path: &BridgePath, idx: &Indices) -> Result<(Features, Vec<f64>)> {
    let v = &path.values;
    let cov = COV_PAIRS.map(|_| 0.0);
    let mut cov = cov;
    for (c, (i, j)) in cov.iter_mut().zip(&idx.cov) {
        *c = v[*i] * v[*j];
    }
    let (_, residual) = markov_1d_decompose(path, MARKOV_SUB)?;
    let mut res = [0.0; 5];
    for (r, (i, j)) in res.iter_mut().zip(&idx.res) {
        *r = residual.values[*i] * residual.values[*j];
    }
    let w = w_transform(path)?;
    let mut inc = [(0.0, 0.0); 3];
    for (o, (i, j)) in inc.iter_mut().zip(&idx.inc) {
        *o = (w.values[*i], w.values[*j] - w.values[*i]);
    }
    let qv = w.quadratic_variation()[..=idx.qv_end].to_vec();
    Ok((Features { cov, res, inc, mid: v[idx.mid] }, qv))
}

struct Indices {
    cov: Vec<(usize, usize)>,
    res: Vec<(usize, usize)>,
    inc: Vec<(usize, usize)>,
    mid: usize,
    qv_end: usize,
}

/// Run the full harness suite on a process.
pub fn run_bridge_suite(process: &dyn HarnessProcess, cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.n_paths < 10 * BLOCK || cfg.scaling_samples < 10 * BLOCK {
        return Err(Error::InsufficientSamples { need: 10 * BLOCK, got: cfg.n_paths.min(cfg.scaling_samples) });
    }
    if cfg.steps % 1024 != 0 {
        return Err(Error::InvalidGrid(format!("steps = {} must be a multiple of 1024", cfg.steps)));
    }
    let grid = uniform_grid(0.0, 1.0, cfg.steps);
    let at = |t: f64| grid_index(&grid, t).ok_or(Error::SubintervalOffGrid(t));
    let sub0 = at(MARKOV_SUB[0])?;
    let qv_end = at(QV_HORIZON / (1.0 + QV_HORIZON))?;
    let idx = Indices {
        cov: COV_PAIRS.iter().map(|(s, t)| Ok((at(*s)?, at(*t)?))).collect::<Result<_>>()?,
        res: RESIDUAL_PAIRS.iter().map(|(s, t)| Ok((at(*s)? - sub0, at(*t)? - sub0))).collect::<Result<_>>()?,
        inc: INCREMENT_PAIRS.iter().map(|(s, t)| Ok((at(*s)?, at(*t)?))).collect::<Result<_>>()?,
        mid: at(0.5)?,
        qv_end,
    };

    // block-ordered reduction keeps the QV sums independent of scheduling
    let blocks: Vec<(Vec<Features>, Vec<f64>)> = (0..cfg.n_paths.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut feats = Vec::with_capacity(BLOCK);
            let mut qv_sum = vec![0.0; qv_end + 1];
            for k in b * BLOCK..((b + 1) * BLOCK).min(cfg.n_paths) {
                let path = process.sample([0.0, 1.0], &grid, cfg.seed, k as u64)?;
                let (f, qv) = features(&path, &idx)?;
                qv_sum.iter_mut().zip(qv).for_each(|(s, q)| *s += q);
                feats.push(f);
            }
            Ok((feats, qv_sum))
        })
        .collect::<Result<_>>()?;
    let mut qv_mean = vec![0.0; qv_end + 1];
    let mut feats = Vec::with_capacity(cfg.n_paths);
    for (f, q) in blocks {
        qv_mean.iter_mut().zip(q).for_each(|(m, x)| *m += x);
        feats.extend(f);
    }
    qv_mean.iter_mut().for_each(|m| *m /= cfg.n_paths as f64);

    let column = |pick: &dyn Fn(&Features) -> f64| -> Vec<f64> { feats.iter().map(pick).collect() };

    // σ̂² is a fixed-weight linear function of the five covariance means, so
    // every residual `m − σ̂²k` gets a joint jackknife SE
    let mut series: Vec<Vec<f64>> = (0..5).map(|k| column(&|f: &Features| f.cov[k])).collect();
    series.extend((0..5).map(|k| column(&|f: &Features| f.res[k])));
    let refs: Vec<&[f64]> = series.iter().map(|c| c.as_slice()).collect();
    let bm = BlockMeans::new(&refs, BLOCK)?;
    let kern: Vec<f64> = COV_PAIRS.iter().map(|(s, t)| bridge_kernel(*s, *t, 0.0, 1.0)).collect();
    let weights: Vec<f64> = (0..5).map(|k| 1.0 / bm.jackknife(|m| m[k]).1.powi(2)).collect();
    let norm: f64 = kern.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
    let fit_sigma2 = |m: &[f64]| -> f64 { (0..5).map(|k| weights[k] * kern[k] * m[k]).sum::<f64>() / norm };
    let (sigma2, sigma2_se) = bm.jackknife(fit_sigma2);
    let cov_rows = |pairs: &[(f64, f64)], offset: usize, a: f64, b: f64| -> Vec<CovRow> {
        pairs
            .iter()
            .enumerate()
            .map(|(j, (s, t))| {
                let k = bridge_kernel(*s, *t, a, b);
                let (estimate, se) = bm.jackknife(|m| m[offset + j]);
                let (diff, diff_se) = bm.jackknife(|m| m[offset + j] - fit_sigma2(m) * k);
                CovRow { s: *s, t: *t, estimate, se, predicted: sigma2 * k, z: diff / diff_se }
            })
            .collect()
    };
    let covariance = cov_rows(&COV_PAIRS, 0, 0.0, 1.0);
    let markov_residual = cov_rows(&RESIDUAL_PAIRS, 5, MARKOV_SUB[0], MARKOV_SUB[1]);

    let t_grid: Vec<f64> = grid[..=qv_end].iter().map(|s| s / (1.0 - s)).collect();
    let (qv_slope, _) = stats::linear_fit(&t_grid, &qv_mean);

    let bound = 3.0 / (cfg.n_paths as f64).sqrt();
    let increments: Vec<IncrementRow> = INCREMENT_PAIRS
        .iter()
        .enumerate()
        .map(|(k, (s, t))| {
            let a = column(&|f: &Features| f.inc[k].0);
            let b = column(&|f: &Features| f.inc[k].1);
            IncrementRow { s: s / (1.0 - s), t: t / (1.0 - t), corr: stats::correlation(&a, &b), bound }
        })
        .collect();
    let (kurtosis, kurtosis_se) = stats::excess_kurtosis(&column(&|f: &Features| f.mid));

    let scaling = scaling_check_for(process, cfg.n_levels, cfg.scaling_samples, cfg.seed ^ 0x5ca1)?;
    let (direct, _) = scaling_samples(process, cfg.n_levels, cfg.scaling_samples, cfg.seed ^ 0x5ca1)?;
    let tightness = tightness_from(&direct, &[0.5, 1.0, 1.5, 2.0, 2.5, 3.0], sigma2, sigma2_se);
    let scale_invariance_max_z = scale_invariance(process, 4.0, cfg.scaling_samples, cfg.seed ^ 0x1217)?;
    let continuity = continuity_probe(process, 0.1, cfg.scaling_samples, cfg.seed ^ 0xc0)?;

    let max_z = |rows: &[CovRow]| rows.iter().fold(0.0f64, |m, r| m.max(r.z.abs()));
    let rel_qv = (qv_slope / sigma2 - 1.0).abs();
    let max_corr = increments.iter().fold(0.0f64, |m, r| m.max(r.corr.abs()));
    let checks = vec![
        Check::new("bridge_covariance", max_z(&covariance) <= 3.0, format!("max |z| = {:.3}", max_z(&covariance))),
        Check::new("markov_residual_covariance", max_z(&markov_residual) <= 3.0, format!("max |z| = {:.3}", max_z(&markov_residual))),
        Check::new("quadratic_variation_slope", rel_qv <= 0.05, format!("slope {qv_slope:.5} vs sigma2_hat {sigma2:.5}")),
        Check::new("increment_independence", max_corr <= bound, format!("max |corr| = {max_corr:.5}, bound {bound:.5}")),
        Check::new("gaussian_kurtosis", kurtosis.abs() <= 3.0 * kurtosis_se, format!("excess kurtosis {kurtosis:.4} ± {kurtosis_se:.4}")),
        Check::new("scaling_identity_moments", scaling.max_abs_z() <= 3.0, format!("max |z| = {:.3}", scaling.max_abs_z())),
        Check::new("tightness_tails", tightness.matches_oracle && tightness.monotone_in_m && tightness.uniform_in_n,
            format!("oracle {}, monotone {}, uniform {}", tightness.matches_oracle, tightness.monotone_in_m, tightness.uniform_in_n)),
        Check::new("scale_invariance", scale_invariance_max_z <= 3.0, format!("max |z| = {scale_invariance_max_z:.3}")),
        Check::new("stochastic_continuity", continuity.windows(2).all(|w| w[1].1 <= w[0].1), format!("{continuity:?}")),
    ];
    Ok(SuiteReport {
        process: process.name(),
        n_paths: cfg.n_paths,
        steps: cfg.steps,
        sigma2_hat: sigma2,
        sigma2_se,
        covariance,
        markov_residual,
        qv_slope,
        increments,
        kurtosis,
        kurtosis_se,
        scaling,
        tightness,
        scale_invariance_max_z,
        continuity,
        checks,
    })
}

/// Largest moment z-score between `X^{[0,c]}(c t)/√c` and `X^{[0,1]}(t)` at five times.
pub fn scale_invariance(process: &dyn HarnessProcess, c: f64, n: usize, seed: u64) -> Result<f64> {
    let times = [0.125, 0.25, 0.5, 0.625, 0.875];
    let g1 = uniform_grid(0.0, 1.0, 8);
    let gc = uniform_grid(0.0, c, 8);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let a = process.sample([0.0, 1.0], &g1, seed, k)?;
            let b = process.sample([0.0, c], &gc, seed, (1 << 40) | k)?;
            let x = times.iter().map(|t| a.at(*t)).collect::<Result<Vec<_>>>()?;
            let y = times.iter().map(|t| Ok(b.at(c * t)? / c.sqrt())).collect::<Result<Vec<_>>>()?;
            Ok((x, y))
        })
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for j in 0..times.len() {
        let x: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
        let (mx, my) = (stats::raw_moments(&x, BLOCK)?, stats::raw_moments(&y, BLOCK)?);
        for k in 0..4 {
            worst = worst.max(stats::z_score(mx[k], my[k]).abs());
        }
    }
    Ok(worst)
}

/// `P(|X(s + h) − X(s)| > ε)` at `s = 1/4` along `h = 2^{−2}, …, 2^{−8}`.
pub fn continuity_probe(process: &dyn HarnessProcess, eps: f64, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let grid = uniform_grid(0.0, 1.0, 512);
    let s = 0.25;
    let hs: Vec<f64> = (2..=8).map(|k| 2f64.powi(-k)).collect();
    let counts: Vec<Vec<bool>> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let p = process.sample([0.0, 1.0], &grid, seed, k)?;
            let x0 = p.at(s)?;
            hs.iter().map(|h| Ok((p.at(s + h)? - x0).abs() > eps)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(hs
        .iter()
        .enumerate()
        .map(|(j, h)| (*h, counts.iter().filter(|c| c[j]).count() as f64 / n as f64))
        .collect())
}
