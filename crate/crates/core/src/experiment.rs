//! Experiment runner: configuration, seeding, execution and reports.
//!
//! Each experiment reads an [`ExperimentConfig`] (TOML, unknown keys
//! rejected), fills in defaults, validates every parameter it uses before any
//! computation, and produces a [`Report`] plus a CSV table of raw rows. Runs
//! are deterministic: the same resolved configuration gives byte-identical
//! `report.json` and `data.csv`, whatever the thread count.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bridge1d::{self, BrownianBridge, PoissonJitteredBridge, SuiteConfig, SuiteReport};
use crate::conformal::{self, ConformalMap};
use crate::domain::{GridPoint, LatticeDomain, PointSet};
use crate::error::{Error, Result};
use crate::io::{num, CsvTable};
use crate::kernels;
use crate::laplace::DirichletOperator;
use crate::markov::{self, MarkovDecomposer};
use crate::sampler::{circle_average_functional, GffSampler, LinearFunctional, TestFunction};
use crate::stats::{self, BlockMeans, BLOCK};
use crate::Point;

/// One pass/fail verdict inside a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    K2Green,
    Wick,
    Markov,
    Conformal,
    Boundary,
    LogVariance,
    WedgeScan,
    BridgeSuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::K2Green,
        Self::Wick,
        Self::Markov,
        Self::Conformal,
        Self::Boundary,
        Self::LogVariance,
        Self::WedgeScan,
        Self::BridgeSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::K2Green => "k2-green",
            Self::Wick => "wick",
            Self::Markov => "markov",
            Self::Conformal => "conformal",
            Self::Boundary => "boundary",
            Self::LogVariance => "log-variance",
            Self::WedgeScan => "wedge-scan",
            Self::BridgeSuite => "bridge-suite",
        }
    }

    /// The property under test, in words.
    pub fn property(self) -> &'static str {
        match self {
            Self::K2Green => "two-point kernel of circle averages is a constant multiple of the Dirichlet Green function",
            Self::Wick => "four-point kernel equals the sum over pairings of two-point kernels",
            Self::Markov => "domain Markov property: zero-boundary part on a subdomain is independent of the harmonic part",
            Self::Conformal => "two-point kernel is invariant under conformal automorphisms of the disk",
            Self::Boundary => "Dirichlet boundary condition: variance of annular averages vanishes near the boundary",
            Self::LogVariance => "circle-average variance grows like a multiple of log(1/eps)",
            Self::WedgeScan => "fourth moment of the harmonic wedge average decays at least like eps^3 near the boundary",
            Self::BridgeSuite => "one-dimensional harness processes are multiples of the Brownian bridge",
        }
    }

    fn uses(self) -> &'static [&'static str] {
        match self {
            Self::K2Green => &["mesh", "eps", "points", "disk_radius"],
            Self::Wick => &["mesh", "eps", "disk_radius"],
            Self::Markov => &["mesh", "disk_radius"],
            Self::Conformal => &["mesh", "eps"],
            Self::Boundary => &["mesh"],
            Self::LogVariance => &["mesh", "eps_list", "disk_radius"],
            Self::WedgeScan => &["mesh", "eps_list"],
            Self::BridgeSuite => &[],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("experiment: unknown name `{s}`")))
    }
}

/// Experiment configuration as read from TOML; every field but `experiment`
/// is optional and defaults per experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Lattice spacing `δ`.
    pub mesh: Option<f64>,
    /// Averaging radius.
    pub eps: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub points: Option<Vec<[f64; 2]>>,
    /// Radius of the centred disk domain.
    pub disk_radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(experiment, seed, samples, mesh, eps, eps_list, points, disk_radius, out, threads);
        self
    }

    fn given(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.mesh.is_some() {
            v.push("mesh");
        }
        if self.eps.is_some() {
            v.push("eps");
        }
        if self.eps_list.is_some() {
            v.push("eps_list");
        }
        if self.points.is_some() {
            v.push("points");
        }
        if self.disk_radius.is_some() {
            v.push("disk_radius");
        }
        v
    }

    /// Fill defaults and validate every parameter the experiment uses.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let kind = self.experiment.ok_or_else(|| Error::ConfigInvalid("experiment: missing".into()))?;
        for key in self.given() {
            if !kind.uses().contains(&key) {
                return Err(Error::ConfigInvalid(format!("{key}: not used by experiment `{kind}`")));
            }
        }
        let d = Defaults::of(kind);
        let r = ResolvedConfig {
            experiment: kind,
            seed: self.seed.unwrap_or(1),
            samples: self.samples.unwrap_or(d.samples),
            mesh: self.mesh.unwrap_or(d.mesh),
            eps: self.eps.unwrap_or(d.eps),
            eps_list: self.eps_list.clone().unwrap_or(d.eps_list),
            points: self.points.clone().unwrap_or(d.points),
            disk_radius: self.disk_radius.unwrap_or(1.0),
        };
        r.validate()?;
        Ok(r)
    }
}

struct Defaults {
    samples: usize,
    mesh: f64,
    eps: f64,
    eps_list: Vec<f64>,
    points: Vec<[f64; 2]>,
}

impl Defaults {
    fn of(kind: ExperimentKind) -> Self {
        let (samples, mesh, eps) = match kind {
            ExperimentKind::K2Green => (10_000, 1.0 / 64.0, 1.0 / 16.0),
            ExperimentKind::Wick => (100_000, 1.0 / 32.0, 1.0 / 16.0),
            ExperimentKind::Markov => (10_000, 1.0 / 32.0, 0.0),
            ExperimentKind::Conformal => (10_000, 1.0 / 64.0, 1.0 / 16.0),
            ExperimentKind::Boundary => (10_000, 1.0 / 64.0, 0.0),
            ExperimentKind::LogVariance => (100_000, 1.0 / 64.0, 0.0),
            ExperimentKind::WedgeScan => (10_000, 1.0 / 128.0, 0.0),
            ExperimentKind::BridgeSuite => (100_000, 0.0, 0.0),
        };
        let eps_list = match kind {
            ExperimentKind::LogVariance => vec![0.25, 0.125, 0.0625, 0.03125],
            ExperimentKind::WedgeScan => vec![0.125, 0.0625, 0.03125, 0.015625],
            _ => Vec::new(),
        };
        let points = match kind {
            ExperimentKind::K2Green => vec![[0.0, 0.0], [0.15, 0.0], [-0.2, 0.25], [0.6, -0.45], [-0.7, -0.3]],
            _ => Vec::new(),
        };
        Self { samples, mesh, eps, eps_list, points }
    }
}

/// Fully specified experiment parameters. This, and nothing else, determines the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub samples: usize,
    pub mesh: f64,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub disk_radius: f64,
}

fn invalid(key: &str, msg: impl fmt::Display) -> Error {
    Error::ConfigInvalid(format!("{key}: {msg}"))
}

impl ResolvedConfig {
    fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        let min = 10 * BLOCK;
        if self.samples < min {
            return Err(invalid("samples", format!("{} is below the minimum {min}", self.samples)));
        }
        if kind == ExperimentKind::BridgeSuite {
            return Ok(());
        }
        let uses = kind.uses();
        if !(self.mesh > 0.0 && self.mesh <= 0.125) {
            return Err(invalid("mesh", format!("{} not in (0, 1/8]", self.mesh)));
        }
        if uses.contains(&"disk_radius") {
            if !(self.disk_radius.is_finite() && self.disk_radius > 0.0) {
                return Err(invalid("disk_radius", format!("{} is not positive", self.disk_radius)));
            }
            if self.disk_radius / self.mesh < crate::domain::MIN_RESOLUTION as f64 {
                return Err(invalid("mesh", "too coarse for the disk radius"));
            }
        }
        let check_eps = |key: &str, e: f64| -> Result<()> {
            if !(e.is_finite() && e >= 2.0 * self.mesh) {
                return Err(invalid(key, format!("{e} is below twice the mesh {}", self.mesh)));
            }
            if e >= 0.5 * self.disk_radius {
                return Err(invalid(key, format!("{e} is too large for the disk")));
            }
            Ok(())
        };
        if uses.contains(&"eps") {
            check_eps("eps", self.eps)?;
        }
        if uses.contains(&"eps_list") {
            if self.eps_list.len() < 4 {
                return Err(invalid("eps_list", "needs at least four radii"));
            }
            for e in &self.eps_list {
                check_eps("eps_list", *e)?;
            }
            if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(invalid("eps_list", "must be strictly decreasing"));
            }
        }
        if uses.contains(&"points") {
            if self.points.len() < 4 {
                return Err(invalid("points", "needs at least four points (six pairs)"));
            }
            for p in &self.points {
                let r = Point::new(p[0], p[1]).norm();
                if !(r + self.eps + 2.0 * self.mesh < self.disk_radius) {
                    return Err(invalid("points", format!("({}, {}) is too close to the boundary", p[0], p[1])));
                }
            }
            let pts: Vec<Point> = self.points.iter().map(|p| Point::new(p[0], p[1])).collect();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if (pts[i] - pts[j]).norm() <= 2.0 * self.eps {
                        return Err(invalid("points", "two points are closer than twice eps"));
                    }
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub property: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ResolvedConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub struct Outcome {
    pub report: Report,
    pub data: CsvTable,
}

impl Outcome {
    /// Write `report.json` and `data.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json()?)?;
        self.data.write(&dir.join("data.csv"))
    }
}

fn outcome(cfg: &ResolvedConfig, checks: Vec<Check>, summary: impl Serialize, data: CsvTable) -> Result<Outcome> {
    let report = Report {
        experiment: cfg.experiment,
        property: cfg.experiment.property().to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        config: cfg.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        summary: serde_json::to_value(summary)?,
    };
    Ok(Outcome { report, data })
}

/// Independent seed for a named sub-stream of an experiment.
fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn disk_sampler(cfg: &ResolvedConfig, radius: f64, seed: u64) -> Result<GffSampler> {
    let op = DirichletOperator::new(LatticeDomain::disk(radius, cfg.mesh)?)?;
    Ok(GffSampler::new(Arc::new(op), seed))
}

/// Run a resolved experiment.
pub fn run_experiment(cfg: &ResolvedConfig) -> Result<Outcome> {
    match cfg.experiment {
        ExperimentKind::K2Green => run_k2_green(cfg),
        ExperimentKind::Wick => run_wick(cfg),
        ExperimentKind::Markov => run_markov(cfg),
        ExperimentKind::Conformal => run_conformal(cfg),
        ExperimentKind::Boundary => run_boundary(cfg),
        ExperimentKind::LogVariance => run_log_variance(cfg),
        ExperimentKind::WedgeScan => run_wedge_scan(cfg),
        ExperimentKind::BridgeSuite => run_bridge_suite(cfg),
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Resolve, run, and write reports to `out` (default `./out/<experiment>`).
/// Returns the process exit code; diagnostics go to stderr.
pub fn run(config: ExperimentConfig) -> i32 {
    let resolved = match config.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out").join(resolved.experiment.name()));
    let result = run_experiment(&resolved).and_then(|o| {
        o.write(&out)?;
        Ok(o)
    });
    match result {
        Ok(o) => {
            for c in &o.report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if o.report.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn pt(p: &[f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

#[derive(Serialize)]
struct K2Summary {
    eps: f64,
    n_samples: usize,
    a_hat: f64,
    a_se: f64,
    r2: f64,
    max_abs_residual_z: f64,
    /// Largest `|K₂| / l₂` over the pairs.
    max_kernel_over_l2: f64,
}

fn run_k2_green(cfg: &ResolvedConfig) -> Result<Outcome> {
    let mut sampler = disk_sampler(cfg, cfg.disk_radius, cfg.seed)?;
    let op = Arc::clone(sampler.op());
    let points: Vec<Point> = cfg.points.iter().map(pt).collect();
    let pts = PointSet::new(op.domain(), &points)?;
    let est = kernels::estimate_k2(&mut sampler, &pts, cfg.eps, cfg.samples)?;
    let greens = kernels::greens_for(&op, &est)?;
    let fit = kernels::fit_coupling(&est, &greens)?;
    let bounds = est
        .tuples
        .iter()
        .map(|t| Ok(kernels::l2_bound(&op, &PointSet::new(op.domain(), &[points[t[0]], points[t[1]]])?)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let max_z = fit.residual_z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let ratio = est.mean.iter().zip(&bounds).fold(0.0f64, |m, (k, l)| m.max(k.abs() / l));
    let checks = vec![
        Check::new("fit_r2", fit.r2 >= 0.99, format!("r2 = {:.5}", fit.r2)),
        Check::new("pair_residuals", max_z <= 3.0, format!("max |z| = {max_z:.3} over {} pairs", greens.len())),
    ];
    let summary = K2Summary {
        eps: cfg.eps,
        n_samples: est.n_samples,
        a_hat: fit.a_hat,
        a_se: fit.a_se,
        r2: fit.r2,
        max_abs_residual_z: max_z,
        max_kernel_over_l2: ratio,
    };
    outcome(cfg, checks, summary, kernels::kernel_csv(&est, &greens, &bounds))
}

/// Four-point configurations for the Wick experiment.
pub const WICK_CONFIGS: [[[f64; 2]; 4]; 5] = [
    [[0.3, 0.0], [-0.3, 0.0], [0.0, 0.3], [0.0, -0.3]],
    [[0.1, 0.1], [0.5, 0.1], [0.1, 0.5], [-0.3, -0.3]],
    [[-0.5, 0.0], [-0.2, 0.0], [0.2, 0.0], [0.5, 0.0]],
    [[0.0, 0.0], [0.25, 0.25], [-0.25, 0.25], [0.0, -0.4]],
    [[0.6, 0.0], [0.0, 0.6], [-0.6, 0.0], [0.0, -0.6]],
];

#[derive(Serialize)]
struct WickRow {
    config: usize,
    check: kernels::WickCheck,
    z: f64,
    l4: f64,
    l4_alt: f64,
}

fn run_wick(cfg: &ResolvedConfig) -> Result<Outcome> {
    let r = cfg.disk_radius;
    let mut sampler = disk_sampler(cfg, r, cfg.seed)?;
    let op = Arc::clone(sampler.op());
    let mut rows = Vec::new();
    let mut data = CsvTable::new(&["config", "k4", "k4_se", "predicted", "diff", "diff_se", "z", "l4", "l4_alt"]);
    for (c, conf) in WICK_CONFIGS.iter().enumerate() {
        let points: Vec<Point> = conf.iter().map(|p| pt(p) * r).collect();
        let pts = PointSet::new(op.domain(), &points)?;
        let check = kernels::wick_check(&mut sampler, &pts, cfg.eps, cfg.samples)?;
        let l4 = kernels::l4_bound(&op, &pts)?.value;
        let l4_alt = kernels::l4_alt_bound(&points, 2.0 * r)?.value;
        data.push(vec![
            c.to_string(),
            num(check.k4),
            num(check.k4_se),
            num(check.predicted),
            num(check.diff),
            num(check.diff_se),
            num(check.z()),
            num(l4),
            num(l4_alt),
        ]);
        rows.push(WickRow { config: c, z: check.z(), check, l4, l4_alt });
    }
    let max_z = rows.iter().fold(0.0f64, |m, w| m.max(w.z.abs()));
    let checks = vec![Check::new("wick_rule", max_z <= 3.0, format!("max |z| = {max_z:.3} over {} configurations", rows.len()))];
    outcome(cfg, checks, rows, data)
}

/// Grid offsets (in lattice units) of the covariance points inside the Markov subdomain.
const MARKOV_POINTS: [(i32, i32); 5] = [(0, 0), (8, 0), (0, 8), (-6, -6), (3, -10)];
const MARKOV_PROBES: usize = 20;

#[derive(Serialize)]
struct MarkovSummary {
    sub_radius: f64,
    n_samples: usize,
    max_reassembly_error: f64,
    max_harmonic_residual: f64,
    max_leakage: f64,
    uniqueness_ok: bool,
    covariance: Vec<CovarianceRow>,
    independence: markov::IndependenceReport,
}

#[derive(Serialize)]
struct CovarianceRow {
    x: GridPoint,
    y: GridPoint,
    estimate: f64,
    se: f64,
    green: f64,
    z: f64,
}

fn run_markov(cfg: &ResolvedConfig) -> Result<Outcome> {
    let sampler = disk_sampler(cfg, cfg.disk_radius, cfg.seed)?;
    let parent = Arc::clone(sampler.domain());
    let sub_radius = 0.5 * cfg.disk_radius;
    let sub = parent.subdomain_ball(Point::new(0.0, 0.0), sub_radius)?;
    let dec = MarkovDecomposer::new(&parent, &sub)?;
    let sub = Arc::clone(dec.sub());
    let scale = (cfg.mesh * 32.0).recip() * cfg.disk_radius;
    let points: Vec<GridPoint> = MARKOV_POINTS
        .iter()
        .map(|&(x, y)| GridPoint::new((x as f64 * scale).round() as i32, (y as f64 * scale).round() as i32))
        .collect();
    let sub_idx = points
        .iter()
        .map(|g| sub.interior_index(*g).ok_or(Error::VertexNotInterior(g.x, g.y)))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (i + 1..points.len()).map(move |j| (i, j))).collect();
    let probe_zero: Vec<usize> = (0..MARKOV_PROBES).map(|k| (k * 37 + 5) % sub.n_interior()).collect();
    let probe_harm: Vec<usize> = (0..MARKOV_PROBES).map(|k| (k * 101 + 13) % parent.n_interior()).collect();

    struct Row {
        reassembly: f64,
        residual: f64,
        leakage: f64,
        products: Vec<f64>,
        zero: Vec<f64>,
        harm: Vec<f64>,
    }
    let rows: Vec<Row> = sampler
        .map_samples(0, cfg.samples, |h| -> Result<Row> {
            let d = dec.decompose(h)?;
            let z = d.zero_part_in_sub();
            Ok(Row {
                reassembly: d.reassembly_error(h),
                residual: dec.harmonic_residual(&d, h)?,
                leakage: d.leakage(),
                products: pairs.iter().map(|&(i, j)| z.values()[sub_idx[i]] * z.values()[sub_idx[j]]).collect(),
                zero: probe_zero.iter().map(|&k| z.values()[k]).collect(),
                harm: probe_harm.iter().map(|&k| d.harmonic_part.values()[k]).collect(),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let max_of = |f: &dyn Fn(&Row) -> f64| rows.iter().fold(0.0f64, |m, r| m.max(f(r)));
    let max_reassembly_error = max_of(&|r| r.reassembly);
    let max_harmonic_residual = max_of(&|r| r.residual);
    let max_leakage = max_of(&|r| r.leakage);
    let uniqueness_ok = markov::uniqueness_check(&sampler.sample_at(0), &sub)?;

    let mut data = CsvTable::new(&["x1", "y1", "x2", "y2", "estimate", "se", "green", "z"]);
    let covariance = pairs
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| {
            let col: Vec<f64> = rows.iter().map(|r| r.products[p]).collect();
            let (estimate, se) = stats::mean_se(&col, BLOCK)?;
            let green = dec.sub_op().green(points[i], points[j])?;
            let z = (estimate - green) / se;
            data.push(vec![
                points[i].x.to_string(),
                points[i].y.to_string(),
                points[j].x.to_string(),
                points[j].y.to_string(),
                num(estimate),
                num(se),
                num(green),
                num(z),
            ]);
            Ok(CovarianceRow { x: points[i], y: points[j], estimate, se, green, z })
        })
        .collect::<Result<Vec<_>>>()?;
    let probe_values: Vec<(Vec<f64>, Vec<f64>)> = (0..MARKOV_PROBES)
        .map(|k| (rows.iter().map(|r| r.zero[k]).collect(), rows.iter().map(|r| r.harm[k]).collect()))
        .collect();
    let independence = markov::independence_from_values(&probe_values)?;
    let max_z = covariance.iter().fold(0.0f64, |m, r| m.max(r.z.abs()));
    let checks = vec![
        Check::new("decomposition_exact", max_reassembly_error <= 1e-10, format!("max error {max_reassembly_error:e}")),
        Check::new("harmonic_residual", max_harmonic_residual <= 1e-10, format!("max residual {max_harmonic_residual:e}")),
        Check::new("zero_part_support", max_leakage == 0.0, format!("max leakage {max_leakage:e}")),
        Check::new("uniqueness", uniqueness_ok, "harmonic part agrees with the harmonic-measure route".into()),
        Check::new("zero_part_covariance", max_z <= 3.0, format!("max |z| = {max_z:.3} over {} pairs", covariance.len())),
        Check::new(
            "independence_probes",
            independence.n_flags() <= 1,
            format!("{} of {} probes flagged at 3 sigma", independence.n_flags(), MARKOV_PROBES),
        ),
    ];
    let summary = MarkovSummary {
        sub_radius,
        n_samples: rows.len(),
        max_reassembly_error,
        max_harmonic_residual,
        max_leakage,
        uniqueness_ok,
        covariance,
        independence,
    };
    outcome(cfg, checks, summary, data)
}

/// Point pairs for the conformal invariance experiment.
pub const CONFORMAL_PAIRS: [([f64; 2], [f64; 2]); 5] = [
    ([0.0, 0.0], [0.5, 0.0]),
    ([0.1, 0.2], [-0.3, 0.1]),
    ([0.0, -0.4], [0.3, 0.3]),
    ([0.2, 0.0], [0.2, 0.35]),
    ([-0.35, 0.0], [0.05, -0.3]),
];
pub const CONFORMAL_ROTATION: f64 = 0.7;
pub const CONFORMAL_MOBIUS_W: f64 = 0.3;

#[derive(Serialize)]
struct ConformalSummary {
    maps: Vec<(String, ConformalMap, conformal::InvarianceReport)>,
}

fn run_conformal(cfg: &ResolvedConfig) -> Result<Outcome> {
    let maps = [
        ("rotation", ConformalMap::rotation(CONFORMAL_ROTATION)),
        ("mobius", ConformalMap::mobius(Point::new(CONFORMAL_MOBIUS_W, 0.0), 0.0)?),
    ];
    let pairs: Vec<(Point, Point)> = CONFORMAL_PAIRS.iter().map(|(a, b)| (pt(a), pt(b))).collect();
    let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, cfg.mesh)?)?);
    let mut data = CsvTable::new(&["map", "z", "w", "fz", "fw", "source", "source_se", "target", "target_se", "z_score"]);
    let mut checks = Vec::new();
    let mut out = Vec::new();
    for (k, (name, m)) in maps.iter().enumerate() {
        let mut source = GffSampler::new(Arc::clone(&op), derive_seed(cfg.seed, 2 * k as u64 + 1));
        let mut target = GffSampler::new(Arc::clone(&op), derive_seed(cfg.seed, 2 * k as u64 + 2));
        let rep = conformal::invariance_experiment(&mut source, &mut target, m, &pairs, cfg.eps, cfg.samples)?;
        for r in &rep.rows {
            let c = |p: Point| format!("{}{:+}i", num(p.re), p.im);
            data.push(vec![
                name.to_string(),
                c(r.z),
                c(r.w),
                c(r.fz),
                c(r.fw),
                num(r.source),
                num(r.source_se),
                num(r.target),
                num(r.target_se),
                num(r.z_score),
            ]);
        }
        let max_z = rep.max_abs_z();
        checks.push(Check::new(&format!("{name}_invariance"), max_z <= 3.0, format!("max |z| = {max_z:.3} over {} pairs", rep.rows.len())));
        out.push((name.to_string(), m.clone(), rep));
    }
    outcome(cfg, checks, ConformalSummary { maps: out }, data)
}

/// Annuli approaching the unit circle for the boundary experiment.
pub const BOUNDARY_ANNULI: [(f64, f64); 4] = [(0.5, 0.7), (0.7, 0.85), (0.85, 0.93), (0.93, 0.97)];

#[derive(Serialize)]
struct AnnulusRow {
    r_in: f64,
    r_out: f64,
    variance: f64,
    se: f64,
    exact: f64,
}

fn run_boundary(cfg: &ResolvedConfig) -> Result<Outcome> {
    let sampler = disk_sampler(cfg, 1.0, cfg.seed)?;
    let dom = Arc::clone(sampler.domain());
    let fs = BOUNDARY_ANNULI
        .iter()
        .map(|(a, b)| Ok(LinearFunctional::pairing(&TestFunction::annulus(&dom, *a, *b)?)))
        .collect::<Result<Vec<_>>>()?;
    let cols = sampler.functionals_at(&fs, 0, cfg.samples)?;
    let mut data = CsvTable::new(&["r_in", "r_out", "variance", "se", "exact"]);
    let rows = BOUNDARY_ANNULI
        .iter()
        .zip(&fs)
        .zip(&cols)
        .map(|(((r_in, r_out), f), col)| {
            let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
            let (variance, se) = stats::mean_se(&sq, BLOCK)?;
            let exact = f.variance(sampler.op())?;
            data.push(vec![num(*r_in), num(*r_out), num(variance), num(se), num(exact)]);
            Ok(AnnulusRow { r_in: *r_in, r_out: *r_out, variance, se, exact })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = rows.windows(2).all(|w| w[1].variance < w[0].variance);
    let ratio = rows[rows.len() - 1].variance / rows[0].variance;
    let checks = vec![
        Check::new("strictly_decreasing", decreasing, format!("{:?}", rows.iter().map(|r| r.variance).collect::<Vec<_>>())),
        Check::new("final_fraction", ratio <= 0.2, format!("last/first = {ratio:.4}")),
    ];
    outcome(cfg, checks, rows, data)
}

#[derive(Serialize)]
struct LogVarianceSummary {
    rows: Vec<LogVarianceRow>,
    slope: f64,
    intercept: f64,
    r2: f64,
    slope_first: f64,
    slope_last: f64,
    relative_slope_gap: f64,
}

#[derive(Serialize)]
struct LogVarianceRow {
    eps: f64,
    log_inv_eps: f64,
    variance: f64,
    se: f64,
    /// `G_D(0,0) − G_{B_ε}(0,0)`.
    exact: f64,
}

fn run_log_variance(cfg: &ResolvedConfig) -> Result<Outcome> {
    let sampler = disk_sampler(cfg, cfg.disk_radius, cfg.seed)?;
    let dom = Arc::clone(sampler.domain());
    let centre = Point::new(0.0, 0.0);
    let fs = cfg.eps_list.iter().map(|e| circle_average_functional(&dom, centre, *e)).collect::<Result<Vec<_>>>()?;
    let cols = sampler.functionals_at(&fs, 0, cfg.samples)?;
    let mut data = CsvTable::new(&["eps", "log_inv_eps", "variance", "se", "exact"]);
    let rows = cfg
        .eps_list
        .iter()
        .zip(&fs)
        .zip(&cols)
        .map(|((e, f), col)| {
            let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
            let bm = BlockMeans::new(&[col, &sq], BLOCK)?;
            let (variance, se) = bm.jackknife(|m| m[1] - m[0] * m[0]);
            let exact = f.variance(sampler.op())?;
            let row = LogVarianceRow { eps: *e, log_inv_eps: -e.ln(), variance, se, exact };
            data.push(vec![num(row.eps), num(row.log_inv_eps), num(variance), num(se), num(exact)]);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.log_inv_eps).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.variance).collect();
    let (slope, intercept) = stats::linear_fit(&xs, &ys);
    let r2 = stats::r_squared(&xs, &ys, slope, intercept);
    let k = rows.len();
    let slope_first = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    let slope_last = (ys[k - 1] - ys[k - 2]) / (xs[k - 1] - xs[k - 2]);
    let gap = (slope_first - slope_last).abs() / (0.5 * (slope_first + slope_last)).abs();
    let checks = vec![
        Check::new("log_fit_r2", r2 >= 0.99, format!("r2 = {r2:.5}, slope = {slope:.5}")),
        Check::new("slope_stability", gap <= 0.05, format!("first {slope_first:.5}, last {slope_last:.5}, gap {:.2}%", 100.0 * gap)),
    ];
    let summary = LogVarianceSummary { rows, slope, intercept, r2, slope_first, slope_last, relative_slope_gap: gap };
    outcome(cfg, checks, summary, data)
}

/// Wedge half-angles scanned by the wedge experiment.
pub const WEDGE_ANGLES: [f64; 3] = [PI / 2.0, PI / 4.0, PI / 8.0];

fn run_wedge_scan(cfg: &ResolvedConfig) -> Result<Outcome> {
    let mut sampler = disk_sampler(cfg, 1.0, cfg.seed)?;
    let scan = kernels::wedge_moment_scan(&mut sampler, &cfg.eps_list, &WEDGE_ANGLES, cfg.samples)?;
    let mut data = CsvTable::new(&["half_angle", "eps", "fourth_moment", "se", "gaussian_prediction"]);
    for r in &scan.rows {
        data.push(vec![num(r.half_angle), num(r.eps), num(r.fourth_moment), num(r.se), num(r.gaussian_prediction)]);
    }
    let checks = scan
        .fits
        .iter()
        .map(|f| {
            Check::new(
                &format!("eps_exponent_a{:.4}", f.half_angle),
                f.exponent >= 3.0,
                format!("fitted exponent {:.4} (Gaussian prediction {:.4})", f.exponent, f.gaussian_exponent),
            )
        })
        .collect();
    outcome(cfg, checks, scan, data)
}

#[derive(Serialize)]
struct BridgeSummary {
    bridge: SuiteReport,
    control: SuiteReport,
}

fn run_bridge_suite(cfg: &ResolvedConfig) -> Result<Outcome> {
    let suite = SuiteConfig { n_paths: cfg.samples, scaling_samples: cfg.samples, seed: cfg.seed, ..SuiteConfig::default() };
    let bridge = bridge1d::run_bridge_suite(&BrownianBridge { sigma: 1.0 }, &suite)?;
    let control = bridge1d::run_bridge_suite(&PoissonJitteredBridge::default(), &suite)?;
    let mut checks: Vec<Check> = bridge
        .checks
        .iter()
        .map(|c| Check { name: format!("bridge_{}", c.name), ..c.clone() })
        .collect();
    let caught = ["gaussian_kurtosis", "increment_independence"]
        .iter()
        .filter(|n| control.check(n).is_some_and(|c| !c.passed))
        .copied()
        .collect::<Vec<_>>();
    checks.push(Check::new(
        "control_rejected",
        !caught.is_empty(),
        format!("control fails {caught:?}; other control checks: {:?}", control.checks.iter().filter(|c| !c.passed).map(|c| &c.name).collect::<Vec<_>>()),
    ));
    let mut data = CsvTable::new(&["process", "kind", "s", "t", "estimate", "se", "predicted", "z"]);
    for (label, rep) in [("bridge", &bridge), ("control", &control)] {
        for (kind, rows) in [("covariance", &rep.covariance), ("markov_residual", &rep.markov_residual)] {
            for r in rows {
                data.push(vec![
                    label.into(),
                    kind.into(),
                    num(r.s),
                    num(r.t),
                    num(r.estimate),
                    num(r.se),
                    num(r.predicted),
                    num(r.z),
                ]);
            }
        }
    }
    outcome(cfg, checks, BridgeSummary { bridge, control }, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = ExperimentConfig::from_toml("experiment = \"wick\"\nsamlpes = 10\n").unwrap_err();
        assert!(err.to_string().contains("samlpes"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig::from_toml("experiment = \"k2-green\"\nseed = 3\nsamples = 2000\n").unwrap();
        let flags = ExperimentConfig { seed: Some(9), ..Default::default() };
        let r = file.merged(flags).resolve().unwrap();
        assert_eq!(r.seed, 9);
        assert_eq!(r.samples, 2000);
        assert_eq!(r.mesh, 1.0 / 64.0);
    }

    #[test]
    fn validation_names_the_key() {
        let base = ExperimentConfig { experiment: Some(ExperimentKind::K2Green), ..Default::default() };
        let cases = [
            (ExperimentConfig { samples: Some(5), ..base.clone() }, "samples"),
            (ExperimentConfig { mesh: Some(-1.0), ..base.clone() }, "mesh"),
            (ExperimentConfig { eps: Some(0.001), ..base.clone() }, "eps"),
            (ExperimentConfig { points: Some(vec![[0.99, 0.0]; 4]), ..base.clone() }, "points"),
            (ExperimentConfig { eps_list: Some(vec![0.1]), ..base.clone() }, "eps_list"),
            (ExperimentConfig::default(), "experiment"),
        ];
        for (cfg, key) in cases {
            let e = cfg.resolve().unwrap_err();
            assert!(matches!(&e, Error::ConfigInvalid(m) if m.starts_with(key)), "{key}: {e}");
        }
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig { experiment: Some(ExperimentKind::Boundary), ..Default::default() }.resolve().unwrap();
        let b = ResolvedConfig { seed: 2, ..a.clone() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            let toml = format!("experiment = \"{k}\"");
            assert_eq!(ExperimentConfig::from_toml(&toml).unwrap().experiment, Some(k));
        }
    }

    #[test]
    fn small_boundary_run_is_reproducible() {
        let cfg = ExperimentConfig {
            experiment: Some(ExperimentKind::Boundary),
            mesh: Some(1.0 / 16.0),
            samples: Some(1000),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert_eq!(a.data.to_csv(), b.data.to_csv());
    }
}
