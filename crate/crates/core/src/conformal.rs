//! Closed-form conformal maps between canonical domains, pushforward of test
//! functions, and the two-point invariance experiment.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{GridPoint, LatticeDomain};
use crate::error::{Error, Result};
use crate::kernels::MIN_SAMPLES;
use crate::sampler::{bilinear_corners, circle_average_functional, GffSampler, TestFunction};
use crate::stats::{self, BLOCK};
use crate::Point;

/// Analytic bijection between canonical domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalMap {
    /// Disk automorphism `e^{iθ}(z − w)/(1 − w̄z)`.
    MobiusDisk { w: [f64; 2], rotation: f64 },
    /// `c·z + b` on the whole plane.
    ScaleTranslate { c: f64, b: [f64; 2] },
    /// `z^{π/(2a)}` from the wedge `W_a` onto the right half-disk.
    WedgePower { half_angle: f64 },
    /// `z^{2a/π}` from the right half-disk onto `W_a`.
    WedgeRoot { half_angle: f64 },
    /// `(z − i)/(z + i)` from the upper half-plane onto the unit disk.
    HalfPlaneToDisk,
    /// `i(1 + z)/(1 − z)` from the unit disk onto the upper half-plane.
    DiskToHalfPlane,
    /// Maps applied left to right.
    Composition { maps: Vec<ConformalMap> },
}

const I: Point = Point::new(0.0, 1.0);

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

impl ConformalMap {
    pub fn identity() -> Self {
        ConformalMap::ScaleTranslate { c: 1.0, b: [0.0, 0.0] }
    }

    pub fn rotation(theta: f64) -> Self {
        ConformalMap::MobiusDisk { w: [0.0, 0.0], rotation: theta }
    }

    pub fn mobius(w: Point, rotation: f64) -> Result<Self> {
        if !(w.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!("Möbius centre {w} outside the unit disk")));
        }
        Ok(ConformalMap::MobiusDisk { w: [w.re, w.im], rotation })
    }

    fn check_source(&self, z: Point) -> Result<()> {
        let inside = match self {
            ConformalMap::MobiusDisk { .. } | ConformalMap::DiskToHalfPlane => z.norm() < 1.0,
            ConformalMap::ScaleTranslate { .. } | ConformalMap::Composition { .. } => true,
            ConformalMap::WedgePower { half_angle } => z.norm() < 1.0 && z.norm() > 0.0 && z.arg().abs() < *half_angle,
            ConformalMap::WedgeRoot { .. } => z.norm() < 1.0 && z.re > 0.0,
            ConformalMap::HalfPlaneToDisk => z.im > 0.0,
        };
        if inside {
            Ok(())
        } else {
            Err(Error::PointOutsideSource(z.re, z.im))
        }
    }

    /// True if `z` lies in the source domain.
    pub fn in_source(&self, z: Point) -> bool {
        match self {
            ConformalMap::Composition { maps } => {
                let mut u = z;
                for m in maps {
                    match m.apply(u) {
                        Ok(v) => u = v,
                        Err(_) => return false,
                    }
                }
                true
            }
            m => m.check_source(z).is_ok(),
        }
    }

    pub fn apply(&self, z: Point) -> Result<Point> {
        self.check_source(z)?;
        Ok(match self {
            ConformalMap::MobiusDisk { w, rotation } => {
                let w = pt(*w);
                Point::from_polar(1.0, *rotation) * (z - w) / (1.0 - w.conj() * z)
            }
            ConformalMap::ScaleTranslate { c, b } => c * z + pt(*b),
            ConformalMap::WedgePower { half_angle } => z.powf(PI / (2.0 * half_angle)),
            ConformalMap::WedgeRoot { half_angle } => z.powf(2.0 * half_angle / PI),
            ConformalMap::HalfPlaneToDisk => (z - I) / (z + I),
            ConformalMap::DiskToHalfPlane => I * (1.0 + z) / (1.0 - z),
            ConformalMap::Composition { maps } => {
                let mut u = z;
                for m in maps {
                    u = m.apply(u)?;
                }
                u
            }
        })
    }

    pub fn derivative(&self, z: Point) -> Result<Point> {
        self.check_source(z)?;
        Ok(match self {
            ConformalMap::MobiusDisk { w, rotation } => {
                let w = pt(*w);
                let d = 1.0 - w.conj() * z;
                Point::from_polar(1.0, *rotation) * (1.0 - w.norm_sqr()) / (d * d)
            }
            ConformalMap::ScaleTranslate { c, .. } => Point::new(*c, 0.0),
            ConformalMap::WedgePower { half_angle } => {
                let p = PI / (2.0 * half_angle);
                p * z.powf(p - 1.0)
            }
            ConformalMap::WedgeRoot { half_angle } => {
                let p = 2.0 * half_angle / PI;
                p * z.powf(p - 1.0)
            }
            ConformalMap::HalfPlaneToDisk => 2.0 * I / ((z + I) * (z + I)),
            ConformalMap::DiskToHalfPlane => 2.0 * I / ((1.0 - z) * (1.0 - z)),
            ConformalMap::Composition { maps } => {
                let mut u = z;
                let mut d = Point::new(1.0, 0.0);
                for m in maps {
                    d *= m.derivative(u)?;
                    u = m.apply(u)?;
                }
                d
            }
        })
    }

    pub fn inverse(&self) -> Result<ConformalMap> {
        Ok(match self {
            ConformalMap::MobiusDisk { w, rotation } => ConformalMap::Composition {
                maps: vec![
                    ConformalMap::MobiusDisk { w: [0.0, 0.0], rotation: -rotation },
                    ConformalMap::MobiusDisk { w: [-w[0], -w[1]], rotation: 0.0 },
                ],
            },
            ConformalMap::ScaleTranslate { c, b } => {
                if *c == 0.0 {
                    return Err(Error::InvalidParameter("scale factor 0 has no inverse".into()));
                }
                ConformalMap::ScaleTranslate { c: 1.0 / c, b: [-b[0] / c, -b[1] / c] }
            }
            ConformalMap::WedgePower { half_angle } => ConformalMap::WedgeRoot { half_angle: *half_angle },
            ConformalMap::WedgeRoot { half_angle } => ConformalMap::WedgePower { half_angle: *half_angle },
            ConformalMap::HalfPlaneToDisk => ConformalMap::DiskToHalfPlane,
            ConformalMap::DiskToHalfPlane => ConformalMap::HalfPlaneToDisk,
            ConformalMap::Composition { maps } => {
                ConformalMap::Composition { maps: maps.iter().rev().map(|m| m.inverse()).collect::<Result<_>>()? }
            }
        })
    }

    pub fn then(self, next: ConformalMap) -> ConformalMap {
        let mut maps = match self {
            ConformalMap::Composition { maps } => maps,
            m => vec![m],
        };
        match next {
            ConformalMap::Composition { maps: more } => maps.extend(more),
            m => maps.push(m),
        }
        ConformalMap::Composition { maps }
    }
}

/// Source weights bilinearly interpolated at a continuum point (zero off the interior).
fn interpolate(tf: &TestFunction, z: Point) -> f64 {
    let dom = tf.domain();
    bilinear_corners(dom, z)
        .into_iter()
        .map(|(g, w)| dom.interior_index(g).map_or(0.0, |i| w * tf.weights()[i]))
        .sum()
}

/// Push a test function forward: the target weights approximate `|(f⁻¹)′|² φ∘f⁻¹`.
pub fn pushforward_test_fn(m: &ConformalMap, tf: &TestFunction, target: &Arc<LatticeDomain>) -> Result<TestFunction> {
    let src = tf.domain();
    for (g, w) in src.interior().iter().zip(tf.weights()) {
        if *w != 0.0 {
            let image = m.apply(src.position(*g))?;
            if target.clearance(image) <= 0.0 {
                return Err(Error::ImageEscapesTarget);
            }
        }
    }
    let inv = m.inverse()?;
    let weights = target
        .interior()
        .iter()
        .map(|g| {
            let u = target.position(*g);
            if !inv.in_source(u) {
                return 0.0;
            }
            match (inv.apply(u), inv.derivative(u)) {
                (Ok(z), Ok(d)) => d.norm_sqr() * interpolate(tf, z),
                _ => 0.0,
            }
        })
        .collect();
    TestFunction::new(target, weights)
}

/// One pair of the invariance experiment.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceRow {
    pub z: Point,
    pub w: Point,
    pub fz: Point,
    pub fw: Point,
    pub source: f64,
    pub source_se: f64,
    pub target: f64,
    pub target_se: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub n_samples: usize,
    pub eps: f64,
}

impl InvarianceReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.z_score.abs()))
    }
}

/// `E[h_ε(z) h_ε(w)]` with jackknife SE for each pair, from one shared sampling pass.
pub fn pair_moments(sampler: &mut GffSampler, pairs: &[(Point, Point)], eps: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_SAMPLES, got: n });
    }
    let mut points: Vec<Point> = Vec::new();
    let index = |p: Point, points: &mut Vec<Point>| {
        points.iter().position(|q| *q == p).unwrap_or_else(|| {
            points.push(p);
            points.len() - 1
        })
    };
    let mut idx = Vec::with_capacity(pairs.len());
    for (z, w) in pairs {
        if (z - w).norm() <= 2.0 * eps {
            return Err(Error::PointsTooClose);
        }
        idx.push((index(*z, &mut points), index(*w, &mut points)));
    }
    let dom = Arc::clone(sampler.domain());
    let fs = points.iter().map(|p| circle_average_functional(&dom, *p, eps)).collect::<Result<Vec<_>>>()?;
    let cols = sampler.functionals(&fs, n)?;
    idx.iter()
        .map(|&(a, b)| {
            let prod: Vec<f64> = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).collect();
            stats::mean_se(&prod, BLOCK)
        })
        .collect()
}

/// Two-point kernels at `(z, w)` on the source lattice against `(f(z), f(w))` on
/// an independently sampled target lattice.
pub fn invariance_experiment(
    source: &mut GffSampler,
    target: &mut GffSampler,
    m: &ConformalMap,
    pairs: &[(Point, Point)],
    eps: f64,
    n: usize,
) -> Result<InvarianceReport> {
    let mapped = pairs.iter().map(|(z, w)| Ok((m.apply(*z)?, m.apply(*w)?))).collect::<Result<Vec<_>>>()?;
    let a = pair_moments(source, pairs, eps, n)?;
    let b = pair_moments(target, &mapped, eps, n)?;
    let rows = pairs
        .iter()
        .zip(&mapped)
        .zip(a.iter().zip(&b))
        .map(|(((z, w), (fz, fw)), (sa, sb))| InvarianceRow {
            z: *z,
            w: *w,
            fz: *fz,
            fw: *fw,
            source: sa.0,
            source_se: sa.1,
            target: sb.0,
            target_se: sb.1,
            z_score: stats::z_score(*sa, *sb),
        })
        .collect();
    Ok(InvarianceReport { rows, n_samples: n, eps })
}

/// Nearest interior vertex to a continuum point, if `z` is a vertex.
pub fn vertex_of(dom: &LatticeDomain, z: Point) -> Option<GridPoint> {
    dom.vertex_at(z).filter(|g| dom.interior_index(*g).is_some())
}
