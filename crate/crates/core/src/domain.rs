//! Square-lattice approximations of planar simply connected domains.
//!
//! A [`LatticeDomain`] is the set of grid vertices `v` whose continuum position
//! `v·δ` lies in an open region (disk, square, wedge, or an explicit mask),
//! together with its site boundary: the exterior vertices adjacent to the
//! interior. Vertex lists are row-major (`y` then `x`), so indices are stable
//! across runs.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::Point;

/// Minimum number of lattice steps across a characteristic length of a shape.
pub const MIN_RESOLUTION: f64 = 8.0;

/// Integer lattice vertex. Ordered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: i32,
    pub y: i32,
}

impl GridPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn neighbours(self) -> [GridPoint; 4] {
        let GridPoint { x, y } = self;
        [
            GridPoint::new(x + 1, y),
            GridPoint::new(x - 1, y),
            GridPoint::new(x, y + 1),
            GridPoint::new(x, y - 1),
        ]
    }

    /// Continuum position at mesh size `delta`.
    pub fn position(self, delta: f64) -> Point {
        Point::new(self.x as f64 * delta, self.y as f64 * delta)
    }
}

impl Ord for GridPoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for GridPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Continuum region a lattice domain discretises.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", content = "params", rename_all = "snake_case")]
pub enum Shape {
    /// Open disk `|z - center| < radius`.
    Disk { radius: f64, center: [f64; 2] },
    /// Open square `|x|, |y| < side / 2`.
    Square { side: f64 },
    /// `{ r e^{iθ} : -a < θ < a, 0 < r < 1 }`.
    Wedge { half_angle: f64 },
    /// Explicit interior vertex set.
    Custom { mask: Vec<[i32; 2]> },
}

impl Shape {
    fn contains(&self, z: Point) -> bool {
        match self {
            Shape::Disk { radius, center } => (z - Point::new(center[0], center[1])).norm() < *radius,
            Shape::Square { side } => z.re.abs() < side / 2.0 && z.im.abs() < side / 2.0,
            Shape::Wedge { half_angle } => z.norm() < 1.0 && z.norm() > 0.0 && z.arg().abs() < *half_angle,
            Shape::Custom { .. } => false,
        }
    }

    /// Distance from `z` to the continuum boundary, negative outside.
    /// `None` for mask domains, whose clearance is measured on the lattice.
    fn clearance(&self, z: Point) -> Option<f64> {
        let inside = self.contains(z);
        let d = match self {
            Shape::Disk { radius, center } => return Some(radius - (z - Point::new(center[0], center[1])).norm()),
            Shape::Square { side } => (side / 2.0 - z.re.abs()).min(side / 2.0 - z.im.abs()),
            Shape::Wedge { half_angle } => {
                let ray = |angle: f64| {
                    let dir = Point::from_polar(1.0, angle);
                    let t = z.re * dir.re + z.im * dir.im;
                    if t <= 0.0 {
                        z.norm()
                    } else {
                        (z - dir * t.min(1.0)).norm()
                    }
                };
                let arc = (1.0 - z.norm()).abs();
                let d = ray(*half_angle).min(ray(-*half_angle)).min(arc);
                if inside {
                    d
                } else {
                    -d
                }
            }
            Shape::Custom { .. } => return None,
        };
        Some(d)
    }
}

/// Serialisable `{shape, params, mesh_delta}` descriptor of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    pub mesh_delta: f64,
}

impl DomainSpec {
    pub fn build(&self) -> Result<LatticeDomain> {
        let delta = self.mesh_delta;
        match &self.shape {
            Shape::Disk { radius, center } => LatticeDomain::ball(Point::new(center[0], center[1]), *radius, delta),
            Shape::Square { side } => LatticeDomain::square(*side, delta),
            Shape::Wedge { half_angle } => LatticeDomain::wedge(*half_angle, delta),
            Shape::Custom { mask } => {
                LatticeDomain::from_mask(mask.iter().map(|&[x, y]| GridPoint::new(x, y)), delta)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Lattice approximation of a simply connected planar domain.
#[derive(Clone, Debug)]
pub struct LatticeDomain {
    mesh_delta: f64,
    shape: Shape,
    interior: Vec<GridPoint>,
    boundary: Vec<GridPoint>,
    interior_index: HashMap<GridPoint, usize>,
    boundary_index: HashMap<GridPoint, usize>,
    hash: String,
}

impl LatticeDomain {
    /// Discretise `shape` without any resolution check.
    pub fn from_shape(shape: Shape, mesh_delta: f64) -> Result<Self> {
        if !(mesh_delta > 0.0 && mesh_delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("mesh_delta = {mesh_delta}")));
        }
        let interior = match &shape {
            Shape::Custom { mask } => {
                let mut v: Vec<GridPoint> = mask.iter().map(|&[x, y]| GridPoint::new(x, y)).collect();
                v.sort();
                v.dedup();
                v
            }
            _ => {
                let (lo, hi) = shape_bounding_box(&shape, mesh_delta);
                let mut v = Vec::new();
                for y in lo.y..=hi.y {
                    for x in lo.x..=hi.x {
                        let g = GridPoint::new(x, y);
                        if shape.contains(g.position(mesh_delta)) {
                            v.push(g);
                        }
                    }
                }
                v
            }
        };
        Self::assemble(shape, interior, mesh_delta)
    }

    fn assemble(shape: Shape, interior: Vec<GridPoint>, mesh_delta: f64) -> Result<Self> {
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        let interior_index: HashMap<GridPoint, usize> = interior.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut boundary: Vec<GridPoint> = interior
            .iter()
            .flat_map(|g| g.neighbours())
            .filter(|n| !interior_index.contains_key(n))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        boundary.sort();
        let boundary_index = boundary.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let hash = domain_hash(mesh_delta, &interior, &boundary);
        let dom = Self { mesh_delta, shape, interior, boundary, interior_index, boundary_index, hash };
        if !dom.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(dom)
    }

    /// Lattice domain from an explicit interior vertex set.
    pub fn from_mask(mask: impl IntoIterator<Item = GridPoint>, mesh_delta: f64) -> Result<Self> {
        let mask = mask.into_iter().map(|g| [g.x, g.y]).collect();
        Self::from_shape(Shape::Custom { mask }, mesh_delta)
    }

    /// Centred disk of the given radius; requires `radius / mesh_delta >= 8`.
    pub fn disk(radius: f64, mesh_delta: f64) -> Result<Self> {
        Self::ball(Point::new(0.0, 0.0), radius, mesh_delta)
    }

    pub fn ball(center: Point, radius: f64, mesh_delta: f64) -> Result<Self> {
        check_resolution(radius, mesh_delta)?;
        Self::from_shape(Shape::Disk { radius, center: [center.re, center.im] }, mesh_delta)
    }

    pub fn square(side: f64, mesh_delta: f64) -> Result<Self> {
        check_resolution(side, mesh_delta)?;
        Self::from_shape(Shape::Square { side }, mesh_delta)
    }

    /// Lattice wedge `W_a` of half-angle `a ∈ (0, π/2]` inside the unit disk.
    pub fn wedge(half_angle: f64, mesh_delta: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= PI / 2.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("wedge half-angle {half_angle} not in (0, π/2]")));
        }
        check_resolution(1.0, mesh_delta)?;
        Self::from_shape(Shape::Wedge { half_angle }, mesh_delta)
    }

    /// Lattice ball `B_center(radius)` inside `self`, with clearance `2δ`.
    pub fn subdomain_ball(&self, center: Point, radius: f64) -> Result<Self> {
        let delta = self.mesh_delta;
        if radius < delta {
            return Err(Error::EmptyInterior);
        }
        let clearance = 2.0 * delta;
        let not_contained = || Error::BallNotContained { x: center.re, y: center.im, radius, clearance };
        if self.clearance(center) < radius + clearance {
            return Err(not_contained());
        }
        let sub = Self::from_shape(Shape::Disk { radius, center: [center.re, center.im] }, delta)?;
        if !sub.is_subdomain_of(self) {
            return Err(not_contained());
        }
        Ok(sub)
    }

    pub fn mesh_delta(&self) -> f64 {
        self.mesh_delta
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec { shape: self.shape.clone(), mesh_delta: self.mesh_delta }
    }

    pub fn interior(&self) -> &[GridPoint] {
        &self.interior
    }

    pub fn boundary(&self) -> &[GridPoint] {
        &self.boundary
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn interior_index(&self, g: GridPoint) -> Option<usize> {
        self.interior_index.get(&g).copied()
    }

    pub fn boundary_index(&self, g: GridPoint) -> Option<usize> {
        self.boundary_index.get(&g).copied()
    }

    /// Content hash of `(δ, interior, boundary)`; identifies the domain in file headers.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn position(&self, g: GridPoint) -> Point {
        g.position(self.mesh_delta)
    }

    /// Distance from `z` to the continuum boundary (negative outside). Mask
    /// domains use the distance to the nearest boundary vertex less `δ/2`.
    pub fn clearance(&self, z: Point) -> f64 {
        self.shape.clearance(z).unwrap_or_else(|| {
            let d = self
                .boundary
                .iter()
                .map(|b| (self.position(*b) - z).norm())
                .fold(f64::INFINITY, f64::min);
            d - self.mesh_delta / 2.0
        })
    }

    /// Nearest lattice vertex to `z`; ties go to the lexicographically smallest `(x, y)`.
    pub fn nearest_vertex(&self, z: Point) -> GridPoint {
        let fx = (z.re / self.mesh_delta).floor() as i32;
        let fy = (z.im / self.mesh_delta).floor() as i32;
        let mut best = GridPoint::new(fx, fy);
        let mut best_d = f64::INFINITY;
        for (dx, dy) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let g = GridPoint::new(fx + dx, fy + dy);
            let d = (self.position(g) - z).norm_sqr();
            if d < best_d - 1e-15 || ((d - best_d).abs() <= 1e-15 && (g.x, g.y) < (best.x, best.y)) {
                best = g;
                best_d = d;
            }
        }
        best
    }

    /// True if `z` coincides with a lattice vertex up to rounding.
    pub fn vertex_at(&self, z: Point) -> Option<GridPoint> {
        let g = self.nearest_vertex(z);
        ((self.position(g) - z).norm() <= 1e-9 * self.mesh_delta).then_some(g)
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.interior.first() else {
            return false;
        };
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(g) = queue.pop_front() {
            for n in g.neighbours() {
                if self.interior_index.contains_key(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.interior.len()
    }

    /// Hole check: every non-interior cell of the padded bounding box must be
    /// 8-connected to the outside.
    pub fn is_simply_connected(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        let (lo, hi) = (GridPoint::new(lo.x - 1, lo.y - 1), GridPoint::new(hi.x + 1, hi.y + 1));
        let inside_box = |g: GridPoint| g.x >= lo.x && g.x <= hi.x && g.y >= lo.y && g.y <= hi.y;
        let mut seen = HashSet::from([lo]);
        let mut queue = VecDeque::from([lo]);
        while let Some(g) = queue.pop_front() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let n = GridPoint::new(g.x + dx, g.y + dy);
                    if inside_box(n) && !self.interior_index.contains_key(&n) && seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
        let box_cells = ((hi.x - lo.x + 1) as usize) * ((hi.y - lo.y + 1) as usize);
        seen.len() + self.interior.len() == box_cells
    }

    /// `self.interior ⊂ parent.interior` and `self.boundary ⊂ parent.interior ∪ parent.boundary`.
    pub fn is_subdomain_of(&self, parent: &LatticeDomain) -> bool {
        (self.mesh_delta - parent.mesh_delta).abs() <= 1e-15 * parent.mesh_delta
            && self.interior.iter().all(|g| parent.interior_index.contains_key(g))
            && self
                .boundary
                .iter()
                .all(|g| parent.interior_index.contains_key(g) || parent.boundary_index.contains_key(g))
    }

    fn bounding_box(&self) -> (GridPoint, GridPoint) {
        let mut lo = GridPoint::new(i32::MAX, i32::MAX);
        let mut hi = GridPoint::new(i32::MIN, i32::MIN);
        for g in &self.interior {
            lo = GridPoint::new(lo.x.min(g.x), lo.y.min(g.y));
            hi = GridPoint::new(hi.x.max(g.x), hi.y.max(g.y));
        }
        (lo, hi)
    }

    /// Distance from interior vertex `g` to the nearest boundary vertex, in continuum units.
    pub fn distance_to_boundary(&self, g: GridPoint) -> f64 {
        let p = self.position(g);
        self.boundary.iter().map(|b| (self.position(*b) - p).norm()).fold(f64::INFINITY, f64::min)
    }
}

fn check_resolution(length: f64, mesh_delta: f64) -> Result<()> {
    if !(mesh_delta > 0.0) || !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("length {length}, mesh {mesh_delta}")));
    }
    if length / mesh_delta < MIN_RESOLUTION {
        return Err(Error::MeshTooCoarse(format!(
            "length/mesh = {:.3} < {MIN_RESOLUTION}",
            length / mesh_delta
        )));
    }
    Ok(())
}

fn shape_bounding_box(shape: &Shape, delta: f64) -> (GridPoint, GridPoint) {
    let (xmin, xmax, ymin, ymax) = match shape {
        Shape::Disk { radius, center } => {
            (center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius)
        }
        Shape::Square { side } => (-side / 2.0, side / 2.0, -side / 2.0, side / 2.0),
        Shape::Wedge { .. } => (0.0, 1.0, -1.0, 1.0),
        Shape::Custom { .. } => unreachable!("mask domains enumerate their own vertices"),
    };
    let lo = GridPoint::new((xmin / delta).floor() as i32 - 1, (ymin / delta).floor() as i32 - 1);
    let hi = GridPoint::new((xmax / delta).ceil() as i32 + 1, (ymax / delta).ceil() as i32 + 1);
    (lo, hi)
}

fn domain_hash(delta: f64, interior: &[GridPoint], boundary: &[GridPoint]) -> String {
    let mut h = Sha256::new();
    h.update(delta.to_bits().to_le_bytes());
    for list in [interior, boundary] {
        h.update((list.len() as u64).to_le_bytes());
        for g in list {
            h.update(g.x.to_le_bytes());
            h.update(g.y.to_le_bytes());
        }
    }
    h.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Continuum points paired with their nearest interior vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    snapped: Vec<GridPoint>,
}

impl PointSet {
    /// Each point must sit farther than `2δ` from the boundary.
    pub fn new(dom: &LatticeDomain, points: &[Point]) -> Result<Self> {
        let clearance = 2.0 * dom.mesh_delta();
        let mut snapped = Vec::with_capacity(points.len());
        for &z in points {
            if !(dom.clearance(z) > clearance) {
                return Err(Error::PointTooCloseToBoundary(z.re, z.im));
            }
            let g = dom.nearest_vertex(z);
            if dom.interior_index(g).is_none() {
                return Err(Error::PointTooCloseToBoundary(z.re, z.im));
            }
            snapped.push(g);
        }
        Ok(Self { points: points.to_vec(), snapped })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn snapped(&self) -> &[GridPoint] {
        &self.snapped
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest pairwise distance (infinite for fewer than two points).
    pub fn min_separation(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.min((a - b).norm());
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flood_fill_count(dom: &LatticeDomain) -> usize {
        let set: HashSet<_> = dom.interior().iter().copied().collect();
        let mut seen = HashSet::new();
        let mut stack = vec![dom.interior()[0]];
        while let Some(g) = stack.pop() {
            if set.contains(&g) && seen.insert(g) {
                stack.extend(g.neighbours());
            }
        }
        seen.len()
    }

    #[test]
    fn coarse_disk_enumeration() {
        // |v| < 2 in lattice units: the 3x3 block.
        let dom = LatticeDomain::from_shape(Shape::Disk { radius: 1.0, center: [0.0, 0.0] }, 0.5).unwrap();
        let expect: Vec<_> = (-1..=1).flat_map(|y| (-1..=1).map(move |x| GridPoint::new(x, y))).collect();
        assert_eq!(dom.interior(), expect.as_slice());
        assert_eq!(dom.n_boundary(), 12);
        assert!(matches!(LatticeDomain::disk(1.0, 0.5), Err(Error::MeshTooCoarse(_))));
        assert!(matches!(LatticeDomain::disk(1.0, 1.1), Err(Error::MeshTooCoarse(_))));
    }

    #[test]
    fn fine_disk_count_matches_area() {
        let dom = LatticeDomain::disk(1.0, 1.0 / 64.0).unwrap();
        let brute = (-64i32..=64)
            .flat_map(|y| (-64i32..=64).map(move |x| (x, y)))
            .filter(|(x, y)| x * x + y * y < 64 * 64)
            .count();
        assert_eq!(dom.n_interior(), brute);
        let area = PI * 64.0 * 64.0;
        assert!((dom.n_interior() as f64 - area).abs() / area < 0.01);
    }

    #[test]
    fn invariants_hold() {
        for dom in [
            LatticeDomain::disk(1.0, 1.0 / 16.0).unwrap(),
            LatticeDomain::square(1.0, 1.0 / 16.0).unwrap(),
            LatticeDomain::wedge(PI / 5.0, 1.0 / 32.0).unwrap(),
        ] {
            for g in dom.interior() {
                for n in g.neighbours() {
                    assert!(dom.interior_index(n).is_some() || dom.boundary_index(n).is_some());
                }
            }
            assert!(dom.boundary().iter().all(|b| dom.interior_index(*b).is_none()));
            assert!(dom.interior().windows(2).all(|w| w[0] < w[1]));
            assert!(dom.boundary().windows(2).all(|w| w[0] < w[1]));
            assert_eq!(flood_fill_count(&dom), dom.n_interior());
            assert!(dom.is_simply_connected());
        }
    }

    #[test]
    fn wedges() {
        let half = LatticeDomain::wedge(PI / 2.0, 1.0 / 32.0).unwrap();
        assert!(half.interior().iter().all(|g| g.x > 0 && g.x * g.x + g.y * g.y < 32 * 32));
        let thin = LatticeDomain::wedge(PI / 8.0, 1.0 / 128.0).unwrap();
        assert_eq!(flood_fill_count(&thin), thin.n_interior());
        assert!(matches!(LatticeDomain::wedge(PI / 8.0, 0.25), Err(Error::MeshTooCoarse(_) | Error::EmptyInterior)));
        assert!(LatticeDomain::wedge(2.0, 0.1).is_err());
    }

    #[test]
    fn balls() {
        let dom = LatticeDomain::disk(1.0, 1.0 / 64.0).unwrap();
        let b = dom.subdomain_ball(Point::new(0.0, 0.0), 0.5).unwrap();
        let area = PI * 32.0 * 32.0;
        assert!((b.n_interior() as f64 - area).abs() / area < 0.02);
        assert!(b.is_subdomain_of(&dom));
        assert!(matches!(dom.subdomain_ball(Point::new(0.0, 0.0), 0.01), Err(Error::EmptyInterior)));
        assert!(matches!(dom.subdomain_ball(Point::new(0.9, 0.0), 0.2), Err(Error::BallNotContained { .. })));
        let small = dom.subdomain_ball(Point::new(0.1, 0.05), 0.2).unwrap();
        let smaller = dom.subdomain_ball(Point::new(0.1, 0.05), 0.1).unwrap();
        assert!(smaller.interior().iter().all(|g| small.interior_index(*g).is_some()));
    }

    #[test]
    fn reproducible_and_round_trips() {
        let a = LatticeDomain::wedge(PI / 3.0, 1.0 / 40.0).unwrap();
        let b = LatticeDomain::wedge(PI / 3.0, 1.0 / 40.0).unwrap();
        assert_eq!(a.interior(), b.interior());
        assert_eq!(a.hash(), b.hash());
        for spec in [
            a.spec(),
            LatticeDomain::disk(1.0, 1.0 / 16.0).unwrap().spec(),
            LatticeDomain::from_mask([GridPoint::new(0, 0), GridPoint::new(1, 0)], 0.1).unwrap().spec(),
        ] {
            let json = spec.to_json().unwrap();
            let back = DomainSpec::from_json(&json).unwrap();
            assert_eq!(back, spec);
            let d1 = spec.build().unwrap();
            let d2 = back.build().unwrap();
            assert_eq!(d1.interior(), d2.interior());
            assert_eq!(d1.boundary(), d2.boundary());
        }
        let json = LatticeDomain::disk(1.0, 0.0625).unwrap().spec().to_json().unwrap();
        assert_eq!(json, r#"{"shape":"disk","params":{"radius":1.0,"center":[0.0,0.0]},"mesh_delta":0.0625}"#);
    }

    #[test]
    fn hole_detection() {
        let ring: Vec<_> = (-2..=2)
            .flat_map(|y| (-2..=2).map(move |x| GridPoint::new(x, y)))
            .filter(|g| g.x.abs() == 2 || g.y.abs() == 2)
            .collect();
        let dom = LatticeDomain::from_mask(ring, 0.1).unwrap();
        assert!(dom.is_connected());
        assert!(!dom.is_simply_connected());
        assert!(matches!(
            LatticeDomain::from_mask([GridPoint::new(0, 0), GridPoint::new(3, 0)], 0.1),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn point_sets_snap_and_check_clearance() {
        let dom = LatticeDomain::disk(1.0, 0.25 / 8.0).unwrap();
        let ps = PointSet::new(&dom, &[Point::new(0.0, 0.0), Point::new(0.5 + 1.0 / 64.0, 0.01)]).unwrap();
        assert_eq!(ps.snapped()[0], GridPoint::new(0, 0));
        // exact tie between x = 16 and x = 17 goes to the smaller
        assert_eq!(ps.snapped()[1], GridPoint::new(16, 0));
        assert!(PointSet::new(&dom, &[Point::new(0.95, 0.0)]).is_err());
    }
}
