//! Simply connected planar domains and their triangulations.

mod mesh;
mod mesher;
mod point;
pub mod polygon;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use mesh::{MeshAudit, MeshJson, TriMesh};
pub use mesher::{generate_mesh, generate_mesh_with, MeshOptions};
pub use point::{BBox, Point2};
pub use polygon::Polygon;

use crate::{Error, Result};

/// Which half of the unit disk a [`ImplicitDomain::CutDisk`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    /// `{x1 < β}`
    Left,
    /// `{x1 > β}`
    Right,
}

pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// Number of rays used to trace a sublevel boundary.
pub const SUBLEVEL_RAYS: usize = 4096;

/// Star-shaped component of `{f < level}` (optionally intersected with a
/// container), traced by bisection along rays from `center`.
#[derive(Clone)]
pub struct SublevelDomain {
    func: ScalarFn,
    level: f64,
    center: Point2,
    container: Option<Box<ImplicitDomain>>,
    boundary: Polygon,
}

impl fmt::Debug for SublevelDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SublevelDomain")
            .field("level", &self.level)
            .field("center", &self.center)
            .field("container", &self.container)
            .field("boundary_vertices", &self.boundary.len())
            .finish()
    }
}

impl SublevelDomain {
    pub fn new(
        func: ScalarFn,
        level: f64,
        center: Point2,
        container: Option<ImplicitDomain>,
        search_radius: f64,
    ) -> Result<Self> {
        let container = container.map(Box::new);
        let g = |p: Point2| {
            let v = func(p) - level;
            match &container {
                Some(c) => v.max(c.signed_distance(p)),
                None => v,
            }
        };
        if !(g(center) < 0.0) {
            return Err(Error::EmptyRegion(format!(
                "center ({}, {}) is not inside the sublevel set",
                center.x1, center.x2
            )));
        }
        let steps = 2000usize;
        let dr = search_radius / steps as f64;
        let mut pts = Vec::with_capacity(SUBLEVEL_RAYS);
        for k in 0..SUBLEVEL_RAYS {
            let theta = 2.0 * PI * k as f64 / SUBLEVEL_RAYS as f64;
            let dir = Point2::from_polar(1.0, theta);
            let mut lo = 0.0;
            let mut hi = None;
            for s in 1..=steps {
                let r = s as f64 * dr;
                if g(center + dir * r) >= 0.0 {
                    hi = Some(r);
                    break;
                }
                lo = r;
            }
            let mut hi = hi.ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "sublevel set is unbounded within radius {search_radius} along angle {theta}"
                ))
            })?;
            while hi - lo > 1e-13 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if g(center + dir * mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            pts.push(center + dir * lo);
        }
        let boundary = Polygon::new(pts)?;
        Ok(Self {
            func,
            level,
            center,
            container,
            boundary,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn eval(&self, p: Point2) -> f64 {
        (self.func)(p)
    }

    /// Dense boundary trace; every vertex lies on the level curve to ~1e-13.
    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn container(&self) -> Option<&ImplicitDomain> {
        self.container.as_deref()
    }
}

/// Bounded, simply connected open set in the plane.
#[derive(Debug, Clone)]
pub enum ImplicitDomain {
    Disk { center: Point2, radius: f64 },
    /// Unit disk cut by the vertical line `x1 = beta`.
    CutDisk { beta: f64, side: CutSide },
    Polygon(Polygon),
    Sublevel(Arc<SublevelDomain>),
}

impl ImplicitDomain {
    pub fn unit_disk() -> Self {
        Self::disk(Point2::ORIGIN, 1.0)
    }

    pub fn disk(center: Point2, radius: f64) -> Self {
        Self::Disk { center, radius }
    }

    pub fn cut_disk(beta: f64, side: CutSide) -> Result<Self> {
        if !(beta > -1.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cut position {beta} must lie in (-1, 1)"
            )));
        }
        Ok(Self::CutDisk { beta, side })
    }

    pub fn polygon(vertices: Vec<Point2>) -> Result<Self> {
        Ok(Self::Polygon(Polygon::new(vertices)?))
    }

    pub fn rectangle(lo: Point2, hi: Point2) -> Result<Self> {
        Self::polygon(vec![
            lo,
            Point2::new(hi.x1, lo.x2),
            hi,
            Point2::new(lo.x1, hi.x2),
        ])
    }

    pub fn sublevel(
        func: ScalarFn,
        level: f64,
        center: Point2,
        container: Option<ImplicitDomain>,
        search_radius: f64,
    ) -> Result<Self> {
        Ok(Self::Sublevel(Arc::new(SublevelDomain::new(
            func,
            level,
            center,
            container,
            search_radius,
        )?)))
    }

    /// Negative inside, zero on the boundary, positive outside; 1-Lipschitz.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        match self {
            Self::Disk { center, radius } => (p - *center).norm() - radius,
            Self::CutDisk { beta, side } => {
                let line = match side {
                    CutSide::Left => p.x1 - beta,
                    CutSide::Right => beta - p.x1,
                };
                (p.norm() - 1.0).max(line)
            }
            Self::Polygon(poly) => poly.signed_distance(p),
            Self::Sublevel(s) => s.boundary.signed_distance(p),
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.signed_distance(p) < 0.0
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Self::Disk { center, radius } => BBox {
                min: *center - Point2::new(*radius, *radius),
                max: *center + Point2::new(*radius, *radius),
            },
            Self::CutDisk { beta, side } => {
                let s = (1.0 - beta * beta).sqrt();
                let ymax = match side {
                    CutSide::Left if *beta < 0.0 => s,
                    CutSide::Right if *beta > 0.0 => s,
                    _ => 1.0,
                };
                match side {
                    CutSide::Left => BBox {
                        min: Point2::new(-1.0, -ymax),
                        max: Point2::new(*beta, ymax),
                    },
                    CutSide::Right => BBox {
                        min: Point2::new(*beta, -ymax),
                        max: Point2::new(1.0, ymax),
                    },
                }
            }
            Self::Polygon(poly) => poly.bbox(),
            Self::Sublevel(s) => s.boundary.bbox(),
        }
    }

    /// Largest distance between two boundary points.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Disk { radius, .. } => 2.0 * radius,
            Self::Polygon(p) => polygon_diameter(p.vertices()),
            Self::Sublevel(s) => polygon_diameter(s.boundary.vertices()),
            Self::CutDisk { .. } => polygon_diameter(&self.boundary_loop(1e-3)),
        }
    }

    /// Exact area where available (disk, cut disk, polygon); traced area otherwise.
    pub fn area(&self) -> f64 {
        match self {
            Self::Disk { radius, .. } => PI * radius * radius,
            Self::CutDisk { beta, side } => {
                // circular segment x1 > beta has area acos(b) - b sqrt(1-b^2)
                let right = beta.acos() - beta * (1.0 - beta * beta).sqrt();
                match side {
                    CutSide::Right => right,
                    CutSide::Left => PI - right,
                }
            }
            Self::Polygon(p) => p.area(),
            Self::Sublevel(s) => s.boundary.area(),
        }
    }

    /// Corner points that meshing must pin.
    pub fn boundary_corners(&self) -> Vec<Point2> {
        match self {
            Self::CutDisk { beta, .. } => {
                let s = (1.0 - beta * beta).sqrt();
                vec![Point2::new(*beta, s), Point2::new(*beta, -s)]
            }
            Self::Polygon(p) => p.vertices().to_vec(),
            _ => Vec::new(),
        }
    }

    /// Counter-clockwise boundary loop whose consecutive points are at most
    /// `h` apart. Every point lies exactly on the zero level of
    /// [`signed_distance`](Self::signed_distance) (up to rounding).
    pub fn boundary_loop(&self, h: f64) -> Vec<Point2> {
        match self {
            Self::Disk { center, radius } => {
                let n = ((2.0 * PI * radius / h).ceil() as usize).max(8);
                (0..n)
                    .map(|k| *center + Point2::from_polar(*radius, 2.0 * PI * k as f64 / n as f64))
                    .collect()
            }
            Self::CutDisk { beta, side } => {
                let tc = beta.acos();
                let s = (1.0 - beta * beta).sqrt();
                let (t0, t1, top, bottom) = match side {
                    CutSide::Left => (tc, 2.0 * PI - tc, Point2::new(*beta, -s), Point2::new(*beta, s)),
                    CutSide::Right => (-tc, tc, Point2::new(*beta, s), Point2::new(*beta, -s)),
                };
                let narc = (((t1 - t0) / h).ceil() as usize).max(4);
                let mut pts: Vec<Point2> = (0..narc)
                    .map(|k| Point2::from_polar(1.0, t0 + (t1 - t0) * k as f64 / narc as f64))
                    .collect();
                // segment from the end of the arc back to its start
                let nseg = ((2.0 * s / h).ceil() as usize).max(2);
                for k in 0..nseg {
                    pts.push(top.lerp(bottom, k as f64 / nseg as f64));
                }
                // the arc starts exactly at a corner
                pts[0] = bottom;
                pts[narc] = top;
                pts
            }
            Self::Polygon(p) => polygon_loop(p.vertices(), h),
            Self::Sublevel(s) => resample_loop(s.boundary.vertices(), h),
        }
    }
}

fn polygon_diameter(v: &[Point2]) -> f64 {
    // hull-free O(n^2) is fine for the sizes used here; subsample dense traces
    let step = (v.len() / 512).max(1);
    let pts: Vec<Point2> = v.iter().step_by(step).copied().collect();
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(pts[i].dist(pts[j]));
        }
    }
    d
}

/// Inserts equally spaced points so that no edge exceeds `h`.
/// Vertices where the boundary turns by more than this are kept exactly.
const CORNER_TURN_DEG: f64 = 20.0;

/// Boundary nodes of a polygon. When no edge is shorter than `h/2` every
/// vertex is kept and long edges are subdivided. Otherwise sharp corners are
/// kept and each chain between them is resampled at uniform arclength spacing
/// `≤ h`, so clusters of short edges do not produce slivers.
fn polygon_loop(v: &[Point2], h: f64) -> Vec<Point2> {
    let n = v.len();
    if (0..n).all(|i| v[i].dist(v[(i + 1) % n]) >= 0.5 * h) {
        return (0..n).flat_map(|i| resample_chain(&[v[i], v[(i + 1) % n]], h)).collect();
    }
    let turn = |i: usize| {
        let a = v[i] - v[(i + n - 1) % n];
        let b = v[(i + 1) % n] - v[i];
        a.cross(b).atan2(a.dot(b)).abs().to_degrees()
    };
    let corners: Vec<usize> = (0..n).filter(|&i| turn(i) > CORNER_TURN_DEG).collect();
    let starts = if corners.is_empty() { vec![0] } else { corners };
    let mut out = Vec::new();
    for (k, &c0) in starts.iter().enumerate() {
        let c1 = starts[(k + 1) % starts.len()];
        let mut chain = vec![v[c0]];
        let mut i = c0;
        loop {
            i = (i + 1) % n;
            chain.push(v[i]);
            if i == c1 {
                break;
            }
        }
        out.extend(resample_chain(&chain, h));
    }
    out
}

/// Points at uniform arclength along an open chain, first point included,
/// last point excluded.
fn resample_chain(chain: &[Point2], h: f64) -> Vec<Point2> {
    let lens: Vec<f64> = chain.windows(2).map(|w| w[0].dist(w[1])).collect();
    let total: f64 = lens.iter().sum();
    let m = ((total / h).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(m);
    let (mut seg, mut start) = (0, 0.0);
    for k in 0..m {
        let target = total * k as f64 / m as f64;
        while seg + 1 < lens.len() && start + lens[seg] <= target {
            start += lens[seg];
            seg += 1;
        }
        let t = if lens[seg] > 0.0 { ((target - start) / lens[seg]).clamp(0.0, 1.0) } else { 0.0 };
        out.push(chain[seg].lerp(chain[seg + 1], t));
    }
    out
}

/// Picks vertices of a dense loop at (nearly) uniform arclength spacing `≤ h`.
fn resample_loop(v: &[Point2], h: f64) -> Vec<Point2> {
    let n = v.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let next = cum[i] + v[i].dist(v[(i + 1) % n]);
        cum.push(next);
    }
    let total = cum[n];
    let m = ((total / h).ceil() as usize).max(8);
    let mut out = Vec::with_capacity(m);
    let mut last = usize::MAX;
    let mut j = 0;
    for k in 0..m {
        let target = total * k as f64 / m as f64;
        while j + 1 < n && cum[j + 1] <= target {
            j += 1;
        }
        let pick = if j + 1 < n && (cum[j + 1] - target) < (target - cum[j]) { j + 1 } else { j };
        if pick != last {
            out.push(v[pick]);
            last = pick;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_distance_examples() {
        let d = ImplicitDomain::unit_disk();
        assert_eq!(d.signed_distance(Point2::ORIGIN), -1.0);
        assert_eq!(d.signed_distance(Point2::new(1.0, 0.0)), 0.0);
    }

    #[test]
    fn square_polygon_outside_distance() {
        let sq = ImplicitDomain::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        assert_eq!(sq.signed_distance(Point2::new(2.0, 0.5)), 1.0);
    }

    #[test]
    fn cut_disk_loop_is_on_boundary_and_ccw() {
        for side in [CutSide::Left, CutSide::Right] {
            let d = ImplicitDomain::cut_disk(0.3, side).unwrap();
            let lp = d.boundary_loop(0.05);
            assert!(polygon::signed_area(&lp) > 0.0);
            for (i, p) in lp.iter().enumerate() {
                assert!(d.signed_distance(*p).abs() < 1e-14, "{side:?} {i} {p:?}");
                assert!(p.dist(lp[(i + 1) % lp.len()]) <= 0.05 + 1e-12);
            }
        }
    }

    #[test]
    fn cut_disk_area_matches_shoelace() {
        let d = ImplicitDomain::cut_disk(0.2, CutSide::Left).unwrap();
        let lp = d.boundary_loop(0.001);
        assert!((polygon::signed_area(&lp) - d.area()).abs() < 1e-5);
    }

    #[test]
    fn sublevel_traces_a_circle() {
        let f: ScalarFn = Arc::new(|p: Point2| p.norm2());
        let d = ImplicitDomain::sublevel(f, 0.25, Point2::ORIGIN, None, 4.0).unwrap();
        if let ImplicitDomain::Sublevel(s) = &d {
            for p in s.boundary().vertices() {
                assert!((p.norm() - 0.5).abs() < 1e-12);
            }
        }
        assert!((d.signed_distance(Point2::ORIGIN) + 0.5).abs() < 1e-6);
    }
}
