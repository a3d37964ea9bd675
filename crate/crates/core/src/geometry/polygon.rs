//! Simple polygons with fast signed-distance queries.

use std::sync::OnceLock;

use super::{BBox, Point2};
use crate::{Error, Result};

/// Closest point on segment `[a, b]` to `p` and its parameter in `[0, 1]`.
#[inline]
pub fn closest_on_segment(p: Point2, a: Point2, b: Point2) -> (Point2, f64) {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

#[inline]
fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x1 >= a.x1.min(b.x1)
        && p.x1 <= a.x1.max(b.x1)
        && p.x2 >= a.x2.min(b.x2)
        && p.x2 <= a.x2.max(b.x2)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Bounding-box hierarchy over runs of consecutive edges.
#[derive(Debug, Clone)]
struct SegmentTree {
    nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone)]
struct TreeNode {
    bbox: BBox,
    lo: usize,
    hi: usize,
    children: Option<(usize, usize)>,
}

impl SegmentTree {
    const LEAF: usize = 8;

    fn build(v: &[Point2]) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.node(v, 0, v.len());
        tree
    }

    fn node(&mut self, v: &[Point2], lo: usize, hi: usize) -> usize {
        let n = v.len();
        let pts = (lo..hi).flat_map(|i| [&v[i], &v[(i + 1) % n]]);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            bbox: BBox::of_points(pts),
            lo,
            hi,
            children: None,
        });
        if hi - lo > Self::LEAF {
            let mid = lo + (hi - lo) / 2;
            let l = self.node(v, lo, mid);
            let r = self.node(v, mid, hi);
            self.nodes[id].children = Some((l, r));
        }
        id
    }
}

fn bbox_dist2(b: &BBox, p: Point2) -> f64 {
    let dx = (b.min.x1 - p.x1).max(0.0).max(p.x1 - b.max.x1);
    let dy = (b.min.x2 - p.x2).max(0.0).max(p.x2 - b.max.x2);
    dx * dx + dy * dy
}

/// Simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<Point2>,
    tree: OnceLock<SegmentTree>,
}

impl PartialEq for Polygon {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl Polygon {
    /// Validates simplicity and orientation; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite polygon vertex".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(Error::InvalidArgument("degenerate polygon".into()));
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidArgument(
                "polygon is self-intersecting".into(),
            ));
        }
        Ok(Self {
            vertices,
            tree: OnceLock::new(),
        })
    }

    /// Regular `n`-gon inscribed in the circle `(center, radius)`, first vertex at angle `phase`.
    pub fn regular(n: usize, center: Point2, radius: f64, phase: f64) -> Result<Self> {
        let v = (0..n)
            .map(|k| {
                center
                    + Point2::from_polar(radius, phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64)
            })
            .collect();
        Self::new(v)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n]))
            .sum()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.vertices)
    }

    /// Outward unit normal of edge `i` (from vertex `i` to `i+1`).
    pub fn edge_normal(&self, i: usize) -> Point2 {
        let n = self.len();
        let e = self.vertices[(i + 1) % n] - self.vertices[i];
        Point2::new(e.x2, -e.x1).normalized()
    }

    /// Inward unit normal at vertex `i`: bisector of the adjacent edge normals.
    pub fn vertex_inward_normal(&self, i: usize) -> Point2 {
        let n = self.len();
        let s = self.edge_normal((i + n - 1) % n) + self.edge_normal(i);
        -s.normalized()
    }

    fn tree(&self) -> &SegmentTree {
        self.tree.get_or_init(|| SegmentTree::build(&self.vertices))
    }

    fn closest_brute(&self, p: Point2) -> (f64, usize, f64) {
        let n = self.len();
        let mut best = (f64::INFINITY, 0, 0.0);
        for i in 0..n {
            let (q, t) = closest_on_segment(p, self.vertices[i], self.vertices[(i + 1) % n]);
            let d = p.dist(q);
            if d < best.0 {
                best = (d, i, t);
            }
        }
        best
    }

    /// Distance to the boundary, nearest edge index and parameter along it.
    fn closest(&self, p: Point2) -> (f64, usize, f64) {
        let n = self.len();
        if n < 64 {
            return self.closest_brute(p);
        }
        let tree = self.tree();
        // (squared distance, edge, parameter)
        let mut best = (f64::INFINITY, 0, 0.0);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &tree.nodes[id];
            if bbox_dist2(&node.bbox, p) > best.0 {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    let (dl, dr) = (bbox_dist2(&tree.nodes[l].bbox, p), bbox_dist2(&tree.nodes[r].bbox, p));
                    // visit the nearer child first
                    if dl <= dr {
                        stack.extend([r, l]);
                    } else {
                        stack.extend([l, r]);
                    }
                }
                None => {
                    for s in node.lo..node.hi {
                        let (q, t) = closest_on_segment(p, self.vertices[s], self.vertices[(s + 1) % n]);
                        let d2 = (p - q).norm2();
                        if d2 < best.0 || (d2 == best.0 && s < best.1) {
                            best = (d2, s, t);
                        }
                    }
                }
            }
        }
        (best.0.sqrt(), best.1, best.2)
    }

    /// Signed distance to the boundary (negative inside).
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.closest_point(p).0
    }

    /// Signed distance together with the closest boundary point.
    pub fn closest_point(&self, p: Point2) -> (f64, Point2, usize) {
        let n = self.len();
        let (d, i, t) = self.closest(p);
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % n];
        let q = a + (b - a) * t;
        if d == 0.0 {
            return (0.0, q, i);
        }
        let outside = if t > 0.0 && t < 1.0 {
            (b - a).cross(p - a) < 0.0
        } else {
            let v = if t <= 0.0 { i } else { (i + 1) % n };
            let pn = self.edge_normal((v + n - 1) % n) + self.edge_normal(v);
            (p - self.vertices[v]).dot(pn) > 0.0
        };
        (if outside { d } else { -d }, q, i)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.signed_distance(p) < 0.0
    }
}

pub fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Sweep over x-sorted edges; non-adjacent edges must not touch.
pub fn is_simple(v: &[Point2]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let seg = |i: usize| (v[i], v[(i + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let xmin = |i: usize| v[i].x1.min(v[(i + 1) % n].x1);
    let xmax = |i: usize| v[i].x1.max(v[(i + 1) % n].x1);
    order.sort_by(|&a, &b| xmin(a).total_cmp(&xmin(b)));
    for (k, &i) in order.iter().enumerate() {
        let (a, b) = seg(i);
        if a == b {
            return false;
        }
        for &j in &order[k + 1..] {
            if xmin(j) > xmax(i) {
                break;
            }
            let (c, d) = seg(j);
            if (i + 1) % n == j || (j + 1) % n == i {
                // neighbours share one vertex; they may not fold back onto each other
                let (shared, p, q) = if (i + 1) % n == j { (b, a, d) } else { (a, b, c) };
                if n > 3 && orient(p, shared, q) == 0.0 && (q - shared).dot(p - shared) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn square_distance_outside_and_inside() {
        let sq = unit_square();
        assert_eq!(sq.signed_distance(Point2::new(2.0, 0.5)), 1.0);
        assert!((sq.signed_distance(Point2::new(0.5, 0.5)) + 0.5).abs() < 1e-15);
        let corner = sq.signed_distance(Point2::new(2.0, 2.0));
        assert!((corner - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let p = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(p.area() > 0.0);
    }

    #[test]
    fn bow_tie_is_rejected() {
        let r = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn tree_query_matches_brute_force() {
        // star-shaped non-convex polygon with many vertices
        let n = 300;
        let v: Vec<Point2> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::from_polar(1.0 + 0.3 * (5.0 * t).cos(), t)
            })
            .collect();
        let poly = Polygon::new(v).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let p = Point2::new(-1.6 + 0.08 * i as f64, -1.6 + 0.08 * j as f64);
                let (d, _, _) = poly.closest(p);
                let (db, _, _) = poly.closest_brute(p);
                assert!((d - db).abs() < 1e-14);
            }
        }
        assert!(poly.contains(Point2::ORIGIN));
        assert!(!poly.contains(Point2::new(1.5, 0.0)));
    }
}
