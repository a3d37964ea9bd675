use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{BBox, ImplicitDomain, Point2};
use crate::{Error, Result};

/// Conforming P1 triangulation of an [`ImplicitDomain`].
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    on_boundary: Vec<bool>,
    target_h: f64,
    domain: ImplicitDomain,
    locator: OnceLock<LocatorGrid>,
}

/// Serialized form of a mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshJson {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<usize>,
    pub target_h: f64,
}

/// Outcome of an independent validity check of a [`TriMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshAudit {
    pub min_area: f64,
    pub min_angle_deg: f64,
    /// Edges shared by more than two triangles, or by two with equal orientation.
    pub nonconforming_edges: usize,
    pub boundary_edges: usize,
    /// Largest `|signed_distance|` over boundary vertices.
    pub boundary_offset: f64,
    /// Largest `signed_distance` over interior vertices (must be negative).
    pub interior_max_sd: f64,
    /// Boundary vertex set disagrees with the vertices on boundary edges.
    pub boundary_mismatch: bool,
}

impl MeshAudit {
    pub fn is_valid(&self, diameter: f64, min_angle_deg: f64) -> bool {
        self.min_area > 0.0
            && self.nonconforming_edges == 0
            && !self.boundary_mismatch
            && self.boundary_offset <= 1e-10 * diameter
            && self.interior_max_sd < 0.0
            && self.min_angle_deg >= min_angle_deg
    }
}

impl TriMesh {
    /// Builds a mesh from raw parts. The boundary set is derived from edges
    /// used by exactly one triangle.
    pub fn from_parts(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        target_h: f64,
        domain: ImplicitDomain,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::MeshFailure("mesh has no triangles".into()));
        }
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::MeshFailure(format!("triangle {t:?} references a missing vertex")));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::MeshFailure("non-finite vertex coordinate".into()));
        }
        let mut on_boundary = vec![false; n];
        for (a, b) in boundary_edges(&triangles) {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
        let boundary = (0..n).filter(|&i| on_boundary[i]).collect();
        Ok(Self {
            vertices,
            triangles,
            boundary,
            on_boundary,
            target_h,
            domain,
            locator: OnceLock::new(),
        })
    }

    /// Right-triangle grid on `[lo, hi]` with `nx × ny` cells, alternating the
    /// diagonal direction so that no vertex has a preferred orientation.
    pub fn structured_rect(lo: Point2, hi: Point2, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(hi.x1 > lo.x1 && hi.x2 > lo.x2) {
            return Err(Error::InvalidArgument("degenerate rectangle grid".into()));
        }
        let (dx, dy) = ((hi.x1 - lo.x1) / nx as f64, (hi.x2 - lo.x2) / ny as f64);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { hi.x1 } else { lo.x1 + i as f64 * dx };
                let y = if j == ny { hi.x2 } else { lo.x2 + j as f64 * dy };
                vertices.push(Point2::new(x, y));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        let h = dx.max(dy);
        Self::from_parts(vertices, triangles, h, ImplicitDomain::rectangle(lo, hi)?)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sorted indices of boundary vertices.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.on_boundary
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of triangle `t` (positive when counter-clockwise).
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.corners(t);
        (a + b + c) * (1.0 / 3.0)
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.vertices)
    }

    /// Edges used by one triangle only, oriented counter-clockwise around the domain.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        boundary_edges(&self.triangles)
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    /// Boundary vertices in loop order, one loop per boundary component.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let next: HashMap<usize, usize> = self.boundary_edges().into_iter().collect();
        let mut seen = vec![false; self.vertices.len()];
        let mut loops = Vec::new();
        for &start in &self.boundary {
            if seen[start] {
                continue;
            }
            let mut lp = vec![start];
            seen[start] = true;
            let mut cur = start;
            while let Some(&nx) = next.get(&cur) {
                if nx == start || seen[nx] {
                    break;
                }
                seen[nx] = true;
                lp.push(nx);
                cur = nx;
            }
            loops.push(lp);
        }
        loops
    }

    pub fn audit(&self) -> MeshAudit {
        let mut min_area = f64::INFINITY;
        let mut min_angle: f64 = 180.0;
        let mut edge_use: HashMap<(usize, usize), (i32, i32)> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            min_area = min_area.min(self.area(t));
            min_angle = min_angle.min(min_angle_deg(self.corners(t)));
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edge_use.entry((a.min(b), a.max(b))).or_insert((0, 0));
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let mut nonconforming = 0;
        let mut boundary_edges = 0;
        let mut on_edge = vec![false; self.vertices.len()];
        for (&(a, b), &(fwd, bwd)) in &edge_use {
            match (fwd, bwd) {
                (1, 1) => {}
                (1, 0) | (0, 1) => {
                    boundary_edges += 1;
                    on_edge[a] = true;
                    on_edge[b] = true;
                }
                _ => nonconforming += 1,
            }
        }
        let mut boundary_offset: f64 = 0.0;
        let mut interior_max_sd = f64::NEG_INFINITY;
        for (i, p) in self.vertices.iter().enumerate() {
            let sd = self.domain.signed_distance(*p);
            if self.on_boundary[i] {
                boundary_offset = boundary_offset.max(sd.abs());
            } else {
                interior_max_sd = interior_max_sd.max(sd);
            }
        }
        MeshAudit {
            min_area,
            min_angle_deg: min_angle,
            nonconforming_edges: nonconforming,
            boundary_edges,
            boundary_offset,
            interior_max_sd,
            boundary_mismatch: on_edge != self.on_boundary,
        }
    }

    pub fn to_json(&self) -> MeshJson {
        MeshJson {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            target_h: self.target_h,
        }
    }

    /// Triangle containing `p` and its barycentric coordinates. Points within
    /// a relative tolerance of an edge are accepted.
    pub fn locate(&self, p: Point2) -> Option<(usize, [f64; 3])> {
        self.locator.get_or_init(|| LocatorGrid::new(self)).locate(self, p)
    }

    /// Linear interpolation of nodal values at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point2) -> Option<f64> {
        self.locate(p).map(|(t, lam)| {
            let tri = self.triangles[t];
            lam[0] * values[tri[0]] + lam[1] * values[tri[1]] + lam[2] * values[tri[2]]
        })
    }
}

fn boundary_edges(triangles: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Smallest interior angle of a triangle, in degrees.
pub(crate) fn min_angle_deg(p: [Point2; 3]) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..3 {
        let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        let (u, v) = (b - a, c - a);
        let ang = u.cross(v).abs().atan2(u.dot(v));
        m = m.min(ang.to_degrees());
    }
    m
}

/// Uniform bucket grid of triangle bounding boxes for point location.
#[derive(Debug, Clone)]
struct LocatorGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl LocatorGrid {
    fn new(mesh: &TriMesh) -> Self {
        let bb = mesh.bbox();
        let nt = mesh.num_triangles().max(1);
        let extent = bb.width().max(bb.height()).max(f64::MIN_POSITIVE);
        let cell = (bb.width() * bb.height() / nt as f64).sqrt().max(extent / 1024.0) * 1.5;
        let nx = ((bb.width() / cell).ceil() as usize).max(1);
        let ny = ((bb.height() / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let clampi = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        for t in 0..mesh.num_triangles() {
            let tb = BBox::of_points(&mesh.corners(t));
            let i0 = clampi((tb.min.x1 - bb.min.x1) / cell, nx);
            let i1 = clampi((tb.max.x1 - bb.min.x1) / cell, nx);
            let j0 = clampi((tb.min.x2 - bb.min.x2) / cell, ny);
            let j1 = clampi((tb.max.x2 - bb.min.x2) / cell, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Self {
            origin: bb.min,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, mesh: &TriMesh, p: Point2) -> Option<(usize, [f64; 3])> {
        let fi = ((p.x1 - self.origin.x1) / self.cell).floor();
        let fj = ((p.x2 - self.origin.x2) / self.cell).floor();
        // points on the far edge of the bounding box belong to the last cell
        let clampc = |f: f64, n: usize| {
            if f == n as f64 { Some(n - 1) } else if f < 0.0 || f > n as f64 { None } else { Some(f as usize) }
        };
        let (i, j) = (clampc(fi, self.nx)?, clampc(fj, self.ny)?);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let t = t as usize;
            let lam = barycentric(mesh.corners(t), p);
            let worst = lam[0].min(lam[1]).min(lam[2]);
            if worst >= 0.0 {
                return Some((t, lam));
            }
            if best.map_or(true, |b| worst > b.2) {
                best = Some((t, lam, worst));
            }
        }
        best.filter(|b| b.2 > -1e-10).map(|(t, lam, _)| {
            let l = lam.map(|v| v.max(0.0));
            let s = l[0] + l[1] + l[2];
            (t, l.map(|v| v / s))
        })
    }
}

pub(crate) fn barycentric(c: [Point2; 3], p: Point2) -> [f64; 3] {
    let det = (c[1] - c[0]).cross(c[2] - c[0]);
    let l1 = (p - c[0]).cross(c[2] - c[0]) / det;
    let l2 = (c[1] - c[0]).cross(p - c[0]) / det;
    [1.0 - l1 - l2, l1, l2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_grid_audits_clean() {
        let m = TriMesh::structured_rect(Point2::new(0.0, 0.0), Point2::new(1.0, 2.0), 4, 6).unwrap();
        assert_eq!(m.num_triangles(), 48);
        assert_eq!(m.boundary().len(), 2 * (4 + 6));
        let a = m.audit();
        assert_eq!(a.nonconforming_edges, 0);
        assert_eq!(a.boundary_edges, 20);
        assert!(a.boundary_offset < 1e-15);
        assert!((m.total_area() - 2.0).abs() < 1e-14);
        assert_eq!(m.boundary_loops().len(), 1);
    }

    #[test]
    fn locator_reproduces_linear_functions() {
        let m = TriMesh::structured_rect(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0), 7, 5).unwrap();
        let vals: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p.x1 - p.x2 + 0.5).collect();
        for &(x, y) in &[(0.0, 0.0), (0.33, -0.71), (-0.999, 0.999), (1.0, 1.0)] {
            let v = m.interpolate(&vals, Point2::new(x, y)).unwrap();
            assert!((v - (2.0 * x - y + 0.5)).abs() < 1e-12);
        }
        assert!(m.locate(Point2::new(1.5, 0.0)).is_none());
    }

    #[test]
    fn equilateral_min_angle() {
        let t = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        ];
        assert!((min_angle_deg(t) - 60.0).abs() < 1e-12);
    }
}
