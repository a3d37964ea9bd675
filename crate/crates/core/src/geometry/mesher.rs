//! Force-equilibrium mesh smoothing on a signed distance function.
//!
//! Boundary nodes are placed once, exactly on the zero level, and then held
//! fixed; interior nodes relax under repulsive bar forces and are
//! re-triangulated (constrained Delaunay against the boundary loop) whenever
//! they have moved appreciably.

use spade::{ConstrainedDelaunayTriangulation, Triangulation};

use super::mesh::min_angle_deg;
use super::{ImplicitDomain, Point2, Polygon, TriMesh};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct MeshOptions {
    /// Quality floor; generation fails if it cannot be met.
    pub min_angle_deg: f64,
    pub max_iters: usize,
    /// Bar rest lengths are inflated by this factor so that bars push.
    pub fscale: f64,
    pub deltat: f64,
    /// Stop once no interior node moves more than `dptol · h`.
    pub dptol: f64,
    /// Re-triangulate once some node has moved more than `ttol · h`.
    pub ttol: f64,
    pub cleanup_rounds: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            min_angle_deg: 20.0,
            max_iters: 300,
            fscale: 1.2,
            deltat: 0.2,
            dptol: 1e-3,
            ttol: 0.1,
            cleanup_rounds: 6,
        }
    }
}

pub fn generate_mesh(domain: &ImplicitDomain, target_h: f64) -> Result<TriMesh> {
    generate_mesh_with(domain, target_h, &MeshOptions::default())
}

pub fn generate_mesh_with(domain: &ImplicitDomain, target_h: f64, opts: &MeshOptions) -> Result<TriMesh> {
    let diam = domain.diameter();
    if !(target_h > 0.0 && target_h.is_finite()) || target_h > diam / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "target_h = {target_h} must lie in (0, diameter/4 = {}]",
            diam / 4.0
        )));
    }
    let boundary = domain.boundary_loop(target_h);
    let loop_poly = Polygon::new(boundary.clone())
        .map_err(|e| Error::MeshFailure(format!("boundary loop is not a simple polygon: {e}")))?;
    let size = SizeField::new(domain, &boundary, target_h);
    let mut m = Mesher {
        domain,
        loop_poly,
        size,
        h: target_h,
        nfixed: boundary.len(),
        nodes: boundary,
        opts,
    };
    m.seed_interior();
    m.smooth(opts.max_iters)?;
    let mut tris = m.triangulate()?;
    for _ in 0..opts.cleanup_rounds {
        if m.quality(&tris) >= opts.min_angle_deg {
            break;
        }
        if !m.remove_bad_nodes(&tris) {
            break;
        }
        m.smooth(60)?;
        tris = m.triangulate()?;
    }
    let q = m.quality(&tris);
    if q < opts.min_angle_deg {
        return Err(Error::MeshFailure(format!(
            "minimum angle {q:.2}° below the {:.0}° floor after smoothing",
            opts.min_angle_deg
        )));
    }
    let (nodes, tris) = compact(m.nodes, tris);
    TriMesh::from_parts(nodes, tris, target_h, domain.clone())
}

/// Desired local edge length: `min(h, ℓ_i + 0.3·|p − b_i|)` over boundary
/// nodes `b_i` whose local spacing `ℓ_i` is below `h`, tabulated on a grid.
struct SizeField {
    h: f64,
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    grid: Option<Vec<f64>>,
}

impl SizeField {
    const GROWTH: f64 = 0.3;

    fn new(domain: &ImplicitDomain, boundary: &[Point2], h: f64) -> Self {
        let n = boundary.len();
        let sources: Vec<(Point2, f64)> = (0..n)
            .filter_map(|i| {
                let prev = boundary[(i + n - 1) % n].dist(boundary[i]);
                let next = boundary[i].dist(boundary[(i + 1) % n]);
                let l = 0.5 * (prev + next);
                (l < 0.9 * h).then_some((boundary[i], l))
            })
            .collect();
        let bb = domain.bbox().inflate(h);
        let cell = 0.5 * h;
        let nx = (bb.width() / cell).ceil() as usize + 1;
        let ny = (bb.height() / cell).ceil() as usize + 1;
        let grid = (!sources.is_empty()).then(|| {
            let mut g = vec![h; nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    let p = bb.min + Point2::new(i as f64 * cell, j as f64 * cell);
                    let v = &mut g[j * nx + i];
                    for &(b, l) in &sources {
                        *v = v.min(l + Self::GROWTH * p.dist(b));
                    }
                }
            }
            g
        });
        Self {
            h,
            origin: bb.min,
            cell,
            nx,
            ny,
            grid,
        }
    }

    fn at(&self, p: Point2) -> f64 {
        let Some(g) = &self.grid else { return self.h };
        let fx = ((p.x1 - self.origin.x1) / self.cell).clamp(0.0, (self.nx - 1) as f64 - 1e-9);
        let fy = ((p.x2 - self.origin.x2) / self.cell).clamp(0.0, (self.ny - 1) as f64 - 1e-9);
        let (i, j) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |i: usize, j: usize| g[j * self.nx + i];
        (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j)) + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1))
    }

    fn min(&self) -> f64 {
        self.grid
            .as_ref()
            .map_or(self.h, |g| g.iter().copied().fold(self.h, f64::min))
    }
}

struct Mesher<'a> {
    domain: &'a ImplicitDomain,
    loop_poly: Polygon,
    size: SizeField,
    h: f64,
    /// The first `nfixed` nodes are the boundary loop, in order.
    nfixed: usize,
    nodes: Vec<Point2>,
    opts: &'a MeshOptions,
}

/// Deterministic uniform variate in [0, 1) from a lattice index.
fn hash01(i: i64, j: i64) -> f64 {
    let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (j as u64).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

impl Mesher<'_> {
    fn clearance(&self, p: Point2) -> f64 {
        0.3 * self.size.at(p)
    }

    fn seed_interior(&mut self) {
        let hmin = self.size.min().max(self.h / 8.0);
        let bb = self.domain.bbox();
        let dy = hmin * 3f64.sqrt() / 2.0;
        let rows = (bb.height() / dy).ceil() as i64;
        let cols = (bb.width() / hmin).ceil() as i64 + 1;
        for j in 0..=rows {
            let shift = if j % 2 == 0 { 0.0 } else { 0.5 * hmin };
            for i in 0..=cols {
                let p = Point2::new(bb.min.x1 + i as f64 * hmin + shift, bb.min.x2 + j as f64 * dy);
                if !self.well_inside(p, self.clearance(p)) {
                    continue;
                }
                let keep = (hmin / self.size.at(p)).powi(2);
                if keep >= 1.0 || hash01(i, j) < keep {
                    self.nodes.push(p);
                }
            }
        }
    }

    fn triangulate(&self) -> Result<Vec<[usize; 3]>> {
        let verts: Vec<spade::Point2<f64>> = self.nodes.iter().map(|p| spade::Point2::new(p.x1, p.x2)).collect();
        let nb = self.nfixed;
        let edges: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
        let mut conflict = false;
        let cdt = ConstrainedDelaunayTriangulation::<spade::Point2<f64>>::try_bulk_load_cdt(verts, edges, |_| {
            conflict = true
        })
        .map_err(|e| Error::MeshFailure(format!("triangulation failed: {e:?}")))?;
        if conflict {
            return Err(Error::MeshFailure("boundary constraint edges conflict".into()));
        }
        if cdt.num_vertices() != self.nodes.len() {
            return Err(Error::MeshFailure("coincident mesh nodes".into()));
        }
        // faces reachable from the hull exterior without crossing the
        // boundary loop are outside the domain
        let faces: Vec<_> = cdt.inner_faces().collect();
        let mut slot = vec![usize::MAX; cdt.num_all_faces()];
        for (i, f) in faces.iter().enumerate() {
            slot[f.fix().index()] = i;
        }
        let mut outside = vec![false; cdt.num_all_faces()];
        let mut queue: Vec<usize> = Vec::new();
        for e in cdt.convex_hull() {
            if !e.is_constraint_edge() {
                let f = e.face().as_inner().or_else(|| e.rev().face().as_inner());
                if let Some(f) = f {
                    let k = f.fix().index();
                    if !outside[k] {
                        outside[k] = true;
                        queue.push(k);
                    }
                }
            }
        }
        while let Some(k) = queue.pop() {
            let f = faces[slot[k]];
            for e in f.adjacent_edges() {
                if e.is_constraint_edge() {
                    continue;
                }
                if let Some(g) = e.rev().face().as_inner() {
                    let j = g.fix().index();
                    if !outside[j] {
                        outside[j] = true;
                        queue.push(j);
                    }
                }
            }
        }
        let mut tris = Vec::with_capacity(2 * self.nodes.len());
        for f in faces {
            if !outside[f.fix().index()] {
                tris.push(f.vertices().map(|v| v.fix().index()));
            }
        }
        Ok(tris)
    }

    /// At least `delta` inside both the domain and the boundary loop. The
    /// loop deviates from the true boundary by far less than `h`, so it is
    /// only consulted near the boundary.
    fn well_inside(&self, p: Point2, delta: f64) -> bool {
        let d = self.domain.signed_distance(p);
        d <= -delta && (d < -delta - self.h || self.loop_poly.signed_distance(p) <= -delta)
    }

    fn project_inside(&self, p: Point2) -> Point2 {
        let delta = self.clearance(p);
        let mut q = p;
        for _ in 0..4 {
            if self.well_inside(q, delta) {
                return q;
            }
            let d = self.domain.signed_distance(q);
            let e = 1e-4 * self.h;
            let grad = Point2::new(
                self.domain.signed_distance(q + Point2::new(e, 0.0)) - self.domain.signed_distance(q - Point2::new(e, 0.0)),
                self.domain.signed_distance(q + Point2::new(0.0, e)) - self.domain.signed_distance(q - Point2::new(0.0, e)),
            ) * (0.5 / e);
            let g2 = grad.norm2();
            if g2 < 1e-12 {
                break;
            }
            let target = d.max(self.loop_poly.signed_distance(q)) + delta;
            q -= grad * (target.max(0.0) / g2 + 1e-3 * delta / g2.sqrt());
        }
        q
    }

    fn smooth(&mut self, iters: usize) -> Result<()> {
        let mut last = self.nodes.clone();
        let mut tris = self.triangulate()?;
        let mut bars = bars_of(&tris);
        let nb = self.nfixed;
        for _ in 0..iters {
            let moved = self
                .nodes
                .iter()
                .zip(&last)
                .map(|(a, b)| a.dist(*b))
                .fold(0.0, f64::max);
            if moved > self.opts.ttol * self.h {
                last = self.nodes.clone();
                tris = self.triangulate()?;
                bars = bars_of(&tris);
            }
            let mut sum_l2 = 0.0;
            let mut sum_s2 = 0.0;
            let mut lens = Vec::with_capacity(bars.len());
            for &(a, b) in &bars {
                let (pa, pb) = (self.nodes[a], self.nodes[b]);
                let l = pa.dist(pb);
                let s = self.size.at(pa.lerp(pb, 0.5));
                sum_l2 += l * l;
                sum_s2 += s * s;
                lens.push((l, s));
            }
            let scale = self.opts.fscale * (sum_l2 / sum_s2).sqrt();
            let mut force = vec![Point2::ORIGIN; self.nodes.len()];
            for (&(a, b), &(l, s)) in bars.iter().zip(&lens) {
                let f = (s * scale - l).max(0.0) / l.max(1e-300);
                let v = (self.nodes[a] - self.nodes[b]) * f;
                force[a] += v;
                force[b] -= v;
            }
            let mut max_move: f64 = 0.0;
            for i in nb..self.nodes.len() {
                let old = self.nodes[i];
                let new = self.project_inside(old + force[i] * self.opts.deltat);
                max_move = max_move.max(new.dist(old));
                self.nodes[i] = new;
            }
            if max_move < self.opts.dptol * self.h {
                break;
            }
        }
        Ok(())
    }

    fn quality(&self, tris: &[[usize; 3]]) -> f64 {
        tris.iter()
            .map(|t| min_angle_deg(t.map(|i| self.nodes[i])))
            .fold(180.0, f64::min)
    }

    /// Drops one interior node of each badly shaped triangle: the one closest
    /// to another node of that triangle. Returns false if nothing was removable.
    fn remove_bad_nodes(&mut self, tris: &[[usize; 3]]) -> bool {
        let nb = self.nfixed;
        let mut drop = vec![false; self.nodes.len()];
        for t in tris {
            let c = t.map(|i| self.nodes[i]);
            if min_angle_deg(c) >= self.opts.min_angle_deg {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for k in 0..3 {
                let i = t[k];
                if i < nb {
                    continue;
                }
                let d = c[k].dist(c[(k + 1) % 3]).min(c[k].dist(c[(k + 2) % 3]));
                if best.map_or(true, |b| d < b.1) {
                    best = Some((i, d));
                }
            }
            if let Some((i, _)) = best {
                drop[i] = true;
            }
        }
        if !drop.iter().any(|&d| d) {
            return false;
        }
        let mut k = 0;
        self.nodes.retain(|_| {
            let keep = !drop[k];
            k += 1;
            keep
        });
        true
    }
}

fn bars_of(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut bars: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    bars.sort_unstable();
    bars.dedup();
    bars
}

/// Removes nodes not referenced by any triangle and renumbers.
fn compact(nodes: Vec<Point2>, tris: Vec<[usize; 3]>) -> (Vec<Point2>, Vec<[usize; 3]>) {
    let mut map = vec![usize::MAX; nodes.len()];
    for t in &tris {
        for &i in t {
            map[i] = 0;
        }
    }
    let mut out = Vec::with_capacity(nodes.len());
    for (i, p) in nodes.into_iter().enumerate() {
        if map[i] == 0 {
            map[i] = out.len();
            out.push(p);
        }
    }
    let tris = tris.into_iter().map(|t| t.map(|i| map[i])).collect();
    (out, tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CutSide;

    #[test]
    fn unit_disk_mesh_is_valid() {
        let d = ImplicitDomain::unit_disk();
        let m = generate_mesh(&d, 0.1).unwrap();
        assert!(m.num_triangles() >= 300);
        let a = m.audit();
        assert!(a.is_valid(2.0, 20.0), "{a:?}");
        assert!(m.vertices().iter().all(|p| p.norm() <= 1.0 + 1e-10));
    }

    #[test]
    fn cut_disk_mesh_keeps_corners() {
        let d = ImplicitDomain::cut_disk(0.4, CutSide::Left).unwrap();
        let m = generate_mesh(&d, 0.05).unwrap();
        assert!(m.audit().is_valid(d.diameter(), 20.0));
        for c in d.boundary_corners() {
            assert!(m.boundary().iter().any(|&i| m.vertices()[i].dist(c) < 1e-14));
        }
    }

    #[test]
    fn rejects_oversized_h() {
        assert!(generate_mesh(&ImplicitDomain::unit_disk(), 0.6).is_err());
    }

    #[test]
    fn hash_is_uniformish() {
        let mean: f64 = (0..10_000).map(|i| hash01(i, 7)).sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02);
    }
}
