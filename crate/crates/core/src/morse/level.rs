use std::collections::HashMap;

use serde::Serialize;

use crate::fields::MagneticField;
use crate::geometry::{generate_mesh, Point2, TriMesh};
use crate::potential::ScalarField;
use crate::{Error, Result};

/// Level set `{ψ = level}` as chained polylines. Closed polylines do not
/// repeat their first point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCurve {
    pub level: f64,
    pub polylines: Vec<Vec<Point2>>,
    pub closed: Vec<bool>,
}

impl LevelCurve {
    pub fn len(&self) -> usize {
        self.polylines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    /// Polyline points, with the first point repeated at the end if closed.
    pub fn component_path(&self, k: usize) -> Vec<Point2> {
        let mut p = self.polylines[k].clone();
        if self.closed[k] && !p.is_empty() {
            p.push(p[0]);
        }
        p
    }
}

/// What to contour: a nodal field (linear per triangle), or an analytic
/// function sampled on a mesh whose edge crossings are refined by root finding.
pub enum LevelSource<'a> {
    Discrete(&'a ScalarField),
    Analytic {
        mesh: &'a TriMesh,
        f: &'a (dyn Fn(Point2) -> f64 + Sync),
    },
}

impl LevelSource<'_> {
    fn mesh(&self) -> &TriMesh {
        match self {
            Self::Discrete(s) => s.mesh(),
            Self::Analytic { mesh, .. } => mesh,
        }
    }

    fn crossing(&self, a: Point2, fa: f64, b: Point2, fb: f64, level: f64) -> Point2 {
        let t = (level - fa) / (fb - fa);
        let linear = a.lerp(b, t.clamp(0.0, 1.0));
        let Self::Analytic { f, .. } = self else { return linear };
        // bisection on the exact function, keeping the sign convention of the nodes
        let (mut lo, mut hi) = (0.0, 1.0);
        let below_at_lo = fa < level;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if (f(a.lerp(b, mid)) < level) == below_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        a.lerp(b, t)
    }
}

/// Marching triangles on the mesh of `source`.
///
/// Nodal values equal to the level count as above it, so every crossing lies
/// strictly inside an edge or at its upper endpoint.
pub fn extract_level_set(source: &LevelSource<'_>, level: f64) -> Result<LevelCurve> {
    let mesh = source.mesh();
    let values: Vec<f64> = match source {
        LevelSource::Discrete(s) => s.values().to_vec(),
        LevelSource::Analytic { f, .. } => mesh.vertices().iter().map(|&p| f(p)).collect(),
    };
    let above = |i: usize| values[i] >= level;
    let mut crossings: HashMap<(usize, usize), usize> = HashMap::new();
    let mut points: Vec<Point2> = Vec::new();
    // per crossing: the (up to two) segments touching it
    let mut links: Vec<Vec<usize>> = Vec::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();
    let mut crossing_id = |a: usize, b: usize, points: &mut Vec<Point2>, links: &mut Vec<Vec<usize>>| {
        let key = (a.min(b), a.max(b));
        *crossings.entry(key).or_insert_with(|| {
            let (p, q) = (mesh.vertices()[key.0], mesh.vertices()[key.1]);
            points.push(source.crossing(p, values[key.0], q, values[key.1], level));
            links.push(Vec::new());
            points.len() - 1
        })
    };
    for tri in mesh.triangles() {
        let up: Vec<bool> = tri.iter().map(|&i| above(i)).collect();
        let n_up = up.iter().filter(|&&u| u).count();
        if n_up == 0 || n_up == 3 {
            continue;
        }
        // the odd vertex out is on the other side of both crossing edges
        let odd = (0..3).find(|&k| up[k] != up[(k + 1) % 3] && up[k] != up[(k + 2) % 3]).unwrap();
        let (o, p, q) = (tri[odd], tri[(odd + 1) % 3], tri[(odd + 2) % 3]);
        let c1 = crossing_id(o, p, &mut points, &mut links);
        let c2 = crossing_id(o, q, &mut points, &mut links);
        let s = segments.len();
        segments.push([c1, c2]);
        links[c1].push(s);
        links[c2].push(s);
    }
    if segments.is_empty() {
        return Err(Error::EmptyLevel(level));
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    let mut closed = Vec::new();
    let walk = |start_c: usize, start_s: usize, used: &mut Vec<bool>| {
        let mut line = vec![start_c];
        let (mut c, mut s) = (start_c, start_s);
        loop {
            used[s] = true;
            let seg = segments[s];
            let next_c = if seg[0] == c { seg[1] } else { seg[0] };
            if next_c == start_c {
                return (line, true);
            }
            line.push(next_c);
            c = next_c;
            match links[c].iter().find(|&&t| !used[t]) {
                Some(&t) => s = t,
                None => return (line, false),
            }
        }
    };
    // open chains start at crossings with a single segment (mesh boundary)
    for c in 0..points.len() {
        if links[c].len() == 1 && !used[links[c][0]] {
            let (line, _) = walk(c, links[c][0], &mut used);
            polylines.push(line.into_iter().map(|i| points[i]).collect());
            closed.push(false);
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (line, is_closed) = walk(segments[s][0], s, &mut used);
            polylines.push(line.into_iter().map(|i| points[i]).collect());
            closed.push(is_closed);
        }
    }
    Ok(LevelCurve {
        level,
        polylines,
        closed,
    })
}

/// Level set of the closed-form potential on a mesh of spacing `mesh_h`
/// covering the field's natural region (the unit disk, or for `onesaddle82`
/// a box containing its whole zero level set).
pub fn analytic_level_set(field: &MagneticField, level: f64, mesh_h: f64) -> Result<LevelCurve> {
    if field.psi(Point2::ORIGIN).is_none() {
        return Err(Error::NoAnalyticPotential(field.name().to_string()));
    }
    let mesh = if field.name() == "onesaddle82" {
        let (lo, hi) = (Point2::new(-0.6, -2.0), Point2::new(3.4, 2.0));
        let nx = ((hi.x1 - lo.x1) / mesh_h).ceil() as usize;
        let ny = ((hi.x2 - lo.x2) / mesh_h).ceil() as usize;
        TriMesh::structured_rect(lo, hi, nx, ny)?
    } else {
        generate_mesh(&field.default_domain()?, mesh_h)?
    };
    let f = |p: Point2| field.psi(p).unwrap_or(f64::NAN);
    extract_level_set(&LevelSource::Analytic { mesh: &mesh, f: &f }, level)
}

/// Even-odd ray casting against a closed polyline (first point not repeated).
pub fn point_in_polyline(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.x2 > p.x2) != (b.x2 > p.x2) {
            let x = a.x1 + (p.x2 - a.x2) * (b.x1 - a.x1) / (b.x2 - a.x2);
            if p.x1 < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// True iff every point lies strictly inside closed component `k` of `curve`.
pub fn enclosure_test(curve: &LevelCurve, k: usize, points: &[Point2]) -> Result<bool> {
    if k >= curve.polylines.len() || !curve.closed[k] {
        return Err(Error::OpenCurve);
    }
    let poly = &curve.polylines[k];
    let n = poly.len();
    Ok(points.iter().all(|&p| {
        let on_curve = (0..n).any(|i| {
            let (q, _) = crate::geometry::polygon::closest_on_segment(p, poly[i], poly[(i + 1) % n]);
            q.dist(p) <= 1e-12
        });
        !on_curve && point_in_polyline(poly, p)
    }))
}
