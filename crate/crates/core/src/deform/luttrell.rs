use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::{FieldSpec, MagneticField};
use crate::geometry::polygon::is_simple;
use crate::geometry::{generate_mesh, ImplicitDomain, Point2, Polygon};
use crate::potential::{oscillation, solve_poisson, OscillationReport, PotentialSolution};
use crate::{Error, Result};

/// Parameters of the boundary-pushing iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformConfig {
    pub n_vertices: usize,
    /// Inward distance of the sign probe from each vertex.
    pub probe_offset: f64,
    /// Initial vertex move per iteration; halved for a vertex whose move
    /// direction reverses.
    pub step: f64,
    /// Threshold on the Euclidean norm of the stacked vertex displacements.
    pub stop_tol: f64,
    pub max_iters: usize,
    pub mesh_h: f64,
}

impl Default for DeformConfig {
    fn default() -> Self {
        Self::with_mesh_h(0.02)
    }
}

impl DeformConfig {
    /// Defaults with the probe tied to the mesh size (`3·mesh_h`).
    pub fn with_mesh_h(mesh_h: f64) -> Self {
        Self {
            n_vertices: 200,
            probe_offset: 3.0 * mesh_h,
            step: 0.05,
            stop_tol: 0.005,
            max_iters: 40,
            mesh_h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n_vertices < 16 {
            return bad("n_vertices must be at least 16");
        }
        let reals = [self.probe_offset, self.step, self.stop_tol, self.mesh_h];
        if reals.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || self.max_iters == 0 {
            return bad("deformation parameters must be positive");
        }
        if self.probe_offset <= self.mesh_h {
            return bad("probe_offset must exceed mesh_h");
        }
        Ok(())
    }
}

/// Why the iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StopReason {
    Converged,
    MaxIters,
    NonSimplePolygon { iteration: usize },
}

#[derive(Debug, Clone)]
pub struct DeformResult {
    /// Initial polygon followed by every accepted update.
    pub polygons: Vec<Vec<Point2>>,
    pub final_psi: PotentialSolution,
    pub converged: bool,
    pub iterations_used: usize,
    pub osc_opt: f64,
    /// `‖Δ‖₂` of each update.
    pub displacements: Vec<f64>,
    /// Potential extrema on each polygon that was solved.
    pub history: Vec<OscillationReport>,
    pub stop: StopReason,
    /// Every final vertex sits on the container boundary: nothing was cut away.
    pub full_container: bool,
}

/// JSON form of a [`DeformResult`].
#[derive(Debug, Clone, Serialize)]
pub struct DeformReport<'a> {
    pub field: FieldSpec,
    pub config: &'a DeformConfig,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations_used: usize,
    pub osc_opt: f64,
    pub full_container: bool,
    pub displacements: &'a [f64],
    pub osc_history: Vec<f64>,
    pub psi_min_history: Vec<f64>,
    pub final_potential: OscillationReport,
    pub polygons: &'a [Vec<Point2>],
}

impl DeformResult {
    pub fn report<'a>(&'a self, field: &MagneticField, config: &'a DeformConfig) -> DeformReport<'a> {
        DeformReport {
            field: field.spec(),
            config,
            converged: self.converged,
            stop: self.stop,
            iterations_used: self.iterations_used,
            osc_opt: self.osc_opt,
            full_container: self.full_container,
            displacements: &self.displacements,
            osc_history: self.history.iter().map(|r| r.osc).collect(),
            psi_min_history: self.history.iter().map(|r| r.psi_min).collect(),
            final_potential: self.final_psi.report(),
            polygons: &self.polygons,
        }
    }

    pub fn final_polygon(&self) -> &[Point2] {
        self.polygons.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn solve_on(vertices: &[Point2], field: &MagneticField, mesh_h: f64) -> Result<PotentialSolution> {
    let domain = ImplicitDomain::polygon(vertices.to_vec())?;
    let mesh = Arc::new(generate_mesh(&domain, mesh_h)?);
    Ok(oscillation(&solve_poisson(&mesh, field)?))
}

/// Largest `r` with `|o + r·u − center| ≤ radius`, for `o` inside the disk.
fn ray_exit(o: Point2, u: Point2, center: Point2, radius: f64) -> f64 {
    let d = o - center;
    let b = d.dot(u);
    let c = d.norm2() - radius * radius;
    -b + (b * b - c).max(0.0).sqrt()
}

/// Searches for the largest domain inside a disk on which the Dirichlet
/// solution of `Δψ = B` stays negative.
///
/// Starting from a regular polygon inscribed in the container, each round
/// meshes the polygon, solves Poisson and probes `ψ` a fixed distance inside
/// every vertex along the bisector normal. Positive probes pull the vertex
/// inward, negative ones push it outward, up to the container. Vertices
/// travel on rays from a fixed star center (the minimum of the first
/// potential), which keeps every polygon star-shaped and therefore simple.
/// A vertex whose direction reverses halves its own step, so oscillation
/// around the free boundary dies out geometrically.
pub fn luttrell_iterate(field: &MagneticField, container: &ImplicitDomain, config: &DeformConfig) -> Result<DeformResult> {
    config.validate()?;
    let ImplicitDomain::Disk { center, radius } = *container else {
        return Err(Error::InvalidArgument("container must be a disk".into()));
    };
    let mut current = Polygon::regular(config.n_vertices, center, radius, 0.0)?.vertices().to_vec();
    let n = current.len();
    let mut steps = vec![config.step; n];
    let mut last_dir = vec![0i8; n];
    let mut polygons = vec![current.clone()];
    let mut displacements = Vec::new();
    let mut history = Vec::new();
    let mut stop = StopReason::MaxIters;
    let mut latest: Option<PotentialSolution> = None;
    let mut star: Option<(Point2, Vec<Point2>, Vec<f64>)> = None;
    let min_r = config.probe_offset;

    for it in 1..=config.max_iters {
        let sol = solve_on(&current, field, config.mesh_h)?;
        history.push(sol.report());
        let (origin, rays, limits) = star.get_or_insert_with(|| {
            let o = sol.argmin;
            let rays: Vec<Point2> = current.iter().map(|&p| (p - o).normalized()).collect();
            let limits = rays.iter().map(|&u| ray_exit(o, u, center, radius)).collect();
            (o, rays, limits)
        });
        let poly = Polygon::new(current.clone())?;
        let sign_tol = 1e-8 * sol.psi_min.abs();
        let mut next = current.clone();
        let mut disp2 = 0.0;
        for i in 0..n {
            let probe = current[i] + poly.vertex_inward_normal(i) * config.probe_offset;
            let dir: i8 = match sol.psi.eval(probe) {
                Some(v) if v > sign_tol => 1,
                Some(v) if v < -sign_tol => -1,
                _ => 0,
            };
            if dir == 0 {
                continue;
            }
            if dir == -last_dir[i] {
                steps[i] *= 0.5;
            }
            last_dir[i] = dir;
            let r = (current[i] - *origin).dot(rays[i]);
            let r_new = (r - f64::from(dir) * steps[i]).clamp(min_r.min(r), limits[i]);
            let moved = if r_new >= limits[i] {
                clamp_to_disk(*origin + rays[i] * r_new, center, radius)
            } else {
                *origin + rays[i] * r_new
            };
            disp2 += (moved - current[i]).norm2();
            next[i] = moved;
        }
        if !is_simple(&next) {
            stop = StopReason::NonSimplePolygon { iteration: it };
            latest = Some(sol);
            break;
        }
        let disp = disp2.sqrt();
        displacements.push(disp);
        polygons.push(next.clone());
        let unchanged = disp == 0.0;
        current = next;
        if disp < config.stop_tol {
            stop = StopReason::Converged;
            latest = unchanged.then_some(sol);
            break;
        }
    }

    let iterations_used = displacements.len();
    let final_psi = match latest {
        Some(sol) => sol,
        None => {
            let sol = solve_on(&current, field, config.mesh_h)?;
            history.push(sol.report());
            sol
        }
    };
    let full_container = current
        .iter()
        .all(|p| (p.dist(center) - radius).abs() <= 1e-9 * radius);
    Ok(DeformResult {
        polygons,
        osc_opt: final_psi.osc,
        final_psi,
        converged: stop == StopReason::Converged,
        iterations_used,
        displacements,
        history,
        stop,
        full_container,
    })
}

fn clamp_to_disk(p: Point2, center: Point2, radius: f64) -> Point2 {
    let d = p - center;
    let r = d.norm();
    if r > radius {
        center + d * (radius / r)
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(DeformConfig::default().validate().is_ok());
        let mut c = DeformConfig::default();
        c.n_vertices = 8;
        assert!(c.validate().is_err());
        let mut c = DeformConfig::default();
        c.probe_offset = c.mesh_h;
        assert!(c.validate().is_err());
    }

    #[test]
    fn clamp_keeps_points_in_disk() {
        let p = clamp_to_disk(Point2::new(3.0, 4.0), Point2::ORIGIN, 1.0);
        assert!((p.norm() - 1.0).abs() < 1e-15);
        let q = Point2::new(0.1, 0.2);
        assert_eq!(clamp_to_disk(q, Point2::ORIGIN, 1.0), q);
    }

    #[test]
    fn ray_exit_hits_circle() {
        let o = Point2::new(-0.4, 0.1);
        let u = Point2::new(0.6, 0.8);
        let r = ray_exit(o, u, Point2::ORIGIN, 1.0);
        assert!(((o + u * r).norm() - 1.0).abs() < 1e-14 && r > 0.0);
    }

    #[test]
    fn rejects_non_disk_container() {
        let f = MagneticField::constant(1.0);
        let sq = ImplicitDomain::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        assert!(luttrell_iterate(&f, &sq, &DeformConfig::default()).is_err());
    }
}
