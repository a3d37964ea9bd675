use serde::Serialize;

use crate::fields::{Mat2, MagneticField};
use crate::geometry::{BBox, Point2};

/// Morse type of a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Min,
    Max,
    Saddle,
    Degenerate,
}

impl CriticalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Min => "min",
            Self::Max => "max",
            Self::Saddle => "saddle",
            Self::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Point2,
    pub value: f64,
    pub hessian: Mat2,
    pub kind: CriticalKind,
}

/// Relative threshold on `|det H| / ‖H‖²` below which a Hessian is degenerate.
const DEGENERACY: f64 = 1e-8;

/// Classifies a symmetric Hessian by the signs of its eigenvalues.
pub fn classify(h: &Mat2) -> CriticalKind {
    let (a, b, c) = (h[0][0], 0.5 * (h[0][1] + h[1][0]), h[1][1]);
    let det = a * c - b * b;
    let norm2 = a * a + 2.0 * b * b + c * c;
    if det.abs() <= DEGENERACY * norm2 || norm2 == 0.0 {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if a + c > 0.0 {
        CriticalKind::Min
    } else {
        CriticalKind::Max
    }
}

/// Seeds are laid on a grid over `bbox`; only points accepted by `accept`
/// are used as seeds or reported.
pub struct SearchRegion {
    pub bbox: BBox,
    pub accept: Box<dyn Fn(Point2) -> bool + Send + Sync>,
}

/// Where critical points of a catalog potential are sought: the closed unit
/// disk, or for `onesaddle82` a box around the zero level set.
pub fn search_region(field: &MagneticField) -> SearchRegion {
    if field.name() == "onesaddle82" {
        SearchRegion {
            bbox: BBox {
                min: Point2::new(-1.0, -2.5),
                max: Point2::new(3.5, 2.5),
            },
            accept: Box::new(|_| true),
        }
    } else {
        SearchRegion {
            bbox: BBox {
                min: Point2::new(-1.0, -1.0),
                max: Point2::new(1.0, 1.0),
            },
            accept: Box::new(|p: Point2| p.norm() <= 1.0 + 1e-9),
        }
    }
}

/// Newton iteration on `∇ψ = 0`. Returns the limit if `‖∇ψ‖ ≤ 1e−10` was reached.
pub fn newton_refine(field: &MagneticField, start: Point2, max_iters: usize) -> Option<Point2> {
    let mut x = start;
    for _ in 0..max_iters {
        let g = field.grad_psi(x)?;
        let h = field.hess_psi(x)?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (h[1][1] * g.x1 - h[0][1] * g.x2) / det;
        let dy = (-h[1][0] * g.x1 + h[0][0] * g.x2) / det;
        let next = x - Point2::new(dx, dy);
        if !next.is_finite() || next.norm() > 1e3 {
            return None;
        }
        let small = Point2::new(dx, dy).norm() <= 1e-15 * (1.0 + x.norm());
        x = next;
        if small {
            break;
        }
    }
    let g = field.grad_psi(x)?;
    (g.norm() <= 1e-10).then_some(x)
}

/// Critical points of the analytic potential inside its [`search_region`].
pub fn find_critical_points(field: &MagneticField, seed_grid_n: usize) -> Vec<CriticalPoint> {
    find_critical_points_in(field, &search_region(field), seed_grid_n)
}

/// Newton from an `n × n` seed grid; converged points are deduplicated at
/// distance `1e−8` and returned sorted by location.
pub fn find_critical_points_in(field: &MagneticField, region: &SearchRegion, n: usize) -> Vec<CriticalPoint> {
    let n = n.max(2);
    let bb = region.bbox;
    let mut found: Vec<Point2> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let seed = Point2::new(
                bb.min.x1 + bb.width() * i as f64 / (n - 1) as f64,
                bb.min.x2 + bb.height() * j as f64 / (n - 1) as f64,
            );
            if !(region.accept)(seed) {
                continue;
            }
            let Some(x) = newton_refine(field, seed, 60) else { continue };
            if (region.accept)(x) && found.iter().all(|q| q.dist(x) > 1e-8) {
                found.push(x);
            }
        }
    }
    found.sort_by(|a, b| {
        if (a.x1 - b.x1).abs() <= 1e-9 {
            a.x2.total_cmp(&b.x2)
        } else {
            a.x1.total_cmp(&b.x1)
        }
    });
    found
        .into_iter()
        .filter_map(|x| {
            let hessian = field.hess_psi(x)?;
            Some(CriticalPoint {
                location: x,
                value: field.psi(x)?,
                hessian,
                kind: classify(&hessian),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&[[14.0, 0.0], [0.0, 8.0]]), CriticalKind::Min);
        assert_eq!(classify(&[[26.0 / 9.0, 0.0], [0.0, -32.0 / 3.0]]), CriticalKind::Saddle);
        assert_eq!(classify(&[[0.0, 0.0], [0.0, 1.0]]), CriticalKind::Degenerate);
        assert_eq!(classify(&[[-28.0, 0.0], [0.0, -2.5]]), CriticalKind::Max);
        assert_eq!(classify(&[[0.0, 0.0], [0.0, 0.0]]), CriticalKind::Degenerate);
    }
}
