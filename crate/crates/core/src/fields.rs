//! Catalog of magnetic fields with closed-form scalar potentials.
//!
//! Every entry comes with an analytic potential `ψ` satisfying `Δψ = B`.
//! For all entries but `onesaddle82` that potential vanishes on the unit
//! circle; for `onesaddle82` it equals the
//! parameter `c` on the boundary of its natural sublevel domain, and
//! [`MagneticField::dirichlet_psi`] returns the shifted potential `ψ − c`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::geometry::{ImplicitDomain, Point2, ScalarFn};
use crate::{Error, Result};

/// Symmetric 2×2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

/// `√(3/2)`, the shift in the asymmetric perturbation.
const ASYM_SHIFT: f64 = 1.224_744_871_391_589;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Constant { b: f64 },
    Radial { beta: f64 },
    Affine { beta: f64 },
    /// `eps = 0` is the symmetric field.
    Quartic { eps: f64 },
    OneSaddle { c: f64 },
}

/// Pointwise magnetic field `B` with optional closed-form potential.
#[derive(Clone, PartialEq)]
pub struct MagneticField {
    name: String,
    params: BTreeMap<String, f64>,
    kind: Kind,
    scale: f64,
}

impl fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        if self.scale != 1.0 {
            write!(f, " (x{})", self.scale)?;
        }
        Ok(())
    }
}

/// Name and parameters identifying a catalog field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub scale: f64,
}

struct Entry {
    name: &'static str,
    required: &'static [&'static str],
    optional: &'static [(&'static str, f64)],
    summary: &'static str,
}

const ENTRIES: &[Entry] = &[
    Entry {
        name: "constant",
        required: &["b"],
        optional: &[],
        summary: "B = b",
    },
    Entry {
        name: "radial",
        required: &["beta"],
        optional: &[],
        summary: "B = beta^2 - r^2",
    },
    Entry {
        name: "affine",
        required: &["beta"],
        optional: &[],
        summary: "B = beta - x1",
    },
    Entry {
        name: "sym72",
        required: &[],
        optional: &[],
        summary: "B = 22 - 90 x1^2 - 66 x2^2 + 12 x1^2 x2^2 + 32 x2^4",
    },
    Entry {
        name: "asym73",
        required: &["eps"],
        optional: &[],
        summary: "sym72 plus eps (8 sqrt(3/2) x1 - 12 x1 x2)",
    },
    Entry {
        name: "onesaddle82",
        required: &[],
        optional: &[("c", -0.3)],
        summary: "B = 16 (3/4 - (x1 - 1)^2 - x2^2) on the sublevel domain {psi < c}",
    },
];

/// The fixed set of named fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldCatalog;

impl FieldCatalog {
    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        ENTRIES.iter().map(|e| e.name)
    }

    /// One-line description per entry: name, parameters and formula.
    pub fn describe(&self) -> Vec<String> {
        ENTRIES
            .iter()
            .map(|e| {
                let mut ps: Vec<String> = e.required.iter().map(|p| p.to_string()).collect();
                ps.extend(e.optional.iter().map(|(p, d)| format!("{p}={d}")));
                format!("{:<12} [{}]  {}", e.name, ps.join(", "), e.summary)
            })
            .collect()
    }

    pub fn make(&self, name: &str, params: &BTreeMap<String, f64>) -> Result<MagneticField> {
        make_field(name, params)
    }
}

/// `ψ(x_min)` for `onesaddle82`, equal to `−(3/4)(2√3 − 3)`.
pub fn onesaddle_min_value() -> f64 {
    -0.75 * (2.0 * 3f64.sqrt() - 3.0)
}

/// Location of the local minimum of the `onesaddle82` potential.
pub fn onesaddle_argmin() -> Point2 {
    Point2::new((3.0 - 3f64.sqrt()) / 2.0, 0.0)
}

pub fn make_field(name: &str, params: &BTreeMap<String, f64>) -> Result<MagneticField> {
    let entry = ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownField(name.to_string()))?;
    for key in params.keys() {
        let known = entry.required.contains(&key.as_str()) || entry.optional.iter().any(|(k, _)| k == key);
        if !known {
            return Err(Error::InvalidArgument(format!("field {name} has no parameter {key}")));
        }
    }
    let mut resolved = BTreeMap::new();
    for &p in entry.required {
        let v = *params.get(p).ok_or_else(|| Error::MissingParam {
            field: name.to_string(),
            param: p.to_string(),
        })?;
        resolved.insert(p.to_string(), v);
    }
    for &(p, default) in entry.optional {
        resolved.insert(p.to_string(), params.get(p).copied().unwrap_or(default));
    }
    if let Some((k, v)) = resolved.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("parameter {k} = {v} is not finite")));
    }
    let get = |k: &str| resolved[k];
    let kind = match name {
        "constant" => Kind::Constant { b: get("b") },
        "radial" => Kind::Radial { beta: get("beta") },
        "affine" => Kind::Affine { beta: get("beta") },
        "sym72" => Kind::Quartic { eps: 0.0 },
        "asym73" => Kind::Quartic { eps: get("eps") },
        "onesaddle82" => {
            let c = get("c");
            if !(c > onesaddle_min_value() && c < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "onesaddle82 needs {} < c < 0, got {c}",
                    onesaddle_min_value()
                )));
            }
            Kind::OneSaddle { c }
        }
        _ => unreachable!("catalog entry without constructor"),
    };
    Ok(MagneticField {
        name: name.to_string(),
        params: resolved,
        kind,
        scale: 1.0,
    })
}

/// Analytic value of the potential; fails if the field has none.
pub fn eval_psi_analytic(field: &MagneticField, p: Point2) -> Result<f64> {
    field
        .psi(p)
        .ok_or_else(|| Error::NoAnalyticPotential(field.name.clone()))
}

impl MagneticField {
    pub fn constant(b: f64) -> Self {
        Self {
            name: "constant".into(),
            params: BTreeMap::from([("b".to_string(), b)]),
            kind: Kind::Constant { b },
            scale: 1.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            name: self.name.clone(),
            params: self.params.clone(),
            scale: self.scale,
        }
    }

    /// The field `−B`, with potential `−ψ`.
    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.scale *= s;
        f
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn b(&self, p: Point2) -> f64 {
        let (x, y) = (p.x1, p.x2);
        let v = match self.kind {
            Kind::Constant { b } => b,
            Kind::Radial { beta } => beta * beta - p.norm2(),
            Kind::Affine { beta } => beta - x,
            Kind::Quartic { eps } => {
                let (x2, y2) = (x * x, y * y);
                22.0 - 90.0 * x2 - 66.0 * y2 + 12.0 * x2 * y2 + 32.0 * y2 * y2
                    + eps * (8.0 * ASYM_SHIFT * x - 12.0 * x * y)
            }
            Kind::OneSaddle { .. } => 16.0 * (0.75 - (x - 1.0).powi(2) - y * y),
        };
        self.scale * v
    }

    pub fn has_analytic_psi(&self) -> bool {
        true
    }

    /// Closed-form potential with `Δψ = B`.
    pub fn psi(&self, p: Point2) -> Option<f64> {
        let (x, y) = (p.x1, p.x2);
        let s = p.norm2();
        let v = match self.kind {
            Kind::Constant { b } => b * (s - 1.0) / 4.0,
            Kind::Radial { beta } => (s + 1.0 - 4.0 * beta * beta) * (1.0 - s) / 16.0,
            Kind::Affine { beta } => (x - 2.0 * beta) * (1.0 - s) / 8.0,
            Kind::Quartic { eps } => (1.0 - s) * quartic_q(eps, x, y).0,
            Kind::OneSaddle { .. } => {
                let w = s - 2.0 * x;
                -w * w + s
            }
        };
        Some(self.scale * v)
    }

    pub fn grad_psi(&self, p: Point2) -> Option<Point2> {
        let (x, y) = (p.x1, p.x2);
        let s = p.norm2();
        let g = match self.kind {
            Kind::Constant { b } => p * (b / 2.0),
            Kind::Radial { beta } => p * ((4.0 * beta * beta - 2.0 * s) / 8.0),
            Kind::Affine { beta } => Point2::new(
                (1.0 - 3.0 * x * x + 4.0 * beta * x - y * y) / 8.0,
                y * (2.0 * beta - x) / 4.0,
            ),
            Kind::Quartic { eps } => {
                let (q, gq, _) = quartic_q(eps, x, y);
                // ψ = u q with u = 1 − r²
                gq * (1.0 - s) - p * (2.0 * q)
            }
            Kind::OneSaddle { .. } => {
                let w = s - 2.0 * x;
                let gw = Point2::new(2.0 * x - 2.0, 2.0 * y);
                p * 2.0 - gw * (2.0 * w)
            }
        };
        Some(g * self.scale)
    }

    pub fn hess_psi(&self, p: Point2) -> Option<Mat2> {
        let (x, y) = (p.x1, p.x2);
        let s = p.norm2();
        let h = match self.kind {
            Kind::Constant { b } => [[b / 2.0, 0.0], [0.0, b / 2.0]],
            Kind::Radial { beta } => {
                let d = (4.0 * beta * beta - 2.0 * s) / 8.0;
                [[d - x * x / 2.0, -x * y / 2.0], [-x * y / 2.0, d - y * y / 2.0]]
            }
            Kind::Affine { beta } => {
                let off = -y / 4.0;
                [[(4.0 * beta - 6.0 * x) / 8.0, off], [off, (2.0 * beta - x) / 4.0]]
            }
            Kind::Quartic { eps } => {
                let (q, gq, hq) = quartic_q(eps, x, y);
                let u = 1.0 - s;
                let gu = [-2.0 * x, -2.0 * y];
                let gq = [gq.x1, gq.x2];
                let mut h = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let hu = if i == j { -2.0 } else { 0.0 };
                        h[i][j] = q * hu + gu[i] * gq[j] + gq[i] * gu[j] + u * hq[i][j];
                    }
                }
                h
            }
            Kind::OneSaddle { .. } => {
                let w = s - 2.0 * x;
                let a = 2.0 * x - 2.0;
                [
                    [-2.0 * a * a - 4.0 * w + 2.0, -4.0 * y * a],
                    [-4.0 * y * a, -8.0 * y * y - 4.0 * w + 2.0],
                ]
            }
        };
        Some(h.map(|r| r.map(|v| v * self.scale)))
    }

    /// Level of `ψ` on the boundary of the default domain.
    pub fn boundary_level(&self) -> f64 {
        match self.kind {
            Kind::OneSaddle { c } => self.scale * c,
            _ => 0.0,
        }
    }

    /// `ψ − boundary_level`, the homogeneous Dirichlet potential on
    /// [`default_domain`](Self::default_domain).
    pub fn dirichlet_psi(&self, p: Point2) -> Option<f64> {
        self.psi(p).map(|v| v - self.boundary_level())
    }

    /// Domain on which the closed-form potential is the Dirichlet potential.
    pub fn default_domain(&self) -> Result<ImplicitDomain> {
        match self.kind {
            Kind::OneSaddle { c } => onesaddle_domain(c),
            _ => Ok(ImplicitDomain::unit_disk()),
        }
    }

    /// `B` as a shareable closure.
    pub fn b_fn(&self) -> ScalarFn {
        let f = self.clone();
        Arc::new(move |p| f.b(p))
    }
}

/// Component of `{ψ < c}` around the local minimum of the `onesaddle82` potential.
pub fn onesaddle_domain(c: f64) -> Result<ImplicitDomain> {
    let psi: ScalarFn = Arc::new(|p: Point2| {
        let w = p.norm2() - 2.0 * p.x1;
        -w * w + p.norm2()
    });
    ImplicitDomain::sublevel(psi, c, onesaddle_argmin(), None, 3.0)
}

/// The quartic factor `q = 6x² + 3y² − y⁴ − 1 + ε x (y − √(3/2))` with its
/// gradient and Hessian.
fn quartic_q(eps: f64, x: f64, y: f64) -> (f64, Point2, Mat2) {
    let q = 6.0 * x * x + 3.0 * y * y - y.powi(4) - 1.0 + eps * x * (y - ASYM_SHIFT);
    let g = Point2::new(12.0 * x + eps * (y - ASYM_SHIFT), 6.0 * y - 4.0 * y.powi(3) + eps * x);
    let h = [[12.0, eps], [eps, 6.0 - 12.0 * y * y]];
    (q, g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn field(name: &str, ps: &[(&str, f64)]) -> MagneticField {
        let m = ps.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_field(name, &m).unwrap()
    }

    #[test]
    fn catalog_values() {
        assert_abs_diff_eq!(field("radial", &[("beta", 0.6)]).b(Point2::ORIGIN), 0.36, epsilon = 1e-15);
        assert_eq!(field("sym72", &[]).b(Point2::ORIGIN), 22.0);
        assert_eq!(field("onesaddle82", &[]).b(Point2::new(1.0, 0.0)), 12.0);
    }

    #[test]
    fn analytic_potential_values() {
        let a = field("affine", &[("beta", 0.0)]);
        let v = eval_psi_analytic(&a, Point2::new(1.0 / 3f64.sqrt(), 0.0)).unwrap();
        assert_abs_diff_eq!(v, 1.0 / (12.0 * 3f64.sqrt()), epsilon = 1e-15);
        assert_eq!(eval_psi_analytic(&field("sym72", &[]), Point2::ORIGIN).unwrap(), -1.0);
        let r = field("radial", &[("beta", 1.0)]);
        assert_abs_diff_eq!(eval_psi_analytic(&r, Point2::ORIGIN).unwrap(), -3.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(make_field("nope", &BTreeMap::new()), Err(Error::UnknownField(_))));
        assert!(matches!(
            make_field("radial", &BTreeMap::new()),
            Err(Error::MissingParam { .. })
        ));
        let bad_c = BTreeMap::from([("c".to_string(), -0.4)]);
        assert!(make_field("onesaddle82", &bad_c).is_err());
    }

    #[test]
    fn onesaddle_min_value_is_attained() {
        let f = field("onesaddle82", &[]);
        let v = f.psi(onesaddle_argmin()).unwrap();
        assert_abs_diff_eq!(v, onesaddle_min_value(), epsilon = 1e-14);
        assert!(f.grad_psi(onesaddle_argmin()).unwrap().norm() < 1e-14);
    }

    #[test]
    fn negation_flips_everything() {
        let f = field("affine", &[("beta", 0.3)]);
        let g = f.negated();
        let p = Point2::new(0.2, -0.4);
        assert_eq!(g.b(p), -f.b(p));
        assert_eq!(g.psi(p), f.psi(p).map(|v| -v));
        assert_eq!(g.negated(), f);
    }

    #[test]
    fn catalog_lists_required_entries() {
        let names: Vec<_> = FieldCatalog.names().collect();
        for n in ["constant", "radial", "affine", "sym72", "asym73", "onesaddle82"] {
            assert!(names.contains(&n));
        }
    }
}
