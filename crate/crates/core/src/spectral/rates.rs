use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::assembly::{assemble_pauli, assemble_witten, PsiSource, Spin};
use super::bounds::{best_trial_state_bound, ekp_lower_bound, trial_state_bound};
use super::eigen::{dirichlet_ground, smallest_eigenvalue};
use crate::fields::{FieldSpec, MagneticField};
use crate::geometry::{generate_mesh, ImplicitDomain, TriMesh};
use crate::io::fmt_f64;
use crate::potential::{oscillation, solve_poisson, ScalarField};
use crate::{Error, Result};

/// Which spin components a sweep computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinChoice {
    Plus,
    Minus,
    /// Both components; the rate uses `Λ = min(λ₋, λ₊)`.
    Both,
}

impl SpinChoice {
    fn spins(self) -> &'static [Spin] {
        match self {
            SpinChoice::Plus => &[Spin::Plus],
            SpinChoice::Minus => &[Spin::Minus],
            SpinChoice::Both => &[Spin::Minus, Spin::Plus],
        }
    }
}

/// Largest `osc/h` accepted; beyond it `e^{−2·osc/h}` leaves the float range
/// that the bounds can resolve.
pub const MAX_OSC_OVER_H: f64 = 300.0;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub field: MagneticField,
    /// `None` selects the field's default domain and the closed-form gauge.
    pub domain: Option<ImplicitDomain>,
    pub mesh_h: f64,
    pub h_list: Vec<f64>,
    pub spin: SpinChoice,
    /// Cutoff width of the trial state; `None` takes the best of a grid.
    pub eta: Option<f64>,
    pub tol: f64,
}

impl SweepConfig {
    pub fn new(field: MagneticField, mesh_h: f64, h_list: Vec<f64>) -> Self {
        Self {
            field,
            domain: None,
            mesh_h,
            h_list,
            spin: SpinChoice::Minus,
            eta: None,
            tol: 1e-9,
        }
    }
}

/// Everything computed at one value of `h`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub h: f64,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    /// `λ` of the selected spin, or `Λ` when both are computed.
    pub lambda: Option<f64>,
    pub r_of_h: Option<f64>,
    pub lower_bound: f64,
    pub trial_upper_bound: Option<f64>,
    pub trial_quadrature_error: Option<f64>,
    pub witten_lambda: Option<f64>,
    /// Scale of the Pauli matrix, the reference for the Witten comparison.
    pub matrix_scale: Option<f64>,
    pub violations: Vec<String>,
    pub error: Option<String>,
}

/// Result of a sweep over `h` with the affine fit `r(h) ≈ r₀ + r₁·h`.
#[derive(Debug, Clone, Serialize)]
pub struct RateEstimate {
    pub field: FieldSpec,
    pub spin: SpinChoice,
    pub mesh_h: f64,
    pub mesh_vertices: usize,
    pub lambda_dirichlet: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub osc: f64,
    /// Successful `(h, λ)` pairs, in sweep order.
    pub samples: Vec<(f64, f64)>,
    pub r_values: Vec<f64>,
    pub fit_model: String,
    pub fitted_limit: Option<f64>,
    pub fitted_slope: Option<f64>,
    /// Root mean square deviation of the samples from the fitted line.
    pub fit_residual: Option<f64>,
    /// Intercept of `r0 + r1·h + r2·h²`, reported next to the affine fit
    /// because `r(h)` is visibly curved on desk-scale `h` lists.
    pub quadratic_limit: Option<f64>,
    pub r_monotone: bool,
    pub target: f64,
    pub target_label: String,
    pub violations: usize,
    pub failed_h: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl RateEstimate {
    pub fn is_partial(&self) -> bool {
        !self.failed_h.is_empty()
    }

    /// Plot table, one row per `h`; missing values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("h,lambda_minus,lambda_plus,Lambda,r_of_h,lower_bound,trial_upper_bound,witten_lambda\n");
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            let cells = [
                fmt_f64(r.h),
                cell(r.lambda_minus),
                cell(r.lambda_plus),
                cell(r.lambda),
                cell(r.r_of_h),
                fmt_f64(r.lower_bound),
                cell(r.trial_upper_bound),
                cell(r.witten_lambda),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Least-squares line through `(x, y)`; returns `(intercept, slope, rms)`.
pub fn affine_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some((intercept, slope, rms))
}

/// Least-squares coefficients `[c0, c1, c2]` of `c0 + c1·x + c2·x²`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    if x.len() < 3 || y.len() != x.len() {
        return None;
    }
    let a = DMatrix::from_fn(x.len(), 3, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let c = a.svd(true, true).solve(&b, 1e-14).ok()?;
    Some([c[0], c[1], c[2]])
}

fn validate(cfg: &SweepConfig) -> Result<()> {
    if cfg.h_list.is_empty() {
        return Err(Error::InvalidArgument("empty h list".into()));
    }
    if cfg.h_list.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
        return Err(Error::InvalidArgument("h values must be positive".into()));
    }
    if cfg.h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("h list must be strictly decreasing".into()));
    }
    Ok(())
}

struct Shared<'a> {
    cfg: &'a SweepConfig,
    mesh: &'a TriMesh,
    psi: &'a ScalarField,
    neg_field: MagneticField,
    neg_psi: ScalarField,
    analytic: bool,
    lambda_d: f64,
    osc: f64,
}

impl Shared<'_> {
    fn lambda(&self, h: f64, spin: Spin) -> Result<(f64, f64)> {
        let source = if self.analytic {
            PsiSource::Analytic(&self.cfg.field)
        } else {
            PsiSource::Discrete(self.psi)
        };
        let disc = assemble_pauli(self.mesh, &self.cfg.field, source, h, spin)?;
        let res = smallest_eigenvalue(&disc, self.cfg.tol)?;
        Ok((res.lambda, disc.scale()))
    }

    /// Upper bounds refer to the `P₋` form; `λ₊(B)` is bounded through `λ₋(−B)`.
    fn uppers(&self, h: f64, spin: Spin) -> Result<(f64, f64, f64)> {
        let (field, psi) = match spin {
            Spin::Minus => (&self.cfg.field, self.psi),
            Spin::Plus => (&self.neg_field, &self.neg_psi),
        };
        let source = if self.analytic {
            PsiSource::Analytic(field)
        } else {
            PsiSource::Discrete(psi)
        };
        let w = assemble_witten(self.mesh, field, source, h)?;
        let witten = smallest_eigenvalue(&w, self.cfg.tol)?.lambda;
        let trial = match self.cfg.eta {
            Some(eta) => trial_state_bound(self.mesh, psi, h, eta)?,
            None => best_trial_state_bound(self.mesh, psi, h)?,
        };
        Ok((witten, trial.value, trial.quadrature_error))
    }

    fn row(&self, h: f64) -> SweepRow {
        let mut row = SweepRow {
            h,
            lambda_minus: None,
            lambda_plus: None,
            lambda: None,
            r_of_h: None,
            lower_bound: ekp_lower_bound(self.lambda_d, self.osc, h),
            trial_upper_bound: None,
            trial_quadrature_error: None,
            witten_lambda: None,
            matrix_scale: None,
            violations: Vec::new(),
            error: None,
        };
        let mut chosen: Option<(f64, Spin)> = None;
        for &spin in self.cfg.spin.spins() {
            match self.lambda(h, spin) {
                Ok((lam, scale)) => {
                    match spin {
                        Spin::Minus => row.lambda_minus = Some(lam),
                        Spin::Plus => row.lambda_plus = Some(lam),
                    }
                    row.matrix_scale = Some(row.matrix_scale.map_or(scale, |s: f64| s.max(scale)));
                    if chosen.map_or(true, |(best, _)| lam < best) {
                        chosen = Some((lam, spin));
                    }
                }
                Err(e) => {
                    row.error = Some(format!("spin {}: {e}", spin.as_str()));
                    return row;
                }
            }
        }
        let Some((lam, spin)) = chosen else { return row };
        row.lambda = Some(lam);
        row.r_of_h = (lam > 0.0).then(|| h * lam.ln());
        if lam < row.lower_bound {
            row.violations.push(format!("lambda {lam:e} below lower bound {:e}", row.lower_bound));
        }
        match self.uppers(h, spin) {
            Ok((witten, trial, qerr)) => {
                row.witten_lambda = Some(witten);
                row.trial_upper_bound = Some(trial);
                row.trial_quadrature_error = Some(qerr);
                let scale = row.matrix_scale.unwrap_or(1.0);
                if lam > witten + 1e-8 * scale {
                    row.violations.push(format!("lambda {lam:e} above Witten value {witten:e}"));
                }
                if lam > trial + qerr {
                    row.violations.push(format!("lambda {lam:e} above trial bound {trial:e}"));
                }
            }
            Err(e) => row.error = Some(format!("upper bounds: {e}")),
        }
        row
    }
}

/// Computes `λ(h)` for every `h`, checks the lower and upper bounds and fits
/// `r(h) = h·log λ(h)` with an affine model whose intercept estimates the
/// `h → 0` rate.
pub fn rate_sweep(cfg: &SweepConfig) -> Result<RateEstimate> {
    validate(cfg)?;
    let (domain, analytic) = match &cfg.domain {
        Some(d) => (d.clone(), false),
        None => (cfg.field.default_domain()?, true),
    };
    let mesh = Arc::new(generate_mesh(&domain, cfg.mesh_h)?);
    let psi = solve_poisson(&mesh, &cfg.field)?;
    let sol = oscillation(&psi);
    if let Some(&h) = cfg.h_list.iter().find(|&&h| sol.osc / h > MAX_OSC_OVER_H) {
        return Err(Error::InvalidArgument(format!(
            "h = {h} is below the safe window (osc/h > {MAX_OSC_OVER_H})"
        )));
    }
    let lambda_d = dirichlet_ground(&mesh)?;
    let neg_psi = ScalarField::new(mesh.clone(), psi.values().iter().map(|v| -v).collect())?;
    let shared = Shared {
        cfg,
        mesh: &mesh,
        psi: &psi,
        neg_field: cfg.field.negated(),
        neg_psi,
        analytic,
        lambda_d,
        osc: sol.osc,
    };
    let rows: Vec<SweepRow> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.h_list.iter().map(|&h| {
            let shared = &shared;
            s.spawn(move || shared.row(h))
        }).collect();
        handles.into_iter().map(|j| j.join().expect("sweep worker panicked")).collect()
    });

    let mut samples = Vec::new();
    let mut r_values = Vec::new();
    let mut failed_h = Vec::new();
    for r in &rows {
        match (r.lambda, r.r_of_h, &r.error) {
            (Some(l), Some(rv), None) => {
                samples.push((r.h, l));
                r_values.push(rv);
            }
            _ => failed_h.push(r.h),
        }
    }
    let hs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let fit = affine_fit(&hs, &r_values);
    let quadratic_limit = quadratic_fit(&hs, &r_values).map(|c| c[0]);
    let diffs: Vec<f64> = r_values.windows(2).map(|w| w[1] - w[0]).collect();
    let r_monotone = diffs.iter().all(|&d| d <= 0.0) || diffs.iter().all(|&d| d >= 0.0);
    let violations = rows.iter().map(|r| r.violations.len()).sum();
    let constant_sign = sol.psi_max.abs() <= 1e-9 * sol.osc.max(1e-300);
    let (target, target_label) = if constant_sign {
        (2.0 * sol.psi_min, "2*psi_min".to_string())
    } else {
        (-2.0 * sol.osc, "-2*osc".to_string())
    };
    Ok(RateEstimate {
        field: cfg.field.spec(),
        spin: cfg.spin,
        mesh_h: cfg.mesh_h,
        mesh_vertices: mesh.num_vertices(),
        lambda_dirichlet: lambda_d,
        psi_min: sol.psi_min,
        psi_max: sol.psi_max,
        osc: sol.osc,
        samples,
        r_values,
        fit_model: "r(h) = r0 + r1*h, least squares over successful samples".into(),
        fitted_limit: fit.map(|f| f.0),
        fitted_slope: fit.map(|f| f.1),
        fit_residual: fit.map(|f| f.2),
        quadratic_limit,
        r_monotone,
        target,
        target_label,
        violations,
        failed_h,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_fit_exact_line() {
        let x = [0.5, 0.35, 0.25, 0.18];
        let y: Vec<f64> = x.iter().map(|h| -0.5 + 0.8 * h).collect();
        let (a, b, rms) = affine_fit(&x, &y).unwrap();
        assert!((a + 0.5).abs() < 1e-14 && (b - 0.8).abs() < 1e-14 && rms < 1e-14);
        assert!(affine_fit(&[1.0], &[2.0]).is_none());
    }

    #[test]
    fn quadratic_fit_exact() {
        let x = [0.5, 0.35, 0.25, 0.18];
        let y: Vec<f64> = x.iter().map(|h| -0.5 + 0.1 * h + 2.0 * h * h).collect();
        let c = quadratic_fit(&x, &y).unwrap();
        assert!((c[0] + 0.5).abs() < 1e-12 && (c[2] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn rejects_increasing_h() {
        let cfg = SweepConfig::new(MagneticField::constant(1.0), 0.1, vec![0.2, 0.3]);
        assert!(matches!(rate_sweep(&cfg), Err(Error::InvalidArgument(_))));
    }
}
