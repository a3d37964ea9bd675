use std::fmt::Write as _;
use std::sync::Arc;

use pauli_core::deform::{luttrell_iterate, DeformReport, DeformResult};
use pauli_core::fields::FieldSpec;
use pauli_core::geometry::{generate_mesh, ImplicitDomain, Point2};
use pauli_core::io::{csv_table, fmt_f64, polylines_csv, to_json_string};
use pauli_core::morse::{
    analytic_level_set, find_critical_points, integral_curve, saddle_escape_starts, CriticalKind, CriticalPoint,
    CurveOptions, Direction, IntegralCurve, LevelCurve,
};
use pauli_core::potential::{oscillation, restricted_potential, solve_poisson, Sign};
use pauli_core::spectral::{rate_sweep, RateEstimate, SweepConfig};
use pauli_core::MagneticField;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{CliError, Outcome, Status};

/// Files produced by a command, in write order.
pub type Artifacts = Vec<(String, String)>;

fn finish(cfg: &RunConfig, status: Status, summary: String, table: String, files: Artifacts) -> Result<Outcome, CliError> {
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(pauli_core::Error::from)?;
        for (name, body) in &files {
            std::fs::write(dir.join(name), body).map_err(pauli_core::Error::from)?;
        }
    }
    let stdout = match cfg.format {
        crate::config::Format::Json => summary,
        crate::config::Format::Csv => table,
    };
    Ok(Outcome { status, stdout, files: files.into_iter().map(|(n, _)| n).collect() })
}

#[derive(Serialize)]
struct PotentialSummary<'a> {
    command: &'static str,
    run: &'a RunConfig,
    field: FieldSpec,
    mesh_vertices: usize,
    mesh_triangles: usize,
    psi_min: f64,
    psi_max: f64,
    osc: f64,
    minus_two_osc: f64,
    argmin: Point2,
    argmax: Point2,
}

pub fn potential(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let field = cfg.make_field()?;
    let domain = cfg.domain.build(&field)?;
    let mesh = Arc::new(generate_mesh(&domain, cfg.mesh_h)?);
    let sol = oscillation(&solve_poisson(&mesh, &field)?);
    let summary = to_json_string(&PotentialSummary {
        command: "potential",
        run: cfg,
        field: field.spec(),
        mesh_vertices: mesh.num_vertices(),
        mesh_triangles: mesh.num_triangles(),
        psi_min: sol.psi_min,
        psi_max: sol.psi_max,
        osc: sol.osc,
        minus_two_osc: 0.0 - 2.0 * sol.osc,
        argmin: sol.argmin,
        argmax: sol.argmax,
    })?;
    let rows: Vec<Vec<f64>> = mesh
        .vertices()
        .iter()
        .zip(sol.psi.values())
        .map(|(p, &v)| vec![p.x1, p.x2, v])
        .collect();
    let table = csv_table(&["x1", "x2", "psi"], &rows);
    let files = vec![("potential.json".into(), summary.clone()), ("psi.csv".into(), table.clone())];
    finish(cfg, Status::Success, summary, table, files)
}

#[derive(Serialize)]
struct RatesSummary<'a> {
    command: &'static str,
    run: &'a RunConfig,
    #[serde(flatten)]
    estimate: &'a RateEstimate,
}

pub fn rates(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let field = cfg.make_field()?;
    let mut sweep = SweepConfig::new(field.clone(), cfg.mesh_h, cfg.h_list.clone());
    sweep.spin = cfg.spin;
    if !cfg.domain.is_default() {
        sweep.domain = Some(cfg.domain.build(&field)?);
    }
    let est = rate_sweep(&sweep)?;
    let summary = to_json_string(&RatesSummary { command: "rates", run: cfg, estimate: &est })?;
    let table = est.to_csv();
    let status = if est.violations > 0 {
        let which: Vec<String> = est.rows.iter().flat_map(|r| r.violations.iter().map(move |v| format!("h={}: {v}", r.h))).collect();
        Status::NumericalFailure(format!("bound violations: {}", which.join("; ")))
    } else if est.is_partial() {
        Status::Partial(format!("no result at h = {:?}", est.failed_h))
    } else {
        Status::Success
    };
    let files = vec![("rates.json".into(), summary.clone()), ("rates.csv".into(), table.clone())];
    finish(cfg, status, summary, table, files)
}

fn container(cfg: &RunConfig, field: &MagneticField) -> Result<ImplicitDomain, CliError> {
    let d = if cfg.domain.is_default() {
        ImplicitDomain::unit_disk()
    } else {
        cfg.domain.build(field)?
    };
    match d {
        ImplicitDomain::Disk { .. } => Ok(d),
        _ => Err(CliError::Config("deform needs a disk container".into())),
    }
}

fn stop_status(res: &DeformResult) -> Status {
    if res.converged {
        Status::Success
    } else {
        Status::Partial(format!("deformation stopped without converging: {:?}", res.stop))
    }
}

fn history_csv(res: &DeformResult) -> String {
    let rows: Vec<Vec<f64>> = res
        .displacements
        .iter()
        .enumerate()
        .map(|(k, &d)| vec![(k + 1) as f64, d, res.history[k].osc, res.history[k].psi_min])
        .collect();
    csv_table(&["iteration", "displacement", "osc", "psi_min"], &rows)
}

#[derive(Serialize)]
struct DeformSummary<'a> {
    command: &'static str,
    run: &'a RunConfig,
    /// Nothing was cut from the container: the iteration is degenerate.
    degenerate_full_container: bool,
    #[serde(flatten)]
    report: DeformReport<'a>,
}

#[derive(Serialize)]
struct SweepRow {
    beta: f64,
    osc_hat: Option<f64>,
    osc_opt: Option<f64>,
    converged: bool,
    iterations_used: usize,
    full_container: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct DeformSweepSummary<'a> {
    command: &'static str,
    run: &'a RunConfig,
    rows: &'a [SweepRow],
}

fn sweep_row(cfg: &RunConfig, beta: f64) -> SweepRow {
    let mut row = SweepRow {
        beta,
        osc_hat: None,
        osc_opt: None,
        converged: false,
        iterations_used: 0,
        full_container: false,
        error: None,
    };
    let mut params = cfg.params.clone();
    params.insert("beta".into(), beta);
    let mut run = || -> Result<(), CliError> {
        let field = pauli_core::fields::make_field(&cfg.field, &params)?;
        let res = luttrell_iterate(&field, &container(cfg, &field)?, &cfg.deform)?;
        row.osc_opt = Some(res.osc_opt);
        row.converged = res.converged;
        row.iterations_used = res.iterations_used;
        row.full_container = res.full_container;
        row.osc_hat = Some(restricted_potential(&field, Sign::Plus, cfg.mesh_h)?.osc);
        Ok(())
    };
    if let Err(e) = run() {
        row.error = Some(e.to_string());
    }
    row
}

pub fn deform(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.deform.validate()?;
    let Some(betas) = &cfg.beta_sweep else {
        let field = cfg.make_field()?;
        let res = luttrell_iterate(&field, &container(cfg, &field)?, &cfg.deform)?;
        if res.full_container {
            eprintln!("note: the final domain is the whole container (degenerate outcome)");
        }
        let summary = to_json_string(&DeformSummary {
            command: "deform",
            run: cfg,
            degenerate_full_container: res.full_container,
            report: res.report(&field, &cfg.deform),
        })?;
        let table = history_csv(&res);
        let files = vec![
            ("deform.json".into(), summary.clone()),
            ("history.csv".into(), table.clone()),
            ("polygons.csv".into(), polylines_csv(res.polygons.iter().map(Vec::as_slice))),
        ];
        return finish(cfg, stop_status(&res), summary, table, files);
    };
    let mut probe = cfg.params.clone();
    probe.insert("beta".into(), betas[0]);
    if pauli_core::fields::make_field(&cfg.field, &probe)?.param("beta").is_none() {
        return Err(CliError::Config(format!("field `{}` has no parameter beta to sweep", cfg.field)));
    }

    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let mut rows = Vec::with_capacity(betas.len());
    for chunk in betas.chunks(workers) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|&b| s.spawn(move || sweep_row(cfg, b))).collect();
            rows.extend(handles.into_iter().map(|h| h.join().expect("sweep worker panicked")));
        });
    }
    let summary = to_json_string(&DeformSweepSummary { command: "deform", run: cfg, rows: &rows })?;
    let table = csv_table(
        &["beta", "minus_two_osc_hat", "minus_two_osc_opt"],
        &rows
            .iter()
            .map(|r| vec![r.beta, -2.0 * r.osc_hat.unwrap_or(f64::NAN), -2.0 * r.osc_opt.unwrap_or(f64::NAN)])
            .collect::<Vec<_>>(),
    );
    let failed: Vec<f64> = rows.iter().filter(|r| r.error.is_some() || !r.converged).map(|r| r.beta).collect();
    let status = if failed.is_empty() {
        Status::Success
    } else {
        Status::Partial(format!("no converged result for beta = {failed:?}"))
    };
    let files = vec![("deform_sweep.json".into(), summary.clone()), ("deform_sweep.csv".into(), table.clone())];
    finish(cfg, status, summary, table, files)
}

#[derive(Serialize)]
struct LevelOutcome {
    level: f64,
    curve: Option<LevelCurve>,
    error: Option<String>,
}

#[derive(Serialize)]
struct MorseSummary<'a> {
    command: &'static str,
    run: &'a RunConfig,
    field: FieldSpec,
    critical_points: &'a [CriticalPoint],
    level_sets: &'a [LevelOutcome],
    integral_curves: &'a [IntegralCurve],
}

fn critical_csv(cps: &[CriticalPoint]) -> String {
    let mut out = String::from("x1,x2,value,h11,h12,h22,kind\n");
    for c in cps {
        let h = c.hessian;
        let cells = [c.location.x1, c.location.x2, c.value, h[0][0], h[0][1], h[1][1]].map(fmt_f64);
        let _ = writeln!(out, "{},{}", cells.join(","), c.kind.as_str());
    }
    out
}

pub fn morse(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let field = cfg.make_field()?;
    if !field.has_analytic_psi() {
        return Err(pauli_core::Error::NoAnalyticPotential(field.name().to_string()).into());
    }
    let domain = cfg.domain.build(&field)?;
    let cps = find_critical_points(&field, 41);
    let levels = if cfg.levels.is_empty() {
        let mut v: Vec<f64> = cps.iter().filter(|c| c.kind == CriticalKind::Saddle).map(|c| c.value).collect();
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        if v.is_empty() {
            v.push(0.0);
        }
        v
    } else {
        cfg.levels.clone()
    };
    let level_sets: Vec<LevelOutcome> = levels
        .iter()
        .map(|&level| match analytic_level_set(&field, level, cfg.mesh_h) {
            Ok(c) => LevelOutcome { level, curve: Some(c), error: None },
            Err(e) => LevelOutcome { level, curve: None, error: Some(e.to_string()) },
        })
        .collect();

    let mut curves = Vec::new();
    if cfg.curves {
        let opts = CurveOptions { bounds: Some(domain.clone()), ..CurveOptions::default() };
        for saddle in cps.iter().filter(|c| c.kind == CriticalKind::Saddle) {
            for dir in [Direction::Ascent, Direction::Descent] {
                for start in saddle_escape_starts(saddle, domain.diameter(), dir) {
                    curves.push(integral_curve(&field, start, dir, &opts));
                }
            }
        }
    }

    let summary = to_json_string(&MorseSummary {
        command: "morse",
        run: cfg,
        field: field.spec(),
        critical_points: &cps,
        level_sets: &level_sets,
        integral_curves: &curves,
    })?;
    let table = critical_csv(&cps);
    let mut files = vec![("morse.json".to_string(), summary.clone()), ("critical_points.csv".to_string(), table.clone())];
    for (k, ls) in level_sets.iter().enumerate() {
        if let Some(c) = &ls.curve {
            let paths: Vec<Vec<Point2>> = (0..c.len()).map(|i| c.component_path(i)).collect();
            files.push((format!("level_{k}.csv"), polylines_csv(paths.iter().map(Vec::as_slice))));
        }
    }
    if !curves.is_empty() {
        files.push(("curves.csv".into(), polylines_csv(curves.iter().map(|c| c.points.as_slice()))));
    }
    let failed: Vec<f64> = level_sets.iter().filter(|l| l.error.is_some()).map(|l| l.level).collect();
    let status = if failed.is_empty() {
        Status::Success
    } else {
        Status::Partial(format!("no level set at {failed:?}"))
    };
    finish(cfg, status, summary, table, files)
}
