use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use pauli_core::deform::DeformConfig;
use pauli_core::fields::make_field;
use pauli_core::geometry::{ImplicitDomain, Point2, ScalarFn};
use pauli_core::morse::{find_critical_points, CriticalKind};
use pauli_core::spectral::SpinChoice;
use pauli_core::MagneticField;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Dirichlet potential and its oscillation.
    Potential,
    /// Ground-state energies and the semi-classical rate over an h list.
    Rates,
    /// Boundary pushing towards a maximal negativity domain.
    Deform,
    /// Critical points, level sets and integral curves of the potential.
    Morse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Command-line flags. Every flag except `--config` can also be given in
/// the config file under the same name (dashes become underscores).
#[derive(Debug, Parser)]
#[command(name = "pauli", version, about = "Ground-state quantities of the Dirichlet Pauli operator")]
pub struct Cli {
    /// What to compute. May be taken from the config file instead.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Flat TOML file with defaults for any of the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field name from the catalog.
    #[arg(long)]
    pub field: Option<String>,
    /// Field parameter as `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// `disk`, `disk:<radius>`, `polygon:<file>` or `sublevel:<field>:<c>`.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub mesh_h: Option<f64>,
    /// Semi-classical parameter; repeatable.
    #[arg(long = "h", value_name = "H")]
    pub h: Vec<f64>,
    /// `plus`, `minus` or `both`.
    #[arg(long)]
    pub spin: Option<String>,
    /// Directory for output files. Without it only stdout is written.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// What goes to stdout: the JSON summary or the main CSV table.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Level of a level set to extract (morse); repeatable.
    #[arg(long = "level", value_name = "C", allow_negative_numbers = true)]
    pub level: Vec<f64>,
    /// Also trace integral curves out of every saddle (morse).
    #[arg(long)]
    pub curves: bool,
    /// `start:end:step` over the field parameter `beta` (deform).
    #[arg(long, allow_hyphen_values = true)]
    pub beta_sweep: Option<String>,
    #[arg(long)]
    pub n_vertices: Option<usize>,
    #[arg(long)]
    pub probe_offset: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub stop_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub field: Option<String>,
    #[serde(default)]
    pub param: Vec<String>,
    pub domain: Option<String>,
    pub mesh_h: Option<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    pub spin: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub level: Vec<f64>,
    pub curves: Option<bool>,
    pub beta_sweep: Option<String>,
    pub n_vertices: Option<usize>,
    pub probe_offset: Option<f64>,
    pub step: Option<f64>,
    pub stop_tol: Option<f64>,
    pub max_iters: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_MESH_H: f64 = 0.02;
pub const DEFAULT_H_LIST: [f64; 4] = [0.5, 0.35, 0.25, 0.18];
/// Semi-classical parameters accepted on the command line. Below this range
/// the weights `e^{-2ψ/h}` outrun what a P1 mesh can resolve.
pub const H_WINDOW: (f64, f64) = (0.1, 1.0);

/// Domain selector as given on the command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DomainSpec {
    /// The field's own domain.
    Default,
    Disk { radius: f64 },
    Polygon { file: PathBuf },
    Sublevel { field: String, level: f64 },
}

impl DomainSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("unrecognized domain `{s}`"));
        let mut parts = s.splitn(3, ':');
        match parts.next() {
            Some("disk") => match parts.next() {
                None => Ok(Self::Disk { radius: 1.0 }),
                Some(r) => {
                    let radius: f64 = r.parse().map_err(|_| bad())?;
                    if !(radius > 0.0) {
                        return Err(bad());
                    }
                    Ok(Self::Disk { radius })
                }
            },
            Some("polygon") => {
                let rest = &s["polygon:".len().min(s.len())..];
                if rest.is_empty() {
                    return Err(bad());
                }
                Ok(Self::Polygon { file: PathBuf::from(rest) })
            }
            Some("sublevel") => {
                let field = parts.next().filter(|f| !f.is_empty()).ok_or_else(bad)?;
                let level = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                Ok(Self::Sublevel { field: field.to_string(), level })
            }
            _ => Err(bad()),
        }
    }

    pub fn is_default(&self) -> bool {
        *self == Self::Default
    }

    /// Builds the domain for `field` (the run's field, whose parameters a
    /// sublevel domain of the same name inherits).
    pub fn build(&self, field: &MagneticField) -> Result<ImplicitDomain, CliError> {
        match self {
            Self::Default => Ok(field.default_domain()?),
            Self::Disk { radius } => Ok(ImplicitDomain::disk(Point2::ORIGIN, *radius)),
            Self::Polygon { file } => Ok(ImplicitDomain::polygon(read_polygon(file)?)?),
            Self::Sublevel { field: name, level } => {
                let f = if name == field.name() {
                    field.clone()
                } else {
                    make_field(name, &BTreeMap::new())?
                };
                sublevel_domain(&f, *level)
            }
        }
    }
}

/// Component of `{ψ < level}` around the lowest local minimum of `ψ`.
fn sublevel_domain(field: &MagneticField, level: f64) -> Result<ImplicitDomain, CliError> {
    if !field.has_analytic_psi() {
        return Err(pauli_core::Error::NoAnalyticPotential(field.name().to_string()).into());
    }
    let seed = find_critical_points(field, 41)
        .into_iter()
        .filter(|c| c.kind == CriticalKind::Min)
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| CliError::Config(format!("`{}` has no local minimum to grow a sublevel set from", field.name())))?;
    if !(seed.value < level) {
        return Err(CliError::Config(format!(
            "sublevel {level} lies below the minimum {} of the potential",
            seed.value
        )));
    }
    let home = field.default_domain()?;
    let container = matches!(home, ImplicitDomain::Disk { .. }).then(|| home.clone());
    let g = field.clone();
    let psi: ScalarFn = Arc::new(move |p| g.psi(p).unwrap_or(f64::INFINITY));
    Ok(ImplicitDomain::sublevel(psi, level, seed.location, container, 3.0 * home.diameter())?)
}

/// Reads `x1,x2` (or whitespace separated) vertex rows. Blank lines, `#`
/// comments and a non-numeric header line are skipped.
pub fn read_polygon(path: &Path) -> Result<Vec<Point2>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => pts.push(Point2::new(v[0], v[1])),
            None if pts.is_empty() && k == 0 => {}
            _ => return Err(CliError::Config(format!("{}:{}: expected two numbers", path.display(), k + 1))),
        }
    }
    Ok(pts)
}

fn parse_param(s: &str) -> Result<(String, f64), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("parameter `{s}` is not key=value")))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("parameter `{s}` has a non-numeric value")))?;
    Ok((k.trim().to_string(), v))
}

fn parse_spin(s: &str) -> Result<SpinChoice, CliError> {
    match s {
        "plus" => Ok(SpinChoice::Plus),
        "minus" => Ok(SpinChoice::Minus),
        "both" => Ok(SpinChoice::Both),
        _ => Err(CliError::Config(format!("spin must be plus, minus or both, not `{s}`"))),
    }
}

/// `start:end:step`, inclusive of `end` up to rounding.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("beta sweep `{s}` is not start:end:step"));
    let v: Vec<f64> = s.split(':').map(|c| c.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [a, b, d] = v[..] else { return Err(bad()) };
    if !(d > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let n = ((b - a) / d + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((a + k as f64 * d) * 1e10).round() / 1e10).collect())
}

/// Fully resolved run settings.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub field: String,
    pub params: BTreeMap<String, f64>,
    pub domain: DomainSpec,
    pub mesh_h: f64,
    pub h_list: Vec<f64>,
    pub spin: SpinChoice,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
    pub levels: Vec<f64>,
    pub curves: bool,
    pub beta_sweep: Option<Vec<f64>>,
    pub deform: DeformConfig,
}

impl RunConfig {
    /// Merges flags over the config file (if any) over built-in defaults.
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let pick_vec = |a: Vec<f64>, b: Vec<f64>| if a.is_empty() { b } else { a };

        let command = cli
            .command
            .or(file.command)
            .ok_or_else(|| CliError::Config("no command given (potential, rates, deform or morse)".into()))?;
        let field = cli
            .field
            .or(file.field)
            .ok_or_else(|| CliError::Config("--field is required".into()))?;
        let mut params = BTreeMap::new();
        for p in file.param.iter().chain(&cli.params) {
            let (k, v) = parse_param(p)?;
            params.insert(k, v);
        }
        let domain = match cli.domain.or(file.domain) {
            Some(s) => DomainSpec::parse(&s)?,
            None => DomainSpec::Default,
        };
        let mesh_h = cli.mesh_h.or(file.mesh_h).unwrap_or(DEFAULT_MESH_H);
        if !(mesh_h > 0.0) || !mesh_h.is_finite() {
            return Err(CliError::Config("--mesh-h must be positive".into()));
        }
        let mut h_list = pick_vec(cli.h, file.h);
        if h_list.is_empty() {
            h_list = DEFAULT_H_LIST.to_vec();
        }
        if let Some(h) = h_list.iter().find(|h| !(H_WINDOW.0..=H_WINDOW.1).contains(*h)) {
            return Err(CliError::Config(format!(
                "h = {h} is outside the supported window [{}, {}]",
                H_WINDOW.0, H_WINDOW.1
            )));
        }
        let spin = match cli.spin.or(file.spin) {
            Some(s) => parse_spin(&s)?,
            None => SpinChoice::Minus,
        };
        let beta_sweep = cli.beta_sweep.or(file.beta_sweep).map(|s| parse_sweep(&s)).transpose()?;

        let mut deform = DeformConfig::with_mesh_h(mesh_h);
        if let Some(v) = cli.n_vertices.or(file.n_vertices) {
            deform.n_vertices = v;
        }
        if let Some(v) = cli.probe_offset.or(file.probe_offset) {
            deform.probe_offset = v;
        }
        if let Some(v) = cli.step.or(file.step) {
            deform.step = v;
        }
        if let Some(v) = cli.stop_tol.or(file.stop_tol) {
            deform.stop_tol = v;
        }
        if let Some(v) = cli.max_iters.or(file.max_iters) {
            deform.max_iters = v;
        }

        Ok(Self {
            command,
            field,
            params,
            domain,
            mesh_h,
            h_list,
            spin,
            out: cli.out.or(file.out),
            format: cli.format.or(file.format).unwrap_or_default(),
            levels: pick_vec(cli.level, file.level),
            curves: cli.curves || file.curves.unwrap_or(false),
            beta_sweep,
            deform,
        })
    }

    pub fn make_field(&self) -> Result<MagneticField, CliError> {
        Ok(make_field(&self.field, &self.params)?)
    }
}
