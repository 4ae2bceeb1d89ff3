//! Run configuration: a TOML file with one table per concern.

use std::path::{Path, PathBuf};

use carre::quad::{build_grid, Distance, Domain, QuadratureGrid, Rule};
use carre::sampling::halton_points;
use carre::{parse_univariate, GeometryKind, GeometrySpec, MarkovTriple, SmoothFunction, VectorField};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, Result};

pub const CHECKS: [&str; 11] =
    ["residual", "axioms", "stability", "poincare", "cd", "bochner", "grushin", "filiform", "rigidity", "hormander", "cutoff"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<String>,
    pub geometry: GeometryConfig,
    pub problem: Option<ProblemConfig>,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub samples: SamplesConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub poincare: PoincareConfig,
    #[serde(default)]
    pub cd: CdConfig,
    #[serde(default)]
    pub rigidity: RigidityConfig,
    #[serde(default)]
    pub grushin: GrushinConfig,
    #[serde(default)]
    pub filiform: FiliformConfig,
    #[serde(default)]
    pub hormander: HormanderConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: String,
    pub dimension: Option<usize>,
    pub alpha: Option<u32>,
    pub eta: Option<Spanned<String>>,
    /// Custom frames: one list of coefficient expressions per field.
    pub frame: Option<Vec<Vec<Spanned<String>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub u: Spanned<String>,
    #[serde(rename = "F")]
    pub nonlinearity: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Nodes per axis, or per panel for the composite rule.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_rule")]
    pub rule: String,
    pub panels: Option<usize>,
}

fn default_nodes() -> usize {
    8
}

fn default_rule() -> String {
    "gauss-legendre".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplesConfig {
    pub points: usize,
    pub functions: usize,
    pub degree: u32,
    pub tests: usize,
    /// Sampling box; defaults to the grid box, else `[−1, 1]ⁿ`.
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for SamplesConfig {
    fn default() -> Self {
        SamplesConfig { points: 200, functions: 20, degree: 3, tests: 20, lower: None, upper: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub axioms: f64,
    pub stability: f64,
    pub poincare: f64,
    pub cd: f64,
    pub bochner: f64,
    pub grushin: f64,
    pub filiform: f64,
    pub rigidity: f64,
    pub hormander: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: 1e-6,
            axioms: 1e-7,
            stability: 1e-3,
            poincare: 1e-4,
            cd: 1e-8,
            bochner: 1e-6,
            grushin: 1e-8,
            filiform: 1e-6,
            rigidity: 1e-8,
            hormander: 1e-9,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub basis_per_axis: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { basis_per_axis: 20 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareConfig {
    pub epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdConfig {
    pub curvature: f64,
    /// `"search"` (random quadratic/cubic trials) or `"sample"` (fixed random polynomials).
    pub mode: String,
    pub trials: usize,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig { curvature: 0.0, mode: "search".into(), trials: 500 }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RigidityConfig {
    pub curvature: f64,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrushinConfig {
    pub solution_gate: f64,
}

impl Default for GrushinConfig {
    fn default() -> Self {
        GrushinConfig { solution_gate: 1e-6 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiliformConfig {
    pub floor: f64,
}

impl Default for FiliformConfig {
    fn default() -> Self {
        FiliformConfig { floor: 1e-6 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HormanderConfig {
    pub max_depth: usize,
    pub expected_depth: Option<usize>,
}

impl Default for HormanderConfig {
    fn default() -> Self {
        HormanderConfig { max_depth: 6, expected_depth: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffConfig {
    pub k: Vec<u32>,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig { k: vec![4, 16, 64] }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, csv: true }
    }
}

/// Reads and parses a config file.
pub fn load(path: &Path) -> Result<(RunConfig, String)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::Toml { path: path.into(), message: e.to_string().trim_end().to_string() })?;
    Ok((config, text))
}

/// Resolves byte offsets of embedded expressions to line/column pairs.
pub struct Source<'a> {
    pub path: &'a Path,
    pub text: &'a str,
}

impl Source<'_> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.chars().rev().take_while(|c| *c != '\n').count() + 1;
        (line, column)
    }

    fn expression_error(&self, key: &str, expr: &Spanned<String>, offset: usize, message: String) -> CliError {
        // the span covers the opening quote
        let (line, column) = self.position(expr.span().start + 1 + offset);
        CliError::Expression { path: self.path.into(), key: key.into(), line, column, message }
    }

    pub fn function(&self, key: &str, expr: &Spanned<String>, n: usize) -> Result<SmoothFunction> {
        SmoothFunction::parse(expr.get_ref(), n).map_err(|diags| {
            let offset = diags.first().map_or(0, |d| d.offset);
            let message = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            self.expression_error(key, expr, offset, message)
        })
    }

    pub fn nonlinearity(&self, expr: &Spanned<String>) -> Result<SmoothFunction> {
        parse_univariate(expr.get_ref(), "s").map(SmoothFunction::from_expression).map_err(|diags| {
            let offset = diags.first().map_or(0, |d| d.offset);
            let message = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            self.expression_error("problem.F", expr, offset, message)
        })
    }
}

/// The geometry, solution, nonlinearity and sampling data of a run.
pub struct Setup {
    pub triple: MarkovTriple,
    pub u: Option<SmoothFunction>,
    pub nonlinearity: Option<SmoothFunction>,
    pub grid: Option<QuadratureGrid>,
    pub points: Vec<Vec<f64>>,
}

fn geometry(config: &GeometryConfig, src: &Source) -> Result<MarkovTriple> {
    let dimension = || config.dimension.ok_or_else(|| CliError::Invalid(format!("geometry `{}` needs `dimension`", config.kind)));
    let spec = match config.kind.as_str() {
        "euclidean-weighted" | "euclidean" => {
            let n = dimension()?;
            let log_weight = config.eta.as_ref().map(|e| src.function("geometry.eta", e, n)).transpose()?;
            GeometrySpec::EuclideanWeighted { dimension: n, log_weight }
        }
        "ornstein-uhlenbeck" => GeometrySpec::OrnsteinUhlenbeck { dimension: dimension()? },
        "heisenberg" => GeometrySpec::Heisenberg,
        "engel" => GeometrySpec::Engel,
        "filiform" => GeometrySpec::Filiform { dimension: dimension()? },
        "grushin" => GeometrySpec::Grushin {
            alpha: config.alpha.ok_or_else(|| CliError::Invalid("geometry `grushin` needs `alpha`".into()))?,
        },
        "custom" => {
            let n = dimension()?;
            let rows = config.frame.as_ref().ok_or_else(|| CliError::Invalid("geometry `custom` needs `frame`".into()))?;
            let mut frame = Vec::with_capacity(rows.len());
            for (j, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(CliError::Invalid(format!("frame field {} has {} coefficients, expected {n}", j + 1, row.len())));
                }
                let coefficients = row
                    .iter()
                    .enumerate()
                    .map(|(i, c)| src.function(&format!("geometry.frame[{j}][{i}]"), c, n))
                    .collect::<Result<Vec<_>>>()?;
                frame.push(VectorField::new(coefficients, format!("Z{}", j + 1))?);
            }
            let log_weight = config.eta.as_ref().map(|e| src.function("geometry.eta", e, n)).transpose()?;
            GeometrySpec::Custom { frame, log_weight }
        }
        other => return Err(CliError::Invalid(format!("unknown geometry kind `{other}`"))),
    };
    Ok(spec.make()?)
}

fn rule(config: &GridConfig) -> Result<Rule> {
    match config.rule.as_str() {
        "gauss-legendre" => Ok(Rule::GaussLegendre),
        "trapezoid" => Ok(Rule::Trapezoid),
        "composite-gauss-legendre" => Ok(Rule::CompositeGaussLegendre {
            panels: config.panels.ok_or_else(|| CliError::Invalid("rule `composite-gauss-legendre` needs `panels`".into()))?,
        }),
        other => Err(CliError::Invalid(format!("unknown quadrature rule `{other}`"))),
    }
}

fn domain(lower: &[f64], upper: &[f64], n: usize, what: &str) -> Result<Domain> {
    if lower.len() != n || upper.len() != n {
        return Err(CliError::Invalid(format!("{what} bounds must have {n} entries")));
    }
    Ok(Domain::new(lower.to_vec(), upper.to_vec())?)
}

impl RunConfig {
    /// Checks to run: the `--check` overrides, else the configured list.
    pub fn selected_checks(&self, overrides: &[String]) -> Result<Vec<String>> {
        let list = if overrides.is_empty() { &self.checks } else { overrides };
        if list.is_empty() {
            return Err(CliError::Invalid("no checks requested".into()));
        }
        for c in list {
            if !CHECKS.contains(&c.as_str()) {
                return Err(CliError::Invalid(format!("unknown check `{c}`; expected one of {}", CHECKS.join(", "))));
            }
        }
        let mut out: Vec<String> = Vec::new();
        for c in list {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
        Ok(out)
    }

    pub fn setup(&self, src: &Source) -> Result<Setup> {
        let triple = geometry(&self.geometry, src)?;
        let n = triple.dimension();
        let u = self.problem.as_ref().map(|p| src.function("problem.u", &p.u, n)).transpose()?;
        let nonlinearity =
            self.problem.as_ref().and_then(|p| p.nonlinearity.as_ref()).map(|f| src.nonlinearity(f)).transpose()?;
        let grid = match &self.grid {
            Some(g) => {
                let d = domain(&g.lower, &g.upper, n, "grid")?;
                Some(build_grid(&d, &[g.nodes], rule(g)?)?.for_triple(&triple)?)
            }
            None => None,
        };
        let sample_box = match (&self.samples.lower, &self.samples.upper) {
            (Some(l), Some(u)) => domain(l, u, n, "samples")?,
            (None, None) => match &grid {
                Some(g) => g.domain().clone(),
                None => Domain::cube(n, 1.0)?,
            },
            _ => return Err(CliError::Invalid("samples need both `lower` and `upper`".into())),
        };
        if self.samples.points == 0 {
            return Err(CliError::Invalid("samples.points must be positive".into()));
        }
        let points = halton_points(&sample_box, self.samples.points, self.seed);
        Ok(Setup { triple, u, nonlinearity, grid, points })
    }

    /// Requirements of each check on the geometry and problem blocks.
    pub fn validate(&self, checks: &[String], setup: &Setup) -> Result<()> {
        let kind = setup.triple.kind();
        for c in checks {
            let needs_problem = matches!(c.as_str(), "residual" | "stability" | "poincare" | "rigidity");
            if needs_problem && (setup.u.is_none() || setup.nonlinearity.is_none()) {
                return Err(CliError::Invalid(format!("check `{c}` needs `problem.u` and `problem.F`")));
            }
            if matches!(c.as_str(), "residual" | "stability" | "poincare" | "rigidity") && setup.grid.is_none() {
                return Err(CliError::Invalid(format!("check `{c}` needs a `grid` block")));
            }
            let geometry_ok = match c.as_str() {
                "bochner" => kind.is_carnot(),
                "grushin" => matches!(kind, GeometryKind::Grushin { .. }),
                "filiform" => matches!(kind, GeometryKind::Filiform { .. }),
                "cutoff" => cutoff_distance(kind).is_some(),
                _ => true,
            };
            if !geometry_ok {
                return Err(CliError::Invalid(format!("check `{c}` is not available for geometry `{kind}`")));
            }
        }
        Ok(())
    }
}

/// Distance surrogate used by the cutoff demo.
pub fn cutoff_distance(kind: GeometryKind) -> Option<Distance> {
    match kind {
        GeometryKind::EuclideanWeighted { dimension, .. } | GeometryKind::OrnsteinUhlenbeck { dimension } => {
            Some(Distance::Euclidean { dimension })
        }
        GeometryKind::Heisenberg => Some(Distance::HomogeneousNorm { degrees: vec![1, 1, 2] }),
        GeometryKind::Engel => Some(Distance::HomogeneousNorm { degrees: vec![1, 1, 2, 3] }),
        GeometryKind::Filiform { dimension } => {
            Some(Distance::HomogeneousNorm { degrees: (0..dimension).map(|i| if i < 2 { 1 } else { i as u32 }).collect() })
        }
        GeometryKind::Grushin { .. } | GeometryKind::Custom => None,
    }
}
