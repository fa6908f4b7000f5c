//! Run configuration: INI sections `[model]`, `[domain]`, `[problem]`,
//! `[solver]`, `[output]`, `[mms]` and `[rotational]`.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use ini::{Ini, Properties};
use kgraph::barriers::Theorem;
use kgraph::battery::{GridSpec, MmsCase};
use kgraph::{AmbientModel, Domain, FieldExpr, LeafMetric, ScalarFn, Shape, WarpingFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Read(String),
    Syntax(String),
    MissingSection(&'static str),
    MissingKey(&'static str, &'static str),
    BadValue { section: &'static str, key: &'static str, value: String, reason: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Syntax(e) => write!(f, "config syntax error: {e}"),
            ConfigError::MissingSection(s) => write!(f, "config is missing section [{s}]"),
            ConfigError::MissingKey(s, k) => write!(f, "config section [{s}] is missing key `{k}`"),
            ConfigError::BadValue { section, key, value, reason } => {
                write!(f, "bad value `{value}` for [{section}] {key}: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Rotationally symmetric leaf `dr^2 + xi(r)^2 dtheta^2`.
    RotSym,
    /// Flat plane in cartesian coordinates.
    Cartesian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub leaf: LeafKind,
    pub xi: ScalarFn,
    pub rho: ScalarFn,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub shape: Shape,
    pub phi: FieldExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub h: FieldExpr,
    pub theorem: Theorem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridChoice {
    Radial,
    Polar,
    Cartesian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: GridChoice,
    pub m: usize,
    /// Cells in the second direction (angular or `y`).
    pub m_second: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub homotopy: bool,
    pub dsigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

impl OutputConfig {
    pub const ALL: [&'static str; 9] =
        ["solution", "coefficients", "homotopy", "barrier", "flux", "report", "profile", "mms", "hypotheses"];

    pub fn wants(&self, artifact: &str) -> bool {
        self.formats.iter().any(|f| f == "all" || f == artifact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsConfig {
    pub case: String,
    /// Cell counts in the first direction; empty means the case's own grids.
    pub grids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationalConfig {
    pub h0: f64,
    pub r0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    pub domain: Option<DomainConfig>,
    pub problem: Option<ProblemConfig>,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub mms: Option<MmsConfig>,
    pub rotational: Option<RotationalConfig>,
}

struct Section<'a> {
    name: &'static str,
    props: &'a Properties,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &'static str) -> Option<&'a str> {
        self.props.get(key).map(str::trim).filter(|v| !v.is_empty())
    }

    fn required(&self, key: &'static str) -> Result<&'a str, ConfigError> {
        self.raw(key).ok_or(ConfigError::MissingKey(self.name, key))
    }

    fn bad(&self, key: &'static str, value: &str, reason: impl ToString) -> ConfigError {
        ConfigError::BadValue { section: self.name, key, value: value.to_string(), reason: reason.to_string() }
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: ToString,
    {
        self.raw(key).map(|v| v.parse::<T>().map_err(|e| self.bad(key, v, e))).transpose()
    }

    fn parse_required<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: ToString,
    {
        self.parse(key)?.ok_or(ConfigError::MissingKey(self.name, key))
    }
}

fn section<'a>(ini: &'a Ini, name: &'static str) -> Option<Section<'a>> {
    ini.section(Some(name)).map(|props| Section { name, props })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn model(&self) -> Result<&ModelConfig, ConfigError> {
        self.model.as_ref().ok_or(ConfigError::MissingSection("model"))
    }

    pub fn domain(&self) -> Result<&DomainConfig, ConfigError> {
        self.domain.as_ref().ok_or(ConfigError::MissingSection("domain"))
    }

    pub fn problem(&self) -> Result<&ProblemConfig, ConfigError> {
        self.problem.as_ref().ok_or(ConfigError::MissingSection("problem"))
    }

    /// Overrides the cell count, keeping the aspect of the second direction.
    pub fn override_grid(&mut self, m: usize) -> Result<(), ConfigError> {
        if m < 8 {
            return Err(ConfigError::BadValue {
                section: "solver",
                key: "m",
                value: m.to_string(),
                reason: "grid sizes must be at least 8".into(),
            });
        }
        let s = &mut self.solver;
        s.m_second = ((s.m_second * m) / s.m).max(8);
        if s.grid == GridChoice::Polar {
            s.m_second += s.m_second % 2;
        }
        s.m = m;
        if let Some(mms) = &mut self.mms {
            mms.grids = [m / 4, m / 2, m].into_iter().filter(|&g| g >= 8).collect();
        }
        Ok(())
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<AmbientModel, ConfigError> {
        let bad = |reason: String| ConfigError::BadValue { section: "model", key: "leaf", value: format!("{:?}", self.leaf), reason };
        let leaf = match self.leaf {
            LeafKind::RotSym => LeafMetric::rotsym(self.xi.clone(), self.n).map_err(|e| bad(e.to_string()))?,
            LeafKind::Cartesian => LeafMetric::CartesianFlat,
        };
        Ok(AmbientModel::new(leaf, WarpingFunction::new(self.rho.clone())))
    }
}

impl DomainConfig {
    pub fn build(&self) -> Domain {
        Domain::new(self.shape, Arc::new(self.phi.clone()))
    }
}

impl SolverConfig {
    pub fn spec(&self) -> GridSpec {
        match self.grid {
            GridChoice::Radial => GridSpec::Radial { m: self.m },
            GridChoice::Polar => GridSpec::Polar { m_r: self.m, m_theta: self.m_second },
            GridChoice::Cartesian => GridSpec::Cartesian { m_x: self.m, m_y: self.m_second },
        }
    }
}

fn parse_model(s: &Section) -> Result<ModelConfig, ConfigError> {
    let leaf = match s.raw("leaf").unwrap_or("rotsym") {
        "rotsym" | "euclidean" | "euclidean-polar" => LeafKind::RotSym,
        "cartesian" | "cartesian-flat" => LeafKind::Cartesian,
        other => return Err(s.bad("leaf", other, "expected rotsym, euclidean or cartesian")),
    };
    let xi = match (leaf, s.raw("leaf")) {
        (LeafKind::RotSym, Some("euclidean" | "euclidean-polar")) => ScalarFn::Identity,
        _ => s.parse("xi")?.unwrap_or(ScalarFn::Identity),
    };
    let rho = s.parse("rho")?.unwrap_or(ScalarFn::Constant(1.0));
    let n: usize = s.parse("n")?.unwrap_or(2);
    if n < 2 || (leaf == LeafKind::Cartesian && n != 2) {
        return Err(s.bad("n", &n.to_string(), "supported dimensions are n >= 2 (n = 2 on cartesian leaves)"));
    }
    Ok(ModelConfig { leaf, xi, rho, n })
}

fn parse_domain(s: &Section) -> Result<DomainConfig, ConfigError> {
    let kind = s.required("shape")?;
    let num = |key: &'static str| s.parse_required::<f64>(key);
    let shape = match kind {
        "disc" => Shape::disc(num("r0")?),
        "annulus" => Shape::annulus(num("r_in")?, num("r_out")?),
        "rectangle" => Shape::rectangle(num("x0")?, num("x1")?, num("y0")?, num("y1")?),
        other => return Err(s.bad("shape", other, "expected disc, annulus or rectangle")),
    }
    .map_err(|e| s.bad("shape", kind, e))?;
    let phi = s.parse("phi")?.unwrap_or_default();
    Ok(DomainConfig { shape, phi })
}

fn parse_problem(s: &Section) -> Result<ProblemConfig, ConfigError> {
    let key = if s.raw("H").is_some() { "H" } else { "h" };
    let h = s.parse_required::<FieldExpr>(key).map_err(|e| match e {
        ConfigError::MissingKey(sec, _) => ConfigError::MissingKey(sec, "H"),
        other => other,
    })?;
    let id: u8 = s.parse("theorem")?.unwrap_or(1);
    let theorem = Theorem::from_id(id).ok_or_else(|| s.bad("theorem", &id.to_string(), "expected 1, 2 or 3"))?;
    Ok(ProblemConfig { h, theorem })
}

fn parse_switch(s: &Section, key: &'static str, default: bool) -> Result<bool, ConfigError> {
    match s.raw(key) {
        None => Ok(default),
        Some("on" | "true" | "yes" | "1") => Ok(true),
        Some("off" | "false" | "no" | "0") => Ok(false),
        Some(other) => Err(s.bad(key, other, "expected on or off")),
    }
}

fn default_solver(model: Option<&ModelConfig>) -> SolverConfig {
    let grid = match model {
        Some(ModelConfig { leaf: LeafKind::Cartesian, .. }) => GridChoice::Cartesian,
        Some(ModelConfig { n, .. }) if *n >= 3 => GridChoice::Radial,
        _ => GridChoice::Polar,
    };
    let m = 32;
    let m_second = match grid {
        GridChoice::Polar => 4 * m,
        GridChoice::Cartesian => m,
        GridChoice::Radial => 0,
    };
    SolverConfig { grid, m, m_second, tol: 1e-10, max_iter: 50, homotopy: true, dsigma: 0.1 }
}

fn parse_solver(s: Option<Section>, model: Option<&ModelConfig>) -> Result<SolverConfig, ConfigError> {
    let mut cfg = default_solver(model);
    let Some(s) = s else { return Ok(cfg) };
    if let Some(g) = s.raw("grid") {
        cfg.grid = match g {
            "radial" => GridChoice::Radial,
            "polar" => GridChoice::Polar,
            "cartesian" => GridChoice::Cartesian,
            other => return Err(s.bad("grid", other, "expected radial, polar or cartesian")),
        };
    }
    cfg.m = s.parse("m")?.unwrap_or(cfg.m);
    let default_second = match cfg.grid {
        GridChoice::Polar => 4 * cfg.m,
        GridChoice::Cartesian => cfg.m,
        GridChoice::Radial => 0,
    };
    let key = if cfg.grid == GridChoice::Cartesian && s.raw("m_y").is_some() { "m_y" } else { "m_theta" };
    cfg.m_second = s.parse(key)?.unwrap_or(default_second);
    if cfg.m < 8 || (cfg.grid != GridChoice::Radial && cfg.m_second < 8) {
        return Err(s.bad("m", &format!("{} x {}", cfg.m, cfg.m_second), "grid sizes must be at least 8"));
    }
    if cfg.grid == GridChoice::Polar && cfg.m_second % 2 == 1 {
        return Err(s.bad("m_theta", &cfg.m_second.to_string(), "angular cell count must be even"));
    }
    cfg.tol = s.parse("tol")?.unwrap_or(cfg.tol);
    if !(cfg.tol > 0.0) {
        return Err(s.bad("tol", &cfg.tol.to_string(), "tolerance must be positive"));
    }
    cfg.max_iter = s.parse("max_iter")?.unwrap_or(cfg.max_iter);
    cfg.homotopy = parse_switch(&s, "homotopy", cfg.homotopy)?;
    cfg.dsigma = s.parse("dsigma")?.unwrap_or(cfg.dsigma);
    if !(cfg.dsigma > 0.0 && cfg.dsigma <= 1.0) {
        return Err(s.bad("dsigma", &cfg.dsigma.to_string(), "step must lie in (0, 1]"));
    }
    Ok(cfg)
}

fn parse_output(s: Option<Section>) -> Result<OutputConfig, ConfigError> {
    let mut cfg = OutputConfig { directory: PathBuf::from("."), formats: vec!["all".into()] };
    let Some(s) = s else { return Ok(cfg) };
    if let Some(d) = s.raw("directory") {
        cfg.directory = PathBuf::from(d);
    }
    if let Some(f) = s.raw("formats") {
        cfg.formats = f.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
        for fmt in &cfg.formats {
            if fmt != "all" && !OutputConfig::ALL.contains(&fmt.as_str()) {
                return Err(s.bad("formats", fmt, format!("expected `all` or some of {}", OutputConfig::ALL.join(", "))));
            }
        }
    }
    Ok(cfg)
}

fn parse_mms(s: &Section) -> Result<MmsConfig, ConfigError> {
    let case = s.required("case")?.to_string();
    if !MmsCase::NAMES.contains(&case.as_str()) {
        return Err(s.bad("case", &case, format!("expected one of {}", MmsCase::NAMES.join(", "))));
    }
    let grids = match s.raw("grids") {
        None => Vec::new(),
        Some(v) => v
            .split(',')
            .map(|g| g.trim().parse::<usize>().map_err(|e| s.bad("grids", v, e)))
            .collect::<Result<Vec<_>, _>>()?,
    };
    if grids.iter().any(|&g| g < 8) {
        return Err(s.bad("grids", &format!("{grids:?}"), "grid sizes must be at least 8"));
    }
    Ok(MmsConfig { case, grids })
}

fn parse_rotational(s: &Section) -> Result<RotationalConfig, ConfigError> {
    let h0: f64 = s.parse_required("h0")?;
    let r0: Option<f64> = s.parse("r0")?;
    if let Some(r) = r0 {
        if !(r > 0.0) {
            return Err(s.bad("r0", &r.to_string(), "radius must be positive"));
        }
    }
    Ok(RotationalConfig { h0, r0 })
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let model = section(&ini, "model").map(|s| parse_model(&s)).transpose()?;
        let domain = section(&ini, "domain").map(|s| parse_domain(&s)).transpose()?;
        let problem = section(&ini, "problem").map(|s| parse_problem(&s)).transpose()?;
        let solver = parse_solver(section(&ini, "solver"), model.as_ref())?;
        let output = parse_output(section(&ini, "output"))?;
        let mms = section(&ini, "mms").map(|s| parse_mms(&s)).transpose()?;
        let rotational = section(&ini, "rotational").map(|s| parse_rotational(&s)).transpose()?;
        Ok(RunConfig { model, domain, problem, solver, output, mms, rotational })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEMISPHERE: &str = "
# hemisphere over the disc of radius 0.8
[model]
leaf = euclidean
n = 2

[domain]
shape = disc
r0 = 0.8
phi = 0

[problem]
H = -1

[solver]
grid = radial
m = 64
";

    #[test]
    fn parses_full_config() {
        let c: RunConfig = HEMISPHERE.parse().unwrap();
        let m = c.model().unwrap();
        assert_eq!((m.leaf, m.n, &m.xi), (LeafKind::RotSym, 2, &ScalarFn::Identity));
        assert_eq!(c.domain().unwrap().shape, Shape::Disc { r0: 0.8 });
        assert_eq!(c.problem().unwrap().h.as_constant(), Some(-1.0));
        assert_eq!(c.solver.spec(), GridSpec::Radial { m: 64 });
        assert!(c.solver.homotopy);
        assert!(c.output.wants("flux"));
    }

    #[test]
    fn missing_sections_are_reported_on_use() {
        let c: RunConfig = "[domain]\nshape = disc\nr0 = 1\n".parse().unwrap();
        assert_eq!(c.model().unwrap_err(), ConfigError::MissingSection("model"));
        assert_eq!(c.model().unwrap_err().to_string(), "config is missing section [model]");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[model]\nxi = bessel\n",
            "[model]\nleaf = torus\n",
            "[solver]\nm = 4\n",
            "[solver]\ngrid = polar\nm_theta = 33\n",
            "[solver]\ntol = 0\n",
            "[solver]\nhomotopy = maybe\n",
            "[domain]\nshape = disc\n",
            "[domain]\nshape = disc\nr0 = -1\n",
            "[problem]\ntheorem = 1\n",
            "[problem]\nH = 1\ntheorem = 4\n",
            "[mms]\ncase = nope\n",
            "[output]\nformats = pdf\n",
        ] {
            assert!(text.parse::<RunConfig>().is_err(), "{text}");
        }
    }

    #[test]
    fn grid_override_keeps_aspect() {
        let mut c: RunConfig = "[solver]\ngrid = polar\nm = 16\nm_theta = 64\n".parse().unwrap();
        c.override_grid(32).unwrap();
        assert_eq!(c.solver.spec(), GridSpec::Polar { m_r: 32, m_theta: 128 });
        assert!(c.override_grid(4).is_err());
    }

    #[test]
    fn defaults_follow_the_leaf() {
        let c: RunConfig = "[model]\nleaf = cartesian\nrho = cosh\n".parse().unwrap();
        assert_eq!(c.solver.spec(), GridSpec::Cartesian { m_x: 32, m_y: 32 });
        let c: RunConfig = "[model]\nn = 3\n".parse().unwrap();
        assert_eq!(c.solver.grid, GridChoice::Radial);
    }
}
