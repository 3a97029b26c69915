//! Run configuration: schema pre-check, coefficient resolution and system construction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use maslov_core::coefficients::{CoefMatrix, Profile};
use maslov_core::counting::CountOptions;
use maslov_core::error::Error as CoreError;
use maslov_core::model::HamiltonianSystem;
use maslov_core::oracle::{self, Discretize};
use maslov_core::systems::{self, DaHamiltonian, FourthHamiltonian, SlHamiltonian, TravelingHamiltonian};

pub const SYSTEM_KINDS: [&str; 4] = ["sturm_liouville", "traveling", "fourth_order", "differential_algebraic"];
pub const QUERY_KINDS: [&str; 5] = ["count_interval", "count_below", "maslov_box", "conjugate_points", "oracle_compare"];

/// A configuration problem, reported with the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for SchemaError {}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError { path: path.into(), message: message.into() }
}

/// Coefficient given as one profile (1x1), a diagonal list, or full rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefSpec {
    Rows { rows: Vec<Vec<Profile>> },
    Diagonal { diagonal: Vec<Profile> },
    Single(Profile),
}

impl CoefSpec {
    fn build(&self) -> CoreResult<CoefMatrix> {
        match self {
            CoefSpec::Single(p) => Ok(CoefMatrix::scalar(p.clone())),
            CoefSpec::Diagonal { diagonal } => Ok(CoefMatrix::diagonal(diagonal.clone())),
            CoefSpec::Rows { rows } => CoefMatrix::from_rows(rows.clone()),
        }
    }

    fn profiles_mut(&mut self) -> Vec<&mut Profile> {
        match self {
            CoefSpec::Single(p) => vec![p],
            CoefSpec::Diagonal { diagonal } => diagonal.iter_mut().collect(),
            CoefSpec::Rows { rows } => rows.iter_mut().flatten().collect(),
        }
    }
}

type CoreResult<T> = maslov_core::error::Result<T>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    SturmLiouville {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<CoefSpec>,
        v: CoefSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<CoefSpec>,
    },
    Traveling {
        v: CoefSpec,
        s: f64,
    },
    FourthOrder {
        v: CoefSpec,
    },
    DifferentialAlgebraic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p11: Option<CoefSpec>,
        v11: CoefSpec,
        v12: CoefSpec,
        v22: CoefSpec,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<QueryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    /// Spectral parameter for conjugate-point scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    CountInterval,
    CountBelow,
    MaslovBox,
    ConjugatePoints,
    OracleCompare,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Grid step; N follows from L.
    pub step: f64,
    /// Half-width L; defaults to twice the truncation half-width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { step: oracle::DEFAULT_STEP, half_width: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write CSV traces next to the JSON result.
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, csv: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub query: QueryConfig,
    #[serde(default)]
    pub numerics: CountOptions,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn kind_check(value: &Value, table: &str, allowed: &[&str], required: bool) -> Result<(), SchemaError> {
    let path = format!("{table}.kind");
    match value.get(table).and_then(|t| t.get("kind")) {
        None if required => Err(schema(path, format!("missing; expected one of {}", allowed.join(", ")))),
        None => Ok(()),
        Some(Value::String(s)) if allowed.contains(&s.as_str()) => Ok(()),
        Some(other) => Err(schema(path, format!("unknown kind {other}; expected one of {}", allowed.join(", ")))),
    }
}

/// Parse a TOML (or JSON, by extension) document into a validated config.
pub fn parse(text: &str, json: bool) -> Result<RunConfig, SchemaError> {
    let value: Value = if json {
        serde_json::from_str(text).map_err(|e| schema("<document>", e.to_string()))?
    } else {
        let t: toml::Value = toml::from_str(text).map_err(|e| schema("<document>", e.message().to_string()))?;
        serde_json::to_value(t).map_err(|e| schema("<document>", e.to_string()))?
    };
    if !value.is_object() {
        return Err(schema("<document>", "expected a table"));
    }
    if value.get("system").is_none() {
        return Err(schema("system", "missing table"));
    }
    kind_check(&value, "system", &SYSTEM_KINDS, true)?;
    kind_check(&value, "query", &QUERY_KINDS, false)?;
    let cfg: RunConfig = serde_path_to_error::deserialize(&value).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "<document>".to_string() } else { path }, e.inner().to_string())
    })?;
    cfg.check()?;
    Ok(cfg)
}

/// Read a config file; tabulated profiles with a `file` are loaded relative to it.
pub fn load(path: &Path) -> Result<RunConfig, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|e| schema("<file>", format!("{}: {e}", path.display())))?;
    let json = path.extension().map(|e| e == "json").unwrap_or(false);
    let mut cfg = parse(&text, json)?;
    cfg.resolve_tables(path.parent().unwrap_or(Path::new(".")))?;
    Ok(cfg)
}

fn read_table(file: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(file).map_err(|e| e.to_string())?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |i: usize| -> Result<f64, String> { rec.get(i).ok_or_else(|| format!("row {}: missing column {i}", k + 1))?.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", k + 1)) };
        xs.push(field(0)?);
        ys.push(field(1)?);
    }
    Ok((xs, ys))
}

fn resolve_profile(p: &mut Profile, base: &Path, path: &str) -> Result<(), SchemaError> {
    match p {
        Profile::Tabulated { file, x, y } => {
            if let Some(f) = file.take() {
                let full = base.join(&f);
                let (xs, ys) = read_table(&full).map_err(|e| schema(format!("{path}.file"), format!("{}: {e}", full.display())))?;
                *x = xs;
                *y = ys;
            }
            Ok(())
        }
        Profile::Sum { terms } => {
            for (k, t) in terms.iter_mut().enumerate() {
                resolve_profile(t, base, &format!("{path}.terms[{k}]"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    fn coefficients_mut(&mut self) -> Vec<(&'static str, &mut CoefSpec)> {
        match &mut self.system {
            SystemConfig::SturmLiouville { p, v, q } => {
                let mut out = vec![("system.v", v)];
                if let Some(p) = p {
                    out.push(("system.p", p));
                }
                if let Some(q) = q {
                    out.push(("system.q", q));
                }
                out
            }
            SystemConfig::Traveling { v, .. } | SystemConfig::FourthOrder { v } => vec![("system.v", v)],
            SystemConfig::DifferentialAlgebraic { p11, v11, v12, v22 } => {
                let mut out = vec![("system.v11", v11), ("system.v12", v12), ("system.v22", v22)];
                if let Some(p) = p11 {
                    out.push(("system.p11", p));
                }
                out
            }
        }
    }

    /// Inline tabulated data so the resolved config is self-contained.
    pub fn resolve_tables(&mut self, base: &Path) -> Result<(), SchemaError> {
        for (path, spec) in self.coefficients_mut() {
            for p in spec.profiles_mut() {
                resolve_profile(p, base, path)?;
            }
        }
        Ok(())
    }

    fn check(&self) -> Result<(), SchemaError> {
        let n = &self.numerics;
        let positive = |v: f64, path: &str| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(schema(path, format!("must be positive, got {v}"))) };
        positive(n.tail_tol, "numerics.tail_tol")?;
        positive(n.max_dx, "numerics.max_dx")?;
        positive(n.floor_safety, "numerics.floor_safety")?;
        positive(n.eigenvalue_gap_tol, "numerics.eigenvalue_gap_tol")?;
        positive(n.exchange_shift, "numerics.exchange_shift")?;
        positive(n.integrator.rtol, "numerics.integrator.rtol")?;
        positive(n.integrator.atol, "numerics.integrator.atol")?;
        positive(n.tracking.max_step_angle, "numerics.tracking.max_step_angle")?;
        positive(self.oracle.step, "oracle.step")?;
        if let Some(c) = n.c {
            positive(c, "numerics.c")?;
        }
        if let Some(l) = self.oracle.half_width {
            positive(l, "oracle.half_width")?;
        }
        if n.grid_points < 3 {
            return Err(schema("numerics.grid_points", "must be at least 3"));
        }
        for (name, v) in [("query.lambda1", self.query.lambda1), ("query.lambda2", self.query.lambda2), ("query.lambda", self.query.lambda)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(schema(name, "must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Required query parameter.
    pub fn require(&self, name: &str) -> Result<f64, SchemaError> {
        let v = match name {
            "lambda1" => self.query.lambda1,
            "lambda2" => self.query.lambda2,
            _ => self.query.lambda,
        };
        v.ok_or_else(|| schema(format!("query.{name}"), "missing"))
    }

    pub fn build_system(&self) -> CoreResult<AnySystem> {
        let coef = |c: &Option<CoefSpec>, n: usize| -> CoreResult<CoefMatrix> {
            match c {
                Some(c) => c.build(),
                None => Ok(CoefMatrix::constant_identity(n)),
            }
        };
        Ok(match &self.system {
            SystemConfig::SturmLiouville { p, v, q } => {
                let v = v.build()?;
                let n = v.rows;
                AnySystem::Sl(systems::sl_to_hamiltonian(systems::SturmLiouvilleSystem { p: coef(p, n)?, v, q: coef(q, n)? })?)
            }
            SystemConfig::Traveling { v, s } => AnySystem::Traveling(systems::traveling_to_hamiltonian(systems::TravelingWaveSystem { v: v.build()?, s: *s })?),
            SystemConfig::FourthOrder { v } => AnySystem::Fourth(systems::fourth_to_hamiltonian(systems::FourthOrderSystem { v: v.build()? })?),
            SystemConfig::DifferentialAlgebraic { p11, v11, v12, v22 } => {
                let v11 = v11.build()?;
                let m = v11.rows;
                AnySystem::Da(systems::da_reduce(systems::DASystem { p11: coef(p11, m)?, v11, v12: v12.build()?, v22: v22.build()? })?)
            }
        })
    }
}

/// A constructed system of any supported class.
pub enum AnySystem {
    Sl(SlHamiltonian),
    Traveling(TravelingHamiltonian),
    Fourth(FourthHamiltonian),
    Da(DaHamiltonian),
}

impl AnySystem {
    pub fn hamiltonian(&self) -> &dyn HamiltonianSystem {
        match self {
            AnySystem::Sl(s) => s,
            AnySystem::Traveling(s) => s,
            AnySystem::Fourth(s) => s,
            AnySystem::Da(s) => s,
        }
    }

    pub fn discretize(&self) -> &dyn Discretize {
        match self {
            AnySystem::Sl(s) => s,
            AnySystem::Traveling(s) => s,
            AnySystem::Fourth(s) => s,
            AnySystem::Da(s) => s,
        }
    }
}

impl From<SchemaError> for CoreError {
    fn from(e: SchemaError) -> Self {
        CoreError::Input(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalar_schrodinger() {
        let cfg = parse("[system]\nkind = \"sturm_liouville\"\nv = { family = \"poschl_teller\", m = 2 }\n[query]\nkind = \"count_below\"\nlambda2 = -0.1\n", false).unwrap();
        assert_eq!(cfg.query.kind, Some(QueryKind::CountBelow));
        assert_eq!(cfg.numerics, CountOptions::default());
        let sys = cfg.build_system().unwrap();
        assert_eq!(sys.hamiltonian().half_dim(), 1);
    }

    #[test]
    fn missing_kind_is_reported_with_path() {
        let e = parse("[system]\nv = { family = \"constant\", value = 0.0 }\n", false).unwrap_err();
        assert_eq!(e.path, "system.kind");
        let e = parse("[system]\nkind = \"schrodinger\"\n", false).unwrap_err();
        assert_eq!(e.path, "system.kind");
    }

    #[test]
    fn nested_errors_carry_paths() {
        let e = parse("[system]\nkind = \"traveling\"\nv = { family = \"sech2\", amplitude = -2.0 }\ns = 0.5\n[numerics.tracking]\nmax_step_angel = 0.3\n", false).unwrap_err();
        assert!(e.path.starts_with("numerics.tracking"), "{}", e.path);
        let e = parse("[system]\nkind = \"fourth_order\"\nv = { family = \"constant\", value = 0.0 }\n[numerics]\nmax_dx = -1.0\n", false).unwrap_err();
        assert_eq!(e.path, "numerics.max_dx");
    }

    #[test]
    fn matrix_coefficients_and_json_round_trip() {
        let text = "[system]\nkind = \"differential_algebraic\"\nv11 = { family = \"sech2\", amplitude = -2.0 }\nv12 = { rows = [[{ family = \"sech\", amplitude = 0.5 }]] }\nv22 = { diagonal = [{ family = \"constant\", value = 2.0 }] }\n";
        let cfg = parse(text, false).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse(&json, true).unwrap(), cfg);
        assert!(matches!(cfg.build_system().unwrap(), AnySystem::Da(_)));
    }
}
