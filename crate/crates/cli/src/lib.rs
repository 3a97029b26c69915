//! Batch front end: run a configured query and write JSON/CSV results.

pub mod config;

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use maslov_core::counting::{self, CountResult, LocatedConjugatePoint};
use maslov_core::error::Error as CoreError;
use maslov_core::evolution::fmt17;
use maslov_core::maslov::{self, MaslovBox, RotationTrace};
use maslov_core::oracle::{self, DiscretizationSpec, OracleReport};

pub use config::{QueryKind, RunConfig, SchemaError};

pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

#[derive(Debug)]
pub enum RunError {
    Schema(SchemaError),
    Computation(CoreError),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) => EXIT_SCHEMA,
            RunError::Computation(_) | RunError::Io(_) => EXIT_COMPUTATION,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Schema(e) => write!(f, "config error at {}: {}", e.path, e.message),
            RunError::Computation(e) => write!(f, "computation error [{}]: {e}", e.code()),
            RunError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl From<SchemaError> for RunError {
    fn from(e: SchemaError) -> Self {
        RunError::Schema(e)
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Computation(e)
    }
}

fn io(e: impl std::fmt::Display) -> RunError {
    RunError::Io(e.to_string())
}

/// A CSV file produced alongside the JSON document.
pub struct CsvExport {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Result of one run: the JSON document and optional CSV traces.
pub struct RunOutput {
    pub document: Value,
    pub csv: Vec<CsvExport>,
}

fn trace_csv(name: &str, trace: &RotationTrace) -> Result<CsvExport, RunError> {
    let mut bytes = Vec::new();
    trace.write_csv(&mut bytes)?;
    Ok(CsvExport { name: name.into(), bytes })
}

fn conjugate_csv(points: &[LocatedConjugatePoint]) -> Result<CsvExport, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "along", "target", "param", "multiplicity", "contribution", "kind", "directions"]).map_err(io)?;
    for p in points {
        let dirs: Vec<String> = p.point.directions.iter().map(|d| d.to_string()).collect();
        w.write_record([fmt17(p.lambda), p.along.clone(), p.target.clone(), fmt17(p.point.param), p.point.multiplicity.to_string(), p.point.contribution.to_string(), format!("{:?}", p.point.kind).to_lowercase(), dirs.join(" ")]).map_err(io)?;
    }
    Ok(CsvExport { name: "conjugate_points.csv".into(), bytes: w.into_inner().map_err(io)? })
}

fn scan_csv(scan: &[(f64, f64)]) -> Result<CsvExport, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "sigma_min"]).map_err(io)?;
    for (x, s) in scan {
        w.write_record([fmt17(*x), fmt17(*s)]).map_err(io)?;
    }
    Ok(CsvExport { name: "sigma_scan.csv".into(), bytes: w.into_inner().map_err(io)? })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn box_value(bx: &MaslovBox) -> Value {
    json!({
        "lambda1": bx.lambda1,
        "lambda2": bx.lambda2,
        "c": bx.c,
        "shelf_indices": bx.indices(),
        "sum": bx.sum(),
        "bottom": to_value(&bx.bottom),
        "right": to_value(&bx.right),
        "top": to_value(&bx.top),
        "left": to_value(&bx.left),
    })
}

fn oracle_spec(cfg: &RunConfig, sys: &config::AnySystem, c: f64) -> Result<DiscretizationSpec, CoreError> {
    let scheme = sys.discretize().scheme();
    match cfg.oracle.half_width {
        Some(l) => DiscretizationSpec::new(l, ((2.0 * l / cfg.oracle.step).ceil() as usize + 1).max(oracle::MIN_POINTS), scheme),
        None => DiscretizationSpec::for_truncation(c, cfg.oracle.step, scheme),
    }
}

fn count(cfg: &RunConfig, sys: &config::AnySystem, below: bool) -> Result<CountResult, RunError> {
    let h = sys.hamiltonian();
    let lambda2 = cfg.require("lambda2")?;
    Ok(if below { counting::count_below(h, lambda2, &cfg.numerics)? } else { counting::count_interval(h, cfg.require("lambda1")?, lambda2, &cfg.numerics)? })
}

/// Execute `op` for a validated config. The query kind in the config, if present, must agree.
pub fn run(cfg: &RunConfig, op: QueryKind) -> Result<RunOutput, RunError> {
    if let Some(k) = cfg.query.kind {
        if k != op {
            return Err(SchemaError { path: "query.kind".into(), message: format!("{k:?} conflicts with the requested operation {op:?}") }.into());
        }
    }
    let mut resolved = cfg.clone();
    resolved.query.kind = Some(op);
    let sys = cfg.build_system()?;
    let h = sys.hamiltonian();
    let mut csv = Vec::new();
    let result = match op {
        QueryKind::CountInterval | QueryKind::CountBelow => {
            let r = count(cfg, &sys, op == QueryKind::CountBelow)?;
            csv.push(conjugate_csv(&r.conjugate_points)?);
            to_value(&r)
        }
        QueryKind::MaslovBox => {
            let (l1, l2) = (cfg.require("lambda1")?, cfg.require("lambda2")?);
            h.check_interval(l1, l2)?;
            let policy = cfg.numerics.policy(h, l1, l2)?;
            let bx = maslov::maslov_box(h, l1, l2, &policy, &cfg.numerics.integrator, &cfg.numerics.tracking)?;
            for (name, shelf) in [("bottom", &bx.bottom), ("right", &bx.right), ("top", &bx.top), ("left", &bx.left)] {
                csv.push(trace_csv(&format!("rotation_{name}.csv"), &shelf.trace)?);
            }
            let mut v = box_value(&bx);
            v["policy"] = to_value(&policy);
            v
        }
        QueryKind::ConjugatePoints => {
            let lambda = cfg.require("lambda")?;
            let (points, trace, policy) = counting::conjugate_points(h, lambda, &cfg.numerics)?;
            csv.push(trace_csv("rotation_x.csv", &trace)?);
            csv.push(conjugate_csv(&points)?);
            let mut kernel = Value::Null;
            if h.target().is_some() {
                match counting::kernel_sum_count(h, lambda, &policy, &cfg.numerics) {
                    Ok(ks) => {
                        csv.push(scan_csv(&ks.sigma_scan)?);
                        kernel = json!({ "count": ks.count, "scan_dips": ks.scan_dips });
                    }
                    Err(e) => kernel = json!({ "error": e.code(), "message": e.to_string() }),
                }
            }
            json!({ "lambda": lambda, "conjugate_points": to_value(&points), "kernel_sum": kernel, "policy": to_value(&policy) })
        }
        QueryKind::OracleCompare => {
            let below = cfg.query.lambda1.is_none();
            let r = count(cfg, &sys, below)?;
            let spec = oracle_spec(cfg, &sys, r.policy.c)?;
            let lo = match r.lambda1 {
                Some(l) => l,
                None => oracle::spectral_floor(sys.discretize(), &spec.refined()).min(oracle::spectral_floor(sys.discretize(), &spec)),
            };
            let o: OracleReport = oracle::oracle_count(sys.discretize(), lo, r.lambda2, &spec)?;
            csv.push(conjugate_csv(&r.conjugate_points)?);
            json!({ "maslov_N": r.n, "oracle_N": o.count, "agree": r.n == o.count, "maslov": to_value(&r), "oracle": to_value(&o) })
        }
    };
    let document = json!({
        "tool": { "name": "maslov", "version": env!("CARGO_PKG_VERSION"), "core_version": maslov_core::VERSION },
        "operation": op,
        "config": to_value(&resolved),
        "result": result,
    });
    Ok(RunOutput { document, csv: if cfg.output.csv { csv } else { Vec::new() } })
}

/// Formats every float with 17 significant digits.
struct Float17;

impl serde_json::ser::Formatter for Float17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// Serialize a JSON value with 17-significant-digit floats.
pub fn to_json_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Float17);
    v.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8 output")
}

/// Write result.json and the CSV exports into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("result.json"), to_json_string(&out.document)).map_err(io)?;
    for c in &out.csv {
        std::fs::write(dir.join(&c.name), &c.bytes).map_err(io)?;
    }
    Ok(())
}
