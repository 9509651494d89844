//! Tables and reports behind the `reldim` binary.
//!
//! A run is a [`Command`] plus a key/value parameter map. Parameters come
//! from an optional `key = value` config file, overridden by command-line
//! flags; keys a command does not use are rejected. Every output starts with
//! metadata (tool version, command, parameters, seed, timestamp): `#` lines
//! for CSV, a `meta` object for JSON. CSV numbers carry 12 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::dimension::{
    f_theta_real, f_theta_two_cap_with, two_ball_accuracy, two_ball_relative_dim_query,
    RelativePair,
};
use crate::error::{Error, Result};
use crate::estimator::{estimate_dim, pairwise_estimate, Distribution, EstimateRecord, SepQuery};
use crate::geometry::{read_points_csv, BallSpec};
use crate::learning::TwoBallLearning;
use crate::polykernel::{optimal_degree_with, POLY_TOL};
use crate::quadrature::QuadSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const FIG2_DIMS: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
const FIG3_THETAS: [f64; 6] = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig5,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches("fig") {
            "2" => Ok(Figure::Fig2),
            "3" => Ok(Figure::Fig3),
            "5" => Ok(Figure::Fig5),
            _ => Err(Error::invalid(format!(
                "unknown figure `{s}`; expected 2, 3 or 5"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fprob,
    Dim,
    RelativeDim,
    TwoBall,
    LearnSim,
    PolyDim,
    Figure(Figure),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Fprob => "fprob".into(),
            Command::Dim => "dim".into(),
            Command::RelativeDim => "relative-dim".into(),
            Command::TwoBall => "two-ball".into(),
            Command::LearnSim => "learn-sim".into(),
            Command::PolyDim => "poly-dim".into(),
            Command::Figure(Figure::Fig2) => "figure 2".into(),
            Command::Figure(Figure::Fig3) => "figure 3".into(),
            Command::Figure(Figure::Fig5) => "figure 5".into(),
        }
    }

    /// Parameter keys the command accepts.
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Fprob => &["theta", "d", "tol", "out"],
            Command::Dim => &["d", "samples", "seed", "confidence", "input", "out"],
            Command::RelativeDim => &["d", "eps", "pair", "samples", "seed", "confidence", "out"],
            Command::TwoBall => &["d", "grid", "out"],
            Command::LearnSim => &[
                "d",
                "eps",
                "theta",
                "k_train",
                "trials",
                "samples",
                "seed",
                "confidence",
                "centre",
                "out",
            ],
            Command::PolyDim => &["d", "bias", "deg_max", "tol", "out"],
            Command::Figure(Figure::Fig2) => &["d", "grid", "out"],
            Command::Figure(Figure::Fig3) => &["theta", "grid", "tol", "out"],
            Command::Figure(Figure::Fig5) => &["d", "bias", "deg_max", "tol", "out"],
        }
    }

    fn uses_seed(&self) -> bool {
        self.keys().contains(&"seed")
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::invalid(format!(
                "config line {}: expected `key = value`, got `{line}`",
                n + 1
            ))
        })?;
        map.insert(normalise_key(k), v.trim().to_string());
    }
    Ok(map)
}

fn normalise_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    /// Merges config-file parameters with flags (flags win) and rejects keys
    /// the command does not use.
    pub fn new(
        command: Command,
        file: BTreeMap<String, String>,
        flags: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut params = file;
        for (k, v) in flags {
            params.insert(normalise_key(&k), v);
        }
        let allowed = command.keys();
        let unknown: Vec<_> = params
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::invalid(format!(
                "`{}` does not accept {}; accepted keys: {}",
                command.name(),
                unknown.join(", "),
                allowed.join(", ")
            )));
        }
        Ok(Self { command, params })
    }

    pub fn out(&self) -> Option<&str> {
        self.params.get("out").map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("could not parse {key} = `{v}`"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(key, v),
        }
    }

    fn seed(&self) -> Result<u64> {
        self.get("seed", 0)
    }

    fn samples(&self) -> Result<u64> {
        positive(self.get("samples", 1_000_000u64)?, "samples")
    }

    fn confidence(&self) -> Result<f64> {
        let c = self.get("confidence", 0.99)?;
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(format!(
                "confidence must lie in (0, 1), got {c}"
            )));
        }
        Ok(c)
    }

    fn tol(&self, default: f64) -> Result<QuadSpec> {
        QuadSpec::with_tol(self.get("tol", default)?)
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(v: T, key: &str) -> Result<T> {
    if v <= T::default() {
        return Err(Error::invalid(format!("{key} must be positive, got {v}")));
    }
    Ok(v)
}

/// Comma-separated values; an item `start:stop:step` expands to an
/// inclusive arithmetic range.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::invalid(format!(
            "could not parse {key} = `{text}`; expected e.g. `1,2,5` or `0:2.5:0.1`"
        ))
    };
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(v.trim().parse().map_err(|_| bad())?),
            [a, b, s] => {
                let a: f64 = a.trim().parse().map_err(|_| bad())?;
                let b: f64 = b.trim().parse().map_err(|_| bad())?;
                let s: f64 = s.trim().parse().map_err(|_| bad())?;
                if !(s > 0.0) || !(b >= a) {
                    return Err(bad());
                }
                let n = ((b - a) / s + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return Err(Error::invalid(format!(
                        "{key}: range `{item}` has too many points"
                    )));
                }
                // strip the rounding noise of a + i·s
                out.extend((0..=n).map(|i| {
                    fmt_num(a + i as f64 * s)
                        .parse::<f64>()
                        .unwrap_or(a + i as f64 * s)
                }));
            }
            _ => return Err(bad()),
        }
    }
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(out)
}

fn as_dim(v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e6 {
        Ok(v as usize)
    } else {
        Err(Error::invalid(format!(
            "dimension must be a positive integer, got {v}"
        )))
    }
}

/// Formats `v` with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let exp = rounded.abs().log10().floor();
    if (-5.0..15.0).contains(&exp) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Csv(Table),
    Json(serde_json::Value),
}

/// Result of a run: metadata entries and the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub meta: Vec<(String, String)>,
    pub body: Body,
}

impl Output {
    /// Renders the output with the given timestamp.
    pub fn render(&self, timestamp: &str) -> Result<String> {
        match &self.body {
            Body::Csv(table) => {
                let mut s = String::new();
                for (k, v) in &self.meta {
                    let _ = writeln!(s, "# {k}: {v}");
                }
                let _ = writeln!(s, "# timestamp: {timestamp}");
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.columns)?;
                for r in &table.rows {
                    w.write_record(r)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
                s.push_str(&String::from_utf8_lossy(&bytes));
                Ok(s)
            }
            Body::Json(v) => {
                let mut meta = serde_json::Map::new();
                for (k, val) in &self.meta {
                    meta.insert(k.clone(), json!(val));
                }
                meta.insert("timestamp".into(), json!(timestamp));
                let doc = json!({ "meta": meta, "record": v });
                let mut s =
                    serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W, timestamp: &str) -> Result<()> {
        w.write_all(self.render(timestamp)?.as_bytes())?;
        Ok(())
    }
}

/// Exit status for an error: 3 for quadrature non-convergence, 1 for I/O
/// failures, 2 for everything else (invalid input).
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

pub fn run(config: &RunConfig) -> Result<Output> {
    let mut meta = vec![
        ("tool".to_string(), format!("reldim {VERSION}")),
        ("command".to_string(), config.command.name()),
    ];
    for (k, v) in &config.params {
        if k != "out" {
            meta.push((k.clone(), v.clone()));
        }
    }
    if config.command.uses_seed() {
        meta.push(("seed".into(), config.seed()?.to_string()));
    }
    let body = match config.command {
        Command::Fprob => fprob(config)?,
        Command::Dim => dim(config)?,
        Command::RelativeDim => relative_dim(config, &mut meta)?,
        Command::TwoBall | Command::Figure(Figure::Fig2) => two_ball(config)?,
        Command::LearnSim => learn_sim(config, &mut meta)?,
        Command::PolyDim => poly_dim(config, true)?,
        Command::Figure(Figure::Fig3) => figure3(config)?,
        Command::Figure(Figure::Fig5) => poly_dim(config, false)?,
    };
    Ok(Output { meta, body })
}

fn f_value(theta: f64, d: f64, spec: QuadSpec) -> Result<f64> {
    if theta > -2.0 && theta < 0.0 {
        f_theta_two_cap_with(theta, d, spec)
    } else {
        f_theta_real(theta, d)
    }
}

fn fprob(config: &RunConfig) -> Result<Body> {
    let thetas = config.list("theta", &[0.0])?;
    let dims = config.list("d", &[1.0])?;
    let spec = config.tol(1e-10)?;
    let mut t = Table::new(vec!["theta", "d", "f_theta"]);
    for &theta in &thetas {
        for &d in &dims {
            t.push(vec![
                fmt_num(theta),
                fmt_num(d),
                fmt_num(f_value(theta, d, spec)?),
            ]);
        }
    }
    Ok(Body::Csv(t))
}

fn figure3(config: &RunConfig) -> Result<Body> {
    let thetas = config.list("theta", &FIG3_THETAS)?;
    let dims = config.list("grid", &parse_list("grid", "0.25:50:0.25")?)?;
    let spec = config.tol(1e-10)?;
    let mut t = Table::new(vec!["theta", "d", "f_theta"]);
    for &theta in &thetas {
        for &d in &dims {
            t.push(vec![
                fmt_num(theta),
                fmt_num(d),
                fmt_num(f_value(theta, d, spec)?),
            ]);
        }
    }
    Ok(Body::Csv(t))
}

fn two_ball(config: &RunConfig) -> Result<Body> {
    let dims = config.list("d", &FIG2_DIMS)?;
    let eps = config.list("grid", &parse_list("grid", "0:2.5:0.05")?)?;
    let mut t = Table::new(vec!["d", "eps", "accuracy"]);
    for &d in &dims {
        let d = as_dim(d)?;
        for &e in &eps {
            t.push(vec![
                d.to_string(),
                fmt_num(e),
                fmt_num(two_ball_accuracy(d, e)?),
            ]);
        }
    }
    Ok(Body::Csv(t))
}

fn dim(config: &RunConfig) -> Result<Body> {
    let seed = config.seed()?;
    let confidence = config.confidence()?;
    if let Some(path) = config.params.get("input") {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
        let points = read_points_csv(file)?;
        let first = points
            .first()
            .ok_or_else(|| Error::invalid(format!("{path} contains no points")))?;
        let mut centre = vec![0.0; first.len()];
        for p in &points {
            for (c, v) in centre.iter_mut().zip(p) {
                *c += v / points.len() as f64;
            }
        }
        let est = pairwise_estimate(&points, None, &centre, 0.0)?;
        return Ok(Body::Json(json!({
            "p_hat": est.p_hat,
            "pairs": est.pairs,
            "dim": extended(est.dim),
            "centre": "sample mean",
        })));
    }
    let d = as_dim(config.get("d", 2.0)?)?;
    let ball = BallSpec::unit(d)?;
    let q = SepQuery::self_query(Distribution::Ball(ball), vec![0.0; d], 0.0)?;
    let est = estimate_dim(&q, config.samples()?, confidence, seed)?;
    Ok(Body::Json(to_json(&EstimateRecord::from(&est))?))
}

fn relative_dim(config: &RunConfig, meta: &mut Vec<(String, String)>) -> Result<Body> {
    let d = as_dim(config.get("d", 1.0)?)?;
    let eps: f64 = config.get("eps", 1.0)?;
    let pair = match config
        .get("pair", "xy".to_string())?
        .to_ascii_lowercase()
        .as_str()
    {
        "xy" => RelativePair::XY,
        "yx" => RelativePair::YX,
        other => {
            return Err(Error::invalid(format!(
                "pair must be `xy` or `yx`, got `{other}`"
            )))
        }
    };
    meta.push(("centre".into(), "centre of X (origin)".into()));
    let q = two_ball_relative_dim_query(d, eps, pair).map_err(as_invalid)?;
    let est = estimate_dim(&q, config.samples()?, config.confidence()?, config.seed()?)?;
    Ok(Body::Json(to_json(&EstimateRecord::from(&est))?))
}

fn learn_sim(config: &RunConfig, meta: &mut Vec<(String, String)>) -> Result<Body> {
    let d = as_dim(config.get("d", 2.0)?)?;
    let eps: f64 = config.get("eps", 1.0)?;
    let theta: f64 = config.get("theta", 0.0)?;
    let ks = config.list("k_train", &[1.0])?;
    let trials = positive(config.get("trials", 100_000u64)?, "trials")?;
    let pairs = config.samples()?;
    let seed = config.seed()?;
    let confidence = config.confidence()?;
    let centre_of = config.get("centre", "x".to_string())?.to_ascii_lowercase();
    let mut centre = vec![0.0; d];
    match centre_of.as_str() {
        "x" => meta.push(("centre".into(), "centre of X (origin)".into())),
        "y" => {
            centre[0] = eps;
            meta.push(("centre".into(), "centre of Y (eps e1)".into()));
        }
        other => {
            return Err(Error::invalid(format!(
                "centre must be `x` or `y`, got `{other}`"
            )))
        }
    }
    let mut t = Table::new(vec![
        "d",
        "eps",
        "theta",
        "k_train",
        "trials",
        "P_hat_Y",
        "ciY_low",
        "ciY_high",
        "boundY_low",
        "boundY_high",
        "P_hat_X",
        "ciX_low",
        "ciX_high",
        "boundX_low",
        "boundX_high",
        "seed",
    ]);
    for &k in &ks {
        if !(k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64) {
            return Err(Error::invalid(format!(
                "k_train must be a positive integer, got {k}"
            )));
        }
        let setup = TwoBallLearning {
            d,
            eps,
            theta,
            k_train: k as u32,
            centre: centre.clone(),
        };
        let report = setup.run(trials, pairs, confidence, seed)?;
        let r = setup.record(&report, seed);
        t.push(vec![
            r.d.to_string(),
            fmt_num(r.eps),
            fmt_num(r.theta),
            r.k_train.to_string(),
            r.trials.to_string(),
            fmt_num(r.p_hat_y),
            fmt_num(r.ci_y_low),
            fmt_num(r.ci_y_high),
            fmt_num(r.bound_y_low),
            fmt_num(r.bound_y_high),
            fmt_num(r.p_hat_x),
            fmt_num(r.ci_x_low),
            fmt_num(r.ci_x_high),
            fmt_num(r.bound_x_low),
            fmt_num(r.bound_x_high),
            r.seed.to_string(),
        ]);
    }
    Ok(Body::Csv(t))
}

fn poly_dim(config: &RunConfig, with_p0: bool) -> Result<Body> {
    let default_d: &[f64] = if with_p0 {
        &[3.0]
    } else {
        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
    };
    let dims = config.list("d", default_d)?;
    let b: f64 = config.get("bias", 1.5)?;
    let deg_max = positive(config.get("deg_max", 10u32)?, "deg_max")?;
    let spec = config.tol(POLY_TOL)?;
    let columns = if with_p0 {
        vec!["d", "b", "deg", "p0", "intrinsic_dim"]
    } else {
        vec!["d", "b", "deg", "intrinsic_dim"]
    };
    let mut t = Table::new(columns);
    for &d in &dims {
        let d = as_dim(d)?;
        let rows = optimal_degree_with(d, b, deg_max, spec)?.rows;
        for r in rows {
            let mut row = vec![r.d.to_string(), fmt_num(r.b), r.deg.to_string()];
            if with_p0 {
                row.push(fmt_num(r.p0));
            }
            row.push(fmt_num(r.intrinsic_dim));
            t.push(row);
        }
    }
    Ok(Body::Csv(t))
}

fn as_invalid(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Invalid(m),
        other => other,
    }
}

fn extended(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_num(v))
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}
