//! End-to-end experiments. Each protocol returns a [`RunResult`] holding one
//! record per point of its parameter grid, ready for CSV and JSON output.

mod cat;
mod movie;
mod overlap;
mod prep;
mod probe;
mod swap;

pub use cat::{cat_prep, CatParams};
pub use movie::{density_movie, MovieParams};
pub use overlap::{uniform_overlap_ed, uniform_overlap_scan, OverlapParams};
pub use prep::{crossings, prep_sweep, PrepSweepParams};
pub use probe::{com_probe, phase_scan, ComProbeParams, PhaseScanParams};
pub use swap::{
    check_pattern, hardcore_transmission, phiswap_gate_check, phiswap_transmission, transfer_exponent, GateCheckReport,
    PatternCheck, SwapParams,
};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::evolve::SegmentReport;

pub const SCHEMA: &str = "bosegate/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// All particles on the first site.
    Condensate,
    /// One particle on each of the first `N` sites.
    #[default]
    Hardcore,
}

#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self { name: name.into(), unit: unit.into(), values }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub protocol: String,
    pub axes: Vec<Axis>,
    pub observables: Vec<String>,
    /// Axis values followed by observables, one row per grid point.
    pub records: Vec<Vec<f64>>,
    pub metadata: Map<String, Value>,
    pub summary: Map<String, Value>,
}

impl RunResult {
    pub fn new(protocol: &str, axes: Vec<Axis>, observables: &[&str]) -> Self {
        Self {
            protocol: protocol.into(),
            axes,
            observables: observables.iter().map(|s| s.to_string()).collect(),
            records: Vec::new(),
            metadata: Map::new(),
            summary: Map::new(),
        }
    }

    pub fn push(&mut self, axis_values: &[f64], observables: &[f64]) {
        debug_assert_eq!(axis_values.len(), self.axes.len());
        debug_assert_eq!(observables.len(), self.observables.len());
        self.records.push(axis_values.iter().chain(observables).copied().collect());
    }

    pub fn columns(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).chain(self.observables.iter().cloned()).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns().iter().position(|c| c == name)?;
        Some(self.records.iter().map(|r| r[k]).collect())
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        self.metadata.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Record count matches the axis grid and every observable is finite.
    pub fn validate(&self) -> Result<()> {
        let expected: usize = self.axes.iter().map(|a| a.values.len()).product();
        if self.records.len() != expected {
            return Err(Error::Configuration(format!(
                "{}: {} records for a grid of {expected} points",
                self.protocol,
                self.records.len()
            )));
        }
        let na = self.axes.len();
        for r in &self.records {
            if let Some(bad) = r[na..].iter().position(|v| !v.is_finite()) {
                return Err(Error::Configuration(format!(
                    "{}: observable '{}' is not finite at {:?}",
                    self.protocol,
                    self.observables[bad],
                    &r[..na]
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns())?;
        for r in &self.records {
            w.write_record(r.iter().map(|&v| format_number(v)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn sidecar(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "protocol": self.protocol,
            "version": env!("CARGO_PKG_VERSION"),
            "columns": self.columns(),
            "axes": self.axes,
            "records": self.records.len(),
            "metadata": self.metadata,
            "summary": self.summary,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        self.validate()?;
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()?)?;
        fs::write(&json_path, serde_json::to_string_pretty(&self.sidecar())? + "\n")?;
        Ok((csv_path, json_path))
    }
}

/// 17 significant digits; infinities as `inf`/`-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:.16e}")
}

/// Serde adapters for reals that may be infinite; infinities are written as
/// the strings `"inf"` and `"-inf"`.
pub mod extended {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_infinite() {
            Repr::Text(if v > 0.0 { "inf".into() } else { "-inf".into() })
        } else {
            Repr::Num(v)
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.trim() {
                "inf" | "+inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" | "-Infinity" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(|_| E::custom(format!("not a number: {other:?}"))),
            },
        }
    }

    pub mod one {
        use super::*;

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            to_repr(*v).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            from_repr(Repr::deserialize(d)?)
        }
    }

    pub mod list {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|&x| to_repr(x)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

/// Largest norm and number drift over a set of segment reports.
pub(crate) fn drift(reports: &[SegmentReport]) -> (f64, f64) {
    reports.iter().fold((0.0, 0.0), |(n, m), r| (n.max(r.norm_drift), m.max(r.number_drift)))
}

/// Maximum of `f` on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` logarithmically spaced values from `a` to `b` inclusive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(0.0), "0");
        let s = format_number(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_number(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn csv_and_validation() {
        let mut r = RunResult::new("demo", vec![Axis::new("x", "", vec![1.0, f64::INFINITY])], &["y"]);
        r.push(&[1.0], &[0.5]);
        assert!(r.validate().is_err());
        r.push(&[f64::INFINITY], &[1.0]);
        r.validate().unwrap();
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), "x,y");
        assert!(csv.contains("inf,1.0000000000000000e0"));
        r.records[0][1] = f64::NAN;
        assert!(r.validate().is_err());
    }

    #[test]
    fn write_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = RunResult::new("demo", vec![Axis::new("x", "", vec![2.0])], &["y"]);
        r.push(&[2.0], &[3.0]);
        r.meta("n", 4);
        let (c, j) = r.write(dir.path(), "demo_1").unwrap();
        assert!(fs::read_to_string(c).unwrap().starts_with("x,y\n"));
        let v: Value = serde_json::from_str(&fs::read_to_string(j).unwrap()).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["metadata"]["n"], 4);
    }

    #[test]
    fn infinite_values_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct Holder {
            #[serde(with = "extended::list")]
            v: Vec<f64>,
            #[serde(with = "extended::one")]
            x: f64,
        }
        let h: Holder = serde_json::from_str(r#"{"v": [1.5, "inf"], "x": "-inf"}"#).unwrap();
        assert_eq!(h.v, vec![1.5, f64::INFINITY]);
        assert_eq!(h.x, f64::NEG_INFINITY);
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"v":[1.5,"inf"],"x":"-inf"}"#);
        assert!(serde_json::from_str::<Holder>(r#"{"v": ["many"], "x": 1}"#).is_err());
    }

    #[test]
    fn golden_section() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8 && fx.abs() < 1e-15);
    }

    #[test]
    fn spacing() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        let l = logspace(1.0, 100.0, 3);
        assert!((l[1] - 10.0).abs() < 1e-12);
    }
}
