//! JSON run configurations: `{"protocol": ..., "parameters": {...}}` with
//! optional `stem` and `out_dir`. Parameters use the library's field names
//! and angular units; omitted fields keep their defaults.

use std::path::{Path, PathBuf};

use bosegate::lattice::GeometryKind;
use bosegate::protocols::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use super::{algebra, Failure, Output, Placement};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    protocol: String,
    #[serde(default)]
    parameters: Value,
    stem: Option<String>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AlgebraParams {
    max_len: usize,
    max_ell: usize,
    tolerance: f64,
}

impl Default for AlgebraParams {
    fn default() -> Self {
        Self { max_len: 10, max_ell: 5, tolerance: 1e-10 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GateCheckParams {
    max_len: usize,
}

impl Default for GateCheckParams {
    fn default() -> Self {
        Self { max_len: 6 }
    }
}

fn parameters<P: DeserializeOwned>(v: Value) -> Result<P, Failure> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v };
    serde_json::from_value(v).map_err(|e| Failure::Config(format!("parameters: {e}")))
}

fn prep(v: Value, triangular: bool) -> Result<Output, Failure> {
    let mut p: PrepSweepParams = parameters(v.clone())?;
    let has_geometry = v.get("geometry").is_some();
    match (triangular, p.geometry) {
        (true, GeometryKind::Triangular { .. }) | (false, GeometryKind::Chain1D { .. }) => {}
        (true, _) if !has_geometry => p.geometry = GeometryKind::Triangular { ell: 2 },
        _ => return Err(Failure::Config(format!("geometry {:?} does not fit this protocol", p.geometry))),
    }
    Ok(Output::Table(prep_sweep(&p)?))
}

pub fn run_file(path: &Path) -> Result<(Output, Value, Placement), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let v = cfg.parameters;
    let output = match cfg.protocol.as_str() {
        "prep1d" => prep(v, false)?,
        "prep2d" => prep(v, true)?,
        "com-probe" => Output::Table(com_probe(&parameters(v)?)?),
        "phase-scan" => Output::Table(phase_scan(&parameters(v)?)?),
        "cat" => Output::Table(cat_prep(&parameters(v)?)?),
        "swap" => Output::Table(phiswap_transmission(&parameters(v)?)?),
        "swap-gate-check" => {
            let p: GateCheckParams = parameters(v)?;
            Output::Table(phiswap_gate_check(p.max_len)?.to_run_result()?)
        }
        "uniform-overlap" => Output::Table(uniform_overlap_scan(&parameters(v)?)?),
        "algebra-check" => {
            let p: AlgebraParams = parameters(v)?;
            algebra(p.max_len, p.max_ell, p.tolerance)?
        }
        "density-movie" => Output::Table(density_movie(&parameters(v)?)?),
        other => return Err(Failure::Config(format!("unknown protocol {other:?}"))),
    };
    let inputs = serde_json::json!({ "config": path.display().to_string() });
    Ok((output, inputs, Placement { stem: cfg.stem, out_dir: cfg.out_dir }))
}
