mod axis;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bosegate::error::Error;
use bosegate::evolve::{EvolutionConfig, Method};
use bosegate::fock::HardcoreSites;
use bosegate::lattice::GeometryKind;
use bosegate::operators::WeightConvention;
use bosegate::oracles::algebra_suite;
use bosegate::protocols::*;
use bosegate::units::mhz_to_angular;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use axis::{parse_angles_over_pi, parse_axis, parse_value, Spacing};

/// Pulse-sequence simulator for engineered Bose-Hubbard lattices.
///
/// Rates given in MHz are `x/2π` values (so `--eta-mhz -270` means
/// η/2π = −270 MHz); the converted angular frequencies are recorded in the
/// JSON sidecar. Axis flags accept comma lists, `inf`, and ranges `a..b[:n]`.
#[derive(Parser, Debug)]
#[command(name = "bosegate", version, about, long_about)]
struct Cli {
    #[command(flatten)]
    output: OutputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Directory for the CSV and JSON files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// File stem, replacing `<protocol>_<timestamp>`.
    #[arg(long, global = true)]
    stem: Option<String>,
    /// Worker threads for sweeps; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct EvolutionArgs {
    /// Time steps per pulse segment before refinement.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Accepted infidelity between successive step doublings.
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    /// Keep `--steps` fixed instead of doubling until converged.
    #[arg(long)]
    fixed_steps: bool,
    #[arg(long, default_value_t = 6400)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Krylov)]
    method: MethodArg,
}

impl EvolutionArgs {
    fn config(&self) -> EvolutionConfig {
        EvolutionConfig {
            steps_per_segment: self.steps,
            method: self.method.into(),
            tolerance: self.tolerance,
            auto_refine: !self.fixed_steps,
            max_steps: self.max_steps,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Krylov,
    Dense,
    Split,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Krylov => Method::KrylovExpm,
            MethodArg::Dense => Method::DenseExpm,
            MethodArg::Split => Method::SplitStep,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum InitArg {
    Hardcore,
    Condensate,
}

impl From<InitArg> for InitialState {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Hardcore => InitialState::Hardcore,
            InitArg::Condensate => InitialState::Condensate,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SiteOrder {
    Leading,
    AscendingLex,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WeightsArg {
    Normalized,
    AsPrinted,
}

/// A whole axis parsed from one flag value.
#[derive(Debug, Clone)]
struct List<T>(Vec<T>);

fn axis_log(s: &str) -> Result<List<f64>, String> {
    parse_axis(s, Spacing::Log, 11).map(List)
}

fn axis_linear(s: &str) -> Result<List<f64>, String> {
    parse_axis(s, Spacing::Linear, 11).map(List)
}

fn angles(s: &str) -> Result<List<f64>, String> {
    parse_angles_over_pi(s, 25).map(List)
}

fn lengths(s: &str) -> Result<List<usize>, String> {
    parse_axis(s, Spacing::Log, 11)?
        .into_iter()
        .map(|v| {
            if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("not a chain length: {v}"))
            }
        })
        .collect::<Result<_, _>>()
        .map(List)
}

#[derive(Args, Debug)]
struct PrepArgs {
    #[arg(long = "N")]
    particles: Option<usize>,
    /// Interaction axis η/g_max; `inf` selects the hard-core sector.
    #[arg(long, value_parser = axis_log, default_value = "1e-2..1e3")]
    eta_over_g: List<f64>,
    #[arg(long, value_enum, default_value_t = InitArg::Hardcore)]
    init: InitArg,
    /// Peak hop coupling; sets the unit of every rate.
    #[arg(long, default_value_t = 1.0)]
    g_max: f64,
    /// Peak tilt detuning (defaults to `--g-max`).
    #[arg(long)]
    delta_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_over_pi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_over_pi: Option<f64>,
    /// Occupancy cap for finite η (defaults to N).
    #[arg(long)]
    n_max: Option<usize>,
    /// Rerun truncated points with one more boson per site.
    #[arg(long)]
    convergence_check: bool,
    #[arg(long)]
    dimension_cap: Option<usize>,
    #[command(flatten)]
    evolution: EvolutionArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chain state-preparation fidelity versus η/g.
    Prep1d {
        #[arg(long = "L", default_value_t = 8)]
        len: usize,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Triangular-lattice state-preparation fidelity versus η/g.
    Prep2d {
        #[arg(long, default_value_t = 2)]
        ell: usize,
        /// Which sites the hard-core initial state fills.
        #[arg(long, value_enum, default_value_t = SiteOrder::Leading)]
        site_order: SiteOrder,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Centre-of-mass oscillation amplitude versus tilt angle.
    ComProbe {
        #[arg(long = "L", default_value_t = 8)]
        len: usize,
        #[arg(long = "N", default_value_t = 4)]
        particles: usize,
        /// η/2π in MHz, or `inf`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_value, default_value = "-270")]
        eta_mhz: f64,
        #[arg(long, default_value_t = 15.0)]
        g_max_mhz: f64,
        #[arg(long, default_value_t = 25.0)]
        delta_mhz: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = angles, default_value = "-0.6..-0.36:25")]
        phi_over_pi: List<f64>,
        #[arg(long, default_value_t = 200)]
        probe_points: usize,
        /// Probe window in hop periods.
        #[arg(long, default_value_t = 2.0)]
        probe_periods: f64,
        #[arg(long)]
        no_refine: bool,
        #[arg(long)]
        n_max: Option<usize>,
        #[command(flatten)]
        evolution: EvolutionArgs,
    },
    /// Fidelity versus tilt angle for several interaction strengths.
    PhaseScan {
        #[arg(long = "L", default_value_t = 8)]
        len: usize,
        #[arg(long = "N", default_value_t = 4)]
        particles: usize,
        #[arg(long, value_parser = axis_log, default_value = "inf,100,40,20,10,5,3")]
        eta_over_g: List<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = angles, default_value = "0.2..0.7:26")]
        phi_over_pi: List<f64>,
        #[arg(long, default_value_t = 0.5)]
        theta_over_pi: f64,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        no_refine: bool,
        #[command(flatten)]
        evolution: EvolutionArgs,
    },
    /// Cat-state preparation fidelity versus g_max/|η|.
    Cat {
        /// Triangle size; ignored when `--L` selects a chain.
        #[arg(long, default_value_t = 2)]
        ell: usize,
        #[arg(long = "L")]
        len: Option<usize>,
        #[arg(long = "N", default_value_t = 3)]
        particles: usize,
        #[arg(long, value_parser = axis_linear, default_value = "0.01,0.02,0.03,0.05,0.075,0.1,0.15,0.2")]
        g_over_eta: List<f64>,
        /// η/2π in MHz (attractive, negative).
        #[arg(long, allow_hyphen_values = true, default_value_t = -300.0)]
        eta_mhz: f64,
        /// 1: bare weights; 2: with the g² detuning compensation.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        order: u8,
        #[arg(long)]
        no_optimize: bool,
        #[arg(long, allow_hyphen_values = true)]
        theta_over_pi: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        phi_over_pi: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        delta_over_g: f64,
        #[arg(long, value_enum, default_value_t = WeightsArg::Normalized)]
        weights: WeightsArg,
        /// Bare coupling g_max/2π used for the reported gate duration.
        #[arg(long, default_value_t = 25.0)]
        reference_g_mhz: f64,
        #[arg(long)]
        dimension_cap: Option<usize>,
        #[command(flatten)]
        evolution: EvolutionArgs,
    },
    /// Mirror-pattern transmission under continuous hopping.
    Swap {
        #[arg(long = "L", default_value_t = 8)]
        len: usize,
        #[arg(long = "N", default_value_t = 4)]
        particles: usize,
        #[arg(long, default_value_t = 35.0)]
        g_max_mhz: f64,
        /// η/2π in MHz, or `inf`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_value, default_value = "-270")]
        eta_mhz: f64,
        #[arg(long, default_value_t = 12)]
        peaks: usize,
        #[arg(long, default_value_t = 1201)]
        points: usize,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        dimension_cap: Option<usize>,
    },
    /// Phase law of the θ=±π hop on every pattern, plus the composed FSWAP.
    SwapGateCheck {
        #[arg(long = "Lmax", default_value_t = 6)]
        max_len: usize,
    },
    /// Overlap of the engineered and uniform hard-core ground states.
    UniformOverlap {
        #[arg(long = "L", value_parser = lengths, default_value = "2,4,8,16,32,64,128,256,512,1024,2000")]
        lens: List<usize>,
        #[arg(long, default_value_t = 0.5)]
        filling: f64,
        /// Also diagonalize exactly up to this length.
        #[arg(long, default_value_t = 12)]
        ed_max_len: usize,
    },
    /// Operator identities of the SU(2) and SU(3) constructions.
    AlgebraCheck {
        #[arg(long = "Lmax", default_value_t = 10)]
        max_len: usize,
        #[arg(long = "ellmax", default_value_t = 5)]
        max_ell: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Site densities during the first hop pulse.
    DensityMovie {
        #[arg(long = "L", default_value_t = 21)]
        len: usize,
        #[arg(long = "N", default_value_t = 5)]
        particles: usize,
        #[arg(long, default_value_t = 81)]
        frames: usize,
        #[arg(long, default_value_t = 5)]
        steps_per_frame: usize,
        #[arg(long, default_value_t = 0.5)]
        theta_over_pi: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Krylov)]
        method: MethodArg,
    },
    /// Run a protocol from a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Cap(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 3,
            Failure::Cap(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Resource { .. } => Failure::Cap(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Cap(m) | Failure::Other(m) => f.write_str(m),
        }
    }
}

/// Output location requested by a configuration file.
#[derive(Debug, Default)]
struct Placement {
    stem: Option<String>,
    out_dir: Option<PathBuf>,
}

/// A finished run: tabular output, or a bare JSON report.
enum Output {
    Table(RunResult),
    Report { protocol: String, body: Value, passed: bool },
}

fn prep_params(geometry: GeometryKind, prep: PrepArgs, default_n: usize) -> PrepSweepParams {
    let mut p = PrepSweepParams {
        geometry,
        particles: prep.particles.unwrap_or(default_n),
        eta_over_g: prep.eta_over_g.0,
        g_max: prep.g_max,
        delta_max: prep.delta_max,
        theta: prep.theta_over_pi.map(|v| v * std::f64::consts::PI),
        phi: prep.phi_over_pi.map(|v| v * std::f64::consts::PI),
        init: prep.init.into(),
        n_max: prep.n_max,
        convergence_check: prep.convergence_check,
        evolution: prep.evolution.config(),
        ..Default::default()
    };
    if let Some(cap) = prep.dimension_cap {
        p.dimension_cap = cap;
    }
    p
}

/// MHz inputs echoed with their angular values.
fn rates(pairs: &[(&str, f64)]) -> Value {
    let mut m = serde_json::Map::new();
    for (name, mhz) in pairs {
        m.insert(
            (*name).into(),
            json!({ "mhz_over_2pi": format_number(*mhz), "rad_per_s": format_number(mhz_to_angular(*mhz)) }),
        );
    }
    Value::Object(m)
}

fn execute(command: Command) -> Result<(Output, Value, Placement), Failure> {
    use std::f64::consts::PI;
    let (out, inputs) = match command {
        Command::Prep1d { len, prep } => {
            let p = prep_params(GeometryKind::Chain1D { len }, prep, len / 2);
            (Output::Table(prep_sweep(&p)?), Value::Null)
        }
        Command::Prep2d { ell, site_order, prep } => {
            let mut p = prep_params(GeometryKind::Triangular { ell }, prep, 3);
            p.hardcore_sites = match site_order {
                SiteOrder::Leading => HardcoreSites::Leading,
                SiteOrder::AscendingLex => HardcoreSites::AscendingLex,
            };
            (Output::Table(prep_sweep(&p)?), Value::Null)
        }
        Command::ComProbe {
            len,
            particles,
            eta_mhz,
            g_max_mhz,
            delta_mhz,
            phi_over_pi,
            probe_points,
            probe_periods,
            no_refine,
            n_max,
            evolution,
        } => {
            let p = ComProbeParams {
                len,
                particles,
                eta: mhz_to_angular(eta_mhz),
                g_max: mhz_to_angular(g_max_mhz),
                delta_max: mhz_to_angular(delta_mhz),
                phis: phi_over_pi.0,
                probe_points,
                probe_periods,
                refine: !no_refine,
                n_max,
                evolution: evolution.config(),
            };
            let inputs = rates(&[("eta", eta_mhz), ("g_max", g_max_mhz), ("delta_max", delta_mhz)]);
            (Output::Table(com_probe(&p)?), inputs)
        }
        Command::PhaseScan { len, particles, eta_over_g, phi_over_pi, theta_over_pi, n_max, no_refine, evolution } => {
            let p = PhaseScanParams {
                len,
                particles,
                eta_over_g: eta_over_g.0,
                phis: phi_over_pi.0,
                theta: theta_over_pi * PI,
                n_max,
                refine: !no_refine,
                evolution: evolution.config(),
                ..Default::default()
            };
            (Output::Table(phase_scan(&p)?), Value::Null)
        }
        Command::Cat {
            ell,
            len,
            particles,
            g_over_eta,
            eta_mhz,
            order,
            no_optimize,
            theta_over_pi,
            phi_over_pi,
            delta_over_g,
            weights,
            reference_g_mhz,
            dimension_cap,
            evolution,
        } => {
            let mut p = CatParams {
                geometry: match len {
                    Some(len) => GeometryKind::Chain1D { len },
                    None => GeometryKind::Triangular { ell },
                },
                particles,
                g_over_eta: g_over_eta.0,
                eta: mhz_to_angular(eta_mhz),
                order,
                optimize_angles: !no_optimize,
                theta: theta_over_pi.map(|v| v * PI),
                phi: phi_over_pi.map(|v| v * PI),
                delta_over_g,
                weights: match weights {
                    WeightsArg::Normalized => WeightConvention::Normalized,
                    WeightsArg::AsPrinted => WeightConvention::AsPrinted,
                },
                reference_g_max: mhz_to_angular(reference_g_mhz),
                evolution: evolution.config(),
                ..Default::default()
            };
            if let Some(cap) = dimension_cap {
                p.dimension_cap = cap;
            }
            let inputs = rates(&[("eta", eta_mhz), ("reference_g_max", reference_g_mhz)]);
            (Output::Table(cat_prep(&p)?), inputs)
        }
        Command::Swap { len, particles, g_max_mhz, eta_mhz, peaks, points, n_max, dimension_cap } => {
            let mut p = SwapParams {
                len,
                particles,
                g_max: mhz_to_angular(g_max_mhz),
                eta: mhz_to_angular(eta_mhz),
                peaks,
                points,
                n_max,
                ..Default::default()
            };
            if let Some(cap) = dimension_cap {
                p.dimension_cap = cap;
            }
            let inputs = rates(&[("g_max", g_max_mhz), ("eta", eta_mhz)]);
            (Output::Table(phiswap_transmission(&p)?), inputs)
        }
        Command::SwapGateCheck { max_len } => (Output::Table(phiswap_gate_check(max_len)?.to_run_result()?), Value::Null),
        Command::UniformOverlap { lens, filling, ed_max_len } => {
            let p = OverlapParams { lens: lens.0, filling, ed_max_len };
            (Output::Table(uniform_overlap_scan(&p)?), Value::Null)
        }
        Command::AlgebraCheck { max_len, max_ell, tolerance } => (algebra(max_len, max_ell, tolerance)?, Value::Null),
        Command::DensityMovie { len, particles, frames, steps_per_frame, theta_over_pi, method } => {
            let p = MovieParams {
                len,
                particles,
                frames,
                steps_per_frame,
                theta: theta_over_pi * PI,
                method: method.into(),
                ..Default::default()
            };
            (Output::Table(density_movie(&p)?), Value::Null)
        }
        Command::Run { config } => return config::run_file(&config),
    };
    Ok((out, inputs, Placement::default()))
}

fn algebra(max_len: usize, max_ell: usize, tolerance: f64) -> Result<Output, Failure> {
    let report = algebra_suite(max_len, max_ell)?;
    let mut body: Value = serde_json::from_str(&report.to_json(tolerance)?).map_err(|e| Failure::Other(e.to_string()))?;
    body["max_len"] = json!(max_len);
    body["max_ell"] = json!(max_ell);
    Ok(Output::Report { protocol: "algebra_check".into(), passed: report.failures(tolerance).is_empty(), body })
}

fn scalar_summary(summary: &serde_json::Map<String, Value>) -> String {
    let render = |v: &Value| match (v.as_i64(), v.as_f64()) {
        (Some(i), _) => i.to_string(),
        (None, Some(x)) => short(x),
        _ => v.to_string(),
    };
    summary
        .iter()
        .filter_map(|(k, v)| match v {
            Value::Object(_) => None,
            Value::Array(items) if items.len() > 8 || items.iter().any(|x| !x.is_number()) => None,
            Value::Array(items) => Some(format!("{k}=[{}]", items.iter().map(render).collect::<Vec<_>>().join(","))),
            _ => Some(format!("{k}={}", render(v))),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn short(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

fn write(output: Output, inputs: Value, stem: Option<String>, out_dir: &Path) -> Result<bool, Failure> {
    let timestamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let argv: Vec<String> = std::env::args().collect();
    let cli_meta = json!({
        "argv": argv,
        "jobs": rayon::current_num_threads(),
        "rates": inputs,
        "timestamp": timestamp.to_string(),
    });
    match output {
        Output::Table(mut result) => {
            let stem = stem.unwrap_or_else(|| format!("{}_{timestamp}", result.protocol));
            result.meta("cli", cli_meta);
            let (csv, _) = result.write(out_dir, &stem)?;
            let passed = result.summary.get("passed").and_then(Value::as_bool).unwrap_or(true);
            println!("{}: {} -> {}", result.protocol, scalar_summary(&result.summary), csv.display());
            Ok(passed)
        }
        Output::Report { protocol, mut body, passed } => {
            let stem = stem.unwrap_or_else(|| format!("{protocol}_{timestamp}"));
            body["schema"] = json!(SCHEMA);
            body["protocol"] = json!(protocol);
            body["version"] = json!(env!("CARGO_PKG_VERSION"));
            body["cli"] = cli_meta;
            std::fs::create_dir_all(out_dir).map_err(|e| Failure::Other(e.to_string()))?;
            let path = out_dir.join(format!("{stem}.json"));
            let text = serde_json::to_string_pretty(&body).map_err(|e| Failure::Other(e.to_string()))? + "\n";
            std::fs::write(&path, text).map_err(|e| Failure::Other(e.to_string()))?;
            println!(
                "{protocol}: passed={passed} max_deviation={} -> {}",
                short(body["max_deviation"].as_f64().unwrap_or(f64::NAN)),
                path.display()
            );
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.output.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = execute(cli.command).and_then(|(output, inputs, placement)| {
        let stem = cli.output.stem.clone().or(placement.stem);
        let dir = placement.out_dir.unwrap_or_else(|| cli.output.out_dir.clone());
        write(output, inputs, stem, &dir)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: checks failed");
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
