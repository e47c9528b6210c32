//! `qstar`: sweeps, reports and one-shot scattering matrices for star-graph devices.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qstar_core::analysis::{
    bandwidth, flux_curve, flux_with_tolerance, locate_pole, MomentumDistribution,
    BANDWIDTH_CONSTANT, EDGE_TOL, FLUX_TOL, POLE_TOL,
};
use qstar_core::assembly::{compound_smatrix, convergence_study, halving_sequence};
use qstar_core::scattering::{smatrix, ChannelSet};
use qstar_core::sweep::{render, KRange, OutputFormat, SweepSpec};
use qstar_core::{
    BoundaryCondition, CompoundGraph, DeltaChainRecipe, Device, FilterN3, GateN4, ScatteringMatrix,
    Tolerance, Variant,
};

#[derive(Parser)]
#[command(
    name = "qstar",
    version,
    about = "Scattering on quantum star graphs with external potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Input-line probabilities of a device over a momentum grid.
    Sweep {
        #[command(flatten)]
        device: DeviceArgs,
        /// Momentum grid `lo:hi:steps`, endpoints included.
        #[arg(long = "k", value_parser = parse_range)]
        range: KRange,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// JSON reports.
    Report {
        #[command(subcommand)]
        kind: Report,
    },
    /// S-matrix at a single momentum.
    Smatrix {
        #[command(flatten)]
        device: OptionalDeviceArgs,
        /// Boundary-condition file (`{"n","A","B"}`), instead of a device.
        #[arg(long, conflicts_with = "device")]
        bc: Option<PathBuf>,
        /// Line potentials for `--bc`, comma separated.
        #[arg(long, value_delimiter = ',', requires = "bc")]
        potentials: Vec<f64>,
        #[arg(long)]
        k: f64,
    },
    /// S-matrix of a compound graph read from a JSON config.
    Graph {
        config: PathBuf,
        #[arg(long)]
        k: f64,
    },
}

#[derive(Subcommand)]
enum Report {
    /// Half-maximum width of the n=3 resonance.
    Bandwidth {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long = "U")]
        u: f64,
    },
    /// Resonance pole on the second sheet.
    Pole {
        #[command(flatten)]
        device: DeviceArgs,
    },
    /// Flux into the output line of the n=4 gate.
    Flux {
        #[arg(long)]
        a: f64,
        #[arg(long = "U")]
        u: f64,
        #[arg(long = "V")]
        v: Option<f64>,
        /// Constant momentum density.
        #[arg(long, conflicts_with = "rho_table")]
        rho: Option<f64>,
        /// Tabulated density, JSON `{"k": [...], "rho": [...]}`.
        #[arg(long)]
        rho_table: Option<PathBuf>,
        #[arg(long = "kF")]
        k_fermi: f64,
        /// Also sample J over `lo:hi:steps` control potentials.
        #[arg(long = "U-range", value_parser = parse_range)]
        u_range: Option<KRange>,
    },
    /// δ-chain approximation error against the ideal vertex as d shrinks.
    Converge {
        #[arg(long, value_enum)]
        recipe: Kind,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "U")]
        u: f64,
        #[arg(long, default_value_t = 0.1)]
        d0: f64,
        #[arg(long, default_value_t = 6)]
        halvings: u32,
        #[arg(long, value_enum, default_value_t = VariantArg::Magnetic)]
        variant: VariantArg,
        #[arg(long = "k-grid", value_delimiter = ',', default_value = "0.5,1.5,2,5")]
        k_grid: Vec<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    N3,
    N4,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Magnetic,
    #[value(name = "v5-delta")]
    V5Delta,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Magnetic => Variant::Magnetic,
            VariantArg::V5Delta => Variant::V5Delta,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct DeviceArgs {
    #[arg(long, value_enum)]
    device: Kind,
    #[arg(long)]
    a: f64,
    /// Output-line coupling (n3 only).
    #[arg(long)]
    b: Option<f64>,
    #[arg(long = "U")]
    u: f64,
    /// Drain potential (n4 only).
    #[arg(long = "V")]
    v: Option<f64>,
}

#[derive(Args)]
#[group(id = "device", multiple = true)]
struct OptionalDeviceArgs {
    #[arg(long = "device", value_enum, requires = "a")]
    kind: Option<Kind>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long = "U")]
    u: Option<f64>,
    #[arg(long = "V")]
    v: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Core(qstar_core::Error),
}

impl From<qstar_core::Error> for CliError {
    fn from(e: qstar_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_range(s: &str) -> std::result::Result<KRange, String> {
    s.parse::<KRange>().map_err(|e| e.to_string())
}

fn build_device(kind: Kind, a: f64, b: Option<f64>, u: f64, v: Option<f64>) -> CliResult<Device> {
    match kind {
        Kind::N3 => {
            if v.is_some() {
                return Err(CliError::Config("--V applies to n4 only".into()));
            }
            let b = b.ok_or_else(|| CliError::Config("n3 needs --b".into()))?;
            Ok(FilterN3::new(a, b, u)?.into())
        }
        Kind::N4 => {
            if b.is_some() {
                return Err(CliError::Config("--b applies to n3 only".into()));
            }
            Ok(gate(a, u, v)?.into())
        }
    }
}

fn gate(a: f64, u: f64, v: Option<f64>) -> CliResult<GateN4> {
    Ok(match v {
        Some(v) => GateN4::with_drain(a, u, v)?,
        None => GateN4::new(a, u)?,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn tolerance_json(t: Tolerance) -> Value {
    json!({ "abs": t.abs_tol, "rel": t.rel_tol })
}

fn device_json(d: &Device) -> Value {
    match d {
        Device::N3(f) => json!({ "device": "n3", "a": f.a(), "b": f.b(), "U": f.u() }),
        Device::N4(g) => {
            let mut v = json!({ "device": "n4", "a": g.a(), "U": g.u() });
            if g.is_band_mode() {
                v["V"] = json!(g.v());
            }
            v
        }
    }
}

fn matrix_json(sm: &ScatteringMatrix, potentials: &[f64]) -> Value {
    let n = sm.n();
    let s: Vec<Vec<[f64; 2]>> = (0..n)
        .map(|i| (0..n).map(|j| [sm.get(i, j).re, sm.get(i, j).im]).collect())
        .collect();
    let probs = sm.probabilities();
    let p: Vec<Vec<Option<f64>>> = (0..n)
        .map(|i| (0..n).map(|j| probs.get(i, j)).collect())
        .collect();
    json!({
        "k": sm.k(),
        "energy": sm.k() * sm.k(),
        "potentials": potentials,
        "open": sm.open_mask(),
        "S": s,
        "P": p,
        "flux_defect": sm.flux_defect(),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

#[derive(serde::Deserialize)]
struct RhoTable {
    k: Vec<f64>,
    rho: Vec<f64>,
}

fn run_report(kind: Report) -> CliResult<String> {
    let value = match kind {
        Report::Bandwidth { a, b, u } => {
            let f = FilterN3::new(a, b, u)?;
            let r = bandwidth(&f)?;
            json!({
                "report": "bandwidth",
                "inputs": { "device": "n3", "a": a, "b": b, "U": u },
                "results": r,
                "tolerances": { "edge": tolerance_json(EDGE_TOL), "bandwidth_constant": BANDWIDTH_CONSTANT },
            })
        }
        Report::Pole { device } => {
            let d = build_device(device.device, device.a, device.b, device.u, device.v)?;
            let r = locate_pole(&d)?;
            json!({
                "report": "pole",
                "inputs": device_json(&d),
                "results": r,
                "tolerances": { "root": tolerance_json(POLE_TOL) },
            })
        }
        Report::Flux {
            a,
            u,
            v,
            rho,
            rho_table,
            k_fermi,
            u_range,
        } => {
            let dist = match (rho, rho_table) {
                (_, Some(path)) => {
                    let t: RhoTable = read_json(&path)?;
                    MomentumDistribution::tabulated(t.k, t.rho)?
                }
                (Some(rho), None) => MomentumDistribution::constant(rho)?,
                (None, None) => {
                    return Err(CliError::Config("flux needs --rho or --rho-table".into()))
                }
            };
            let g = gate(a, u, v)?;
            let r = flux_with_tolerance(&g, &dist, k_fermi, FLUX_TOL)?;
            let mut value = json!({
                "report": "flux",
                "inputs": { "gate": device_json(&g.into()), "distribution": dist, "kF": k_fermi },
                "results": r,
                "tolerances": { "quadrature": tolerance_json(FLUX_TOL) },
            });
            if let Some(range) = u_range {
                let us = range.points(&[]);
                let curve = flux_curve(&g, &dist, k_fermi, &us)?;
                value["curve"] = json!({
                    "samples": curve.samples,
                    "monotone": curve.is_monotone(),
                    "linearity_deviation": curve.linearity_deviation(),
                });
            }
            value
        }
        Report::Converge {
            recipe,
            a,
            b,
            u,
            d0,
            halvings,
            variant,
            k_grid,
        } => {
            let target = build_device(recipe, a, b, u, None)?;
            let recipe = DeltaChainRecipe::new(target, d0, variant.into())?;
            let ds = halving_sequence(d0, halvings);
            let r = convergence_study(&recipe, &k_grid, &ds)?;
            let variant = match variant {
                VariantArg::Magnetic => "magnetic",
                VariantArg::V5Delta => "v5-delta",
            };
            json!({
                "report": "converge",
                "inputs": { "target": device_json(&target), "variant": variant, "d0": d0, "halvings": halvings },
                "results": {
                    "k_grid": r.k_grid,
                    "rows": r.rows,
                    "monotone": r.monotone,
                    "final_eps": r.final_eps(),
                    "min_ratio": r.min_ratio(),
                },
                "tolerances": { "metric": "max over k of the largest open-block entry difference" },
            })
        }
    };
    Ok(pretty(&value))
}

fn run(cli: Cli) -> CliResult<Option<(PathBuf, String)>> {
    let text = match cli.command {
        Command::Sweep {
            device,
            range,
            format,
            out,
        } => {
            let spec = SweepSpec {
                device: build_device(device.device, device.a, device.b, device.u, device.v)?,
                range,
                format: match format {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                },
            };
            let mut text = render(&spec)?;
            if matches!(format, Format::Json) {
                text.push('\n');
            }
            if let Some(path) = out {
                return Ok(Some((path, text)));
            }
            text
        }
        Command::Report { kind } => run_report(kind)?,
        Command::Smatrix {
            device,
            bc,
            potentials,
            k,
        } => {
            let (bc, potentials) = match bc {
                Some(path) => {
                    let bc: BoundaryCondition = read_json(&path)?;
                    (bc, potentials)
                }
                None => {
                    let kind = device
                        .kind
                        .ok_or_else(|| CliError::Config("give --device or --bc".into()))?;
                    let (a, u) = match (device.a, device.u) {
                        (Some(a), Some(u)) => (a, u),
                        _ => return Err(CliError::Config("--device needs --a and --U".into())),
                    };
                    let d = build_device(kind, a, device.b, u, device.v)?;
                    (d.boundary_condition(), d.potentials())
                }
            };
            let sm = smatrix(&bc, &ChannelSet::at_momentum(potentials.clone(), k)?)?;
            pretty(&matrix_json(&sm, &potentials))
        }
        Command::Graph { config, k } => {
            let g: CompoundGraph = read_json(&config)?;
            let sm = compound_smatrix(&g, k * k)?;
            pretty(&matrix_json(&sm, &g.potentials()))
        }
    };
    print!("{text}");
    Ok(None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some((path, text))) => match fs::write(&path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
