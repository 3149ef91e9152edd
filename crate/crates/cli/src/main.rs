use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dikey_cli::commands::{
    self, run_certify, run_distance, run_local_bound, run_selftest_check, run_sweep,
    CertifyOptions, DistanceOptions,
};
use dikey_cli::config::SweepConfig;
use dikey_core::locality::{DEFAULT_LP_CELL_CAP, DEFAULT_VERTEX_CAP};
use dikey_core::Error;

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_THRESHOLD: u8 = 2;
const EXIT_CAP: u8 = 3;

/// Certification toolkit for two-basis Bell correlations: self-testing
/// verification, Devetak–Winter key rates, and local-polytope distances.
#[derive(Parser)]
#[command(name = "dikey", version, about)]
struct Cli {
    /// Residual threshold for certify and selftest-check verdicts
    #[arg(long, global = true, default_value_t = 1e-8)]
    tolerance: f64,

    /// Worker threads for sweep grid points
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Write the main output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for sweep rows
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one (d, ε) and report a pass/fail verdict
    Certify {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        /// Overlap anchor column used by the isometry construction
        #[arg(long, default_value_t = 0)]
        anchor: usize,
        /// Junk dimension on Alice's side (> 1 dilates the instance)
        #[arg(long, default_value_t = 1)]
        junk_a: usize,
        /// Junk dimension on Bob's side
        #[arg(long, default_value_t = 1)]
        junk_b: usize,
        /// Dilation seed; falls back to DIKEY_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep a (d, ε) grid and emit one row per point plus a plot script
    Sweep {
        /// JSON config file; flags below override its fields
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        d: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        #[arg(long)]
        junk_a: Option<usize>,
        #[arg(long)]
        junk_b: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cyclic flip probability on Bob's key outcome (key rate only)
        #[arg(long)]
        noise: Option<f64>,
        /// Compute the local-polytope LP distance per point
        #[arg(long)]
        lp: bool,
        /// Measurement plugin file with extra Bob settings (attached before
        /// the key setting)
        #[arg(long)]
        bob_measurements: Option<PathBuf>,
    },
    /// ℓ₁ distance from a correlation file to the local polytope
    Distance {
        /// Correlation JSON file
        #[arg(long)]
        correlation: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        vertex_cap: u128,
        #[arg(long, default_value_t = DEFAULT_LP_CELL_CAP)]
        cell_cap: u128,
    },
    /// Maximum of a Bell functional file over local strategies
    LocalBound {
        /// Functional JSON file
        #[arg(long)]
        functional: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
        vertex_cap: u128,
    },
    /// Run the self-testing verification alone on a dilated instance
    SelftestCheck {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 2)]
        junk_a: usize,
        #[arg(long, default_value_t = 2)]
        junk_b: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        anchor: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::VertexCapExceeded { .. } | Error::LpSizeExceeded { .. } => EXIT_CAP,
        _ => EXIT_INVALID,
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("DIKEY_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::InvalidFile(format!("{}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidFile(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Certify {
            d,
            epsilon,
            anchor,
            junk_a,
            junk_b,
            seed,
        } => {
            let report = run_certify(&CertifyOptions {
                d,
                epsilon,
                anchor,
                junk_a,
                junk_b,
                seed: resolve_seed(seed),
                tolerance: cli.tolerance,
            })?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(&cli.out, &json)?;
            if report.pass {
                Ok(EXIT_OK)
            } else {
                eprintln!("certification failed: {}", report.failures.join("; "));
                Ok(EXIT_THRESHOLD)
            }
        }
        Command::SelftestCheck {
            d,
            epsilon,
            junk_a,
            junk_b,
            seed,
            anchor,
        } => {
            let report = run_selftest_check(&CertifyOptions {
                d,
                epsilon,
                anchor,
                junk_a,
                junk_b,
                seed: resolve_seed(seed),
                tolerance: cli.tolerance,
            })?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(&cli.out, &json)?;
            if report.pass {
                Ok(EXIT_OK)
            } else {
                eprintln!(
                    "self-test residual {:.3e} exceeds {:.1e}",
                    report.max_residual, report.tolerance
                );
                Ok(EXIT_THRESHOLD)
            }
        }
        Command::Sweep {
            config,
            d,
            epsilon,
            junk_a,
            junk_b,
            seed,
            noise,
            lp,
            bob_measurements,
        } => {
            let mut cfg = match config {
                Some(path) => SweepConfig::from_json(&read_to_string(&path)?)?,
                None => SweepConfig::default(),
            };
            // flags win over the config file
            if !d.is_empty() {
                cfg.d = d;
            }
            if !epsilon.is_empty() {
                cfg.epsilon = epsilon;
            }
            if let Some(v) = junk_a {
                cfg.junk_a = v;
            }
            if let Some(v) = junk_b {
                cfg.junk_b = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            } else if cfg.seed == 0 {
                cfg.seed = resolve_seed(None);
            }
            if let Some(v) = noise {
                cfg.noise = v;
            }
            if lp {
                cfg.lp = true;
            }
            if let Some(path) = bob_measurements {
                cfg.bob_measurements = Some(path.to_string_lossy().into_owned());
            }
            if cli.jobs > 1 {
                cfg.jobs = cli.jobs;
            }
            cfg.tolerance = cli.tolerance;
            cfg.validate()?;

            let rows = run_sweep(&cfg)?;
            let body = match cli.format {
                Format::Csv => commands::sweep_csv(&rows),
                Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
            };
            emit(&cli.out, &body)?;
            if let (Some(path), Format::Csv) = (&cli.out, cli.format) {
                let plot_path = path.with_extension("gp");
                let csv_name = path
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "sweep.csv".into());
                fs::write(&plot_path, commands::sweep_plot_script(&csv_name))
                    .map_err(|e| Error::InvalidFile(format!("{}: {e}", plot_path.display())))?;
            }
            if rows.iter().any(|r| r.error.is_none()) {
                Ok(EXIT_OK)
            } else {
                eprintln!("every grid point failed");
                Ok(EXIT_THRESHOLD)
            }
        }
        Command::Distance {
            correlation,
            vertex_cap,
            cell_cap,
        } => {
            let report = run_distance(
                &read_to_string(&correlation)?,
                &DistanceOptions {
                    vertex_cap,
                    cell_cap,
                    ..DistanceOptions::default()
                },
            )?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(&cli.out, &json)?;
            eprintln!(
                "distance {:.6e} ({} witness vertices, {} pivots)",
                report.distance,
                report.weights.len(),
                report.iterations
            );
            Ok(EXIT_OK)
        }
        Command::LocalBound {
            functional,
            vertex_cap,
        } => {
            let report = run_local_bound(&read_to_string(&functional)?, vertex_cap)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(&cli.out, &json)?;
            eprintln!("local bound {:.12}", report.bound);
            Ok(EXIT_OK)
        }
    }
}
