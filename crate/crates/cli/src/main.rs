use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rsuq::bounds::{plot_script, ConstantsRegistry};
use rsuq::mc::results_writer;
use rsuq_cli::suite::{criteria, Budget};
use rsuq_cli::{
    bounds_table, decode, encode, parse_dims, resolve_lattice, simulate, CliError, CmdResult, Table,
};

#[derive(Parser)]
#[command(
    name = "rsuq",
    version,
    about = "Rejection-sampled universal quantization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Seed for the shared randomness.
    #[arg(long, env = "RSUQ_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a VQF1 file into an RSQ1 stream.
    Encode {
        #[arg(long)]
        input: PathBuf,
        /// Built-in lattice (Zn, Dn, A2, E8) or a lattice config file.
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        radius: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        output: PathBuf,
    },
    /// Reconstruct the vectors of an RSQ1 stream as VQF1.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Accepted for uniformity; the stream header carries the seed.
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Pass VQF1 vectors through a simulated additive Gaussian channel.
    Simulate {
        #[arg(long, value_enum)]
        noise: Noise,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        lattice: String,
        /// Noise standard deviation per coordinate.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write one of the redundancy or entropy tables as CSV.
    Bounds {
        #[arg(long, value_enum)]
        table: TableArg,
        /// Dimensions, e.g. 2..48 or 1..8,24.
        #[arg(long)]
        dims: Option<String>,
        /// Extra lattice constants (CSV: n,delta,theta,nsm,source).
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Accepted for uniformity; tables are deterministic.
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Run the verification suite; exits 1 if any check fails.
    Selftest {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        seed: SeedArg,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    #[value(name = "figure2-left")]
    Figure2Left,
    #[value(name = "figure2-right")]
    Figure2Right,
    Table1,
}

impl From<TableArg> for Table {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::Figure2Left => Table::Figure2Left,
            TableArg::Figure2Right => Table::Figure2Right,
            TableArg::Table1 => Table::Table1,
        }
    }
}

fn read(path: &Path) -> CmdResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs the command; `Ok(false)` means a verification failure.
fn run(cli: Cli) -> CmdResult<bool> {
    match cli.command {
        Command::Encode {
            input,
            lattice,
            dim,
            radius,
            seed,
            output,
        } => {
            let lat = resolve_lattice(&lattice, dim)?;
            let out = encode(&read(&input)?, lat, radius, seed.seed)?;
            write(&output, &out.bytes)?;
            print!("{}", out.summary);
        }
        Command::Decode { input, output, .. } => {
            let out = decode(&read(&input)?)?;
            write(&output, &out.bytes)?;
            print!("{}", out.summary);
        }
        Command::Simulate {
            noise: Noise::Gaussian,
            dim,
            lattice,
            sigma,
            seed,
            input,
            output,
        } => {
            let lat = resolve_lattice(&lattice, dim)?;
            let out = simulate(&read(&input)?, lat, sigma, seed.seed)?;
            write(&output, &out.bytes)?;
            print!("{}", out.summary);
        }
        Command::Bounds {
            table,
            dims,
            registry,
            out,
            ..
        } => {
            let table = Table::from(table);
            let dims = match dims {
                Some(d) => parse_dims(&d)?,
                None => table.default_dims(),
            };
            let registry = registry.map(ConstantsRegistry::load).transpose()?;
            let res = bounds_table(table, &dims, registry)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            write(&out, res.csv.as_bytes())?;
            if table != Table::Table1 {
                let script = out.with_extension("py");
                let title = match table {
                    Table::Figure2Left => "Redundancy, maximum-error criterion",
                    _ => "Redundancy, mean-squared-error criterion",
                };
                let csv_name = out
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                write(&script, plot_script(&csv_name, title).as_bytes())?;
            }
        }
        Command::Selftest {
            full, seed, out, ..
        } => {
            let budget = if full { Budget::Full } else { Budget::Quick };
            let mut report = results_writer(Vec::new())?;
            let mut all_ok = true;
            for c in criteria() {
                let start = Instant::now();
                let results = (c.run)(seed.seed, budget)?;
                let ok = results.iter().all(|r| r.passed());
                all_ok &= ok;
                for r in &results {
                    r.write_rows(&mut report)?;
                }
                eprintln!(
                    "{} criterion {}: {} ({:.1} s)",
                    if ok { "PASS" } else { "FAIL" },
                    c.id,
                    c.title,
                    start.elapsed().as_secs_f64()
                );
            }
            let bytes = report
                .into_inner()
                .map_err(|e| CliError::Io(e.into_error()))?;
            match out {
                Some(path) => write(&path, &bytes)?,
                None => std::io::stdout().write_all(&bytes)?,
            }
            return Ok(all_ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
