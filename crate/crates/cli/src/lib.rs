//! Command implementations for the `rsuq` binary.
//!
//! Each command is a function from input bytes and flags to output bytes
//! plus a text summary, so runs can be compared without touching the disk.

use std::fmt::Write as _;
use std::path::Path;

use rsuq::bounds::{self, BoundsReport, ConstantsRegistry};
use rsuq::coding::{decode_vectors, read_vectors, write_vectors, StreamSpec};
use rsuq::lattice::unit_ball_volume;
use rsuq::mc::plugin_entropy;
use rsuq::{builtin_lattice, Lattice};

pub mod suite;

pub type CmdResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input (exit 2).
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] rsuq::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// A built-in lattice name, or a path to a lattice config file.
pub fn resolve_lattice(spec: &str, dim: Option<usize>) -> CmdResult<Lattice> {
    let path = Path::new(spec);
    let lat = if path.is_file() {
        Lattice::load_config(path)?
    } else {
        let n = dim.ok_or_else(|| {
            CliError::Usage(format!("--dim is required for built-in lattice `{spec}`"))
        })?;
        builtin_lattice(spec, n)?
    };
    if let Some(n) = dim {
        if n != lat.dim() {
            return Err(CliError::Usage(format!(
                "--dim {n} does not match lattice dimension {}",
                lat.dim()
            )));
        }
    }
    Ok(lat)
}

fn check_input_dim(dim: usize, lat: &Lattice) -> CmdResult<()> {
    if dim != lat.dim() {
        return Err(CliError::Usage(format!(
            "input vectors have dimension {dim}, lattice has {}",
            lat.dim()
        )));
    }
    Ok(())
}

fn log2_ball(n: usize, r: f64) -> f64 {
    unit_ball_volume(n).log2() + n as f64 * r.log2()
}

pub struct Output {
    pub bytes: Vec<u8>,
    pub summary: String,
}

/// `encode`: VQF1 bytes in, RSQ1 bytes out.
pub fn encode(input: &[u8], lat: Lattice, radius: f64, seed: u64) -> CmdResult<Output> {
    let (dim, xs) = read_vectors(input)?;
    if !xs.is_empty() {
        check_input_dim(dim, &lat)?;
    }
    let n = lat.dim();
    let delta = lat.packing_density();
    let batch = StreamSpec::ball(lat, radius, seed).encode(&xs)?;
    let mut s = String::new();
    writeln!(s, "vectors: {}", xs.len()).unwrap();
    writeln!(s, "bytes: {}", batch.bytes.len()).unwrap();
    if !xs.is_empty() {
        let count = xs.len() as f64;
        let bits = batch.payload_bits()? as f64;
        let emp = plugin_entropy(batch.descriptions.iter().map(|d| d.k))
            + plugin_entropy(batch.descriptions.iter().map(|d| d.coords.as_slice()));
        // support of the inputs taken as the smallest origin ball holding them
        let tau = xs
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
            .max(radius);
        let bound = log2_ball(n, tau) + bounds::rsuq_norment_ub(n, radius, delta, false)?;
        writeln!(
            s,
            "rate: {:.6} bits/dim (payload {:.3} bits/vector)",
            bits / count / n as f64,
            bits / count
        )
        .unwrap();
        writeln!(s, "empirical H(K)+H(M): {:.6} bits/dim", emp / n as f64).unwrap();
        writeln!(
            s,
            "upper bound log mu(tau B) - n log r - log kappa + log e: {:.6} bits/dim",
            bound / n as f64
        )
        .unwrap();
        writeln!(
            s,
            "lower bound -log kappa - n log r: {:.6} bits/dim",
            bounds::rd_lower_max_error(n, radius)? / n as f64
        )
        .unwrap();
    }
    Ok(Output {
        bytes: batch.bytes,
        summary: s,
    })
}

/// `decode`: RSQ1 bytes in, VQF1 bytes out.
pub fn decode(input: &[u8]) -> CmdResult<Output> {
    let (header, ys) = decode_vectors(input)?;
    let bytes = write_vectors(header.n as usize, &ys)?;
    let summary = format!(
        "vectors: {}\nlattice: {}\nmode: {:?}\n",
        ys.len(),
        header.lattice_id.lines().next().unwrap_or(""),
        header.mode
    );
    Ok(Output { bytes, summary })
}

/// `simulate`: channel output `x + Z`, `Z ~ N(0, σ²I)`, as VQF1.
pub fn simulate(input: &[u8], lat: Lattice, sigma: f64, seed: u64) -> CmdResult<Output> {
    let (dim, xs) = read_vectors(input)?;
    if !xs.is_empty() {
        check_input_dim(dim, &lat)?;
    }
    let n = lat.dim();
    let batch = StreamSpec::gaussian(lat, sigma, seed).encode(&xs)?;
    let bytes = write_vectors(n, &batch.outputs)?;
    let mut s = format!("vectors: {}\n", xs.len());
    if !xs.is_empty() {
        let bits = batch.payload_bits()? as f64 / xs.len() as f64;
        writeln!(
            s,
            "rate: {bits:.3} bits/vector ({:.6} bits/dim)",
            bits / n as f64
        )
        .unwrap();
    }
    Ok(Output { bytes, summary: s })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Figure2Left,
    Figure2Right,
    Table1,
}

impl Table {
    pub fn default_dims(self) -> Vec<usize> {
        match self {
            Table::Table1 => vec![1, 2, 3, 4, 5, 6, 7, 8, 24],
            _ => (2..=48).collect(),
        }
    }
}

/// `a..b`, `a`, or a comma-separated list of either.
pub fn parse_dims(text: &str) -> CmdResult<Vec<usize>> {
    let bad = || {
        CliError::Usage(format!(
            "bad --dims `{text}`; expected e.g. 2..48 or 1..8,24"
        ))
    };
    let mut dims = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b
                    .trim()
                    .trim_start_matches('=')
                    .parse()
                    .map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                dims.extend(a..=b);
            }
            None => dims.push(part.parse().map_err(|_| bad())?),
        }
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad());
    }
    Ok(dims)
}

pub struct BoundsOutput {
    pub csv: String,
    pub warnings: Vec<String>,
}

/// `bounds`: one of the reproduction tables as CSV.
pub fn bounds_table(
    table: Table,
    dims: &[usize],
    registry: Option<ConstantsRegistry>,
) -> CmdResult<BoundsOutput> {
    let mut reg = ConstantsRegistry::builtin();
    if let Some(extra) = registry {
        reg.merge(extra);
    }
    let report: BoundsReport = match table {
        Table::Table1 => bounds::table1(dims)?,
        Table::Figure2Left => bounds::figure2_left(dims, &reg)?,
        Table::Figure2Right => bounds::figure2_right(dims, &reg)?,
    };
    let mut warnings = Vec::new();
    if !report.missing.is_empty() {
        let list: Vec<String> = report.missing.iter().map(|n| n.to_string()).collect();
        warnings.push(format!(
            "no registry constants for n = {}; only lattice-independent curves emitted there",
            list.join(",")
        ));
    }
    Ok(BoundsOutput {
        csv: report.to_csv_string()?,
        warnings,
    })
}
