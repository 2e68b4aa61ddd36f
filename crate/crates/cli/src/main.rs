use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphfilt::SphError;

mod commands;
mod verify;

pub const DEFAULT_BANDWIDTH: usize = 63;
pub const MAX_BANDWIDTH: usize = 128;

/// Filtering on the sphere through spherical harmonic transfer functions.
#[derive(Debug, Parser)]
#[command(name = "sphfilt", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spherical harmonic coefficients of a field file or PGM raster.
    Analyze {
        input: PathBuf,
        #[arg(short = 'L', long = "bandwidth", value_parser = bandwidth)]
        bandwidth: Option<usize>,
        #[arg(long, value_enum, default_value_t = Method::Quadrature)]
        method: Method,
        /// Heat-kernel window `e^{-ℓ(ℓ+1)σ}` applied by `--method irf`; 0 disables it.
        #[arg(long, default_value_t = 0.0)]
        irf_sigma: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Field samples of a coefficient file on an equiangular or Gauss-Legendre grid.
    Synthesize {
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Applies a filter to a coefficient file.
    Filter {
        input: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        /// Must match the coefficient file when given.
        #[arg(short = 'L', long = "bandwidth", value_parser = bandwidth)]
        bandwidth: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the filtered field on the default grid.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Also write the transfer function.
        #[arg(long)]
        transfer: Option<PathBuf>,
    },
    /// Impulse response of a filter, as a field file.
    Impulse {
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(short = 'L', long = "bandwidth", value_parser = bandwidth)]
        bandwidth: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Per-degree response `ℓ,norm` as CSV.
    Freqresp {
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(short = 'L', long = "bandwidth", value_parser = bandwidth)]
        bandwidth: Option<usize>,
        /// Report the gain on the delta spectrum instead of the Frobenius norm.
        #[arg(long)]
        normalize_delta: bool,
        /// Defaults to standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rotates a coefficient file: the output is `u ↦ f(R u)` with `R = R(α, β, γ)`.
    Rotate {
        input: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Magnitude and phase experiments.
    Phase {
        #[command(subcommand)]
        tool: PhaseTool,
    },
    /// Filters a surface given by coordinate functions and writes an OBJ mesh.
    Spharm {
        /// Coordinate file; a random bumpy sphere is generated when omitted.
        input: Option<PathBuf>,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(short = 'L', long = "bandwidth", value_parser = bandwidth)]
        bandwidth: Option<usize>,
        #[arg(long, value_enum, default_value_t = Method::Quadrature)]
        method: Method,
        /// Number of times the filter is applied, as one cascaded transfer.
        #[arg(long, default_value_t = 1)]
        passes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the filtered coordinate samples.
        #[arg(long)]
        coords: Option<PathBuf>,
    },
    /// Renders a field file as an 8-bit equirectangular PGM.
    Render {
        input: PathBuf,
        /// Fixed `lo,hi` range instead of min-max scaling.
        #[arg(long, value_parser = range, allow_hyphen_values = true)]
        range: Option<(f64, f64)>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Runs the built-in oracle checks and prints a CSV report.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum PhaseTool {
    /// Keeps only `‖F_ℓ‖`; the synthesized field must be symmetric about the pole.
    Magonly {
        /// Coefficient file; white noise from `--seed` when omitted.
        input: Option<PathBuf>,
        #[arg(short = 'L', long = "bandwidth", value_parser = bandwidth)]
        bandwidth: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Magnitudes of the first file with the phases of the second.
    Swap {
        magnitude: PathBuf,
        phase: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Degrees of freedom fixed by magnitudes and by phases for degrees `ℓ ≤ L`.
    Dof {
        #[arg(short = 'L', long = "max-degree", default_value_t = 10)]
        max_degree: u64,
        /// Count a complex-valued function.
        #[arg(long)]
        complex: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[arg(long = "filter", value_enum, default_value_t = FilterName::Fivept)]
    pub name: FilterName,
    /// Butterfly scale.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Butterfly dilation.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Three-point tap offset in radians.
    #[arg(long, default_value_t = std::f64::consts::PI / 32.0)]
    pub beta0: f64,
    /// Fisher-von Mises concentration.
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = Axis::X)]
    pub orientation: Axis,
    /// Taps file for `--filter custom`.
    #[arg(long)]
    pub taps: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, value_enum, default_value_t = Scheme::Equiangular)]
    pub scheme: Scheme,
    /// Defaults to `2L + 2`.
    #[arg(long)]
    pub n_beta: Option<usize>,
    /// Defaults to `2 n_beta`.
    #[arg(long)]
    pub n_alpha: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterName {
    Identity,
    Fivept,
    Threept,
    Butterfly,
    AxisymFvm,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Quadrature,
    Irf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Equiangular,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

fn bandwidth(s: &str) -> Result<usize, String> {
    let l: usize = s.parse().map_err(|e| format!("{e}"))?;
    if l == 0 || l > MAX_BANDWIDTH {
        return Err(format!("bandwidth must be in 1..={MAX_BANDWIDTH}"));
    }
    Ok(l)
}

fn range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(hi > lo) {
        return Err("range needs lo < hi".into());
    }
    Ok((lo, hi))
}

/// Checks that reported failures; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationFailed(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ValidationFailed>().is_some() {
        return 2;
    }
    match err.downcast_ref::<SphError>() {
        Some(
            SphError::Undersampled { .. }
            | SphError::RankDeficient { .. }
            | SphError::BandwidthMismatch { .. }
            | SphError::GridMismatch(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
