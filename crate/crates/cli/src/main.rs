//! `lutfilt`: build, compact and run LUT filter sets from the shell.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 verification failure.

mod cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "lutfilt", version, about = "Cooperative LUT in-loop filtering harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cache an oracle filter into a clipped table file.
    Build(BuildArgs),
    /// Split a clipped spatial table into diagonal and coarse parts.
    Compact(CompactArgs),
    /// Run a pipeline over a PGM image or raw YUV 4:2:0 video.
    Filter(FilterArgs),
    /// Report ops, energy and table storage without filtering.
    Stats(StatsArgs),
    /// Run the built-in invariant suites.
    Verify(VerifyArgs),
    /// Write a ready-made pipeline config.
    Preset(PresetArgs),
}

#[derive(Args)]
pub struct BuildArgs {
    /// Oracle spec, e.g. `box`, `weighted:112,48,48,48`, `identity|box`.
    #[arg(long)]
    pub oracle: String,
    /// Built-in pattern id (1-8) or a JSON pattern file.
    #[arg(long, conflicts_with = "channel")]
    pub pattern: Option<String>,
    /// Build a K-input channel table instead of a spatial one.
    #[arg(long, value_name = "K")]
    pub channel: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub q: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CompactArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub dw: u32,
    /// Extra MSB bits dropped for the coarse table.
    #[arg(long = "Q")]
    pub shift: u8,
    /// Number of leading dimensions held in the band.
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `.pgm` image, anything else is read as raw YUV 4:2:0.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Frame size, required for YUV.
    #[arg(long, value_parser = parse_size)]
    pub size: Option<(usize, usize)>,
    #[arg(long)]
    pub out: PathBuf,
    /// Undistorted original, enables PSNR and the RD merge.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Apply block on/off decisions with this lambda (needs --reference).
    #[arg(long, requires = "reference")]
    pub rd_lambda: Option<f64>,
    /// Write op counts of this run as JSON.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_size)]
    pub size: (usize, usize),
    /// Print JSON instead of the text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// grid, weights, compaction or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Sampled 4-D queries per compaction check.
    #[arg(long, default_value_t = 200_000)]
    pub samples: u64,
    /// Grid stride of the 3-D compaction sweep.
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
}

#[derive(Args)]
pub struct PresetArgs {
    /// identity or smoothing.
    #[arg(long)]
    pub name: String,
    /// Diagonal widths for the luma spatial stages, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub compact_dw: Vec<u32>,
    #[arg(long = "Q", default_value_t = 1)]
    pub shift: u8,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let dim = |t: &str| match t.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("bad dimension {t:?} in {s:?}")),
    };
    Ok((dim(w)?, dim(h)?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Build(a) => cmd::build(&a),
        Command::Compact(a) => cmd::compact(&a),
        Command::Filter(a) => cmd::filter(&a),
        Command::Stats(a) => cmd::stats(&a),
        Command::Verify(a) => cmd::verify(&a),
        Command::Preset(a) => cmd::preset(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lutfilt: {e}");
            ExitCode::from(e.code())
        }
    }
}
