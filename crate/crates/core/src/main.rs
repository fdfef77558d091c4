use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use afdm_cs::harness::{
    emit_report, pilot_overhead, run_monte_carlo, ExperimentConfig, OverheadInputs, ReportFormat,
    Waveform,
};
use afdm_cs::subnyquist::{sampling_rate, RadarConfig};

/// Compressed-sensing channel estimation experiments for AFDM.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Output formats; repeat for several.
        #[arg(long, value_enum, default_values_t = [ReportFormat::Csv])]
        format: Vec<ReportFormat>,
    },
    /// Pilot overhead in samples.
    Overhead {
        #[arg(value_enum)]
        waveform: Waveform,
        #[command(flatten)]
        inputs: OverheadArgs,
    },
    /// Sampling rate of the low-rate sensing receiver.
    Rate {
        #[arg(long)]
        bandwidth_hz: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n_pilots: usize,
        #[arg(long)]
        delay_taps: usize,
        #[arg(long, default_value_t = 1)]
        chirp_rate: usize,
        #[arg(long, default_value_t = 0)]
        cpp_len: usize,
        /// Count the prefix in the frame duration.
        #[arg(long)]
        include_cpp: bool,
    },
}

#[derive(Args)]
struct OverheadArgs {
    #[arg(long)]
    delay_taps: Option<usize>,
    #[arg(long)]
    max_doppler: Option<usize>,
    #[arg(long)]
    n_pilots: Option<usize>,
    #[arg(long)]
    chirp_rate: Option<usize>,
    #[arg(long)]
    pilots_td: Option<usize>,
    #[arg(long)]
    pilots_fd: Option<usize>,
    #[arg(long)]
    ofdm_symbols: Option<usize>,
    #[arg(long)]
    otfs_n: Option<usize>,
    #[arg(long)]
    otfs_m: Option<usize>,
}

impl From<OverheadArgs> for OverheadInputs {
    fn from(a: OverheadArgs) -> Self {
        Self {
            delay_taps: a.delay_taps,
            max_doppler: a.max_doppler,
            n_pilots: a.n_pilots,
            chirp_rate: a.chirp_rate,
            pilots_td: a.pilots_td,
            pilots_fd: a.pilots_fd,
            ofdm_symbols: a.ofdm_symbols,
            otfs_n: a.otfs_n,
            otfs_m: a.otfs_m,
        }
    }
}

const THREADS_VAR: &str = "AFDM_CS_THREADS";

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_VAR} must be a thread count, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            out,
            format,
        } => {
            let cfg = ExperimentConfig::from_path(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let records = run_monte_carlo(&cfg)?;
            println!(
                "{:>8} {:>8} {:>12} {:>12} {:>9} {:>7}",
                "n_pilots", "snr_db", "mse", "mse/entry", "support", "failed"
            );
            for r in &records {
                println!(
                    "{:>8} {:>8.1} {:>12.4e} {:>12.4e} {:>9.3} {:>7}",
                    r.n_pilots, r.snr_db, r.mse, r.mse_per_entry, r.support_rate, r.failed_trials
                );
            }
            for f in format {
                let path = emit_report(&records, f, &out)?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Overhead { waveform, inputs } => {
            println!("{}", pilot_overhead(waveform, &inputs.into())?);
        }
        Command::Rate {
            bandwidth_hz,
            n,
            n_pilots,
            delay_taps,
            chirp_rate,
            cpp_len,
            include_cpp,
        } => {
            let cfg = RadarConfig::new(bandwidth_hz, n)?.with_prefix(cpp_len, include_cpp);
            let r = sampling_rate(n_pilots, delay_taps, chirp_rate, &cfg)?;
            println!("f_s_hz {}", r.f_s_hz);
            println!("ratio {}", r.ratio);
            println!("samples_per_frame {}", r.samples_per_frame);
            println!("effective_hz {}", r.effective_hz);
        }
    }
    Ok(())
}
