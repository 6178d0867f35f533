use clap::{Parser, Subcommand};
use hhgq::config::{fnv1a, RunConfig};
use hhgq::cli;
use std::path::PathBuf;
use std::process::ExitCode;

/// Phase-space analysis of quantum-light-driven high-harmonic generation.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    /// Run configuration file; built-in reference parameters when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed recorded in the output provenance, overriding the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare exact driving-field moments against the diagonal mixture.
    DrivingCompare,
    /// Emit the numeric emission spectrum and per-harmonic analytic peaks.
    HhgSpectrum,
    /// Sweep the quadrature-variance error of the mixture over system size.
    Fig2,
    /// Emit mixture Wigner maps of the configured states.
    Wigner,
    /// Run the built-in oracle suites and print a pass/fail matrix.
    Selftest {
        /// Artificial offset injected into the two-form checks (test harness
        /// fault injection); leave at 0 for a real run.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
}

fn run(args: &Args) -> hhgq::Result<i32> {
    if let Some(threads) = args.threads {
        // A second invocation in-process would fail; the global pool can only
        // be configured once, and the default pool is fine as a fallback.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let (mut config, hash) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            (hhgq::config::parse(&text)?, fnv1a(text.as_bytes()))
        }
        None => (RunConfig::reference(), fnv1a(b"reference")),
    };
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    match args.command {
        Command::DrivingCompare => cli::cmd_driving_compare(&config, hash)?,
        Command::HhgSpectrum => cli::cmd_hhg_spectrum(&config, hash)?,
        Command::Fig2 => cli::cmd_fig2(&config, hash)?,
        Command::Wigner => cli::cmd_wigner(&config, hash)?,
        Command::Selftest { perturb } => return Ok(cli::cmd_selftest(perturb)),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
