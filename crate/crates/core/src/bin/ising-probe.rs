use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ising_probe::cli::{run, Command, RunConfig};

/// Exit status when the oracle comparison finds a deviation above tolerance.
const EXIT_ORACLE_DEVIATION: u8 = 4;

#[derive(Parser)]
#[command(name = "ising-probe", version, about = "Resonator probe of a transverse-field Ising chain")]
struct Args {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the configuration's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 picks one per available core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Quasiparticle dispersion and Bogoliubov angles.
    Dispersion,
    /// Resonator correlation function S(t), one file per λ.
    Correlation,
    /// Spectrum S(ω) and broadening metrics, one pair of files per λ.
    Spectrum,
    /// Broadening metrics across the λ sweep on a shared grid.
    Sweep,
    /// Exact Lorentzian line list of every branch pair.
    Lines,
    /// Compare the free-fermion results against dense exact diagonalization.
    OracleCheck,
    /// Derive dimensionless chain parameters from circuit values.
    Params,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Dispersion => Command::Dispersion,
            Cmd::Correlation => Command::Correlation,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Sweep => Command::Sweep,
            Cmd::Lines => Command::Lines,
            Cmd::OracleCheck => Command::OracleCheck,
            Cmd::Params => Command::Params,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
            eprintln!("error: cannot start {} worker threads: {e}", args.threads);
            return ExitCode::from(2);
        }
    }
    let config = match &args.config {
        Some(path) => RunConfig::from_path(path),
        None => RunConfig::from_json("{}"),
    };
    let result = config.and_then(|cfg| {
        let out = args.out.clone().unwrap_or_else(|| cfg.output.clone());
        run(args.command.into(), &cfg, &out)
    });
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.oracle_failed {
                eprintln!("error: oracle deviation above tolerance");
                ExitCode::from(EXIT_ORACLE_DEVIATION)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
