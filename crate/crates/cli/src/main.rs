use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cohomology;
mod config;
mod input;
mod output;
mod profile;
mod verify;

use config::{CliError, CliResult, ConfigFile};

#[derive(Parser)]
#[command(name = "specdens", version, about = "Spectral decay profiles and inequality certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral profile F and its transforms G, H, L, M, N.
    Profile(profile::ProfileArgs),
    /// Check inequalities on random states, as JSON lines.
    Verify(verify::VerifyArgs),
    /// Spectral density of a coboundary Laplacian and its Sobolev exponent.
    Cohomology(cohomology::CohomologyArgs),
    /// Merge report files into one sorted, deduplicated stream.
    ReportMerge(verify::MergeArgs),
}

/// Flags shared by all subcommands. Any of them may also be set in the
/// `--config` file; flags win.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// `key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Operator or complex file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Named family, e.g. `cycle 4`, `lattice_laplacian d=2`, `line`.
    #[arg(long)]
    pub family: Option<String>,
    /// Projector flavor: `half-open` for `]0, lambda]`, `closed` for `[0, lambda]`.
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Absolute pass tolerance of reports.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative kernel threshold of diagonalization.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

pub const COMMON_KEYS: [&str; 9] = [
    "input", "family", "flavor", "seed", "trials", "out", "tol", "kappa", "threads",
];

impl Common {
    /// Fills unset flags from the config file, which may only use the common
    /// keys and `extra`.
    pub fn resolve(&self, extra: &[&str]) -> CliResult<(Common, ConfigFile)> {
        let keys: Vec<&str> = COMMON_KEYS.iter().chain(extra).copied().collect();
        let file = ConfigFile::load(self.config.as_deref(), &keys)?;
        let c = Common {
            config: self.config.clone(),
            input: file.pick(self.input.clone(), "input")?,
            family: file.pick(self.family.clone(), "family")?,
            flavor: file.pick(self.flavor.clone(), "flavor")?,
            seed: file.pick(self.seed, "seed")?,
            trials: file.pick(self.trials, "trials")?,
            out: file.pick(self.out.clone(), "out")?,
            tol: file.pick(self.tol, "tol")?,
            kappa: file.pick(self.kappa, "kappa")?,
            threads: file.pick(self.threads, "threads")?,
        };
        if let Some(n) = c.threads {
            if n == 0 {
                return Err(CliError::Usage("threads must be at least 1".into()));
            }
            // Fails only when a pool already exists, as in tests running
            // several commands in one process; the output is the same.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok((c, file))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Profile(a) => profile::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Cohomology(a) => cohomology::run(a),
        Command::ReportMerge(a) => verify::merge(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(2)
        }
    }
}
