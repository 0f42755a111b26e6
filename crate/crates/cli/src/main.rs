use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Davies maps on qubits and qutrits.
#[derive(Debug, Parser)]
#[command(name = "davieskit", version)]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(flatten)]
    tol: TolArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct TolArgs {
    /// Slack on the qubit parameter inequalities.
    #[arg(long, global = true, default_value = "1e-12")]
    tol_constraint: f64,
    /// Choi eigenvalue slack for complete positivity.
    #[arg(long, global = true, default_value = "1e-10")]
    tol_cp: f64,
    /// Relative slack for detailed balance.
    #[arg(long, global = true, default_value = "1e-10")]
    tol_db: f64,
    /// Off-diagonal generator entries above minus this count as rates.
    #[arg(long, global = true, default_value = "1e-10")]
    tol_generator: f64,
    /// Slack for conditional complete positivity.
    #[arg(long, global = true, default_value = "1e-10")]
    tol_ccp: f64,
    /// Margin band inside which CCP verdicts may disagree.
    #[arg(long, global = true, default_value = "1e-8")]
    tol_band: f64,
    /// Allowed gap between analytic and numeric entropies.
    #[arg(long, global = true, default_value = "1e-6")]
    tol_moe: f64,
}

#[derive(Debug, Clone, Args)]
struct QubitArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Gibbs weight of the excited level, in (0, 1/2].
    #[arg(long)]
    p: Option<f64>,
    /// Population relaxation rate A.
    #[arg(long = "rate-a", alias = "A")]
    rate_a: Option<f64>,
    /// Coherence decay rate.
    #[arg(long, alias = "Gamma")]
    gamma: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau3: Option<f64>,
    /// Equilibrium inversion 2p - 1.
    #[arg(long = "w-eq", allow_negative_numbers = true)]
    w_eq: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MoeMode {
    Analytic,
    Numeric,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Base {
    #[value(name = "2")]
    Two,
    #[value(name = "e")]
    E,
}

impl From<Base> for davieskit::LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Two => davieskit::LogBase::Two,
            Base::E => davieskit::LogBase::E,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one qubit parameter set: (a, c, p), (A, Gamma, p, t) or
    /// (tau1, tau3, w-eq, t).
    ValidateQubit {
        #[command(flatten)]
        params: QubitArgs,
    },
    /// Classify a grid over the (c, a) square as CSV.
    Region {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Minimal output entropy of a qubit map or a channel file.
    Moe {
        #[command(flatten)]
        params: QubitArgs,
        /// Superoperator in the JSON matrix format.
        #[arg(long, conflicts_with_all = ["a", "c", "rate_a", "gamma", "tau1", "tau3", "w_eq", "t"])]
        channel: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MoeMode::Both)]
        mode: MoeMode,
        #[arg(long, value_enum, default_value_t = Base::Two)]
        base: Base,
        /// Scan a grid×grid lattice at fixed p and emit CSV.
        #[arg(long, requires = "p")]
        scan: bool,
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
    /// Bloch data of the relaxation semigroup at the given times, as CSV.
    Evolve {
        #[arg(long)]
        tau1: f64,
        #[arg(long)]
        tau3: f64,
        #[arg(long = "w-eq", allow_negative_numbers = true)]
        w_eq: f64,
        /// Comma or space separated times.
        #[arg(long)]
        times: String,
        #[arg(long, value_enum, default_value_t = Base::Two)]
        base: Base,
    },
    /// Check a qutrit case file.
    ValidateQutrit { file: PathBuf },
    /// Logarithm of the stochastic block of a qutrit case file.
    LogStochastic { file: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DAVIESKIT_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(commands::Outcome::Valid) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Invalid) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
