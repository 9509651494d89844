use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use reldim::cli::{exit_code, parse_config, run, Command, Figure, RunConfig};
use reldim::{Error, Result};

/// Intrinsic and relative intrinsic dimension: analytic values, Monte Carlo
/// estimates, learning simulations and figure tables.
#[derive(Parser)]
#[command(name = "reldim", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Separability probability f_theta(d) of the unit ball
    Fprob(Opts),
    /// Monte Carlo intrinsic dimension of U(B_d), or of points in a CSV file
    Dim(Opts),
    /// Relative dimension of the two-ball pair
    RelativeDim(Opts),
    /// Accuracy of the midpoint classifier for two unit balls
    TwoBall(Opts),
    /// Few-shot learning simulation with its bounds
    LearnSim(Opts),
    /// Intrinsic dimension under polynomial feature maps, by degree
    PolyDim(Opts),
    /// Figure tables: 2, 3 or 5
    Figure {
        name: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// key = value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Monte Carlo pairs
    #[arg(long)]
    samples: Option<String>,
    /// Quadrature tolerance
    #[arg(long)]
    tol: Option<String>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<String>,
    /// Grid, as a comma list or start:stop:step
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    deg_max: Option<String>,
    #[arg(long)]
    bias: Option<String>,
    /// Dimension (a list where the command sweeps it)
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    k_train: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    confidence: Option<String>,
    /// xy or yx
    #[arg(long)]
    pair: Option<String>,
    /// Centre for learn-sim: x or y
    #[arg(long)]
    centre: Option<String>,
    /// Points CSV for dim
    #[arg(long)]
    input: Option<String>,
}

impl Opts {
    fn flags(&self) -> Vec<(String, String)> {
        let all = [
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("tol", &self.tol),
            ("out", &self.out),
            ("grid", &self.grid),
            ("deg_max", &self.deg_max),
            ("bias", &self.bias),
            ("d", &self.d),
            ("eps", &self.eps),
            ("theta", &self.theta),
            ("k_train", &self.k_train),
            ("trials", &self.trials),
            ("confidence", &self.confidence),
            ("pair", &self.pair),
            ("centre", &self.centre),
            ("input", &self.input),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (command, opts) = match cli.command {
        Cmd::Fprob(o) => (Command::Fprob, o),
        Cmd::Dim(o) => (Command::Dim, o),
        Cmd::RelativeDim(o) => (Command::RelativeDim, o),
        Cmd::TwoBall(o) => (Command::TwoBall, o),
        Cmd::LearnSim(o) => (Command::LearnSim, o),
        Cmd::PolyDim(o) => (Command::PolyDim, o),
        Cmd::Figure { name, opts } => (Command::Figure(name.parse::<Figure>()?), opts),
    };
    let file = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let config = RunConfig::new(command, file, opts.flags())?;
    let output = run(&config)?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
        .to_string();
    match config.out() {
        Some(path) => {
            let file =
                std::fs::File::create(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            output.write_to(std::io::BufWriter::new(file), &stamp)
        }
        None => output.write_to(std::io::stdout().lock(), &stamp),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
