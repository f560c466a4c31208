use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tomo::cli::{self, Method, OptimizerConfig, RunConfig};
use tomo::sim::ChannelKind;
use tomo::{Result, TomoError};

#[derive(Parser)]
#[command(
    name = "tomo",
    version,
    about = "Density-matrix tomography from Pauli expectation data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write expectation data for a named state or a matrix file.
    Simulate {
        #[arg(long)]
        state: String,
        /// Qubit count for states that accept one (zero).
        #[arg(long)]
        qubits: Option<usize>,
        /// Gaussian noise standard deviation. 0 writes exact values.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a density matrix from an expectation file.
    Reconstruct {
        input: PathBuf,
        #[arg(long, default_value = "mle")]
        method: Method,
        /// Named state or matrix file to compare against.
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        /// Matrix output path. The report goes next to it as .json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a matrix file.
    Metrics {
        input: PathBuf,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entanglement decay under a decoherence channel, as CSV.
    Decay {
        #[arg(long, default_value = "bell-phi+")]
        state: String,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "dephasing")]
        channel: ChannelKind,
        /// Decay rate in 1/s.
        #[arg(long, default_value_t = cli::DEFAULT_RATE)]
        rate: f64,
        /// `start:step:stop` or a comma-separated list, in seconds.
        #[arg(long, default_value = "0:0.04:0.16")]
        times: String,
        /// Monte-Carlo trials averaged per time point.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    gtol: Option<f64>,
    #[arg(long)]
    xtol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Diagonal shift for the initial-guess factorization.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        OptimizerConfig {
            gtol: self.gtol.unwrap_or(d.gtol),
            xtol: self.xtol.unwrap_or(d.xtol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            state,
            qubits,
            sigma,
            seed,
            out,
        } => {
            let cfg = RunConfig {
                state: Some(state),
                qubits,
                sigma,
                seed,
                out: out.clone(),
                ..RunConfig::new("simulate")
            };
            emit(out.as_ref(), &cli::cmd_simulate(&cfg)?.format())
        }
        Command::Reconstruct {
            input,
            method,
            target,
            optimizer,
            out,
        } => {
            let cfg = RunConfig {
                input: Some(input.clone()),
                method,
                target,
                optimizer: optimizer.config(),
                out: out.clone(),
                ..RunConfig::new("reconstruct")
            };
            cfg.validate()?;
            let file = cli::read_expectations(&input)?;
            let cfg = RunConfig {
                seed: file
                    .meta_value("seed")
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(0),
                sigma: file
                    .meta_value("sigma")
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(0.0),
                ..cfg
            };
            let outcome = cli::cmd_reconstruct(&file, &cfg)?;
            match &out {
                Some(p) => {
                    outcome.write(p)?;
                }
                None => print!("{}", outcome.matrix_file().format()),
            }
            eprint!("{}", outcome.report.to_json());
            match outcome.fit {
                Some(fit) if outcome.did_not_converge => Err(TomoError::DidNotConverge {
                    gradient_norm: fit.gradient_norm,
                    result: Box::new(fit),
                }),
                _ => Ok(()),
            }
        }
        Command::Metrics { input, target, out } => {
            let cfg = RunConfig {
                input: Some(input.clone()),
                target,
                out: out.clone(),
                ..RunConfig::new("metrics")
            };
            cfg.validate()?;
            let m = cli::read_matrix(&input)?;
            emit(out.as_ref(), &cli::cmd_metrics(&m.matrix, &cfg)?.to_json())
        }
        Command::Decay {
            state,
            sigma,
            seed,
            channel,
            rate,
            times,
            trials,
            optimizer,
            out,
        } => {
            let cfg = RunConfig {
                state: Some(state),
                sigma,
                seed,
                channel,
                rate,
                times: cli::parse_times(&times)?,
                trials,
                optimizer: optimizer.config(),
                out: out.clone(),
                ..RunConfig::new("decay")
            };
            emit(out.as_ref(), &cli::cmd_decay(&cfg)?.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
