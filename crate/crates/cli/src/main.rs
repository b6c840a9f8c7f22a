use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sbgnc::config::Units;
use sbgnc::{CliError, RunOptions, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "sbgnc",
    about = "Small-body descent, landing and hop simulations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Replace every phase's integration step, s.
    #[arg(long)]
    dt_override: Option<f64>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            dt_override: self.dt_override,
            quiet: self.quiet,
            width: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured phase.
    Run(Common),
    /// Sample the gravity field.
    Gravity(Common),
    /// Propagate the configured hop launch grid.
    HopBatch {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the config value.
        #[arg(long)]
        width: Option<usize>,
    },
    /// Check a shape model for closure, manifoldness and orientation.
    ValidateMesh {
        path: PathBuf,
        /// Units of the file when it has no units directive.
        #[arg(long, value_parser = parse_units)]
        units: Option<Units>,
    },
    /// Print the toolkit version.
    Version,
}

fn parse_units(s: &str) -> Result<Units, String> {
    match s {
        "m" => Ok(Units::M),
        "km" => Ok(Units::Km),
        other => Err(format!("unknown units `{other}`; expected m or km")),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(c) => match sbgnc::run_scenario(&c.config, &c.options()) {
            Ok(r) => {
                if !c.quiet {
                    eprintln!("wrote {} files to {}", r.files.len(), r.out_dir.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Gravity(c) => match sbgnc::run_gravity(&c.config, &c.options()) {
            Ok(path) => {
                if !c.quiet {
                    eprintln!("wrote {}", path.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::HopBatch { common, width } => {
            let opts = RunOptions {
                width,
                ..common.options()
            };
            match sbgnc::run_hop_batch(&common.config, &opts) {
                Ok(r) => {
                    if !common.quiet {
                        eprintln!("wrote {} files to {}", r.files.len(), r.out_dir.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::ValidateMesh { path, units } => match sbgnc::validate_mesh(&path, units) {
            Ok((report, valid)) => {
                print!("{report}");
                if valid {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => fail(e),
        },
        Command::Version => {
            println!("sbgnc {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
