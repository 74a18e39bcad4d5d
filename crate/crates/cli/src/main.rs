use clap::{Args, Parser, Subcommand, ValueEnum};
use fairmix_cli::{
    cmd_audit, cmd_compare, cmd_synth, cmd_validate, load_config, CliError, Precision, SEED_ENV,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fairmix",
    version,
    about = "Fairness audits and MixFeat debiasing for multimodal tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration, or a report.json to rerun its embedded config.
    #[arg(short, long)]
    config: PathBuf,
    /// Override one key, e.g. `--set fusion.strategy=vote_soft`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::F64)]
    precision: PrecisionArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate one configuration and write its report.
    Audit(ConfigArgs),
    /// Run the no-augmentation, oversampling and MixFeat arms side by side.
    Compare {
        #[command(flatten)]
        args: ConfigArgs,
        /// Run the arms one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Write a synthetic dataset as manifest + CSV.
    Synth {
        #[arg(short, long)]
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check a configuration and its data source without training.
    Validate(ConfigArgs),
}

impl ConfigArgs {
    fn load(&self) -> Result<(fairmix::PipelineConfig, Precision), CliError> {
        let seed = std::env::var(SEED_ENV).ok();
        let config = load_config(&self.config, &self.overrides, seed.as_deref())?;
        let precision = match self.precision {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        };
        Ok((config, precision))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Audit(args) => {
            let (config, precision) = args.load()?;
            let (report, out) = cmd_audit(&config, precision)?;
            print!("{}", fairmix::eval::report_markdown(&report));
            eprintln!("wrote {}", out.report_json.display());
        }
        Command::Compare { args, sequential } => {
            let (config, precision) = args.load()?;
            let (report, out) = cmd_compare(&config, precision, !sequential)?;
            let arms: Vec<_> = report.arms.iter().collect();
            print!("{}", fairmix::eval::compare_markdown(&arms));
            eprintln!("wrote {}", out.report_json.display());
        }
        Command::Synth { spec, out } => {
            let manifest = cmd_synth(&spec, &out)?;
            println!("{}", manifest.display());
        }
        Command::Validate(args) => {
            let (config, _) = args.load()?;
            println!("{}", cmd_validate(&config)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairmix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
