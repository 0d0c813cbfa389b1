use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ctgauss::config::{ExperimentConfig, Kind};
use ctgauss::output::write_record;
use ctgauss::{batch, exit, kinds, CliError};

#[derive(Parser)]
#[command(name = "ctgauss", about = "Continuous-time Gaussian channel experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment listed in a suite file.
    Batch {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Emit information quantities in bits instead of nats.
        #[arg(long)]
        bits: bool,
    },
    /// Run one experiment: `ctgauss <kind> --config <file>`.
    #[command(external_subcommand)]
    Experiment(Vec<String>),
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct ExperimentArgs {
    kind: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    bits: bool,
    /// Only validate the config and list its problems.
    #[arg(long)]
    check: bool,
}

fn run_one(args: ExperimentArgs) -> Result<u8, CliError> {
    let Some(kind) = Kind::parse(&args.kind) else {
        let known: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
        return Err(CliError::Validation(vec![format!(
            "unknown experiment kind `{}` (expected one of: {})",
            args.kind,
            known.join(", ")
        )]));
    };
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != kind {
        return Err(CliError::Validation(vec![format!(
            "kind: config declares `{}` but the command is `{kind}`",
            cfg.kind
        )]));
    }
    if args.check {
        let problems = kinds::validate(&cfg);
        if problems.is_empty() {
            println!("ok");
            return Ok(exit::SUCCESS);
        }
        return Err(CliError::Validation(problems));
    }
    let mut rec = kinds::run(&cfg)?;
    if args.bits {
        rec = rec.into_bits();
    }
    for p in write_record(&rec, &args.out)? {
        println!("{}", p.display());
    }
    eprintln!("{} {:.2}s", rec.id, rec.wall_clock_seconds);
    for v in rec.verdicts.iter().filter(|v| !v.passed) {
        eprintln!("FAIL {}: {} ({})", v.name, v.value, v.detail);
    }
    Ok(if rec.passed() { exit::SUCCESS } else { exit::TOLERANCE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Batch { suite, out, bits } => batch::run_suite(&suite, &out, bits).map(|report| {
            for e in &report.entries {
                if let Err(err) = &e.result {
                    eprintln!("{}: {err}", e.config.display());
                }
            }
            print!("{}", report.summary_csv());
            report.exit_code()
        }),
        Command::Experiment(raw) => match ExperimentArgs::try_parse_from(raw) {
            Ok(args) => run_one(args),
            Err(e) => {
                let _ = e.print();
                return ExitCode::from(if e.use_stderr() { exit::VALIDATION } else { exit::SUCCESS });
            }
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
