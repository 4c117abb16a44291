use clap::{Parser, Subcommand};
use pucci_core::lab::{self, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pucci-lab", version, about = "Run numerical checks of nonlocal Pucci operators on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV and JSON reports.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    /// Overrides `seeds.base` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Volume growth, doubling and comparability constants.
    GeometryReport(RunArgs),
    /// Truncated second moment of the kernel across sigma.
    Integrability(RunArgs),
    /// Barrier supersolution checks.
    BarrierVerify(RunArgs),
    /// Discrete ABP estimate with envelope, contact set and cube cover.
    Abp(RunArgs),
    /// Convergence to half the Laplace-Beltrami operator as sigma -> 2.
    SigmaLimit(RunArgs),
    /// Harnack quotients on the test family.
    Harnack(RunArgs),
    /// Oscillation decay and Hoelder ratios.
    Hoelder(RunArgs),
    /// Decay in measure of super-level sets.
    MeasureDecay(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::GeometryReport(a) => ("geometry-report", a),
            Command::Integrability(a) => ("integrability", a),
            Command::BarrierVerify(a) => ("barrier-verify", a),
            Command::Abp(a) => ("abp", a),
            Command::SigmaLimit(a) => ("sigma-limit", a),
            Command::Harnack(a) => ("harnack", a),
            Command::Hoelder(a) => ("hoelder", a),
            Command::MeasureDecay(a) => ("measure-decay", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = ExperimentConfig::load(&args.config)
        .and_then(|cfg| lab::run(name, &cfg, args.seed))
        .and_then(|report| report.write(&args.out).map(|paths| (report, paths)));
    match result {
        Ok((report, (csv, json))) => {
            let failed = report.rows.iter().filter(|r| !r.pass).count();
            println!("{name}: {} checks, {failed} failed", report.rows.len());
            println!("wrote {} and {}", csv.display(), json.display());
            if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
