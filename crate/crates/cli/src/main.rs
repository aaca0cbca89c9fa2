//! `ricciwalk`: batch runner for Brownian motion under evolving metrics.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ricciwalk_core::explosion::{self, DriftSpec};
use ricciwalk_core::verification::{self, Suite};

use config::ValidationError;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CONTRACT: u8 = 3;

#[derive(Parser)]
#[command(name = "ricciwalk", version, about = "Brownian motion under time-dependent Riemannian metrics")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "RICCIWALK_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses of an experiment config and write its artifacts.
    Run { config: PathBuf },
    /// Run the acceptance criteria: `fast` or `full`.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 20_261_019)]
        seed: u64,
    },
    /// Feller test (and optional 1D simulation) for a catalog drift.
    Feller(FellerArgs),
    /// Print the comparison constants of an experiment config.
    Constants { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum DriftName {
    Zero,
    Constant,
    Bessel,
    Coth,
    Linear,
    Power,
    Square,
}

#[derive(clap::Args)]
struct FellerArgs {
    #[arg(long, value_enum)]
    drift: DriftName,
    /// Dimension for `bessel` and `coth`.
    #[arg(long, default_value_t = 3.0)]
    dim: f64,
    /// Coefficient for `constant`, `linear` and `power`.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Exponent for `power`.
    #[arg(long, default_value_t = 1.5)]
    p: f64,
    /// Curvature scale for `coth`.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    y_ref: f64,
    #[arg(long, default_value_t = 1e6)]
    y_max: f64,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// Also simulate this many 1D paths from `y0`.
    #[arg(long, default_value_t = 0)]
    simulate: usize,
    #[arg(long, default_value_t = 2.0)]
    y0: f64,
    #[arg(long, default_value_t = 5.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl FellerArgs {
    fn drift(&self) -> DriftSpec {
        match self.drift {
            DriftName::Zero => DriftSpec::Zero,
            DriftName::Constant => DriftSpec::Constant { c: self.c },
            DriftName::Bessel => DriftSpec::Bessel { dim: self.dim },
            DriftName::Coth => DriftSpec::Coth { dim: self.dim, k: self.k },
            DriftName::Linear => DriftSpec::Linear { c: self.c },
            DriftName::Power => DriftSpec::Power { c: self.c, p: self.p },
            DriftName::Square => DriftSpec::Power { c: self.c, p: 2.0 },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} worker threads: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationError>().is_some() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn execute(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run { config } => {
            let exp = config::load(&config)?;
            let (outcome, report) = run::run(&exp)?;
            print!("{report}");
            match outcome {
                run::Outcome::Ok => Ok(ExitCode::SUCCESS),
                run::Outcome::ContractViolation(v) => {
                    for line in v {
                        eprintln!("contract violation: {line}");
                    }
                    Ok(ExitCode::from(EXIT_CONTRACT))
                }
            }
        }
        Command::Verify { suite, seed } => {
            let Some(suite) = Suite::parse(&suite) else {
                eprintln!("error: unknown suite `{suite}`; expected `fast` or `full`");
                return Ok(ExitCode::from(EXIT_VALIDATION));
            };
            let mut failed = 0;
            for id in suite.criteria() {
                let r = verification::run_criterion(*id, seed);
                println!("{}", r.line());
                for d in &r.details {
                    println!("    {d}");
                }
                failed += usize::from(!r.passed);
            }
            println!("{} of {} criteria passed", suite.criteria().len() - failed, suite.criteria().len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CONTRACT) })
        }
        Command::Feller(args) => {
            let drift = args.drift();
            let v = explosion::feller_test(&drift, args.y_ref, args.y_max, args.tol)
                .map_err(|e| ValidationError(e.to_string()))?;
            println!("drift = {drift:?}");
            println!("classification = {}", v.classification.label());
            println!("feller_value = {}", output::float(v.feller_value));
            println!("cutoff = {}", output::float(v.cutoff));
            println!("tail_exponent = {}", output::float(v.tail_exponent));
            println!("tail_bound = {}", output::float(v.tail_bound));
            if args.simulate > 0 {
                let e = explosion::simulate_1d_ensemble(&drift, args.y0, args.horizon, args.step, args.simulate, args.seed, explosion::default_y_max(args.y0));
                println!("simulated_explosion_fraction = {}", output::float(e.explosion_fraction()));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants { config } => {
            let exp = config::load(&config)?;
            let profile = run::profile(&exp)?;
            for (k, v) in profile.report_lines() {
                println!("{k} = {v}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
