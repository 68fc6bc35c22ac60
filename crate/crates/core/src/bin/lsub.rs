use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lsub_core::catalog;
use lsub_core::cli::{self, Format, RunConfig, Suite};
use lsub_core::geometry::Kappa;

#[derive(Parser)]
#[command(
    name = "lsub",
    version,
    about = "Verify anti-invariant semi-Riemannian submersions from Lorentzian (para)Sasakian manifolds"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites on a catalog entry or a model file.
    Verify(VerifyArgs),
    /// List catalog entries.
    List,
    /// Write a catalog entry as a model file.
    Export {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Structure,
    Submersion,
    Antiinv,
    Lemmas,
    Theorems,
    Decomposition,
    All,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Catalog name (see `lsub list`) or path to a model JSON file.
    input: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    suites: Vec<SuiteArg>,
    #[arg(long, default_value_t = 25)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Factor in d eta(X,Y) = kappa (X eta(Y) - Y eta(X) - eta([X,Y])).
    #[arg(long, default_value_t = 0.5, value_parser = parse_kappa)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Half-dimension n of model-r2n1.
    #[arg(long)]
    n: Option<usize>,
    /// Structure sign of model-r2n1.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
}

fn parse_kappa(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Kappa::from_factor(v)
        .map(|_| v)
        .ok_or_else(|| "kappa must be 0.5 or 1".to_string())
}

fn suites(args: &[SuiteArg]) -> Vec<Suite> {
    if args.contains(&SuiteArg::All) {
        return Suite::ALL.to_vec();
    }
    args.iter()
        .map(|s| match s {
            SuiteArg::Structure => Suite::Structure,
            SuiteArg::Submersion => Suite::Submersion,
            SuiteArg::Antiinv => Suite::Antiinv,
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Theorems => Suite::Theorems,
            SuiteArg::Decomposition => Suite::Decomposition,
            SuiteArg::All => unreachable!(),
        })
        .collect()
}

fn verify(a: VerifyArgs) -> Result<u8, String> {
    let config = RunConfig {
        input: a.input,
        suites: suites(&a.suites),
        samples: a.samples,
        seed: a.seed,
        tol: a.tol,
        kappa: Kappa::from_factor(a.kappa).expect("validated by parser"),
        format: a.format,
        n: a.n,
        epsilon: a.epsilon,
    };
    let report = cli::run(&config).map_err(|e| e.to_string())?;
    let mut body = report.render();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &a.out {
        Some(path) => std::fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{body}"),
    }
    for id in &report.verdict.failed {
        eprintln!("FAIL {id}");
    }
    Ok(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Verify(a) => verify(a),
        Command::List => {
            for e in catalog::ENTRIES {
                println!("{:<18} {}", e.name, e.summary);
            }
            Ok(0)
        }
        Command::Export { name, out } => catalog::document(&name)
            .map_err(|e| e.to_string())
            .and_then(|d| std::fs::write(&out, d.to_json() + "\n").map_err(|e| format!("{}: {e}", out.display())))
            .map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
