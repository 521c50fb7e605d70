use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use secmeas_core::config::{json_matrix, JsonComplex, RunConfig};
use secmeas_core::pipeline::{run_pipeline, verify, Pipeline};
use secmeas_core::report::{emit_report, Residual, RunReport};
use secmeas_core::sim::{attack_sim, AttackStrategy};
use secmeas_core::Error;

const EXIT_RESIDUAL: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "secmeas", version, about = "Secure optimal inconclusive measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline with exact checks and Monte Carlo sampling.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Leakage of a coalition of observers measuring their joint state.
    Attack {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated observer indices, e.g. `0,1`.
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<usize>,
        /// `random` or `file:<path>` holding a unitary as `[[[re, im]]]` rows.
        #[arg(long, default_value = "random")]
        strategy: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact checks only.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(report) => {
            print_summary(&report);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_RESIDUAL)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<RunReport, Error> {
    match command {
        Command::Run {
            config,
            out,
            trials,
            seed,
            tolerance,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            if let Some(t) = tolerance {
                cfg.tolerance = t;
            }
            cfg.validate()?;
            let report = run_pipeline(&cfg)?;
            write(&report, out.or(cfg.out.clone()))?;
            Ok(report)
        }
        Command::Attack {
            config,
            subset,
            strategy,
            out,
            trials,
            seed,
        } => {
            let cfg = RunConfig::load(&config)?;
            let strategy = parse_strategy(&strategy)?;
            let pipeline = Pipeline::build(&cfg)?;
            let (exact, mut residuals) = pipeline.exact()?;
            let attack = attack_sim(
                &pipeline,
                &subset,
                &strategy,
                trials.unwrap_or(cfg.trials),
                seed.unwrap_or(cfg.rng_seed),
            )?;
            residuals.insert("attack_leakage".to_string(), Residual::new(attack.exact_tv, cfg.tolerance));
            let report = RunReport {
                exact,
                monte_carlo: None,
                attack: Some(attack),
                residuals,
                meta: pipeline.meta(),
            };
            write(&report, out.or(cfg.out.clone()))?;
            Ok(report)
        }
        Command::Verify { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let report = verify(&cfg)?;
            write(&report, out)?;
            Ok(report)
        }
    }
}

fn parse_strategy(spec: &str) -> Result<AttackStrategy, Error> {
    if spec == "random" {
        return Ok(AttackStrategy::Random);
    }
    let Some(path) = spec.strip_prefix("file:") else {
        return Err(Error::Config(format!("unknown strategy {spec:?}; use random or file:<path>")));
    };
    let path = Path::new(path);
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let rows: Vec<Vec<JsonComplex>> = serde_json::from_str(&text).map_err(|source| Error::Serde {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(AttackStrategy::Basis(json_matrix(&rows)?))
}

fn write(report: &RunReport, out: Option<PathBuf>) -> Result<(), Error> {
    if let Some(dir) = out {
        let paths = emit_report(report, &dir)?;
        println!("report: {}", paths.json.display());
    }
    Ok(())
}

fn print_summary(report: &RunReport) {
    let e = &report.exact;
    println!(
        "messages {}  rank {}  observers {}  composite {}",
        e.messages, e.rank, e.observers, e.composite_dim
    );
    println!(
        "failure target {:.6}  achieved {:.6}  threshold {:.6}",
        e.p_target, e.p_achieved, e.unamb_threshold
    );
    println!("preprocessing {:?}", e.preprocessing);
    println!("correct {:.10}  failure {:.10}", e.avg_correct, e.avg_failure);
    if let Some(mc) = &report.monte_carlo {
        println!("monte carlo: {} trials, max deviation {:.2} sigma", mc.trials, mc.max_sigma);
    }
    if let Some(a) = &report.attack {
        println!("attack {:?} ({}): exact tv {:.3e}", a.subset, a.strategy, a.exact_tv);
    }
    for (name, r) in &report.residuals {
        let status = if r.pass { "ok" } else { "FAIL" };
        println!("{name:<16} {:.3e} <= {:.1e}  {status}", r.value, r.tolerance);
    }
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
}
