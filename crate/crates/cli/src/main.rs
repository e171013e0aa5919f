use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use gsbf_core::harness::{
    self, format_summary, load_config, read_records, run_trials, summarize, write_summary,
    ExperimentConfig, Method, TrialRecord, TrialStatus, RECORDS_FILE, SUMMARY_FILE,
};
use gsbf_core::Error;

const PARTIAL_RECORDS: &str = "records.partial.csv";
const RESOLVED_CONFIG: &str = "config.toml";
const ORACLE_SLACK_W: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "gsbf", version, about = "Task selection and group sparse beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials over the SINR sweep and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed; trial j uses seed + j.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of logsum, mixed_l12, cb, oracle.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Print and write summary tables for a results directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Check every heuristic against exhaustive search on small instances.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Process outcome, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Ok = 0,
    Infeasible = 1,
    Internal = 2,
}

fn outcome_of(records: &[TrialRecord]) -> Outcome {
    records
        .iter()
        .map(|r| match r.status {
            TrialStatus::Ok => Outcome::Ok,
            TrialStatus::Infeasible => Outcome::Infeasible,
            TrialStatus::Invalid | TrialStatus::Failed => Outcome::Internal,
        })
        .max()
        .unwrap_or(Outcome::Ok)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(
    config: &Path,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    methods: Option<Vec<Method>>,
) -> Result<Outcome, Error> {
    let mut cfg = load_config(config)?;
    if let Some(t) = trials {
        cfg.experiment.trials = t;
    }
    if let Some(s) = seed {
        cfg.experiment.base_seed = s;
    }
    if let Some(o) = out {
        cfg.experiment.output_dir = o;
    }
    if let Some(m) = methods {
        cfg.experiment.methods = m;
    }
    cfg.validate()?;

    let dir = cfg.experiment.output_dir.clone();
    fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let resolved = dir.join(RESOLVED_CONFIG);
    fs::write(&resolved, cfg.to_toml_string()).map_err(io_error(&resolved))?;

    let partial = dir.join(PARTIAL_RECORDS);
    let writer = csv::Writer::from_path(&partial).map_err(|source| Error::Csv {
        path: partial.clone(),
        source,
    })?;
    let writer = Mutex::new(writer);
    let outcomes = run_trials(&cfg, |record| {
        let mut w = writer.lock().expect("record writer poisoned");
        if w.serialize(record).and_then(|_| Ok(w.flush()?)).is_err() {
            log::warn!("could not append to {}", partial.display());
        }
    })?;
    drop(writer);

    harness::export(&outcomes, &dir)?;
    fs::remove_file(&partial).map_err(io_error(&partial))?;
    let records: Vec<TrialRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let rows = summarize(&records);
    write_summary(&dir.join(SUMMARY_FILE), &rows)?;
    print!("{}", format_summary(&rows));
    println!("results written to {}", dir.display());
    Ok(outcome_of(&records))
}

fn summarize_dir(input: &Path) -> Result<Outcome, Error> {
    let records = read_records(&input.join(RECORDS_FILE))?;
    let rows = summarize(&records);
    write_summary(&input.join(SUMMARY_FILE), &rows)?;
    print!("{}", format_summary(&rows));
    Ok(Outcome::Ok)
}

fn oracle_check(config: &Path) -> Result<Outcome, Error> {
    let mut cfg: ExperimentConfig = load_config(config)?;
    let mut methods: Vec<Method> = cfg
        .experiment
        .methods
        .iter()
        .copied()
        .filter(|m| *m != Method::Oracle)
        .collect();
    if methods.is_empty() {
        methods = vec![Method::Logsum, Method::MixedL12, Method::Cb];
    }
    methods.push(Method::Oracle);
    cfg.experiment.methods = methods;
    cfg.validate()?;

    let records: Vec<TrialRecord> = run_trials(&cfg, |_| {})?
        .into_iter()
        .map(|o| o.record)
        .collect();
    let mut outcome = outcome_of(&records);
    let mut violations = 0;
    for oracle in records.iter().filter(|r| r.method == Method::Oracle) {
        let Some(best) = oracle.total_w else { continue };
        for r in records.iter().filter(|r| {
            r.method != Method::Oracle && r.seed == oracle.seed && r.sinr_db == oracle.sinr_db
        }) {
            let Some(total) = r.total_w else { continue };
            let ok = best <= total + ORACLE_SLACK_W;
            if !ok {
                violations += 1;
            }
            println!(
                "{} seed {:>4} sinr {:>6.2} dB {:<10} {:>12.6} W  oracle {:>12.6} W  gap {:>10.3e}",
                if ok { "ok  " } else { "FAIL" },
                r.seed,
                r.sinr_db,
                r.method.as_str(),
                total,
                best,
                total - best,
            );
        }
    }
    println!("{violations} oracle bound violations");
    if violations > 0 {
        outcome = Outcome::Internal;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            trials,
            seed,
            out,
            methods,
        } => run(&config, trials, seed, out, methods),
        Command::Summarize { input } => summarize_dir(&input),
        Command::OracleCheck { config } => oracle_check(&config),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Outcome::Internal as u8)
        }
    }
}
