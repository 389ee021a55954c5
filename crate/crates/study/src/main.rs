use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use raftsan::raft::ClusterConfig;
use raftsan_study::{
    run_study, Format, StudyError, StudyId, StudySpec, DEFAULT_EPS, DEFAULT_RUNS, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(name = "study", version, about = "Run predefined RAFT cluster studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one study and write its result table.
    Run {
        /// Study id, e.g. `S1-cdf-by-cluster-size` or `S1`.
        id: String,
        /// `key=value` configuration file applied on top of the table2 preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Total uniformization truncation error.
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        max_states: Option<usize>,
        /// Replications for simulation-based columns.
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        /// Extra `key=value` overrides applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the available studies.
    List,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), StudyError> {
    match command {
        Command::List => {
            let mut out = io::stdout().lock();
            for id in StudyId::ALL {
                writeln!(out, "{:<26}{}", id.name(), id.description())
                    .map_err(|e| StudyError::Table(e.into()))?;
            }
            Ok(())
        }
        Command::Run {
            id,
            config,
            out,
            format,
            seed,
            eps,
            max_states,
            runs,
            overrides,
        } => {
            let id: StudyId = id.parse()?;
            let mut spec = StudySpec::new(id);
            spec.config = match &config {
                Some(path) => ClusterConfig::from_file(path)?,
                None => ClusterConfig::table2(),
            };
            let pairs = overrides
                .iter()
                .map(|o| {
                    o.split_once('=').ok_or_else(|| {
                        StudyError::InvalidSetting(format!("--set `{o}` is not KEY=VALUE"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            spec = spec.with_overrides(pairs)?;
            spec.output = out;
            spec.seed = seed;
            spec.eps = eps;
            spec.runs = runs;
            if let Some(n) = max_states {
                spec.max_states = n;
            }
            let table = run_study(&spec)?;
            match &spec.output {
                Some(path) => table.emit(format, path)?,
                None => io::stdout()
                    .lock()
                    .write_all(table.render(format)?.as_bytes())
                    .map_err(|e| StudyError::Table(e.into()))?,
            }
            Ok(())
        }
    }
}
