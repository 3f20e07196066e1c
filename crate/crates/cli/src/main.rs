use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use encounter_core::arm::{ik_round_trip, DhTable, IkConfig, JointLimits};
use encounter_core::harness::{
    emit_report, parse_results_json, run_experiment, run_replay, Execution, ExperimentConfig, HarnessError, RenderMode,
    ReplayOptions, Scenario, TransportKind,
};

#[derive(Parser)]
#[command(name = "encounter", version, about = "Encountered-type haptics simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Link {
    /// In-process simulated link.
    Sim,
    /// Loopback TCP socket carrying the same wire protocol.
    Tcp,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario through the closed loop and write its logs.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        /// Directory for commands.ndjson, twin.ndjson and metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-tick trace.ndjson.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum)]
        link: Option<Link>,
    },
    /// Run the platform-length experiment.
    Experiment {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = encounter_core::harness::DEFAULT_LENGTHS)]
        lengths: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// haptic or visual_only
        #[arg(long, default_value = "haptic")]
        mode: String,
        /// Directory for results.json, report.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run trials one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
        #[arg(long, value_enum)]
        link: Option<Link>,
    },
    /// Check IK against FK on random configurations of a DH table.
    IkCheck {
        /// JSON array of six rows {a, d, alpha, theta_offset}.
        #[arg(long)]
        dh: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Turn a results JSON file into a CSV table and print the summary.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::File(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path, link: Option<Link>) -> Result<(Scenario, PathBuf), HarnessError> {
    let mut scenario = Scenario::load(path)?;
    if let Some(link) = link {
        scenario.transport = match link {
            Link::Sim => TransportKind::Sim,
            Link::Tcp => TransportKind::Tcp,
        };
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((scenario, base))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Replay {
            scenario,
            out,
            trace,
            link,
        } => {
            let (scenario, base) = load_scenario(&scenario, link)?;
            let output = run_replay(&scenario, &base, ReplayOptions { trace })?;
            if let Some(dir) = out {
                output.write_to(&dir)?;
            }
            println!("{}", output.metrics.to_json());
        }
        Command::Experiment {
            scenario,
            lengths,
            trials,
            mode,
            out,
            sequential,
            link,
        } => {
            let (template, _) = load_scenario(&scenario, link)?;
            let mode: RenderMode = mode.parse()?;
            let mut cfg = ExperimentConfig::new(lengths, trials, mode);
            if sequential {
                cfg.execution = Execution::Sequential;
            }
            let results = run_experiment(&template, &cfg)?;
            let (csv, summary) = emit_report(&results)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Runtime(e.to_string()))?;
                let json = serde_json::to_string_pretty(&results).expect("results serialize");
                write(&dir.join("results.json"), &json)?;
                write(&dir.join("report.csv"), &csv)?;
                write(&dir.join("summary.json"), &summary.to_json())?;
            }
            println!("{}", summary.to_json());
        }
        Command::IkCheck { dh, samples, seed } => {
            let table: DhTable = serde_json::from_str(&read(&dh)?)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", dh.display())))?;
            table.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            let check = ik_round_trip(
                &table,
                &JointLimits::default(),
                &IkConfig::default(),
                samples,
                0.2,
                seed,
            );
            println!("{}", serde_json::to_string_pretty(&check).expect("check serializes"));
        }
        Command::Report { input, out } => {
            let results = parse_results_json(&read(&input)?)?;
            let (csv, summary) = emit_report(&results)?;
            write(&out, &csv)?;
            println!("{}", summary.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
