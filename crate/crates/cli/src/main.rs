use std::path::PathBuf;
use std::process::ExitCode;

use activeview_cli::commands::{compare_strategies, load, run_scenario, synthesize, write_comparison, RunOptions};
use activeview_cli::scenario::{ProviderKind, StrategyName};
use activeview_cli::CliError;
use activeview_core::synth::{SceneKind, SynthParams};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "activeview",
    version,
    about = "Coarse-to-fine active view selection on point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a scenario and write the run directory.
    Run {
        scenario: PathBuf,
        /// Output directory [default: runs/<scenario id>]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
        /// Overrides the scenario seed (used by the random strategy).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic scene with ground truth and a scenario file.
    Synth {
        /// planted_sphere, occluder_wall or clutter
        kind: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Random points for the clutter scene.
        #[arg(long, default_value_t = 500)]
        clutter_points: usize,
    },
    /// Compare view-selection strategies on one scenario.
    Compare {
        scenario: PathBuf,
        #[arg(long, default_value = "active,random,fixed")]
        strategies: String,
        /// Runs of the random strategy.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
        /// Directory for compare.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            provider,
            seed,
        } => {
            let loaded = load(&scenario)?;
            let out = out.unwrap_or_else(|| PathBuf::from("runs").join(&loaded.id));
            let opts = RunOptions {
                out: Some(out.clone()),
                provider,
                seed,
                strategy: None,
            };
            let (report, _) = run_scenario(&loaded, &opts)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            eprintln!("wrote {}", out.display());
        }
        Command::Synth {
            kind,
            seed,
            out,
            clutter_points,
        } => {
            let kind: SceneKind = kind
                .parse()
                .map_err(|e: activeview_core::Error| CliError::Input(e.to_string()))?;
            let params = SynthParams {
                clutter_points,
                ..SynthParams::default()
            };
            synthesize(kind, seed, &params, &out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Compare {
            scenario,
            strategies,
            trials,
            provider,
            out,
        } => {
            let loaded = load(&scenario)?;
            let strategies = strategies
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<StrategyName>, _>>()?;
            let cmp = compare_strategies(&loaded, &strategies, trials, provider)?;
            print!("{}", cmp.csv);
            for s in &cmp.summaries {
                eprintln!(
                    "{:<7} runs {:>3}  mean error {:.4} m  median {:.4} m  max {:.4} m",
                    s.strategy, s.runs, s.mean_error, s.median_error, s.max_error
                );
            }
            if let Some(dir) = out {
                write_comparison(&dir, &cmp)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("activeview: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
