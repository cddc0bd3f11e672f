//! The three subcommands as library functions.

use std::fs;
use std::path::{Path, PathBuf};

use activeview_core::pipeline::{run, write_run, PipelineRun};
use activeview_core::scene::{write_cloud, CloudFormat};
use activeview_core::synth::{generate, SceneKind, SynthParams};

use crate::error::CliError;
use crate::report::{csv_row, summarize, RunReport, StrategySummary, CSV_HEADER};
use crate::scenario::{AttentionConfig, GroundTruth, LoadedScenario, ProviderKind, Scenario, StrategyName};

pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub provider: Option<ProviderKind>,
    pub seed: Option<u64>,
    pub strategy: Option<StrategyName>,
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Runs one scenario; writes the run directory when `opts.out` is set.
pub fn run_scenario(loaded: &LoadedScenario, opts: &RunOptions) -> Result<(RunReport, PipelineRun<f64>), CliError> {
    let s = &loaded.scenario;
    let seed = opts.seed.unwrap_or(s.seed);
    let mut config = s.config.clone();
    config.strategy = opts.strategy.unwrap_or(s.strategy).with_seed(seed);
    let provider = s.provider(opts.provider.unwrap_or(s.attention.provider))?;
    let hints = s.ground_truth.map(|g| g.hints()).unwrap_or_default();
    let result = run(&loaded.cloud, &config, provider.as_ref(), &hints)?;
    let report = RunReport::new(&loaded.id, seed, &result, s.ground_truth.as_ref());
    if let Some(dir) = &opts.out {
        write_run(dir, &result).map_err(|e| output_err(dir, e))?;
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_vec_pretty(&report).expect("report serializes"))
            .map_err(|e| output_err(&path, e))?;
    }
    Ok((report, result))
}

pub struct Comparison {
    pub csv: String,
    pub summaries: Vec<StrategySummary>,
    pub reports: Vec<RunReport>,
}

/// Runs each strategy on one scenario. The random strategy runs `trials`
/// times with seeds `seed, seed + 1, ...`; active and fixed are
/// deterministic and run once.
pub fn compare_strategies(
    loaded: &LoadedScenario,
    strategies: &[StrategyName],
    trials: usize,
    provider: Option<ProviderKind>,
) -> Result<Comparison, CliError> {
    if loaded.scenario.ground_truth.is_none() {
        return Err(CliError::Input("compare needs [ground_truth] in the scenario".into()));
    }
    if strategies.is_empty() || trials == 0 {
        return Err(CliError::Input(
            "compare needs at least one strategy and one trial".into(),
        ));
    }
    let mut csv = format!("{CSV_HEADER}\n");
    let mut summaries = Vec::new();
    let mut all = Vec::new();
    for &strategy in strategies {
        let runs = if strategy == StrategyName::Random { trials } else { 1 };
        let mut reports = Vec::with_capacity(runs);
        for trial in 0..runs {
            let opts = RunOptions {
                out: None,
                provider,
                seed: Some(loaded.scenario.seed + trial as u64),
                strategy: Some(strategy),
            };
            let (report, _) = run_scenario(loaded, &opts)?;
            csv.push_str(&csv_row(trial, &report));
            csv.push('\n');
            reports.push(report);
        }
        summaries.push(summarize(strategy.label(), &reports));
        all.extend(reports);
    }
    Ok(Comparison {
        csv,
        summaries,
        reports: all,
    })
}

pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    let csv = dir.join("compare.csv");
    fs::write(&csv, &cmp.csv).map_err(|e| output_err(&csv, e))?;
    let summary = dir.join("summary.json");
    fs::write(
        &summary,
        serde_json::to_vec_pretty(&cmp.summaries).expect("summary serializes"),
    )
    .map_err(|e| output_err(&summary, e))
}

/// Writes `scene.ply`, `scenario.toml` and `ground_truth.json` for a
/// synthetic scene.
pub fn synthesize(kind: SceneKind, seed: u64, params: &SynthParams, out: &Path) -> Result<Scenario, CliError> {
    let scene = generate(kind, seed, params).map_err(|e| CliError::Input(e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| output_err(out, e))?;
    let ply = out.join("scene.ply");
    let file = fs::File::create(&ply).map_err(|e| output_err(&ply, e))?;
    let mut writer = std::io::BufWriter::new(file);
    write_cloud(&scene.cloud, CloudFormat::PlyAscii, &mut writer).map_err(|e| output_err(&ply, e))?;
    std::io::Write::flush(&mut writer).map_err(|e| output_err(&ply, e))?;

    let gt = &scene.ground_truth;
    let ground_truth = GroundTruth {
        target: gt.target,
        euler_deg: gt.action.euler_deg,
        gripper: gt.action.gripper,
        collision: gt.action.collision,
    };
    let mut config = activeview_core::pipeline::PipelineConfig {
        workspace: Some(scene.workspace),
        instruction: "pick up the red ball".into(),
        ..Default::default()
    };
    config.scoring.visibility = scene.visibility;
    let scenario = Scenario {
        id: Some(format!("{}_{seed}", kind.name())),
        scene: PathBuf::from("scene.ply"),
        seed,
        strategy: StrategyName::Active,
        config,
        attention: AttentionConfig {
            oracle: scene.oracle_mode,
            ..AttentionConfig::default()
        },
        ground_truth: Some(ground_truth),
    };
    let toml_path = out.join("scenario.toml");
    fs::write(&toml_path, scenario.to_toml()).map_err(|e| output_err(&toml_path, e))?;
    let gt_path = out.join("ground_truth.json");
    fs::write(
        &gt_path,
        serde_json::to_vec_pretty(gt).expect("ground truth serializes"),
    )
    .map_err(|e| output_err(&gt_path, e))?;
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<LoadedScenario, CliError> {
    Scenario::load(path)
}
