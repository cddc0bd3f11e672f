//! Per-run reports and strategy comparisons.

use activeview_core::fusion::ActionPrediction;
use activeview_core::pipeline::{PipelineRun, Timings};
use activeview_core::synth::PRNG_ID;
use serde::{Deserialize, Serialize};

use crate::scenario::GroundTruth;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub strategy: String,
    pub provider: String,
    pub seed: u64,
    pub prng: String,
    /// Edge lengths of a coarse voxel, meters.
    pub coarse_voxel: [f64; 3],
    pub coarse_error: Option<f64>,
    pub fine_error: Option<f64>,
    /// Distance from the final translation to the ground-truth target.
    pub localization_error: Option<f64>,
    pub per_axis_error: Option<[f64; 3]>,
    /// Every axis of the error within one coarse voxel edge.
    pub within_one_voxel: Option<bool>,
    /// Candidate ids of the selected fine views, best first.
    pub selected_ids: Vec<usize>,
    /// Share of the selected views whose line of sight to the focus is clear.
    pub selected_visibility_fraction: Option<f64>,
    pub action: ActionPrediction<f64>,
    /// Kept out of `report.json` so reports are byte-stable; written to
    /// `timings.json` instead.
    #[serde(skip)]
    pub timings: Timings,
}

impl RunReport {
    pub fn new(scenario_id: &str, seed: u64, run: &PipelineRun<f64>, ground_truth: Option<&GroundTruth>) -> Self {
        let trace = &run.trace;
        let voxel = run.coarse.volume.voxel_size();
        let fine = trace.fine.as_ref();
        let final_t = run.final_estimate();
        let err = |p: activeview_core::geometry::Vec3<f64>| ground_truth.map(|g| p.distance(g.target));
        let per_axis = ground_truth.map(|g| (final_t - g.target).to_array().map(f64::abs));
        let visibility = fine.map(|f| {
            let selected = f.scoring.candidates.iter().filter(|c| c.selected);
            let (n, vis) = selected.fold((0usize, 0usize), |(n, v), c| (n + 1, v + c.s_vis_raw as usize));
            vis as f64 / n.max(1) as f64
        });
        Self {
            scenario_id: scenario_id.to_owned(),
            strategy: strategy_label(trace.strategy).to_owned(),
            provider: trace.provider.clone(),
            seed,
            prng: PRNG_ID.to_owned(),
            coarse_voxel: voxel.to_array(),
            coarse_error: err(trace.coarse.p_f),
            fine_error: fine.and_then(|f| err(f.estimate)),
            localization_error: err(final_t),
            per_axis_error: per_axis,
            within_one_voxel: per_axis.map(|e| (0..3).all(|a| e[a] <= voxel[a])),
            selected_ids: fine.map(|f| f.selected_ids.clone()).unwrap_or_default(),
            selected_visibility_fraction: visibility,
            action: trace.action,
            timings: run.timings,
        }
    }
}

pub fn strategy_label(s: activeview_core::pipeline::ViewStrategy) -> &'static str {
    use activeview_core::pipeline::ViewStrategy::*;
    match s {
        Active => "active",
        Random { .. } => "random",
        Fixed => "fixed",
    }
}

pub const CSV_HEADER: &str =
    "strategy,trial,seed,localization_error,coarse_error,fine_error,within_one_voxel,selected_visibility_fraction";

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn csv_row(trial: usize, r: &RunReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.strategy,
        trial,
        r.seed,
        opt(r.localization_error),
        opt(r.coarse_error),
        opt(r.fine_error),
        r.within_one_voxel.map(|b| b.to_string()).unwrap_or_default(),
        opt(r.selected_visibility_fraction),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub runs: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub max_error: f64,
    pub within_one_voxel: usize,
    pub mean_visibility_fraction: Option<f64>,
}

pub fn summarize(strategy: &str, reports: &[RunReport]) -> StrategySummary {
    let mut errors: Vec<f64> = reports.iter().filter_map(|r| r.localization_error).collect();
    errors.sort_by(f64::total_cmp);
    let n = errors.len();
    let median = match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => errors[n / 2],
        _ => 0.5 * (errors[n / 2 - 1] + errors[n / 2]),
    };
    let vis: Vec<f64> = reports.iter().filter_map(|r| r.selected_visibility_fraction).collect();
    StrategySummary {
        strategy: strategy.to_owned(),
        runs: reports.len(),
        mean_error: errors.iter().sum::<f64>() / n.max(1) as f64,
        median_error: median,
        max_error: errors.last().copied().unwrap_or(f64::NAN),
        within_one_voxel: reports.iter().filter(|r| r.within_one_voxel == Some(true)).count(),
        mean_visibility_fraction: (!vis.is_empty()).then(|| vis.iter().sum::<f64>() / vis.len() as f64),
    }
}
