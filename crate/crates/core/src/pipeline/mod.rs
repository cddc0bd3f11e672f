//! Two-stage coarse-to-fine localization: three orthographic views find the
//! region of interest, then selected perspective views and a zoomed render
//! around it refine the estimate.

mod config;
mod export;

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{ActionHints, PipelineConfig, ViewStrategy, ZoomMode};
pub use export::write_run;

use crate::attention::{AttentionRequest, Heatmap, HeatmapProvider};
use crate::error::{Error, Result, Stage};
use crate::fusion::{assemble_action, encode_rotation, fuse, ActionPrediction, ScoreVolume};
use crate::geometry::{Aabb, Vec3};
use crate::render::{render_ortho_set, render_perspective, zoom_coverage, MultiChannelImage, OrthoView};
use crate::scalar::Real;
use crate::scene::{PointCloud, SpatialIndex};
use crate::scoring::{
    score_candidates, select_by_order, select_views, select_views_greedy, DiversityMode, ScoringReport, ViewTemplate,
};
use crate::viewsphere::{CameraPose, CandidateSet, Projection};

/// Summary of one rendered and attended view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ViewRecord<T> {
    pub name: String,
    pub pose: CameraPose<T>,
    pub valid_pixels: usize,
    pub heatmap_argmax: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoarseTrace<T> {
    pub workspace: Aabb<T>,
    pub grid_resolution: [usize; 3],
    pub views: Vec<ViewRecord<T>>,
    pub p_f: Vec3<T>,
    pub max_score: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FineTrace<T> {
    pub candidate_radius: T,
    pub scoring: ScoringReport<T>,
    /// Candidate ids in selection order; the first is the zoom basis.
    pub selected_ids: Vec<usize>,
    pub zoom_pose: CameraPose<T>,
    /// Width covered by the zoom render at the focus distance.
    pub zoom_coverage: T,
    pub grid_workspace: Aabb<T>,
    pub grid_resolution: [usize; 3],
    pub views: Vec<ViewRecord<T>>,
    pub estimate: Vec3<T>,
    pub max_score: T,
}

/// Deterministic record of a run; timings live in [`Timings`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StageTrace<T: Real> {
    pub strategy: ViewStrategy,
    pub provider: String,
    pub coarse: CoarseTrace<T>,
    pub fine: Option<FineTrace<T>>,
    pub action: ActionPrediction<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub coarse_ms: f64,
    pub fine_ms: f64,
    pub decode_ms: f64,
}

/// Images, heatmaps and volumes of one stage, kept for export.
#[derive(Clone, Debug)]
pub struct StageArtifacts<T> {
    pub names: Vec<String>,
    pub images: Vec<MultiChannelImage<T>>,
    pub heatmaps: Vec<Heatmap>,
    pub volume: ScoreVolume<T>,
}

#[derive(Clone, Debug)]
pub struct CoarseOutput<T> {
    pub trace: CoarseTrace<T>,
    pub artifacts: StageArtifacts<T>,
}

#[derive(Clone, Debug)]
pub struct FineOutput<T> {
    pub trace: FineTrace<T>,
    pub artifacts: StageArtifacts<T>,
}

#[derive(Clone, Debug)]
pub struct PipelineRun<T: Real> {
    pub trace: StageTrace<T>,
    pub timings: Timings,
    pub coarse: StageArtifacts<T>,
    pub fine: Option<StageArtifacts<T>>,
}

impl<T: Real> PipelineRun<T> {
    pub fn coarse_estimate(&self) -> Vec3<T> {
        self.trace.coarse.p_f
    }

    pub fn final_estimate(&self) -> Vec3<T> {
        self.trace.action.translation
    }
}

fn attend<T: Real, P: HeatmapProvider<T> + ?Sized>(
    provider: &P,
    images: &[MultiChannelImage<T>],
    instruction: &str,
) -> Result<Vec<Heatmap>> {
    let request = AttentionRequest::new(images, instruction)?;
    Ok(provider.heatmaps(&request)?)
}

fn records<T: Real>(names: &[String], images: &[MultiChannelImage<T>], maps: &[Heatmap]) -> Vec<ViewRecord<T>> {
    names
        .iter()
        .zip(images)
        .zip(maps)
        .map(|((name, im), h)| ViewRecord {
            name: name.clone(),
            pose: im.pose,
            valid_pixels: im.valid_count(),
            heatmap_argmax: h.argmax(),
        })
        .collect()
}

/// Renders the orthographic views, fuses their heatmaps over the workspace
/// and returns the best voxel as the region of interest `p_f`.
pub fn coarse_stage<T: Real, P: HeatmapProvider<T> + ?Sized>(
    cloud: &PointCloud<T>,
    config: &PipelineConfig<T>,
    provider: &P,
) -> Result<CoarseOutput<T>> {
    let workspace = config.workspace_for(cloud)?;
    let images = render_ortho_set(cloud, &workspace, config.coarse_image_size, config.render)?;
    let heatmaps = attend(provider, &images, &config.instruction)?;
    let resolution = [config.grid_resolution; 3];
    let views: Vec<_> = images.iter().map(|im| &im.pose).zip(&heatmaps).collect();
    let volume = fuse(workspace, resolution, &views, None, config.sampling)?;
    let names: Vec<String> = OrthoView::ALL.iter().map(|v| v.name().to_owned()).collect();
    let trace = CoarseTrace {
        workspace,
        grid_resolution: resolution,
        views: records(&names, &images, &heatmaps),
        p_f: volume.decode_translation(),
        max_score: volume.max_score(),
    };
    Ok(CoarseOutput {
        trace,
        artifacts: StageArtifacts {
            names,
            images,
            heatmaps,
            volume,
        },
    })
}

/// Odd lattice of voxels centred on `p_f` with the given half extent, cut
/// down to the voxels whose centres lie in `workspace`.
pub fn fine_grid<T: Real>(
    p_f: Vec3<T>,
    half_extent: T,
    resolution: usize,
    workspace: &Aabb<T>,
) -> Result<ScoreVolume<T>> {
    if !(half_extent > T::zero()) || !half_extent.is_finite() {
        return Err(Error::Domain(format!(
            "fine grid half extent {half_extent} must be positive"
        )));
    }
    let n = resolution.max(1) | 1;
    let m = (n / 2) as i64;
    let step = T::lit(2.0) * half_extent / T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..3 {
        let center = |k: i64| p_f[a] + T::lit(k as f64) * step;
        let mut l = ((workspace.min[a] - p_f[a]) / step)
            .ceil()
            .to_i64()
            .unwrap_or(-m)
            .max(-m);
        let mut h = ((workspace.max[a] - p_f[a]) / step)
            .floor()
            .to_i64()
            .unwrap_or(m)
            .min(m);
        while l <= 0 && center(l) < workspace.min[a] {
            l += 1;
        }
        while h >= 0 && center(h) > workspace.max[a] {
            h -= 1;
        }
        lo[a] = l.min(0);
        hi[a] = h.max(0);
    }
    let corner = |k: [i64; 3], off: T| {
        Vec3::new(
            p_f.x + (T::lit(k[0] as f64) + off) * step,
            p_f.y + (T::lit(k[1] as f64) + off) * step,
            p_f.z + (T::lit(k[2] as f64) + off) * step,
        )
    };
    let region = Aabb::new(corner(lo, -half), corner(hi, half))?;
    let res = [0, 1, 2].map(|a| (hi[a] - lo[a] + 1) as usize);
    ScoreVolume::new(region, res)
}

/// Scores candidate views around `p_f`, renders the selected views plus a
/// zoomed render from the best one, and fuses their heatmaps on a grid
/// around `p_f`. Reads nothing from the coarse stage but `p_f`.
pub fn fine_stage<T: Real, P: HeatmapProvider<T> + ?Sized>(
    cloud: &PointCloud<T>,
    p_f: Vec3<T>,
    workspace: &Aabb<T>,
    config: &PipelineConfig<T>,
    provider: &P,
) -> Result<FineOutput<T>> {
    if !workspace.contains(p_f) {
        return Err(Error::Contract(format!(
            "focus {:?} outside the workspace",
            p_f.to_array()
        )));
    }
    let radius = config.candidate_radius_scale * cloud.bounds()?.half_diagonal();
    if !(radius > T::zero()) {
        return Err(Error::Degenerate("scene has zero extent; no candidate sphere".into()));
    }
    let mut set = CandidateSet::generate(p_f, radius, config.subdivision_level)?;
    if let Some(e) = config.min_elevation {
        set.cull_below(e);
    }
    let k = config.views;
    if set.candidates.len() < k {
        return Err(Error::Capacity(format!(
            "K = {k} views requested but only {} candidates exist",
            set.candidates.len()
        )));
    }
    let index = SpatialIndex::build(cloud)?;
    let mut candidates = score_candidates(&set, &index, &config.scoring)?;
    let template = ViewTemplate {
        focus: p_f,
        up_hint: config.up_hint,
        projection: Projection::perspective(config.fov_alpha, T::one()),
        image_size: config.fine_image_size,
    };
    let selection = match config.strategy {
        ViewStrategy::Active => match config.scoring.diversity {
            DiversityMode::FullSet => select_views(&mut candidates, &config.weights, k, &template)?,
            DiversityMode::Greedy => select_views_greedy(&mut candidates, &config.weights, k, &template)?,
        },
        ViewStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let order = sample(&mut rng, candidates.len(), k).into_vec();
            select_by_order(&mut candidates, order, &template)?
        }
        ViewStrategy::Fixed => {
            return Err(Error::Contract("the fixed strategy has no fine stage".into()));
        }
    };
    let zoom_pose = selection.zoom_basis().zoomed(config.zoom_z)?;
    let distance = zoom_pose.distance_to_target();
    let coverage = zoom_coverage(config.fov_alpha, config.zoom_z, distance)?;

    let mut poses: Vec<CameraPose<T>> = selection.poses.clone();
    let mut names: Vec<String> = selection
        .order
        .iter()
        .enumerate()
        .map(|(r, &i)| format!("view{}_cand{}", r + 1, candidates[i].id))
        .collect();
    if config.zoom_mode == ZoomMode::Replace {
        poses.remove(0);
        names.remove(0);
    }
    poses.push(zoom_pose);
    names.push("zoom".to_owned());

    let images = poses
        .iter()
        .map(|p| render_perspective(cloud, p, config.render))
        .collect::<Result<Vec<_>>>()?;
    let heatmaps = attend(provider, &images, &config.instruction)?;
    let half_extent = config.fine_half_extent.unwrap_or(coverage * T::lit(0.5));
    let grid = fine_grid(p_f, half_extent, config.fine_grid_resolution, workspace)?;
    let views: Vec<_> = poses.iter().zip(&heatmaps).collect();
    let volume = fuse(grid.workspace, grid.resolution, &views, None, config.sampling)?;

    let selected_ids = selection.order.iter().map(|&i| candidates[i].id).collect();
    let trace = FineTrace {
        candidate_radius: radius,
        scoring: ScoringReport {
            weights: config.weights,
            params: config.scoring,
            k,
            candidates,
        },
        selected_ids,
        zoom_pose,
        zoom_coverage: coverage,
        grid_workspace: volume.workspace,
        grid_resolution: volume.resolution,
        views: records(&names, &images, &heatmaps),
        estimate: volume.decode_translation(),
        max_score: volume.max_score(),
    };
    Ok(FineOutput {
        trace,
        artifacts: StageArtifacts {
            names,
            images,
            heatmaps,
            volume,
        },
    })
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Full coarse-to-fine run. Errors carry the stage they came from.
pub fn run<T: Real, P: HeatmapProvider<T> + ?Sized>(
    cloud: &PointCloud<T>,
    config: &PipelineConfig<T>,
    provider: &P,
    hints: &ActionHints<T>,
) -> Result<PipelineRun<T>> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput("point cloud"));
    }
    let mut timings = Timings::default();

    let t = Instant::now();
    let coarse = coarse_stage(cloud, config, provider).map_err(|e| e.in_stage(Stage::Coarse))?;
    timings.coarse_ms = elapsed_ms(t);

    let t = Instant::now();
    let fine = match config.strategy {
        ViewStrategy::Fixed => None,
        _ => Some(
            fine_stage(cloud, coarse.trace.p_f, &coarse.trace.workspace, config, provider)
                .map_err(|e| e.in_stage(Stage::Fine))?,
        ),
    };
    timings.fine_ms = elapsed_ms(t);

    let t = Instant::now();
    let translation = fine.as_ref().map_or(coarse.trace.p_f, |f| f.trace.estimate);
    let action = encode_rotation(hints.euler_deg)
        .and_then(|bins| {
            assemble_action(
                translation,
                bins,
                hints.gripper,
                hints.collision,
                &coarse.trace.workspace,
            )
        })
        .map_err(|e| e.in_stage(Stage::Decode))?;
    timings.decode_ms = elapsed_ms(t);

    let (fine_trace, fine_artifacts) = match fine {
        Some(f) => (Some(f.trace), Some(f.artifacts)),
        None => (None, None),
    };
    Ok(PipelineRun {
        trace: StageTrace {
            strategy: config.strategy,
            provider: provider.name().to_owned(),
            coarse: coarse.trace,
            fine: fine_trace,
            action,
        },
        timings,
        coarse: coarse.artifacts,
        fine: fine_artifacts,
    })
}
