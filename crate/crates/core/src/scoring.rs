//! Multi-objective viewpoint scoring: ray-marched visibility against the
//! spatial index, distance preference and angular diversity, fused as a
//! weighted sum of z-scores.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;
use crate::scene::SpatialIndex;
use crate::viewsphere::{CameraPose, CandidateSet, Projection};

/// Standard deviations below this normalize to all zeros.
pub const ZERO_VARIANCE: f64 = 1e-12;

fn tolerance<T: Real>(f64_tol: f64) -> T {
    // f32 cannot resolve 1e-9; fall back to a few ulps.
    T::lit(f64_tol).max(T::epsilon() * T::lit(8.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct ScoringWeights<T> {
    pub w_vis: T,
    pub w_dis: T,
    pub w_div: T,
}

impl<T: Real> ScoringWeights<T> {
    pub fn new(w_vis: T, w_dis: T, w_div: T) -> Result<Self> {
        let w = Self { w_vis, w_dis, w_div };
        w.validate()?;
        Ok(w)
    }

    pub fn visibility_only() -> Self {
        Self {
            w_vis: T::one(),
            w_dis: T::zero(),
            w_div: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w_vis, self.w_dis, self.w_div];
        if all.iter().any(|w| !(*w >= T::zero() && *w <= T::one())) {
            return Err(Error::Domain(format!("weights {all:?} must lie in [0, 1]")));
        }
        let sum = self.w_vis + self.w_dis + self.w_div;
        if (sum - T::one()).abs() > tolerance(1e-9) {
            return Err(Error::Domain(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

impl<T: Real> Default for ScoringWeights<T> {
    fn default() -> Self {
        Self {
            w_vis: T::lit(0.5),
            w_dis: T::lit(0.25),
            w_div: T::lit(0.25),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct VisibilityParams<T> {
    /// Ray samples including both endpoints.
    pub num_samples: usize,
    /// Minimum clearance between every ray sample and the cloud, meters.
    pub clearance_radius: T,
    /// Samples closer than this to the focus are skipped so the target's own
    /// surface does not occlude it, meters.
    pub focus_exclusion: T,
}

impl<T: Real> VisibilityParams<T> {
    pub fn new(num_samples: usize, clearance_radius: T, focus_exclusion: T) -> Result<Self> {
        let p = Self {
            num_samples,
            clearance_radius,
            focus_exclusion,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 ray samples, got {}",
                self.num_samples
            )));
        }
        if !(self.clearance_radius > T::zero() && self.clearance_radius.is_finite()) {
            return Err(Error::Domain("clearance radius must be positive".into()));
        }
        if !(self.focus_exclusion >= T::zero() && self.focus_exclusion.is_finite()) {
            return Err(Error::Domain("focus exclusion must be non-negative".into()));
        }
        Ok(())
    }
}

impl<T: Real> Default for VisibilityParams<T> {
    fn default() -> Self {
        let r = T::lit(0.01);
        Self {
            num_samples: 32,
            clearance_radius: r,
            focus_exclusion: r * T::lit(2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistancePreference {
    /// Candidates nearest the median distance score highest.
    #[default]
    Moderate,
    /// Monotone: nearer is better.
    Nearer,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiversityMode {
    /// Angular separation against every other candidate, computed once.
    #[default]
    FullSet,
    /// Angular separation against the views already selected, recomputed
    /// after each pick.
    Greedy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ZScores<T> {
    pub vis: T,
    pub dis: T,
    pub div: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ViewCandidate<T> {
    pub id: usize,
    pub position: Vec3<T>,
    /// Unit vector from the candidate toward the focus.
    pub direction: Vec3<T>,
    /// 1 when the line of sight is clear, 0 otherwise.
    pub s_vis_raw: u8,
    /// Distance to the focus, meters.
    pub distance: T,
    pub s_dis_raw: T,
    /// Sum of angles to every other candidate, radians.
    pub s_div_raw: T,
    pub z: ZScores<T>,
    pub composite: T,
    pub selected: bool,
    /// 1-based rank among the selected views.
    pub rank: Option<usize>,
}

/// Marches `num_samples` points from `position` to `focus` and reports
/// whether all of them (outside the focus exclusion ball) clear the cloud by
/// at least the clearance radius.
pub fn visibility<T: Real>(
    position: Vec3<T>,
    focus: Vec3<T>,
    index: &SpatialIndex<T>,
    params: &VisibilityParams<T>,
) -> Result<bool> {
    params.validate()?;
    if position == focus {
        return Err(Error::Degenerate("candidate coincides with the focus".into()));
    }
    let last = T::from_usize_lossy(params.num_samples - 1);
    let ray = focus - position;
    for k in 0..params.num_samples {
        let q = position + ray * (T::from_usize_lossy(k) / last);
        if q.distance(focus) < params.focus_exclusion {
            continue;
        }
        if index.nearest_distance(q) < params.clearance_radius {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn distance_raw<T: Real>(position: Vec3<T>, focus: Vec3<T>) -> T {
    position.distance(focus)
}

/// Z-scores with population standard deviation. A (near) constant input
/// maps to all zeros.
pub fn znorm<T: Real>(values: &[T]) -> Vec<T> {
    if values.is_empty() {
        return Vec::new();
    }
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
    let std = var.sqrt();
    if !(std >= T::lit(ZERO_VARIANCE)) {
        return vec![T::zero(); values.len()];
    }
    values.iter().map(|&v| (v - mean) / std).collect()
}

/// Distance preference score per candidate.
pub fn distance_score<T: Real>(raw: &[T], preference: DistancePreference) -> Result<Vec<T>> {
    if raw.is_empty() {
        return Err(Error::EmptyInput("distance scores of an empty candidate list"));
    }
    let z = znorm(raw);
    Ok(match preference {
        DistancePreference::Moderate => z.into_iter().map(|v| T::zero() - v.abs()).collect(),
        DistancePreference::Nearer => z.into_iter().map(|v| T::zero() - v).collect(),
    })
}

fn check_directions<T: Real>(directions: &[Vec3<T>]) -> Result<()> {
    if directions.len() < 2 {
        return Err(Error::Capacity(format!(
            "diversity needs at least 2 candidates, got {}",
            directions.len()
        )));
    }
    let tol = tolerance::<T>(1e-9);
    if let Some(i) = directions.iter().position(|d| (d.norm() - T::one()).abs() > tol) {
        return Err(Error::Domain(format!("direction {i} is not unit length")));
    }
    Ok(())
}

#[inline]
fn angle<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a.dot(b).max(-T::one()).min(T::one()).acos()
}

/// Sum of angles between direction `i` and every other direction.
pub fn diversity<T: Real>(directions: &[Vec3<T>], i: usize) -> Result<T> {
    check_directions(directions)?;
    if i >= directions.len() {
        return Err(Error::Domain(format!("candidate {i} out of range")));
    }
    Ok(directions
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .fold(T::zero(), |acc, (_, &d)| acc + angle(directions[i], d)))
}

/// [`diversity`] for every candidate.
pub fn diversity_all<T: Real>(directions: &[Vec3<T>]) -> Result<Vec<T>> {
    check_directions(directions)?;
    Ok((0..directions.len())
        .map(|i| {
            directions
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(T::zero(), |acc, (_, &d)| acc + angle(directions[i], d))
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct ScoringParams<T> {
    pub visibility: VisibilityParams<T>,
    pub distance: DistancePreference,
    pub diversity: DiversityMode,
}

impl<T: Real> Default for ScoringParams<T> {
    fn default() -> Self {
        Self {
            visibility: VisibilityParams::default(),
            distance: DistancePreference::default(),
            diversity: DiversityMode::default(),
        }
    }
}

/// Raw per-candidate scores. Visibility runs in parallel; results are kept
/// in candidate order.
pub fn score_candidates<T: Real>(
    set: &CandidateSet<T>,
    index: &SpatialIndex<T>,
    params: &ScoringParams<T>,
) -> Result<Vec<ViewCandidate<T>>> {
    let focus = set.focus;
    let vis: Vec<bool> = set
        .candidates
        .par_iter()
        .map(|c| visibility(c.position, focus, index, &params.visibility))
        .collect::<Result<_>>()?;
    let directions: Vec<Vec3<T>> = set
        .candidates
        .iter()
        .map(|c| {
            (focus - c.position)
                .try_normalize()
                .ok_or_else(|| Error::Degenerate(format!("candidate {} coincides with the focus", c.id)))
        })
        .collect::<Result<_>>()?;
    let distances: Vec<T> = set.candidates.iter().map(|c| distance_raw(c.position, focus)).collect();
    let s_dis = distance_score(&distances, params.distance)?;
    let s_div = diversity_all(&directions)?;
    Ok(set
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| ViewCandidate {
            id: c.id,
            position: c.position,
            direction: directions[i],
            s_vis_raw: vis[i] as u8,
            distance: distances[i],
            s_dis_raw: s_dis[i],
            s_div_raw: s_div[i],
            z: ZScores::default(),
            composite: T::zero(),
            selected: false,
            rank: None,
        })
        .collect())
}

/// Everything needed to turn a chosen candidate into a camera pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewTemplate<T> {
    pub focus: Vec3<T>,
    pub up_hint: Vec3<T>,
    pub projection: Projection<T>,
    pub image_size: (u32, u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection<T> {
    /// Indices into the candidate slice, best first.
    pub order: Vec<usize>,
    /// One look-at pose per selected candidate, same order. The first pose is
    /// the zoom basis.
    pub poses: Vec<CameraPose<T>>,
}

impl<T: Real> Selection<T> {
    pub fn zoom_basis(&self) -> &CameraPose<T> {
        &self.poses[0]
    }
}

fn column<T: Real>(c: &[ViewCandidate<T>], f: impl Fn(&ViewCandidate<T>) -> T) -> Vec<T> {
    c.iter().map(f).collect()
}

fn rank_desc<T: Real>(candidates: &[ViewCandidate<T>], pool: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = pool.collect();
    idx.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        cb.composite
            .partial_cmp(&ca.composite)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ca.id.cmp(&cb.id))
    });
    idx
}

fn check_selection_inputs<T: Real>(n: usize, weights: &ScoringWeights<T>, k: usize) -> Result<()> {
    weights.validate()?;
    if k == 0 {
        return Err(Error::Domain("view count K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Capacity(format!("K = {k} exceeds the {n} available candidates")));
    }
    Ok(())
}

/// Z-normalizes each channel, fuses them with `weights`, and picks the top
/// `k` candidates (ties to the lower id). Fills in `z`, `composite`,
/// `selected` and `rank` on every candidate.
pub fn select_views<T: Real>(
    candidates: &mut [ViewCandidate<T>],
    weights: &ScoringWeights<T>,
    k: usize,
    template: &ViewTemplate<T>,
) -> Result<Selection<T>> {
    check_selection_inputs(candidates.len(), weights, k)?;
    let z_vis = znorm(&column(candidates, |c| T::from_usize_lossy(c.s_vis_raw as usize)));
    let z_dis = znorm(&column(candidates, |c| c.s_dis_raw));
    let z_div = znorm(&column(candidates, |c| c.s_div_raw));
    for (i, c) in candidates.iter_mut().enumerate() {
        c.z = ZScores {
            vis: z_vis[i],
            dis: z_dis[i],
            div: z_div[i],
        };
        c.composite = weights.w_vis * z_vis[i] + weights.w_dis * z_dis[i] + weights.w_div * z_div[i];
        c.selected = false;
        c.rank = None;
    }
    let order: Vec<usize> = rank_desc(candidates, 0..candidates.len()).into_iter().take(k).collect();
    finish_selection(candidates, order, template)
}

/// Greedy variant: the diversity channel of each remaining candidate is its
/// angular separation from the views picked so far.
pub fn select_views_greedy<T: Real>(
    candidates: &mut [ViewCandidate<T>],
    weights: &ScoringWeights<T>,
    k: usize,
    template: &ViewTemplate<T>,
) -> Result<Selection<T>> {
    check_selection_inputs(candidates.len(), weights, k)?;
    let z_vis = znorm(&column(candidates, |c| T::from_usize_lossy(c.s_vis_raw as usize)));
    let z_dis = znorm(&column(candidates, |c| c.s_dis_raw));
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut remaining: Vec<usize> = (0..candidates.len()).collect();
    while chosen.len() < k {
        let div: Vec<T> = remaining
            .iter()
            .map(|&i| {
                chosen.iter().fold(T::zero(), |a, &j| {
                    a + angle(candidates[i].direction, candidates[j].direction)
                })
            })
            .collect();
        let z_div = znorm(&div);
        for (slot, &i) in remaining.iter().enumerate() {
            let c = &mut candidates[i];
            c.z = ZScores {
                vis: z_vis[i],
                dis: z_dis[i],
                div: z_div[slot],
            };
            c.composite = weights.w_vis * z_vis[i] + weights.w_dis * z_dis[i] + weights.w_div * z_div[slot];
        }
        let best = rank_desc(candidates, remaining.iter().copied())[0];
        remaining.retain(|&i| i != best);
        chosen.push(best);
    }
    for c in candidates.iter_mut() {
        c.selected = false;
        c.rank = None;
    }
    finish_selection(candidates, chosen, template)
}

/// Selects the given candidates in the given order, bypassing the scores.
/// Used by baseline strategies.
pub fn select_by_order<T: Real>(
    candidates: &mut [ViewCandidate<T>],
    order: Vec<usize>,
    template: &ViewTemplate<T>,
) -> Result<Selection<T>> {
    if order.is_empty() {
        return Err(Error::Domain("view count K must be at least 1".into()));
    }
    if let Some(&i) = order.iter().find(|&&i| i >= candidates.len()) {
        return Err(Error::Capacity(format!(
            "candidate {i} of {} requested",
            candidates.len()
        )));
    }
    for c in candidates.iter_mut() {
        c.selected = false;
        c.rank = None;
    }
    finish_selection(candidates, order, template)
}

fn finish_selection<T: Real>(
    candidates: &mut [ViewCandidate<T>],
    order: Vec<usize>,
    template: &ViewTemplate<T>,
) -> Result<Selection<T>> {
    let mut poses = Vec::with_capacity(order.len());
    for (rank, &i) in order.iter().enumerate() {
        let c = &mut candidates[i];
        c.selected = true;
        c.rank = Some(rank + 1);
        poses.push(CameraPose::new(
            c.position,
            template.focus,
            template.up_hint,
            template.projection,
            template.image_size,
        )?);
    }
    Ok(Selection { order, poses })
}

/// Machine-readable scoring summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScoringReport<T> {
    pub weights: ScoringWeights<T>,
    pub params: ScoringParams<T>,
    pub k: usize,
    pub candidates: Vec<ViewCandidate<T>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Point, PointCloud};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn index(pts: &[Vec3<f64>]) -> SpatialIndex<f64> {
        SpatialIndex::from_positions(pts.to_vec()).unwrap()
    }

    /// Plane of points at height `z` covering [-0.5, 0.5]^2 with `spacing`.
    fn plane(z: f64, spacing: f64) -> Vec<Vec3<f64>> {
        let n = (1.0 / spacing).round() as i32;
        let mut v = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                v.push(Vec3::new(-0.5 + i as f64 * spacing, -0.5 + j as f64 * spacing, z));
            }
        }
        v
    }

    fn brute_visibility(pos: Vec3<f64>, focus: Vec3<f64>, pts: &[Vec3<f64>], p: &VisibilityParams<f64>) -> bool {
        let n = p.num_samples;
        (0..n).all(|k| {
            let q = pos + (focus - pos) * (k as f64 / (n - 1) as f64);
            if q.distance(focus) < p.focus_exclusion {
                return true;
            }
            pts.iter().all(|s| q.distance(*s) >= p.clearance_radius)
        })
    }

    #[test]
    fn far_cluster_does_not_occlude() {
        let pts: Vec<_> = (0..50).map(|i| Vec3::new(10.0 + i as f64 * 0.01, 10.0, 10.0)).collect();
        let idx = index(&pts);
        let p = VisibilityParams::default();
        assert!(visibility(Vec3::new(0.0, 0.0, 1.0), Vec3::zero(), &idx, &p).unwrap());
    }

    #[test]
    fn plane_between_camera_and_focus_occludes() {
        let pts = plane(0.5, 0.005);
        let idx = index(&pts);
        // 33 samples put one exactly on the plane; with 32 the step of 1/31
        // straddles it by more than the clearance and the plane slips through.
        let p = VisibilityParams::new(33, 0.01, 0.02).unwrap();
        let (cam, focus) = (Vec3::new(0.0, 0.0, 1.0), Vec3::zero());
        assert!(brute_visibility(
            cam,
            focus,
            &pts,
            &VisibilityParams::new(32, 0.01, 0.02).unwrap()
        ));
        assert!(!brute_visibility(cam, focus, &pts, &p));
        assert!(!visibility(cam, focus, &idx, &p).unwrap());
    }

    #[test]
    fn plane_behind_camera_does_not_occlude() {
        let pts = plane(2.0, 0.005);
        let idx = index(&pts);
        let p = VisibilityParams::new(32, 0.01, 0.02).unwrap();
        let (cam, focus) = (Vec3::new(0.0, 0.0, 1.0), Vec3::zero());
        assert!(brute_visibility(cam, focus, &pts, &p));
        assert!(visibility(cam, focus, &idx, &p).unwrap());
    }

    #[test]
    fn focus_exclusion_ignores_target_surface() {
        let pts = vec![Vec3::new(0.0, 0.0, 0.005)];
        let idx = index(&pts);
        let cam = Vec3::new(0.0, 0.0, 1.0);
        assert!(visibility(cam, Vec3::zero(), &idx, &VisibilityParams::new(32, 0.01, 0.02).unwrap()).unwrap());
        assert!(!visibility(cam, Vec3::zero(), &idx, &VisibilityParams::new(32, 0.01, 0.0).unwrap()).unwrap());
    }

    #[test]
    fn degenerate_ray_is_rejected() {
        let idx = index(&[Vec3::zero()]);
        let p = Vec3::new(1.0, 1.0, 1.0);
        assert!(matches!(
            visibility(p, p, &idx, &VisibilityParams::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn visibility_matches_brute_force_on_random_scenes() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let pts: Vec<Vec3<f64>> = (0..300)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                    )
                })
                .collect();
            let idx = index(&pts);
            let p = VisibilityParams::new(rng.gen_range(2..40), rng.gen_range(0.01..0.08), rng.gen_range(0.0..0.1))
                .unwrap();
            for _ in 0..20 {
                let cam = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let focus = Vec3::new(
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                    rng.gen_range(-0.2..0.2),
                );
                assert_eq!(
                    visibility(cam, focus, &idx, &p).unwrap(),
                    brute_visibility(cam, focus, &pts, &p)
                );
            }
        }
    }

    #[test]
    fn distance_raw_examples() {
        let f = Vec3::new(1.0, -2.0, 0.5);
        assert_eq!(distance_raw(f, f), 0.0);
        assert_eq!(distance_raw(f + Vec3::new(3.0, 4.0, 0.0), f), 5.0);
    }

    #[test]
    fn znorm_examples() {
        let z = znorm(&[1.0, 2.0, 3.0]);
        let s = (1.5f64).sqrt();
        for (a, b) in z.iter().zip([-s, 0.0, s]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(znorm(&[4.0; 5]), vec![0.0; 5]);
    }

    #[test]
    fn znorm_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..30).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let base = znorm(&x);
        let shifted = znorm(&x.iter().map(|v| v + 7.5).collect::<Vec<_>>());
        let scaled = znorm(&x.iter().map(|v| v * 3.25).collect::<Vec<_>>());
        for i in 0..x.len() {
            assert!((base[i] - shifted[i]).abs() < 1e-12);
            assert!((base[i] - scaled[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_score_examples() {
        let s = distance_score::<f64>(&[1.0, 2.0, 3.0], DistancePreference::Moderate).unwrap();
        assert!((s[0] + 1.2247).abs() < 1e-4);
        assert_eq!(s[1], 0.0);
        assert!((s[2] + 1.2247).abs() < 1e-4);
        let flat = distance_score::<f64>(&[2.0; 4], DistancePreference::Moderate).unwrap();
        assert!(flat.iter().all(|v| *v == 0.0 && v.is_sign_positive()));
        assert!(distance_score::<f64>(&[], DistancePreference::Moderate).is_err());
        let near = distance_score(&[1.0, 2.0, 3.0], DistancePreference::Nearer).unwrap();
        assert!(near[0] > near[1] && near[1] > near[2]);
    }

    #[test]
    fn moderate_distance_prefers_median() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.gen_range(3..20);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
            let s = distance_score(&d, DistancePreference::Moderate).unwrap();
            let best = (0..n)
                .max_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap().then(b.cmp(&a)))
                .unwrap();
            let mean = d.iter().sum::<f64>() / n as f64;
            let oracle = (0..n)
                .min_by(|&a, &b| {
                    (d[a] - mean)
                        .abs()
                        .partial_cmp(&(d[b] - mean).abs())
                        .unwrap()
                        .then(a.cmp(&b))
                })
                .unwrap();
            assert_eq!(best, oracle);
        }
    }

    #[test]
    fn diversity_examples() {
        let a = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0)];
        assert!((diversity(&a, 0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!((diversity(&a, 1).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        let same = [Vec3::<f64>::unit_x(); 5];
        assert!(diversity_all(&same).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(diversity(&a[..1], 0), Err(Error::Capacity(_))));
        assert!(matches!(
            diversity(&[Vec3::new(2.0, 0.0, 0.0), Vec3::unit_x()], 0),
            Err(Error::Domain(_))
        ));
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3<f64> {
        loop {
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() > 0.1 && v.norm() < 1.0 {
                return v.normalize();
            }
        }
    }

    #[test]
    fn diversity_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dirs: Vec<_> = (0..50).map(|_| random_unit(&mut rng)).collect();
        let all = diversity_all(&dirs).unwrap();
        for i in 0..dirs.len() {
            let mut oracle = 0.0;
            for j in 0..dirs.len() {
                if i != j {
                    oracle += dirs[i].dot(dirs[j]).clamp(-1.0, 1.0).acos();
                }
            }
            assert!((all[i] - oracle).abs() < 1e-9);
            assert!((diversity(&dirs, i).unwrap() - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn diversity_is_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dirs: Vec<_> = (0..40).map(|_| random_unit(&mut rng)).collect();
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let rot = |v: Vec3<f64>| {
            let v = Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
            Vec3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z)
        };
        let rotated: Vec<_> = dirs.iter().map(|&d| rot(d)).collect();
        let a = diversity_all(&dirs).unwrap();
        let b = diversity_all(&rotated).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    fn template(focus: Vec3<f64>) -> ViewTemplate<f64> {
        ViewTemplate {
            focus,
            up_hint: Vec3::unit_z(),
            projection: Projection::perspective(1.0, 1.0),
            image_size: (32, 32),
        }
    }

    fn mk(id: usize, vis: u8, dis: f64, div: f64) -> ViewCandidate<f64> {
        let position = Vec3::new(1.0 + id as f64, 0.5, 0.25);
        ViewCandidate {
            id,
            position,
            direction: (-position).normalize(),
            s_vis_raw: vis,
            distance: position.norm(),
            s_dis_raw: dis,
            s_div_raw: div,
            z: ZScores::default(),
            composite: 0.0,
            selected: false,
            rank: None,
        }
    }

    #[test]
    fn identical_candidates_select_by_id() {
        let mut c: Vec<_> = (0..12).map(|i| mk(i, 1, 0.0, 3.0)).collect();
        let sel = select_views(&mut c, &ScoringWeights::default(), 3, &template(Vec3::zero())).unwrap();
        assert_eq!(sel.order, vec![0, 1, 2]);
        assert_eq!(c[0].rank, Some(1));
        assert!(c[2].selected && !c[3].selected);
    }

    #[test]
    fn visibility_only_weights_pick_unoccluded() {
        // Exactly 5 of 12 unoccluded, with distracting distance/diversity.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let vis = [0u8, 1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 1];
        let mut c: Vec<_> = (0..12)
            .map(|i| mk(i, vis[i], rng.gen_range(-2.0..0.0), rng.gen_range(10.0..20.0)))
            .collect();
        let sel = select_views(&mut c, &ScoringWeights::visibility_only(), 3, &template(Vec3::zero())).unwrap();
        assert_eq!(sel.poses.len(), 3);
        for &i in &sel.order {
            assert_eq!(c[i].s_vis_raw, 1);
        }
        // Brute-force enumeration: composites of unoccluded views tie, so ids win.
        assert_eq!(sel.order, vec![1, 4, 6]);
    }

    #[test]
    fn too_many_views_is_capacity_error() {
        let mut c: Vec<_> = (0..4).map(|i| mk(i, 1, 0.0, 0.0)).collect();
        let r = select_views(&mut c, &ScoringWeights::default(), 5, &template(Vec3::zero()));
        assert!(matches!(r, Err(Error::Capacity(_))));
    }

    #[test]
    fn ranking_invariant_under_affine_channel_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let base: Vec<_> = (0..20)
                .map(|i| {
                    mk(
                        i,
                        rng.gen_range(0..2),
                        rng.gen_range(-2.0..0.0),
                        rng.gen_range(5.0..30.0),
                    )
                })
                .collect();
            let mut a = base.clone();
            let mut b: Vec<_> = base
                .iter()
                .map(|c| ViewCandidate {
                    s_dis_raw: c.s_dis_raw * 4.0 - 3.0,
                    s_div_raw: c.s_div_raw * 0.5 + 100.0,
                    ..c.clone()
                })
                .collect();
            let w = ScoringWeights::default();
            let sa = select_views(&mut a, &w, 5, &template(Vec3::zero())).unwrap();
            let sb = select_views(&mut b, &w, 5, &template(Vec3::zero())).unwrap();
            assert_eq!(sa.order, sb.order);
        }
    }

    #[test]
    fn greedy_mode_spreads_views() {
        let set = CandidateSet::generate(Vec3::<f64>::zero(), 1.0, 1).unwrap();
        let cloud = PointCloud::new(vec![Point::gray(Vec3::new(9.0, 9.0, 9.0))]);
        let idx = SpatialIndex::build(&cloud).unwrap();
        let mut c = score_candidates(&set, &idx, &ScoringParams::default()).unwrap();
        let w = ScoringWeights::new(0.0, 0.0, 1.0).unwrap();
        let sel = select_views_greedy(&mut c, &w, 2, &template(Vec3::zero())).unwrap();
        let (a, b) = (c[sel.order[0]].direction, c[sel.order[1]].direction);
        // Second pick is antipodal to the first.
        assert!((a.dot(b) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(ScoringWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(ScoringWeights::new(-0.5, 1.0, 0.5).is_err());
        assert!(ScoringWeights::<f64>::default().validate().is_ok());
        assert!(ScoringWeights::<f32>::default().validate().is_ok());
    }

    #[test]
    fn selection_is_deterministic() {
        let set = CandidateSet::generate(Vec3::new(0.1, 0.2, 0.3), 1.2, 1).unwrap();
        let pts = plane(0.9, 0.02);
        let idx = index(&pts);
        let run = || {
            let mut c = score_candidates(&set, &idx, &ScoringParams::default()).unwrap();
            let sel = select_views(&mut c, &ScoringWeights::default(), 3, &template(set.focus)).unwrap();
            (sel, c)
        };
        assert_eq!(run(), run());
    }
}
