//! Point splatting into 7-channel images (RGB, depth, world XYZ) with a
//! per-pixel nearest-depth test.

mod export;

use serde::{Deserialize, Serialize};

pub use export::{encode_f32le, encode_mask_pgm, encode_rgb_ppm, write_float_grid, write_image_set, FloatGridHeader};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::scalar::Real;
use crate::scene::PointCloud;
use crate::viewsphere::{CameraPose, Projection, Projector};

/// Distance from the workspace boundary sphere to an orthographic eye.
const ORTHO_STANDOFF: f64 = 1.0;

pub const DEFAULT_IMAGE_SIZE: (u32, u32) = (224, 224);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrthoView {
    /// Looks along -z, +y up.
    Top,
    /// Looks along +y, +z up.
    Front,
    /// Looks along -x, +z up.
    Right,
}

impl OrthoView {
    pub const ALL: [OrthoView; 3] = [OrthoView::Top, OrthoView::Front, OrthoView::Right];

    pub fn name(self) -> &'static str {
        match self {
            OrthoView::Top => "top",
            OrthoView::Front => "front",
            OrthoView::Right => "right",
        }
    }

    fn frame<T: Real>(self) -> (Vec3<T>, Vec3<T>) {
        let (o, z) = (T::one(), T::zero());
        match self {
            OrthoView::Top => (Vec3::new(z, z, -o), Vec3::unit_y()),
            OrthoView::Front => (Vec3::new(z, o, z), Vec3::unit_z()),
            OrthoView::Right => (Vec3::new(-o, z, z), Vec3::unit_z()),
        }
    }

    /// World axes spanning the image plane: (horizontal, vertical).
    fn plane_axes(self) -> (usize, usize) {
        match self {
            OrthoView::Top => (0, 1),
            OrthoView::Front => (0, 2),
            OrthoView::Right => (1, 2),
        }
    }

    /// Orthographic pose framing `workspace`, centered on it.
    pub fn pose<T: Real>(self, workspace: &Aabb<T>, image_size: (u32, u32)) -> Result<CameraPose<T>> {
        let ext = workspace.extent();
        let (a, b) = self.plane_axes();
        if !(ext[a] > T::zero() && ext[b] > T::zero()) {
            return Err(Error::Domain(format!(
                "workspace has zero extent in the {} view plane",
                self.name()
            )));
        }
        let aspect = T::from_usize_lossy(image_size.0 as usize) / T::from_usize_lossy(image_size.1 as usize);
        let extent = ext[a].max(ext[b] * aspect);
        let (forward, up) = self.frame::<T>();
        let center = workspace.center();
        let eye = center - forward * (workspace.half_diagonal() + T::lit(ORTHO_STANDOFF));
        CameraPose::new(eye, center, up, Projection::Orthographic { extent }, image_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// 1 paints exactly one pixel per point; `r` paints a `(2r-1)^2` square.
    pub splat_radius: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { splat_radius: 1 }
    }
}

/// Per-pixel channels of a rendered view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Texel<T> {
    pub rgb: [T; 3],
    /// Camera-frame depth, `+inf` where nothing was drawn.
    pub depth: T,
    pub world: Vec3<T>,
}

impl<T: Real> Texel<T> {
    fn empty() -> Self {
        Self {
            rgb: [T::zero(); 3],
            depth: T::infinity(),
            world: Vec3::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelImage<T> {
    pub width: usize,
    pub height: usize,
    /// Row-major, `y * width + x`.
    pub texels: Vec<Texel<T>>,
    pub valid: Vec<bool>,
    /// Index of the cloud point that won each pixel.
    pub source_point: Vec<Option<u32>>,
    pub pose: CameraPose<T>,
}

impl<T: Real> MultiChannelImage<T> {
    pub fn texel(&self, x: usize, y: usize) -> &Texel<T> {
        &self.texels[y * self.width + x]
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn depth_channel(&self) -> Vec<T> {
        self.texels.iter().map(|t| t.depth).collect()
    }

    /// Channels flattened in order r, g, b, depth, x, y, z, one plane each.
    pub fn channel(&self, c: usize) -> Vec<T> {
        self.texels
            .iter()
            .map(|t| match c {
                0..=2 => t.rgb[c],
                3 => t.depth,
                4..=6 => t.world[c - 4],
                _ => panic!("channel {c} out of range"),
            })
            .collect()
    }
}

pub const CHANNEL_NAMES: [&str; 7] = ["r", "g", "b", "depth", "x", "y", "z"];

fn rasterize<T: Real>(
    cloud: &PointCloud<T>,
    pose: &CameraPose<T>,
    keep: impl Fn(Vec3<T>) -> bool,
    options: RenderOptions,
) -> MultiChannelImage<T> {
    let proj: Projector<T> = pose.projector();
    let (w, h) = (pose.width(), pose.height());
    let mut depth = vec![T::infinity(); w * h];
    let mut winner = vec![u32::MAX; w * h];
    let reach = options.splat_radius.max(1) as i64 - 1;
    for (i, p) in cloud.points.iter().enumerate() {
        if !keep(p.position) {
            continue;
        }
        let Some(ip) = proj.project(p.position) else {
            continue;
        };
        let Some((px, py)) = proj.pixel(&ip) else {
            continue;
        };
        let i = i as u32;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (x, y) = (px as i64 + dx, py as i64 + dy);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    continue;
                }
                let k = y as usize * w + x as usize;
                // Lexicographic (depth, index) minimum: order independent.
                if ip.depth < depth[k] || (ip.depth == depth[k] && i < winner[k]) {
                    depth[k] = ip.depth;
                    winner[k] = i;
                }
            }
        }
    }
    let mut texels = vec![Texel::empty(); w * h];
    let mut valid = vec![false; w * h];
    let mut source_point = vec![None; w * h];
    for k in 0..w * h {
        if winner[k] != u32::MAX {
            let p = &cloud.points[winner[k] as usize];
            texels[k] = Texel {
                rgb: p.color,
                depth: depth[k],
                world: p.position,
            };
            valid[k] = true;
            source_point[k] = Some(winner[k]);
        }
    }
    MultiChannelImage {
        width: w,
        height: h,
        texels,
        valid,
        source_point,
        pose: *pose,
    }
}

/// Orthographic render of the points inside `workspace`.
pub fn render_orthographic<T: Real>(
    cloud: &PointCloud<T>,
    view: OrthoView,
    workspace: &Aabb<T>,
    image_size: (u32, u32),
    options: RenderOptions,
) -> Result<MultiChannelImage<T>> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("rendering an empty cloud"));
    }
    let pose = view.pose(workspace, image_size)?;
    Ok(rasterize(cloud, &pose, |p| workspace.contains(p), options))
}

/// The three fixed orthographic views, in top, front, right order.
pub fn render_ortho_set<T: Real>(
    cloud: &PointCloud<T>,
    workspace: &Aabb<T>,
    image_size: (u32, u32),
    options: RenderOptions,
) -> Result<Vec<MultiChannelImage<T>>> {
    OrthoView::ALL
        .iter()
        .map(|&v| render_orthographic(cloud, v, workspace, image_size, options))
        .collect()
}

/// Pinhole render with effective field of view `fov_alpha / zoom_z`.
pub fn render_perspective<T: Real>(
    cloud: &PointCloud<T>,
    pose: &CameraPose<T>,
    options: RenderOptions,
) -> Result<MultiChannelImage<T>> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("rendering an empty cloud"));
    }
    match pose.projection {
        Projection::Perspective { fov_alpha, zoom_z } => {
            if !(fov_alpha / zoom_z < T::PI()) {
                return Err(Error::Domain(format!(
                    "effective field of view {} is not a valid frustum",
                    fov_alpha / zoom_z
                )));
            }
        }
        Projection::Orthographic { .. } => {
            return Err(Error::Domain("render_perspective needs a perspective pose".into()))
        }
    }
    Ok(rasterize(cloud, pose, |_| true, options))
}

/// Width covered at distance `distance` by a pinhole with field of view
/// `fov_alpha` zoomed by `zoom_z`: `2 d tan(alpha / 2z)`.
pub fn zoom_coverage<T: Real>(fov_alpha: T, zoom_z: T, distance: T) -> Result<T> {
    if !(fov_alpha > T::zero() && fov_alpha < T::PI()) {
        return Err(Error::Domain(format!("field of view {fov_alpha} outside (0, pi)")));
    }
    if !(zoom_z >= T::one() && zoom_z.is_finite()) {
        return Err(Error::Domain(format!("zoom factor {zoom_z} must be >= 1")));
    }
    if !(distance > T::zero() && distance.is_finite()) {
        return Err(Error::Domain(format!("distance {distance} must be positive")));
    }
    Ok(T::lit(2.0) * distance * (fov_alpha / (T::lit(2.0) * zoom_z)).tan())
}

/// Pixels per meter across a coverage width.
pub fn pixel_resolution<T: Real>(image_width_px: u32, coverage: T) -> T {
    T::from_usize_lossy(image_width_px as usize) / coverage
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> Aabb<f64> {
        Aabb::new(Vec3::zero(), Vec3::splat(1.0)).unwrap()
    }

    fn colored(p: [f64; 3], c: [f64; 3]) -> Point<f64> {
        Point::new(p.into(), c)
    }

    #[test]
    fn center_point_top_view() {
        let cloud = PointCloud::new(vec![colored([0.5, 0.5, 0.5], [1.0, 0.0, 0.0])]);
        let img = render_orthographic(
            &cloud,
            OrthoView::Top,
            &unit_box(),
            (224, 224),
            RenderOptions::default(),
        )
        .unwrap();
        assert_eq!(img.valid_count(), 1);
        assert!(img.is_valid(112, 112));
        assert_eq!(img.texel(112, 112).world, Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(img.texel(0, 0).depth, f64::INFINITY);
    }

    #[test]
    fn higher_point_wins_top_view() {
        let cloud = PointCloud::new(vec![
            colored([0.3, 0.6, 0.2], [0.0, 0.0, 1.0]),
            colored([0.3, 0.6, 0.8], [0.0, 1.0, 0.0]),
        ]);
        let img = render_orthographic(&cloud, OrthoView::Top, &unit_box(), (64, 64), RenderOptions::default()).unwrap();
        let k = img.valid.iter().position(|v| *v).unwrap();
        assert_eq!(img.valid_count(), 1);
        assert_eq!(img.texels[k].rgb, [0.0, 1.0, 0.0]);
        assert_eq!(img.source_point[k], Some(1));
    }

    #[test]
    fn view_axes_follow_conventions() {
        let ws = unit_box();
        // +x is to the right in top and front views; +y to the right in the right view.
        let p_hi = Vec3::new(0.9, 0.9, 0.9);
        let p_lo = Vec3::new(0.1, 0.1, 0.1);
        for v in OrthoView::ALL {
            let pose = v.pose(&ws, (100, 100)).unwrap();
            let (a, b) = (pose.project(p_hi).unwrap(), pose.project(p_lo).unwrap());
            assert!(a.u > b.u, "{v:?}");
            assert!(a.v < b.v, "{v:?}");
        }
    }

    #[test]
    fn points_on_workspace_boundary_are_drawn() {
        let cloud = PointCloud::new(vec![
            colored([1.0, 1.0, 1.0], [1.0; 3]),
            colored([0.0, 0.0, 0.0], [1.0; 3]),
        ]);
        for v in OrthoView::ALL {
            let img = render_orthographic(&cloud, v, &unit_box(), (50, 50), RenderOptions::default()).unwrap();
            assert_eq!(img.valid_count(), 2);
        }
    }

    #[test]
    fn outside_workspace_is_culled() {
        let cloud = PointCloud::new(vec![colored([1.5, 0.5, 0.5], [1.0; 3])]);
        let img = render_orthographic(&cloud, OrthoView::Top, &unit_box(), (50, 50), RenderOptions::default()).unwrap();
        assert_eq!(img.valid_count(), 0);
    }

    #[test]
    fn degenerate_workspace_is_rejected() {
        let ws = Aabb::new(Vec3::zero(), Vec3::new(1.0, 0.0, 1.0)).unwrap();
        let cloud = PointCloud::new(vec![colored([0.5, 0.0, 0.5], [1.0; 3])]);
        assert!(matches!(
            render_orthographic(&cloud, OrthoView::Top, &ws, (8, 8), RenderOptions::default()),
            Err(Error::Domain(_))
        ));
        // The front view spans x and z, which are fine.
        assert!(render_orthographic(&cloud, OrthoView::Front, &ws, (8, 8), RenderOptions::default()).is_ok());
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud<f64> {
        PointCloud::new(
            (0..n)
                .map(|_| colored([rng.gen(), rng.gen(), rng.gen()], [rng.gen(), rng.gen(), rng.gen()]))
                .collect(),
        )
    }

    #[test]
    fn world_channel_reprojects_to_its_pixel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cloud = random_cloud(&mut rng, 3000);
        for v in OrthoView::ALL {
            let img = render_orthographic(&cloud, v, &unit_box(), (96, 80), RenderOptions::default()).unwrap();
            let proj = img.pose.projector();
            for y in 0..img.height {
                for x in 0..img.width {
                    if img.is_valid(x, y) {
                        let t = img.texel(x, y);
                        let src = img.source_point[y * img.width + x].unwrap() as usize;
                        assert_eq!(t.world, cloud.points[src].position);
                        assert_eq!(proj.pixel(&proj.project(t.world).unwrap()), Some((x, y)));
                    }
                }
            }
        }
    }

    #[test]
    fn depth_test_is_exhaustively_correct() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cloud = random_cloud(&mut rng, 4000);
        let pose = CameraPose::new(
            Vec3::new(2.0, -1.5, 1.8),
            Vec3::splat(0.5),
            Vec3::unit_z(),
            Projection::perspective(0.9, 1.0),
            (40, 30),
        )
        .unwrap();
        let img = render_perspective(&cloud, &pose, RenderOptions::default()).unwrap();
        let proj = pose.projector();
        let mut best: Vec<Option<(f64, usize)>> = vec![None; 40 * 30];
        for (i, p) in cloud.points.iter().enumerate() {
            if let Some(ip) = proj.project(p.position) {
                if let Some((x, y)) = proj.pixel(&ip) {
                    let slot = &mut best[y * 40 + x];
                    if slot.is_none_or(|(d, _)| ip.depth < d) {
                        *slot = Some((ip.depth, i));
                    }
                }
            }
        }
        for (k, b) in best.iter().enumerate() {
            assert_eq!(img.valid[k], b.is_some());
            if let Some((d, i)) = *b {
                assert_eq!(img.texels[k].depth, d);
                assert_eq!(img.source_point[k], Some(i as u32));
            }
        }
    }

    #[test]
    fn rendering_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cloud = random_cloud(&mut rng, 2000);
        let mut shuffled = cloud.clone();
        shuffled.points.reverse();
        for v in OrthoView::ALL {
            let a = render_orthographic(&cloud, v, &unit_box(), (64, 64), RenderOptions::default()).unwrap();
            let b = render_orthographic(&shuffled, v, &unit_box(), (64, 64), RenderOptions::default()).unwrap();
            assert_eq!(a.texels, b.texels);
            assert_eq!(a.valid, b.valid);
        }
    }

    #[test]
    fn depth_ties_go_to_lower_index() {
        let cloud = PointCloud::new(vec![
            colored([0.5, 0.5, 0.5], [1.0, 0.0, 0.0]),
            colored([0.5, 0.5, 0.5], [0.0, 1.0, 0.0]),
        ]);
        let img = render_orthographic(&cloud, OrthoView::Top, &unit_box(), (8, 8), RenderOptions::default()).unwrap();
        let k = img.valid.iter().position(|v| *v).unwrap();
        assert_eq!(img.source_point[k], Some(0));
    }

    #[test]
    fn splat_radius_paints_square() {
        let cloud = PointCloud::new(vec![colored([0.5, 0.5, 0.5], [1.0; 3])]);
        let img = render_orthographic(
            &cloud,
            OrthoView::Top,
            &unit_box(),
            (32, 32),
            RenderOptions { splat_radius: 2 },
        )
        .unwrap();
        assert_eq!(img.valid_count(), 9);
    }

    #[test]
    fn on_axis_point_lands_at_center_with_ray_depth() {
        let cloud = PointCloud::new(vec![colored([0.0, 0.0, 0.0], [1.0; 3])]);
        let pose = CameraPose::new(
            Vec3::new(0.0, 0.0, 1.7),
            Vec3::zero(),
            Vec3::unit_y(),
            Projection::perspective(1.0, 1.0),
            (225, 225),
        )
        .unwrap();
        let img = render_perspective(&cloud, &pose, RenderOptions::default()).unwrap();
        assert!(img.is_valid(112, 112));
        assert!((img.texel(112, 112).depth - 1.7).abs() < 1e-12);
    }

    #[test]
    fn perspective_rejects_orthographic_pose() {
        let cloud = PointCloud::new(vec![colored([0.0, 0.0, 0.0], [1.0; 3])]);
        let pose = OrthoView::Top.pose(&unit_box(), (8, 8)).unwrap();
        assert!(render_perspective(&cloud, &pose, RenderOptions::default()).is_err());
    }

    #[test]
    fn zoom_coverage_spot_values() {
        use std::f64::consts::FRAC_PI_2;
        assert!((zoom_coverage(FRAC_PI_2, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((zoom_coverage(FRAC_PI_2, 2.0, 1.0).unwrap() - 0.82843).abs() < 1e-5);
        assert!((zoom_coverage(FRAC_PI_2, 4.0, 1.0).unwrap() - 0.39782).abs() < 1e-5);
        assert!(zoom_coverage(FRAC_PI_2, 0.5, 1.0).is_err());
        assert!(zoom_coverage(0.0, 1.0, 1.0).is_err());
        assert!(zoom_coverage(FRAC_PI_2, 1.0, 0.0).is_err());
        assert!((pixel_resolution(224, 2.0f64) - 112.0).abs() < 1e-12);
    }

    #[test]
    fn zoom_coverage_is_monotone() {
        let w = |a: f64, z: f64, d: f64| zoom_coverage(a, z, d).unwrap();
        for i in 0..50 {
            let z = 1.0 + i as f64 * 0.2;
            assert!(w(1.0, z + 0.2, 1.0) < w(1.0, z, 1.0));
            assert!(w(1.0, z, 1.1) > w(1.0, z, 1.0));
            assert!(w(1.1, z, 1.0) > w(1.0, z, 1.0));
        }
    }
}
