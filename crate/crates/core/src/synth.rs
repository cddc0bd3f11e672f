//! Seeded synthetic scenes with a known target, on a unit-cube workspace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::OracleMode;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::pipeline::ActionHints;
use crate::scene::{Point, PointCloud};
use crate::scoring::VisibilityParams;

/// Generator family; recorded in reports so fixtures can be regenerated.
pub const PRNG_ID: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64)";

pub const TABLE_HEIGHT: f64 = 0.05;

/// Distance from the target centre to each occluding plate.
pub const PLATE_OFFSET: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// Table plus a spherical target.
    PlantedSphere,
    /// Table, target, and three plates that each hide half of the target
    /// from one of the orthographic views.
    OccluderWall,
    /// Uniform random points plus a spherical target.
    Clutter,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::PlantedSphere => "planted_sphere",
            SceneKind::OccluderWall => "occluder_wall",
            SceneKind::Clutter => "clutter",
        }
    }
}

impl std::str::FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planted_sphere" => Ok(SceneKind::PlantedSphere),
            "occluder_wall" => Ok(SceneKind::OccluderWall),
            "clutter" => Ok(SceneKind::Clutter),
            _ => Err(Error::Domain(format!(
                "unknown scene kind {s:?}; expected planted_sphere, occluder_wall or clutter"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Random points for `clutter`.
    pub clutter_points: usize,
    /// Points on the target sphere.
    pub target_points: usize,
    /// Table and plate sampling pitch, meters.
    pub surface_spacing: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            clutter_points: 500,
            target_points: 1200,
            surface_spacing: 0.008,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.target_points < 4 {
            return Err(Error::Domain("target_points must be at least 4".into()));
        }
        if !(self.surface_spacing >= 0.001 && self.surface_spacing <= 0.1) {
            return Err(Error::Domain(format!(
                "surface_spacing {} outside [0.001, 0.1]",
                self.surface_spacing
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub target: Vec3<f64>,
    pub target_radius: f64,
    pub action: ActionHints<f64>,
}

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub kind: SceneKind,
    pub seed: u64,
    pub cloud: PointCloud<f64>,
    pub ground_truth: GroundTruth,
    pub workspace: Aabb<f64>,
    /// Visibility settings that keep the target's own surface from counting
    /// as an occluder.
    pub visibility: VisibilityParams<f64>,
    pub oracle_mode: OracleMode,
}

pub fn unit_workspace() -> Aabb<f64> {
    Aabb::cube(Vec3::splat(0.5), 0.5).expect("unit cube")
}

pub fn generate(kind: SceneKind, seed: u64, params: &SynthParams) -> Result<SyntheticScene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let (target, radius, oracle_mode) = match kind {
        SceneKind::PlantedSphere => {
            let r = rng.gen_range(0.03..0.05);
            let c = Vec3::new(
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.2..0.8),
                rng.gen_range(TABLE_HEIGHT + r..0.6),
            );
            table(&mut points, params.surface_spacing);
            sphere(&mut points, c, r, params.target_points, [0.9, 0.1, 0.1]);
            (c, r, OracleMode::Projected)
        }
        SceneKind::OccluderWall => {
            let r = rng.gen_range(0.03..0.04);
            let c = Vec3::new(
                rng.gen_range(0.35..0.65),
                rng.gen_range(0.35..0.65),
                TABLE_HEIGHT + r + rng.gen_range(0.0..0.1),
            );
            table(&mut points, params.surface_spacing);
            sphere(&mut points, c, r, params.target_points, [0.9, 0.1, 0.1]);
            plates(&mut points, c, params.surface_spacing.min(0.003));
            let mode = OracleMode::VisibleCentroid {
                target_radius: r * 1.05 + 0.002,
            };
            (c, r, mode)
        }
        SceneKind::Clutter => {
            let r = rng.gen_range(0.03..0.05);
            let c = Vec3::new(
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.2..0.8),
                rng.gen_range(0.2..0.8),
            );
            for _ in 0..params.clutter_points {
                let p = Vec3::new(rng.gen(), rng.gen(), rng.gen());
                let color = [rng.gen(), rng.gen(), rng.gen()];
                points.push(Point::new(p, color));
            }
            sphere(&mut points, c, r, params.target_points, [0.9, 0.1, 0.1]);
            (c, r, OracleMode::Projected)
        }
    };
    let action = ActionHints {
        euler_deg: [0; 3].map(|_| rng.gen_range(0.0..360.0)),
        gripper: rng.gen_range(0..2),
        collision: rng.gen_range(0..2),
    };
    // A clearance of at least the target radius turns the ray test into a
    // tube test: the whole target cross-section must be unobstructed. The
    // exclusion skips samples that would otherwise hit the target itself,
    // with 3 cm to spare for the coarse estimate's offset.
    let clearance = radius + 0.01;
    let visibility = VisibilityParams::new(128, clearance, radius + clearance + 0.03)?;
    Ok(SyntheticScene {
        kind,
        seed,
        cloud: PointCloud::new(points),
        ground_truth: GroundTruth {
            target,
            target_radius: radius,
            action,
        },
        workspace: unit_workspace(),
        visibility,
        oracle_mode,
    })
}

fn table(points: &mut Vec<Point<f64>>, spacing: f64) {
    grid(
        points,
        |u, v| Vec3::new(u, v, TABLE_HEIGHT),
        (0.0, 1.0),
        (0.0, 1.0),
        spacing,
        [0.55, 0.45, 0.35],
    );
}

/// Fills the rectangle `[u0, u1] x [v0, v1]` mapped through `at`.
fn grid(
    points: &mut Vec<Point<f64>>,
    at: impl Fn(f64, f64) -> Vec3<f64>,
    (u0, u1): (f64, f64),
    (v0, v1): (f64, f64),
    spacing: f64,
    color: [f64; 3],
) {
    let nu = ((u1 - u0) / spacing).round().max(1.0) as usize;
    let nv = ((v1 - v0) / spacing).round().max(1.0) as usize;
    for i in 0..=nu {
        for j in 0..=nv {
            let u = u0 + (u1 - u0) * i as f64 / nu as f64;
            let v = v0 + (v1 - v0) * j as f64 / nv as f64;
            points.push(Point::new(at(u, v), color));
        }
    }
}

/// Fibonacci lattice on a sphere.
fn sphere(points: &mut Vec<Point<f64>>, center: Vec3<f64>, radius: f64, n: usize, color: [f64; 3]) {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let rho = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        let dir = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
        points.push(Point::new(center + dir * radius, color));
    }
}

/// Each plate hides one half of the target from one orthographic camera:
/// the top camera loses `x < cx`, the front camera (looking along +y) loses
/// `z > cz`, the right camera (looking along -x) loses `y > cy`.
fn plates(points: &mut Vec<Point<f64>>, c: Vec3<f64>, spacing: f64) {
    let gray = [0.6, 0.6, 0.65];
    let span = 0.25;
    let d = PLATE_OFFSET;
    let z_lo = TABLE_HEIGHT + spacing;
    grid(
        points,
        |x, y| Vec3::new(x, y, c.z + d),
        (c.x - span, c.x),
        (c.y - span, c.y + span),
        spacing,
        gray,
    );
    grid(
        points,
        |x, z| Vec3::new(x, c.y - d, z),
        (c.x - span, c.x + span),
        (c.z, c.z + span),
        spacing,
        gray,
    );
    grid(
        points,
        |y, z| Vec3::new(c.x + d, y, z),
        (c.y, c.y + span),
        (z_lo, c.z + span),
        spacing,
        gray,
    );
}
