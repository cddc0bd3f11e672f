//! Look-at camera poses with orthographic or zoomable pinhole projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// `|forward . up_hint|` above this triggers the up-vector fallback.
pub const PARALLEL_TOLERANCE: f64 = 1e-6;

/// Orthonormal camera frame. Image `u` grows along `right`, image `v` grows
/// along `-up`, depth grows along `forward`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraBasis<T> {
    pub right: Vec3<T>,
    pub up: Vec3<T>,
    pub forward: Vec3<T>,
}

impl<T: Real> CameraBasis<T> {
    /// World-to-camera rotation with rows `(right, -up, forward)`, i.e. the
    /// x-right / y-down / z-forward image frame. Its determinant is +1.
    pub fn rotation(&self) -> [[T; 3]; 3] {
        let down = -self.up;
        [self.right.to_array(), down.to_array(), self.forward.to_array()]
    }

    pub fn to_camera(&self, eye: Vec3<T>, p: Vec3<T>) -> Vec3<T> {
        let d = p - eye;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }
}

/// Builds the camera frame looking from `eye` at `target`.
///
/// When `up_hint` is (nearly) parallel to the viewing direction it is
/// replaced by the world axis least aligned with it, x before y before z on
/// ties.
pub fn look_at<T: Real>(eye: Vec3<T>, target: Vec3<T>, up_hint: Vec3<T>) -> Result<CameraBasis<T>> {
    let forward = (target - eye)
        .try_normalize()
        .ok_or_else(|| Error::Degenerate("look-at eye coincides with target".into()))?;
    let hint = up_hint
        .try_normalize()
        .filter(|h| forward.dot(*h).abs() <= T::one() - T::lit(PARALLEL_TOLERANCE))
        .unwrap_or_else(|| least_aligned_axis(forward));
    let right = forward.cross(hint).normalize();
    let up = right.cross(forward);
    Ok(CameraBasis { right, up, forward })
}

fn least_aligned_axis<T: Real>(dir: Vec3<T>) -> Vec3<T> {
    let axes = [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()];
    let mut best = axes[0];
    let mut best_dot = dir.x.abs();
    for (axis, d) in axes.into_iter().zip([dir.x, dir.y, dir.z]).skip(1) {
        if d.abs() < best_dot {
            best = axis;
            best_dot = d.abs();
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Projection<T> {
    /// Parallel projection; `extent` is the image width in meters.
    Orthographic { extent: T },
    /// Pinhole with horizontal field of view `fov_alpha / zoom_z`.
    Perspective { fov_alpha: T, zoom_z: T },
}

impl<T: Real> Projection<T> {
    pub fn perspective(fov_alpha: T, zoom_z: T) -> Self {
        Projection::Perspective { fov_alpha, zoom_z }
    }
}

/// A point mapped into continuous image coordinates. Pixel `(i, j)` covers
/// `[i, i+1) x [j, j+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImagePoint<T> {
    pub u: T,
    pub v: T,
    /// Camera-frame depth: distance along the view axis for orthographic
    /// cameras, Euclidean distance from the eye for perspective cameras.
    pub depth: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CameraPose<T> {
    pub eye: Vec3<T>,
    pub target: Vec3<T>,
    pub up: Vec3<T>,
    pub projection: Projection<T>,
    /// `(width, height)` in pixels.
    pub image_size: (u32, u32),
}

impl<T: Real> CameraPose<T> {
    /// Validated pose. `up` is stored as the orthogonalized camera up vector.
    pub fn new(
        eye: Vec3<T>,
        target: Vec3<T>,
        up_hint: Vec3<T>,
        projection: Projection<T>,
        image_size: (u32, u32),
    ) -> Result<Self> {
        if image_size.0 == 0 || image_size.1 == 0 {
            return Err(Error::Domain("image size must be positive".into()));
        }
        match projection {
            Projection::Orthographic { extent } => {
                if !(extent > T::zero() && extent.is_finite()) {
                    return Err(Error::Domain(format!("orthographic extent {extent} must be positive")));
                }
            }
            Projection::Perspective { fov_alpha, zoom_z } => {
                if !(fov_alpha > T::zero() && fov_alpha < T::PI()) {
                    return Err(Error::Domain(format!("field of view {fov_alpha} outside (0, pi)")));
                }
                if !(zoom_z >= T::one() && zoom_z.is_finite()) {
                    return Err(Error::Domain(format!("zoom factor {zoom_z} must be >= 1")));
                }
            }
        }
        let basis = look_at(eye, target, up_hint)?;
        Ok(Self {
            eye,
            target,
            up: basis.up,
            projection,
            image_size,
        })
    }

    /// Same pose with the zoom factor replaced. Orthographic poses are
    /// rejected.
    pub fn zoomed(&self, zoom_z: T) -> Result<Self> {
        match self.projection {
            Projection::Perspective { fov_alpha, .. } => Self::new(
                self.eye,
                self.target,
                self.up,
                Projection::perspective(fov_alpha, zoom_z),
                self.image_size,
            ),
            Projection::Orthographic { .. } => Err(Error::Domain("zoom applies to perspective poses only".into())),
        }
    }

    pub fn basis(&self) -> CameraBasis<T> {
        // Validated at construction; the stored up is orthogonal to forward.
        look_at(self.eye, self.target, self.up).expect("pose validated at construction")
    }

    pub fn width(&self) -> usize {
        self.image_size.0 as usize
    }

    pub fn height(&self) -> usize {
        self.image_size.1 as usize
    }

    pub fn distance_to_target(&self) -> T {
        self.eye.distance(self.target)
    }

    /// Pinhole focal length in pixels, `None` for orthographic poses.
    pub fn focal_px(&self) -> Option<T> {
        match self.projection {
            Projection::Perspective { fov_alpha, zoom_z } => {
                let half = (fov_alpha / (T::lit(2.0) * zoom_z)).tan();
                Some(T::from_usize_lossy(self.width()) * T::lit(0.5) / half)
            }
            Projection::Orthographic { .. } => None,
        }
    }

    /// A projector with the basis precomputed, for bulk projection.
    pub fn projector(&self) -> Projector<T> {
        Projector::new(self)
    }

    pub fn project(&self, p: Vec3<T>) -> Option<ImagePoint<T>> {
        self.projector().project(p)
    }
}

/// Cached projection state for one pose.
#[derive(Clone, Copy, Debug)]
pub struct Projector<T> {
    eye: Vec3<T>,
    basis: CameraBasis<T>,
    kind: ProjectorKind<T>,
    half_w: T,
    half_h: T,
    width: usize,
    height: usize,
}

#[derive(Clone, Copy, Debug)]
enum ProjectorKind<T> {
    Ortho { px_per_m: T },
    Pinhole { focal: T },
}

impl<T: Real> Projector<T> {
    fn new(pose: &CameraPose<T>) -> Self {
        let w = T::from_usize_lossy(pose.width());
        let kind = match pose.projection {
            Projection::Orthographic { extent } => ProjectorKind::Ortho { px_per_m: w / extent },
            Projection::Perspective { .. } => ProjectorKind::Pinhole {
                focal: pose.focal_px().unwrap(),
            },
        };
        Self {
            eye: pose.eye,
            basis: pose.basis(),
            kind,
            half_w: w * T::lit(0.5),
            half_h: T::from_usize_lossy(pose.height()) * T::lit(0.5),
            width: pose.width(),
            height: pose.height(),
        }
    }

    pub fn basis(&self) -> &CameraBasis<T> {
        &self.basis
    }

    /// Continuous image coordinates; `None` for points at or behind a
    /// pinhole camera.
    #[inline]
    pub fn project(&self, p: Vec3<T>) -> Option<ImagePoint<T>> {
        self.project_camera(self.basis.to_camera(self.eye, p))
    }

    /// Camera-frame coordinates `(right, up, forward)` of a world point.
    #[inline]
    pub fn to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        self.basis.to_camera(self.eye, p)
    }

    /// Camera-frame direction of a world displacement.
    #[inline]
    pub fn rotate(&self, d: Vec3<T>) -> Vec3<T> {
        Vec3::new(d.dot(self.basis.right), d.dot(self.basis.up), d.dot(self.basis.forward))
    }

    /// [`Projector::project`] for a point already in camera coordinates.
    /// Pinhole depth is the Euclidean norm of `c`.
    #[inline]
    pub fn project_camera(&self, c: Vec3<T>) -> Option<ImagePoint<T>> {
        match self.kind {
            ProjectorKind::Ortho { px_per_m } => Some(ImagePoint {
                u: self.half_w + c.x * px_per_m,
                v: self.half_h - c.y * px_per_m,
                depth: c.z,
            }),
            ProjectorKind::Pinhole { focal } => {
                if c.z <= T::zero() {
                    return None;
                }
                Some(ImagePoint {
                    u: self.half_w + focal * c.x / c.z,
                    v: self.half_h - focal * c.y / c.z,
                    depth: c.norm(),
                })
            }
        }
    }

    /// Pixel containing a continuous image point, if inside the image. The
    /// far image edges are closed so points on a workspace boundary land in
    /// the last row or column.
    #[inline]
    pub fn pixel(&self, ip: &ImagePoint<T>) -> Option<(usize, usize)> {
        let (u, v) = (ip.u.floor(), ip.v.floor());
        if u < T::zero() || v < T::zero() {
            return None;
        }
        let (mut u, mut v) = (u.to_usize()?, v.to_usize()?);
        if u == self.width && ip.u == u_edge(self.width) {
            u -= 1;
        }
        if v == self.height && ip.v == u_edge(self.height) {
            v -= 1;
        }
        (u < self.width && v < self.height).then_some((u, v))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

#[inline]
fn u_edge<T: Real>(n: usize) -> T {
    T::from_usize_lossy(n)
}
