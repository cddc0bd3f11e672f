//! Exact nearest-neighbor search over an immutable cloud snapshot.
//!
//! The tree is stored implicitly: every index range `[lo, hi)` larger than a
//! leaf keeps its median at `(lo + hi) / 2`, partitioned along the axis of
//! largest spread. Distances are computed with the same expression as the
//! linear scan, so results agree bit for bit.

use std::cmp::Ordering;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

const LEAF_SIZE: usize = 8;

/// Result of a nearest-neighbor query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest<T> {
    pub distance: T,
    /// Index of the point in the source cloud. Ties go to the lowest index.
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct SpatialIndex<T> {
    positions: Vec<Vec3<T>>,
    /// Permutation of point indices laid out as an implicit tree.
    order: Vec<u32>,
    /// Split axis of the node whose median sits at this slot.
    axes: Vec<u8>,
}

impl<T: Real> SpatialIndex<T> {
    pub fn build(cloud: &PointCloud<T>) -> Result<Self> {
        Self::from_positions(cloud.positions().collect())
    }

    pub fn from_positions(positions: Vec<Vec3<T>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyInput("spatial index over an empty cloud"));
        }
        if positions.len() > u32::MAX as usize {
            return Err(Error::Capacity(format!(
                "{} points exceed index capacity",
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::Domain(format!("point {i} has a non-finite coordinate")));
        }
        let mut order: Vec<u32> = (0..positions.len() as u32).collect();
        let mut axes = vec![0u8; positions.len()];
        build_range(&positions, &mut order, &mut axes);
        Ok(Self { positions, order, axes })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn nearest(&self, query: Vec3<T>) -> Nearest<T> {
        let mut best = (T::infinity(), usize::MAX);
        self.search(query, 0, self.order.len(), &mut best);
        Nearest {
            distance: best.0.sqrt(),
            index: best.1,
        }
    }

    /// Exact minimum Euclidean distance from `query` to any stored point.
    pub fn nearest_distance(&self, query: Vec3<T>) -> T {
        self.nearest(query).distance
    }

    fn search(&self, q: Vec3<T>, lo: usize, hi: usize, best: &mut (T, usize)) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let i = i as usize;
                let d2 = q.distance_squared(self.positions[i]);
                if is_better(d2, i, best) {
                    *best = (d2, i);
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let axis = self.axes[mid] as usize;
        let pivot = self.order[mid] as usize;
        let p = self.positions[pivot];
        let d2 = q.distance_squared(p);
        if is_better(d2, pivot, best) {
            *best = (d2, pivot);
        }
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < T::zero() {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, best);
        // Any point across the plane is at least |diff| away; keep equality so
        // a lower-index tie on the far side is still found.
        if diff * diff <= best.0 {
            self.search(q, far.0, far.1, best);
        }
    }
}

#[inline]
fn is_better<T: Real>(d2: T, index: usize, best: &(T, usize)) -> bool {
    d2 < best.0 || (d2 == best.0 && index < best.1)
}

fn build_range<T: Real>(pos: &[Vec3<T>], order: &mut [u32], axes: &mut [u8]) {
    let n = order.len();
    if n <= LEAF_SIZE {
        return;
    }
    let axis = widest_axis(pos, order);
    let mid = n / 2;
    let key = |&i: &u32| (pos[i as usize][axis], i);
    order.select_nth_unstable_by(mid, |a, b| {
        let (ka, ia) = key(a);
        let (kb, ib) = key(b);
        ka.partial_cmp(&kb).unwrap_or(Ordering::Equal).then(ia.cmp(&ib))
    });
    axes[mid] = axis as u8;
    let (left, rest) = order.split_at_mut(mid);
    let (left_axes, rest_axes) = axes.split_at_mut(mid);
    build_range(pos, left, left_axes);
    build_range(pos, &mut rest[1..], &mut rest_axes[1..]);
}

fn widest_axis<T: Real>(pos: &[Vec3<T>], order: &[u32]) -> usize {
    let first = pos[order[0] as usize];
    let (lo, hi) = order.iter().fold((first, first), |(lo, hi), &i| {
        let p = pos[i as usize];
        (lo.component_min(p), hi.component_max(p))
    });
    let spread = hi - lo;
    let mut axis = 0;
    for a in 1..3 {
        if spread[a] > spread[axis] {
            axis = a;
        }
    }
    axis
}

/// Reference linear scan with the same tie rule as [`SpatialIndex::nearest`].
pub fn linear_nearest<T: Real>(positions: &[Vec3<T>], query: Vec3<T>) -> Option<Nearest<T>> {
    let mut best = (T::infinity(), usize::MAX);
    for (i, p) in positions.iter().enumerate() {
        let d2 = query.distance_squared(*p);
        if is_better(d2, i, &best) {
            best = (d2, i);
        }
    }
    (best.1 != usize::MAX).then(|| Nearest {
        distance: best.0.sqrt(),
        index: best.1,
    })
}
