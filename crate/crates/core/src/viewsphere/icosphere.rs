use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// Deepest subdivision accepted; level 6 already has 40962 vertices.
pub const MAX_LEVEL: u32 = 6;

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

/// Unit-sphere triangle mesh from recursive midpoint subdivision of a
/// regular icosahedron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GeodesicSphere<T> {
    pub level: u32,
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
}

impl<T: Real> GeodesicSphere<T> {
    /// Vertex count of midpoint subdivision at `level`: `10 * 4^level + 2`.
    pub fn expected_vertices(level: u32) -> usize {
        10 * 4usize.pow(level) + 2
    }

    pub fn expected_faces(level: u32) -> usize {
        20 * 4usize.pow(level)
    }
}

/// Splits every triangle into four through its edge midpoints, pushing the
/// midpoints back onto the unit sphere. Shared edges get a single midpoint.
pub fn subdivide_icosahedron<T: Real>(level: u32) -> Result<GeodesicSphere<T>> {
    if level > MAX_LEVEL {
        return Err(Error::Capacity(format!(
            "subdivision level {level} exceeds the maximum of {MAX_LEVEL}"
        )));
    }
    let phi = (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0);
    let (o, z) = (T::one(), T::zero());
    let mut vertices: Vec<Vec3<T>> = [
        [-o, phi, z],
        [o, phi, z],
        [-o, -phi, z],
        [o, -phi, z],
        [z, -o, phi],
        [z, o, phi],
        [z, -o, -phi],
        [z, o, -phi],
        [phi, z, -o],
        [phi, z, o],
        [-phi, z, -o],
        [-phi, z, o],
    ]
    .into_iter()
    .map(|v| Vec3::from(v).normalize())
    .collect();
    let mut faces = ICOSAHEDRON_FACES.to_vec();

    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3<T>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * T::lit(0.5)).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    Ok(GeodesicSphere { level, vertices, faces })
}

/// The closed-form sampling count `12 + 30k + (20/3)(4^k - 1)` as published
/// for this sampling scheme. It disagrees with midpoint subdivision for every
/// `k >= 1` (62 vs 42 at `k = 1`); [`subdivide_icosahedron`] follows the
/// mesh construction and this function exists so the gap stays visible.
///
/// Returns `None` when the count overflows `u128`.
pub fn paper_vertex_count(level: u32) -> Option<u128> {
    let pow = 4u128.checked_pow(level)?;
    // 4^k - 1 is always divisible by 3.
    let tail = (pow - 1).checked_mul(20)? / 3;
    30u128.checked_mul(level as u128)?.checked_add(12)?.checked_add(tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_first_levels() {
        for (k, v, f) in [(0, 12, 20), (1, 42, 80), (2, 162, 320)] {
            let s = subdivide_icosahedron::<f64>(k).unwrap();
            assert_eq!(s.vertices.len(), v);
            assert_eq!(s.faces.len(), f);
        }
    }

    #[test]
    fn counts_follow_closed_form() {
        for k in 0..=5 {
            let s = subdivide_icosahedron::<f64>(k).unwrap();
            assert_eq!(s.vertices.len(), GeodesicSphere::<f64>::expected_vertices(k));
            assert_eq!(s.faces.len(), GeodesicSphere::<f64>::expected_faces(k));
        }
    }

    #[test]
    fn published_count_formula() {
        assert_eq!(paper_vertex_count(0), Some(12));
        assert_eq!(paper_vertex_count(1), Some(62));
        assert_eq!(paper_vertex_count(2), Some(172));
        assert_eq!(paper_vertex_count(3), Some(12 + 90 + 420));
        assert_eq!(paper_vertex_count(200), None);
    }

    #[test]
    fn level_above_cap_is_rejected() {
        assert!(matches!(subdivide_icosahedron::<f64>(7), Err(Error::Capacity(_))));
    }

    #[test]
    fn vertices_are_unit() {
        for k in 0..=4 {
            for v in subdivide_icosahedron::<f64>(k).unwrap().vertices {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
        for v in subdivide_icosahedron::<f32>(3).unwrap().vertices {
            assert!((v.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mesh_is_closed() {
        for k in 0..=3 {
            let s = subdivide_icosahedron::<f64>(k).unwrap();
            let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
            for f in &s.faces {
                for e in 0..3 {
                    let (a, b) = (f[e], f[(e + 1) % 3]);
                    *edges.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            assert!(edges.values().all(|&c| c == 2));
            // Euler characteristic of a sphere.
            assert_eq!(s.vertices.len() + s.faces.len(), edges.len() + 2);
        }
    }

    #[test]
    fn faces_wind_outward() {
        let s = subdivide_icosahedron::<f64>(2).unwrap();
        for &[a, b, c] in &s.faces {
            let (va, vb, vc) = (s.vertices[a], s.vertices[b], s.vertices[c]);
            let n = (vb - va).cross(vc - va);
            assert!(n.dot(va + vb + vc) > 0.0);
        }
    }

    #[test]
    fn min_separation_shrinks_with_level() {
        let mut prev = f64::INFINITY;
        for k in 0..=3 {
            let v = subdivide_icosahedron::<f64>(k).unwrap().vertices;
            let mut min = f64::INFINITY;
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    min = min.min(v[i].dot(v[j]).clamp(-1.0, 1.0).acos());
                }
            }
            assert!(min > 0.0);
            assert!(min < prev);
            prev = min;
        }
    }
}
