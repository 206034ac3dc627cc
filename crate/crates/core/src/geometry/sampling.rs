use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::TriMesh;

/// Points sampled on a mesh surface, in the mesh's body frame.
#[derive(Debug, Clone)]
pub struct SurfacePointSet {
    pub points: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub triangle_ids: Vec<usize>,
    /// Surface area represented by each point (m²).
    pub area_weights: Vec<f64>,
}

impl SurfacePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset by index, preserving order.
    pub fn select(&self, indices: &[usize]) -> SurfacePointSet {
        SurfacePointSet {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            triangle_ids: indices.iter().map(|&i| self.triangle_ids[i]).collect(),
            area_weights: indices.iter().map(|&i| self.area_weights[i]).collect(),
        }
    }

    /// Mean nearest-neighbour spacing implied by the sampling density.
    pub fn nominal_spacing(&self) -> f64 {
        let area: f64 = self.area_weights.iter().sum();
        (area / self.len() as f64).sqrt()
    }
}

/// Area-uniform surface sample with `round(density * area)` points
/// (at least one).
pub fn sample_surface(mesh: &TriMesh, density: f64, seed: u64) -> SurfacePointSet {
    assert!(density > 0.0, "sampling density must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = mesh.surface_area();
    let n = ((density * total).round() as usize).max(1);

    let mut cdf = Vec::with_capacity(mesh.areas().len());
    let mut acc = 0.0;
    for a in mesh.areas() {
        acc += a;
        cdf.push(acc);
    }

    let mut out = SurfacePointSet {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        triangle_ids: Vec::with_capacity(n),
        area_weights: vec![total / n as f64; n],
    };
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let t = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        let [a, b, c] = mesh.triangle(t);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let p = a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2);
        out.points.push(p);
        out.normals.push(mesh.normals()[t]);
        out.triangle_ids.push(t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::unit_cube;

    #[test]
    fn cube_count_and_faces() {
        let cube = unit_cube();
        let s = sample_surface(&cube, 600.0, 7);
        let n = s.len() as f64;
        assert!((n - 3600.0).abs() <= 3.0 * 3600f64.sqrt());
        for p in &s.points {
            let on_plane = p.iter().filter(|c| c.abs() < 1e-9 || (*c - 1.0).abs() < 1e-9).count();
            assert_eq!(on_plane, 1, "{p:?}");
        }
        let total: f64 = s.area_weights.iter().sum();
        assert!((total - 6.0).abs() / 6.0 < 1e-6);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cube = unit_cube();
        let a = sample_surface(&cube, 100.0, 3);
        let b = sample_surface(&cube, 100.0, 3);
        assert_eq!(a.points, b.points);
        assert_eq!(a.triangle_ids, b.triangle_ids);
    }

    #[test]
    fn points_lie_on_their_triangle() {
        let cube = unit_cube();
        let s = sample_surface(&cube, 50.0, 1);
        for (p, &t) in s.points.iter().zip(&s.triangle_ids) {
            let [a, _, _] = cube.triangle(t);
            let n = cube.normals()[t];
            assert!((p - a).dot(&n).abs() < 1e-9);
            assert_eq!(s.normals[s.points.iter().position(|q| q == p).unwrap()], n);
        }
    }
}
