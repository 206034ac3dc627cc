//! Tool face segmentation: K-Means over the unique surface normals groups the
//! samples by orientation, then DBSCAN splits each orientation group into
//! spatially connected faces.

mod dbscan;
mod kmeans;

use std::collections::BTreeMap;

use nalgebra::Vector3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::SurfacePointSet;
use crate::par::{map_slice, Exec};

pub use dbscan::{dbscan, Labels};
pub use kmeans::kmeans;

/// Quantisation step for normal de-duplication.
pub const NORMAL_QUANTUM: f64 = 1e-6;
/// Upper bound for the default cluster count on curved meshes.
pub const DEFAULT_MAX_CLUSTERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// K-Means cluster count; `None` picks `min(12, unique normals)`.
    pub n_clusters: Option<usize>,
    /// DBSCAN neighbourhood radius (m).
    pub epsilon: f64,
    /// DBSCAN minimum samples.
    pub n_min: usize,
    /// Contact particles initialised per face.
    pub n_face: usize,
    /// Seed for K-Means++ initialisation.
    pub seed: u64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            n_clusters: None,
            epsilon: 5e-3,
            n_min: 3,
            n_face: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SegmentationError {
    #[error("invalid segmentation parameters: {0}")]
    InvalidParams(&'static str),
    #[error("cannot segment an empty point set")]
    EmptyPoints,
    #[error("face set is empty")]
    EmptyFaceSet,
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        if self.n_clusters == Some(0) {
            return Err(SegmentationError::InvalidParams("n_clusters must be >= 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(SegmentationError::InvalidParams("epsilon must be > 0"));
        }
        if self.n_min == 0 {
            return Err(SegmentationError::InvalidParams("n_min must be >= 1"));
        }
        if self.n_face == 0 {
            return Err(SegmentationError::InvalidParams("n_face must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Indices into the segmented [`SurfacePointSet`].
    pub indices: Vec<usize>,
    pub mean_normal: Vector3<f64>,
    pub centroid: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct FaceSet {
    pub faces: Vec<Face>,
    /// DBSCAN noise points, excluded from every face.
    pub noise: Vec<usize>,
    /// Face of each sample, `None` for noise.
    pub point_face: Vec<Option<usize>>,
}

impl FaceSet {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// A face set with every sample in one face; used for unsegmented
    /// (random) contact initialisation.
    pub fn single(points: &SurfacePointSet) -> FaceSet {
        let indices: Vec<usize> = (0..points.len()).collect();
        let face = make_face(points, indices);
        FaceSet {
            faces: vec![face],
            noise: Vec::new(),
            point_face: vec![Some(0); points.len()],
        }
    }
}

fn quantize(n: &Vector3<f64>) -> [i64; 3] {
    [
        (n.x / NORMAL_QUANTUM).round() as i64,
        (n.y / NORMAL_QUANTUM).round() as i64,
        (n.z / NORMAL_QUANTUM).round() as i64,
    ]
}

/// Distinct sample normals under per-component quantisation, in canonical
/// (sorted) order.
pub fn get_unique_normals(points: &SurfacePointSet) -> Vec<Vector3<f64>> {
    let mut unique: BTreeMap<[i64; 3], Vector3<f64>> = BTreeMap::new();
    for n in &points.normals {
        unique.entry(quantize(n)).or_insert_with_key(|k| {
            Vector3::new(k[0] as f64, k[1] as f64, k[2] as f64).normalize()
        });
    }
    unique.into_values().collect()
}

fn make_face(points: &SurfacePointSet, indices: Vec<usize>) -> Face {
    let n = indices.len() as f64;
    let centroid = indices.iter().map(|&i| points.points[i]).sum::<Vector3<f64>>() / n;
    let mean_normal = indices.iter().map(|&i| points.normals[i]).sum::<Vector3<f64>>() / n;
    Face {
        indices,
        mean_normal,
        centroid,
    }
}

fn lexicographic(a: &Vector3<f64>, b: &Vector3<f64>) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Segments sampled tool surface points into faces.
pub fn segment_tool(
    points: &SurfacePointSet,
    params: &SegmentationParams,
) -> Result<FaceSet, SegmentationError> {
    params.validate()?;
    if points.is_empty() {
        return Err(SegmentationError::EmptyPoints);
    }
    let unique = get_unique_normals(points);
    let requested = params
        .n_clusters
        .unwrap_or_else(|| DEFAULT_MAX_CLUSTERS.min(unique.len()));
    let k = if requested > unique.len() {
        log::warn!(
            "requested {requested} normal clusters but only {} unique normals; using {}",
            unique.len(),
            unique.len()
        );
        unique.len()
    } else {
        requested
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let centroids = kmeans(&unique, k, &mut rng);

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, n) in points.normals.iter().enumerate() {
        groups[kmeans::nearest(&centroids, n)].push(i);
    }
    for g in &mut groups {
        g.sort_by(|&a, &b| lexicographic(&points.points[a], &points.points[b]));
    }

    let clustered = map_slice(Exec::default(), &groups, |_, group| {
        let positions: Vec<Vector3<f64>> = group.iter().map(|&i| points.points[i]).collect();
        dbscan(&positions, params.epsilon, params.n_min)
    });

    let mut faces = Vec::new();
    let mut noise = Vec::new();
    for (group, (labels, n_clusters)) in groups.iter().zip(clustered) {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
        for (&i, label) in group.iter().zip(&labels) {
            match label {
                Some(c) => members[*c].push(i),
                None => noise.push(i),
            }
        }
        faces.extend(members.into_iter().map(|m| make_face(points, m)));
    }
    noise.sort_unstable();
    let mut point_face = vec![None; points.len()];
    for (f, face) in faces.iter().enumerate() {
        for &i in &face.indices {
            point_face[i] = Some(f);
        }
    }
    Ok(FaceSet {
        faces,
        noise,
        point_face,
    })
}

/// Initial contact particle: a sample index and the face holding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClpSeed {
    pub point: usize,
    pub face: usize,
}

/// Draws `n_face` samples uniformly from every face, without replacement when
/// the face is large enough and with replacement otherwise.
pub fn init_clps<R: Rng>(
    faces: &FaceSet,
    n_face: usize,
    rng: &mut R,
) -> Result<Vec<ClpSeed>, SegmentationError> {
    if faces.is_empty() {
        return Err(SegmentationError::EmptyFaceSet);
    }
    let mut out = Vec::with_capacity(n_face * faces.len());
    for (f, face) in faces.faces.iter().enumerate() {
        let m = face.indices.len();
        if m >= n_face {
            for j in index::sample(rng, m, n_face) {
                out.push(ClpSeed { point: face.indices[j], face: f });
            }
        } else {
            for _ in 0..n_face {
                let j = rng.random_range(0..m);
                out.push(ClpSeed { point: face.indices[j], face: f });
            }
        }
    }
    Ok(out)
}

/// Area-uniform initialisation over all face samples, ignoring face structure.
pub fn init_uniform<R: Rng>(
    faces: &FaceSet,
    n_clp: usize,
    rng: &mut R,
) -> Result<Vec<ClpSeed>, SegmentationError> {
    let pool: Vec<ClpSeed> = faces
        .faces
        .iter()
        .enumerate()
        .flat_map(|(f, face)| face.indices.iter().map(move |&point| ClpSeed { point, face: f }))
        .collect();
    if pool.is_empty() {
        return Err(SegmentationError::EmptyFaceSet);
    }
    Ok((0..n_clp).map(|_| pool[rng.random_range(0..pool.len())]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{box_mesh, union, unit_cube};
    use crate::geometry::sample_surface;

    fn cube_params() -> SegmentationParams {
        SegmentationParams {
            n_clusters: Some(6),
            epsilon: 0.1,
            n_min: 5,
            n_face: 10,
            seed: 0,
        }
    }

    #[test]
    fn cube_has_six_unique_normals_and_six_faces() {
        let s = sample_surface(&unit_cube(), 600.0, 1);
        assert_eq!(get_unique_normals(&s).len(), 6);
        let faces = segment_tool(&s, &cube_params()).unwrap();
        assert_eq!(faces.len(), 6);
        for face in &faces.faces {
            assert!(face.indices.len() >= 5);
            for &i in &face.indices {
                let angle = s.normals[i].angle(&face.mean_normal);
                assert!(angle <= 1e-3);
            }
        }
    }

    #[test]
    fn single_triangle_has_one_normal() {
        let s = sample_surface(&unit_cube(), 600.0, 1);
        let idx: Vec<usize> = (0..s.len()).filter(|&i| s.triangle_ids[i] == 0).collect();
        assert_eq!(get_unique_normals(&s.select(&idx)).len(), 1);
    }

    #[test]
    fn coplanar_patches_far_apart_split() {
        use nalgebra::Vector3;
        // Two thin plates 1 m apart; keep only their +z top faces.
        let a = box_mesh(Vector3::new(0.0, 0.0, -0.01), Vector3::new(1.0, 1.0, 0.0)).unwrap();
        let b = box_mesh(Vector3::new(2.0, 0.0, -0.01), Vector3::new(3.0, 1.0, 0.0)).unwrap();
        let both = union(&[&a, &b]).unwrap();
        let s = sample_surface(&both, 400.0, 2);
        let top: Vec<usize> = (0..s.len()).filter(|&i| s.normals[i].z > 0.5).collect();
        let patches = s.select(&top);
        let params = SegmentationParams {
            n_clusters: Some(1),
            epsilon: 0.2,
            n_min: 3,
            n_face: 1,
            seed: 0,
        };
        let faces = segment_tool(&patches, &params).unwrap();
        assert_eq!(faces.len(), 2);
    }

    #[test]
    fn too_many_clusters_is_clamped() {
        let s = sample_surface(&unit_cube(), 600.0, 1);
        let params = SegmentationParams {
            n_clusters: Some(20),
            ..cube_params()
        };
        let faces = segment_tool(&s, &params).unwrap();
        assert_eq!(faces.len(), 6);
    }

    #[test]
    fn init_covers_every_face() {
        let s = sample_surface(&unit_cube(), 600.0, 1);
        let faces = segment_tool(&s, &cube_params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let clps = init_clps(&faces, 10, &mut rng).unwrap();
        assert_eq!(clps.len(), 60);
        for f in 0..6 {
            assert_eq!(clps.iter().filter(|c| c.face == f).count(), 10);
        }
        for c in &clps {
            assert_eq!(faces.point_face[c.point], Some(c.face));
        }
    }

    #[test]
    fn small_face_samples_with_replacement() {
        let s = sample_surface(&unit_cube(), 600.0, 1);
        let fs = FaceSet::single(&s.select(&[0, 1, 2]));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let clps = init_clps(&fs, 10, &mut rng).unwrap();
        assert_eq!(clps.len(), 10);
        assert!(clps.iter().all(|c| c.point < 3));
    }

    #[test]
    fn empty_face_set_is_an_error() {
        let fs = FaceSet {
            faces: vec![],
            noise: vec![],
            point_face: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(init_clps(&fs, 3, &mut rng).is_err());
    }
}
