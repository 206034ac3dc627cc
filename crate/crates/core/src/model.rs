//! A grasped object prepared for estimation: mesh with distance queries,
//! surface samples, face segmentation and per-face sample neighbourhoods.

use nalgebra::Vector3;

use crate::geometry::{sample_surface, Solid, SurfacePointSet, TriMesh};
use crate::segmentation::{segment_tool, FaceSet, SegmentationError, SegmentationParams};

/// Neighbourhood size used by the local contact move.
pub const DEFAULT_NEIGHBORS: usize = 8;

#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub name: String,
    pub solid: Solid,
    pub samples: SurfacePointSet,
    pub faces: FaceSet,
    /// For each sample on a face, the `k` nearest samples on the same face
    /// (itself included). Empty for noise samples.
    pub neighbors: Vec<Vec<usize>>,
}

impl ObjectModel {
    pub fn new(
        name: impl Into<String>,
        mesh: TriMesh,
        density: f64,
        sample_seed: u64,
        params: &SegmentationParams,
    ) -> Result<Self, SegmentationError> {
        let samples = sample_surface(&mesh, density, sample_seed);
        let faces = segment_tool(&samples, params)?;
        Ok(Self::from_parts(name, Solid::new(mesh), samples, faces))
    }

    pub fn from_parts(
        name: impl Into<String>,
        solid: Solid,
        samples: SurfacePointSet,
        faces: FaceSet,
    ) -> Self {
        let neighbors = face_neighbors(&samples, &faces, DEFAULT_NEIGHBORS);
        Self {
            name: name.into(),
            solid,
            samples,
            faces,
            neighbors,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        self.solid.mesh()
    }

    /// Index of the sample closest to `p` (body frame).
    pub fn nearest_sample(&self, p: &Vector3<f64>) -> usize {
        self.samples
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - p).norm_squared().total_cmp(&(b.1 - p).norm_squared()))
            .map(|(i, _)| i)
            .expect("model has samples")
    }

    /// Like [`ObjectModel::nearest_sample`] but restricted to face samples.
    pub fn nearest_face_sample(&self, p: &Vector3<f64>) -> usize {
        self.faces
            .faces
            .iter()
            .flat_map(|f| f.indices.iter().copied())
            .min_by(|&a, &b| {
                (self.samples.points[a] - p)
                    .norm_squared()
                    .total_cmp(&(self.samples.points[b] - p).norm_squared())
            })
            .expect("model has faces")
    }
}

fn face_neighbors(samples: &SurfacePointSet, faces: &FaceSet, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); samples.len()];
    for face in &faces.faces {
        let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(face.indices.len());
        for &i in &face.indices {
            scratch.clear();
            let p = samples.points[i];
            scratch.extend(
                face.indices
                    .iter()
                    .map(|&j| ((samples.points[j] - p).norm_squared(), j)),
            );
            let take = k.min(scratch.len());
            if take < scratch.len() {
                scratch.select_nth_unstable_by(take - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            }
            let mut nn: Vec<(f64, usize)> = scratch[..take].to_vec();
            nn.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            out[i] = nn.into_iter().map(|(_, j)| j).collect();
        }
    }
    out
}
