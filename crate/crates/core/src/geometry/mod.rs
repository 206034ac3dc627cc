//! Meshes, surface sampling, signed distance and penetration counting.

mod mesh;
mod off;
mod penetration;
mod pose;
pub mod primitives;
mod sampling;
mod sdf;

pub use mesh::{Aabb, TriMesh};
pub use off::{load_mesh, parse_off, write_off};
pub use penetration::{penetration_count, penetration_count_one_sided, DEFAULT_PENETRATION_MARGIN};
pub use pose::{wrap_angle, Pose2};
pub use sampling::{sample_surface, SurfacePointSet};
pub use sdf::{signed_distance, Solid, SurfaceQuery};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("OFF parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {index} out of range")]
    IndexOutOfRange { triangle: usize, index: usize },
    #[error("triangle {triangle} has zero area")]
    Degenerate { triangle: usize },
    #[error("mesh is not watertight at edge {edge:?}")]
    NotWatertight { edge: (usize, usize) },
    #[error("mesh winding is inward (negative volume)")]
    InvertedWinding,
}
