use nalgebra::Isometry3;

use super::{Solid, SurfacePointSet};

/// Default penetration margin: 1 mm.
pub const DEFAULT_PENETRATION_MARGIN: f64 = 1e-3;

/// Counts points of `points` (placed by `world_from_points`) lying deeper than
/// `margin` inside `solid` (placed by `world_from_solid`).
pub fn penetration_count_one_sided(
    points: &SurfacePointSet,
    world_from_points: &Isometry3<f64>,
    solid: &Solid,
    world_from_solid: &Isometry3<f64>,
    margin: f64,
) -> usize {
    let solid_from_points = world_from_solid.inv_mul(world_from_points);
    points
        .points
        .iter()
        .filter(|p| solid.is_penetrating(&solid_from_points.transform_point(&(**p).into()).coords, margin))
        .count()
}

/// Symmetric penetration count: points of `a` inside `b` plus points of `b`
/// inside `a`.
pub fn penetration_count(
    a_points: &SurfacePointSet,
    a_solid: &Solid,
    world_from_a: &Isometry3<f64>,
    b_points: &SurfacePointSet,
    b_solid: &Solid,
    world_from_b: &Isometry3<f64>,
    margin: f64,
) -> usize {
    penetration_count_one_sided(a_points, world_from_a, b_solid, world_from_b, margin)
        + penetration_count_one_sided(b_points, world_from_b, a_solid, world_from_a, margin)
}
