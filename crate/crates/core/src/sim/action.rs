//! Poking actions: where the probe touches the tool and how the probe's
//! end-effector must be placed for that touch.

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tools::{profile_edge_point, Tool};
use crate::geometry::{SurfacePointSet, TriMesh};

/// Default normal force magnitude.
pub const DEFAULT_FORCE: f64 = 3.0;

/// One curated poke: a point on a profile edge plus the probe's tilt away
/// from the surface normal, in the X-Z plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuratedPoke {
    pub edge: usize,
    /// Fraction along the edge.
    pub at: f64,
    /// Rotation of the probe axis away from the normal (degrees, about +y).
    pub tilt_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PokeAction {
    /// Contact on the tool, tool body frame.
    pub tool_contact: Vector3<f64>,
    /// Outward unit normal of the tool at the contact, tool body frame.
    pub tool_normal: Vector3<f64>,
    /// Probe axis from tip towards its base, world frame.
    pub approach: Vector3<f64>,
    /// Contact on the probe, probe body frame.
    pub probe_contact: Vector3<f64>,
    pub force: f64,
    /// Probe end-effector placement that realises the contact when both
    /// objects sit at their true poses.
    pub world_from_probe_ee: Isometry3<f64>,
}

/// The bundled curated set for `tool`: five pokes on distinct faces with
/// pairwise non-parallel normals.
pub fn curated_set(tool: Tool) -> Vec<CuratedPoke> {
    let poke = |edge, at, tilt_deg| CuratedPoke { edge, at, tilt_deg };
    match tool {
        Tool::Wrench => vec![
            poke(7, 0.5, 0.0),
            poke(12, 0.5, 0.0),
            poke(2, 0.5, 0.0),
            poke(11, 0.75, 0.0),
            poke(1, 0.5, 0.0),
        ],
        Tool::Hexkey => vec![
            poke(1, 0.5, 0.0),
            poke(2, 0.5, 0.0),
            poke(3, 0.5, 0.0),
            poke(5, 0.5, 0.0),
            poke(4, 0.7, 0.0),
        ],
        Tool::Pawl => vec![
            poke(1, 0.5, 0.0),
            poke(2, 0.5, -15.0),
            poke(4, 0.5, 0.0),
            poke(5, 0.5, 0.0),
            poke(6, 0.5, 0.0),
        ],
        Tool::Gear => vec![
            poke(2, 0.5, 0.0),
            poke(7, 0.5, 0.0),
            poke(9, 0.5, 0.0),
            poke(14, 0.5, 0.0),
            poke(21, 0.5, 0.0),
        ],
        Tool::Probe => Vec::new(),
    }
}

/// Probe end-effector rotation whose +z points from base to tip, i.e. along
/// `-approach`, keeping the probe's X-Z plane as close to world X-Z as
/// possible.
fn probe_rotation(approach: &Vector3<f64>) -> UnitQuaternion<f64> {
    let z = -approach.normalize();
    let mut y = Vector3::y() - z * z.dot(&Vector3::y());
    if y.norm() < 1e-9 {
        y = Vector3::x() - z * z.dot(&Vector3::x());
    }
    let y = y.normalize();
    let x = y.cross(&z);
    let m = Matrix3::from_columns(&[x, y, z]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

/// Builds the action for a tool contact `p` with outward normal `n` (tool
/// body frame, tool at its true zero pose) and probe axis `approach`.
pub fn place_probe(
    probe: &TriMesh,
    p: Vector3<f64>,
    n: Vector3<f64>,
    approach: Vector3<f64>,
    force: f64,
) -> PokeAction {
    let n = n.normalize();
    let rot = probe_rotation(&approach);
    let q = probe.support_point(&(rot.inverse() * -n));
    let t = p - rot * q;
    PokeAction {
        tool_contact: p,
        tool_normal: n,
        approach: approach.normalize(),
        probe_contact: q,
        force,
        world_from_probe_ee: Isometry3::from_parts(Translation3::from(t), rot),
    }
}

/// Realises a curated poke on an extruded tool.
pub fn curated_action(tool: Tool, poke: &CuratedPoke, probe: &TriMesh, force: f64) -> Option<PokeAction> {
    let profile = tool.profile()?;
    let ((x, z), (nx, nz)) = profile_edge_point(&profile, poke.edge, poke.at);
    let (s, c) = poke.tilt_deg.to_radians().sin_cos();
    let approach = Vector3::new(nx * c - nz * s, 0.0, nx * s + nz * c);
    Some(place_probe(probe, Vector3::new(x, 0.0, z), Vector3::new(nx, 0.0, nz), approach, force))
}

/// A random poke: an area-uniform surface sample, probe along its normal.
pub fn random_action<R: Rng>(samples: &SurfacePointSet, probe: &TriMesh, force: f64, rng: &mut R) -> PokeAction {
    let i = rng.random_range(0..samples.len());
    let n = samples.normals[i];
    place_probe(probe, samples.points[i], n, n, force)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionStrategy {
    Random { count: usize },
    Curated { pokes: Option<Vec<CuratedPoke>> },
}
