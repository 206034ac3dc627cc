//! Procedural tool and probe meshes. Tools are extruded X-Z profiles in their
//! gripper frame (metres); the probe is a round-tipped rod along +z.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::primitives::{extrude_xz, revolve_z};
use crate::geometry::{GeometryError, TriMesh};

const MM: f64 = 1e-3;

/// Half the wrench mouth opening.
pub const WRENCH_JAW_HALF_OPENING: f64 = 6.35 * MM;
/// Height of the mouth bottom and the jaw tips in the wrench frame.
pub const WRENCH_MOUTH_BOTTOM: f64 = 112.0 * MM;
pub const WRENCH_JAW_TOP: f64 = 130.0 * MM;

pub const PROBE_RADIUS: f64 = 4.0 * MM;
pub const PROBE_LENGTH: f64 = 60.0 * MM;

const TOOL_HALF_THICKNESS: f64 = 4.0 * MM;
const HEXKEY_HALF_THICKNESS: f64 = 3.0 * MM;
const GEAR_TEETH: usize = 8;
const PROBE_SEGMENTS: usize = 24;
const PROBE_TIP_RINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tool {
    Wrench,
    Hexkey,
    Pawl,
    Gear,
    Probe,
}

impl Tool {
    pub const ALL: [Tool; 5] = [Tool::Wrench, Tool::Hexkey, Tool::Pawl, Tool::Gear, Tool::Probe];

    pub fn name(self) -> &'static str {
        match self {
            Tool::Wrench => "wrench",
            Tool::Hexkey => "hexkey",
            Tool::Pawl => "pawl",
            Tool::Gear => "gear",
            Tool::Probe => "probe",
        }
    }

    /// Counter-clockwise X-Z outline of an extruded tool.
    pub fn profile(self) -> Option<Vec<(f64, f64)>> {
        let mm = |pts: &[(f64, f64)]| pts.iter().map(|&(x, z)| (x * MM, z * MM)).collect();
        match self {
            Tool::Wrench => Some(mm(&[
                (-8.0, -30.0),
                (8.0, -30.0),
                (8.0, 88.0),
                (17.0, 100.0),
                (17.0, 126.0),
                (13.0, 130.0),
                (6.35, 130.0),
                (6.35, 112.0),
                (-6.35, 112.0),
                (-6.35, 130.0),
                (-13.0, 130.0),
                (-17.0, 126.0),
                (-17.0, 100.0),
                (-8.0, 88.0),
            ])),
            Tool::Hexkey => Some(mm(&[
                (-3.0, -20.0),
                (3.0, -20.0),
                (3.0, 50.0),
                (30.0, 50.0),
                (30.0, 56.0),
                (-3.0, 56.0),
            ])),
            Tool::Pawl => Some(mm(&[
                (-10.0, -20.0),
                (10.0, -20.0),
                (10.0, 20.0),
                (4.0, 20.0),
                (4.0, 45.0),
                (-2.0, 55.0),
                (-10.0, 55.0),
            ])),
            Tool::Gear => Some(gear_profile(GEAR_TEETH, 12.0 * MM, 16.0 * MM, 30.0 * MM)),
            Tool::Probe => None,
        }
    }

    pub fn half_thickness(self) -> f64 {
        match self {
            Tool::Hexkey => HEXKEY_HALF_THICKNESS,
            _ => TOOL_HALF_THICKNESS,
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown tool {0:?}")]
pub struct UnknownTool(pub String);

impl FromStr for Tool {
    type Err = UnknownTool;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tool::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownTool(s.to_string()))
    }
}

/// Gear outline centred at `(0, centre_z)`: per tooth a root land, a rising
/// flank, a tip land and a falling flank.
fn gear_profile(teeth: usize, root: f64, tip: f64, centre_z: f64) -> Vec<(f64, f64)> {
    let pitch = std::f64::consts::TAU / teeth as f64;
    let at = |r: f64, a: f64| (r * a.cos(), centre_z + r * a.sin());
    let mut out = Vec::with_capacity(teeth * 4);
    for k in 0..teeth {
        let a = k as f64 * pitch;
        out.push(at(root, a));
        out.push(at(root, a + 0.3 * pitch));
        out.push(at(tip, a + 0.45 * pitch));
        out.push(at(tip, a + 0.75 * pitch));
    }
    out
}

fn probe_profile() -> Vec<(f64, f64)> {
    let r = PROBE_RADIUS;
    let centre = PROBE_LENGTH - r;
    let mut out = vec![(0.0, 0.0), (r, 0.0), (r, centre)];
    for k in 1..PROBE_TIP_RINGS {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / PROBE_TIP_RINGS as f64;
        out.push((r * phi.cos(), centre + r * phi.sin()));
    }
    out.push((0.0, PROBE_LENGTH));
    out
}

pub fn make_tool_mesh(tool: Tool) -> Result<TriMesh, GeometryError> {
    match tool.profile() {
        Some(profile) => extrude_xz(&profile, tool.half_thickness()),
        None => revolve_z(&probe_profile(), PROBE_SEGMENTS),
    }
}

/// Point at fraction `t` along edge `edge` of a counter-clockwise profile and
/// the edge's outward X-Z normal.
pub fn profile_edge_point(profile: &[(f64, f64)], edge: usize, t: f64) -> ((f64, f64), (f64, f64)) {
    let a = profile[edge % profile.len()];
    let b = profile[(edge + 1) % profile.len()];
    let (dx, dz) = (b.0 - a.0, b.1 - a.1);
    let len = dx.hypot(dz);
    ((a.0 + t * dx, a.1 + t * dz), (dz / len, -dx / len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Solid;
    use nalgebra::Vector3;

    #[test]
    fn every_tool_is_a_valid_solid() {
        for tool in Tool::ALL {
            let mesh = make_tool_mesh(tool).unwrap();
            assert!(mesh.volume() > 0.0, "{tool}");
        }
    }

    #[test]
    fn wrench_mouth_is_half_inch() {
        let s = Solid::new(make_tool_mesh(Tool::Wrench).unwrap());
        let mid = Vector3::new(0.0, 0.0, 121.0 * MM);
        assert!(s.signed_distance(&mid) > 0.0);
        let q = s.query(&mid);
        assert!((q.signed_distance - WRENCH_JAW_HALF_OPENING).abs() < 1e-9);
    }

    #[test]
    fn names_round_trip() {
        for tool in Tool::ALL {
            assert_eq!(tool.name().parse::<Tool>().unwrap(), tool);
        }
        assert!("spanner".parse::<Tool>().is_err());
    }

    #[test]
    fn probe_tip_is_at_length() {
        let m = make_tool_mesh(Tool::Probe).unwrap();
        let tip = m.support_point(&Vector3::z());
        assert!((tip - Vector3::new(0.0, 0.0, PROBE_LENGTH)).norm() < 1e-12);
    }
}
