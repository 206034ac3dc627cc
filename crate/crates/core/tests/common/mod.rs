//! Shared fixtures and brute-force oracles for the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use multiscope::geometry::load_mesh;
use multiscope::sim::{ActionStrategy, ObjectSpec, Scenario, Tool, DEFAULT_FORCE};
use multiscope::TriMesh;
use nalgebra::Vector3;

pub fn assets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

pub fn manifest() -> serde_json::Value {
    let text = std::fs::read_to_string(assets_dir().join("manifest.json")).expect("asset manifest");
    serde_json::from_str(&text).expect("manifest is JSON")
}

pub fn asset(name: &str) -> TriMesh {
    load_mesh(assets_dir().join(format!("{name}.off"))).expect("bundled asset loads")
}

/// The curated scenario for `tool` built from the bundled meshes.
pub fn scenario(tool: Tool) -> Scenario {
    Scenario::from_meshes(
        tool,
        asset(tool.name()),
        asset("probe"),
        &ObjectSpec::tool_default(),
        &ObjectSpec::probe_default(),
        &ActionStrategy::Curated { pokes: None },
        DEFAULT_FORCE,
        0,
    )
    .expect("curated scenario")
}

pub const ASSETS: [&str; 5] = ["wrench", "hexkey", "pawl", "gear", "probe"];

/// Closest point on triangle `abc` to `p`, by Voronoi-region case analysis.
pub fn closest_on_triangle(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Distance from `p` to the nearest triangle, scanning every triangle.
pub fn brute_distance(mesh: &TriMesh, p: &Vector3<f64>) -> f64 {
    (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.triangle(t);
            (closest_on_triangle(p, &a, &b, &c) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Point-in-polyhedron by crossing parity along a fixed skew ray.
pub fn ray_inside(mesh: &TriMesh, p: &Vector3<f64>) -> bool {
    let dir = Vector3::new(0.5773, 0.5774, 0.5775).normalize();
    let mut hits = 0;
    for t in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle(t);
        let e1 = b - a;
        let e2 = c - a;
        let h = dir.cross(&e2);
        let det = e1.dot(&h);
        if det.abs() < 1e-15 {
            continue;
        }
        let f = 1.0 / det;
        let s = p - a;
        let u = f * s.dot(&h);
        if !(0.0..=1.0).contains(&u) {
            continue;
        }
        let q = s.cross(&e1);
        let v = f * dir.dot(&q);
        if v < 0.0 || u + v > 1.0 {
            continue;
        }
        if f * e2.dot(&q) > 0.0 {
            hits += 1;
        }
    }
    hits % 2 == 1
}

/// Brute-force signed distance: nearest-triangle magnitude, ray-parity sign.
pub fn brute_signed_distance(mesh: &TriMesh, p: &Vector3<f64>) -> f64 {
    let d = brute_distance(mesh, p);
    if ray_inside(mesh, p) {
        -d
    } else {
        d
    }
}
