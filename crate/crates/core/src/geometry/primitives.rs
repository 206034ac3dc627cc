//! Procedural watertight meshes: boxes, spheres, extruded planar profiles and
//! solids of revolution.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{GeometryError, TriMesh};

pub fn unit_cube() -> TriMesh {
    box_mesh(Vector3::zeros(), Vector3::repeat(1.0)).expect("unit cube is valid")
}

/// Axis-aligned box spanning `min..max`.
pub fn box_mesh(min: Vector3<f64>, max: Vector3<f64>) -> Result<TriMesh, GeometryError> {
    let v = |x: bool, y: bool, z: bool| {
        Vector3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [0, 4, 7],
        [0, 7, 3],
    ];
    TriMesh::new(vertices, triangles)
}

/// Subdivided icosahedron projected onto a sphere of `radius` around the origin.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
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
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    TriMesh::new(vertices, triangles).expect("icosphere is valid")
}

/// Extrudes a simple polygon given in the X-Z plane (metres) along Y over
/// `-half_thickness..half_thickness`. The profile may be wound either way and
/// must not repeat its first vertex.
pub fn extrude_xz(profile: &[(f64, f64)], half_thickness: f64) -> Result<TriMesh, GeometryError> {
    let n = profile.len();
    if n < 3 {
        return Err(GeometryError::Empty);
    }
    let mut ring: Vec<(f64, f64)> = profile.to_vec();
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    let mut vertices = Vec::with_capacity(2 * n);
    for &(x, z) in &ring {
        vertices.push(Vector3::new(x, -half_thickness, z));
    }
    for &(x, z) in &ring {
        vertices.push(Vector3::new(x, half_thickness, z));
    }
    let mut triangles = Vec::new();
    for [a, b, c] in ear_clip(&ring)? {
        // Counter-clockwise in X-Z faces -Y.
        triangles.push([a, b, c]);
        triangles.push([n + a, n + c, n + b]);
    }
    for a in 0..n {
        let b = (a + 1) % n;
        triangles.push([a, n + a, n + b]);
        triangles.push([a, n + b, b]);
    }
    TriMesh::new(vertices, triangles)
}

/// Revolves a profile of `(radius, z)` pairs around the Z axis. The first and
/// last entries must have zero radius (the poles).
pub fn revolve_z(profile: &[(f64, f64)], segments: usize) -> Result<TriMesh, GeometryError> {
    let m = profile.len();
    if m < 3 || segments < 3 || profile[0].0 != 0.0 || profile[m - 1].0 != 0.0 {
        return Err(GeometryError::Empty);
    }
    let rings = &profile[1..m - 1];
    let mut vertices = vec![Vector3::new(0.0, 0.0, profile[0].1)];
    for &(r, z) in rings {
        for s in 0..segments {
            let phi = std::f64::consts::TAU * s as f64 / segments as f64;
            vertices.push(Vector3::new(r * phi.cos(), r * phi.sin(), z));
        }
    }
    let top = vertices.len();
    vertices.push(Vector3::new(0.0, 0.0, profile[m - 1].1));
    let idx = |ring: usize, s: usize| 1 + ring * segments + (s % segments);
    let mut triangles = Vec::new();
    for s in 0..segments {
        triangles.push([0, idx(0, s + 1), idx(0, s)]);
    }
    for ring in 0..rings.len() - 1 {
        for s in 0..segments {
            let (a, b) = (idx(ring, s), idx(ring, s + 1));
            let (c, d) = (idx(ring + 1, s), idx(ring + 1, s + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    let last = rings.len() - 1;
    for s in 0..segments {
        triangles.push([top, idx(last, s), idx(last, s + 1)]);
    }
    match TriMesh::new(vertices.clone(), triangles.clone()) {
        Err(GeometryError::InvertedWinding) => {
            let flipped = triangles.into_iter().map(|[a, b, c]| [a, c, b]).collect();
            TriMesh::new(vertices, flipped)
        }
        other => other,
    }
}

/// Disjoint union of meshes.
pub fn union(meshes: &[&TriMesh]) -> Result<TriMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for m in meshes {
        let base = vertices.len();
        vertices.extend_from_slice(m.vertices());
        triangles.extend(m.triangles().iter().map(|t| t.map(|i| i + base)));
    }
    TriMesh::new(vertices, triangles)
}

fn signed_area(ring: &[(f64, f64)]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (x0, z0) = ring[i];
            let (x1, z1) = ring[(i + 1) % n];
            x0 * z1 - x1 * z0
        })
        .sum::<f64>()
        * 0.5
}

/// Ear clipping for a counter-clockwise simple polygon.
fn ear_clip(ring: &[(f64, f64)]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let inside = |p: (f64, f64), a, b, c| {
        cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
    };
    let mut remaining: Vec<usize> = (0..ring.len()).collect();
    let mut out = Vec::with_capacity(ring.len() - 2);
    while remaining.len() > 3 {
        let m = remaining.len();
        let ear = (0..m).find(|&i| {
            let (ia, ib, ic) = (remaining[(i + m - 1) % m], remaining[i], remaining[(i + 1) % m]);
            let (a, b, c) = (ring[ia], ring[ib], ring[ic]);
            if cross(a, b, c) <= 1e-18 {
                return false;
            }
            remaining
                .iter()
                .filter(|&&j| j != ia && j != ib && j != ic)
                .all(|&j| !inside(ring[j], a, b, c))
        });
        let Some(i) = ear else {
            return Err(GeometryError::Parse {
                line: 0,
                message: "profile polygon is not simple".into(),
            });
        };
        out.push([remaining[(i + m - 1) % m], remaining[i], remaining[(i + 1) % m]]);
        remaining.remove(i);
    }
    out.push([remaining[0], remaining[1], remaining[2]]);
    Ok(out)
}
