//! Exact signed distance to a watertight mesh: nearest triangle through an
//! AABB tree, sign from angle-weighted pseudonormals.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::{Aabb, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Feature {
    Vertex(u8),
    /// Edge from corner `k` to corner `k + 1`.
    Edge(u8),
    Face,
}

fn closest_on_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> (Vector3<f64>, Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, count: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

const LEAF_SIZE: usize = 4;

/// A mesh prepared for signed-distance queries.
#[derive(Debug, Clone)]
pub struct Solid {
    mesh: TriMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
    edge_normals: Vec<[Vector3<f64>; 3]>,
    vertex_normals: Vec<Vector3<f64>>,
    bounds: Aabb,
}

/// Result of a nearest-surface query.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceQuery {
    pub signed_distance: f64,
    pub closest: Vector3<f64>,
    pub triangle: usize,
}

impl Solid {
    pub fn new(mesh: TriMesh) -> Self {
        let tris = mesh.triangles().to_vec();
        let normals = mesh.normals().to_vec();

        let mut owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(tris.len() * 3);
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                owner.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        let edge_normals = tris
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                std::array::from_fn(|k| {
                    let twin = owner[&(tri[(k + 1) % 3], tri[k])];
                    normals[t] + normals[twin]
                })
            })
            .collect();

        let verts = mesh.vertices().to_vec();
        let mut vertex_normals = vec![Vector3::zeros(); verts.len()];
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let o = verts[tri[k]];
                let e1 = (verts[tri[(k + 1) % 3]] - o).normalize();
                let e2 = (verts[tri[(k + 2) % 3]] - o).normalize();
                let angle = e1.dot(&e2).clamp(-1.0, 1.0).acos();
                vertex_normals[tri[k]] += normals[t] * angle;
            }
        }

        let bounds = mesh.aabb();
        let mut solid = Self {
            nodes: Vec::new(),
            order: (0..tris.len()).collect(),
            edge_normals,
            vertex_normals,
            bounds,
            mesh,
        };
        let centroids: Vec<Vector3<f64>> = (0..tris.len())
            .map(|t| {
                let [a, b, c] = solid.mesh.triangle(t);
                (a + b + c) / 3.0
            })
            .collect();
        let n = tris.len();
        solid.build(0, n, &centroids);
        solid
    }

    fn triangle_bounds(&self, t: usize) -> Aabb {
        let mut bb = Aabb::empty();
        for v in self.mesh.triangle(t) {
            bb.grow(&v);
        }
        bb
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[Vector3<f64>]) -> usize {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &t in &self.order[start..end] {
            bounds = bounds.merge(&self.triangle_bounds(t));
            cbounds.grow(&centroids[t]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf {
                start,
                count: end - start,
            },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let ext = cbounds.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis])
        });
        let left = self.build(start, mid, centroids);
        let right = self.build(mid, end, centroids);
        self.nodes[id].kind = NodeKind::Inner { left, right };
        id
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    fn nearest(&self, p: &Vector3<f64>) -> (f64, usize, Vector3<f64>, Feature) {
        let mut best = (f64::INFINITY, usize::MAX, Vector3::zeros(), Feature::Face);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds.distance_squared(p) >= best.0 {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &t in &self.order[start..start + count] {
                        let [a, b, c] = self.mesh.triangle(t);
                        let (q, f) = closest_on_triangle(p, &a, &b, &c);
                        let d = (p - q).norm_squared();
                        if d < best.0 {
                            best = (d, t, q, f);
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left].bounds.distance_squared(p);
                    let dr = self.nodes[right].bounds.distance_squared(p);
                    // Visit the nearer child first.
                    if dl < dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// Nearest surface point and signed distance (negative inside).
    pub fn query(&self, p: &Vector3<f64>) -> SurfaceQuery {
        let (d2, t, q, feature) = self.nearest(p);
        let pseudo = match feature {
            Feature::Face => self.mesh.normals()[t],
            Feature::Edge(k) => self.edge_normals[t][k as usize],
            Feature::Vertex(k) => self.vertex_normals[self.mesh.triangles()[t][k as usize]],
        };
        let d = d2.sqrt();
        let signed = if (p - q).dot(&pseudo) < 0.0 { -d } else { d };
        SurfaceQuery {
            signed_distance: signed,
            closest: q,
            triangle: t,
        }
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.query(p).signed_distance
    }

    /// `true` when `p` is deeper than `margin` inside the solid. Points outside
    /// the bounding box are rejected without a tree query.
    pub fn is_penetrating(&self, p: &Vector3<f64>, margin: f64) -> bool {
        self.bounds.contains(p) && self.signed_distance(p) < -margin
    }
}

/// Signed distance from `point` to `mesh`. Builds the query structure on every
/// call; use [`Solid`] for repeated queries.
pub fn signed_distance(mesh: &TriMesh, point: &Vector3<f64>) -> f64 {
    Solid::new(mesh.clone()).signed_distance(point)
}
