//! ASCII OFF reading and writing.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{GeometryError, TriMesh};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh, GeometryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_off(&text)
}

/// Parses an ASCII OFF document. Polygons with more than three corners are
/// fan-triangulated.
pub fn parse_off(text: &str) -> Result<TriMesh, GeometryError> {
    let mut tokens = Tokens {
        inner: Box::new(text.lines().enumerate().flat_map(|(n, line)| {
            let content = line.split('#').next().unwrap_or("");
            content.split_whitespace().map(move |t| (n + 1, t))
        })),
    };

    match tokens.inner.next() {
        Some((_, "OFF")) => {}
        Some((line, other)) => return Err(parse_err(line, format!("expected OFF header, found {other:?}"))),
        None => return Err(parse_err(0, "empty file".into())),
    }
    let n_vertices: usize = tokens.parse("vertex count")?;
    let n_faces: usize = tokens.parse("face count")?;
    let _n_edges: usize = tokens.parse("edge count")?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let mut c = [0.0; 3];
        for slot in &mut c {
            *slot = tokens.parse("vertex coordinate")?;
        }
        vertices.push(Vector3::new(c[0], c[1], c[2]));
    }
    let mut triangles = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let k: usize = tokens.parse("polygon size")?;
        if k < 3 {
            return Err(parse_err(0, format!("polygon with {k} corners")));
        }
        let idx = (0..k)
            .map(|_| tokens.parse::<usize>("vertex index"))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 1..k - 1 {
            triangles.push([idx[0], idx[i], idx[i + 1]]);
        }
    }
    TriMesh::new(vertices, triangles)
}

fn parse_err(line: usize, message: String) -> GeometryError {
    GeometryError::Parse { line, message }
}

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
}

impl Tokens<'_> {
    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, GeometryError> {
        let (line, tok) = self
            .inner
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file reading {what}")))?;
        tok.parse().map_err(|_| parse_err(line, format!("bad {what}: {tok:?}")))
    }
}

/// Serialises a mesh as ASCII OFF with full round-trip float precision.
pub fn write_off(mesh: &TriMesh) -> String {
    let mut out = String::new();
    let edges = mesh.triangles().len() * 3 / 2;
    writeln!(out, "OFF").unwrap();
    writeln!(out, "{} {} {}", mesh.vertices().len(), mesh.triangles().len(), edges).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "OFF
# unit cube, quads
8 6 12
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 2 3 7 6
4 1 2 6 5
4 0 4 7 3
";

    #[test]
    fn quads_are_triangulated() {
        let mesh = parse_off(CUBE).unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.triangles().len(), 12);
        for n in mesh.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert_eq!(n.iter().filter(|c| c.abs() > 1e-12).count(), 1);
        }
    }

    #[test]
    fn repeated_vertex_triangle_is_degenerate() {
        let text = CUBE.replace("4 0 3 2 1", "3 0 0 2\n3 0 2 1");
        let text = text.replace("8 6 12", "8 7 12");
        assert!(matches!(parse_off(&text), Err(GeometryError::Degenerate { .. })));
    }

    #[test]
    fn missing_header_is_a_parse_error() {
        assert!(matches!(parse_off("8 6 12"), Err(GeometryError::Parse { .. })));
    }

    #[test]
    fn write_then_parse_is_identical() {
        let cube = parse_off(CUBE).unwrap();
        let again = parse_off(&write_off(&cube)).unwrap();
        assert_eq!(cube.vertices(), again.vertices());
        assert_eq!(cube.triangles(), again.triangles());
    }
}
