use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{GeometryError, TriMesh, Vec3};

/// Loads an OBJ or binary STL file, chosen by extension. Polygons are
/// fan-triangulated from their first vertex, so quads split along v0-v2.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh, GeometryError> {
    let path = path.as_ref();
    let io_err = |source| GeometryError::Io {
        path: path.to_path_buf(),
        source,
    };
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "obj" => parse_obj(&fs::read_to_string(path).map_err(io_err)?),
        "stl" => parse_stl(&fs::read(path).map_err(io_err)?),
        other => Err(GeometryError::UnsupportedFormat(other.to_string())),
    }
}

pub fn parse_obj(text: &str) -> Result<TriMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| GeometryError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != 3 {
                    return Err(err(format!("vertex has {} coordinates", coords.len())));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut polygon = Vec::new();
                for t in tokens {
                    let head = t.split('/').next().unwrap_or("");
                    let idx: i64 = head
                        .parse()
                        .map_err(|e| err(format!("bad face index {t:?}: {e}")))?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => return Err(err("face index 0".into())),
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(err(format!("face index {idx} out of range")));
                    }
                    polygon.push(resolved as u32);
                }
                if polygon.len() < 3 {
                    return Err(err(format!("face with {} vertices", polygon.len())));
                }
                for i in 1..polygon.len() - 1 {
                    faces.push([polygon[0], polygon[i], polygon[i + 1]]);
                }
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    TriMesh::new(vertices, faces)
}

/// Binary STL. Coincident corners are merged by exact position so that
/// closed surfaces come back with shared vertices.
pub fn parse_stl(bytes: &[u8]) -> Result<TriMesh, GeometryError> {
    let err = |message: &str| GeometryError::Parse {
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 84 {
        return Err(err("binary STL shorter than its 84-byte header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() < 84 + 50 * count {
        return Err(if bytes.starts_with(b"solid") {
            GeometryError::UnsupportedFormat("ASCII STL".into())
        } else {
            err("binary STL truncated")
        });
    }
    let read_f32 = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    let mut index: HashMap<[u64; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + 50 * t + 12;
        let mut face = [0u32; 3];
        for (c, slot) in face.iter_mut().enumerate() {
            let off = base + 12 * c;
            let p = Vec3::new(read_f32(off), read_f32(off + 4), read_f32(off + 8));
            let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
            *slot = *index.entry(key).or_insert_with(|| {
                vertices.push(p);
                (vertices.len() - 1) as u32
            });
        }
        faces.push(face);
    }
    if faces.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    TriMesh::new(vertices, faces)
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices().len() * 48 + mesh.faces().len() * 24);
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Writes an OBJ file. Coordinates use shortest round-trip formatting, so a
/// reload reproduces them exactly.
pub fn export_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<(), GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let path = path.as_ref();
    fs::write(path, obj_string(mesh)).map_err(|source| GeometryError::Io {
        path: path.to_path_buf(),
        source,
    })
}
