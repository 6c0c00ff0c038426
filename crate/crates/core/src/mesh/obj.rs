//! Wavefront OBJ reader/writer (`v`, `vt`, `f v/vt[/vn]` records).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::{Vec2, Vec3};
use crate::real::Real;

use super::TriangleMesh;

pub fn load_obj<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    parse_obj(&fsutil::read_to_string(path)?)
}

fn parse_floats<T: Real>(fields: &mut std::str::SplitWhitespace<'_>, n: usize, line: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let tok = fields.next().ok_or_else(|| Error::Parse {
            line,
            message: format!("expected {n} numbers"),
        })?;
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid number {tok:?}"),
        })?;
        out.push(T::lit(v));
    }
    Ok(out)
}

fn resolve_index(tok: &str, count: usize, line: usize, what: &str) -> Result<usize> {
    let i: i64 = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} index {tok:?}"),
    })?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        -1
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(Error::Parse {
            line,
            message: format!("{what} index {i} out of range (have {count})"),
        });
    }
    Ok(resolved as usize)
}

pub fn parse_obj<T: Real>(text: &str) -> Result<TriangleMesh<T>> {
    let mut verts = Vec::new();
    let mut tex = Vec::new();
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        match fields.next() {
            Some("v") => {
                let p = parse_floats::<T>(&mut fields, 3, line)?;
                verts.push(Vec3::new(p[0], p[1], p[2]));
            }
            Some("vt") => {
                let p = parse_floats::<T>(&mut fields, 2, line)?;
                tex.push(Vec2::new(p[0], p[1]));
            }
            Some("f") => {
                let corners: Vec<&str> = fields.collect();
                if corners.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("only triangles are supported, got {} corners", corners.len()),
                    });
                }
                let mut face = [0usize; 3];
                let mut corner_uv = [Vec2::zero(); 3];
                for (k, c) in corners.iter().enumerate() {
                    let mut parts = c.split('/');
                    let v = parts.next().unwrap_or("");
                    face[k] = resolve_index(v, verts.len(), line, "vertex")?;
                    match parts.next() {
                        Some(t) if !t.is_empty() => {
                            corner_uv[k] = tex[resolve_index(t, tex.len(), line, "texture")?];
                        }
                        _ => return Err(Error::MissingUv { line }),
                    }
                }
                faces.push(face);
                uvs.push(corner_uv);
            }
            _ => {}
        }
    }
    TriangleMesh::new(verts, faces, uvs)
}

/// Serializes positions, faces and the per-corner UV atlas. Texture
/// coordinates are de-duplicated by exact value.
pub fn write_obj_string<T: Real>(mesh: &TriangleMesh<T>, positions: &[Vec3<T>]) -> Result<String> {
    mesh.check_positions(positions)?;
    let mut out = String::new();
    for p in positions {
        let _ = writeln!(out, "v {} {} {}", p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy());
    }
    let mut uv_index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut corner_ids = Vec::with_capacity(mesh.face_count());
    for corners in mesh.uvs() {
        let mut ids = [0usize; 3];
        for (k, uv) in corners.iter().enumerate() {
            let (u, v) = (uv.x.to_f64_lossy(), uv.y.to_f64_lossy());
            let next = uv_index.len();
            let id = *uv_index.entry((u.to_bits(), v.to_bits())).or_insert_with(|| {
                let _ = writeln!(out, "vt {u} {v}");
                next
            });
            ids[k] = id + 1;
        }
        corner_ids.push(ids);
    }
    for (f, t) in mesh.faces().iter().zip(&corner_ids) {
        let _ = writeln!(out, "f {}/{} {}/{} {}/{}", f[0] + 1, t[0], f[1] + 1, t[1], f[2] + 1, t[2]);
    }
    Ok(out)
}

pub fn write_obj<T: Real>(path: impl AsRef<Path>, mesh: &TriangleMesh<T>, positions: &[Vec3<T>]) -> Result<()> {
    fsutil::write_atomic(path, write_obj_string(mesh, positions)?.as_bytes())
}
