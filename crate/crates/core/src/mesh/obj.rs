//! Wavefront OBJ subset: `v` and triangular `f` records only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::MeshError;

use super::{SurfaceMesh, Vec3};

pub fn load_obj(path: impl AsRef<Path>) -> Result<SurfaceMesh, MeshError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io { path: path.to_path_buf(), source })?;
    parse_obj(&text)
}

/// Parses OBJ text into raw (positions, faces), zero-based, without validation.
pub fn parse_obj_raw(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), MeshError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for slot in xyz.iter_mut() {
                    let tok = tokens.next().ok_or_else(|| MeshError::Parse {
                        line: lineno + 1,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *slot = tok.parse().map_err(|_| MeshError::Parse {
                        line: lineno + 1,
                        message: format!("bad coordinate {tok:?}"),
                    })?;
                }
                positions.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let face_index = faces.len();
                let mut idx = Vec::with_capacity(3);
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let k: i64 = first.parse().map_err(|_| MeshError::Parse {
                        line: lineno + 1,
                        message: format!("bad face index {tok:?}"),
                    })?;
                    let resolved = match k {
                        k if k > 0 => k - 1,
                        k if k < 0 => positions.len() as i64 + k,
                        _ => {
                            return Err(MeshError::Parse { line: lineno + 1, message: "face index 0".into() })
                        }
                    };
                    if resolved < 0 || resolved as usize >= positions.len() {
                        return Err(MeshError::IndexOutOfRange { face: face_index, vertex: k });
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() != 3 {
                    return Err(MeshError::NonTriangle { face: face_index, count: idx.len() });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((positions, faces))
}

/// Parses and validates OBJ text. Unreferenced vertices are dropped.
pub fn parse_obj(text: &str) -> Result<SurfaceMesh, MeshError> {
    let (positions, faces) = parse_obj_raw(text)?;
    let mut used = vec![false; positions.len()];
    for f in &faces {
        for &v in f {
            used[v] = true;
        }
    }
    if used.iter().all(|&u| u) {
        return SurfaceMesh::new(positions, faces);
    }
    let mut remap = vec![usize::MAX; positions.len()];
    let mut kept = Vec::new();
    for (v, p) in positions.iter().enumerate() {
        if used[v] {
            remap[v] = kept.len();
            kept.push(*p);
        }
    }
    log::warn!("dropping {} unreferenced vertices", positions.len() - kept.len());
    let faces = faces.iter().map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]]).collect();
    SurfaceMesh::new(kept, faces)
}

/// OBJ text with 17 significant digits per coordinate.
pub fn obj_string(positions: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut out = String::with_capacity(positions.len() * 72 + faces.len() * 24);
    for p in positions {
        let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    write_obj_raw(mesh.positions(), mesh.faces(), path)
}

pub fn write_obj_raw(positions: &[Vec3], faces: &[[usize; 3]], path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    fs::write(path, obj_string(positions, faces)).map_err(|source| MeshError::Io { path: path.to_path_buf(), source })
}
