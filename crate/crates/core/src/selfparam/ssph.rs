//! `.ssph` hierarchy container: a JSON header followed by text blocks for
//! the finest and coarsest meshes, the fine-to-coarse map and one Matrix
//! Market block per prolongation.

use std::fmt::Write as _;
use std::path::Path;

use super::{BarycentricPoint, Hierarchy, HierarchyConfig};
use crate::error::{Error, MeshError};
use crate::mesh::obj::{obj_string, parse_obj_raw};
use crate::mesh::SurfaceMesh;
use crate::sparse::mtx::{from_matrix_market, to_matrix_market};

pub const SSPH_MAGIC: &str = "SSPH 1";

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct Header {
    version: u32,
    config: HierarchyConfig,
    depth: usize,
    level_sizes: Vec<usize>,
    targets: Vec<usize>,
    shortfall: bool,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Mesh(MeshError::Format(msg.into()))
}

/// Serializes a hierarchy; identical hierarchies give identical bytes.
pub fn hierarchy_to_string(h: &Hierarchy) -> Result<String, Error> {
    let header = Header {
        version: 1,
        config: h.config,
        depth: h.depth(),
        level_sizes: h.level_sizes.clone(),
        targets: h.targets.clone(),
        shortfall: h.shortfall,
    };
    let mut out = String::new();
    let _ = writeln!(out, "{SSPH_MAGIC}");
    let _ = writeln!(out, "{}", serde_json::to_string(&header).map_err(|e| format_err(e.to_string()))?);
    for (name, mesh) in [("fine", h.fine()), ("coarse", h.coarsest())] {
        let _ = writeln!(out, "BEGIN OBJ {name}");
        out.push_str(&obj_string(mesh.positions(), mesh.faces()));
        let _ = writeln!(out, "END");
    }
    let _ = writeln!(out, "BEGIN MAP {}", h.fine_map.len());
    for (v, p) in h.fine_map.iter().enumerate() {
        let _ = writeln!(out, "{v} {} {:.16e} {:.16e} {:.16e}", p.face, p.weights[0], p.weights[1], p.weights[2]);
    }
    let _ = writeln!(out, "END");
    for (k, p) in h.prolongations.iter().enumerate() {
        let _ = writeln!(out, "BEGIN MTX {}", k + 1);
        out.push_str(&to_matrix_market(p));
        let _ = writeln!(out, "END");
    }
    Ok(out)
}

pub fn write_hierarchy(h: &Hierarchy, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    std::fs::write(path, hierarchy_to_string(h)?).map_err(|source| Error::Mesh(MeshError::Io { path: path.to_path_buf(), source }))
}

fn block<'a>(lines: &mut std::iter::Peekable<std::str::Lines<'a>>, expect: &str) -> Result<(String, Vec<&'a str>), Error> {
    let open = lines.next().ok_or_else(|| format_err(format!("missing {expect} block")))?;
    let rest = open
        .strip_prefix("BEGIN ")
        .and_then(|r| r.strip_prefix(expect))
        .ok_or_else(|| format_err(format!("expected BEGIN {expect}, found {open:?}")))?;
    let mut body = Vec::new();
    for line in lines.by_ref() {
        if line == "END" {
            return Ok((rest.trim().to_string(), body));
        }
        body.push(line);
    }
    Err(format_err(format!("unterminated {expect} block")))
}

/// Parses the text form written by [`hierarchy_to_string`].
pub fn hierarchy_from_str(text: &str) -> Result<Hierarchy, Error> {
    let mut lines = text.lines().peekable();
    if lines.next() != Some(SSPH_MAGIC) {
        return Err(format_err("not an ssph file (bad magic line)"));
    }
    let header: Header = serde_json::from_str(lines.next().ok_or_else(|| format_err("missing header"))?)
        .map_err(|e| format_err(format!("bad header: {e}")))?;
    if header.version != 1 {
        return Err(format_err(format!("unsupported ssph version {}", header.version)));
    }
    let mut meshes = Vec::new();
    for name in ["fine", "coarse"] {
        let (tag, body) = block(&mut lines, "OBJ")?;
        if tag != name {
            return Err(format_err(format!("expected OBJ {name}, found OBJ {tag}")));
        }
        let (p, f) = parse_obj_raw(&body.join("\n"))?;
        meshes.push(SurfaceMesh::new(p, f)?);
    }
    let (count, body) = block(&mut lines, "MAP")?;
    let count: usize = count.parse().map_err(|_| format_err("bad MAP count"))?;
    let mut fine_map = Vec::with_capacity(count);
    for line in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(format_err(format!("bad MAP line {line:?}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format_err(format!("bad number {s:?}")));
        let face = t[1].parse().map_err(|_| format_err(format!("bad face {:?}", t[1])))?;
        fine_map.push(BarycentricPoint::new(face, [num(t[2])?, num(t[3])?, num(t[4])?]));
    }
    if fine_map.len() != count {
        return Err(format_err("MAP row count mismatch"));
    }
    let mut prolongations = Vec::with_capacity(header.depth);
    for _ in 0..header.depth {
        let (_, body) = block(&mut lines, "MTX")?;
        prolongations.push(from_matrix_market(&body.join("\n"))?);
    }
    let coarse = meshes.pop().expect("two meshes");
    let fine = meshes.pop().expect("two meshes");
    let levels = if header.depth == 0 { vec![fine] } else { vec![fine, coarse] };
    let h = Hierarchy {
        config: header.config,
        levels,
        level_sizes: header.level_sizes,
        targets: header.targets,
        prolongations,
        fine_map,
        shortfall: header.shortfall,
        onering: None,
        records: None,
    };
    check_chain(&h)?;
    Ok(h)
}

fn check_chain(h: &Hierarchy) -> Result<(), Error> {
    if h.level_sizes.len() != h.depth() + 1 || h.level_sizes[0] != h.fine().vertex_count() {
        return Err(format_err("level sizes do not match the stored meshes"));
    }
    for (k, p) in h.prolongations.iter().enumerate() {
        if p.nrows() != h.level_sizes[k] || p.ncols() != h.level_sizes[k + 1] {
            return Err(format_err(format!("prolongation {} has shape {}x{}", k + 1, p.nrows(), p.ncols())));
        }
    }
    if h.fine_map.len() != h.fine().vertex_count() || h.fine_map.iter().any(|p| p.face >= h.coarsest().face_count()) {
        return Err(format_err("fine map does not match the stored meshes"));
    }
    Ok(())
}

pub fn read_hierarchy(path: impl AsRef<Path>) -> Result<Hierarchy, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Mesh(MeshError::Io { path: path.to_path_buf(), source }))?;
    hierarchy_from_str(&text)
}
