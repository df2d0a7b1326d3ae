//! Successive self-parameterization: composing per-collapse charts into a
//! map between mesh levels, and the prolongation operators built from it.

mod hierarchy;
mod onering;
mod record;
mod ssph;

use std::collections::HashMap;

use crate::error::{LinalgError, MapError};
use crate::mesh::SurfaceMesh;
use crate::sparse::CsrMatrix;

pub use hierarchy::{build_hierarchy, level_targets, Hierarchy, HierarchyConfig};
pub use onering::onering_average_prolongation;
pub use record::{barycentric, pull_point, push_point, BarycentricPoint, ChartFace, CollapseRecord, CLAMP_TOLERANCE};
pub use ssph::{hierarchy_from_str, hierarchy_to_string, read_hierarchy, write_hierarchy, SSPH_MAGIC};

/// One point per vertex of `mesh`: its first incident face with corner
/// weight 1.
pub fn vertex_seeds(mesh: &SurfaceMesh) -> Vec<BarycentricPoint> {
    (0..mesh.vertex_count())
        .map(|v| {
            let f = mesh.vertex_faces(v)[0];
            BarycentricPoint::corner(f, mesh.corner_of(f, v))
        })
        .collect()
}

/// Pushes every point through `records` in order. Points are bucketed by
/// face so each record only touches the points lying on its faces.
pub fn map_points(records: &[CollapseRecord], points: &mut [BarycentricPoint]) -> Result<(), MapError> {
    let mut buckets: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, p) in points.iter().enumerate() {
        buckets.entry(p.face).or_default().push(k);
    }
    for r in records {
        for f in &r.before {
            let Some(list) = buckets.remove(&f.id) else { continue };
            for k in list {
                let q = push_point(&points[k], r)?;
                points[k] = q;
                buckets.entry(q.face).or_default().push(k);
            }
        }
    }
    Ok(())
}

/// Maps every vertex of `mesh` through `records`; the output references
/// faces of the mesh state after the last record.
pub fn map_all_fine_vertices(mesh: &SurfaceMesh, records: &[CollapseRecord]) -> Result<Vec<BarycentricPoint>, MapError> {
    let mut points = vertex_seeds(mesh);
    map_points(records, &mut points)?;
    Ok(points)
}

/// Rewrites face ids through `face_map` (e.g. a snapshot's compaction map).
pub fn compact_points(points: &[BarycentricPoint], face_map: &[Option<usize>]) -> Result<Vec<BarycentricPoint>, MapError> {
    points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let face = face_map.get(p.face).copied().flatten().ok_or(MapError::Unmapped(k))?;
            Ok(BarycentricPoint { face, ..*p })
        })
        .collect()
}

/// Prolongation with one row per mapped point holding its barycentric
/// weights against the corners of its coarse face. Exact zeros are dropped.
pub fn assemble_prolongation(points: &[BarycentricPoint], coarse: &SurfaceMesh) -> Result<CsrMatrix, LinalgError> {
    let mut triplets = Vec::with_capacity(3 * points.len());
    for (r, p) in points.iter().enumerate() {
        let face = coarse
            .faces()
            .get(p.face)
            .ok_or_else(|| LinalgError::Invalid(format!("point {r} references missing face {}", p.face)))?;
        for a in 0..3 {
            if p.weights[a] != 0.0 {
                triplets.push((r, face[a], p.weights[a]));
            }
        }
    }
    CsrMatrix::from_triplets(points.len(), coarse.vertex_count(), &triplets)
}

/// Surface position of a point on `mesh`.
pub fn point_position(mesh: &SurfaceMesh, p: &BarycentricPoint) -> crate::mesh::Vec3 {
    let f = mesh.faces()[p.face];
    (0..3).map(|a| mesh.position(f[a]) * p.weights[a]).sum()
}

#[cfg(test)]
mod tests;
