//! Level sizing and hierarchy construction.

use super::{
    assemble_prolongation, compact_points, map_points, onering_average_prolongation, vertex_seeds, BarycentricPoint,
    CollapseRecord,
};
use crate::decimate::{decimate_to_mesh, DecimateConfig};
use crate::error::Error;
use crate::mesh::SurfaceMesh;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HierarchyConfig {
    /// Vertex ratio between consecutive levels.
    pub ratio: f64,
    /// No level is created below this many vertices.
    pub min_vertices: usize,
    pub decimation: DecimateConfig,
    /// Keep every collapse record in memory (needed for chart queries).
    #[serde(default)]
    pub keep_records: bool,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig { ratio: 0.25, min_vertices: 500, decimation: DecimateConfig::default(), keep_records: false }
    }
}

impl HierarchyConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("ratio {} must lie in (0, 1)", self.ratio)));
        }
        if self.min_vertices < 4 {
            return Err(Error::Config(format!("min_vertices {} must be at least 4", self.min_vertices)));
        }
        Ok(())
    }
}

/// Target vertex counts of the coarse levels: `n ← ⌈ratio·n⌉` while the
/// result stays at or above `min_vertices`.
pub fn level_targets(n: usize, ratio: f64, min_vertices: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = n;
    loop {
        let next = (ratio * cur as f64).ceil() as usize;
        if next < min_vertices || next >= cur {
            break;
        }
        out.push(next);
        cur = next;
    }
    out
}

/// Mesh levels and the prolongations between them. `prolongations[h]` maps
/// values on level `h + 1` to level `h`.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub config: HierarchyConfig,
    /// Level meshes, finest first. A hierarchy read from disk holds only the
    /// finest and coarsest meshes.
    pub levels: Vec<SurfaceMesh>,
    pub level_sizes: Vec<usize>,
    pub targets: Vec<usize>,
    pub prolongations: Vec<CsrMatrix>,
    /// Every fine vertex as a point on the coarsest mesh.
    pub fine_map: Vec<BarycentricPoint>,
    /// Some level missed its target.
    pub shortfall: bool,
    /// One-ring-average prolongations over the same levels (built in memory only).
    pub onering: Option<Vec<CsrMatrix>>,
    /// Collapse records per level span, when requested.
    pub records: Option<Vec<Vec<CollapseRecord>>>,
}

impl Hierarchy {
    /// Number of coarse levels.
    pub fn depth(&self) -> usize {
        self.prolongations.len()
    }

    pub fn fine(&self) -> &SurfaceMesh {
        &self.levels[0]
    }

    pub fn coarsest(&self) -> &SurfaceMesh {
        self.levels.last().expect("at least the fine level")
    }

    /// "8000 → 2000 → 500"
    pub fn sizes_string(&self) -> String {
        self.level_sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" → ")
    }
}

/// Decimates `mesh` level by level and assembles the prolongations.
pub fn build_hierarchy(mesh: &SurfaceMesh, config: &HierarchyConfig) -> Result<Hierarchy, Error> {
    config.validate()?;
    let targets = level_targets(mesh.vertex_count(), config.ratio, config.min_vertices);
    if targets.is_empty() {
        log::warn!("{} vertices is below the coarsening floor; no coarse levels", mesh.vertex_count());
    }
    let mut levels = vec![mesh.clone()];
    let mut prolongations = Vec::new();
    let mut onering = Vec::new();
    let mut records = Vec::new();
    let mut fine_map = vertex_seeds(mesh);
    let mut shortfall = false;
    for &t in &targets {
        let current = levels.last().expect("non-empty");
        if t >= current.vertex_count() {
            break;
        }
        let (d, snap) = decimate_to_mesh(current, t, &config.decimation)?;
        if d.records.is_empty() {
            shortfall = true;
            break;
        }
        shortfall |= d.shortfall;
        let mut seeds = vertex_seeds(current);
        map_points(&d.records, &mut seeds)?;
        let seeds = compact_points(&seeds, &snap.face_map)?;
        prolongations.push(assemble_prolongation(&seeds, &snap.mesh)?);
        map_points(&d.records, &mut fine_map)?;
        fine_map = compact_points(&fine_map, &snap.face_map)?;
        onering.push(onering_average_prolongation(current.vertex_count(), &d.records, &snap.vertex_map, snap.mesh.vertex_count())?);
        log::info!("level {}: {} vertices ({} rejections)", levels.len(), snap.mesh.vertex_count(), d.rejections);
        if config.keep_records {
            records.push(d.records);
        }
        levels.push(snap.mesh);
        if shortfall {
            break;
        }
    }
    let level_sizes = levels.iter().map(|m| m.vertex_count()).collect();
    Ok(Hierarchy {
        config: *config,
        levels,
        level_sizes,
        targets,
        prolongations,
        fine_map,
        shortfall,
        onering: Some(onering),
        records: config.keep_records.then_some(records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_rule() {
        assert!(level_targets(400, 0.25, 500).is_empty());
        assert_eq!(level_targets(8000, 0.25, 500), vec![2000, 500]);
        assert_eq!(level_targets(2001, 0.25, 500), vec![501]);
        assert_eq!(level_targets(2000, 0.25, 500), vec![500]);
        assert!(level_targets(12, 0.25, 500).is_empty());
        assert_eq!(level_targets(10242, 0.25, 50), vec![2561, 641, 161]);
    }
}
