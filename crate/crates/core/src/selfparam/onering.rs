//! Baseline prolongation: removed vertices average their one-ring.

use std::collections::BTreeMap;

use super::CollapseRecord;
use crate::error::MapError;
use crate::sparse::CsrMatrix;

/// Prolongation where surviving vertices get unit rows and every removed
/// vertex takes the uniform average of the rows of its neighbours at the
/// time it was removed. `vertex_map` sends surviving fine ids to coarse ids.
pub fn onering_average_prolongation(
    fine_count: usize,
    records: &[CollapseRecord],
    vertex_map: &[Option<usize>],
    coarse_count: usize,
) -> Result<CsrMatrix, MapError> {
    let mut rows: Vec<Option<BTreeMap<usize, f64>>> = (0..fine_count)
        .map(|v| vertex_map.get(v).copied().flatten().map(|c| BTreeMap::from([(c, 1.0)])))
        .collect();
    for r in records.iter().rev() {
        if r.removed_ring.is_empty() {
            return Err(MapError::NoSurvivingNeighbour(r.removed));
        }
        let w = 1.0 / r.removed_ring.len() as f64;
        let mut row = BTreeMap::new();
        for &u in &r.removed_ring {
            let src = rows[u].as_ref().ok_or(MapError::Unmapped(u))?;
            for (&c, &x) in src {
                *row.entry(c).or_insert(0.0) += w * x;
            }
        }
        rows[r.removed] = Some(row);
    }
    let mut triplets = Vec::new();
    for (v, row) in rows.iter().enumerate() {
        let row = row.as_ref().ok_or(MapError::Unmapped(v))?;
        triplets.extend(row.iter().map(|(&c, &x)| (v, c, x)));
    }
    CsrMatrix::from_triplets(fine_count, coarse_count, &triplets).map_err(|e| MapError::Unsupported(e.to_string()))
}
