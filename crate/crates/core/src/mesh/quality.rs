//! Triangle quality statistics. Reported only; meshes are never remeshed.

use serde::Serialize;

use super::SurfaceMesh;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QualityStats {
    /// Smallest interior angle over all faces, in degrees.
    pub min_angle_deg: f64,
    /// Largest ratio of longest edge to shortest altitude, normalised so an
    /// equilateral triangle scores 1.
    pub max_aspect_ratio: f64,
    pub mean_edge_length: f64,
}

pub fn quality_stats(mesh: &SurfaceMesh) -> QualityStats {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for &[a, b, c] in mesh.faces() {
        let p = [mesh.position(a), mesh.position(b), mesh.position(c)];
        let mut longest: f64 = 0.0;
        for k in 0..3 {
            let e0 = p[(k + 1) % 3] - p[k];
            let e1 = p[(k + 2) % 3] - p[k];
            let ang = e0.angle(&e1).to_degrees();
            min_angle = min_angle.min(ang);
            longest = longest.max(e0.norm());
        }
        let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let min_altitude = 2.0 * area / longest;
        max_aspect = max_aspect.max(longest / min_altitude * (3f64.sqrt() / 2.0));
    }
    let e = mesh.edges();
    let mean = e.iter().map(|&[a, b]| (mesh.position(a) - mesh.position(b)).norm()).sum::<f64>() / e.len() as f64;
    QualityStats { min_angle_deg: min_angle, max_aspect_ratio: max_aspect, mean_edge_length: mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn equilateral_scores_one() {
        let s = quality_stats(&shapes::icosahedron());
        assert!((s.min_angle_deg - 60.0).abs() < 1e-9);
        assert!((s.max_aspect_ratio - 1.0).abs() < 1e-9);
    }
}
