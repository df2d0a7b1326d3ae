//! Per-collapse charts and point transport across one collapse.

use crate::error::MapError;
use crate::flatten::{signed_area, JointCase, Vec2};

/// Tolerance on negative barycentric coordinates before a point counts as
/// having left the chart.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// One face of a collapse chart: its mesh face id, global vertex ids and the
/// shared UV slot of each corner.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFace {
    pub id: usize,
    pub vertices: [usize; 3],
    pub slots: [usize; 3],
}

/// The local joint parameterization of one edge collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRecord {
    /// Position of the collapse in its decimation sequence.
    pub index: usize,
    /// Vertex id that disappears.
    pub removed: usize,
    /// Vertex id reused by the surviving vertex.
    pub kept: usize,
    /// Neighbours of `removed` just before the collapse (`kept` included).
    pub removed_ring: Vec<usize>,
    pub before: Vec<ChartFace>,
    pub after: Vec<ChartFace>,
    /// UV per shared slot.
    pub uv: Vec<Vec2>,
    pub case: JointCase,
    pub energy: f64,
}

impl CollapseRecord {
    pub fn before_face(&self, id: usize) -> Option<&ChartFace> {
        self.before.iter().find(|f| f.id == id)
    }

    pub fn after_face(&self, id: usize) -> Option<&ChartFace> {
        self.after.iter().find(|f| f.id == id)
    }

    fn chart_point(&self, face: &ChartFace, w: &[f64; 3]) -> Vec2 {
        (0..3).map(|a| self.uv[face.slots[a]] * w[a]).fold(Vec2::zeros(), |s, p| s + p)
    }

    /// UV location of a point given on a face of either chart.
    pub fn uv_of(&self, point: &BarycentricPoint) -> Option<Vec2> {
        let f = self.before_face(point.face).or_else(|| self.after_face(point.face))?;
        Some(self.chart_point(f, &point.weights))
    }
}

/// A point on a mesh as a face id with barycentric weights in the order of
/// that face's vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricPoint {
    pub face: usize,
    pub weights: [f64; 3],
}

impl BarycentricPoint {
    pub fn new(face: usize, weights: [f64; 3]) -> Self {
        BarycentricPoint { face, weights }
    }

    /// The point sitting at corner `corner` of `face`.
    pub fn corner(face: usize, corner: usize) -> Self {
        let mut weights = [0.0; 3];
        weights[corner] = 1.0;
        BarycentricPoint { face, weights }
    }
}

/// Barycentric coordinates of `p` in triangle `t`.
pub fn barycentric(t: [Vec2; 3], p: Vec2) -> [f64; 3] {
    let area = signed_area(t[0], t[1], t[2]);
    let w0 = signed_area(p, t[1], t[2]) / area;
    let w1 = signed_area(t[0], p, t[2]) / area;
    [w0, w1, 1.0 - w0 - w1]
}

fn clamp(w: [f64; 3]) -> [f64; 3] {
    let c = w.map(|x| x.max(0.0));
    let s: f64 = c.iter().sum();
    c.map(|x| x / s)
}

fn transfer(record: &CollapseRecord, from: &[ChartFace], to: &[ChartFace], point: &BarycentricPoint) -> Result<BarycentricPoint, MapError> {
    let Some(src) = from.iter().find(|f| f.id == point.face) else {
        return Ok(*point);
    };
    // a point supported on shared slots keeps its exact weights when one
    // target face carries all of them
    let support: Vec<(usize, f64)> = (0..3).filter(|&a| point.weights[a] != 0.0).map(|a| (src.slots[a], point.weights[a])).collect();
    for f in to {
        if support.iter().all(|(s, _)| f.slots.contains(s)) {
            let mut w = [0.0; 3];
            for &(s, x) in &support {
                let c = f.slots.iter().position(|&t| t == s).expect("slot present");
                w[c] += x;
            }
            return Ok(BarycentricPoint::new(f.id, w));
        }
    }
    let uv = record.chart_point(src, &point.weights);
    let mut best: Option<(f64, usize, [f64; 3])> = None;
    for (k, f) in to.iter().enumerate() {
        let w = barycentric(f.slots.map(|s| record.uv[s]), uv);
        let m = w[0].min(w[1]).min(w[2]);
        if m.is_finite() && best.is_none_or(|(bm, _, _)| m > bm) {
            best = Some((m, k, w));
        }
    }
    match best {
        Some((m, k, w)) if m >= -CLAMP_TOLERANCE => Ok(BarycentricPoint::new(to[k].id, clamp(w))),
        Some((m, _, _)) => Err(MapError::Breach { record: record.index, min_weight: m }),
        None => Err(MapError::Breach { record: record.index, min_weight: f64::NEG_INFINITY }),
    }
}

/// Carries a point from the mesh before the collapse to the mesh after it.
/// Points on faces outside the collapse are returned unchanged.
pub fn push_point(point: &BarycentricPoint, record: &CollapseRecord) -> Result<BarycentricPoint, MapError> {
    transfer(record, &record.before, &record.after, point)
}

/// Carries a point from the mesh after the collapse back to the mesh before it.
pub fn pull_point(point: &BarycentricPoint, record: &CollapseRecord) -> Result<BarycentricPoint, MapError> {
    transfer(record, &record.after, &record.before, point)
}
