//! Priority-queue edge-collapse decimation that records a joint chart for
//! every accepted collapse.

mod editable;
mod quadric;

use std::cmp::Ordering as CmpOrdering;
use std::collections::BinaryHeap;

use crate::error::{FlattenError, MeshError};
use crate::flatten::{admissible_cases, flatten_best, Endpoint, FlattenConfig, PatchPair};
use crate::mesh::{SurfaceMesh, Vec3, DEGENERATE_AREA_RATIO};
use crate::selfparam::{ChartFace, CollapseRecord};

pub use editable::{EditableMesh, Snapshot};
pub use quadric::{qslim_cost, vertex_quadrics, Quadric, BOUNDARY_PENALTY};

/// Collapse ordering and placement rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Quadric error cost, quadric-optimal placement.
    QSlim,
    /// Shortest edge first, midpoint placement.
    Midpoint,
    /// Half-edge collapse onto the endpoint of lower quadric error.
    VertexRemoval,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "qslim" => Ok(Strategy::QSlim),
            "midpoint" | "uniform" => Ok(Strategy::Midpoint),
            "vertex-removal" | "vertexremoval" => Ok(Strategy::VertexRemoval),
            other => Err(format!("unknown decimation strategy {other:?}")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::QSlim => "qslim",
            Strategy::Midpoint => "midpoint",
            Strategy::VertexRemoval => "vertex-removal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecimateConfig {
    pub strategy: Strategy,
    pub flatten: FlattenConfig,
    /// Times a rejected edge is re-queued before it is frozen.
    pub max_retries: u32,
    /// Cost multiplier applied on every rejection.
    pub retry_penalty: f64,
}

impl Default for DecimateConfig {
    fn default() -> Self {
        DecimateConfig { strategy: Strategy::Midpoint, flatten: FlattenConfig::default(), max_retries: 3, retry_penalty: 10.0 }
    }
}

impl DecimateConfig {
    pub fn new(strategy: Strategy, flatten: FlattenConfig) -> Self {
        DecimateConfig { strategy, flatten, ..Self::default() }
    }
}

/// Result of a decimation run.
#[derive(Debug, Clone)]
pub struct Decimation {
    pub mesh: EditableMesh,
    pub records: Vec<CollapseRecord>,
    pub target: usize,
    pub achieved: usize,
    /// The queue ran dry before reaching the target.
    pub shortfall: bool,
    /// Candidate evaluations that failed a gate.
    pub rejections: usize,
}

/// A planned collapse: which vertex survives and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsePlan {
    pub kept: usize,
    pub removed: usize,
    pub placement: Vec3,
    pub cost: f64,
}

/// Why a candidate collapse was refused.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    Link,
    Geometry,
    Flatten(FlattenError),
}

/// Combinatorial collapse test: the common neighbours of `i` and `j` are
/// exactly the vertices opposite the edge, an interior edge does not join two
/// boundary vertices, and the mesh keeps at least 4 faces (closed) or 2 faces
/// (with boundary).
pub fn link_condition(mesh: &EditableMesh, i: usize, j: usize) -> bool {
    if i == j || !mesh.is_alive(i) || !mesh.is_alive(j) {
        return false;
    }
    let ef = mesh.edge_faces(i, j);
    if ef.is_empty() || ef.len() > 2 {
        return false;
    }
    let mut opposite: Vec<usize> = ef
        .iter()
        .map(|&f| mesh.face(f).expect("live face").into_iter().find(|&v| v != i && v != j).expect("triangle"))
        .collect();
    opposite.sort_unstable();
    let nj = mesh.neighbors(j);
    let common: Vec<usize> = mesh.neighbors(i).into_iter().filter(|v| *v != j && nj.binary_search(v).is_ok()).collect();
    if common != opposite {
        return false;
    }
    if ef.len() == 2 && mesh.is_boundary(i) && mesh.is_boundary(j) {
        return false;
    }
    let floor = if mesh.has_boundary() { 2 } else { 4 };
    mesh.face_count() - ef.len() >= floor
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    cost: f64,
    a: usize,
    b: usize,
    stamps: (u32, u32),
    retries: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == CmpOrdering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed so the max-heap pops the cheapest, then lowest-index edge
    fn cmp(&self, other: &Self) -> CmpOrdering {
        other.cost.total_cmp(&self.cost).then(other.a.cmp(&self.a)).then(other.b.cmp(&self.b))
    }
}

/// Decimation state: the mesh under edit, quadrics and the candidate queue.
pub struct Decimator {
    mesh: EditableMesh,
    quadrics: Vec<Quadric>,
    stamps: Vec<u32>,
    heap: BinaryHeap<Entry>,
    config: DecimateConfig,
    min_area: f64,
    records: Vec<CollapseRecord>,
    rejections: usize,
}

impl Decimator {
    pub fn new(mesh: &SurfaceMesh, config: DecimateConfig) -> Self {
        let mut d = Decimator {
            mesh: EditableMesh::new(mesh),
            quadrics: vertex_quadrics(mesh),
            stamps: vec![0; mesh.vertex_count()],
            heap: BinaryHeap::new(),
            config,
            min_area: 100.0 * DEGENERATE_AREA_RATIO * mesh.bbox_diagonal().powi(2),
            records: Vec::new(),
            rejections: 0,
        };
        for (a, b) in d.mesh.edges() {
            d.push(a, b, 0);
        }
        d
    }

    pub fn mesh(&self) -> &EditableMesh {
        &self.mesh
    }

    /// Kept vertex, placement and cost for collapsing edge `(a, b)`.
    pub fn plan(&self, a: usize, b: usize) -> CollapsePlan {
        let (a, b) = (a.min(b), a.max(b));
        let (pa, pb) = (self.mesh.position(a), self.mesh.position(b));
        let q = self.quadrics[a] + self.quadrics[b];
        let (ba, bb) = (self.mesh.is_boundary(a), self.mesh.is_boundary(b));
        let snap = match (ba, bb) {
            (true, false) => Some(a),
            (false, true) => Some(b),
            _ => None,
        };
        let (kept, placement, cost) = match (self.config.strategy, snap) {
            (Strategy::Midpoint, Some(k)) => (k, self.mesh.position(k), (pa - pb).norm()),
            (Strategy::Midpoint, None) => (a, (pa + pb) / 2.0, (pa - pb).norm()),
            (Strategy::QSlim, Some(k)) => (k, self.mesh.position(k), q.eval(self.mesh.position(k)).max(0.0)),
            (Strategy::QSlim, None) => {
                let (c, x) = qslim_cost(&q, pa, pb);
                (a, x, c)
            }
            (Strategy::VertexRemoval, Some(k)) => (k, self.mesh.position(k), q.eval(self.mesh.position(k)).max(0.0)),
            (Strategy::VertexRemoval, None) => {
                let (ea, eb) = (q.eval(pa).max(0.0), q.eval(pb).max(0.0));
                if eb < ea {
                    (b, pb, eb)
                } else {
                    (a, pa, ea)
                }
            }
        };
        let removed = if kept == a { b } else { a };
        CollapsePlan { kept, removed, placement, cost }
    }

    fn push(&mut self, a: usize, b: usize, retries: u32) {
        let cost = self.plan(a, b).cost;
        self.heap.push(Entry { cost, a, b, stamps: (self.stamps[a], self.stamps[b]), retries });
    }

    /// Attempts the planned collapse of `(a, b)`; on success the mesh is
    /// updated and the record returned.
    pub fn try_collapse(&mut self, a: usize, b: usize) -> Result<CollapseRecord, Rejection> {
        let (a, b) = (a.min(b), a.max(b));
        if !link_condition(&self.mesh, a, b) {
            return Err(Rejection::Link);
        }
        let plan = self.plan(a, b);
        let star = self.mesh.edge_star(a, b);
        let star_tris: Vec<[usize; 3]> = star.iter().map(|&f| self.mesh.face(f).expect("live face")).collect();

        let mut replacement = Vec::with_capacity(star.len());
        for tri in &star_tris {
            if tri.contains(&a) && tri.contains(&b) {
                replacement.push(None);
                continue;
            }
            let new = tri.map(|v| if v == plan.removed { plan.kept } else { v });
            let before = self.mesh.face_normal_of(*tri, None);
            let after = self.mesh.face_normal_of(new, Some((plan.kept, plan.placement)));
            if !(0.5 * after.norm() > self.min_area) || before.dot(&after) <= 0.0 {
                return Err(Rejection::Geometry);
            }
            replacement.push(Some(new));
        }

        let mesh = &self.mesh;
        let pair = PatchPair::from_star(a, b, &star_tris, |v| mesh.position(v), plan.placement).map_err(Rejection::Flatten)?;
        let kept_end = if plan.kept == a { Endpoint::I } else { Endpoint::J };
        let forced = (self.config.strategy == Strategy::VertexRemoval).then_some(kept_end);
        let cases = admissible_cases(pair.kind, forced);
        let flat = flatten_best(&pair, &cases, &self.config.flatten).map_err(Rejection::Flatten)?;

        let removed_ring = self.mesh.neighbors(plan.removed);
        let ids = self.mesh.apply_collapse(plan.kept, plan.removed, plan.placement, &star, &replacement);
        let slot = |local: &[usize; 3]| local.map(|l| flat.joint.slot_of[l]);
        let before = star
            .iter()
            .zip(&star_tris)
            .zip(&pair.before)
            .map(|((&id, &vertices), local)| ChartFace { id, vertices, slots: slot(local) })
            .collect();
        let after = ids
            .iter()
            .zip(&replacement)
            .filter_map(|(id, tri)| Some((id.as_ref()?, tri.as_ref()?)))
            .zip(&pair.after)
            .map(|((&id, &vertices), local)| ChartFace { id, vertices, slots: slot(local) })
            .collect();
        self.quadrics[plan.kept] = self.quadrics[a] + self.quadrics[b];
        let record = CollapseRecord {
            index: self.records.len(),
            removed: plan.removed,
            kept: plan.kept,
            removed_ring,
            before,
            after,
            uv: flat.uv,
            case: flat.joint.case,
            energy: flat.energy,
        };
        self.requeue_around(plan.kept);
        Ok(record)
    }

    fn requeue_around(&mut self, k: usize) {
        let mut touched = self.mesh.neighbors(k);
        touched.push(k);
        for &v in &touched {
            self.stamps[v] = self.stamps[v].wrapping_add(1);
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &v in &touched {
            for u in self.mesh.neighbors(v) {
                edges.push((u.min(v), u.max(v)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for (a, b) in edges {
            self.push(a, b, 0);
        }
    }

    /// Collapses until `target` vertices remain or no candidate is valid.
    pub fn run(mut self, target: usize) -> Decimation {
        while self.mesh.vertex_count() > target {
            let Some(e) = self.heap.pop() else { break };
            if !self.mesh.is_alive(e.a) || !self.mesh.is_alive(e.b) || e.stamps != (self.stamps[e.a], self.stamps[e.b]) {
                continue;
            }
            match self.try_collapse(e.a, e.b) {
                Ok(r) => self.records.push(r),
                Err(_) => {
                    self.rejections += 1;
                    if e.retries < self.config.max_retries {
                        self.heap.push(Entry { cost: e.cost * self.config.retry_penalty, retries: e.retries + 1, ..e });
                    }
                }
            }
        }
        let achieved = self.mesh.vertex_count();
        if achieved > target {
            log::warn!("decimation stopped at {achieved} vertices (target {target})");
        }
        Decimation { achieved, shortfall: achieved > target, target, records: self.records, rejections: self.rejections, mesh: self.mesh }
    }
}

/// Decimates `mesh` down to `target` vertices.
pub fn decimate(mesh: &SurfaceMesh, target: usize, config: &DecimateConfig) -> Decimation {
    Decimator::new(mesh, *config).run(target)
}

/// Decimates and compacts the result into a validated mesh.
pub fn decimate_to_mesh(mesh: &SurfaceMesh, target: usize, config: &DecimateConfig) -> Result<(Decimation, Snapshot), MeshError> {
    let d = decimate(mesh, target, config);
    let snap = d.mesh.snapshot()?;
    Ok((d, snap))
}
