//! Joint flattening of the two patches of an edge collapse into one UV chart.
//!
//! The before patch (edge star) and after patch (vertex star) share their
//! boundary, so both are laid out over one set of UV slots. Boundary slots are
//! shared; the interior endpoints and the surviving vertex get their own slots
//! unless a boundary configuration merges them.

mod metrics;
mod patch;

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::FlattenError;
use crate::mesh::Vec3;

pub use metrics::{check_uv_validity, polygon_is_simple, quasiconformal_distortion, signed_area};
pub use patch::{CollapseKind, Endpoint, PatchPair};

pub type Vec2 = Vector2<f64>;

/// Parameterization energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamEnergy {
    Lscm,
    Arap,
}

impl std::fmt::Display for ParamEnergy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ParamEnergy::Lscm => "lscm",
            ParamEnergy::Arap => "arap",
        })
    }
}

impl std::str::FromStr for ParamEnergy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lscm" => Ok(ParamEnergy::Lscm),
            "arap" => Ok(ParamEnergy::Arap),
            other => Err(format!("unknown parameterization energy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlattenConfig {
    pub energy: ParamEnergy,
    pub arap_max_iters: usize,
    pub arap_tol: f64,
}

impl Default for FlattenConfig {
    fn default() -> Self {
        FlattenConfig { energy: ParamEnergy::Lscm, arap_max_iters: 10, arap_tol: 1e-6 }
    }
}

impl FlattenConfig {
    pub fn with_energy(energy: ParamEnergy) -> Self {
        FlattenConfig { energy, ..Self::default() }
    }
}

/// How the surviving vertex `k` relates to the endpoints in UV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum JointCase {
    /// `k` has its own slot.
    Free,
    /// `k` shares the slot of `i`.
    KAtI,
    /// `k` shares the slot of `j`.
    KAtJ,
    /// Boundary edge only: `k` has its own slot on the line through `i`, `j`.
    Colinear,
}

/// Shared UV unknowns of a patch pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointVariable {
    pub case: JointCase,
    /// Slot of each local vertex.
    pub slot_of: Vec<usize>,
    pub slot_count: usize,
    /// Slots constrained to `v = 0`.
    pub line: Vec<usize>,
    /// Patch boundary cycles as slot sequences.
    pub boundary_before: Vec<usize>,
    pub boundary_after: Vec<usize>,
}

impl JointVariable {
    pub fn before_faces(&self, pair: &PatchPair) -> Vec<[usize; 3]> {
        pair.before.iter().map(|f| f.map(|v| self.slot_of[v])).collect()
    }

    pub fn after_faces(&self, pair: &PatchPair) -> Vec<[usize; 3]> {
        pair.after.iter().map(|f| f.map(|v| self.slot_of[v])).collect()
    }
}

/// Slot layout for `case`. Valid cases depend on the collapse kind: interior
/// edges take `Free` (or a merge for half-edge collapses), one-boundary edges
/// must merge `k` with the boundary endpoint, and boundary edges take any of
/// `KAtI`, `KAtJ`, `Colinear`.
pub fn build_joint_variable(pair: &PatchPair, case: JointCase) -> Result<JointVariable, FlattenError> {
    let m = pair.link_len();
    match (pair.kind, case) {
        (CollapseKind::Interior, JointCase::Colinear) => {
            return Err(FlattenError::Malformed("colinear case needs a boundary edge".into()));
        }
        (CollapseKind::OneBoundary(Endpoint::I), c) if c != JointCase::KAtI => {
            return Err(FlattenError::Malformed("k must share the slot of boundary endpoint i".into()));
        }
        (CollapseKind::OneBoundary(Endpoint::J), c) if c != JointCase::KAtJ => {
            return Err(FlattenError::Malformed("k must share the slot of boundary endpoint j".into()));
        }
        (CollapseKind::BoundaryEdge { .. }, JointCase::Free) => {
            return Err(FlattenError::Malformed("boundary edges need a boundary case".into()));
        }
        _ => {}
    }
    let mut slot_of: Vec<usize> = (0..m + 3).collect();
    slot_of[m + 2] = match case {
        JointCase::KAtI => m,
        JointCase::KAtJ => m + 1,
        JointCase::Free | JointCase::Colinear => m + 2,
    };
    let slot_count = if slot_of[m + 2] == m + 2 { m + 3 } else { m + 2 };
    let line = match pair.kind {
        CollapseKind::BoundaryEdge { .. } => {
            let mut l: Vec<usize> = line_path(pair, case).iter().map(|&v| slot_of[v]).collect();
            l.sort_unstable();
            l.dedup();
            l
        }
        _ => Vec::new(),
    };
    let map = |cycle: Vec<usize>| cycle.into_iter().map(|v| slot_of[v]).collect::<Vec<_>>();
    let boundary_before = map(pair.boundary_before());
    let boundary_after = map(pair.boundary_after());
    if matches!(pair.kind, CollapseKind::Interior | CollapseKind::OneBoundary(_)) && boundary_before != boundary_after {
        return Err(FlattenError::BoundaryMismatch);
    }
    Ok(JointVariable { case, slot_of, slot_count, line, boundary_before, boundary_after })
}

/// Outcome of flattening one patch pair.
#[derive(Debug, Clone)]
pub struct FlattenResult {
    pub joint: JointVariable,
    /// UV per slot.
    pub uv: Vec<Vec2>,
    pub energy: f64,
    pub valid: bool,
    pub distortion_before: Vec<f64>,
    pub distortion_after: Vec<f64>,
    /// ARAP energy after the initializer and each iteration (empty for LSCM).
    pub arap_history: Vec<f64>,
}

impl FlattenResult {
    /// UV of a local vertex.
    pub fn uv_of(&self, local: usize) -> Vec2 {
        self.uv[self.joint.slot_of[local]]
    }

    pub fn max_distortion(&self) -> f64 {
        self.distortion_before.iter().chain(&self.distortion_after).fold(1.0, |m, &d| m.max(d))
    }
}

/// Rest triangle in its own plane: corners at (0,0), (|e1|,0) and above.
fn local_frame(p: [Vec3; 3]) -> Result<[Vec2; 3], FlattenError> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let l1 = e1.norm();
    let n = e1.cross(&e2);
    if l1 == 0.0 || n.norm() <= 1e-300 {
        return Err(FlattenError::Malformed("degenerate rest triangle".into()));
    }
    let x = e1 / l1;
    let y = n.normalize().cross(&x);
    Ok([Vec2::zeros(), Vec2::new(l1, 0.0), Vec2::new(e2.dot(&x), e2.dot(&y))])
}

/// Rest area and barycentric gradients of one face.
#[derive(Debug, Clone, Copy)]
struct FaceGeom {
    slots: [usize; 3],
    area: f64,
    grad: [Vec2; 3],
}

impl FaceGeom {
    fn new(pair: &PatchPair, joint: &JointVariable, face: [usize; 3]) -> Result<Self, FlattenError> {
        let q = local_frame(face.map(|v| pair.positions[v]))?;
        let area = 0.5 * signed_area(q[0], q[1], q[2]);
        let perp = |d: Vec2| Vec2::new(-d.y, d.x);
        let grad = [0, 1, 2].map(|a| perp(q[(a + 2) % 3] - q[(a + 1) % 3]) / (2.0 * area));
        Ok(FaceGeom { slots: face.map(|v| joint.slot_of[v]), area, grad })
    }

    /// Jacobian rows `[∇u, ∇v]` of the map rest → UV.
    fn jacobian(&self, uv: &[Vec2]) -> nalgebra::Matrix2<f64> {
        let mut j = nalgebra::Matrix2::zeros();
        for a in 0..3 {
            let w = uv[self.slots[a]];
            j[(0, 0)] += w.x * self.grad[a].x;
            j[(0, 1)] += w.x * self.grad[a].y;
            j[(1, 0)] += w.y * self.grad[a].x;
            j[(1, 1)] += w.y * self.grad[a].y;
        }
        j
    }

    fn lscm_energy(&self, uv: &[Vec2]) -> f64 {
        let j = self.jacobian(uv);
        0.5 * self.area * ((j[(0, 0)] - j[(1, 1)]).powi(2) + (j[(0, 1)] + j[(1, 0)]).powi(2))
    }

    fn arap_energy(&self, uv: &[Vec2]) -> Result<f64, ()> {
        let j = self.jacobian(uv);
        let r = closest_rotation(&j).ok_or(())?;
        Ok(self.area * (j - r).norm_squared())
    }
}

/// Closest proper rotation to a 2x2 matrix.
fn closest_rotation(j: &nalgebra::Matrix2<f64>) -> Option<nalgebra::Matrix2<f64>> {
    let a = j[(0, 0)] + j[(1, 1)];
    let b = j[(1, 0)] - j[(0, 1)];
    let n = a.hypot(b);
    if n <= 1e-300 || !n.is_finite() {
        return None;
    }
    let (c, s) = (a / n, b / n);
    Some(nalgebra::Matrix2::new(c, -s, s, c))
}

/// Weighted linear least squares over UV unknowns (`2 s` = u, `2 s + 1` = v).
struct LeastSquares {
    h: DMatrix<f64>,
    g: DVector<f64>,
}

impl LeastSquares {
    fn new(nvar: usize) -> Self {
        LeastSquares { h: DMatrix::zeros(nvar, nvar), g: DVector::zeros(nvar) }
    }

    /// Adds `weight * (Σ c x - rhs)²`.
    fn add_row(&mut self, coeffs: &[(usize, f64)], rhs: f64, weight: f64) {
        for &(a, ca) in coeffs {
            self.g[a] += weight * ca * rhs;
            for &(b, cb) in coeffs {
                self.h[(a, b)] += weight * ca * cb;
            }
        }
    }

    /// Minimizer with `fixed[var] = Some(value)` held constant.
    fn solve(&self, fixed: &[Option<f64>]) -> Result<DVector<f64>, FlattenError> {
        let n = self.g.len();
        let free: Vec<usize> = (0..n).filter(|&k| fixed[k].is_none()).collect();
        let mut x = DVector::from_iterator(n, fixed.iter().map(|f| f.unwrap_or(0.0)));
        if free.is_empty() {
            return Ok(x);
        }
        let nf = free.len();
        let mut hff = DMatrix::zeros(nf, nf);
        let mut rhs = DVector::zeros(nf);
        for (a, &va) in free.iter().enumerate() {
            let mut r = self.g[va];
            for k in 0..n {
                if let Some(val) = fixed[k] {
                    r -= self.h[(va, k)] * val;
                }
            }
            rhs[a] = r;
            for (b, &vb) in free.iter().enumerate() {
                hff[(a, b)] = self.h[(va, vb)];
            }
        }
        let scale = (0..nf).map(|a| hff[(a, a)]).fold(0.0, f64::max);
        if scale <= 0.0 {
            return Err(FlattenError::RankDeficient);
        }
        let ch = nalgebra::Cholesky::new(hff).ok_or(FlattenError::RankDeficient)?;
        let l = ch.l_dirty();
        if (0..nf).any(|a| l[(a, a)] * l[(a, a)] <= 1e-13 * scale) {
            return Err(FlattenError::RankDeficient);
        }
        let sol = ch.solve(&rhs);
        for (a, &va) in free.iter().enumerate() {
            x[va] = sol[a];
        }
        Ok(x)
    }
}

fn to_uv(x: &DVector<f64>) -> Vec<Vec2> {
    (0..x.len() / 2).map(|s| Vec2::new(x[2 * s], x[2 * s + 1])).collect()
}

fn face_geoms(pair: &PatchPair, joint: &JointVariable) -> Result<(Vec<FaceGeom>, Vec<FaceGeom>), FlattenError> {
    let before = pair.before.iter().map(|&f| FaceGeom::new(pair, joint, f)).collect::<Result<_, _>>()?;
    let after = pair.after.iter().map(|&f| FaceGeom::new(pair, joint, f)).collect::<Result<_, _>>()?;
    Ok((before, after))
}

/// Boundary vertices (local, in boundary order) forced onto one line.
/// Merging `k` with an endpoint leaves the other endpoint's boundary
/// neighbour free; the colinear layout straightens the whole path.
fn line_path(pair: &PatchPair, case: JointCase) -> Vec<usize> {
    let CollapseKind::BoundaryEdge { p, q } = pair.kind else { return Vec::new() };
    let (i, j, k) = (pair.local_i(), pair.local_j(), pair.local_k());
    let mut path = match case {
        JointCase::KAtI => vec![i, j, q],
        JointCase::KAtJ => vec![p, i, j],
        JointCase::Colinear | JointCase::Free => vec![p, i, k, j, q],
    };
    // run along the counter-clockwise patch boundary so the patch lies at v > 0
    let cycle = pair.boundary_before();
    let at = cycle.iter().position(|&v| v == i).expect("i on boundary");
    if cycle[(at + 1) % cycle.len()] != j {
        path.reverse();
    }
    path
}

/// Gauge constraints: which variables are fixed and to what.
fn gauge(pair: &PatchPair, joint: &JointVariable, energy: ParamEnergy) -> Vec<Option<f64>> {
    let mut fixed = vec![None; 2 * joint.slot_count];
    for &s in &joint.line {
        fixed[2 * s + 1] = Some(0.0);
    }
    match pair.kind {
        CollapseKind::BoundaryEdge { .. } => {
            let path = line_path(pair, joint.case);
            let (first, last) = (path[0], path[path.len() - 1]);
            fixed[2 * joint.slot_of[first]] = Some(0.0);
            if energy == ParamEnergy::Lscm {
                let arc: f64 = path.windows(2).map(|w| (pair.positions[w[0]] - pair.positions[w[1]]).norm()).sum();
                fixed[2 * joint.slot_of[last]] = Some(arc);
            }
        }
        _ => {
            let (a, b) = pin_pair(pair);
            fixed[2 * joint.slot_of[a]] = Some(0.0);
            fixed[2 * joint.slot_of[a] + 1] = Some(0.0);
            if energy == ParamEnergy::Lscm {
                let d = (pair.positions[a] - pair.positions[b]).norm();
                fixed[2 * joint.slot_of[b]] = Some(d);
                fixed[2 * joint.slot_of[b] + 1] = Some(0.0);
            }
        }
    }
    fixed
}

/// Two link vertices at maximal distance along the patch boundary.
fn pin_pair(pair: &PatchPair) -> (usize, usize) {
    let cycle = pair.boundary_after();
    (cycle[0], cycle[cycle.len() / 2])
}

fn finish(
    pair: &PatchPair,
    joint: JointVariable,
    uv: Vec<Vec2>,
    energy: f64,
    arap_history: Vec<f64>,
) -> FlattenResult {
    let bf = joint.before_faces(pair);
    let af = joint.after_faces(pair);
    let valid = uv.iter().all(|p| p.x.is_finite() && p.y.is_finite())
        && check_uv_validity(&uv, &[&bf, &af])
        && polygon_is_simple(&joint.boundary_before.iter().map(|&s| uv[s]).collect::<Vec<_>>())
        && polygon_is_simple(&joint.boundary_after.iter().map(|&s| uv[s]).collect::<Vec<_>>());
    let dist = |faces: &[[usize; 3]]| -> Vec<f64> {
        faces
            .iter()
            .map(|f| quasiconformal_distortion(f.map(|v| pair.positions[v]), f.map(|v| uv[joint.slot_of[v]])))
            .collect()
    };
    let distortion_before = dist(&pair.before);
    let distortion_after = dist(&pair.after);
    FlattenResult { joint, uv, energy, valid, distortion_before, distortion_after, arap_history }
}

fn add_lscm_rows(ls: &mut LeastSquares, faces: &[FaceGeom]) {
    for f in faces {
        let s = f.slots;
        let r1: Vec<(usize, f64)> =
            (0..3).flat_map(|a| [(2 * s[a], f.grad[a].x), (2 * s[a] + 1, -f.grad[a].y)]).collect();
        let r2: Vec<(usize, f64)> =
            (0..3).flat_map(|a| [(2 * s[a], f.grad[a].y), (2 * s[a] + 1, f.grad[a].x)]).collect();
        ls.add_row(&r1, 0.0, 0.5 * f.area);
        ls.add_row(&r2, 0.0, 0.5 * f.area);
    }
}

fn lscm_solve(faces: &[FaceGeom], nslots: usize, fixed: &[Option<f64>]) -> Result<Vec<Vec2>, FlattenError> {
    let mut ls = LeastSquares::new(2 * nslots);
    add_lscm_rows(&mut ls, faces);
    Ok(to_uv(&ls.solve(fixed)?))
}

fn lscm_total(faces: &[&[FaceGeom]], uv: &[Vec2]) -> f64 {
    faces.iter().flat_map(|fs| fs.iter()).map(|f| f.lscm_energy(uv)).sum()
}

fn arap_total(faces: &[&[FaceGeom]], uv: &[Vec2]) -> Result<f64, FlattenError> {
    let mut e = 0.0;
    for (k, f) in faces.iter().flat_map(|fs| fs.iter()).enumerate() {
        e += f.arap_energy(uv).map_err(|_| FlattenError::DegenerateRotation(k))?;
    }
    Ok(e)
}

/// Local-global ARAP iterations over `faces` from `init`.
fn arap_iterate(
    faces: &[&[FaceGeom]],
    nslots: usize,
    fixed: &[Option<f64>],
    init: Vec<Vec2>,
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<Vec2>, Vec<f64>), FlattenError> {
    let mut uv = init;
    for (s, p) in uv.iter_mut().enumerate() {
        if let Some(u) = fixed[2 * s] {
            p.x = u;
        }
        if let Some(v) = fixed[2 * s + 1] {
            p.y = v;
        }
    }
    let mut history = vec![arap_total(faces, &uv)?];
    for _ in 0..max_iters {
        let mut ls = LeastSquares::new(2 * nslots);
        for (k, f) in faces.iter().flat_map(|fs| fs.iter()).enumerate() {
            let r = closest_rotation(&f.jacobian(&uv)).ok_or(FlattenError::DegenerateRotation(k))?;
            let s = f.slots;
            for (row, comp) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
                let coeffs: Vec<(usize, f64)> = (0..3).map(|a| (2 * s[a] + row, f.grad[a][comp])).collect();
                ls.add_row(&coeffs, r[(row, comp)], f.area);
            }
        }
        let next = to_uv(&ls.solve(fixed)?);
        let e = arap_total(faces, &next)?;
        let prev = *history.last().expect("initial energy");
        if e > prev {
            break;
        }
        history.push(e);
        uv = next;
        if prev - e <= tol * prev {
            break;
        }
    }
    Ok((uv, history))
}

/// Joint LSCM flattening.
pub fn flatten_lscm(pair: &PatchPair, joint: JointVariable) -> Result<FlattenResult, FlattenError> {
    let (bf, af) = face_geoms(pair, &joint)?;
    let all: Vec<FaceGeom> = bf.iter().chain(&af).copied().collect();
    let fixed = gauge(pair, &joint, ParamEnergy::Lscm);
    let uv = lscm_solve(&all, joint.slot_count, &fixed)?;
    let energy = lscm_total(&[&bf, &af], &uv);
    Ok(finish(pair, joint, uv, energy, Vec::new()))
}

/// Joint ARAP flattening started from `init` (per slot).
pub fn flatten_arap(
    pair: &PatchPair,
    joint: JointVariable,
    init: &[Vec2],
    max_iters: usize,
    tol: f64,
) -> Result<FlattenResult, FlattenError> {
    if init.len() != joint.slot_count {
        return Err(FlattenError::Malformed("initializer has the wrong slot count".into()));
    }
    let (bf, af) = face_geoms(pair, &joint)?;
    let fixed = gauge(pair, &joint, ParamEnergy::Arap);
    let (uv, history) = arap_iterate(&[&bf, &af], joint.slot_count, &fixed, init.to_vec(), max_iters, tol)?;
    let energy = *history.last().expect("non-empty");
    Ok(finish(pair, joint, uv, energy, history))
}

/// Flattens one joint case with the configured energy (ARAP starts from LSCM).
pub fn flatten_case(pair: &PatchPair, case: JointCase, config: &FlattenConfig) -> Result<FlattenResult, FlattenError> {
    let joint = build_joint_variable(pair, case)?;
    let lscm = flatten_lscm(pair, joint)?;
    match config.energy {
        ParamEnergy::Lscm => Ok(lscm),
        ParamEnergy::Arap => flatten_arap(pair, lscm.joint.clone(), &lscm.uv, config.arap_max_iters, config.arap_tol),
    }
}

/// The valid result of minimum energy among `cases`.
pub fn flatten_best(pair: &PatchPair, cases: &[JointCase], config: &FlattenConfig) -> Result<FlattenResult, FlattenError> {
    let mut best: Option<FlattenResult> = None;
    for &case in cases {
        let Ok(r) = flatten_case(pair, case, config) else { continue };
        if r.valid && best.as_ref().is_none_or(|b| r.energy < b.energy) {
            best = Some(r);
        }
    }
    best.ok_or(FlattenError::AllCasesInvalid)
}

/// Tries `k ≡ i`, `k ≡ j` and the colinear layout; keeps the valid one of
/// least energy.
pub fn boundary_collapse_best_of_three(pair: &PatchPair, config: &FlattenConfig) -> Result<FlattenResult, FlattenError> {
    if !matches!(pair.kind, CollapseKind::BoundaryEdge { .. }) {
        return Err(FlattenError::Malformed("not a boundary edge".into()));
    }
    flatten_best(pair, &[JointCase::KAtI, JointCase::KAtJ, JointCase::Colinear], config)
}

/// Cases a collapse may use. `kept` is set for half-edge collapses, where the
/// surviving vertex stays at that endpoint.
pub fn admissible_cases(kind: CollapseKind, kept: Option<Endpoint>) -> Vec<JointCase> {
    let at = |e: Endpoint| match e {
        Endpoint::I => JointCase::KAtI,
        Endpoint::J => JointCase::KAtJ,
    };
    match (kind, kept) {
        (CollapseKind::OneBoundary(e), _) => vec![at(e)],
        (_, Some(e)) => vec![at(e)],
        (CollapseKind::Interior, None) => vec![JointCase::Free],
        (CollapseKind::BoundaryEdge { .. }, None) => vec![JointCase::KAtI, JointCase::KAtJ, JointCase::Colinear],
    }
}

/// Two-stage baseline: flatten the before patch alone, then the after patch
/// with every slot of the before patch held fixed.
pub fn flatten_sequential(pair: &PatchPair, case: JointCase, config: &FlattenConfig) -> Result<FlattenResult, FlattenError> {
    let joint = build_joint_variable(pair, case)?;
    let (bf, af) = face_geoms(pair, &joint)?;
    let n = joint.slot_count;
    let mut in_before = vec![false; n];
    for f in &bf {
        for &s in &f.slots {
            in_before[s] = true;
        }
    }
    let gauge_fixed = gauge(pair, &joint, config.energy);
    let lscm_gauge = gauge(pair, &joint, ParamEnergy::Lscm);
    // stage one: slots outside the before patch are parked at zero
    let mut stage1 = lscm_gauge.clone();
    for s in 0..n {
        if !in_before[s] {
            stage1[2 * s] = Some(0.0);
            stage1[2 * s + 1] = Some(0.0);
        }
    }
    let mut uv = lscm_solve(&bf, n, &stage1)?;
    if config.energy == ParamEnergy::Arap {
        let mut arap1 = gauge_fixed.clone();
        for s in 0..n {
            if !in_before[s] {
                arap1[2 * s] = Some(0.0);
                arap1[2 * s + 1] = Some(0.0);
            }
        }
        uv = arap_iterate(&[&bf], n, &arap1, uv, config.arap_max_iters, config.arap_tol)?.0;
    }
    let mut stage2 = vec![None; 2 * n];
    for s in 0..n {
        if in_before[s] {
            stage2[2 * s] = Some(uv[s].x);
            stage2[2 * s + 1] = Some(uv[s].y);
        } else if let (Some(u), Some(v)) = (gauge_fixed[2 * s], gauge_fixed[2 * s + 1]) {
            stage2[2 * s] = Some(u);
            stage2[2 * s + 1] = Some(v);
        } else if let Some(v) = gauge_fixed[2 * s + 1] {
            stage2[2 * s + 1] = Some(v);
        }
    }
    let mut uv2 = lscm_solve(&af, n, &stage2)?;
    let mut history = Vec::new();
    if config.energy == ParamEnergy::Arap {
        let (u, h) = arap_iterate(&[&af], n, &stage2, uv2, config.arap_max_iters, config.arap_tol)?;
        uv2 = u;
        history = h;
    }
    let energy = match config.energy {
        ParamEnergy::Lscm => lscm_total(&[&bf, &af], &uv2),
        ParamEnergy::Arap => arap_total(&[&bf, &af], &uv2)?,
    };
    Ok(finish(pair, joint, uv2, energy, history))
}

/// Energy of `uv` (per slot) under the given joint layout.
pub fn joint_energy(pair: &PatchPair, joint: &JointVariable, uv: &[Vec2], energy: ParamEnergy) -> Result<f64, FlattenError> {
    let (bf, af) = face_geoms(pair, joint)?;
    match energy {
        ParamEnergy::Lscm => Ok(lscm_total(&[&bf, &af], uv)),
        ParamEnergy::Arap => arap_total(&[&bf, &af], uv),
    }
}
