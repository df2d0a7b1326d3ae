//! Indexed manifold triangle meshes.
//!
//! [`SurfaceMesh`] is immutable once built: construction validates edge- and
//! vertex-manifoldness, consistent orientation and face non-degeneracy, then
//! derives a corner-based half-edge structure. Half-edge `h = 3 * f + c` runs
//! from corner `c` of face `f` to corner `(c + 1) % 3`.

mod neighborhood;
pub mod obj;
pub mod quality;
pub mod shapes;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::MeshError;

pub use neighborhood::{chain_link, Neighborhood, Polyline, RingCenter};

pub type Vec3 = Vector3<f64>;

/// Sentinel for a half-edge without twin (mesh boundary).
pub const NO_TWIN: usize = usize::MAX;

/// Relative area below which a face counts as degenerate, scaled by the
/// squared bounding-box diagonal.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    twin: Vec<usize>,
    vertex_face_offsets: Vec<usize>,
    vertex_face_list: Vec<usize>,
    boundary_vertex: Vec<bool>,
    edges: Vec<[usize; 2]>,
}

impl SurfaceMesh {
    /// Builds and validates a mesh. Every vertex must be referenced by a face.
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = positions.len();
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange { face: f, vertex: v as i64 });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(MeshError::RepeatedVertex { face: f });
            }
        }

        // vertex -> incident faces
        let mut counts = vec![0usize; nv + 1];
        for face in &faces {
            for &v in face {
                counts[v + 1] += 1;
            }
        }
        for v in 0..nv {
            if counts[v + 1] == 0 {
                return Err(MeshError::IsolatedVertex(v));
            }
            counts[v + 1] += counts[v];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let mut list = vec![0usize; offsets[nv]];
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                list[fill[v]] = f;
                fill[v] += 1;
            }
        }

        // edge-manifoldness and orientation
        let mut undirected: HashMap<(usize, usize), u8> = HashMap::with_capacity(faces.len() * 2);
        for face in &faces {
            for c in 0..3 {
                let (a, b) = (face[c], face[(c + 1) % 3]);
                *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut bad: Vec<(usize, usize)> =
            undirected.iter().filter(|(_, &n)| n > 2).map(|(&e, _)| e).collect();
        bad.sort_unstable();
        if let Some(&(a, b)) = bad.first() {
            return Err(MeshError::NonManifoldEdge(a, b));
        }

        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        let mut orientation_errors = Vec::new();
        for (f, face) in faces.iter().enumerate() {
            for c in 0..3 {
                let (a, b) = (face[c], face[(c + 1) % 3]);
                if directed.insert((a, b), 3 * f + c).is_some() {
                    orientation_errors.push((a.min(b), a.max(b)));
                }
            }
        }
        orientation_errors.sort_unstable();
        if let Some(&(a, b)) = orientation_errors.first() {
            return Err(MeshError::InconsistentOrientation(a, b));
        }
        let mut twin = vec![NO_TWIN; 3 * faces.len()];
        for (&(a, b), &h) in &directed {
            if let Some(&t) = directed.get(&(b, a)) {
                twin[h] = t;
            }
        }

        let mut edges: Vec<[usize; 2]> = undirected.keys().map(|&(a, b)| [a, b]).collect();
        edges.sort_unstable();

        let mut mesh = SurfaceMesh {
            positions,
            faces,
            twin,
            vertex_face_offsets: offsets,
            vertex_face_list: list,
            boundary_vertex: vec![false; nv],
            edges,
        };

        for v in 0..nv {
            mesh.check_vertex_fan(v)?;
        }
        for h in 0..mesh.twin.len() {
            if mesh.twin[h] == NO_TWIN {
                let (a, b) = mesh.halfedge_vertices(h);
                mesh.boundary_vertex[a] = true;
                mesh.boundary_vertex[b] = true;
            }
        }

        let diag2 = mesh.bbox_diagonal().powi(2);
        for f in 0..mesh.faces.len() {
            let area = mesh.face_area(f);
            if !(area > DEGENERATE_AREA_RATIO * diag2) {
                return Err(MeshError::DegenerateFace { face: f, area });
            }
        }
        Ok(mesh)
    }

    fn check_vertex_fan(&self, v: usize) -> Result<(), MeshError> {
        let outgoing: Vec<usize> = self
            .vertex_faces(v)
            .iter()
            .map(|&f| 3 * f + self.corner_of(f, v))
            .collect();
        let open: Vec<usize> = outgoing.iter().copied().filter(|&h| self.twin[h] == NO_TWIN).collect();
        if open.len() > 1 {
            return Err(MeshError::NonManifoldVertex(v));
        }
        let start = open.first().copied().unwrap_or(outgoing[0]);
        let mut h = start;
        let mut visited = 0usize;
        loop {
            visited += 1;
            if visited > outgoing.len() {
                return Err(MeshError::NonManifoldVertex(v));
            }
            let incoming = prev_halfedge(h);
            let t = self.twin[incoming];
            if t == NO_TWIN || t == start {
                break;
            }
            h = t;
        }
        if visited != outgoing.len() {
            return Err(MeshError::NonManifoldVertex(v));
        }
        Ok(())
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Undirected edges as sorted vertex pairs, in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_face_list[self.vertex_face_offsets[v]..self.vertex_face_offsets[v + 1]]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary_vertex.iter().any(|&b| b)
    }

    pub fn twin(&self, h: usize) -> Option<usize> {
        let t = self.twin[h];
        (t != NO_TWIN).then_some(t)
    }

    /// Tail and head vertex of half-edge `h`.
    pub fn halfedge_vertices(&self, h: usize) -> (usize, usize) {
        let f = h / 3;
        let c = h % 3;
        (self.faces[f][c], self.faces[f][(c + 1) % 3])
    }

    /// Position of vertex `v` within face `f`. Panics if `v` is not a corner.
    pub fn corner_of(&self, f: usize, v: usize) -> usize {
        self.faces[f]
            .iter()
            .position(|&x| x == v)
            .expect("vertex is not a corner of the face")
    }

    /// Whether `(a, b)` is an edge, and if so how many faces share it.
    pub fn edge_face_count(&self, a: usize, b: usize) -> usize {
        self.vertex_faces(a)
            .iter()
            .filter(|&&f| self.faces[f].contains(&b))
            .count()
    }

    pub fn is_boundary_edge(&self, a: usize, b: usize) -> bool {
        self.edge_face_count(a, b) == 1
    }

    /// Sorted one-ring neighbours of `v` (excluding `v`).
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .vertex_faces(v)
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&x| x != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        let p = &self.positions;
        (p[b] - p[a]).cross(&(p[c] - p[a]))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_normal(f).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        bbox_of(&self.positions)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Ordered boundary loops, each following the half-edge direction.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut next_boundary: HashMap<usize, usize> = HashMap::new();
        let mut starts = Vec::new();
        for h in 0..self.twin.len() {
            if self.twin[h] == NO_TWIN {
                let (a, b) = self.halfedge_vertices(h);
                next_boundary.insert(a, b);
                starts.push(a);
            }
        }
        starts.sort_unstable();
        let mut used = vec![false; self.positions.len()];
        let mut loops = Vec::new();
        for s in starts {
            if used[s] {
                continue;
            }
            let mut lp = Vec::new();
            let mut v = s;
            while !used[v] {
                used[v] = true;
                lp.push(v);
                v = next_boundary[&v];
            }
            loops.push(lp);
        }
        loops
    }

    /// Returns a copy with the same connectivity and new vertex positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self, MeshError> {
        if positions.len() != self.positions.len() {
            return Err(MeshError::Format(format!(
                "expected {} positions, got {}",
                self.positions.len(),
                positions.len()
            )));
        }
        let mut out = self.clone();
        out.positions = positions;
        Ok(out)
    }
}

pub(crate) fn prev_halfedge(h: usize) -> usize {
    3 * (h / 3) + (h % 3 + 2) % 3
}

pub(crate) fn bbox_of(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Area of the triangle `(a, b, c)`.
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> SurfaceMesh {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        SurfaceMesh::new(p, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn square_has_one_loop_of_four() {
        let m = square();
        let loops = m.boundary_loops();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0], vec![0, 1, 2, 3]);
        assert_eq!(m.edges().len(), 5);
        assert!(!m.is_closed());
    }

    #[test]
    fn tetrahedron_is_closed() {
        let m = shapes::tetrahedron();
        assert!(m.is_closed());
        assert_eq!(m.edges().len(), 6);
        assert!(m.boundary_loops().is_empty());
        assert_eq!(m.vertex_count() as i64 - m.edges().len() as i64 + m.face_count() as i64, 2);
    }

    #[test]
    fn rejects_duplicate_directed_edge() {
        let p = square().positions().to_vec();
        let err = SurfaceMesh::new(p, vec![[0, 1, 2], [0, 1, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::InconsistentOrientation(0, 1)));
    }

    #[test]
    fn rejects_fin_edge() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 1.0, 0.0),
            Vec3::new(0.5, -1.0, 0.0),
            Vec3::new(0.5, 0.0, 1.0),
        ];
        let err = SurfaceMesh::new(p, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge(0, 1)));
    }

    #[test]
    fn rejects_bowtie_vertex() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
        ];
        let err = SurfaceMesh::new(p, vec![[0, 1, 2], [0, 3, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldVertex(0)));
    }

    #[test]
    fn rejects_zero_area_face() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let err = SurfaceMesh::new(p, vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { face: 0, .. }));
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = shapes::annulus(12, 2, 0.5, 1.0);
        assert_eq!(m.boundary_loops().len(), 2);
    }

    #[test]
    fn total_area_is_positive() {
        for m in [square(), shapes::icosahedron(), shapes::torus(12, 8, 1.0, 0.3)] {
            assert!(m.total_area() > 0.0);
            for f in 0..m.face_count() {
                assert!(m.face_normal(f).norm() > 0.0);
            }
        }
    }
}
