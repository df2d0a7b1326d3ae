//! Mutable triangle mesh supporting edge collapses with stable ids.

use crate::error::MeshError;
use crate::mesh::{SurfaceMesh, Vec3};

/// A mesh under decimation. Vertex ids never change; face ids grow
/// monotonically, and every face touched by a collapse is replaced by a face
/// with a fresh id.
#[derive(Debug, Clone)]
pub struct EditableMesh {
    positions: Vec<Vec3>,
    alive: Vec<bool>,
    boundary: Vec<bool>,
    faces: Vec<Option<[usize; 3]>>,
    vertex_faces: Vec<Vec<usize>>,
    live_vertices: usize,
    live_faces: usize,
    has_boundary: bool,
}

/// Compact copy of the live mesh with the id maps used to build it.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub mesh: SurfaceMesh,
    /// Editable vertex id → compact vertex index.
    pub vertex_map: Vec<Option<usize>>,
    /// Editable face id → compact face index.
    pub face_map: Vec<Option<usize>>,
}

impl EditableMesh {
    /// Starts from a validated mesh; initial vertex and face ids equal the
    /// mesh's indices.
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let n = mesh.vertex_count();
        EditableMesh {
            positions: mesh.positions().to_vec(),
            alive: vec![true; n],
            boundary: mesh.boundary_flags().to_vec(),
            faces: mesh.faces().iter().map(|&f| Some(f)).collect(),
            vertex_faces: (0..n).map(|v| mesh.vertex_faces(v).to_vec()).collect(),
            live_vertices: n,
            live_faces: mesh.face_count(),
            has_boundary: !mesh.is_closed(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.live_vertices
    }

    pub fn face_count(&self) -> usize {
        self.live_faces
    }

    /// Total number of face ids ever issued.
    pub fn face_id_bound(&self) -> usize {
        self.faces.len()
    }

    pub fn has_boundary(&self) -> bool {
        self.has_boundary
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn face(&self, f: usize) -> Option<[usize; 3]> {
        self.faces.get(f).copied().flatten()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Sorted distinct neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertex_faces[v]
            .iter()
            .flat_map(|&f| self.faces[f].expect("live face"))
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Ids of the live faces containing both `a` and `b`.
    pub fn edge_faces(&self, a: usize, b: usize) -> Vec<usize> {
        self.vertex_faces[a].iter().copied().filter(|&f| self.faces[f].expect("live face").contains(&b)).collect()
    }

    /// Live edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(3 * self.live_faces / 2 + 1);
        for f in self.faces.iter().flatten() {
            for c in 0..3 {
                let (a, b) = (f[c], f[(c + 1) % 3]);
                out.push((a.min(b), a.max(b)));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sorted ids of every live face incident to `i` or `j`.
    pub fn edge_star(&self, i: usize, j: usize) -> Vec<usize> {
        let mut star: Vec<usize> = self.vertex_faces[i].iter().chain(&self.vertex_faces[j]).copied().collect();
        star.sort_unstable();
        star.dedup();
        star
    }

    pub fn face_normal_of(&self, f: [usize; 3], placement: Option<(usize, Vec3)>) -> Vec3 {
        let p = |v: usize| match placement {
            Some((k, x)) if k == v => x,
            _ => self.positions[v],
        };
        (p(f[1]) - p(f[0])).cross(&(p(f[2]) - p(f[0])))
    }

    /// Replaces the faces of an edge star. `star` and `replacement` must come
    /// from [`EditableMesh::edge_star`] and list the new vertex triples (or
    /// `None` for dropped faces) in the same order. Returns the new face ids.
    pub fn apply_collapse(
        &mut self,
        kept: usize,
        removed: usize,
        placement: Vec3,
        star: &[usize],
        replacement: &[Option<[usize; 3]>],
    ) -> Vec<Option<usize>> {
        debug_assert_eq!(star.len(), replacement.len());
        let mut touched: Vec<usize> = Vec::new();
        for &f in star {
            let verts = self.faces[f].take().expect("live face");
            self.live_faces -= 1;
            touched.extend(verts);
        }
        touched.sort_unstable();
        touched.dedup();
        for &v in &touched {
            self.vertex_faces[v].retain(|f| star.binary_search(f).is_err());
        }
        let mut ids = Vec::with_capacity(star.len());
        for r in replacement {
            match r {
                Some(tri) => {
                    let id = self.faces.len();
                    self.faces.push(Some(*tri));
                    self.live_faces += 1;
                    for &v in tri {
                        self.vertex_faces[v].push(id);
                    }
                    ids.push(Some(id));
                }
                None => ids.push(None),
            }
        }
        self.boundary[kept] = self.boundary[kept] || self.boundary[removed];
        self.boundary[removed] = false;
        self.alive[removed] = false;
        self.live_vertices -= 1;
        self.positions[kept] = placement;
        debug_assert!(self.vertex_faces[removed].is_empty());
        ids
    }

    /// Compacts live vertices and faces into a validated [`SurfaceMesh`].
    pub fn snapshot(&self) -> Result<Snapshot, MeshError> {
        let mut vertex_map = vec![None; self.positions.len()];
        let mut positions = Vec::with_capacity(self.live_vertices);
        for v in 0..self.positions.len() {
            if self.alive[v] {
                vertex_map[v] = Some(positions.len());
                positions.push(self.positions[v]);
            }
        }
        let mut face_map = vec![None; self.faces.len()];
        let mut faces = Vec::with_capacity(self.live_faces);
        for (id, f) in self.faces.iter().enumerate() {
            if let Some(f) = f {
                face_map[id] = Some(faces.len());
                faces.push(f.map(|v| vertex_map[v].expect("live vertex")));
            }
        }
        let mesh = SurfaceMesh::new(positions, faces)?;
        Ok(Snapshot { mesh, vertex_map, face_map })
    }
}
