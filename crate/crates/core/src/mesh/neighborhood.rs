use std::collections::HashMap;

use crate::error::MeshError;

use super::SurfaceMesh;

/// What a neighbourhood is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingCenter {
    Vertex(usize),
    Edge(usize, usize),
}

/// Ordered vertex sequence; `closed` marks a cycle (last connects to first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polyline {
    pub vertices: Vec<usize>,
    pub closed: bool,
}

impl Polyline {
    /// Equality up to rotation for cycles, exact equality for open chains.
    pub fn same_as(&self, other: &Polyline) -> bool {
        if self.closed != other.closed || self.vertices.len() != other.vertices.len() {
            return false;
        }
        if !self.closed {
            return self.vertices == other.vertices;
        }
        let n = self.vertices.len();
        if n == 0 {
            return true;
        }
        let Some(shift) = other.vertices.iter().position(|&v| v == self.vertices[0]) else {
            return false;
        };
        (0..n).all(|k| self.vertices[k] == other.vertices[(k + shift) % n])
    }
}

/// A vertex or edge one-ring: its vertex set (centre included), face set and
/// the ordered link polyline bounding the patch away from the centre.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub center: RingCenter,
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
    pub boundary: Polyline,
}

/// Chains directed link edges into one polyline. Returns `None` unless the
/// edges form exactly one simple cycle or one simple open chain.
pub fn chain_link(edges: &[(usize, usize)]) -> Option<Polyline> {
    if edges.is_empty() {
        return None;
    }
    let mut next: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
    let mut has_incoming: HashMap<usize, bool> = HashMap::with_capacity(edges.len());
    for &(a, b) in edges {
        if next.insert(a, b).is_some() {
            return None;
        }
        if has_incoming.insert(b, true) == Some(true) {
            return None;
        }
        has_incoming.entry(a).or_insert(false);
    }
    let mut heads: Vec<usize> = has_incoming
        .iter()
        .filter(|(_, &inc)| !inc)
        .map(|(&v, _)| v)
        .collect();
    heads.sort_unstable();
    let (start, closed) = match heads.len() {
        0 => (edges[0].0, true),
        1 => (heads[0], false),
        _ => return None,
    };
    let mut vertices = vec![start];
    let mut v = start;
    while let Some(&w) = next.get(&v) {
        if w == start {
            break;
        }
        vertices.push(w);
        v = w;
        if vertices.len() > edges.len() + 1 {
            return None;
        }
    }
    let expected = if closed { edges.len() } else { edges.len() + 1 };
    if vertices.len() != expected {
        return None;
    }
    Some(Polyline { vertices, closed })
}

impl SurfaceMesh {
    /// Vertex `k`, its one-ring neighbours, incident faces and ordered link.
    pub fn vertex_ring(&self, k: usize) -> Result<Neighborhood, MeshError> {
        if k >= self.vertex_count() {
            return Err(MeshError::VertexOutOfRange(k));
        }
        let star = self.vertex_faces(k);
        if star.is_empty() {
            return Err(MeshError::IsolatedVertex(k));
        }
        let link: Vec<(usize, usize)> = star
            .iter()
            .map(|&f| {
                let face = self.faces()[f];
                let c = self.corner_of(f, k);
                (face[(c + 1) % 3], face[(c + 2) % 3])
            })
            .collect();
        let boundary = chain_link(&link).ok_or(MeshError::NonManifoldVertex(k))?;
        let mut vertices = self.neighbors(k);
        vertices.push(k);
        vertices.sort_unstable();
        let mut faces = star.to_vec();
        faces.sort_unstable();
        Ok(Neighborhood { center: RingCenter::Vertex(k), vertices, faces, boundary })
    }

    /// Union of the one-rings of `i` and `j` with the link of the edge star.
    pub fn edge_ring(&self, i: usize, j: usize) -> Result<Neighborhood, MeshError> {
        if i >= self.vertex_count() || j >= self.vertex_count() || self.edge_face_count(i, j) == 0 {
            return Err(MeshError::NotAnEdge(i, j));
        }
        let mut faces: Vec<usize> = self.vertex_faces(i).iter().chain(self.vertex_faces(j)).copied().collect();
        faces.sort_unstable();
        faces.dedup();
        let mut link = Vec::new();
        for (center, other) in [(i, j), (j, i)] {
            for &f in self.vertex_faces(center) {
                let face = self.faces()[f];
                let c = self.corner_of(f, center);
                let (a, b) = (face[(c + 1) % 3], face[(c + 2) % 3]);
                if a != other && b != other {
                    link.push((a, b));
                }
            }
        }
        let boundary = chain_link(&link).ok_or(MeshError::NotAnEdge(i, j))?;
        let mut vertices: Vec<usize> = faces.iter().flat_map(|&f| self.faces()[f]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        Ok(Neighborhood { center: RingCenter::Edge(i, j), vertices, faces, boundary })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{shapes, Vec3};

    #[test]
    fn icosahedron_vertex_ring() {
        let m = shapes::icosahedron();
        let n = m.vertex_ring(0).unwrap();
        assert_eq!(n.vertices.len(), 6);
        assert_eq!(n.faces.len(), 5);
        assert!(n.boundary.closed);
        assert_eq!(n.boundary.vertices.len(), 5);
    }

    #[test]
    fn square_boundary_vertex_ring() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let m = SurfaceMesh::new(p, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let n = m.vertex_ring(0).unwrap();
        assert_eq!(n.vertices, vec![0, 1, 2, 3]);
        assert_eq!(n.faces.len(), 2);
        assert_eq!(n.boundary, Polyline { vertices: vec![1, 2, 3], closed: false });

        let e = m.edge_ring(0, 1).unwrap();
        assert_eq!(e.vertices.len(), 4);
        assert_eq!(e.faces.len(), 2);
        assert!(!e.boundary.closed);
    }

    #[test]
    fn single_triangle_ring() {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let m = SurfaceMesh::new(p, vec![[0, 1, 2]]).unwrap();
        let n = m.vertex_ring(1).unwrap();
        assert_eq!(n.vertices.len(), 3);
        assert_eq!(n.faces, vec![0]);
    }

    #[test]
    fn tetrahedron_edge_ring_is_everything() {
        let m = shapes::tetrahedron();
        for [a, b] in m.edges().to_vec() {
            let n = m.edge_ring(a, b).unwrap();
            assert_eq!(n.vertices.len(), 4);
            assert_eq!(n.faces.len(), 4);
        }
    }

    #[test]
    fn valence_six_grid_edge_ring() {
        // enumerate by brute force: union of both one-rings
        let m = shapes::grid(6, 6, 1.0, 1.0);
        let (i, j) = m
            .edges()
            .iter()
            .map(|e| (e[0], e[1]))
            .find(|&(a, b)| {
                !m.is_boundary_vertex(a)
                    && !m.is_boundary_vertex(b)
                    && m.neighbors(a).len() == 6
                    && m.neighbors(b).len() == 6
            })
            .unwrap();
        let mut union: Vec<usize> = m.neighbors(i).into_iter().chain(m.neighbors(j)).collect();
        union.sort_unstable();
        union.dedup();
        let n = m.edge_ring(i, j).unwrap();
        assert_eq!(n.vertices, union);
        assert_eq!(n.vertices.len(), 10);
        assert_eq!(n.faces.len(), 10);
        assert!(n.boundary.closed);
        assert_eq!(n.boundary.vertices.len(), 8);
    }

    #[test]
    fn not_an_edge() {
        let m = shapes::icosahedron();
        let far = (0..12).find(|&v| v != 0 && !m.neighbors(0).contains(&v)).unwrap();
        assert!(matches!(m.edge_ring(0, far), Err(MeshError::NotAnEdge(..))));
    }

    #[test]
    fn cyclic_polyline_equality() {
        let a = Polyline { vertices: vec![1, 2, 3, 4], closed: true };
        let b = Polyline { vertices: vec![3, 4, 1, 2], closed: true };
        let c = Polyline { vertices: vec![4, 3, 2, 1], closed: true };
        assert!(a.same_as(&b));
        assert!(!a.same_as(&c));
    }
}
