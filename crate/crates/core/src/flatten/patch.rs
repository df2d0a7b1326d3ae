//! The before/after patch pair of one edge collapse in local numbering.

use std::collections::HashMap;

use crate::error::FlattenError;
use crate::mesh::{chain_link, SurfaceMesh, Vec3};

/// Which collapse endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Endpoint {
    I,
    J,
}

/// Topological situation of the collapsed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseKind {
    /// Both endpoints interior.
    Interior,
    /// Exactly one endpoint lies on the mesh boundary.
    OneBoundary(Endpoint),
    /// The edge itself is a boundary edge; `p` and `q` are the local indices
    /// of the boundary neighbours adjacent to `i` and `j` respectively.
    BoundaryEdge { p: usize, q: usize },
}

/// Edge star before a collapse and vertex star after it, sharing the link.
///
/// Local vertices `0..m` are the link vertices in polyline order, `m` is
/// endpoint `i`, `m + 1` endpoint `j` and `m + 2` the surviving vertex `k`.
#[derive(Debug, Clone)]
pub struct PatchPair {
    /// Global ids of the link vertices.
    pub link: Vec<usize>,
    pub link_closed: bool,
    /// Global ids of `i` and `j`.
    pub endpoints: [usize; 2],
    /// Rest positions per local vertex (`k` at its placement).
    pub positions: Vec<Vec3>,
    pub before: Vec<[usize; 3]>,
    pub after: Vec<[usize; 3]>,
    pub kind: CollapseKind,
}

impl PatchPair {
    /// Builds the pair from the star of edge `(i, j)`: every face incident to
    /// `i` or `j`, given with global vertex ids.
    pub fn from_star(
        i: usize,
        j: usize,
        star: &[[usize; 3]],
        position: impl Fn(usize) -> Vec3,
        placement: Vec3,
    ) -> Result<PatchPair, FlattenError> {
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for f in star {
            for c in 0..3 {
                let (a, b) = (f[c], f[(c + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let count = |a: usize, b: usize| edge_count.get(&(a.min(b), a.max(b))).copied().unwrap_or(0);
        let boundary_vertex = |v: usize| edge_count.iter().any(|(&(a, b), &n)| n == 1 && (a == v || b == v));
        let ij = count(i, j);
        if ij == 0 {
            return Err(FlattenError::Malformed(format!("({i}, {j}) is not an edge of the star")));
        }

        let mut link_edges = Vec::new();
        for &f in star {
            for (center, other) in [(i, j), (j, i)] {
                if let Some(c) = f.iter().position(|&v| v == center) {
                    let (a, b) = (f[(c + 1) % 3], f[(c + 2) % 3]);
                    if a != other && b != other {
                        link_edges.push((a, b));
                    }
                }
            }
        }
        let chain = chain_link(&link_edges).ok_or_else(|| FlattenError::Malformed("edge star link is not a simple polyline".into()))?;

        let (bi, bj) = (boundary_vertex(i), boundary_vertex(j));
        let m = chain.vertices.len();
        let local: HashMap<usize, usize> = chain.vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let kind = if ij == 1 {
            let first = chain.vertices[0];
            let last = chain.vertices[m - 1];
            if chain.closed || m < 2 {
                return Err(FlattenError::Malformed("boundary edge with a closed link".into()));
            }
            let (p, q) = if count(last, i) == 1 && count(first, j) == 1 {
                (last, first)
            } else if count(first, i) == 1 && count(last, j) == 1 {
                (first, last)
            } else {
                return Err(FlattenError::Malformed("cannot locate boundary neighbours".into()));
            };
            if p == q {
                return Err(FlattenError::Malformed("boundary loop too short to collapse".into()));
            }
            CollapseKind::BoundaryEdge { p: local[&p], q: local[&q] }
        } else {
            match (bi, bj) {
                (false, false) => CollapseKind::Interior,
                (true, false) => CollapseKind::OneBoundary(Endpoint::I),
                (false, true) => CollapseKind::OneBoundary(Endpoint::J),
                (true, true) => {
                    return Err(FlattenError::Malformed("interior edge joining two boundary vertices".into()));
                }
            }
        };
        if matches!(kind, CollapseKind::Interior) != chain.closed {
            return Err(FlattenError::Malformed("link shape does not match edge kind".into()));
        }

        let li = m;
        let lj = m + 1;
        let lk = m + 2;
        let to_local = |v: usize, merged: bool| -> usize {
            if v == i {
                if merged {
                    lk
                } else {
                    li
                }
            } else if v == j {
                if merged {
                    lk
                } else {
                    lj
                }
            } else {
                local[&v]
            }
        };
        let before = star.iter().map(|f| f.map(|v| to_local(v, false))).collect();
        let after = star
            .iter()
            .filter(|f| !(f.contains(&i) && f.contains(&j)))
            .map(|f| f.map(|v| to_local(v, true)))
            .collect();
        let mut positions: Vec<Vec3> = chain.vertices.iter().map(|&v| position(v)).collect();
        positions.extend([position(i), position(j), placement]);
        Ok(PatchPair { link: chain.vertices, link_closed: chain.closed, endpoints: [i, j], positions, before, after, kind })
    }

    /// Pair for edge `(i, j)` of an immutable mesh.
    pub fn from_mesh(mesh: &SurfaceMesh, i: usize, j: usize, placement: Vec3) -> Result<PatchPair, FlattenError> {
        let ring = mesh.edge_ring(i, j).map_err(|e| FlattenError::Malformed(e.to_string()))?;
        let star: Vec<[usize; 3]> = ring.faces.iter().map(|&f| mesh.faces()[f]).collect();
        PatchPair::from_star(i, j, &star, |v| mesh.position(v), placement)
    }

    pub fn link_len(&self) -> usize {
        self.link.len()
    }

    pub fn local_i(&self) -> usize {
        self.link.len()
    }

    pub fn local_j(&self) -> usize {
        self.link.len() + 1
    }

    pub fn local_k(&self) -> usize {
        self.link.len() + 2
    }

    pub fn local_endpoint(&self, e: Endpoint) -> usize {
        match e {
            Endpoint::I => self.local_i(),
            Endpoint::J => self.local_j(),
        }
    }

    /// Global id for a local vertex; `kept` names the id `k` reuses.
    pub fn global_id(&self, local: usize, kept: Endpoint) -> usize {
        let m = self.link.len();
        match local {
            l if l < m => self.link[l],
            l if l == m => self.endpoints[0],
            l if l == m + 1 => self.endpoints[1],
            _ => match kept {
                Endpoint::I => self.endpoints[0],
                Endpoint::J => self.endpoints[1],
            },
        }
    }

    /// Ordered patch boundary of the before patch (local vertices).
    pub fn boundary_before(&self) -> Vec<usize> {
        let mut cycle: Vec<usize> = (0..self.link.len()).collect();
        match self.kind {
            CollapseKind::Interior => {}
            CollapseKind::OneBoundary(e) => cycle.push(self.local_endpoint(e)),
            CollapseKind::BoundaryEdge { p, .. } => {
                if *cycle.last().expect("non-empty link") == p {
                    cycle.extend([self.local_i(), self.local_j()]);
                } else {
                    cycle.extend([self.local_j(), self.local_i()]);
                }
            }
        }
        cycle
    }

    /// Ordered patch boundary of the after patch (local vertices).
    pub fn boundary_after(&self) -> Vec<usize> {
        let mut cycle: Vec<usize> = (0..self.link.len()).collect();
        if !matches!(self.kind, CollapseKind::Interior) {
            cycle.push(self.local_k());
        }
        cycle
    }
}
