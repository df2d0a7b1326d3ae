//! Plane quadrics for error-driven collapse placement.

use nalgebra::{Matrix3, Matrix4, Vector4};

use crate::mesh::{SurfaceMesh, Vec3};

/// Weight of the boundary-constraint planes relative to face planes.
pub const BOUNDARY_PENALTY: f64 = 1e3;

/// Relative determinant below which the quadric minimizer is not trusted.
pub const SINGULAR_RATIO: f64 = 1e-10;

/// Symmetric 4x4 quadric `v̄ᵀ Q v̄` over homogeneous points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric(pub Matrix4<f64>);

impl Default for Quadric {
    fn default() -> Self {
        Quadric(Matrix4::zeros())
    }
}

impl std::ops::Add for Quadric {
    type Output = Quadric;

    fn add(self, rhs: Quadric) -> Quadric {
        Quadric(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Quadric {
    fn add_assign(&mut self, rhs: Quadric) {
        self.0 += rhs.0;
    }
}

impl Quadric {
    /// Squared distance to the plane through `point` with unit `normal`,
    /// scaled by `weight`.
    pub fn plane(normal: Vec3, point: Vec3, weight: f64) -> Quadric {
        let p = Vector4::new(normal.x, normal.y, normal.z, -normal.dot(&point));
        Quadric(p * p.transpose() * weight)
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        let v = Vector4::new(x.x, x.y, x.z, 1.0);
        (v.transpose() * self.0 * v)[(0, 0)]
    }

    /// Minimizer of the quadric, if its 3x3 block is safely invertible.
    pub fn minimizer(&self) -> Option<Vec3> {
        let a: Matrix3<f64> = self.0.fixed_view::<3, 3>(0, 0).into_owned();
        let b = Vec3::new(self.0[(0, 3)], self.0[(1, 3)], self.0[(2, 3)]);
        let scale = a.norm();
        if scale == 0.0 || a.determinant().abs() < SINGULAR_RATIO * scale.powi(3) {
            return None;
        }
        let x = a.try_inverse()? * (-b);
        x.iter().all(|c| c.is_finite()).then_some(x)
    }
}

/// Area-weighted face-plane quadrics per vertex, plus penalty planes
/// perpendicular to the surface along every boundary edge.
pub fn vertex_quadrics(mesh: &SurfaceMesh) -> Vec<Quadric> {
    let mut q = vec![Quadric::default(); mesh.vertex_count()];
    for (f, tri) in mesh.faces().iter().enumerate() {
        let n = mesh.face_normal(f).normalize();
        let area = mesh.face_area(f);
        let fq = Quadric::plane(n, mesh.position(tri[0]), area);
        for &v in tri {
            q[v] += fq;
        }
        for c in 0..3 {
            let (a, b) = (tri[c], tri[(c + 1) % 3]);
            if mesh.is_boundary_edge(a, b) {
                let e = mesh.position(b) - mesh.position(a);
                let m = e.cross(&n);
                if m.norm() > 0.0 {
                    let bq = Quadric::plane(m.normalize(), mesh.position(a), BOUNDARY_PENALTY * area);
                    q[a] += bq;
                    q[b] += bq;
                }
            }
        }
    }
    q
}

/// Collapse cost and placement for edge `(pi, pj)` under quadric `q`: the
/// quadric minimizer, or the best of midpoint and endpoints when the system
/// is singular.
pub fn qslim_cost(q: &Quadric, pi: Vec3, pj: Vec3) -> (f64, Vec3) {
    let x = q.minimizer().unwrap_or_else(|| {
        let mid = (pi + pj) / 2.0;
        [mid, pi, pj].into_iter().min_by(|a, b| q.eval(*a).total_cmp(&q.eval(*b))).expect("three candidates")
    });
    (q.eval(x).max(0.0), x)
}
