//! Finite-element operators on triangle meshes and the demo problems built
//! from them.

use crate::error::{MeshError, SolverError};
use crate::mesh::{SurfaceMesh, Vec3};
use crate::sparse::CsrMatrix;

/// Cotangent Laplacian with the positive semi-definite sign convention:
/// `L_ij = -(cot a + cot b) / 2` off the diagonal, rows summing to zero.
pub fn cotan_laplacian(mesh: &SurfaceMesh) -> Result<CsrMatrix, MeshError> {
    let mut t = Vec::with_capacity(mesh.face_count() * 12);
    for (f, &face) in mesh.faces().iter().enumerate() {
        let p = face.map(|v| mesh.position(v));
        for k in 0..3 {
            // angle at corner k, opposite edge (k+1, k+2)
            let (i, j) = (face[(k + 1) % 3], face[(k + 2) % 3]);
            let e0 = p[(k + 1) % 3] - p[k];
            let e1 = p[(k + 2) % 3] - p[k];
            let cross = e0.cross(&e1).norm();
            if cross <= f64::MIN_POSITIVE * 1e10 || !cross.is_finite() {
                return Err(MeshError::DegenerateFace { face: f, area: 0.5 * cross });
            }
            let w = 0.5 * e0.dot(&e1) / cross;
            t.push((i, j, -w));
            t.push((j, i, -w));
            t.push((i, i, w));
            t.push((j, j, w));
        }
    }
    let n = mesh.vertex_count();
    Ok(CsrMatrix::from_triplets(n, n, &t).expect("indices validated by mesh"))
}

/// Per-vertex lumped areas: a third of the area of every incident face.
pub fn lumped_areas(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(f) / 3.0;
        for &v in face {
            m[v] += a;
        }
    }
    m
}

/// Diagonal lumped mass matrix.
pub fn lumped_mass(mesh: &SurfaceMesh) -> CsrMatrix {
    CsrMatrix::from_diagonal(&lumped_areas(mesh))
}

/// Mixed-FEM Bilaplacian `L M⁻¹ L` with lumped mass.
pub fn bilaplacian(mesh: &SurfaceMesh) -> Result<CsrMatrix, SolverError> {
    let l = cotan_laplacian(mesh)?;
    let m = lumped_areas(mesh);
    bilaplacian_from(&l, &m)
}

/// `Lᵀ diag(m)⁻¹ L` from precomputed parts.
pub fn bilaplacian_from(l: &CsrMatrix, mass: &[f64]) -> Result<CsrMatrix, SolverError> {
    let inv = mass
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(1.0 / v)
            } else {
                Err(SolverError::InvalidProblem(format!("zero mass at vertex {i}")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scaled = l.scale_rows(&inv)?;
    let mut q = l.transpose().matmul(&scaled)?;
    q.symmetrize_within(crate::sparse::SYMMETRY_TOL);
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Energy {
    Dirichlet,
    Bilaplacian,
}

impl std::fmt::Display for Energy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Energy::Dirichlet => "dirichlet",
            Energy::Bilaplacian => "bilaplacian",
        })
    }
}

impl std::str::FromStr for Energy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Energy::Dirichlet),
            "bilaplacian" => Ok(Energy::Bilaplacian),
            other => Err(format!("unknown energy {other:?}")),
        }
    }
}

/// Known vertex values removed from the system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Constraints {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        Constraints { indices, values }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        if self.indices.len() != self.values.len() {
            return Err(SolverError::DimensionMismatch(format!(
                "{} constraint indices but {} values",
                self.indices.len(),
                self.values.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &self.indices {
            if i >= n {
                return Err(SolverError::InvalidProblem(format!("constraint index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(SolverError::InvalidProblem(format!("constraint index {i} repeated")));
            }
        }
        Ok(())
    }
}

/// Data-smoothing problem: minimise `α E(x) + (1 - α) ‖x - f‖²_M`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub energy: Energy,
    pub alpha: f64,
    pub f: Vec<f64>,
    pub constraints: Option<Constraints>,
}

impl ProblemSpec {
    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SolverError::InvalidProblem(format!("alpha {} outside [0, 1)", self.alpha)));
        }
        let constrained = self.constraints.as_ref().is_some_and(|c| !c.is_empty());
        if self.alpha == 1.0 && !constrained {
            return Err(SolverError::InvalidProblem(
                "alpha = 1 without constraints leaves a singular system".into(),
            ));
        }
        if self.f.len() != n {
            return Err(SolverError::DimensionMismatch(format!(
                "input function has {} values for {n} vertices",
                self.f.len()
            )));
        }
        if let Some(c) = &self.constraints {
            c.validate(n)?;
        }
        Ok(())
    }
}

/// The smoothness operator selected by `energy`.
pub fn energy_matrix(mesh: &SurfaceMesh, energy: Energy) -> Result<CsrMatrix, SolverError> {
    Ok(match energy {
        Energy::Dirichlet => cotan_laplacian(mesh)?,
        Energy::Bilaplacian => bilaplacian(mesh)?,
    })
}

/// `A = α Q + (1 - α) M`, `b = (1 - α) M f`.
pub fn assemble_smoothing(mesh: &SurfaceMesh, spec: &ProblemSpec) -> Result<(CsrMatrix, Vec<f64>), SolverError> {
    spec.validate(mesh.vertex_count())?;
    let q = energy_matrix(mesh, spec.energy)?;
    let m = lumped_areas(mesh);
    smoothing_system(&q, &m, spec.alpha, &spec.f)
}

/// Smoothing system from precomputed `Q` and lumped mass.
pub fn smoothing_system(q: &CsrMatrix, mass: &[f64], alpha: f64, f: &[f64]) -> Result<(CsrMatrix, Vec<f64>), SolverError> {
    let m = CsrMatrix::from_diagonal(mass);
    let a = q.axpby(alpha, &m, 1.0 - alpha)?.prune(0.0);
    let b = mass.iter().zip(f).map(|(mi, fi)| (1.0 - alpha) * mi * fi).collect();
    Ok((a, b))
}

/// Poisson system `L x = M f`.
pub fn assemble_poisson(mesh: &SurfaceMesh, f: &[f64]) -> Result<(CsrMatrix, Vec<f64>), SolverError> {
    if f.len() != mesh.vertex_count() {
        return Err(SolverError::DimensionMismatch(format!(
            "right-hand side has {} values for {} vertices",
            f.len(),
            mesh.vertex_count()
        )));
    }
    let l = cotan_laplacian(mesh)?;
    let b = lumped_areas(mesh).iter().zip(f).map(|(m, v)| m * v).collect();
    Ok((l, b))
}

/// One implicit conformalized mean-curvature-flow step: solves
/// `(M_t + δ L₀) X = M_t X_t` per coordinate. `solve` receives the system
/// matrix and the three right-hand sides.
pub fn mcf_step<S>(mesh: &SurfaceMesh, l0: &CsrMatrix, delta: f64, mut solve: S) -> Result<SurfaceMesh, SolverError>
where
    S: FnMut(&CsrMatrix, &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolverError>,
{
    if delta < 0.0 || !delta.is_finite() {
        return Err(SolverError::InvalidProblem(format!("time step {delta} must be non-negative")));
    }
    if l0.nrows() != mesh.vertex_count() {
        return Err(SolverError::DimensionMismatch("Laplacian does not match mesh".into()));
    }
    if delta == 0.0 {
        return Ok(mesh.clone());
    }
    let m = lumped_areas(mesh);
    let (a, _) = mcf_system(l0, &m, delta)?;
    let rhs: Vec<Vec<f64>> = (0..3)
        .map(|d| mesh.positions().iter().zip(&m).map(|(p, mi)| mi * p[d]).collect())
        .collect();
    let xs = solve(&a, &rhs)?;
    if xs.len() != 3 || xs.iter().any(|x| x.len() != mesh.vertex_count()) {
        return Err(SolverError::DimensionMismatch("flow solver returned wrong shape".into()));
    }
    let positions: Vec<Vec3> = (0..mesh.vertex_count()).map(|v| Vec3::new(xs[0][v], xs[1][v], xs[2][v])).collect();
    Ok(mesh.with_positions(positions)?)
}

/// Flow system matrix `M + δ L₀` for lumped masses `mass`.
pub fn mcf_system(l0: &CsrMatrix, mass: &[f64], delta: f64) -> Result<(CsrMatrix, CsrMatrix), SolverError> {
    let m = CsrMatrix::from_diagonal(mass);
    Ok((m.axpby(1.0, l0, delta)?, m))
}

/// Least-squares sphere fit; returns (centre, radius, max |‖p - c‖ - r| / r).
pub fn sphere_fit(points: &[Vec3]) -> (Vec3, f64, f64) {
    // |p|² = 2 c·p + (r² - |c|²): linear in (c, d)
    let mut ata = nalgebra::Matrix4::<f64>::zeros();
    let mut atb = nalgebra::Vector4::<f64>::zeros();
    for p in points {
        let row = nalgebra::Vector4::new(2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0);
        ata += row * row.transpose();
        atb += row * p.norm_squared();
    }
    let sol = ata.lu().solve(&atb).unwrap_or_else(nalgebra::Vector4::zeros);
    let c = Vec3::new(sol[0], sol[1], sol[2]);
    let r = (sol[3] + c.norm_squared()).max(0.0).sqrt();
    let dev = points.iter().map(|p| ((p - c).norm() - r).abs()).fold(0.0, f64::max);
    (c, r, if r > 0.0 { dev / r } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::sparse::{dense_factor, dense_solve};
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn equilateral() -> SurfaceMesh {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0)];
        SurfaceMesh::new(p, vec![[0, 1, 2]]).unwrap()
    }

    fn dense_solver(a: &CsrMatrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolverError> {
        let f = dense_factor(a)?;
        rhs.iter().map(|b| f.solve(b).map_err(SolverError::from)).collect()
    }

    #[test]
    fn equilateral_weights() {
        let l = cotan_laplacian(&equilateral()).unwrap();
        let expected = -(60f64.to_radians().tan().recip()) / 2.0;
        assert!((l.get(0, 1) - expected).abs() < 1e-15);
        assert!((expected + 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((l.get(1, 2) + 0.288675).abs() < 1e-6);
    }

    #[test]
    fn right_angle_diagonal_weight_vanishes() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let m = SurfaceMesh::new(p, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let l = cotan_laplacian(&m).unwrap();
        assert!(l.get(0, 2).abs() < 1e-15);
    }

    #[test]
    fn rows_sum_to_zero_and_symmetric() {
        for m in [shapes::blob(2, 1), shapes::disk(5), shapes::torus(12, 8, 1.0, 0.3)] {
            let l = cotan_laplacian(&m).unwrap();
            let ones = vec![1.0; m.vertex_count()];
            assert!(l.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
            assert!(l.is_symmetric(1e-14));
        }
    }

    #[test]
    fn laplacian_is_psd() {
        let m = shapes::perturb(&shapes::icosphere(2), 0.05, 3);
        let l = cotan_laplacian(&m).unwrap().to_dense();
        let eig = SymmetricEigen::new(l);
        assert!(eig.eigenvalues.min() >= -1e-10);
    }

    #[test]
    fn mass_conserves_area() {
        let m = equilateral().with_positions(vec![Vec3::zeros(), Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0)]).unwrap();
        assert_eq!(lumped_areas(&m), vec![1.0, 1.0, 1.0]);
        let ico = shapes::icosahedron();
        let trace: f64 = lumped_areas(&ico).iter().sum();
        assert!((trace - ico.total_area()).abs() < 1e-12);
        assert!(lumped_areas(&shapes::blob(2, 4)).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn bilaplacian_properties() {
        let m = shapes::grid(7, 6, 1.0, 1.0);
        let q = bilaplacian(&m).unwrap();
        let ones = vec![1.0; m.vertex_count()];
        assert!(q.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-10));
        assert!(q.is_symmetric(1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let qx = q.spmv(&x).unwrap();
            assert!(x.iter().zip(&qx).map(|(a, b)| a * b).sum::<f64>() >= -1e-12);
        }
        // symbolic LᵀL pattern
        let l = cotan_laplacian(&m).unwrap();
        let n = m.vertex_count();
        for r in 0..n {
            let mut pattern: Vec<usize> = l
                .row_iter(r)
                .flat_map(|(k, _)| l.row_iter(k).map(|(c, _)| c).collect::<Vec<_>>())
                .collect();
            pattern.sort_unstable();
            pattern.dedup();
            let (cols, _) = q.row(r);
            assert_eq!(cols, &pattern[..], "row {r}");
        }
    }

    #[test]
    fn smoothing_alpha_zero_returns_input() {
        let m = shapes::blob(2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f: Vec<f64> = (0..m.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = ProblemSpec { energy: Energy::Dirichlet, alpha: 0.0, f: f.clone(), constraints: None };
        let (a, b) = assemble_smoothing(&m, &spec).unwrap();
        assert_eq!(a, lumped_mass(&m));
        let x = dense_solve(&a, &b).unwrap();
        assert!(x.iter().zip(&f).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn constant_is_preserved() {
        let m = shapes::disk(4);
        for energy in [Energy::Dirichlet, Energy::Bilaplacian] {
            for alpha in [0.1, 0.5, 0.99] {
                let spec = ProblemSpec { energy, alpha, f: vec![2.5; m.vertex_count()], constraints: None };
                let (a, b) = assemble_smoothing(&m, &spec).unwrap();
                let x = dense_solve(&a, &b).unwrap();
                assert!(x.iter().all(|v| (v - 2.5).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn smoothing_solution_is_energy_stationary() {
        let m = shapes::perturb(&shapes::icosphere(1), 0.05, 9);
        let n = m.vertex_count();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alpha = 0.5;
        let q = cotan_laplacian(&m).unwrap().to_dense();
        let mass = DMatrix::from_diagonal(&DVector::from_vec(lumped_areas(&m)));
        let fv = DVector::from_vec(f.clone());
        let energy = |x: &DVector<f64>| {
            let d = x - &fv;
            alpha * (x.transpose() * &q * x)[0] + (1.0 - alpha) * (d.transpose() * &mass * &d)[0]
        };
        let spec = ProblemSpec { energy: Energy::Dirichlet, alpha, f, constraints: None };
        let (a, b) = assemble_smoothing(&m, &spec).unwrap();
        let x = DVector::from_vec(dense_solve(&a, &b).unwrap());
        let h = 1e-5;
        let fd_grad = |x: &DVector<f64>| {
            DVector::from_fn(n, |i, _| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                (energy(&xp) - energy(&xm)) / (2.0 * h)
            })
        };
        let g0 = fd_grad(&DVector::zeros(n)).norm();
        assert!(fd_grad(&x).norm() <= 1e-6 * g0);
        // and the assembled system is half the analytic gradient
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let analytic = 2.0 * (a.to_dense() * &y - DVector::from_vec(b));
        assert!((fd_grad(&y) - &analytic).norm() <= 1e-6 * analytic.norm());
    }

    #[test]
    fn smoothing_system_is_spd() {
        let m = shapes::disk(6);
        assert!(m.vertex_count() <= 500);
        for energy in [Energy::Dirichlet, Energy::Bilaplacian] {
            for alpha in [0.0, 0.3, 0.9, 0.999] {
                let spec = ProblemSpec { energy, alpha, f: vec![0.0; m.vertex_count()], constraints: None };
                let (a, _) = assemble_smoothing(&m, &spec).unwrap();
                assert!(dense_factor(&a).unwrap().is_cholesky());
            }
        }
    }

    #[test]
    fn linear_precision_at_interior_vertices() {
        let m = shapes::disk(6);
        let f: Vec<f64> = m.positions().iter().map(|p| 0.3 * p.x - 1.7 * p.y + 0.2).collect();
        let lf = cotan_laplacian(&m).unwrap().spmv(&f).unwrap();
        for v in 0..m.vertex_count() {
            if !m.is_boundary_vertex(v) {
                assert!(lf[v].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_one_without_constraints_rejected() {
        let m = shapes::disk(2);
        let spec = ProblemSpec { energy: Energy::Dirichlet, alpha: 1.0, f: vec![0.0; m.vertex_count()], constraints: None };
        assert!(assemble_smoothing(&m, &spec).is_err());
        let bad = ProblemSpec { alpha: -0.1, ..spec };
        assert!(assemble_smoothing(&m, &bad).is_err());
    }

    #[test]
    fn flow_step_zero_is_identity() {
        let m = shapes::icosphere(2);
        let l0 = cotan_laplacian(&m).unwrap();
        let out = mcf_step(&m, &l0, 0.0, dense_solver).unwrap();
        assert_eq!(out.positions(), m.positions());
    }

    #[test]
    fn flow_rounds_a_bumpy_sphere() {
        let mut m = shapes::perturb(&shapes::icosphere(3), 0.03, 17);
        let l0 = cotan_laplacian(&m).unwrap();
        let mut prev = sphere_fit(m.positions()).2;
        for _ in 0..4 {
            let next = mcf_step(&m, &l0, 1e-3, dense_solver).unwrap();
            // new positions solve the system built from the previous step
            let mass = lumped_areas(&m);
            let (a, _) = mcf_system(&l0, &mass, 1e-3).unwrap();
            for d in 0..3 {
                let x: Vec<f64> = next.positions().iter().map(|p| p[d]).collect();
                let b: Vec<f64> = m.positions().iter().zip(&mass).map(|(p, w)| w * p[d]).collect();
                let ax = a.spmv(&x).unwrap();
                let r = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                assert!(r <= 1e-10 * b.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
            let dev = sphere_fit(next.positions()).2;
            assert!(dev <= prev + 1e-12, "{dev} > {prev}");
            prev = dev;
            m = next;
        }
    }

    #[test]
    fn sphere_fit_exact_on_icosphere() {
        let (c, r, dev) = sphere_fit(shapes::icosphere(2).positions());
        assert!(c.norm() < 1e-12 && (r - 1.0).abs() < 1e-12 && dev < 1e-12);
    }
}
