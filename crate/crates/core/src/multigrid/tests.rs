use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fem::{assemble_poisson, bilaplacian, cotan_laplacian, lumped_areas, lumped_mass, smoothing_system};
use crate::mesh::{shapes, SurfaceMesh};
use crate::selfparam::{build_hierarchy, HierarchyConfig};
use crate::sparse::{dense_solve, gauss_seidel, triple_product_count, CsrMatrix, Ordering};

fn hierarchy(mesh: &SurfaceMesh, min_vertices: usize) -> Vec<CsrMatrix> {
    build_hierarchy(mesh, &HierarchyConfig { min_vertices, ..HierarchyConfig::default() }).unwrap().prolongations
}

fn smooth_fn(mesh: &SurfaceMesh) -> Vec<f64> {
    mesh.positions().iter().map(|p| (3.0 * p.x).sin() + p.y * p.z).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

/// Poisson system with vertex 0 pinned to zero.
fn pinned_poisson(mesh: &SurfaceMesh, ps: &[CsrMatrix], config: &SolverConfig) -> (CsrMatrix, Vec<f64>, ReducedSystem) {
    let (l, b) = assemble_poisson(mesh, &smooth_fn(mesh)).unwrap();
    let r = reduce_dirichlet(&l, &b, &[0], &[0.0], ps, config).unwrap();
    (l, b, r)
}

fn dense_constrained(a: &CsrMatrix, b: &[f64], idx: &[usize], vals: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut known = vec![None; n];
    for (&i, &v) in idx.iter().zip(vals) {
        known[i] = Some(v);
    }
    let unknown: Vec<usize> = (0..n).filter(|&i| known[i].is_none()).collect();
    let d = a.to_dense();
    let m = DMatrix::from_fn(unknown.len(), unknown.len(), |r, c| d[(unknown[r], unknown[c])]);
    let rhs: Vec<f64> = unknown
        .iter()
        .map(|&i| b[i] - (0..n).filter_map(|j| known[j].map(|v| d[(i, j)] * v)).sum::<f64>())
        .collect();
    let xu = dense_solve(&CsrMatrix::from_dense(&m), &rhs).unwrap();
    let mut x: Vec<f64> = known.iter().map(|k| k.unwrap_or(0.0)).collect();
    for (k, &i) in unknown.iter().enumerate() {
        x[i] = xu[k];
    }
    x
}

#[test]
fn empty_hierarchy_is_a_direct_solve() {
    let m = shapes::icosphere(1);
    let (a, b) = smoothing_system(&cotan_laplacian(&m).unwrap(), &lumped_areas(&m), 0.5, &smooth_fn(&m)).unwrap();
    let stack = LevelStack::new(a.clone(), &[], &SolverConfig::default()).unwrap();
    assert_eq!(stack.depth(), 0);
    let mut x = vec![0.0; b.len()];
    stack.vcycle(0, &mut x, &b, &SolverConfig::default()).unwrap();
    assert_eq!(x, dense_solve(&a, &b).unwrap());
}

#[test]
fn identity_prolongation_without_sweeps_is_exact() {
    let m = shapes::icosphere(1);
    let (a, b) = smoothing_system(&cotan_laplacian(&m).unwrap(), &lumped_areas(&m), 0.3, &smooth_fn(&m)).unwrap();
    let cfg = SolverConfig { pre_sweeps: 0, post_sweeps: 0, ..SolverConfig::default() };
    let stack = LevelStack::new(a.clone(), &[CsrMatrix::identity(a.nrows())], &cfg).unwrap();
    let mut x = vec![0.0; b.len()];
    stack.vcycle(0, &mut x, &b, &cfg).unwrap();
    assert!(rel_err(&x, &dense_solve(&a, &b).unwrap()) < 1e-12);
}

#[test]
fn coarse_matrices_match_dense_triple_products() {
    let m = shapes::blob(3, 4);
    let ps = hierarchy(&m, 40);
    let a = cotan_laplacian(&m).unwrap().axpby(1.0, &lumped_mass(&m), 1.0).unwrap();
    let stack = LevelStack::new(a, &ps, &SolverConfig::default()).unwrap();
    assert!(stack.depth() >= 2);
    for h in 0..stack.depth() {
        let p = stack.prolongations()[h].to_dense();
        let expect = p.transpose() * stack.matrix(h).to_dense() * &p;
        let got = stack.matrix(h + 1).to_dense();
        let scale = expect.abs().max();
        assert!((&got - &expect).abs().max() <= 1e-12 * scale, "level {}", h + 1);
        assert!(stack.matrix(h + 1).is_symmetric(1e-12));
    }
}

#[test]
fn zero_rhs_converges_immediately() {
    let m = shapes::icosphere(3);
    let ps = hierarchy(&m, 100);
    let (a, _) = smoothing_system(&cotan_laplacian(&m).unwrap(), &lumped_areas(&m), 0.5, &smooth_fn(&m)).unwrap();
    let stack = LevelStack::new(a, &ps, &SolverConfig::default()).unwrap();
    let (x, report) = stack.solve(&vec![0.0; m.vertex_count()], None, &SolverConfig::default()).unwrap();
    assert!(x.iter().all(|&v| v == 0.0));
    assert_eq!(report.cycles, 0);
    assert!(report.converged);
    assert_eq!(report.residuals, vec![0.0]);
}

#[test]
fn loose_tolerance_returns_the_initial_guess() {
    let m = shapes::icosphere(2);
    let (a, b) = smoothing_system(&cotan_laplacian(&m).unwrap(), &lumped_areas(&m), 0.5, &smooth_fn(&m)).unwrap();
    let stack = LevelStack::new(a, &hierarchy(&m, 20), &SolverConfig::default()).unwrap();
    let x0 = vec![0.25; b.len()];
    let cfg = SolverConfig::with_tolerance(1e6);
    let (x, report) = stack.solve(&b, Some(&x0), &cfg).unwrap();
    assert_eq!(x, x0);
    assert_eq!(report.cycles, 0);
}

#[test]
fn solve_matches_dense_oracle() {
    let cfg = SolverConfig::with_tolerance(1e-8);
    for m in [shapes::icosphere(3), shapes::blob(3, 2), shapes::perturb(&shapes::grid(30, 30, 1.0, 1.0), 0.01, 1)] {
        let ps = hierarchy(&m, 60);
        let (a, b) = smoothing_system(&cotan_laplacian(&m).unwrap(), &lumped_areas(&m), 0.7, &smooth_fn(&m)).unwrap();
        let stack = LevelStack::new(a.clone(), &ps, &cfg).unwrap();
        let (x, report) = stack.solve(&b, None, &cfg).unwrap();
        assert!(report.converged);
        assert!(rel_err(&x, &dense_solve(&a, &b).unwrap()) <= 10.0 * cfg.tolerance);
    }
}

#[test]
fn vcycle_beats_equal_work_relaxation() {
    let m = shapes::icosphere(4);
    let cfg = SolverConfig::default();
    let ps = hierarchy(&m, 500);
    let (_, _, r) = pinned_poisson(&m, &ps, &cfg);
    let stack = r.stack.as_ref().unwrap();
    let mut x = vec![0.0; r.rhs.len()];
    stack.vcycle(0, &mut x, &r.rhs, &cfg).unwrap();
    let mut y = vec![0.0; r.rhs.len()];
    gauss_seidel(stack.matrix(0), &mut y, &r.rhs, 4, Ordering::Natural).unwrap();
    let res = |v: &[f64]| {
        let mut out = vec![0.0; v.len()];
        stack.matrix(0).residual_into(v, &r.rhs, &mut out);
        norm2(&out)
    };
    assert!(res(&x) < res(&y), "{} vs {}", res(&x), res(&y));
}

#[test]
fn residuals_contract_every_cycle() {
    let m = shapes::icosphere(4);
    let cfg = SolverConfig::default();
    let (_, _, r) = pinned_poisson(&m, &hierarchy(&m, 500), &cfg);
    let (_, report) = r.solve(None, &cfg).unwrap();
    assert!(report.converged);
    assert_eq!(report.residuals.len(), report.cycles + 1);
    assert!(report.residuals.windows(2).all(|w| w[1] < w[0]), "{:?}", report.residuals);
}

#[test]
fn warm_start_saves_cycles() {
    let m = shapes::icosphere(4);
    let cfg = SolverConfig::with_tolerance(1e-8);
    let ps = hierarchy(&m, 500);
    let pre = smoothing_fast_setup(&bilaplacian(&m).unwrap(), &lumped_mass(&m), &ps, &cfg).unwrap();
    let f = smooth_fn(&m);
    let (x1, _) = smoothing_solve(&pre, 0.50, &f, None, &cfg).unwrap();
    let (_, cold) = smoothing_solve(&pre, 0.52, &f, None, &cfg).unwrap();
    let (_, warm) = smoothing_solve(&pre, 0.52, &f, Some(&x1), &cfg).unwrap();
    assert!(warm.cycles < cold.cycles, "{} vs {}", warm.cycles, cold.cycles);
}

#[test]
fn other_relaxations_converge() {
    let m = shapes::icosphere(4);
    let ps = hierarchy(&m, 500);
    for (relaxation, order) in [
        (Relaxation::DampedJacobi { omega: Relaxation::DEFAULT_JACOBI_OMEGA }, RelaxOrder::Natural),
        (Relaxation::GaussSeidel, RelaxOrder::Colored { parallel: false }),
        (Relaxation::GaussSeidel, RelaxOrder::Colored { parallel: true }),
    ] {
        let cfg = SolverConfig { relaxation, order, ..SolverConfig::default() };
        let (_, _, r) = pinned_poisson(&m, &ps, &cfg);
        let (_, report) = r.solve(None, &cfg).unwrap();
        assert!(report.converged, "{relaxation:?} {order:?}");
    }
}

#[test]
fn invalid_settings_are_rejected() {
    let bad = [
        SolverConfig { tolerance: 0.0, ..SolverConfig::default() },
        SolverConfig { relaxation: Relaxation::DampedJacobi { omega: 1.5 }, ..SolverConfig::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err());
    }
    let stack = LevelStack::new(CsrMatrix::identity(3), &[], &SolverConfig::default()).unwrap();
    assert!(stack.solve(&[1.0, 2.0], None, &SolverConfig::default()).is_err());
}

#[test]
fn unconstrained_reduction_equals_plain_setup() {
    let m = shapes::icosphere(3);
    let ps = hierarchy(&m, 100);
    let (a, b) = smoothing_system(&cotan_laplacian(&m).unwrap(), &lumped_areas(&m), 0.5, &smooth_fn(&m)).unwrap();
    let cfg = SolverConfig::default();
    let r = reduce_dirichlet(&a, &b, &[], &[], &ps, &cfg).unwrap();
    let plain = LevelStack::new(a, &ps, &cfg).unwrap();
    assert_eq!(r.stack.as_ref().unwrap().matrices(), plain.matrices());
    assert_eq!(r.rhs, b);
}

#[test]
fn fully_constrained_system_needs_no_cycles() {
    let m = shapes::icosphere(2);
    let (l, b) = assemble_poisson(&m, &smooth_fn(&m)).unwrap();
    let idx: Vec<usize> = (0..m.vertex_count()).rev().collect();
    let vals: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
    let r = reduce_dirichlet(&l, &b, &idx, &vals, &hierarchy(&m, 20), &SolverConfig::default()).unwrap();
    let (x, report) = r.solve(None, &SolverConfig::default()).unwrap();
    assert_eq!(x, (0..m.vertex_count()).map(|i| i as f64).collect::<Vec<_>>());
    assert_eq!(report.cycles, 0);
}

#[test]
fn constrained_solve_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SolverConfig::with_tolerance(1e-13);
    for (m, fraction) in [(shapes::icosphere(3), 0.1), (shapes::blob(3, 5), 0.1), (shapes::icosphere(3), 0.85)] {
        let ps = hierarchy(&m, 40);
        let (l, b) = assemble_poisson(&m, &smooth_fn(&m)).unwrap();
        let idx: Vec<usize> = (0..m.vertex_count()).filter(|_| rng.gen::<f64>() < fraction).collect();
        let vals: Vec<f64> = idx.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = reduce_dirichlet(&l, &b, &idx, &vals, &ps, &cfg).unwrap();
        let (x, _) = r.solve(None, &cfg).unwrap();
        let expect = dense_constrained(&l, &b, &idx, &vals);
        assert!(rel_err(&x, &expect) < 1e-10, "{}", rel_err(&x, &expect));
    }
}

#[test]
fn zero_columns_cascade_down_the_chain() {
    // level sizes 4 -> 3 -> 2; after dropping fine rows 0 and 1, coarse
    // column 0 of P1 is empty, so row 0 of P2 goes and P2's column 0 with it
    let p1 = CsrMatrix::from_triplets(4, 3, &[(0, 0, 1.0), (1, 0, 0.5), (1, 1, 0.5), (2, 1, 1.0), (3, 2, 1.0)]).unwrap();
    let p2 = CsrMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 1.0), (2, 1, 1.0)]).unwrap();
    let out = prune_prolongations(&[p1.select_rows(&[2, 3]), p2]);
    assert_eq!(out.len(), 2);
    assert_eq!((out[0].nrows(), out[0].ncols()), (2, 2));
    assert_eq!((out[1].nrows(), out[1].ncols()), (2, 1));
    let empty = CsrMatrix::from_triplets(2, 2, &[]).unwrap();
    assert!(prune_prolongations(&[empty]).is_empty());
}

#[test]
fn fast_smoothing_path_matches_slow_path() {
    let m = shapes::blob(3, 6);
    let ps = hierarchy(&m, 40);
    let cfg = SolverConfig::default();
    let q = bilaplacian(&m).unwrap();
    let mass = lumped_areas(&m);
    let pre = smoothing_fast_setup(&q, &lumped_mass(&m), &ps, &cfg).unwrap();
    let zero = pre.stack(0.0, &cfg).unwrap();
    let slow_m = LevelStack::new(lumped_mass(&m), &ps, &cfg).unwrap();
    for h in 0..=zero.depth() {
        assert_eq!(zero.matrix(h).to_dense(), slow_m.matrix(h).to_dense());
    }
    for alpha in [0.1, 0.5, 0.9] {
        let fast = pre.stack(alpha, &cfg).unwrap();
        let (a, _) = smoothing_system(&q, &mass, alpha, &mass).unwrap();
        let slow = LevelStack::new(a, &ps, &cfg).unwrap();
        for h in 0..=fast.depth() {
            let (x, y) = (fast.matrix(h).to_dense(), slow.matrix(h).to_dense());
            assert!((&x - &y).abs().max() <= 1e-12 * y.abs().max(), "alpha {alpha} level {h}");
        }
    }
}

#[test]
fn alpha_sweep_runs_no_triple_products() {
    let m = shapes::icosphere(3);
    let cfg = SolverConfig { order: RelaxOrder::Colored { parallel: false }, ..SolverConfig::default() };
    let pre = smoothing_fast_setup(&cotan_laplacian(&m).unwrap(), &lumped_mass(&m), &hierarchy(&m, 100), &cfg).unwrap();
    let f = smooth_fn(&m);
    let before = triple_product_count();
    for k in 0..20 {
        let (_, report) = smoothing_solve(&pre, k as f64 / 20.0, &f, None, &cfg).unwrap();
        assert!(report.converged);
    }
    assert_eq!(triple_product_count(), before);
}

#[test]
fn zero_alpha_returns_the_input() {
    let m = shapes::icosphere(3);
    let cfg = SolverConfig::with_tolerance(1e-12);
    let pre = smoothing_fast_setup(&cotan_laplacian(&m).unwrap(), &lumped_mass(&m), &hierarchy(&m, 100), &cfg).unwrap();
    let f = smooth_fn(&m);
    let (x, _) = smoothing_solve(&pre, 0.0, &f, None, &cfg).unwrap();
    assert!(rel_err(&x, &f) < 1e-10);
    assert!(smoothing_solve(&pre, 1.0, &f, None, &cfg).is_err());
}

#[test]
fn report_csv_and_phase_times() {
    let m = shapes::icosphere(4);
    let cfg = SolverConfig::default();
    let (_, _, r) = pinned_poisson(&m, &hierarchy(&m, 500), &cfg);
    let (_, report) = r.solve(None, &cfg).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cycle,relative_residual,cumulative_ms"));
    assert_eq!(lines.count(), report.cycles + 1);
    let phases = report.phases.total_ms();
    assert!((phases - report.solve_ms).abs() <= 0.05 * report.solve_ms, "{phases} vs {}", report.solve_ms);
    assert!(report.contraction_factor().unwrap() < 1.0);
}
