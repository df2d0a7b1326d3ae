//! Subcommand implementations.

use std::path::Path;
use std::time::Instant;

use serde_json::json;
use surfmg::decimate::DecimateConfig;
use surfmg::fem::{assemble_poisson, cotan_laplacian, energy_matrix, lumped_mass, mcf_step, sphere_fit};
use surfmg::flatten::FlattenConfig;
use surfmg::mesh::obj::{load_obj, write_obj};
use surfmg::mesh::SurfaceMesh;
use surfmg::multigrid::{
    norm2, reduce_dirichlet, smoothing_fast_setup, smoothing_solve, LevelStack, RelaxOrder, Relaxation, SolveReport,
    SolverConfig,
};
use surfmg::selfparam::{build_hierarchy, read_hierarchy, write_hierarchy, Hierarchy, HierarchyConfig};
use surfmg::sparse::{triple_product_count, CsrMatrix, Ordering, Smoother};

use crate::io::{create_dir, io_error, read_column, write_column, CliError};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{Baseline, BenchArgs, BuildArgs, ExportMapArgs, FlowArgs, RelaxArg, SmoothArgs, SolveArgs, SolverArgs};

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let (relaxation, order) = match self.relaxation {
            RelaxArg::GaussSeidel => (Relaxation::GaussSeidel, RelaxOrder::Natural),
            RelaxArg::ColoredGaussSeidel => (Relaxation::GaussSeidel, RelaxOrder::Colored { parallel: true }),
            RelaxArg::Jacobi => (Relaxation::DampedJacobi { omega: self.omega }, RelaxOrder::Natural),
        };
        let config = SolverConfig {
            pre_sweeps: self.pre_sweeps,
            post_sweeps: self.post_sweeps,
            tolerance: self.tol,
            max_cycles: self.max_cycles,
            relaxation,
            order,
        };
        config.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(config)
    }
}

fn load_hierarchy(path: &Path) -> Result<Hierarchy, CliError> {
    let h = read_hierarchy(path)?;
    log::info!("hierarchy {}: levels {}", path.display(), h.sizes_string());
    Ok(h)
}

fn read_vertex_function(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    let f: Vec<f64> = read_column(path)?;
    if f.len() != n {
        return Err(io_error(path, format!("{} values for a mesh with {n} vertices", f.len())));
    }
    Ok(f)
}

fn write_report(path: &Path, report: &SolveReport) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    report.write_csv(file)?;
    Ok(())
}

fn report_summary(report: &SolveReport) -> serde_json::Value {
    json!({
        "cycles": report.cycles,
        "converged": report.converged,
        "final_relative_residual": report.final_residual(),
        "contraction_factor": report.contraction_factor(),
    })
}

fn record_phases(manifest: &mut RunManifest, prefix: &str, report: &SolveReport) {
    manifest
        .time(&format!("{prefix}setup"), report.setup_ms)
        .time(&format!("{prefix}relaxation"), report.phases.relax_ms)
        .time(&format!("{prefix}prolong_restrict"), report.phases.transfer_ms)
        .time(&format!("{prefix}coarse_solve"), report.phases.coarse_ms)
        .time(&format!("{prefix}residual"), report.phases.residual_ms)
        .time(&format!("{prefix}solve_total"), report.solve_ms);
}

pub fn build(args: &BuildArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let config = HierarchyConfig {
        ratio: args.ratio,
        min_vertices: args.min_verts,
        decimation: DecimateConfig::new(args.decimation, FlattenConfig::with_energy(args.energy)),
        keep_records: false,
    };
    config.validate()?;
    let mesh = load_obj(&args.input)?;
    let load_ms = ms(start);
    let t = Instant::now();
    let h = build_hierarchy(&mesh, &config)?;
    let build_ms = ms(t);
    let t = Instant::now();
    write_hierarchy(&h, &args.out)?;
    let write_ms = ms(t);
    println!("levels: {}", h.sizes_string());
    if h.depth() == 0 {
        eprintln!("warning: {} vertices is below floor; the hierarchy has no coarse levels", mesh.vertex_count());
    }
    if h.shortfall {
        eprintln!("warning: decimation stopped short of target sizes {:?}", h.targets);
    }
    let mut m = RunManifest::new("build", config);
    m.input("mesh", &args.input)
        .output("hierarchy", &args.out)
        .time("load", load_ms)
        .time("decimate", build_ms)
        .time("write", write_ms)
        .result("level_sizes", &h.level_sizes)
        .result("targets", &h.targets)
        .result("shortfall", h.shortfall);
    m.write(&manifest_path_for(&args.out))
}

/// Poisson system with its gauge: the given constraints, or vertex 0
/// pinned to zero.
fn poisson_constraints(args_dirichlet: &Option<Vec<std::path::PathBuf>>, n: usize) -> Result<(Vec<usize>, Vec<f64>), CliError> {
    let Some(files) = args_dirichlet else { return Ok((vec![0], vec![0.0])) };
    let idx: Vec<usize> = read_column(&files[0])?;
    let vals: Vec<f64> = read_column(&files[1])?;
    if idx.len() != vals.len() {
        return Err(CliError::Input(format!("{} constraint indices but {} values", idx.len(), vals.len())));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(CliError::Input(format!("constraint index {bad} out of range for {n} vertices")));
    }
    Ok((idx, vals))
}

pub fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let config = args.solver.config()?;
    let start = Instant::now();
    let h = load_hierarchy(&args.hierarchy)?;
    let n = h.fine().vertex_count();
    let f = read_vertex_function(&args.rhs, n)?;
    let (idx, vals) = poisson_constraints(&args.dirichlet, n)?;
    let load_ms = ms(start);
    let (l, b) = assemble_poisson(h.fine(), &f)?;
    let t = Instant::now();
    let reduced = reduce_dirichlet(&l, &b, &idx, &vals, &h.prolongations, &config)?;
    let reduce_ms = ms(t);
    let (x, report) = reduced.solve(None, &config)?;
    write_column(&args.out, &x)?;
    if let Some(path) = &args.report {
        write_report(path, &report)?;
    }
    println!(
        "cycles: {}  relative residual: {:.3e}  converged: {}",
        report.cycles,
        report.final_residual(),
        report.converged
    );
    let mut m = RunManifest::new("solve", json!({ "problem": args.problem, "solver": config, "hierarchy": h.config }));
    m.input("hierarchy", &args.hierarchy).input("rhs", &args.rhs).output("solution", &args.out);
    if let Some(files) = &args.dirichlet {
        m.input("dirichlet_indices", &files[0]).input("dirichlet_values", &files[1]);
    }
    if let Some(path) = &args.report {
        m.output("report", path);
    }
    m.time("load", load_ms).time("reduce", reduce_ms).result("solve", report_summary(&report)).result("constrained", idx.len());
    record_phases(&mut m, "", &report);
    m.write(&manifest_path_for(&args.out))?;
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "no convergence after {} cycles (relative residual {:.3e}); best iterate written",
            report.cycles,
            report.final_residual()
        )));
    }
    Ok(())
}

pub fn smooth(args: &SmoothArgs) -> Result<(), CliError> {
    let config = args.solver.config()?;
    if let Some(a) = args.alpha_list.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(CliError::Input(format!("alpha {a} outside [0, 1)")));
    }
    let h = load_hierarchy(&args.hierarchy)?;
    let mesh = h.fine();
    let f = read_vertex_function(&args.function, mesh.vertex_count())?;
    create_dir(&args.out_dir)?;
    let t = Instant::now();
    let q = energy_matrix(mesh, args.energy)?;
    let mass = lumped_mass(mesh);
    let l = cotan_laplacian(mesh)?;
    let assemble_ms = ms(t);
    let before = triple_product_count();
    let t = Instant::now();
    let pre = smoothing_fast_setup(&q, &mass, &h.prolongations, &config)?;
    let setup_ms = ms(t);
    let after_setup = triple_product_count();
    let mut m = RunManifest::new("smooth", json!({ "energy": args.energy, "alphas": args.alpha_list, "solver": config }));
    m.input("hierarchy", &args.hierarchy).input("function", &args.function);
    let mut per_alpha = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut failed = Vec::new();
    for &alpha in &args.alpha_list {
        let t = Instant::now();
        let (x, report) = smoothing_solve(&pre, alpha, &f, previous.as_deref(), &config)?;
        let solve_ms = ms(t);
        let path = args.out_dir.join(format!("smoothed_alpha_{alpha}.csv"));
        write_column(&path, &x)?;
        let energy = x.iter().zip(l.spmv(&x)?).map(|(a, b)| a * b).sum::<f64>();
        println!("alpha {alpha}: {} cycles, {solve_ms:.1} ms, dirichlet energy {energy:.6e}", report.cycles);
        if !report.converged {
            failed.push(alpha);
        }
        m.output(&format!("alpha_{alpha}"), &path);
        per_alpha.push(json!({
            "alpha": alpha,
            "cycles": report.cycles,
            "converged": report.converged,
            "final_relative_residual": report.final_residual(),
            "solve_ms": solve_ms,
            "dirichlet_energy": energy,
        }));
        previous = Some(x);
    }
    m.time("assemble", assemble_ms)
        .time("setup", setup_ms)
        .result("per_alpha", per_alpha)
        .result("setup_triple_products", after_setup - before)
        .result("sweep_triple_products", triple_product_count() - after_setup);
    m.write(&args.out_dir.join("manifest.json"))?;
    if !failed.is_empty() {
        return Err(CliError::NotConverged(format!("no convergence for alpha {failed:?}")));
    }
    Ok(())
}

pub fn flow(args: &FlowArgs) -> Result<(), CliError> {
    let config = args.solver.config()?;
    if !(args.delta >= 0.0 && args.delta.is_finite()) {
        return Err(CliError::Input(format!("time step {} must be non-negative", args.delta)));
    }
    let h = load_hierarchy(&args.hierarchy)?;
    let mut mesh = h.fine().clone();
    if !mesh.is_closed() {
        return Err(CliError::Input("mean-curvature flow needs a closed mesh".into()));
    }
    create_dir(&args.out_dir)?;
    let l0 = cotan_laplacian(&mesh)?;
    let first = args.out_dir.join("step_000.obj");
    write_obj(&mesh, &first)?;
    let mut m = RunManifest::new("flow", json!({ "steps": args.steps, "delta": args.delta, "solver": config }));
    m.input("hierarchy", &args.hierarchy).output("step_000", &first);
    let mut steps = Vec::new();
    let mut unconverged = 0usize;
    let total = Instant::now();
    for step in 1..=args.steps {
        let t = Instant::now();
        let mut setup_ms = 0.0;
        let mut solve_ms = 0.0;
        let mut cycles = Vec::new();
        let current: Vec<Vec<f64>> = (0..3).map(|d| mesh.positions().iter().map(|p| p[d]).collect()).collect();
        mesh = mcf_step(&mesh, &l0, args.delta, |a: &CsrMatrix, rhs: &[Vec<f64>]| {
            let s = Instant::now();
            let stack = LevelStack::new(a.clone(), &h.prolongations, &config)?;
            setup_ms += ms(s);
            let s = Instant::now();
            let mut out = Vec::with_capacity(3);
            for (b, x0) in rhs.iter().zip(&current) {
                let (x, report) = stack.solve(b, Some(x0), &config)?;
                cycles.push(report.cycles);
                if !report.converged {
                    unconverged += 1;
                }
                out.push(x);
            }
            solve_ms += ms(s);
            Ok(out)
        })?;
        let path = args.out_dir.join(format!("step_{step:03}.obj"));
        write_obj(&mesh, &path)?;
        let (_, radius, deviation) = sphere_fit(mesh.positions());
        println!("step {step}: {:.1} ms, cycles {cycles:?}, sphericity error {deviation:.3e}", ms(t));
        m.output(&format!("step_{step:03}"), &path);
        steps.push(json!({
            "step": step,
            "setup_ms": setup_ms,
            "solve_ms": solve_ms,
            "cycles": cycles,
            "radius": radius,
            "sphericity_error": deviation,
        }));
    }
    m.time("flow_total", ms(total)).result("steps", steps).result("hierarchy_builds", 0).result("hierarchy_loads", 1);
    m.write(&args.out_dir.join("manifest.json"))?;
    if unconverged > 0 {
        return Err(CliError::NotConverged(format!("{unconverged} coordinate solves did not converge")));
    }
    Ok(())
}

/// A smooth test function of position, scaled to the bounding box.
pub fn default_rhs(mesh: &SurfaceMesh) -> Vec<f64> {
    let (lo, hi) = mesh.bbox();
    let c = (lo + hi) / 2.0;
    let d = mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
    mesh.positions()
        .iter()
        .map(|p| {
            let q = (p - c) / d;
            (6.0 * q.x).sin() + 4.0 * q.y * q.z
        })
        .collect()
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = args.solver.config()?;
    let h = load_hierarchy(&args.hierarchy)?;
    let mesh = h.fine();
    let f = match &args.rhs {
        Some(path) => read_vertex_function(path, mesh.vertex_count())?,
        None => default_rhs(mesh),
    };
    let (l, b) = assemble_poisson(mesh, &f)?;
    let mut rows: Vec<(String, usize, f64, f64)> = Vec::new();
    let mut m = RunManifest::new("bench", json!({ "problem": args.problem, "baselines": args.baselines, "solver": config }));
    m.input("hierarchy", &args.hierarchy).output("bench", &args.out);

    let reduced = reduce_dirichlet(&l, &b, &[0], &[0.0], &h.prolongations, &config)?;
    let (_, report) = reduced.solve(None, &config)?;
    push_rows(&mut rows, "intrinsic", &report);
    record_phases(&mut m, "intrinsic_", &report);
    m.result("intrinsic", report_summary(&report));
    println!("intrinsic: {} cycles, residual {:.3e}", report.cycles, report.final_residual());
    println!("  prepare PtAP      {:>10.2} ms", report.setup_ms);
    println!("  relaxation        {:>10.2} ms", report.phases.relax_ms);
    println!("  prolong/restrict  {:>10.2} ms", report.phases.transfer_ms);
    println!("  coarse solve      {:>10.2} ms", report.phases.coarse_ms);
    println!("  residual norm     {:>10.2} ms", report.phases.residual_ms);

    for baseline in &args.baselines {
        match baseline {
            Baseline::Onering => {
                let t = Instant::now();
                let rebuilt = build_hierarchy(mesh, &h.config)?;
                let rebuild_ms = ms(t);
                if rebuilt.level_sizes != h.level_sizes {
                    log::warn!("rebuilt hierarchy has levels {} instead of {}", rebuilt.sizes_string(), h.sizes_string());
                }
                let onering = rebuilt.onering.unwrap_or_default();
                let r = reduce_dirichlet(&l, &b, &[0], &[0.0], &onering, &config)?;
                let (_, rep) = r.solve(None, &config)?;
                push_rows(&mut rows, "onering", &rep);
                m.time("onering_rebuild", rebuild_ms).result("onering", report_summary(&rep));
                record_phases(&mut m, "onering_", &rep);
                println!("onering: {} cycles, residual {:.3e}", rep.cycles, rep.final_residual());
            }
            Baseline::Gs => {
                let Some(stack) = &reduced.stack else { continue };
                let sweeps_per_cycle = (config.pre_sweeps + config.post_sweeps).max(1);
                let budget = args.gs_budget * report.cycles.max(1);
                let a = stack.matrix(0);
                let smoother = Smoother::new(a)?;
                let mut x = vec![0.0; reduced.rhs.len()];
                let mut r = vec![0.0; x.len()];
                let scale = norm2(&reduced.rhs).max(f64::MIN_POSITIVE);
                let start = Instant::now();
                a.residual_into(&x, &reduced.rhs, &mut r);
                rows.push(("gs".into(), 0, norm2(&r) / scale, 0.0));
                let mut last = norm2(&r) / scale;
                for cycle in 1..=budget {
                    smoother.sweep(a, &mut x, &reduced.rhs, sweeps_per_cycle, Ordering::Natural);
                    a.residual_into(&x, &reduced.rhs, &mut r);
                    last = norm2(&r) / scale;
                    rows.push(("gs".into(), cycle, last, ms(start)));
                    if last <= config.tolerance {
                        break;
                    }
                }
                m.result("gs", json!({ "cycle_equivalents": budget, "sweeps_per_cycle": sweeps_per_cycle, "final_relative_residual": last }));
                println!("gs: residual {last:.3e} after {budget} cycle equivalents");
            }
        }
    }

    let mut w = csv::Writer::from_path(&args.out).map_err(|e| io_error(&args.out, e))?;
    w.write_record(["method", "cycle", "residual", "cumulative_ms"]).map_err(|e| io_error(&args.out, e))?;
    for (method, cycle, res, t) in &rows {
        w.write_record([method.clone(), cycle.to_string(), format!("{res:.6e}"), format!("{t:.3}")])
            .map_err(|e| io_error(&args.out, e))?;
    }
    w.flush().map_err(|e| io_error(&args.out, e))?;
    m.write(&manifest_path_for(&args.out))?;
    if !report.converged {
        return Err(CliError::NotConverged(format!("intrinsic multigrid stopped at {:.3e}", report.final_residual())));
    }
    Ok(())
}

fn push_rows(rows: &mut Vec<(String, usize, f64, f64)>, method: &str, report: &SolveReport) {
    for (k, (r, t)) in report.residuals.iter().zip(&report.cumulative_ms).enumerate() {
        rows.push((method.to_string(), k, *r, *t));
    }
}

pub fn export_map(args: &ExportMapArgs) -> Result<(), CliError> {
    let h = load_hierarchy(&args.hierarchy)?;
    let mut w = csv::Writer::from_path(&args.out).map_err(|e| io_error(&args.out, e))?;
    w.write_record(["vertex", "face", "w0", "w1", "w2"]).map_err(|e| io_error(&args.out, e))?;
    for (v, p) in h.fine_map.iter().enumerate() {
        w.write_record([
            v.to_string(),
            p.face.to_string(),
            p.weights[0].to_string(),
            p.weights[1].to_string(),
            p.weights[2].to_string(),
        ])
        .map_err(|e| io_error(&args.out, e))?;
    }
    w.flush().map_err(|e| io_error(&args.out, e))?;
    let mut m = RunManifest::new("export-map", json!({}));
    m.input("hierarchy", &args.hierarchy).output("map", &args.out).result("rows", h.fine_map.len());
    m.write(&manifest_path_for(&args.out))
}
