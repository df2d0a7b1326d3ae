use super::*;
use crate::decimate::{decimate, decimate_to_mesh, DecimateConfig, Strategy};
use crate::flatten::FlattenConfig;
use crate::mesh::shapes;

fn config(strategy: Strategy) -> DecimateConfig {
    DecimateConfig::new(strategy, FlattenConfig::default())
}

fn assert_valid(points: &[BarycentricPoint]) {
    for p in points {
        assert!(p.weights.iter().all(|&w| w >= 0.0), "{p:?}");
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn no_records_leaves_seeds_unchanged() {
    let m = shapes::icosphere(1);
    let seeds = vertex_seeds(&m);
    assert_eq!(map_all_fine_vertices(&m, &[]).unwrap(), seeds);
    for (v, p) in seeds.iter().enumerate() {
        assert_eq!(point_position(&m, p), m.position(v));
    }
}

#[test]
fn every_fine_vertex_lands_on_a_coarse_face() {
    for strategy in [Strategy::QSlim, Strategy::Midpoint, Strategy::VertexRemoval] {
        for m in [shapes::blob(2, 3), shapes::perturb(&shapes::grid(10, 10, 1.0, 1.0), 0.02, 5)] {
            let (d, snap) = decimate_to_mesh(&m, m.vertex_count() / 4, &config(strategy)).unwrap();
            let points = map_all_fine_vertices(&m, &d.records).unwrap();
            let points = compact_points(&points, &snap.face_map).unwrap();
            assert_eq!(points.len(), m.vertex_count());
            assert_valid(&points);
            assert!(points.iter().all(|p| p.face < snap.mesh.face_count()));
        }
    }
}

#[test]
fn prolongation_rows_are_partitions_of_unity() {
    let m = shapes::blob(2, 8);
    let (d, snap) = decimate_to_mesh(&m, 40, &config(Strategy::QSlim)).unwrap();
    let points = compact_points(&map_all_fine_vertices(&m, &d.records).unwrap(), &snap.face_map).unwrap();
    let p = assemble_prolongation(&points, &snap.mesh).unwrap();
    assert_eq!((p.nrows(), p.ncols()), (m.vertex_count(), 40));
    for r in 0..p.nrows() {
        let (cols, vals) = p.row(r);
        assert!(!cols.is_empty() && cols.len() <= 3);
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn vertex_removal_survivors_get_unit_rows() {
    let m = shapes::blob(2, 4);
    let (d, snap) = decimate_to_mesh(&m, 50, &config(Strategy::VertexRemoval)).unwrap();
    let points = compact_points(&map_all_fine_vertices(&m, &d.records).unwrap(), &snap.face_map).unwrap();
    let p = assemble_prolongation(&points, &snap.mesh).unwrap();
    for (v, c) in snap.vertex_map.iter().enumerate() {
        if let Some(c) = *c {
            let (cols, vals) = p.row(v);
            assert_eq!(cols, &[c]);
            assert!((vals[0] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn onering_average_of_a_single_removal() {
    let m = shapes::grid(4, 4, 1.0, 1.0);
    // interior vertex 6 of a regular grid has valence six
    let (i, j) = (6, 7);
    let mut dec = crate::decimate::Decimator::new(&m, config(Strategy::VertexRemoval));
    let r = dec.try_collapse(i, j).unwrap();
    let snap = dec.mesh().snapshot().unwrap();
    let p = onering_average_prolongation(m.vertex_count(), &[r.clone()], &snap.vertex_map, snap.mesh.vertex_count()).unwrap();
    let (cols, vals) = p.row(r.removed);
    assert_eq!(cols.len(), 6);
    assert!(vals.iter().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
    for v in 0..p.nrows() {
        assert!((p.row(v).1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn onering_rows_compose_over_many_collapses() {
    let m = shapes::blob(2, 1);
    let (d, snap) = decimate_to_mesh(&m, 30, &config(Strategy::QSlim)).unwrap();
    let p = onering_average_prolongation(m.vertex_count(), &d.records, &snap.vertex_map, 30).unwrap();
    for v in 0..p.nrows() {
        let (_, vals) = p.row(v);
        assert!(vals.iter().all(|&w| w > 0.0));
        assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn push_then_pull_returns_to_the_same_chart_location() {
    let m = shapes::blob(2, 6);
    let d = decimate(&m, 60, &config(Strategy::QSlim));
    let weights = [[0.2, 0.3, 0.5], [1.0 / 3.0; 3], [0.7, 0.2, 0.1]];
    let mut checked = 0;
    for r in d.records.iter().take(40) {
        for f in &r.before {
            for w in weights {
                let p = BarycentricPoint::new(f.id, w);
                let q = push_point(&p, r).unwrap();
                let back = pull_point(&q, r).unwrap();
                let (a, b) = (r.uv_of(&p).unwrap(), r.uv_of(&back).unwrap());
                assert!((a - b).norm() < 1e-9, "record {}", r.index);
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn ssph_round_trip_is_exact_and_deterministic() {
    let m = shapes::blob(3, 2);
    let cfg = HierarchyConfig { min_vertices: 40, ..HierarchyConfig::default() };
    let h = build_hierarchy(&m, &cfg).unwrap();
    assert!(h.depth() >= 2);
    let text = hierarchy_to_string(&h).unwrap();
    let back = hierarchy_from_str(&text).unwrap();
    assert_eq!(back.level_sizes, h.level_sizes);
    assert_eq!(back.fine_map, h.fine_map);
    assert_eq!(back.prolongations, h.prolongations);
    assert_eq!(back.coarsest().faces(), h.coarsest().faces());
    assert_eq!(back.coarsest().positions(), h.coarsest().positions());
    assert_eq!(hierarchy_to_string(&back).unwrap(), text);
    let again = build_hierarchy(&m, &cfg).unwrap();
    assert_eq!(hierarchy_to_string(&again).unwrap(), text);
}

#[test]
fn ssph_rejects_damaged_input() {
    let m = shapes::blob(2, 2);
    let h = build_hierarchy(&m, &HierarchyConfig { min_vertices: 30, ..HierarchyConfig::default() }).unwrap();
    let text = hierarchy_to_string(&h).unwrap();
    assert!(hierarchy_from_str(&text.replacen("SSPH 1", "SSPH 2", 1)).is_err());
    assert!(hierarchy_from_str(&text[..text.len() / 2]).is_err());
    let fewer = text.replacen(&format!("BEGIN MAP {}", m.vertex_count()), &format!("BEGIN MAP {}", m.vertex_count() + 1), 1);
    assert!(hierarchy_from_str(&fewer).is_err());
}

#[test]
fn small_mesh_has_no_coarse_levels() {
    let m = shapes::grid(19, 19, 1.0, 1.0);
    assert_eq!(m.vertex_count(), 400);
    let h = build_hierarchy(&m, &HierarchyConfig::default()).unwrap();
    assert_eq!(h.depth(), 0);
    assert_eq!(h.level_sizes, vec![400]);
    let back = hierarchy_from_str(&hierarchy_to_string(&h).unwrap()).unwrap();
    assert_eq!(back.depth(), 0);
}

#[test]
fn hierarchy_levels_hit_their_targets() {
    let m = shapes::blob(3, 9);
    let cfg = HierarchyConfig { min_vertices: 30, keep_records: true, ..HierarchyConfig::default() };
    let h = build_hierarchy(&m, &cfg).unwrap();
    assert!(!h.shortfall);
    assert_eq!(&h.level_sizes[1..], &h.targets[..]);
    for (k, p) in h.prolongations.iter().enumerate() {
        assert_eq!((p.nrows(), p.ncols()), (h.level_sizes[k], h.level_sizes[k + 1]));
    }
    let records = h.records.as_ref().unwrap();
    for (k, r) in records.iter().enumerate() {
        assert_eq!(r.len(), h.level_sizes[k] - h.level_sizes[k + 1]);
    }
    // every coarsest vertex is touched by some fine vertex
    let coarse = h.coarsest();
    let mut hit = vec![false; coarse.vertex_count()];
    for p in &h.fine_map {
        for a in 0..3 {
            if p.weights[a] > 0.0 {
                hit[coarse.faces()[p.face][a]] = true;
            }
        }
    }
    assert!(hit.iter().all(|&h| h));
}

#[test]
fn invalid_config_is_rejected() {
    let m = shapes::icosphere(2);
    for cfg in [
        HierarchyConfig { ratio: 1.0, ..HierarchyConfig::default() },
        HierarchyConfig { ratio: 0.0, ..HierarchyConfig::default() },
        HierarchyConfig { min_vertices: 2, ..HierarchyConfig::default() },
    ] {
        assert!(matches!(build_hierarchy(&m, &cfg), Err(crate::Error::Config(_))));
    }
}
