//! Procedural test meshes: platonic solids, subdivided spheres, grids, disks,
//! annuli, tori and randomly perturbed variants.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SurfaceMesh, Vec3};

fn build(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> SurfaceMesh {
    SurfaceMesh::new(positions, faces).expect("generated mesh is valid")
}

pub fn tetrahedron() -> SurfaceMesh {
    let p = vec![
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    build(p, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> SurfaceMesh {
    let (p, f) = icosahedron_raw();
    build(p, f)
}

fn icosahedron_raw() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let p = raw.iter().map(|c| Vec3::new(c[0], c[1], c[2]).normalize()).collect();
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (p, f)
}

/// One 1-to-4 midpoint subdivision step.
fn subdivide(positions: &mut Vec<Vec3>, faces: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, positions: &mut Vec<Vec3>| -> usize {
        *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
            positions.push((positions[a] + positions[b]) * 0.5);
            positions.len() - 1
        })
    };
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let ab = mid(a, b, positions);
        let bc = mid(b, c, positions);
        let ca = mid(c, a, positions);
        out.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    out
}

/// Unit sphere from `levels` subdivisions of the icosahedron
/// (12, 42, 162, 642, 2562, 10242, 40962 vertices).
pub fn icosphere(levels: usize) -> SurfaceMesh {
    let (mut p, mut f) = icosahedron_raw();
    for _ in 0..levels {
        f = subdivide(&mut p, &f);
        for q in p.iter_mut() {
            *q = q.normalize();
        }
    }
    build(p, f)
}

/// Regular grid on `[0,w]x[0,h]` with `nx * ny` cells, all diagonals parallel
/// so interior vertices have valence 6.
pub fn grid(nx: usize, ny: usize, w: f64, h: f64) -> SurfaceMesh {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut p = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            p.push(Vec3::new(w * i as f64 / nx as f64, h * j as f64 / ny as f64, 0.0));
        }
    }
    let mut f = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            f.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            f.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(p, f)
}

/// Triangulates the strip between two closed rings of vertex indices whose
/// angular parameters are given (both ascending in `[0, 2pi)`).
fn stitch_rings(inner: &[(usize, f64)], outer: &[(usize, f64)], faces: &mut Vec<[usize; 3]>) {
    let (m, n) = (inner.len(), outer.len());
    let (mut a, mut b) = (0usize, 0usize);
    while a < m || b < n {
        let ia = inner[a % m];
        let ib = outer[b % n];
        let next_a = inner[(a + 1) % m].1 + if a + 1 >= m { 2.0 * PI } else { 0.0 };
        let next_b = outer[(b + 1) % n].1 + if b + 1 >= n { 2.0 * PI } else { 0.0 };
        if b >= n || (a < m && next_a <= next_b) {
            faces.push([ia.0, ib.0, inner[(a + 1) % m].0]);
            a += 1;
        } else {
            faces.push([ia.0, ib.0, outer[(b + 1) % n].0]);
            b += 1;
        }
    }
}

/// Flat unit disk with `rings` concentric rings of `6 r` vertices.
pub fn disk(rings: usize) -> SurfaceMesh {
    let mut p = vec![Vec3::zeros()];
    let mut faces = Vec::new();
    let mut prev: Vec<(usize, f64)> = vec![];
    for r in 1..=rings {
        let count = 6 * r;
        let radius = r as f64 / rings as f64;
        let ring: Vec<(usize, f64)> = (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                p.push(Vec3::new(radius * t.cos(), radius * t.sin(), 0.0));
                (p.len() - 1, t)
            })
            .collect();
        if r == 1 {
            for k in 0..count {
                faces.push([0, ring[k].0, ring[(k + 1) % count].0]);
            }
        } else {
            stitch_rings(&prev, &ring, &mut faces);
        }
        prev = ring;
    }
    build(p, faces)
}

/// Flat annulus between radii `r0 < r1`.
pub fn annulus(segments: usize, rings: usize, r0: f64, r1: f64) -> SurfaceMesh {
    let mut p = Vec::new();
    let mut faces = Vec::new();
    let mut prev: Vec<(usize, f64)> = vec![];
    for r in 0..=rings {
        let radius = r0 + (r1 - r0) * r as f64 / rings as f64;
        let offset = if r % 2 == 1 { PI / segments as f64 } else { 0.0 };
        let ring: Vec<(usize, f64)> = (0..segments)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / segments as f64 + offset;
                p.push(Vec3::new(radius * t.cos(), radius * t.sin(), 0.0));
                (p.len() - 1, t)
            })
            .collect();
        if r > 0 {
            stitch_rings(&prev, &ring, &mut faces);
        }
        prev = ring;
    }
    build(p, faces)
}

/// Open cylinder of radius 1 and the given height, boundary at both ends.
pub fn cylinder(segments: usize, rings: usize, height: f64) -> SurfaceMesh {
    let mut p = Vec::new();
    let mut f = Vec::new();
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        let offset = if r % 2 == 1 { PI / segments as f64 } else { 0.0 };
        for k in 0..segments {
            let t = 2.0 * PI * k as f64 / segments as f64 + offset;
            p.push(Vec3::new(t.cos(), t.sin(), z));
        }
    }
    for r in 0..rings {
        let lo = r * segments;
        let hi = (r + 1) * segments;
        for k in 0..segments {
            let k1 = (k + 1) % segments;
            if r % 2 == 0 {
                f.push([lo + k, lo + k1, hi + k]);
                f.push([lo + k1, hi + k1, hi + k]);
            } else {
                f.push([lo + k, hi + k1, hi + k]);
                f.push([lo + k, lo + k1, hi + k1]);
            }
        }
    }
    build(p, f)
}

/// Torus with major radius `big` and minor radius `small`.
pub fn torus(nu: usize, nv: usize, big: f64, small: f64) -> SurfaceMesh {
    let idx = |i: usize, j: usize| (j % nv) * nu + (i % nu);
    let mut p = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        let v = 2.0 * PI * j as f64 / nv as f64;
        for i in 0..nu {
            let u = 2.0 * PI * i as f64 / nu as f64;
            let ring = big + small * v.cos();
            p.push(Vec3::new(ring * u.cos(), ring * u.sin(), small * v.sin()));
        }
    }
    let mut f = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            f.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            f.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(p, f)
}

/// Keeps the faces satisfying `keep` and drops unreferenced vertices.
pub fn submesh(mesh: &SurfaceMesh, keep: impl Fn(usize) -> bool) -> SurfaceMesh {
    let mut remap = vec![usize::MAX; mesh.vertex_count()];
    let mut p = Vec::new();
    let mut f = Vec::new();
    for (fi, face) in mesh.faces().iter().enumerate() {
        if !keep(fi) {
            continue;
        }
        let mut out = [0; 3];
        for (c, &v) in face.iter().enumerate() {
            if remap[v] == usize::MAX {
                remap[v] = p.len();
                p.push(mesh.position(v));
            }
            out[c] = remap[v];
        }
        f.push(out);
    }
    build(p, f)
}

/// Spherical cap of a subdivided sphere: faces whose centroid has `z > zcut`.
pub fn sphere_cap(levels: usize, zcut: f64) -> SurfaceMesh {
    let s = icosphere(levels);
    submesh(&s, |f| {
        let [a, b, c] = s.faces()[f];
        (s.position(a).z + s.position(b).z + s.position(c).z) / 3.0 > zcut
    })
}

fn vertex_normals(mesh: &SurfaceMesh) -> Vec<Vec3> {
    let mut n = vec![Vec3::zeros(); mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let fn_ = mesh.face_normal(f);
        for &v in face {
            n[v] += fn_;
        }
    }
    n.into_iter().map(|v| v.normalize()).collect()
}

fn mean_edge_length(mesh: &SurfaceMesh) -> f64 {
    let e = mesh.edges();
    e.iter().map(|&[a, b]| (mesh.position(a) - mesh.position(b)).norm()).sum::<f64>() / e.len() as f64
}

/// Displaces every vertex along its normal by a uniform random amount in
/// `[-amount, amount]` times the mean edge length.
pub fn perturb(mesh: &SurfaceMesh, amount: f64, seed: u64) -> SurfaceMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = mean_edge_length(mesh);
    let normals = vertex_normals(mesh);
    let p = mesh
        .positions()
        .iter()
        .zip(&normals)
        .map(|(x, n)| x + n * (rng.gen_range(-amount..=amount) * h))
        .collect();
    mesh.with_positions(p).expect("same vertex count")
}

/// Moves each vertex within its tangent plane by up to `amount` times the
/// mean edge length, giving an irregular triangulation of the same shape.
/// Positions are re-projected with `project`.
pub fn jitter_tangent(mesh: &SurfaceMesh, amount: f64, seed: u64, project: impl Fn(Vec3) -> Vec3) -> SurfaceMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = mean_edge_length(mesh);
    let normals = vertex_normals(mesh);
    let p = mesh
        .positions()
        .iter()
        .zip(&normals)
        .enumerate()
        .map(|(v, (x, n))| {
            if mesh.is_boundary_vertex(v) {
                return *x;
            }
            let r = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let t = r - n * n.dot(&r);
            project(x + t * (amount * h))
        })
        .collect();
    mesh.with_positions(p).expect("same vertex count")
}

/// Organic closed test shape: an irregularly triangulated sphere with smooth
/// random low-frequency bumps.
pub fn blob(levels: usize, seed: u64) -> SurfaceMesh {
    let base = jitter_tangent(&icosphere(levels), 0.25, seed, |p| p.normalize());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let waves: Vec<(Vec3, f64, f64)> = (0..6)
        .map(|_| {
            let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                .normalize();
            (d, rng.gen_range(1.0..3.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let p = base
        .positions()
        .iter()
        .map(|x| {
            let r: f64 = 1.0 + 0.08 * waves.iter().map(|(d, k, ph)| (k * d.dot(x) * PI + ph).sin()).sum::<f64>();
            x * r
        })
        .collect();
    base.with_positions(p).expect("same vertex count")
}
