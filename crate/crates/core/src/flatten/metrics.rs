//! Layout validity and distortion measures.

use super::Vec2;
use crate::mesh::Vec3;

/// Relative UV area below which a triangle counts as collapsed.
pub const UV_AREA_RATIO: f64 = 1e-12;

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
pub fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// True iff every triangle of every face list is counter-clockwise with area
/// above `1e-12` times the UV bounding-box area.
pub fn check_uv_validity(uv: &[Vec2], patches: &[&[[usize; 3]]]) -> bool {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for patch in patches {
        for f in patch.iter() {
            for &s in f {
                lo = lo.inf(&uv[s]);
                hi = hi.sup(&uv[s]);
            }
        }
    }
    let bbox = (hi.x - lo.x) * (hi.y - lo.y);
    if !(bbox.is_finite() && bbox > 0.0) {
        return false;
    }
    let eps = UV_AREA_RATIO * bbox;
    patches.iter().all(|p| p.iter().all(|f| 0.5 * signed_area(uv[f[0]], uv[f[1]], uv[f[2]]) > eps))
}

/// Ratio of singular values of the rest → UV map of one triangle; infinite
/// for a degenerate UV triangle.
pub fn quasiconformal_distortion(rest: [Vec3; 3], uv: [Vec2; 3]) -> f64 {
    let e1 = rest[1] - rest[0];
    let e2 = rest[2] - rest[0];
    let l1 = e1.norm();
    let n = e1.cross(&e2);
    if l1 == 0.0 || n.norm() == 0.0 {
        return f64::INFINITY;
    }
    let x = e1 / l1;
    let y = n.normalize().cross(&x);
    let rest2 = nalgebra::Matrix2::new(l1, e2.dot(&x), 0.0, e2.dot(&y));
    let d1 = uv[1] - uv[0];
    let d2 = uv[2] - uv[0];
    let img = nalgebra::Matrix2::new(d1.x, d2.x, d1.y, d2.y);
    let Some(inv) = rest2.try_inverse() else { return f64::INFINITY };
    let j = img * inv;
    let (a, b, c, d) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
    let e = (a + d).hypot(c - b);
    let f = (a - d).hypot(c + b);
    let s1 = 0.5 * (e + f);
    let s2 = 0.5 * (e - f).abs();
    if s2 <= 1e-14 * s1 || !s1.is_finite() {
        return f64::INFINITY;
    }
    s1 / s2
}

fn orient(a: Vec2, b: Vec2, c: Vec2, tol: f64) -> i8 {
    let s = signed_area(a, b, c);
    if s > tol {
        1
    } else if s < -tol {
        -1
    } else {
        0
    }
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_touch(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: f64) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c, tol), orient(a, b, d, tol), orient(c, d, a, tol), orient(c, d, b, tol));
    if o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

/// True iff the closed polygon has no self-intersections or fold-backs.
pub fn polygon_is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let diag2 = (hi - lo).norm_squared();
    let tol = 1e-14 * diag2;
    for a in 0..n {
        let (p0, p1) = (poly[a], poly[(a + 1) % n]);
        if (p1 - p0).norm_squared() <= tol {
            return false;
        }
        // adjacent edge must not double back along this one
        let p2 = poly[(a + 2) % n];
        if orient(p0, p1, p2, tol) == 0 && (p0 - p1).dot(&(p2 - p1)) > 0.0 {
            return false;
        }
        for b in (a + 2)..n {
            if a == 0 && b == n - 1 {
                continue;
            }
            if segments_touch(p0, p1, poly[b], poly[(b + 1) % n], tol) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Vec3; 3] {
        [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 0.8, 0.0)]
    }

    fn flat(p: [Vec3; 3]) -> [Vec2; 3] {
        p.map(|q| Vec2::new(q.x, q.y))
    }

    #[test]
    fn distortion_isometry_scale_stretch() {
        let r = tri();
        assert!((quasiconformal_distortion(r, flat(r)) - 1.0).abs() < 1e-12);
        let scaled = flat(r).map(|p| p * 2.0);
        assert!((quasiconformal_distortion(r, scaled) - 1.0).abs() < 1e-12);
        let stretched = flat(r).map(|p| Vec2::new(2.0 * p.x, p.y));
        // singular values of diag(2, 1) are 2 and 1
        assert!((quasiconformal_distortion(r, stretched) - 2.0).abs() < 1e-12);
        let rotated = flat(r).map(|p| Vec2::new(0.6 * p.x - 0.8 * p.y, 0.8 * p.x + 0.6 * p.y));
        assert!((quasiconformal_distortion(r, rotated) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_uv_is_infinite() {
        let r = tri();
        let uv = [Vec2::zeros(), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert!(quasiconformal_distortion(r, uv).is_infinite());
    }

    #[test]
    fn validity_cases() {
        let uv = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)];
        assert!(check_uv_validity(&uv, &[&[[0, 1, 2], [1, 3, 2]]]));
        assert!(!check_uv_validity(&uv, &[&[[0, 1, 2], [1, 2, 3]]]));
        let collapsed = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(!check_uv_validity(&collapsed, &[&[[0, 1, 2], [0, 1, 3]]]));
    }

    #[test]
    fn simple_polygons() {
        let square = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        assert!(polygon_is_simple(&square));
        let bowtie = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(!polygon_is_simple(&bowtie));
        let straight = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 1.0)];
        assert!(polygon_is_simple(&straight));
        let fold = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)];
        assert!(!polygon_is_simple(&fold));
    }
}
