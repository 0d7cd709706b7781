//! Small fixed-dimension vector helpers and planar intersection areas.
//!
//! Points live in `[f64; 3]` regardless of ambient dimension; 2D code
//! leaves the last coordinate at zero. This keeps hot loops allocation-free.

use rand::Rng;

/// Point or vector in up to three dimensions.
pub type Pt = [f64; 3];

pub fn add(a: Pt, b: Pt) -> Pt {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Pt, s: f64) -> Pt {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Pt, b: Pt) -> Pt {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Pt) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Pt, b: Pt) -> f64 {
    norm(sub(a, b))
}

/// Normalizes `a`, returning `None` for (near-)zero vectors.
pub fn normalize(a: Pt) -> Option<Pt> {
    let n = norm(a);
    if n < 1e-300 {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Geodesic distance between unit vectors.
pub fn geodesic(a: Pt, b: Pt) -> f64 {
    clamp(dot(a, b), -1.0, 1.0).acos()
}

/// Chord length corresponding to a geodesic angle on the unit sphere.
pub fn chord_of_angle(theta: f64) -> f64 {
    2.0 * (theta / 2.0).sin()
}

/// Uniform direction on the unit sphere of the given ambient dimension
/// (a circle direction for `dim == 2`).
pub fn unit_dir(dim: usize, rng: &mut impl Rng) -> Pt {
    debug_assert!(dim == 2 || dim == 3, "only 2D and 3D are supported");
    if dim == 2 {
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        [phi.cos(), phi.sin(), 0.0]
    } else {
        let z = 1.0 - 2.0 * rng.gen::<f64>();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let s = (1.0 - z * z).max(0.0).sqrt();
        [s * phi.cos(), s * phi.sin(), z]
    }
}

/// Completes a unit vector into an orthonormal pair spanning its
/// orthogonal complement in 3D.
pub fn orthonormal_complement(n: Pt) -> (Pt, Pt) {
    let pick = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = normalize(sub(pick, scale(n, dot(pick, n)))).expect("pick not parallel to n");
    let e2 = cross(n, e1);
    (e1, e2)
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sector_area(u: [f64; 2], v: [f64; 2], r: f64) -> f64 {
    let ang = cross2(u, v).atan2(u[0] * v[0] + u[1] * v[1]);
    0.5 * r * r * ang
}

/// Signed area of the intersection of triangle (origin, a, b) with the
/// disk of radius `r` about the origin. Sign follows the orientation of
/// (a, b) seen from the origin.
fn edge_disk_contrib(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1]).sqrt();
    if na < 1e-300 || nb < 1e-300 {
        return 0.0;
    }
    let a_in = na <= r;
    let b_in = nb <= r;
    if a_in && b_in {
        return 0.5 * cross2(a, b);
    }
    // Segment a + t (b - a); roots of |a + t d|^2 = r^2.
    let d = [b[0] - a[0], b[1] - a[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = a[0] * d[0] + a[1] * d[1];
    let qc = na * na - r * r;
    let disc = qb * qb - qa * qc;
    if a_in {
        // Exits the disk once at the larger root.
        let t = (-qb + disc.max(0.0).sqrt()) / qa;
        let e = [a[0] + t * d[0], a[1] + t * d[1]];
        return 0.5 * cross2(a, e) + sector_area(e, b, r);
    }
    if b_in {
        let t = (-qb - disc.max(0.0).sqrt()) / qa;
        let e = [a[0] + t * d[0], a[1] + t * d[1]];
        return sector_area(a, e, r) + 0.5 * cross2(e, b);
    }
    if disc > 0.0 {
        let s = disc.sqrt();
        let t1 = (-qb - s) / qa;
        let t2 = (-qb + s) / qa;
        if t1 > 0.0 && t2 < 1.0 && t1 < t2 {
            let e1 = [a[0] + t1 * d[0], a[1] + t1 * d[1]];
            let e2 = [a[0] + t2 * d[0], a[1] + t2 * d[1]];
            return sector_area(a, e1, r) + 0.5 * cross2(e1, e2) + sector_area(e2, b, r);
        }
    }
    sector_area(a, b, r)
}

/// Area of the intersection of a triangle with the disk of radius `r`
/// centered at `c`. Exact up to rounding; handles all overlap cases.
pub fn disk_triangle_area(c: [f64; 2], r: f64, tri: [[f64; 2]; 3]) -> f64 {
    let p: Vec<[f64; 2]> = tri.iter().map(|v| [v[0] - c[0], v[1] - c[1]]).collect();
    let total = edge_disk_contrib(p[0], p[1], r)
        + edge_disk_contrib(p[1], p[2], r)
        + edge_disk_contrib(p[2], p[0], r);
    total.abs()
}

/// Area of a triangle from its vertices.
pub fn triangle_area(tri: [[f64; 2]; 3]) -> f64 {
    0.5 * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
        .abs()
}
