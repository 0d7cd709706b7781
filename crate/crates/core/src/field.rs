//! Closed-form scalar fields and matrix coefficient fields.
//!
//! A [`ScalarField`] is an expression tree over a few analytic atoms
//! (polynomials, corner harmonics, radial powers, bumps, linear-phase
//! trigonometric waves) with exact gradient evaluation. These serve as
//! boundary data, sources, manufactured solutions, and test fields.

use std::fmt;

use crate::consts::LAMBDA0_DEFAULT;
use crate::error::Error;
use crate::geom::{self, Pt};
use crate::poly::Polynomial;
use crate::Result;

/// Scalar-valued field with a closed-form gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    /// Constant value (use 0.0 for the zero field).
    Const(f64),
    /// Polynomial with precomputed partial derivatives.
    Poly {
        poly: Polynomial,
        grad: Vec<Polynomial>,
    },
    /// Planar corner harmonic `r^lambda * sin(lambda * phi)` where `phi`
    /// is the angle measured counterclockwise from `theta0`, wrapped to
    /// `[0, 2*pi)`, and `r` the distance to `center`. Harmonic away from
    /// the ray `phi = 0`, vanishing on the rays `phi = 0` and
    /// `phi = pi / lambda`.
    Corner {
        lambda: f64,
        theta0: f64,
        center: [f64; 2],
    },
    /// Radial power `|x - center|^power`.
    Radial { power: f64, center: Pt },
    /// Smooth bump: `exp(1 - 1/(1 - s^2))` with `s = |x - center|/radius`
    /// inside the ball, 0 outside. Equals 1 at the center.
    Bump { radius: f64, center: Pt },
    /// `sin(k . x + phase)`.
    Sin { k: Pt, phase: f64 },
    /// `cos(k . x + phase)`.
    Cos { k: Pt, phase: f64 },
    Sum(Vec<ScalarField>),
    Product(Vec<ScalarField>),
    Scale(f64, Box<ScalarField>),
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Const(0.0)
    }

    /// Wraps a polynomial, precomputing its gradient.
    pub fn poly(p: Polynomial) -> Self {
        let grad = p.gradient();
        ScalarField::Poly { poly: p, grad }
    }

    /// Corner harmonic at the origin with the cut along the positive x-axis.
    pub fn corner(lambda: f64) -> Self {
        ScalarField::Corner { lambda, theta0: 0.0, center: [0.0, 0.0] }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Const(c) if *c == 0.0)
    }

    /// Field value at a point.
    pub fn value(&self, x: Pt) -> f64 {
        match self {
            ScalarField::Const(c) => *c,
            ScalarField::Poly { poly, .. } => poly.value(x),
            ScalarField::Corner { lambda, theta0, center } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                if r < 1e-300 {
                    return 0.0;
                }
                let phi = wrap_angle(dy.atan2(dx) - theta0);
                r.powf(*lambda) * (lambda * phi).sin()
            }
            ScalarField::Radial { power, center } => {
                let r = geom::dist(x, *center);
                if r < 1e-300 {
                    0.0
                } else {
                    r.powf(*power)
                }
            }
            ScalarField::Bump { radius, center } => {
                let s2 = geom::dist(x, *center).powi(2) / (radius * radius);
                if s2 >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s2)).exp()
                }
            }
            ScalarField::Sin { k, phase } => (geom::dot(*k, x) + phase).sin(),
            ScalarField::Cos { k, phase } => (geom::dot(*k, x) + phase).cos(),
            ScalarField::Sum(fs) => fs.iter().map(|f| f.value(x)).sum(),
            ScalarField::Product(fs) => fs.iter().map(|f| f.value(x)).product(),
            ScalarField::Scale(s, f) => s * f.value(x),
        }
    }

    /// Gradient at a point (closed form, no differencing).
    pub fn grad(&self, x: Pt) -> Pt {
        match self {
            ScalarField::Const(_) => [0.0; 3],
            ScalarField::Poly { grad, .. } => Polynomial::gradient_value(grad, x),
            ScalarField::Corner { lambda, theta0, center } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                if r < 1e-300 {
                    return [0.0; 3];
                }
                let theta = dy.atan2(dx);
                let phi = wrap_angle(theta - theta0);
                let m = lambda * r.powf(lambda - 1.0);
                let (sl, cl) = (lambda * phi).sin_cos();
                let (st, ct) = theta.sin_cos();
                // radial direction (ct, st), angular direction (-st, ct)
                [m * (sl * ct - cl * st), m * (sl * st + cl * ct), 0.0]
            }
            ScalarField::Radial { power, center } => {
                let d = geom::sub(x, *center);
                let r = geom::norm(d);
                if r < 1e-300 {
                    return [0.0; 3];
                }
                geom::scale(d, power * r.powf(power - 2.0))
            }
            ScalarField::Bump { radius, center } => {
                let d = geom::sub(x, *center);
                let s2 = geom::dot(d, d) / (radius * radius);
                if s2 >= 1.0 {
                    return [0.0; 3];
                }
                let b = (1.0 - 1.0 / (1.0 - s2)).exp();
                let q = 1.0 - s2;
                geom::scale(d, -2.0 * b / (q * q * radius * radius))
            }
            ScalarField::Sin { k, phase } => {
                geom::scale(*k, (geom::dot(*k, x) + phase).cos())
            }
            ScalarField::Cos { k, phase } => {
                geom::scale(*k, -(geom::dot(*k, x) + phase).sin())
            }
            ScalarField::Sum(fs) => {
                let mut g = [0.0; 3];
                for f in fs {
                    g = geom::add(g, f.grad(x));
                }
                g
            }
            ScalarField::Product(fs) => {
                let vals: Vec<f64> = fs.iter().map(|f| f.value(x)).collect();
                let mut g = [0.0; 3];
                for (i, f) in fs.iter().enumerate() {
                    let mut rest = 1.0;
                    for (j, v) in vals.iter().enumerate() {
                        if j != i {
                            rest *= v;
                        }
                    }
                    g = geom::add(g, geom::scale(f.grad(x), rest));
                }
                g
            }
            ScalarField::Scale(s, f) => geom::scale(f.grad(x), *s),
        }
    }
}

/// Wraps an angle into `[0, 2*pi)`.
fn wrap_angle(t: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut a = t % tau;
    if a < 0.0 {
        a += tau;
    }
    a
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Const(c) if *c == 0.0 => write!(f, "zero"),
            ScalarField::Const(c) => write!(f, "const {c}"),
            ScalarField::Poly { poly, .. } => write!(f, "poly {poly}"),
            ScalarField::Corner { lambda, theta0, center } => {
                if *theta0 == 0.0 && center == &[0.0, 0.0] {
                    write!(f, "corner {lambda}")
                } else {
                    write!(f, "corner {lambda} {theta0} {} {}", center[0], center[1])
                }
            }
            ScalarField::Radial { power, center } => {
                write!(f, "radial {power} {} {} {}", center[0], center[1], center[2])
            }
            ScalarField::Bump { radius, center } => {
                write!(f, "bump {radius} {} {} {}", center[0], center[1], center[2])
            }
            ScalarField::Sin { k, phase } => write!(f, "sin({:?}, {phase})", k),
            ScalarField::Cos { k, phase } => write!(f, "cos({:?}, {phase})", k),
            ScalarField::Sum(fs) => {
                write!(f, "sum(")?;
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            ScalarField::Product(fs) => {
                write!(f, "product(")?;
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            ScalarField::Scale(s, x) => write!(f, "scale({s}, {x})"),
        }
    }
}

/// Symmetric matrix coefficient field `A(x)` with an ellipticity floor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    dim: usize,
    /// Row-major entries; construction enforces symmetry.
    entries: Vec<ScalarField>,
    lambda0: f64,
}

impl CoefficientField {
    /// The identity coefficient field (the Laplace operator).
    pub fn identity(dim: usize) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(ScalarField::Const(if i == j { 1.0 } else { 0.0 }));
            }
        }
        CoefficientField { dim, entries, lambda0: LAMBDA0_DEFAULT }
    }

    /// Builds from row-major entries; rejects syntactically asymmetric input.
    pub fn new(dim: usize, entries: Vec<ScalarField>, lambda0: f64) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::validation(format!(
                "coefficient field needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if lambda0 <= 0.0 {
            return Err(Error::validation("ellipticity floor must be positive"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::validation(format!(
                        "coefficient entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(CoefficientField { dim, entries, lambda0 })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim + j]
    }

    pub fn is_identity(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { 1.0 } else { 0.0 };
                match self.entry(i, j) {
                    ScalarField::Const(c) if *c == want => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Evaluates the matrix at a point (row-major, `dim x dim`).
    pub fn value(&self, x: Pt) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.entry(i, j).value(x);
            }
        }
        m
    }

    /// Smallest eigenvalue of the (symmetric) matrix at a point.
    pub fn min_eigenvalue(&self, x: Pt) -> f64 {
        let m = self.value(x);
        min_eig_sym(&m, self.dim)
    }

    /// Checks the ellipticity floor at a point.
    pub fn check_ellipticity(&self, x: Pt) -> Result<()> {
        let e = self.min_eigenvalue(x);
        if e < self.lambda0 {
            return Err(Error::Numerical(format!(
                "ellipticity violated at ({:.4}, {:.4}, {:.4}): min eigenvalue {:.3e} < {:.3e}",
                x[0], x[1], x[2], e, self.lambda0
            )));
        }
        Ok(())
    }
}

/// Smallest eigenvalue of a symmetric matrix of size `dim` (2 or 3),
/// computed by cyclic Jacobi rotations.
pub fn min_eig_sym(m: &[[f64; 3]; 3], dim: usize) -> f64 {
    if dim == 2 {
        let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        return mid - rad;
    }
    let mut a = *m;
    for _ in 0..24 {
        // Largest off-diagonal element.
        let mut p = 0;
        let mut q = 1;
        let mut big = 0.0f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big < 1e-14 {
            break;
        }
        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = theta.sin_cos();
        let mut b = a;
        for k in 0..3 {
            b[p][k] = c * a[p][k] - s * a[q][k];
            b[q][k] = s * a[p][k] + c * a[q][k];
        }
        let t = b;
        for k in 0..3 {
            b[k][p] = c * t[k][p] - s * t[k][q];
            b[k][q] = s * t[k][p] + c * t[k][q];
        }
        a = b;
    }
    a[0][0].min(a[1][1]).min(a[2][2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use std::f64::consts::PI;

    fn fd_grad(f: &ScalarField, x: Pt, h: f64) -> Pt {
        let mut g = [0.0; 3];
        for i in 0..3 {
            let mut lo = x;
            let mut hi = x;
            lo[i] -= h;
            hi[i] += h;
            g[i] = (f.value(hi) - f.value(lo)) / (2.0 * h);
        }
        g
    }

    fn assert_grad_consistent(f: &ScalarField, x: Pt, tol: f64) {
        let an = f.grad(x);
        let fd = fd_grad(f, x, 1e-6);
        for i in 0..3 {
            assert!(
                (an[i] - fd[i]).abs() < tol,
                "component {i}: closed form {} vs fd {} at {:?} for {f}",
                an[i],
                fd[i],
                x
            );
        }
    }

    #[test]
    fn corner_harmonic_matches_polar_formula() {
        let f = ScalarField::corner(0.5);
        for (r, th) in [(0.5, 0.3), (1.2, 2.0), (0.8, 4.5), (0.3, 6.0)] {
            let x = [r * f64::cos(th), r * f64::sin(th), 0.0];
            let want = r.sqrt() * (th / 2.0).sin();
            assert!((f.value(x) - want).abs() < 1e-12, "at r={r}, th={th}");
        }
    }

    #[test]
    fn corner_harmonic_vanishes_on_both_crack_sides() {
        let f = ScalarField::corner(0.5);
        assert_eq!(f.value([0.7, 0.0, 0.0]), 0.0);
        // Just below the cut the angle wraps to ~2*pi, where sin(phi/2) ~ 0.
        let below = f.value([0.7, -1e-12, 0.0]);
        assert!(below.abs() < 1e-9, "below-cut value {below}");
    }

    #[test]
    fn corner_harmonic_is_harmonic_off_the_cut() {
        // Five-point finite-difference Laplacian should be ~0: this checks
        // the atom against the defining property rather than its own code.
        let f = ScalarField::corner(2.0 / 3.0);
        let h = 1e-4;
        for (r, th) in [(0.6, 1.0), (0.9, 3.0), (0.4, 5.5)] {
            let x = [r * f64::cos(th), r * f64::sin(th), 0.0];
            let lap = (f.value([x[0] + h, x[1], 0.0])
                + f.value([x[0] - h, x[1], 0.0])
                + f.value([x[0], x[1] + h, 0.0])
                + f.value([x[0], x[1] - h, 0.0])
                - 4.0 * f.value(x))
                / (h * h);
            assert!(lap.abs() < 1e-4, "laplacian {lap} at r={r}, th={th}");
        }
    }

    #[test]
    fn inverse_radius_is_harmonic_in_3d() {
        let f = ScalarField::Radial { power: -1.0, center: [0.0; 3] };
        let h = 1e-4;
        let x = [0.5, -0.3, 0.7];
        let mut lap = -6.0 * f.value(x);
        for i in 0..3 {
            let mut hi = x;
            let mut lo = x;
            hi[i] += h;
            lo[i] -= h;
            lap += f.value(hi) + f.value(lo);
        }
        lap /= h * h;
        assert!(lap.abs() < 1e-4, "laplacian {lap}");
    }

    #[test]
    fn bump_has_compact_support_and_unit_peak() {
        let f = ScalarField::Bump { radius: 0.8, center: [0.0; 3] };
        assert_eq!(f.value([0.0; 3]), 1.0);
        assert_eq!(f.value([0.81, 0.0, 0.0]), 0.0);
        assert_eq!(f.grad([0.9, 0.0, 0.0]), [0.0; 3]);
        assert!(f.value([0.5, 0.0, 0.0]) > 0.0);
    }

    #[test]
    fn gradients_match_finite_differences_for_all_atoms() {
        let p = Polynomial::parse("x^3+y^2-z^2*x^2", 3).unwrap();
        let atoms: Vec<ScalarField> = vec![
            ScalarField::Const(2.5),
            ScalarField::poly(p.clone()),
            ScalarField::Radial { power: -1.0, center: [0.1, 0.0, -0.2] },
            ScalarField::Radial { power: 1.7, center: [0.0; 3] },
            ScalarField::Bump { radius: 0.9, center: [0.0; 3] },
            ScalarField::Sin { k: [0.0, 1.0, 0.0], phase: 0.0 },
            ScalarField::Cos { k: [1.0, 0.0, 0.0], phase: 0.2 },
            ScalarField::Product(vec![
                ScalarField::poly(p),
                ScalarField::Bump { radius: 0.9, center: [0.0; 3] },
            ]),
            ScalarField::Sum(vec![
                ScalarField::Sin { k: [0.3, 0.4, 0.0], phase: 1.0 },
                ScalarField::Const(1.0),
            ]),
            ScalarField::Scale(-2.0, Box::new(ScalarField::Cos { k: [0.5, 0.0, 0.5], phase: 0.0 })),
        ];
        let mut rng = substream(11, &[1]);
        for f in &atoms {
            for _ in 0..20 {
                let x = [
                    rng.gen::<f64>() * 0.8 - 0.4,
                    rng.gen::<f64>() * 0.8 - 0.4,
                    rng.gen::<f64>() * 0.8 - 0.4,
                ];
                assert_grad_consistent(f, x, 1e-5);
            }
        }
    }

    #[test]
    fn corner_gradient_matches_finite_differences_off_the_cut() {
        let f = ScalarField::corner(0.5);
        let mut rng = substream(12, &[2]);
        for _ in 0..50 {
            let r = 0.2 + 0.8 * rng.gen::<f64>();
            let th = 0.1 + (2.0 * PI - 0.2) * rng.gen::<f64>();
            let x = [r * th.cos(), r * th.sin(), 0.0];
            assert_grad_consistent(&f, x, 1e-5);
        }
    }

    #[test]
    fn corner_gradient_magnitude_is_radially_symmetric() {
        // |grad(r^l sin(l phi))| = l r^{l-1}, independent of angle.
        let f = ScalarField::corner(0.5);
        for th in [0.3, 1.0, 2.5, 4.0, 5.9] {
            let r = 0.49;
            let g = f.grad([r * f64::cos(th), r * f64::sin(th), 0.0]);
            let want = 0.5 * r.powf(-0.5);
            assert!((crate::geom::norm(g) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_coefficients_are_elliptic() {
        let a = CoefficientField::identity(2);
        assert!(a.is_identity());
        assert!((a.min_eigenvalue([0.3, 0.4, 0.0]) - 1.0).abs() < 1e-14);
        a.check_ellipticity([0.3, 0.4, 0.0]).unwrap();
    }

    #[test]
    fn min_eigenvalue_2d_closed_form() {
        let a = CoefficientField::new(
            2,
            vec![
                ScalarField::Const(2.0),
                ScalarField::Const(0.5),
                ScalarField::Const(0.5),
                ScalarField::Const(1.0),
            ],
            1e-6,
        )
        .unwrap();
        let want = 1.5 - (0.25f64 + 0.25).sqrt();
        assert!((a.min_eigenvalue([0.0; 3]) - want).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_entries_are_rejected() {
        let e = CoefficientField::new(
            2,
            vec![
                ScalarField::Const(1.0),
                ScalarField::Const(0.5),
                ScalarField::Const(-0.5),
                ScalarField::Const(1.0),
            ],
            1e-6,
        )
        .unwrap_err();
        assert!(e.to_string().contains("differ"));
    }

    #[test]
    fn ellipticity_violation_is_detected() {
        let a = CoefficientField::new(
            2,
            vec![
                ScalarField::Const(1.0),
                ScalarField::Const(2.0),
                ScalarField::Const(2.0),
                ScalarField::Const(1.0),
            ],
            1e-6,
        )
        .unwrap();
        assert!(a.check_ellipticity([0.0; 3]).is_err());
    }

    #[test]
    fn min_eig_3x3_matches_characteristic_polynomial() {
        let m = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]];
        let lam = min_eig_sym(&m, 3);
        // Residual of det(M - lam I) should vanish.
        let d = |l: f64| {
            let a = [
                [m[0][0] - l, m[0][1], m[0][2]],
                [m[1][0], m[1][1] - l, m[1][2]],
                [m[2][0], m[2][1], m[2][2] - l],
            ];
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        assert!(d(lam).abs() < 1e-9, "det residual {}", d(lam));
        // And it is the smallest: Rayleigh quotients stay above it.
        let mut rng = substream(9, &[5]);
        for _ in 0..200 {
            let v = crate::geom::unit_dir(3, &mut rng);
            let mut q = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    q += v[i] * m[i][j] * v[j];
                }
            }
            assert!(q >= lam - 1e-9);
        }
    }
}
