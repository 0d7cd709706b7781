//! Semialgebraic domain descriptions.
//!
//! A domain is an open subset of a ball `B(c, R)` cut out by polynomial
//! constraints. Three constraint shapes cover the geometries that appear
//! in practice:
//!
//! - `Sign`: a polynomial inequality `p < 0`, `p > 0`, or removal of the
//!   full variety `p != 0`;
//! - `Crack`: removal of a variety piece `{p = 0}` clipped to closed
//!   half-spaces, producing slits whose two sides stay connected through
//!   the ambient domain;
//! - `Excluded`: removal of a closed region given by simultaneous
//!   (closed) inequalities, producing reentrant polygonal corners.
//!
//! The spec also bundles the boundary-value problem data here: boundary
//! selectors, coefficient matrix, source, and boundary data fields.

use crate::consts::{EPS_GRAD, EPS_MERGE_REL, EPS_VAL};
use crate::error::Error;
use crate::field::{CoefficientField, ScalarField};
use crate::geom::{self, Pt};
use crate::poly::Polynomial;
use crate::Result;

/// Closed ball region bounding the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Pt,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Pt, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, x: Pt) -> bool {
        geom::dist(x, self.center) < self.radius
    }

    pub fn contains_closed(&self, x: Pt) -> bool {
        geom::dist(x, self.center) <= self.radius
    }

    /// The polynomial `|x - c|^2 - R^2` whose zero set is the sphere.
    pub fn polynomial(&self, dim: usize) -> Polynomial {
        let mut p = Polynomial::constant(dim, -self.radius * self.radius);
        for i in 0..dim {
            let xi = &Polynomial::var(dim, i) - &Polynomial::constant(dim, self.center[i]);
            p = &p + &(&xi * &xi);
        }
        p
    }
}

/// Comparison direction for a polynomial constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Lt,
    Gt,
    Ne,
    Eq,
}

impl Sign {
    /// Strict test used for open-domain membership.
    pub fn holds(self, v: f64) -> bool {
        match self {
            Sign::Lt => v < 0.0,
            Sign::Gt => v > 0.0,
            Sign::Ne => v != 0.0,
            Sign::Eq => v == 0.0,
        }
    }

    /// Closed test used for removed regions and crack clips.
    pub fn holds_closed(self, v: f64) -> bool {
        match self {
            Sign::Lt => v <= 0.0,
            Sign::Gt => v >= 0.0,
            Sign::Ne => true,
            Sign::Eq => v == 0.0,
        }
    }
}

/// One domain constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `poly <sign> 0` must hold at every domain point.
    Sign { poly: Polynomial, sign: Sign },
    /// The set `{poly = 0} ∩ {clips hold (closed)}` is removed.
    Crack {
        poly: Polynomial,
        clip: Vec<(Polynomial, Sign)>,
    },
    /// The closed region where all faces hold is removed.
    Excluded { faces: Vec<(Polynomial, Sign)> },
}

impl Constraint {
    pub fn sign(poly: Polynomial, sign: Sign) -> Self {
        Constraint::Sign { poly, sign }
    }

    fn satisfied(&self, x: Pt) -> bool {
        match self {
            Constraint::Sign { poly, sign } => sign.holds(poly.value(x)),
            Constraint::Crack { poly, clip } => {
                poly.value(x) != 0.0 || !clip.iter().all(|(q, s)| s.holds_closed(q.value(x)))
            }
            Constraint::Excluded { faces } => {
                !faces.iter().all(|(q, s)| s.holds_closed(q.value(x)))
            }
        }
    }

    /// Membership in the closure of the constraint's admissible set.
    /// Cracks vanish under closure; excluded regions shrink to their
    /// interior.
    fn satisfied_closure(&self, x: Pt) -> bool {
        match self {
            Constraint::Sign { poly, sign } => sign.holds_closed(poly.value(x)),
            Constraint::Crack { .. } => true,
            Constraint::Excluded { faces } => {
                if faces.iter().any(|(_, s)| *s == Sign::Eq) {
                    return true;
                }
                !faces.iter().all(|(q, s)| s.holds(q.value(x)))
            }
        }
    }

    /// All polynomials mentioned by this constraint.
    pub fn polynomials(&self) -> Vec<&Polynomial> {
        match self {
            Constraint::Sign { poly, .. } => vec![poly],
            Constraint::Crack { poly, clip } => {
                let mut v = vec![poly];
                v.extend(clip.iter().map(|(q, _)| q));
                v
            }
            Constraint::Excluded { faces } => faces.iter().map(|(q, _)| q).collect(),
        }
    }
}

/// Identifies one boundary piece for tagging and selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceId {
    /// The bounding sphere.
    Ball,
    /// Surface contributed by constraint `i`.
    Constraint(usize),
}

/// Names the boundary pieces carrying a given boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    All,
    None,
    Pieces(Vec<PieceId>),
}

impl Selector {
    pub fn matches(&self, id: PieceId) -> bool {
        match self {
            Selector::All => true,
            Selector::None => false,
            Selector::Pieces(ids) => ids.contains(&id),
        }
    }
}

/// One carrier surface of the domain boundary: a polynomial zero set plus
/// a closure predicate restricting to the active part.
pub struct Surface {
    pub piece: PieceId,
    pub poly: Polynomial,
    /// Closed side conditions (from crack clips or sibling faces);
    /// empty means the whole zero set is active.
    pub closure: Vec<(Polynomial, Sign)>,
}

impl Surface {
    /// Whether `x` satisfies the closure side conditions.
    pub fn within_closure(&self, x: Pt) -> bool {
        self.closure.iter().all(|(q, s)| s.holds_closed(q.value(x)))
    }

    /// Signed tolerance test: `x` lies on this surface piece.
    pub fn on_surface(&self, x: Pt, tol: f64) -> bool {
        self.poly.value(x).abs() <= tol && self.within_closure(x)
    }
}

/// A boundary-value problem on a semialgebraic domain.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub dim: usize,
    pub ball: Ball,
    pub constraints: Vec<Constraint>,
    pub dirichlet: Selector,
    pub neumann: Selector,
    pub operator: CoefficientField,
    /// Volume source `f` in `div(A grad u) = f`.
    pub source: ScalarField,
    /// Dirichlet boundary data `g`.
    pub dirichlet_data: ScalarField,
    /// Neumann boundary data (conormal trace).
    pub neumann_data: ScalarField,
    /// Optional witness point; must lie inside the domain.
    pub seed_point: Option<Pt>,
    /// Points toward which meshes are graded, with grading strengths.
    pub grading: Vec<(Pt, f64)>,
}

impl DomainSpec {
    /// Minimal spec: Laplace operator, zero data, Dirichlet everywhere.
    pub fn new(dim: usize, ball: Ball, constraints: Vec<Constraint>) -> Self {
        DomainSpec {
            dim,
            ball,
            constraints,
            dirichlet: Selector::All,
            neumann: Selector::None,
            operator: CoefficientField::identity(dim),
            source: ScalarField::zero(),
            dirichlet_data: ScalarField::zero(),
            neumann_data: ScalarField::zero(),
            seed_point: None,
            grading: Vec::new(),
        }
    }

    /// Open-set membership: strictly inside the ball and every constraint.
    pub fn contains(&self, x: Pt) -> bool {
        self.ball.contains(x) && self.constraints.iter().all(|c| c.satisfied(x))
    }

    /// Membership in the closure of the domain. Closed-ball and weak-sign
    /// tests; cracks are absorbed, excluded regions count only through
    /// their interior.
    pub fn contains_closure(&self, x: Pt) -> bool {
        self.ball.contains_closed(x) && self.constraints.iter().all(|c| c.satisfied_closure(x))
    }

    /// Enumerates the carrier surfaces of the boundary, constraints first,
    /// bounding sphere last.
    pub fn boundary_surfaces(&self) -> Vec<Surface> {
        let mut out = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            match c {
                Constraint::Sign { poly, .. } => out.push(Surface {
                    piece: PieceId::Constraint(i),
                    poly: poly.clone(),
                    closure: Vec::new(),
                }),
                Constraint::Crack { poly, clip } => out.push(Surface {
                    piece: PieceId::Constraint(i),
                    poly: poly.clone(),
                    closure: clip.clone(),
                }),
                Constraint::Excluded { faces } => {
                    for (j, (q, _)) in faces.iter().enumerate() {
                        let closure: Vec<(Polynomial, Sign)> = faces
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, (f, s))| (f.clone(), *s))
                            .collect();
                        out.push(Surface {
                            piece: PieceId::Constraint(i),
                            poly: q.clone(),
                            closure,
                        });
                    }
                }
            }
        }
        out.push(Surface {
            piece: PieceId::Ball,
            poly: self.ball.polynomial(self.dim),
            closure: Vec::new(),
        });
        out
    }

    /// The boundary condition assigned to a piece.
    pub fn condition_of(&self, id: PieceId) -> Result<BoundaryCondition> {
        let d = self.dirichlet.matches(id);
        let n = self.neumann.matches(id);
        match (d, n) {
            (true, false) => Ok(BoundaryCondition::Dirichlet),
            (false, true) => Ok(BoundaryCondition::Neumann),
            (true, true) => Err(Error::validation(format!(
                "boundary piece {id:?} selected as both Dirichlet and Neumann"
            ))),
            (false, false) => Err(Error::validation(format!(
                "boundary piece {id:?} has no boundary condition"
            ))),
        }
    }

    /// Validates dimensions, selectors, and the witness point.
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::validation(format!("unsupported dimension {}", self.dim)));
        }
        if !(self.ball.radius > 0.0) {
            return Err(Error::validation("ball radius must be positive"));
        }
        if self.dim == 2 && self.ball.center[2] != 0.0 {
            return Err(Error::validation("2D ball center must have zero third coordinate"));
        }
        for c in &self.constraints {
            for p in c.polynomials() {
                if p.dimension() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: p.dimension(),
                    });
                }
                if p.is_zero() {
                    return Err(Error::validation("constraint polynomial is identically zero"));
                }
            }
        }
        if self.operator.dimension() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.operator.dimension(),
            });
        }
        // Every piece must resolve to exactly one condition.
        for (i, _) in self.constraints.iter().enumerate() {
            self.condition_of(PieceId::Constraint(i))?;
        }
        self.condition_of(PieceId::Ball)?;
        if let Some(seed) = self.seed_point {
            if !self.contains(seed) {
                return Err(Error::validation(format!(
                    "seed point ({}, {}, {}) is not inside the domain",
                    seed[0], seed[1], seed[2]
                )));
            }
        }
        for (_, gamma) in &self.grading {
            if !(*gamma >= 1.0) {
                return Err(Error::validation("grading strength must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Boundary condition kind for a tagged piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Conservative lower bound on the distance to a variety `{p = 0}`,
/// valid inside a fixed ball: `|p(x)| / L` with `L` an upper bound for
/// `|grad p|` over the ball. Never exceeds the true distance to
/// `{p = 0} ∩ ball` when that set is nonempty.
pub struct DistanceBound {
    poly: Polynomial,
    lip: f64,
}

impl DistanceBound {
    pub fn new(poly: &Polynomial, region: &Ball) -> Result<Self> {
        let grad = poly.gradient();
        let mut sq = 0.0;
        for g in &grad {
            let b = g.sup_bound_on_ball(region.center, region.radius);
            sq += b * b;
        }
        let lip = sq.sqrt();
        if lip <= 0.0 {
            return Err(Error::ZeroGradientBound);
        }
        Ok(DistanceBound { poly: poly.clone(), lip })
    }

    /// The gradient sup bound used as the Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lip
    }

    pub fn lower_bound(&self, x: Pt) -> f64 {
        self.poly.value(x).abs() / self.lip
    }
}

/// First-order Newton projection of `x0` onto `{p = 0}`.
///
/// Iterates `x <- x - p(x) grad p(x) / |grad p(x)|^2`; returns `None` when
/// the gradient degenerates or the iteration fails to reach
/// `|p| <= tol * scale` within `max_iters`.
pub fn project_to_variety(
    poly: &Polynomial,
    grad: &[Polynomial],
    x0: Pt,
    tol: f64,
    max_iters: usize,
) -> Option<Pt> {
    let scale = poly.max_abs_coef().max(1.0);
    let mut x = x0;
    for _ in 0..max_iters {
        let v = poly.value(x);
        if v.abs() <= tol * scale {
            return Some(x);
        }
        let g = Polynomial::gradient_value(grad, x);
        let g2 = geom::dot(g, g);
        if g2 < 1e-30 {
            return None;
        }
        x = geom::sub(x, geom::scale(g, v / g2));
    }
    if poly.value(x).abs() <= tol * scale {
        Some(x)
    } else {
        None
    }
}

/// Samples the singular locus `{p = 0, grad p = 0}` inside a ball by
/// damped Gauss-Newton from a deterministic seed grid. Returns a finite,
/// de-duplicated point sample (possibly empty); resolution is set by
/// `grid_per_axis` seeds per coordinate.
pub fn singular_points(poly: &Polynomial, region: &Ball, grid_per_axis: usize) -> Vec<Pt> {
    let dim = poly.dimension();
    let grad = poly.gradient();
    let hess: Vec<Vec<Polynomial>> = grad.iter().map(|g| g.gradient()).collect();

    // Residual r = (p, grad p) of length dim + 1; Jacobian rows are grad p
    // and the Hessian rows.
    let residual = |x: Pt| -> Vec<f64> {
        let mut r = vec![poly.value(x)];
        for g in &grad {
            r.push(g.value(x));
        }
        r
    };
    let jacobian = |x: Pt| -> Vec<Pt> {
        let mut rows = vec![Polynomial::gradient_value(&grad, x)];
        for h in &hess {
            rows.push(Polynomial::gradient_value(h, x));
        }
        rows
    };
    let sumsq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut found: Vec<Pt> = Vec::new();
    let n = grid_per_axis.max(2);
    let r = region.radius;
    let c = region.center;
    let steps: Vec<f64> = (0..n)
        .map(|i| -r + 2.0 * r * (i as f64 + 0.5) / n as f64)
        .collect();

    let mut seeds: Vec<Pt> = Vec::new();
    if dim == 2 {
        for &dx in &steps {
            for &dy in &steps {
                seeds.push([c[0] + dx, c[1] + dy, 0.0]);
            }
        }
    } else {
        for &dx in &steps {
            for &dy in &steps {
                for &dz in &steps {
                    seeds.push([c[0] + dx, c[1] + dy, c[2] + dz]);
                }
            }
        }
    }

    for seed in seeds {
        if geom::dist(seed, c) > r {
            continue;
        }
        let mut x = seed;
        let mut mu = 1e-3;
        let mut cost = sumsq(&residual(x));
        for _ in 0..60 {
            let rres = residual(x);
            let jac = jacobian(x);
            // Normal equations J^T J + mu I, J^T r, solved in <= 3 dims.
            let mut a = [[0.0f64; 3]; 3];
            let mut b = [0.0f64; 3];
            for (row, &rv) in jac.iter().zip(rres.iter()) {
                for i in 0..dim {
                    b[i] += row[i] * rv;
                    for j in 0..dim {
                        a[i][j] += row[i] * row[j];
                    }
                }
            }
            for i in 0..dim {
                a[i][i] += mu;
            }
            let delta = match solve_small(&a, &b, dim) {
                Some(d) => d,
                None => break,
            };
            let cand = geom::sub(x, delta);
            let cand_cost = sumsq(&residual(cand));
            if cand_cost < cost {
                x = cand;
                cost = cand_cost;
                mu = (mu * 0.3).max(1e-12);
                if cost < 1e-30 {
                    break;
                }
            } else {
                mu *= 10.0;
                if mu > 1e8 {
                    break;
                }
            }
        }
        let pv = poly.value(x).abs();
        let gv = geom::norm(Polynomial::gradient_value(&grad, x));
        if pv <= EPS_VAL && gv <= EPS_GRAD && geom::dist(x, c) <= r {
            found.push(x);
        }
    }

    // De-duplicate at the merge radius, keeping first-found representatives.
    let merge = EPS_MERGE_REL * region.radius;
    let mut out: Vec<Pt> = Vec::new();
    for p in found {
        if out.iter().all(|q| geom::dist(p, *q) > merge) {
            out.push(p);
        }
    }
    out
}

/// Solves a small (<= 3x3) linear system by Gaussian elimination with
/// partial pivoting. Returns `None` for singular systems.
pub fn solve_small(a: &[[f64; 3]; 3], b: &[f64; 3], dim: usize) -> Option<Pt> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = a[i][j];
        }
        m[i][3] = b[i];
    }
    for col in 0..dim {
        let mut piv = col;
        for row in (col + 1)..dim {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..dim {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            for k in col..=3 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in 0..dim {
        x[i] = m[i][3] / m[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn p3(src: &str) -> Polynomial {
        Polynomial::parse(src, 3).unwrap()
    }

    fn p2(src: &str) -> Polynomial {
        Polynomial::parse(src, 2).unwrap()
    }

    fn cubic_surface_domain() -> DomainSpec {
        DomainSpec::new(
            3,
            Ball::new([0.0; 3], 1.0),
            vec![Constraint::sign(p3("x^3+y^2-z^2*x^2"), Sign::Ne)],
        )
    }

    #[test]
    fn contains_removes_the_variety() {
        let d = cubic_surface_domain();
        assert!(d.contains([0.5, 0.5, 0.0]), "generic interior point");
        assert!(!d.contains([0.0, 0.0, 0.5]), "singular-axis point is removed");
        assert!(!d.contains([1.5, 0.0, 0.0]), "outside the ball");
        assert!(!d.contains([1.0, 0.0, 0.0]), "sphere itself is not inside");
    }

    #[test]
    fn crack_constraint_removes_half_line_only() {
        // Slit disk: remove {y = 0, x >= 0}.
        let slit = Constraint::Crack {
            poly: p2("y"),
            clip: vec![(p2("x"), Sign::Gt)],
        };
        let d = DomainSpec::new(2, Ball::new([0.0; 3], 1.0), vec![slit]);
        assert!(!d.contains([0.5, 0.0, 0.0]), "point on the slit");
        assert!(d.contains([-0.5, 0.0, 0.0]), "diameter beyond the slit stays");
        assert!(d.contains([0.5, 0.2, 0.0]));
        assert!(d.contains([0.5, -0.2, 0.0]));
    }

    #[test]
    fn excluded_region_carves_reentrant_corner() {
        // L-shape: box minus the closed quadrant {x >= 0, y <= 0}.
        let lshape = DomainSpec::new(
            2,
            Ball::new([0.0; 3], 2.0),
            vec![
                Constraint::sign(p2("x - 1"), Sign::Lt),
                Constraint::sign(p2("x + 1"), Sign::Gt),
                Constraint::sign(p2("y - 1"), Sign::Lt),
                Constraint::sign(p2("y + 1"), Sign::Gt),
                Constraint::Excluded {
                    faces: vec![(p2("x"), Sign::Gt), (p2("y"), Sign::Lt)],
                },
            ],
        );
        assert!(lshape.contains([-0.5, -0.5, 0.0]));
        assert!(lshape.contains([0.5, 0.5, 0.0]));
        assert!(lshape.contains([-0.5, 0.5, 0.0]));
        assert!(!lshape.contains([0.5, -0.5, 0.0]), "carved quadrant");
        assert!(!lshape.contains([0.5, 0.0, 0.0]), "leg boundary is closed");
        assert!(!lshape.contains([0.0, -0.5, 0.0]), "leg boundary is closed");
        assert!(!lshape.contains([0.0, 0.0, 0.0]), "reentrant corner point");
    }

    #[test]
    fn distance_bound_is_tight_for_linear_forms() {
        let b = Ball::new([0.0; 3], 1.0);
        let db = DistanceBound::new(&p3("x"), &b).unwrap();
        assert_eq!(db.lower_bound([0.3, 0.0, 0.0]), 0.3);
        assert_eq!(db.lipschitz(), 1.0);
    }

    #[test]
    fn distance_bound_on_circle_is_conservative() {
        // p = x^2 + y^2 - 1 on B(0, 2): exact distance from the origin is 1.
        let b = Ball::new([0.0; 3], 2.0);
        let db = DistanceBound::new(&p2("x^2 + y^2 - 1"), &b).unwrap();
        let bound = db.lower_bound([0.0, 0.0, 0.0]);
        assert!(bound > 0.0 && bound <= 1.0, "bound {bound}");
    }

    #[test]
    fn distance_bound_rejects_constant_polynomials() {
        let b = Ball::new([0.0; 3], 1.0);
        assert!(matches!(
            DistanceBound::new(&p2("1"), &b),
            Err(Error::ZeroGradientBound)
        ));
    }

    #[test]
    fn distance_bound_never_exceeds_sampled_distance() {
        // Oracle: the unit circle and the cusp curve admit exact parametrizations.
        let b = Ball::new([0.0; 3], 2.0);
        let circle = DistanceBound::new(&p2("x^2 + y^2 - 1"), &b).unwrap();
        let cusp = DistanceBound::new(&p2("y^2 - x^3"), &b).unwrap();
        let mut rng = substream(21, &[3]);
        for _ in 0..100 {
            let q = [rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 3.0 - 1.5, 0.0];
            // Circle: exact distance is | |q| - 1 |.
            let d_circle = (geom::norm(q) - 1.0).abs();
            assert!(
                circle.lower_bound(q) <= d_circle + 1e-12,
                "circle bound {} > exact {}",
                circle.lower_bound(q),
                d_circle
            );
            // Cusp: distance to the sampled parametrization (t^2, t^3).
            let mut d_cusp = f64::INFINITY;
            let mut t = -1.3f64;
            while t <= 1.3 {
                let p = [t * t, t * t * t, 0.0];
                d_cusp = d_cusp.min(geom::dist(q, p));
                t += 1e-3;
            }
            assert!(
                cusp.lower_bound(q) <= d_cusp + 1e-6,
                "cusp bound {} > sampled {}",
                cusp.lower_bound(q),
                d_cusp
            );
        }
    }

    #[test]
    fn newton_projection_lands_on_the_circle() {
        let p = p2("x^2 + y^2 - 1");
        let grad = p.gradient();
        let x = project_to_variety(&p, &grad, [1.2, 0.0, 0.0], 1e-12, 50).unwrap();
        assert!((geom::norm(x) - 1.0).abs() < 1e-10);
        let y = project_to_variety(&p, &grad, [0.3, 0.4, 0.0], 1e-12, 50).unwrap();
        assert!((geom::norm(y) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singular_points_of_cubic_surface_sample_the_axis() {
        // p = x^3 + y^2 - z^2 x^2 has singular locus {x = y = 0}. Near the
        // origin the defining equations degenerate to high order, so points
        // within the value/gradient tolerances can sit ~1e-4 off the axis;
        // the geometric assertion is correspondingly looser than the
        // tolerance contract.
        let poly = p3("x^3+y^2-z^2*x^2");
        let grad = poly.gradient();
        let pts = singular_points(&poly, &Ball::new([0.0; 3], 1.0), 9);
        assert!(pts.len() >= 5, "found {} axis samples", pts.len());
        for p in &pts {
            assert!(poly.value(*p).abs() <= EPS_VAL);
            assert!(geom::norm(Polynomial::gradient_value(&grad, *p)) <= EPS_GRAD);
            assert!(p[0].abs() < 2e-3 && p[1].abs() < 2e-3, "off-axis point {p:?}");
            assert!(geom::norm(*p) <= 1.0 + 1e-12);
        }
        // The sample should spread along the axis, not collapse to a point.
        let zmin = pts.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
        let zmax = pts.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
        assert!(zmax - zmin > 0.5, "z-span {}", zmax - zmin);
    }

    #[test]
    fn singular_points_of_crossing_lines_merge_at_origin() {
        let pts = singular_points(&p2("x*y"), &Ball::new([0.0; 3], 1.0), 9);
        assert_eq!(pts.len(), 1, "got {pts:?}");
        assert!(geom::norm(pts[0]) < 1e-7);
    }

    #[test]
    fn smooth_variety_has_no_singular_points() {
        let pts = singular_points(&p2("x^2 + y^2 - 0.25"), &Ball::new([0.0; 3], 1.0), 9);
        assert!(pts.is_empty(), "got {pts:?}");
    }

    #[test]
    fn validate_rejects_conflicting_selectors() {
        let mut d = cubic_surface_domain();
        d.dirichlet = Selector::All;
        d.neumann = Selector::All;
        assert!(d.validate().is_err());
    }

    #[test]
    fn validate_rejects_unassigned_pieces() {
        let mut d = cubic_surface_domain();
        d.dirichlet = Selector::Pieces(vec![PieceId::Constraint(0)]);
        d.neumann = Selector::None;
        assert!(d.validate().is_err(), "ball piece has no condition");
        d.neumann = Selector::Pieces(vec![PieceId::Ball]);
        d.validate().unwrap();
    }

    #[test]
    fn validate_rejects_outside_seed_point() {
        let mut d = cubic_surface_domain();
        d.seed_point = Some([0.0, 0.0, 0.5]);
        assert!(d.validate().is_err(), "seed on the removed variety");
        d.seed_point = Some([0.5, 0.5, 0.0]);
        d.validate().unwrap();
    }

    #[test]
    fn ball_polynomial_vanishes_on_the_sphere() {
        let b = Ball::new([0.5, -0.25, 0.0], 1.5);
        let p = b.polynomial(3);
        let mut rng = substream(4, &[9]);
        for _ in 0..32 {
            let d = geom::unit_dir(3, &mut rng);
            let x = geom::add(b.center, geom::scale(d, b.radius));
            assert!(p.value(x).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_surfaces_cover_constraints_and_ball() {
        let slit = Constraint::Crack {
            poly: p2("y"),
            clip: vec![(p2("x"), Sign::Gt)],
        };
        let d = DomainSpec::new(2, Ball::new([0.0; 3], 1.0), vec![slit]);
        let surfs = d.boundary_surfaces();
        assert_eq!(surfs.len(), 2);
        assert_eq!(surfs[0].piece, PieceId::Constraint(0));
        assert!(surfs[0].on_surface([0.5, 0.0, 0.0], 1e-12));
        assert!(!surfs[0].on_surface([-0.5, 0.0, 0.0], 1e-12), "clipped away");
        assert_eq!(surfs[1].piece, PieceId::Ball);
        assert!(surfs[1].on_surface([0.0, 1.0, 0.0], 1e-12));
    }
}
