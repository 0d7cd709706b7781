//! Local gradient integrability measurements near boundary
//! singularities: dyadic annulus mass profiles, log-log scaling fits,
//! critical exponent estimation, slice Poincare ratios near strata, and
//! distance-weighted gradient norms.

use crate::cone::StratumSpec;
use crate::consts::{
    ANNULUS_DROP_INNER, ANNULUS_LEVELS, ANNULUS_R0_REL, ANNULUS_SAMPLES, ANNULUS_WOS_DISCARD,
    BETA_POSITIVE_MARGIN, FIT_MIN_R2, P_GRID_END, P_GRID_START, P_GRID_STEP, SLICE_GRID_3D,
    SLICE_SAMPLES_2D, WOS_GRAD_STEP_REL,
};
use crate::domain::DomainSpec;
use crate::error::Error;
use crate::fem::{MeshLocator, SolutionField};
use crate::field::ScalarField;
use crate::geom::{self, Pt};
use crate::rng::{self, stream};
use crate::wos::{wos_gradient, WosConfig};
use crate::Result;
use rand::Rng;
use std::f64::consts::PI;

/// The exponent grid {2, 2.25, ..., 8} scanned for critical exponents.
pub fn p_grid() -> Vec<f64> {
    let mut out = Vec::new();
    let mut p = P_GRID_START;
    while p <= P_GRID_END + 1e-12 {
        out.push(p);
        p += P_GRID_STEP;
    }
    out
}

/// Shape of an annulus profile: outermost radius, dyadic level count,
/// exponent list, and the per-annulus budget for sampled profiles.
#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub r0: f64,
    pub levels: usize,
    pub p_values: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl ProfileSpec {
    /// Default shape for a domain: the outermost radius is a quarter of
    /// the bounding ball radius, with the full exponent grid.
    pub fn for_domain(domain: &DomainSpec) -> ProfileSpec {
        ProfileSpec {
            r0: ANNULUS_R0_REL * domain.ball.radius,
            levels: ANNULUS_LEVELS,
            p_values: p_grid(),
            samples: ANNULUS_SAMPLES,
            seed: 0,
        }
    }
}

/// How a profile's masses were computed; decides which annuli the
/// scaling fit drops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Per-triangle quadrature, exact for piecewise linear fields. The
    /// innermost annuli sit at the mesh resolution floor and are
    /// excluded from fits.
    FemExact,
    /// Stratified Monte-Carlo over spherical shells. Annuli whose
    /// low-confidence sample fraction exceeds the discard threshold are
    /// excluded from fits.
    Sampled,
}

/// Dyadic table of local gradient masses: `mass[j][ip]` integrates
/// `|grad u|^p_values[ip]` over the annulus between `radii[j + 1]` and
/// `radii[j]` around `center`.
#[derive(Debug, Clone)]
pub struct AnnulusProfile {
    pub center: Pt,
    /// Annulus edges r0 * 2^-j; length levels + 1.
    pub radii: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Row per annulus, column per exponent.
    pub mass: Vec<Vec<f64>>,
    /// False when the annulus carries no quadrature support inside the
    /// domain.
    pub support: Vec<bool>,
    /// True for annuli excluded from scaling fits.
    pub discarded: Vec<bool>,
    pub kind: ProfileKind,
}

fn validate_profile_spec(spec: &ProfileSpec) -> Result<()> {
    if !spec.r0.is_finite() || spec.r0 <= 0.0 {
        return Err(Error::validation("profile radius r0 must be positive"));
    }
    if spec.levels == 0 {
        return Err(Error::validation("profile needs at least one annulus level"));
    }
    if spec.p_values.is_empty() {
        return Err(Error::validation("profile needs at least one exponent"));
    }
    if spec.p_values.iter().any(|p| !p.is_finite() || *p < 1.0) {
        return Err(Error::validation("profile exponents must be finite and at least 1"));
    }
    if spec.p_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("profile exponents must be strictly increasing"));
    }
    Ok(())
}

fn dyadic_edges(spec: &ProfileSpec) -> Vec<f64> {
    (0..=spec.levels).map(|j| spec.r0 * 0.5f64.powi(j as i32)).collect()
}

/// Annulus gradient masses of a finite element field around `t`, by
/// per-triangle quadrature. Exact for the piecewise linear field: the
/// gradient is constant per triangle and the annulus-triangle
/// intersection areas have closed forms.
pub fn annulus_profile(u: &SolutionField, t: Pt, spec: &ProfileSpec) -> Result<AnnulusProfile> {
    validate_profile_spec(spec)?;
    let c2 = [t[0], t[1]];
    let edges = dyadic_edges(spec);
    let np = spec.p_values.len();
    let mut mass = vec![vec![0.0; np]; spec.levels];
    let mut area = vec![0.0; spec.levels];
    for tri_id in 0..u.mesh.triangles.len() {
        let tri = u.mesh.triangle_points(tri_id);
        let g = u.gradients[tri_id];
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let disk: Vec<f64> =
            edges.iter().map(|&r| geom::disk_triangle_area(c2, r, tri)).collect();
        for j in 0..spec.levels {
            let a = (disk[j] - disk[j + 1]).max(0.0);
            if a == 0.0 {
                continue;
            }
            area[j] += a;
            for (ip, &p) in spec.p_values.iter().enumerate() {
                mass[j][ip] += gn.powf(p) * a;
            }
        }
    }
    let support: Vec<bool> =
        (0..spec.levels).map(|j| area[j] > 1e-12 * edges[j] * edges[j]).collect();
    let mut discarded = vec![false; spec.levels];
    for j in spec.levels.saturating_sub(ANNULUS_DROP_INNER)..spec.levels {
        discarded[j] = true;
    }
    Ok(AnnulusProfile {
        center: t,
        radii: edges,
        p_values: spec.p_values.clone(),
        mass,
        support,
        discarded,
        kind: ProfileKind::FemExact,
    })
}

/// Annulus gradient masses by stratified Monte-Carlo over spherical
/// shells, for 3D fields known only through a sampled gradient. The
/// evaluator returns `None` for low-confidence samples; annuli where
/// those exceed the discard fraction are excluded from fits. Samples
/// falling outside the domain extend the integrand by zero.
pub fn annulus_profile_sampled(
    domain: &DomainSpec,
    gradient: &dyn Fn(Pt) -> Option<Pt>,
    t: Pt,
    spec: &ProfileSpec,
) -> Result<AnnulusProfile> {
    validate_profile_spec(spec)?;
    if domain.dim != 3 {
        return Err(Error::validation("sampled profiles expect a 3-dimensional domain"));
    }
    if spec.samples < 2 {
        return Err(Error::validation("sampled profiles need at least 2 samples per annulus"));
    }
    let edges = dyadic_edges(spec);
    let np = spec.p_values.len();
    let mut mass = vec![vec![0.0; np]; spec.levels];
    let mut support = vec![false; spec.levels];
    let mut discarded = vec![false; spec.levels];
    for j in 0..spec.levels {
        let (rhi, rlo) = (edges[j], edges[j + 1]);
        let shell_vol = 4.0 / 3.0 * PI * (rhi.powi(3) - rlo.powi(3));
        let mut rng = rng::substream(spec.seed, &[stream::ANNULUS, j as u64]);
        let mut inside = 0usize;
        let mut low = 0usize;
        let mut sums = vec![0.0; np];
        for i in 0..spec.samples {
            // Radius stratified uniformly in shell volume.
            let u01 = (i as f64 + rng.gen::<f64>()) / spec.samples as f64;
            let r = (rlo.powi(3) + u01 * (rhi.powi(3) - rlo.powi(3))).cbrt();
            let x = geom::add(t, geom::scale(geom::unit_dir(3, &mut rng), r));
            if !domain.contains(x) {
                continue;
            }
            inside += 1;
            match gradient(x) {
                None => low += 1,
                Some(g) => {
                    let gn = geom::norm(g);
                    for (ip, &p) in spec.p_values.iter().enumerate() {
                        sums[ip] += gn.powf(p);
                    }
                }
            }
        }
        let valid = inside - low;
        support[j] = inside > 0;
        if valid > 0 {
            // Low-confidence samples take the mean of the confident
            // ones: mass = volume x inside fraction x confident mean.
            let scale = shell_vol * (inside as f64 / spec.samples as f64) / valid as f64;
            for ip in 0..np {
                mass[j][ip] = sums[ip] * scale;
            }
        }
        discarded[j] = !support[j] || (low as f64) > ANNULUS_WOS_DISCARD * inside as f64;
    }
    Ok(AnnulusProfile {
        center: t,
        radii: edges,
        p_values: spec.p_values.clone(),
        mass,
        support,
        discarded,
        kind: ProfileKind::Sampled,
    })
}

/// Adapts a walk-on-spheres configuration into a sampled gradient
/// evaluator for profiles. Estimates whose combined noise exceeds half
/// the gradient magnitude, and estimates whose walks fail outright,
/// come back low-confidence. Per-axis flags are ignored here: a
/// near-zero component flags on its own scale even when the vector it
/// belongs to is sharp.
pub fn wos_gradient_source(cfg: &WosConfig) -> impl Fn(Pt) -> Option<Pt> + '_ {
    let step = WOS_GRAD_STEP_REL * cfg.domain.ball.radius;
    move |x| match wos_gradient(cfg, x, step) {
        Ok(g) => {
            let noise =
                (g.stderr[0] * g.stderr[0] + g.stderr[1] * g.stderr[1] + g.stderr[2] * g.stderr[2])
                    .sqrt();
            (noise <= 0.5 * geom::norm(g.value)).then_some(g.value)
        }
        Err(_) => None,
    }
}

/// Least-squares scaling fit of one exponent column of a profile.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    /// Slope of log mass against log radius.
    pub slope: f64,
    /// Squared correlation of the fit.
    pub r2: f64,
    /// True when the fit quality falls below the trust threshold.
    pub low_confidence: bool,
    /// Number of annuli entering the fit.
    pub points: usize,
}

/// Fits log mass against log radius over the usable annuli (supported,
/// not discarded, positive mass) for the exponent `p`, which must be on
/// the profile's grid.
pub fn fit_scaling_exponent(profile: &AnnulusProfile, p: f64) -> Result<ScalingFit> {
    let ip = profile
        .p_values
        .iter()
        .position(|&q| (q - p).abs() < 1e-9)
        .ok_or_else(|| Error::validation(format!("exponent {p} is not on the profile grid")))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..profile.mass.len() {
        if !profile.support[j] || profile.discarded[j] {
            continue;
        }
        let m = profile.mass[j][ip];
        if m > 0.0 && m.is_finite() {
            xs.push(profile.radii[j].ln());
            ys.push(m.ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::validation(format!(
            "{} usable annuli for a scaling fit; need at least 4",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy <= 1e-24 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit { slope, r2, low_confidence: r2 < FIT_MIN_R2, points: xs.len() })
}

/// Critical integrability estimate from a profile over the exponent
/// grid.
#[derive(Debug, Clone, Copy)]
pub struct CriticalEstimate {
    /// Zero crossing of the scaling slope; `None` when the local mass
    /// still converges at the top of the grid (unbounded exponent).
    pub p_star: Option<f64>,
    /// Slope threshold for the unbounded decision, echoed for reports.
    pub margin: f64,
    /// Minimum fit quality among the slopes used.
    pub confidence: f64,
    /// Fitted slope at the largest trusted exponent.
    pub tail_slope: f64,
}

/// Estimates the critical integrability exponent: the exponent where
/// the scaling slope crosses zero, found by linear interpolation over
/// the trusted slopes of the grid. A tail slope above the margin means
/// the gradient mass still converges at the top of the grid and no
/// finite estimate is reported.
pub fn critical_exponent(profile: &AnnulusProfile) -> Result<CriticalEstimate> {
    if profile.p_values.len() < 2 {
        return Err(Error::validation("critical exponent scan needs at least 2 exponents"));
    }
    if profile.p_values[0] > P_GRID_START + 1e-9 {
        return Err(Error::validation(format!(
            "exponent grid must start at {P_GRID_START} to bracket the crossing"
        )));
    }
    let mut used: Vec<(f64, f64, f64)> = Vec::new();
    for &p in &profile.p_values {
        let fit = fit_scaling_exponent(profile, p)?;
        if !fit.low_confidence {
            used.push((p, fit.slope, fit.r2));
        }
    }
    if used.is_empty() {
        return Err(Error::Numerical(
            "every scaling fit fell below the trust threshold; no critical exponent estimate"
                .into(),
        ));
    }
    let confidence = used.iter().map(|u| u.2).fold(f64::INFINITY, f64::min);
    let (tail_p, tail_slope, _) = *used.last().unwrap();
    if tail_slope > BETA_POSITIVE_MARGIN {
        return Ok(CriticalEstimate {
            p_star: None,
            margin: BETA_POSITIVE_MARGIN,
            confidence,
            tail_slope,
        });
    }
    let mut p_star = None;
    for w in used.windows(2) {
        let (p0, b0, _) = w[0];
        let (p1, b1, _) = w[1];
        if b0 > 0.0 && b1 <= 0.0 {
            p_star = Some(p0 + (p1 - p0) * b0 / (b0 - b1));
            break;
        }
    }
    let p_star = p_star.unwrap_or_else(|| {
        if used[0].1 <= 0.0 {
            // Mass divergent already at the bottom of the grid; the
            // estimate saturates there.
            used[0].0
        } else if used.len() >= 2 {
            // Slope positive across the grid but within the margin at
            // the top: extrapolate the final segment to its crossing.
            let (p0, b0, _) = used[used.len() - 2];
            let (p1, b1, _) = used[used.len() - 1];
            if b0 > b1 {
                p1 + (p1 - p0) * b1 / (b0 - b1)
            } else {
                tail_p
            }
        } else {
            tail_p
        }
    });
    Ok(CriticalEstimate {
        p_star: Some(p_star),
        margin: BETA_POSITIVE_MARGIN,
        confidence,
        tail_slope,
    })
}

/// Tube width along a stratum: a constant, or values sampled uniformly
/// over the stratum parameter and interpolated linearly.
#[derive(Debug, Clone)]
pub enum TubeWidth {
    Const(f64),
    Along(Vec<f64>),
}

impl TubeWidth {
    /// Width at stratum parameter `s` in [0, 1].
    pub fn at(&self, s: f64) -> f64 {
        match self {
            TubeWidth::Const(d) => *d,
            TubeWidth::Along(v) => {
                if v.len() == 1 {
                    return v[0];
                }
                let x = s.clamp(0.0, 1.0) * (v.len() - 1) as f64;
                let i = (x.floor() as usize).min(v.len() - 2);
                let f = x - i as f64;
                v[i] * (1.0 - f) + v[i + 1] * f
            }
        }
    }

    fn max_width(&self) -> f64 {
        match self {
            TubeWidth::Const(d) => *d,
            TubeWidth::Along(v) => v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            TubeWidth::Const(d) => *d > 0.0,
            TubeWidth::Along(v) => !v.is_empty() && v.iter().all(|&d| d > 0.0),
        }
    }
}

/// Slice family near a stratum: offsets, tube width, and exponent.
#[derive(Debug, Clone)]
pub struct SliceSpec {
    pub stratum: StratumSpec,
    pub width: TubeWidth,
    /// Strictly decreasing slice offsets, each below the tube width.
    pub etas: Vec<f64>,
    pub p: f64,
    pub seed: u64,
}

/// One slice measurement: the field norm on the slice, the gradient
/// norm of the matching inequality side, and their ratio.
#[derive(Debug, Clone, Copy)]
pub struct SliceRow {
    pub eta: f64,
    pub num: f64,
    pub den: f64,
    /// `None` when the denominator vanishes (degenerate ratio).
    pub ratio: Option<f64>,
}

/// A field with gradients: a finite element solution (2D) or a
/// closed-form expression (any dimension).
pub enum FieldSource<'a> {
    Fem(&'a SolutionField),
    Closed(&'a ScalarField),
}

fn value_at(u: &FieldSource, loc: Option<&MeshLocator>, x: Pt) -> Option<f64> {
    match u {
        FieldSource::Fem(f) => f.value_with(loc.unwrap(), [x[0], x[1]]),
        FieldSource::Closed(f) => Some(f.value(x)),
    }
}

fn grad_norm_at(u: &FieldSource, loc: Option<&MeshLocator>, x: Pt) -> Option<f64> {
    match u {
        FieldSource::Fem(f) => f
            .gradient_with(loc.unwrap(), [x[0], x[1]])
            .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt()),
        FieldSource::Closed(f) => Some(geom::norm(f.grad(x))),
    }
}

fn orthonormal_frame(dir: Pt) -> (Pt, Pt) {
    let d = geom::normalize(dir).unwrap_or([0.0, 0.0, 1.0]);
    let pick = if d[0].abs() <= d[1].abs() && d[0].abs() <= d[2].abs() {
        [1.0, 0.0, 0.0]
    } else if d[1].abs() <= d[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = geom::normalize(geom::cross(d, pick)).unwrap();
    let e2 = geom::cross(d, e1);
    (e1, e2)
}

/// Quadrature points and weights on the distance level set
/// {d(x, S) = eta}, restricted to the part projecting onto the stratum
/// interior and to offsets within the tube width.
fn slice_points(
    n: usize,
    stratum: &StratumSpec,
    width: &TubeWidth,
    eta: f64,
    seed: u64,
    ei: u64,
) -> Vec<(Pt, f64)> {
    match (n, stratum) {
        (2, StratumSpec::Point { at }) => {
            let m = SLICE_SAMPLES_2D;
            let w = 2.0 * PI * eta / m as f64;
            (0..m)
                .map(|i| {
                    let th = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                    (geom::add(*at, [eta * th.cos(), eta * th.sin(), 0.0]), w)
                })
                .collect()
        }
        (2, StratumSpec::Segment { half_length, .. }) => {
            let td = stratum.tangent_dir().unwrap();
            let nrm = [-td[1], td[0], 0.0];
            let m = SLICE_SAMPLES_2D / 2;
            let w = 2.0 * half_length / m as f64;
            let mut out = Vec::with_capacity(2 * m);
            for i in 0..m {
                let s = (i as f64 + 0.5) / m as f64;
                if eta > width.at(s) {
                    continue;
                }
                let base = stratum.parametrize(&[s]);
                for sgn in [-1.0, 1.0] {
                    out.push((geom::add(base, geom::scale(nrm, sgn * eta)), w));
                }
            }
            out
        }
        (3, StratumSpec::Point { at }) => {
            let g = SLICE_GRID_3D;
            let mut rng = rng::substream(seed, &[stream::SLICE, ei, 0]);
            let w = 4.0 * PI * eta * eta / (g * g) as f64;
            let mut out = Vec::with_capacity(g * g);
            for a in 0..g {
                for b in 0..g {
                    let u1 = (a as f64 + rng.gen::<f64>()) / g as f64;
                    let u2 = (b as f64 + rng.gen::<f64>()) / g as f64;
                    let ct = 2.0 * u1 - 1.0;
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    let ph = 2.0 * PI * u2;
                    out.push((
                        geom::add(*at, geom::scale([st * ph.cos(), st * ph.sin(), ct], eta)),
                        w,
                    ));
                }
            }
            out
        }
        (3, StratumSpec::Segment { half_length, .. }) => {
            let td = stratum.tangent_dir().unwrap();
            let (e1, e2) = orthonormal_frame(td);
            let g = SLICE_GRID_3D;
            let mut rng = rng::substream(seed, &[stream::SLICE, ei, 0]);
            let w = 2.0 * half_length * 2.0 * PI * eta / (g * g) as f64;
            let mut out = Vec::with_capacity(g * g);
            for a in 0..g {
                for b in 0..g {
                    let s = (a as f64 + rng.gen::<f64>()) / g as f64;
                    if eta > width.at(s) {
                        continue;
                    }
                    let base = stratum.parametrize(&[s]);
                    let ph = 2.0 * PI * (b as f64 + rng.gen::<f64>()) / g as f64;
                    let off = geom::add(
                        geom::scale(e1, eta * ph.cos()),
                        geom::scale(e2, eta * ph.sin()),
                    );
                    out.push((geom::add(base, off), w));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Quadrature points and weights filling the tube {d(x, S) <= min(delta,
/// eta)} around a codimension-one stratum (a segment in the plane).
fn tube_points(
    stratum: &StratumSpec,
    width: &TubeWidth,
    eta: f64,
    seed: u64,
    ei: u64,
) -> Vec<(Pt, f64)> {
    let StratumSpec::Segment { half_length, .. } = stratum else {
        return Vec::new();
    };
    let td = stratum.tangent_dir().unwrap();
    let nrm = [-td[1], td[0], 0.0];
    let g = SLICE_GRID_3D;
    let mut rng = rng::substream(seed, &[stream::SLICE, ei, 1]);
    let w = 2.0 * half_length * 2.0 * eta / (g * g) as f64;
    let mut out = Vec::with_capacity(g * g);
    for a in 0..g {
        for b in 0..g {
            let s = (a as f64 + rng.gen::<f64>()) / g as f64;
            let o = (2.0 * (b as f64 + rng.gen::<f64>()) / g as f64 - 1.0) * eta;
            if o.abs() > width.at(s).min(eta) {
                continue;
            }
            out.push((geom::add(stratum.parametrize(&[s]), geom::scale(nrm, o)), w));
        }
    }
    out
}

/// Measures the slice inequality near a stratum: for each offset eta,
/// the L^p norm of `u` on the distance level set {d(x, S) = eta} inside
/// the domain against the matching gradient norm. For strata of
/// codimension at least 2 the gradient norm lives on the same level
/// set; for codimension 1 it fills the tube up to distance eta. Slices
/// that miss the domain are skipped; a vanishing denominator leaves the
/// ratio unset.
pub fn slice_poincare_ratio(
    domain: &DomainSpec,
    u: &FieldSource,
    spec: &SliceSpec,
) -> Result<Vec<SliceRow>> {
    let n = domain.dim;
    if n != 2 && n != 3 {
        return Err(Error::validation("slices expect a 2- or 3-dimensional domain"));
    }
    if matches!(u, FieldSource::Fem(_)) && n != 2 {
        return Err(Error::validation("finite element slice fields are 2-dimensional"));
    }
    if !spec.p.is_finite() || spec.p < 1.0 {
        return Err(Error::validation("slice exponent must be at least 1"));
    }
    if !spec.width.is_positive() {
        return Err(Error::validation("tube width must be positive"));
    }
    if spec.etas.is_empty() {
        return Err(Error::validation("slice spec needs at least one offset"));
    }
    if spec.etas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation("slice offsets must be strictly decreasing"));
    }
    let wmax = spec.width.max_width();
    if spec.etas.iter().any(|&e| !(e > 0.0) || e >= wmax) {
        return Err(Error::validation("slice offsets must lie in (0, max tube width)"));
    }
    let k = spec.stratum.dimension();
    if k + 1 > n {
        return Err(Error::validation(
            "stratum dimension must be below the ambient dimension",
        ));
    }
    let loc = match u {
        FieldSource::Fem(f) => Some(f.locator()),
        FieldSource::Closed(_) => None,
    };
    let mut rows = Vec::new();
    for (ei, &eta) in spec.etas.iter().enumerate() {
        let slice = slice_points(n, &spec.stratum, &spec.width, eta, spec.seed, ei as u64);
        let mut num_mass = 0.0;
        let mut slice_grad_mass = 0.0;
        let mut accepted = 0usize;
        for (x, w) in slice {
            if !domain.contains(x) {
                continue;
            }
            let (Some(v), Some(gn)) =
                (value_at(u, loc.as_ref(), x), grad_norm_at(u, loc.as_ref(), x))
            else {
                continue;
            };
            accepted += 1;
            num_mass += w * v.abs().powf(spec.p);
            slice_grad_mass += w * gn.powf(spec.p);
        }
        if accepted == 0 {
            continue;
        }
        let den_mass = if k + 1 == n {
            let mut m = 0.0;
            for (x, w) in tube_points(&spec.stratum, &spec.width, eta, spec.seed, ei as u64) {
                if !domain.contains(x) {
                    continue;
                }
                let Some(gn) = grad_norm_at(u, loc.as_ref(), x) else {
                    continue;
                };
                m += w * gn.powf(spec.p);
            }
            m
        } else {
            slice_grad_mass
        };
        let num = num_mass.powf(1.0 / spec.p);
        let den = den_mass.powf(1.0 / spec.p);
        let ratio = if den > 0.0 { Some(num / den) } else { None };
        rows.push(SliceRow { eta, num, den, ratio });
    }
    Ok(rows)
}

/// Distance weight: sample points of a singular set, the base exponent
/// kappa, and the power the weight is raised to.
#[derive(Debug, Clone)]
pub struct WeightSpec {
    pub points: Vec<Pt>,
    pub kappa: f64,
    pub power: f64,
}

/// Integral over the mesh of (d(x, X)^{kappa N} |grad u|)^p by the
/// 3-point edge-midpoint rule per triangle.
pub fn weighted_gradient_norm(u: &SolutionField, weight: &WeightSpec, p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::validation("weighted norm exponent must be at least 1"));
    }
    if !weight.kappa.is_finite() || weight.kappa < 1.0 {
        return Err(Error::validation("weight exponent kappa must be at least 1"));
    }
    if !weight.power.is_finite() || weight.power < 0.0 {
        return Err(Error::validation("weight power must be nonnegative"));
    }
    let expo = weight.kappa * weight.power;
    if expo != 0.0 && weight.points.is_empty() {
        return Err(Error::validation("a weight with nonzero power needs sample points"));
    }
    let mut total = 0.0;
    for t in 0..u.mesh.triangles.len() {
        let g = u.gradients[t];
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let gp = gn.powf(p);
        if gp == 0.0 {
            continue;
        }
        let pts = u.mesh.triangle_points(t);
        let w = u.mesh.triangle_area(t) / 3.0;
        for e in 0..3 {
            let q = [
                0.5 * (pts[e][0] + pts[(e + 1) % 3][0]),
                0.5 * (pts[e][1] + pts[(e + 1) % 3][1]),
                0.0,
            ];
            let dw = if expo == 0.0 {
                1.0
            } else {
                let d = weight
                    .points
                    .iter()
                    .map(|s| geom::dist(q, *s))
                    .fold(f64::INFINITY, f64::min);
                d.powf(expo * p)
            };
            total += w * dw * gp;
        }
    }
    Ok(total)
}
