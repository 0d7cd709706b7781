//! Sampled tangent links and the two-clause link-measure criterion.
//!
//! The local geometry of a set `X` at a point `t` is probed through its
//! radius-`r` link: the directions `(x - t)/r` of points `x` in `X` at
//! distance exactly `r` from `t`. As `r` shrinks dyadically these clouds
//! converge (in Hausdorff distance) to the link of the tangent cone of `X`
//! at `t`; sampling stops at the first radius whose cloud agrees with its
//! predecessor to within `EPS_STAB`.
//!
//! Candidate directions and scan circles are shared across radii inside
//! one sampling run, so a set that is an exact cone produces identical
//! clouds at every radius and stabilizes with zero gap instead of being
//! limited by Monte-Carlo noise.
//!
//! Measures of the resulting clouds come in two flavors, selected by
//! `target_codim`:
//!
//! - codim 1 (links of full-dimensional sets): Monte-Carlo spherical area
//!   of the cloud's fill region, with the fill-tube bias removed by
//!   Richardson extrapolation between fill radii `eps` and `2 eps`;
//! - codim 2 (links of hypersurfaces): in 3D, greedy nearest-neighbor
//!   polyline length with chains broken at gaps above
//!   `min(LINK_GAP_FACTOR * median spacing, LINK_GAP_ABS)`; in 2D, the
//!   counting measure of angular cluster representatives.
//!
//! Varieties are located by sign changes along scan circles followed by
//! bisection, so a defining polynomial that touches zero without changing
//! sign yields an empty sample; the worked examples all change sign.

use crate::consts::{
    ALPHA_FRACTION, CHAIN_NET_FACTOR, EPS_STAB, FILL_FACTOR, FILL_MAX, FILL_MIN, FILL_QUANTILE,
    LINK_ADJ_REL, LINK_BISECT_ITERS, LINK_CLOUD_CAP, LINK_CLUSTER_GAP, LINK_GAP_ABS,
    LINK_GAP_FACTOR, LINK_RADII, LINK_R0_REL, LINK_SAMPLES_DEFAULT, LINK_SCAN_2D,
    LINK_SCAN_CIRCLE, MEASURE_SAMPLES,
};
use crate::domain::DomainSpec;
use crate::error::Error;
use crate::geom::{self, Pt};
use crate::poly::Polynomial;
use crate::rng::{stream, substream};
use crate::Result;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Fixed seed for the Monte-Carlo integration inside `link_measure`, so
/// the measure is a pure function of the cloud.
const MEASURE_SEED: u64 = 0x6d65_6173_7572_6531;

/// Chord distance reported between a nonempty cloud and an empty one.
const EMPTY_GAP: f64 = 2.0;

/// Total spherical measure of the unit sphere boundary in `dim` ambient
/// dimensions: `2 pi` for the circle, `4 pi` for the 2-sphere.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Default criterion threshold: `ALPHA_FRACTION` of the smaller clause
/// scale (full sphere area for clause 1; a great circle's length in 3D or
/// a diameter's two endpoints in 2D for clause 2).
pub fn default_alpha(dim: usize) -> f64 {
    let clause2_full = match dim {
        2 => 2.0,
        _ => 2.0 * PI,
    };
    ALPHA_FRACTION * sphere_measure(dim).min(clause2_full)
}

/// Sampling schedule for one link: dyadic radii `r0 * 2^-j` and a
/// per-radius sample budget.
#[derive(Debug, Clone)]
pub struct LinkParams {
    pub r0: f64,
    pub levels: usize,
    pub samples: usize,
    pub eps_stab: f64,
}

impl LinkParams {
    /// Defaults scaled to a domain ball of the given radius.
    pub fn for_ball_radius(radius: f64) -> Self {
        LinkParams {
            r0: LINK_R0_REL * radius,
            levels: LINK_RADII,
            samples: LINK_SAMPLES_DEFAULT,
            eps_stab: EPS_STAB,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.levels).map(|j| self.r0 / (1u64 << j) as f64).collect()
    }

    fn check(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::validation("link radius must be positive"));
        }
        if self.levels < 2 {
            return Err(Error::validation("link sampling needs at least two radii"));
        }
        if self.samples < 16 {
            return Err(Error::validation("link sampling needs at least 16 samples"));
        }
        if !(self.eps_stab > 0.0) {
            return Err(Error::validation("stabilization tolerance must be positive"));
        }
        Ok(())
    }
}

/// The set whose link is sampled.
pub enum LinkTarget<'a> {
    /// Complement of the open domain (everything `contains` rejects).
    Complement(&'a DomainSpec),
    /// Topological boundary of the domain: active constraint surfaces and
    /// the bounding sphere, filtered to points adjacent to the domain.
    Boundary(&'a DomainSpec),
    /// The zero set of one polynomial.
    Variety(&'a Polynomial),
    /// An arbitrary point set given by a membership predicate.
    Region(&'a dyn Fn(Pt) -> bool, usize),
}

impl<'a> LinkTarget<'a> {
    fn dim(&self) -> usize {
        match self {
            LinkTarget::Complement(d) | LinkTarget::Boundary(d) => d.dim,
            LinkTarget::Variety(p) => p.dimension(),
            LinkTarget::Region(_, dim) => *dim,
        }
    }

    /// Codimension label of the measured link: 1 for full-dimensional
    /// sets (area-type measure), 2 for hypersurfaces (length or count).
    fn codim(&self) -> usize {
        match self {
            LinkTarget::Complement(_) | LinkTarget::Region(_, _) => 1,
            LinkTarget::Boundary(_) | LinkTarget::Variety(_) => 2,
        }
    }
}

/// A stabilized link sample.
#[derive(Debug, Clone)]
pub struct ConeLink {
    pub ambient_dim: usize,
    pub center: Pt,
    /// Unit direction samples of the link.
    pub points: Vec<Pt>,
    /// Radius at which stabilization was declared (or the finest radius
    /// tried when `stabilized` is false).
    pub radius_used: f64,
    /// Hausdorff distance between the last two sampled clouds.
    pub stabilization_gap: f64,
    pub stabilized: bool,
    /// 1 for area-type links, 2 for length/count-type links.
    pub target_codim: usize,
    /// `link_measure` of this cloud, cached at sampling time.
    pub measure_estimate: f64,
}

/// A stratum of the singular locus: a point or a line segment, with
/// closed-form closest-point projection.
#[derive(Debug, Clone, PartialEq)]
pub enum StratumSpec {
    Point { at: Pt },
    Segment { center: Pt, dir: Pt, half_length: f64 },
}

impl StratumSpec {
    pub fn dimension(&self) -> usize {
        match self {
            StratumSpec::Point { .. } => 0,
            StratumSpec::Segment { .. } => 1,
        }
    }

    /// Maps the unit `k`-cube onto the stratum.
    pub fn parametrize(&self, s: &[f64]) -> Pt {
        match self {
            StratumSpec::Point { at } => *at,
            StratumSpec::Segment { center, dir, half_length } => {
                let u = if s.is_empty() { 0.5 } else { s[0] };
                geom::add(*center, geom::scale(*dir, (2.0 * u - 1.0) * half_length))
            }
        }
    }

    /// Closest-point projection onto the stratum.
    pub fn project(&self, x: Pt) -> Pt {
        match self {
            StratumSpec::Point { at } => *at,
            StratumSpec::Segment { center, dir, half_length } => {
                let s = geom::dot(geom::sub(x, *center), *dir)
                    .clamp(-*half_length, *half_length);
                geom::add(*center, geom::scale(*dir, s))
            }
        }
    }

    /// Unit tangent direction at a stratum point; `None` for points.
    pub fn tangent_dir(&self) -> Option<Pt> {
        match self {
            StratumSpec::Point { .. } => None,
            StratumSpec::Segment { dir, .. } => geom::normalize(*dir),
        }
    }
}

// ---------------------------------------------------------------------------
// Spatial index for nearest-neighbor queries on unit-vector clouds.

struct SphereIndex {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
    pts: Vec<Pt>,
}

impl SphereIndex {
    fn new(pts: &[Pt]) -> Self {
        let cell = 0.05;
        let mut map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in pts.iter().enumerate() {
            map.entry(Self::key(*p, cell)).or_default().push(i);
        }
        SphereIndex { cell, map, pts: pts.to_vec() }
    }

    fn key(p: Pt, cell: f64) -> (i64, i64, i64) {
        (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        )
    }

    /// Nearest point accepted by `keep`, in chord distance, searched in
    /// expanding cell shells; `None` if nothing lies within `max_chord`.
    fn nearest_filtered(
        &self,
        q: Pt,
        max_chord: f64,
        keep: &dyn Fn(usize) -> bool,
    ) -> Option<(usize, f64)> {
        let (cx, cy, cz) = Self::key(q, self.cell);
        let kmax = (max_chord / self.cell).ceil() as i64 + 1;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..=kmax {
            if let Some((_, d)) = best {
                // Cells in shell k cannot hold anything closer than
                // (k-1) * cell; stop once the current best beats that.
                if d <= (k - 1).max(0) as f64 * self.cell {
                    break;
                }
            }
            for dx in -k..=k {
                for dy in -k..=k {
                    for dz in -k..=k {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != k {
                            continue;
                        }
                        if let Some(ids) = self.map.get(&(cx + dx, cy + dy, cz + dz)) {
                            for &i in ids {
                                if !keep(i) {
                                    continue;
                                }
                                let d = geom::dist(q, self.pts[i]);
                                if d <= max_chord && best.map_or(true, |(_, bd)| d < bd) {
                                    best = Some((i, d));
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn nearest(&self, q: Pt) -> Option<(usize, f64)> {
        self.nearest_filtered(q, 2.0 + self.cell, &|_| true)
    }
}

/// Deterministic stride thinning down to the cloud cap.
fn thin_cloud(pts: Vec<Pt>) -> Vec<Pt> {
    if pts.len() <= LINK_CLOUD_CAP {
        return pts;
    }
    let stride = pts.len().div_ceil(LINK_CLOUD_CAP);
    pts.into_iter().step_by(stride).collect()
}

/// Hausdorff gap tolerant of empty clouds: two empty clouds agree
/// perfectly, one empty cloud is maximally far from a nonempty one.
fn cloud_gap(a: &[Pt], b: &[Pt]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => EMPTY_GAP,
        (false, false) => {
            let directed = |from: &[Pt], to: &[Pt]| {
                let idx = SphereIndex::new(to);
                from.iter()
                    .map(|p| idx.nearest(*p).map_or(EMPTY_GAP, |(_, d)| d))
                    .fold(0.0f64, f64::max)
            };
            directed(a, b).max(directed(b, a))
        }
    }
}

/// Exact Hausdorff distance (max of both directed sup-min chord
/// distances) between two finite nonempty clouds.
pub fn hausdorff_distance(a: &[Pt], b: &[Pt]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud("hausdorff_distance input"));
    }
    Ok(cloud_gap(a, b))
}

/// Geodesic nearest-neighbor spacing of every cloud point, sorted.
fn nn_spacings(pts: &[Pt]) -> Vec<f64> {
    if pts.len() < 2 {
        return Vec::new();
    }
    let idx = SphereIndex::new(pts);
    let mut gaps: Vec<f64> = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if let Some((_, d)) = idx.nearest_filtered(*p, 2.0 + 0.05, &|j| j != i) {
            gaps.push(2.0 * (d / 2.0).clamp(-1.0, 1.0).asin());
        }
    }
    gaps.sort_by(|x, y| x.partial_cmp(y).unwrap());
    gaps
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[pos.min(sorted.len() - 1)]
}

/// Median nearest-neighbor geodesic spacing of a cloud.
fn median_nn_spacing(pts: &[Pt]) -> f64 {
    quantile(&nn_spacings(pts), 0.5)
}

/// Greedy maximal subset with pairwise chord spacing at least `delta`,
/// keeping first-seen representatives.
fn spacing_net(pts: &[Pt], delta: f64) -> Vec<Pt> {
    let mut net: Vec<Pt> = Vec::new();
    let cell = delta.max(1e-6).min(0.2);
    let mut map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for &p in pts {
        let (cx, cy, cz) = SphereIndex::key(p, cell);
        let reach = (delta / cell).ceil() as i64;
        let mut blocked = false;
        'scan: for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(ids) = map.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in ids {
                            if geom::dist(p, net[i]) < delta {
                                blocked = true;
                                break 'scan;
                            }
                        }
                    }
                }
            }
        }
        if !blocked {
            map.entry((cx, cy, cz)).or_default().push(net.len());
            net.push(p);
        }
    }
    net
}

// ---------------------------------------------------------------------------
// Root finding on scan circles.

/// Roots of `g` on the periodic interval [0, 2 pi), located by sign
/// changes between `scan` equispaced samples and refined by bisection.
fn circle_roots(g: &dyn Fn(f64) -> f64, scan: usize) -> Vec<f64> {
    let step = 2.0 * PI / scan as f64;
    let mut roots = Vec::new();
    let mut prev_th = 0.0;
    let mut prev = g(0.0);
    if prev == 0.0 {
        roots.push(0.0);
    }
    for k in 1..=scan {
        let th = step * k as f64;
        let val = g(th);
        if val == 0.0 {
            if k < scan {
                roots.push(th);
            }
        } else if prev != 0.0 && (prev < 0.0) != (val < 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_th, th, prev);
            for _ in 0..LINK_BISECT_ITERS {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) != (flo < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_th = th;
        prev = val;
    }
    roots
}

/// Samples `{poly = 0}` on the sphere `S(t, r)` in 3D by bisection along
/// random great circles, keeping roots accepted by `filter`.
fn variety_cloud_3d(
    poly: &Polynomial,
    t: Pt,
    r: f64,
    target: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    filter: &dyn Fn(Pt) -> bool,
) -> Vec<Pt> {
    let mut dirs: Vec<Pt> = Vec::new();
    let max_circles = 2 * target + 256;
    let mut dry_circles = 0usize;
    for _ in 0..max_circles {
        if dirs.len() >= target {
            break;
        }
        let w = geom::unit_dir(3, rng);
        let (a, b) = geom::orthonormal_complement(w);
        let g = |th: f64| {
            let d = geom::add(geom::scale(a, th.cos()), geom::scale(b, th.sin()));
            poly.value(geom::add(t, geom::scale(d, r)))
        };
        let roots = circle_roots(&g, LINK_SCAN_CIRCLE);
        if roots.is_empty() {
            dry_circles += 1;
            if dry_circles > 400 && dirs.is_empty() {
                break;
            }
            continue;
        }
        for th in roots {
            let d = geom::add(geom::scale(a, th.cos()), geom::scale(b, th.sin()));
            let x = geom::add(t, geom::scale(d, r));
            if filter(x) {
                if let Some(u) = geom::normalize(d) {
                    dirs.push(u);
                }
            }
        }
    }
    dirs
}

/// Samples `{poly = 0}` on the circle `S(t, r)` in the plane spanned by
/// `(u, v)` through a full deterministic angle sweep. Returned directions
/// are in-plane coordinates `(cos th, sin th, 0)`.
fn variety_cloud_sweep(
    poly: &Polynomial,
    t: Pt,
    r: f64,
    u: Pt,
    v: Pt,
    filter: &dyn Fn(Pt) -> bool,
) -> Vec<Pt> {
    let g = |th: f64| {
        let d = geom::add(geom::scale(u, th.cos()), geom::scale(v, th.sin()));
        poly.value(geom::add(t, geom::scale(d, r)))
    };
    let mut dirs = Vec::new();
    for th in circle_roots(&g, LINK_SCAN_2D) {
        let d = geom::add(geom::scale(u, th.cos()), geom::scale(v, th.sin()));
        let x = geom::add(t, geom::scale(d, r));
        if filter(x) {
            dirs.push([th.cos(), th.sin(), 0.0]);
        }
    }
    dirs
}

/// Membership filter for boundary sampling: the surface point must lie on
/// the active part of its piece and the domain must touch at least one of
/// its two sides.
fn boundary_filter<'a>(
    domain: &'a DomainSpec,
    surface_poly: &'a Polynomial,
    grad: &'a [Polynomial],
    within: &'a dyn Fn(Pt) -> bool,
    r: f64,
) -> impl Fn(Pt) -> bool + 'a {
    let scale = surface_poly.max_abs_coef().max(1.0);
    move |x: Pt| {
        if !within(x) {
            return false;
        }
        let g = Polynomial::gradient_value(grad, x);
        let gn = geom::norm(g);
        if gn < 1e-12 * scale {
            // Sides cannot be probed at a critical point of the carrier;
            // keep the sample.
            return true;
        }
        let eps = LINK_ADJ_REL * r;
        let n = geom::scale(g, eps / gn);
        domain.contains(geom::add(x, n)) || domain.contains(geom::sub(x, n))
    }
}

/// One radius level of link sampling. The same seed is used at every
/// radius so candidate directions repeat exactly across levels.
fn sample_at_radius(target: &LinkTarget, t: Pt, r: f64, samples: usize, seed: u64) -> Vec<Pt> {
    let dim = target.dim();
    let cloud = match target {
        LinkTarget::Complement(domain) => {
            let mut rng = substream(seed, &[stream::LINK_REGION]);
            let mut dirs = Vec::new();
            for _ in 0..samples {
                let d = geom::unit_dir(dim, &mut rng);
                if !domain.contains(geom::add(t, geom::scale(d, r))) {
                    dirs.push(d);
                }
            }
            dirs
        }
        LinkTarget::Region(pred, _) => {
            let mut rng = substream(seed, &[stream::LINK_REGION]);
            let mut dirs = Vec::new();
            for _ in 0..samples {
                let d = geom::unit_dir(dim, &mut rng);
                if pred(geom::add(t, geom::scale(d, r))) {
                    dirs.push(d);
                }
            }
            dirs
        }
        LinkTarget::Variety(poly) => {
            if dim == 2 {
                variety_cloud_sweep(poly, t, r, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], &|_| true)
            } else {
                let mut rng = substream(seed, &[stream::LINK_VARIETY]);
                variety_cloud_3d(poly, t, r, samples, &mut rng, &|_| true)
            }
        }
        LinkTarget::Boundary(domain) => {
            let mut dirs = Vec::new();
            for (si, surf) in domain.boundary_surfaces().iter().enumerate() {
                let grad = surf.poly.gradient();
                let within = |x: Pt| surf.within_closure(x);
                let filter = boundary_filter(domain, &surf.poly, &grad, &within, r);
                if dim == 2 {
                    dirs.extend(variety_cloud_sweep(
                        &surf.poly,
                        t,
                        r,
                        [1.0, 0.0, 0.0],
                        [0.0, 1.0, 0.0],
                        &filter,
                    ));
                } else {
                    let mut rng = substream(seed, &[stream::LINK_VARIETY, si as u64]);
                    dirs.extend(variety_cloud_3d(&surf.poly, t, r, samples, &mut rng, &filter));
                }
            }
            dirs
        }
    };
    thin_cloud(cloud)
}

/// Samples the link of `target` at `t` over dyadic radii, returning the
/// cloud at the first radius whose Hausdorff gap to the previous level is
/// at most `eps_stab`. A run that exhausts all radii without stabilizing
/// returns the finest cloud flagged `stabilized = false`; a target missing
/// every sphere yields an empty link.
pub fn sample_link(target: &LinkTarget, t: Pt, params: &LinkParams, seed: u64) -> Result<ConeLink> {
    params.check()?;
    let radii = params.radii();
    let mut prev: Option<Vec<Pt>> = None;
    let mut chosen: Option<Vec<Pt>> = None;
    let mut gap = EMPTY_GAP;
    let mut used = radii[0];
    let mut stabilized = false;
    for &r in &radii {
        let cur = sample_at_radius(target, t, r, params.samples, seed);
        if let Some(p) = &prev {
            gap = cloud_gap(p, &cur);
            if gap <= params.eps_stab {
                stabilized = true;
                used = r;
                chosen = Some(cur);
                break;
            }
        }
        used = r;
        prev = Some(cur);
    }
    let points = chosen.or(prev).unwrap_or_default();
    let mut link = ConeLink {
        ambient_dim: target.dim(),
        center: t,
        points,
        radius_used: used,
        stabilization_gap: gap,
        stabilized,
        target_codim: target.codim(),
        measure_estimate: 0.0,
    };
    link.measure_estimate = link_measure(&link);
    Ok(link)
}

// ---------------------------------------------------------------------------
// Measures.

/// Monte-Carlo spherical measure of the fill region around an area-type
/// cloud. The fill tube inflates the region by roughly `perimeter * eps`;
/// evaluating at `eps` and `2 eps` and extrapolating removes that term.
/// The fill radius follows the upper quantile of nearest-neighbor
/// spacings (the cloud's covering radius), so the fill region has no
/// interior holes.
///
/// For regions with boundary the estimate is biased low by
/// O(perimeter / sqrt(cloud size)): the collar between the cloud's ragged
/// hull and the true edge is only partially covered, and that gap does not
/// shrink with the fill radius. At default sample budgets the bias is a few
/// percent, far below the margin that separates criterion outcomes.
fn area_measure(pts: &[Pt], dim: usize) -> f64 {
    if pts.is_empty() {
        return 0.0;
    }
    let full = sphere_measure(dim);
    let spread = quantile(&nn_spacings(pts), FILL_QUANTILE);
    let eps = (FILL_FACTOR * spread).clamp(FILL_MIN, FILL_MAX / 2.0);
    let chord_near = geom::chord_of_angle(eps);
    let chord_far = geom::chord_of_angle(2.0 * eps);
    let idx = SphereIndex::new(pts);
    let mut rng = substream(MEASURE_SEED, &[stream::LINK_MEASURE]);
    let mut hits_near = 0usize;
    let mut hits_far = 0usize;
    for _ in 0..MEASURE_SAMPLES {
        let q = geom::unit_dir(dim, &mut rng);
        if let Some((_, d)) = idx.nearest_filtered(q, chord_far, &|_| true) {
            if d <= chord_far {
                hits_far += 1;
            }
            if d <= chord_near {
                hits_near += 1;
            }
        }
    }
    let f_near = full * hits_near as f64 / MEASURE_SAMPLES as f64;
    let f_far = full * hits_far as f64 / MEASURE_SAMPLES as f64;
    (2.0 * f_near - f_far).clamp(0.0, full)
}

/// Greedy nearest-neighbor polyline length of a curve-type cloud on the
/// 2-sphere, in geodesic radians. The cloud is first snapped to a spacing
/// net (random root samples have exponentially distributed gaps, which
/// would otherwise fragment the chains); chains then break at gaps
/// exceeding `min(LINK_GAP_FACTOR * median spacing, LINK_GAP_ABS)`, so
/// finite point clusters contribute no length.
fn polyline_length(pts: &[Pt]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let raw_med = median_nn_spacing(pts);
    let net = spacing_net(pts, geom::chord_of_angle(CHAIN_NET_FACTOR * raw_med));
    if net.len() < 2 {
        return 0.0;
    }
    let med = median_nn_spacing(&net);
    let threshold = (LINK_GAP_FACTOR * med).min(LINK_GAP_ABS);
    let max_chord = geom::chord_of_angle(threshold.min(PI));
    let idx = SphereIndex::new(&net);
    let mut visited = vec![false; net.len()];
    let mut total = 0.0;
    for start in 0..net.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut cur = start;
        loop {
            let next = idx.nearest_filtered(net[cur], max_chord, &|j| !visited[j]);
            match next {
                Some((j, _)) => {
                    total += geom::geodesic(net[cur], net[j]);
                    visited[j] = true;
                    cur = j;
                }
                None => break,
            }
        }
    }
    total
}

/// Counting measure of angular clusters for point-type clouds on a
/// circle; directions within `LINK_CLUSTER_GAP` radians merge.
fn cluster_count(pts: &[Pt]) -> usize {
    if pts.is_empty() {
        return 0;
    }
    let mut angles: Vec<f64> = pts.iter().map(|p| p[1].atan2(p[0])).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = angles.len();
    let mut splits = 0usize;
    for i in 0..n {
        let next = angles[(i + 1) % n] + if i + 1 == n { 2.0 * PI } else { 0.0 };
        if next - angles[i] > LINK_CLUSTER_GAP {
            splits += 1;
        }
    }
    splits.max(1)
}

/// Measure of a link cloud according to its codimension label: spherical
/// area for codim 1; polyline length (3D) or cluster count (2D) for
/// codim 2. Empty links measure exactly zero. Deterministic for a fixed
/// cloud.
pub fn link_measure(link: &ConeLink) -> f64 {
    if link.points.is_empty() {
        return 0.0;
    }
    match (link.target_codim, link.ambient_dim) {
        (1, d) => area_measure(&link.points, d),
        (2, 3) => polyline_length(&link.points),
        _ => cluster_count(&link.points) as f64,
    }
}

// ---------------------------------------------------------------------------
// Normal links along strata.

/// Samples the link of `target` restricted to the slice through `t`
/// orthogonal to the stratum. For a segment stratum in 3D the result
/// lives on the circle of the normal plane and its points are stored in
/// in-plane coordinates `(cos th, sin th, 0)` with respect to a fixed
/// orthonormal basis of that plane; the measure is the angular cluster
/// count. For a point stratum the slice is the whole space and the call
/// reduces to `sample_link`.
pub fn sample_normal_link(
    target: &LinkTarget,
    stratum: &StratumSpec,
    t: Pt,
    params: &LinkParams,
    seed: u64,
) -> Result<ConeLink> {
    params.check()?;
    let proj = stratum.project(t);
    if geom::dist(proj, t) > 1e-9 * (1.0 + geom::norm(t)) {
        return Err(Error::validation(
            "normal link center must lie on the stratum",
        ));
    }
    if stratum.dimension() == 0 {
        return sample_link(target, t, params, seed);
    }
    if target.dim() != 3 {
        return Err(Error::validation(
            "segment strata are only meaningful in three dimensions",
        ));
    }
    let dir = stratum
        .tangent_dir()
        .ok_or_else(|| Error::validation("stratum has no tangent direction"))?;
    let (u, v) = geom::orthonormal_complement(dir);

    let sample_slice = |r: f64| -> Result<Vec<Pt>> {
        let cloud = match target {
            LinkTarget::Variety(poly) => variety_cloud_sweep(poly, t, r, u, v, &|_| true),
            LinkTarget::Boundary(domain) => {
                let mut dirs = Vec::new();
                for surf in domain.boundary_surfaces() {
                    let grad = surf.poly.gradient();
                    let within = |x: Pt| surf.within_closure(x);
                    let filter = boundary_filter(domain, &surf.poly, &grad, &within, r);
                    dirs.extend(variety_cloud_sweep(&surf.poly, t, r, u, v, &filter));
                }
                dirs
            }
            _ => {
                return Err(Error::validation(
                    "normal links are sampled for variety or boundary targets",
                ))
            }
        };
        Ok(thin_cloud(cloud))
    };

    let radii = params.radii();
    let mut prev: Option<Vec<Pt>> = None;
    let mut chosen: Option<Vec<Pt>> = None;
    let mut gap = EMPTY_GAP;
    let mut used = radii[0];
    let mut stabilized = false;
    for &r in &radii {
        let cur = sample_slice(r)?;
        if let Some(p) = &prev {
            gap = cloud_gap(p, &cur);
            if gap <= params.eps_stab {
                stabilized = true;
                used = r;
                chosen = Some(cur);
                break;
            }
        }
        used = r;
        prev = Some(cur);
    }
    let points = chosen.or(prev).unwrap_or_default();
    let mut link = ConeLink {
        ambient_dim: 2,
        center: t,
        points,
        radius_used: used,
        stabilization_gap: gap,
        stabilized,
        target_codim: 2,
        measure_estimate: 0.0,
    };
    link.measure_estimate = link_measure(&link);
    Ok(link)
}

// ---------------------------------------------------------------------------
// Criterion and product structure.

/// Outcome of the two-clause link criterion at one boundary point.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub point: Pt,
    pub alpha: f64,
    /// Spherical area of the complement's tangent link.
    pub clause1: f64,
    /// Length (3D) or direction count (2D) of the boundary's tangent link.
    pub clause2: f64,
    pub holds: bool,
    /// Set when either link failed to stabilize within the radius budget.
    pub low_confidence: bool,
    pub complement: ConeLink,
    pub boundary: ConeLink,
}

/// Evaluates the link criterion at `t`: the complement link must carry
/// spherical measure at least `alpha`, or the boundary link must carry
/// codimension-2 measure at least `alpha`. `t` must lie outside the open
/// domain (on its boundary).
pub fn check_criterion(
    domain: &DomainSpec,
    t: Pt,
    alpha: Option<f64>,
    params: &LinkParams,
    seed: u64,
) -> Result<CriterionReport> {
    domain.validate()?;
    if domain.contains(t) {
        return Err(Error::validation(
            "criterion point must lie on the domain boundary, not inside",
        ));
    }
    let alpha = alpha.unwrap_or_else(|| default_alpha(domain.dim));
    let complement = sample_link(&LinkTarget::Complement(domain), t, params, seed)?;
    let boundary = sample_link(&LinkTarget::Boundary(domain), t, params, seed)?;
    let clause1 = complement.measure_estimate;
    let clause2 = boundary.measure_estimate;
    Ok(CriterionReport {
        point: t,
        alpha,
        clause1,
        clause2,
        holds: clause1 >= alpha || clause2 >= alpha,
        low_confidence: !(complement.stabilized && boundary.stabilized),
        complement,
        boundary,
    })
}

/// Compares the sampled link of `target` at `t` against the link of the
/// product of the sampled normal cone with the stratum's tangent line,
/// returning their Hausdorff gap (chord metric). A small value certifies
/// the local product structure numerically. An empty normal link
/// degenerates the product to the tangent line itself.
pub fn check_product_decomposition(
    target: &LinkTarget,
    stratum: &StratumSpec,
    t: Pt,
    params: &LinkParams,
    seed: u64,
) -> Result<f64> {
    let dir = stratum
        .tangent_dir()
        .ok_or_else(|| Error::validation("product check needs a segment stratum"))?;
    let full = sample_link(target, t, params, seed)?;
    let normal = sample_normal_link(target, stratum, t, params, seed)?;
    let (u, v) = geom::orthonormal_complement(dir);
    let mut product: Vec<Pt> = vec![dir, geom::scale(dir, -1.0)];
    let sweep = 180usize;
    for q in &normal.points {
        let q3 = geom::add(geom::scale(u, q[0]), geom::scale(v, q[1]));
        for k in 0..=sweep {
            let th = -0.5 * PI + PI * k as f64 / sweep as f64;
            let p = geom::add(geom::scale(q3, th.cos()), geom::scale(dir, th.sin()));
            product.push(p);
        }
    }
    Ok(cloud_gap(&full.points, &product))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Ball, Constraint, DomainSpec, Sign};
    use proptest::prelude::*;

    fn p3(src: &str) -> Polynomial {
        Polynomial::parse(src, 3).unwrap()
    }

    fn p2(src: &str) -> Polynomial {
        Polynomial::parse(src, 2).unwrap()
    }

    fn quick(r0: f64, levels: usize, samples: usize) -> LinkParams {
        LinkParams { r0, levels, samples, eps_stab: EPS_STAB }
    }

    #[test]
    fn half_space_complement_link_is_a_hemisphere() {
        // Complement of {x > 0} at the origin is the closed half-space
        // {x <= 0}; its link is a hemisphere of area 2 pi. The half-space
        // is an exact cone, so candidate reuse stabilizes immediately.
        let d = DomainSpec::new(
            3,
            Ball::new([0.0; 3], 1.0),
            vec![Constraint::sign(p3("x"), Sign::Gt)],
        );
        let link = sample_link(
            &LinkTarget::Complement(&d),
            [0.0; 3],
            &quick(0.25, 5, 4000),
            11,
        )
        .unwrap();
        assert!(link.stabilized);
        assert!(link.stabilization_gap <= 1e-12, "gap {}", link.stabilization_gap);
        // The hull-collar bias of the fill estimator (see area_measure)
        // runs about 0.3 low at this cloud size, hence the asymmetric band.
        assert!(
            link.measure_estimate > 2.0 * PI - 0.55 && link.measure_estimate < 2.0 * PI + 0.25,
            "area {}",
            link.measure_estimate
        );
        for p in &link.points {
            assert!((geom::norm(*p) - 1.0).abs() < 1e-12);
            assert!(p[0] <= 0.0);
        }
    }

    #[test]
    fn full_sphere_region_measures_4pi() {
        let everything = |_: Pt| true;
        let link = sample_link(
            &LinkTarget::Region(&everything, 3),
            [0.0; 3],
            &quick(0.25, 3, 4000),
            5,
        )
        .unwrap();
        assert!(
            (link.measure_estimate - 4.0 * PI).abs() < 0.08 * 4.0 * PI,
            "area {}",
            link.measure_estimate
        );
    }

    #[test]
    fn empty_link_measures_zero() {
        let nothing = |_: Pt| false;
        let link = sample_link(
            &LinkTarget::Region(&nothing, 3),
            [0.0; 3],
            &quick(0.25, 3, 500),
            5,
        )
        .unwrap();
        assert!(link.points.is_empty());
        assert!(link.stabilized);
        assert_eq!(link.measure_estimate, 0.0);
    }

    #[test]
    fn plane_variety_link_is_a_great_circle() {
        // {x = 0} cuts every sphere about the origin in a great circle of
        // length 2 pi.
        let p = p3("x");
        let link = sample_link(&LinkTarget::Variety(&p), [0.0; 3], &quick(0.25, 4, 2500), 7)
            .unwrap();
        assert!(link.stabilized);
        assert!(
            (link.measure_estimate - 2.0 * PI).abs() < 0.05 * 2.0 * PI,
            "length {}",
            link.measure_estimate
        );
    }

    #[test]
    fn cusp_link_is_a_single_rightward_direction() {
        // {y^2 = x^3} in 2D leaves the origin only toward positive x.
        let p = p2("y^2 - x^3");
        let link = sample_link(&LinkTarget::Variety(&p), [0.0; 3], &quick(1e-2, 6, 64), 7)
            .unwrap();
        assert!(!link.points.is_empty());
        for d in &link.points {
            assert!(
                geom::dist(*d, [1.0, 0.0, 0.0]) < 0.15,
                "stray direction {d:?}"
            );
        }
        assert_eq!(link.measure_estimate, 1.0, "one direction cluster");
    }

    #[test]
    fn cusp_stabilization_gap_is_nonincreasing() {
        // The directions of {y^2 = x^3} at radius r sit at angles
        // ~ +-sqrt(r), so consecutive dyadic gaps shrink like sqrt(r).
        let p = p2("y^2 - x^3");
        let mut gaps = Vec::new();
        for k in 0..5 {
            let r0 = 1e-2 / (1u64 << k) as f64;
            let link = sample_link(
                &LinkTarget::Variety(&p),
                [0.0; 3],
                &LinkParams { r0, levels: 2, samples: 64, eps_stab: 1e-9 },
                7,
            )
            .unwrap();
            gaps.push(link.stabilization_gap);
        }
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] * 1.05 + 1e-5, "gaps {gaps:?}");
        }
    }

    #[test]
    fn two_plane_cone_link_has_double_circle_length() {
        // x^3 + y^2 - z^2 x^2 at (0,0,1/2): the tangent cone is the pair
        // of planes y = +-x/2, whose link is two great circles.
        let p = p3("x^3+y^2-z^2*x^2");
        let link = sample_link(
            &LinkTarget::Variety(&p),
            [0.0, 0.0, 0.5],
            &quick(0.2, 6, 3000),
            13,
        )
        .unwrap();
        assert!(link.stabilized, "gap {}", link.stabilization_gap);
        assert!(
            (link.measure_estimate - 4.0 * PI).abs() < 0.8,
            "length {}",
            link.measure_estimate
        );
        // Every sampled direction satisfies the cone equation up to the
        // stabilization tolerance.
        for d in &link.points {
            let defect = (d[1] * d[1] - 0.25 * d[0] * d[0]).abs();
            assert!(defect < 0.1, "direction {d:?} defect {defect}");
        }
        // Leftward in-plane directions of both cone planes are present.
        for target in [
            geom::normalize([-1.0, 0.5, 0.0]).unwrap(),
            geom::normalize([-1.0, -0.5, 0.0]).unwrap(),
        ] {
            let close = link.points.iter().any(|d| geom::dist(*d, target) < 0.06);
            assert!(close, "missing direction {target:?}");
        }
    }

    #[test]
    fn normal_link_of_cubic_surface_has_four_directions() {
        // Normal slice of x^3 + y^2 - z^2 x^2 along the z-axis at height
        // 1: the slice curve y^2 = x^2 (1 - x) leaves the axis point in
        // the four directions (+-1, +-1)/sqrt(2).
        let p = p3("x^3+y^2-z^2*x^2");
        let stratum = StratumSpec::Segment {
            center: [0.0; 3],
            dir: [0.0, 0.0, 1.0],
            half_length: 2.0,
        };
        let link = sample_normal_link(
            &LinkTarget::Variety(&p),
            &stratum,
            [0.0, 0.0, 1.0],
            &quick(0.1, 6, 64),
            3,
        )
        .unwrap();
        assert_eq!(link.ambient_dim, 2);
        assert_eq!(link.measure_estimate, 4.0, "cluster count");
        let s = 1.0 / 2.0f64.sqrt();
        for expect in [[s, s, 0.0], [s, -s, 0.0], [-s, s, 0.0], [-s, -s, 0.0]] {
            let close = link.points.iter().any(|d| geom::dist(*d, expect) < 0.05);
            assert!(close, "missing normal direction {expect:?}");
        }
    }

    #[test]
    fn normal_link_of_quartic_example_matches_linearization() {
        // y^2 + x^4 - z^4 x^2 sliced normal to the z-axis at z = 0.8:
        // y^2 = x^2 (z^4 - x^2) linearizes to slopes +- z^2 = +-0.64.
        let p = p3("y^2+x^4-z^4*x^2");
        let stratum = StratumSpec::Segment {
            center: [0.0; 3],
            dir: [0.0, 0.0, 1.0],
            half_length: 2.0,
        };
        let link = sample_normal_link(
            &LinkTarget::Variety(&p),
            &stratum,
            [0.0, 0.0, 0.8],
            &quick(0.05, 6, 64),
            3,
        )
        .unwrap();
        assert_eq!(link.measure_estimate, 4.0, "cluster count");
        let n = (1.0f64 + 0.64 * 0.64).sqrt();
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                let expect = [sx / n, sy * 0.64 / n, 0.0];
                let close = link.points.iter().any(|d| geom::dist(*d, expect) < 0.05);
                assert!(close, "missing normal direction {expect:?}");
            }
        }
    }

    #[test]
    fn normal_link_misses_a_disjoint_zero_set() {
        // x^2 + y^2 vanishes only on the z-axis, which meets the normal
        // circle nowhere; the normal link is empty.
        let p = p3("x^2+y^2");
        let stratum = StratumSpec::Segment {
            center: [0.0; 3],
            dir: [0.0, 0.0, 1.0],
            half_length: 2.0,
        };
        let link = sample_normal_link(
            &LinkTarget::Variety(&p),
            &stratum,
            [0.0, 0.0, 1.0],
            &quick(0.1, 4, 64),
            3,
        )
        .unwrap();
        assert!(link.points.is_empty());
        assert_eq!(link.measure_estimate, 0.0);
    }

    #[test]
    fn hausdorff_distance_matches_hand_values() {
        let a = vec![[1.0, 0.0, 0.0]];
        let b = vec![[0.0, 1.0, 0.0]];
        assert!((hausdorff_distance(&a, &a).unwrap() - 0.0).abs() < 1e-15);
        assert!((hausdorff_distance(&a, &b).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(hausdorff_distance(&a, &[]).is_err());

        // Two offset 1000-point samples of the same circle are within one
        // sample spacing of each other.
        let circle = |offset: f64| -> Vec<Pt> {
            (0..1000)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / 1000.0 + offset;
                    [th.cos(), th.sin(), 0.0]
                })
                .collect()
        };
        let d = hausdorff_distance(&circle(0.0), &circle(0.003)).unwrap();
        assert!(d <= 0.01, "circle gap {d}");
    }

    #[test]
    fn antipodal_point_pair_has_zero_length() {
        let mut points = Vec::new();
        for k in 0..100 {
            let jitter = 1e-3 * (k as f64 / 100.0 - 0.5);
            points.push(geom::normalize([jitter, 0.0, 1.0]).unwrap());
            points.push(geom::normalize([0.0, jitter, -1.0]).unwrap());
        }
        let link = ConeLink {
            ambient_dim: 3,
            center: [0.0; 3],
            points,
            radius_used: 0.1,
            stabilization_gap: 0.0,
            stabilized: true,
            target_codim: 2,
            measure_estimate: 0.0,
        };
        assert!(link_measure(&link) < 0.05, "length {}", link_measure(&link));
    }

    #[test]
    fn criterion_holds_on_the_singular_axis_of_the_cubic_surface() {
        // Removing {x^3 + y^2 - z^2 x^2 = 0} from a ball: at an axis
        // point the complement of the open domain has measure-zero link,
        // while the boundary link is two great circles. The second clause
        // carries the criterion.
        let d = DomainSpec::new(
            3,
            Ball::new([0.0; 3], 1.0),
            vec![Constraint::sign(p3("x^3+y^2-z^2*x^2"), Sign::Ne)],
        );
        let report = check_criterion(&d, [0.0, 0.0, 0.5], None, &quick(0.1, 5, 2000), 17)
            .unwrap();
        assert!((report.alpha - 0.05 * 2.0 * PI).abs() < 1e-12);
        assert!(report.clause1 < 0.1, "clause1 {}", report.clause1);
        assert!(report.clause2 > report.alpha, "clause2 {}", report.clause2);
        assert!(report.holds);
    }

    #[test]
    fn criterion_fails_at_the_horn_point_of_the_quartic() {
        // Omega = {y^2 + x^4 - z^4 x^2 > 0}: at the origin the complement
        // collapses onto the z-axis and the boundary link degenerates to
        // two points, so both clauses vanish. At (0,0,1/2) the complement
        // opens into a solid double wedge and clause 1 carries it.
        let d = DomainSpec::new(
            3,
            Ball::new([0.0; 3], 1.0),
            vec![Constraint::sign(p3("y^2+x^4-z^4*x^2"), Sign::Gt)],
        );
        let at_origin = check_criterion(&d, [0.0; 3], None, &quick(0.1, 6, 2000), 19).unwrap();
        assert!(at_origin.clause1 < 0.25, "clause1 {}", at_origin.clause1);
        assert!(at_origin.clause2 < 0.25, "clause2 {}", at_origin.clause2);
        assert!(!at_origin.holds);

        let off_origin =
            check_criterion(&d, [0.0, 0.0, 0.5], None, &quick(0.1, 6, 2000), 19).unwrap();
        assert!(off_origin.holds);
        assert!(off_origin.clause1 > off_origin.alpha, "clause1 {}", off_origin.clause1);
    }

    #[test]
    fn criterion_counts_the_slit_tip_direction() {
        // Slit disk: the boundary link at the tip is the single direction
        // along the slit, and the counting clause sees it.
        let slit = Constraint::Crack {
            poly: p2("y"),
            clip: vec![(p2("x"), Sign::Gt)],
        };
        let d = DomainSpec::new(2, Ball::new([0.0; 3], 1.0), vec![slit]);
        let report = check_criterion(&d, [0.0; 3], None, &quick(0.25, 5, 2000), 23).unwrap();
        assert!((report.alpha - 0.1).abs() < 1e-12);
        assert!(report.clause1 < 0.05, "clause1 {}", report.clause1);
        assert_eq!(report.clause2, 1.0);
        assert!(report.holds);
    }

    #[test]
    fn criterion_rejects_interior_points() {
        let d = DomainSpec::new(
            3,
            Ball::new([0.0; 3], 1.0),
            vec![Constraint::sign(p3("x"), Sign::Gt)],
        );
        assert!(check_criterion(&d, [0.5, 0.0, 0.0], None, &quick(0.1, 3, 100), 1).is_err());
    }

    #[test]
    fn product_decomposition_holds_for_a_plane_through_the_axis() {
        // {y = 0} contains the z-axis; its link is the great circle
        // through the poles and +-x, which is exactly the product of the
        // normal pair {+-x} with the axis direction.
        let p = p3("y");
        let stratum = StratumSpec::Segment {
            center: [0.0; 3],
            dir: [0.0, 0.0, 1.0],
            half_length: 2.0,
        };
        let gap = check_product_decomposition(
            &LinkTarget::Variety(&p),
            &stratum,
            [0.0, 0.0, 1.0],
            &quick(0.1, 4, 2000),
            29,
        )
        .unwrap();
        assert!(gap < 0.05, "gap {gap}");
    }

    #[test]
    fn product_decomposition_holds_on_the_cubic_singular_axis() {
        let p = p3("x^3+y^2-z^2*x^2");
        let stratum = StratumSpec::Segment {
            center: [0.0; 3],
            dir: [0.0, 0.0, 1.0],
            half_length: 2.0,
        };
        let gap = check_product_decomposition(
            &LinkTarget::Variety(&p),
            &stratum,
            [0.0, 0.0, 1.0],
            &quick(0.064, 6, 3000),
            31,
        )
        .unwrap();
        assert!(gap < 0.05, "gap {gap}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn cones_stabilize_with_negligible_gap(a in 0.3f64..3.0) {
            // z^2 = a (x^2 + y^2) is scale invariant, so the radius-r and
            // radius-r/2 clouds coincide up to root-polishing error.
            let src = format!("z^2 - {a}*x^2 - {a}*y^2");
            let p = Polynomial::parse(&src, 3).unwrap();
            let link = sample_link(
                &LinkTarget::Variety(&p),
                [0.0; 3],
                &LinkParams { r0: 0.2, levels: 2, samples: 600, eps_stab: EPS_STAB },
                41,
            )
            .unwrap();
            prop_assert!(!link.points.is_empty());
            prop_assert!(link.stabilization_gap <= 1e-6, "gap {}", link.stabilization_gap);
        }

        #[test]
        fn wedge_complement_measure_decreases_with_opening(
            th1 in 0.6f64..5.5,
            th2 in 0.6f64..5.5,
        ) {
            // A planar wedge of opening theta has complement link measure
            // 2 pi - theta; wider wedges leave less complement.
            let (lo, hi) = if th1 <= th2 { (th1, th2) } else { (th2, th1) };
            let measure_of = |opening: f64| -> f64 {
                let wedge = move |x: Pt| {
                    let ang = x[1].atan2(x[0]);
                    let ang = if ang < 0.0 { ang + 2.0 * PI } else { ang };
                    ang > 0.0 && ang < opening
                };
                let complement = move |x: Pt| !wedge(x);
                sample_link(
                    &LinkTarget::Region(&complement, 2),
                    [0.0; 3],
                    &LinkParams { r0: 0.2, levels: 2, samples: 1500, eps_stab: EPS_STAB },
                    43,
                )
                .unwrap()
                .measure_estimate
            };
            let m_lo = measure_of(lo);
            let m_hi = measure_of(hi);
            prop_assert!(m_hi <= m_lo + 0.15, "narrow {m_lo}, wide {m_hi}");
            prop_assert!((m_lo - (2.0 * PI - lo)).abs() < 0.35, "measure {m_lo} vs {}", 2.0 * PI - lo);
        }
    }
}
