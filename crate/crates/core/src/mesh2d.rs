//! Boundary-fitted, graded triangulations of 2D semialgebraic domains.
//!
//! The mesher lays a uniform background grid of spacing `h` anchored at the
//! ball center, refines cells toward grading centers by quadtree splitting
//! under the radical law `h * (d/R)^((gamma-1)/gamma)`, keeps the cells whose
//! closure lies in the domain, and triangulates them conformingly (2:1
//! balanced, hanging nodes absorbed by center fans). Vertices on the
//! staircase rim are projected onto the true boundary by Newton iteration
//! along the constraint gradient, or radially for the bounding circle.
//!
//! Cracks (codimension-one boundary pieces inside the domain) must be
//! aligned with the background grid. They are meshed by vertex duplication:
//! each crack vertex receives one copy per connected component of its
//! triangle fan after cutting along crack edges, so the two crack sides
//! (four at a crossing) carry independent degrees of freedom while a crack
//! tip keeps a single vertex.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::consts::MESH_MIN_ANGLE_DEG;
use crate::domain::{BoundaryCondition, Constraint, DomainSpec, PieceId, Surface};
use crate::error::Error;
use crate::geom::Pt;
use crate::poly::Polynomial;
use crate::Result;

/// A mesh vertex position.
pub type V2 = [f64; 2];

fn lift(v: V2) -> Pt {
    [v[0], v[1], 0.0]
}

/// Conforming triangulation of a 2D domain.
#[derive(Debug, Clone)]
pub struct TriMesh {
    /// Vertex positions. Crack vertices appear once per crack side.
    pub vertices: Vec<V2>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges with their condition tag. Each edge is oriented as it
    /// appears in its unique triangle, so the domain lies on its left and
    /// the outward normal is the right-hand rotation of the edge vector.
    pub boundary_edges: Vec<([usize; 2], BoundaryCondition)>,
    /// Grading centers used to build the mesh, with their exponents.
    pub grading_centers: Vec<(V2, f64)>,
    /// Vertices whose boundary projection failed; they sit at the best
    /// sampled boundary point found instead of on the zero set.
    pub flagged: Vec<usize>,
}

impl TriMesh {
    pub fn vertex_pt(&self, i: usize) -> Pt {
        lift(self.vertices[i])
    }

    pub fn triangle_points(&self, t: usize) -> [V2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of triangle `t`; positive for counterclockwise order.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_points(t);
        signed_area(p, q, r)
    }

    /// Longest edge of triangle `t`.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_points(t);
        dist2(p, q).max(dist2(q, r)).max(dist2(r, p))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [p, q, r] = self.triangle_points(t);
                min_angle_deg(p, q, r)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Edge-sharing and orientation check: every edge borders one or two
    /// triangles, no vertex sits in the interior of a lattice edge, and all
    /// triangles are positively oriented.
    pub fn conformity_ok(&self) -> bool {
        if (0..self.triangles.len()).any(|t| self.triangle_area(t) <= 0.0) {
            return false;
        }
        let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if counts.values().any(|&c| c > 2) {
            return false;
        }
        // A hanging node reveals itself as a vertex lying exactly at the
        // midpoint of an edge bordered by a single triangle.
        let by_bits: HashSet<(u64, u64)> = self
            .vertices
            .iter()
            .map(|v| (v[0].to_bits(), v[1].to_bits()))
            .collect();
        for (&(a, b), &c) in &counts {
            if c == 1 {
                let m = [
                    (self.vertices[a][0] + self.vertices[b][0]) / 2.0,
                    (self.vertices[a][1] + self.vertices[b][1]) / 2.0,
                ];
                if by_bits.contains(&(m[0].to_bits(), m[1].to_bits())) {
                    return false;
                }
            }
        }
        true
    }
}

/// Summary statistics of a mesh.
#[derive(Debug, Clone, Copy)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    /// Longest edge over the shortest altitude; 2 for a right isoceles
    /// triangle, about 1.15 for an equilateral one.
    pub max_aspect: f64,
    pub conformity: bool,
}

/// Computes the quality report of a mesh.
pub fn mesh_quality(m: &TriMesh) -> MeshQuality {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for t in 0..m.triangles.len() {
        let [p, q, r] = m.triangle_points(t);
        min_angle = min_angle.min(min_angle_deg(p, q, r));
        let area = signed_area(p, q, r).abs();
        let lmax = dist2(p, q).max(dist2(q, r)).max(dist2(r, p));
        if area > 0.0 {
            max_aspect = max_aspect.max(lmax * lmax / (2.0 * area));
        } else {
            max_aspect = f64::INFINITY;
        }
    }
    MeshQuality {
        min_angle_deg: min_angle,
        max_aspect,
        conformity: m.conformity_ok(),
    }
}

fn dist2(a: V2, b: V2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(p: V2, q: V2, r: V2) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
}

fn min_angle_deg(p: V2, q: V2, r: V2) -> f64 {
    let mut best = f64::INFINITY;
    let pts = [p, q, r];
    for i in 0..3 {
        let a = pts[i];
        let b = pts[(i + 1) % 3];
        let c = pts[(i + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if nu == 0.0 || nv == 0.0 {
            return 0.0;
        }
        let cosv = ((u[0] * v[0] + u[1] * v[1]) / (nu * nv)).clamp(-1.0, 1.0);
        best = best.min(cosv.acos().to_degrees());
    }
    best
}

/// Quadtree cell: `level`, then column and row at that level. The cell
/// covers `anchor + [i, i+1] * h / 2^level` per axis.
type CellKey = (u8, i64, i64);

const MAX_DEPTH: u8 = 20;
const MAX_BASE_CELLS_PER_AXIS: i64 = 1024;

struct Grid {
    anchor: V2,
    h: f64,
}

impl Grid {
    fn cell_size(&self, level: u8) -> f64 {
        self.h / f64::from(1u32 << level)
    }

    fn cell_box(&self, k: CellKey) -> (V2, V2) {
        let s = self.cell_size(k.0);
        let x0 = self.anchor[0] + k.1 as f64 * s;
        let y0 = self.anchor[1] + k.2 as f64 * s;
        ([x0, y0], [x0 + s, y0 + s])
    }

    fn lattice_coord(&self, j: (i64, i64), lmax: u8) -> V2 {
        let s = self.cell_size(lmax);
        [self.anchor[0] + j.0 as f64 * s, self.anchor[1] + j.1 as f64 * s]
    }
}

fn parent(k: CellKey) -> CellKey {
    (k.0 - 1, k.1.div_euclid(2), k.2.div_euclid(2))
}

fn children(k: CellKey) -> [CellKey; 4] {
    let (l, i, j) = k;
    [
        (l + 1, 2 * i, 2 * j),
        (l + 1, 2 * i + 1, 2 * j),
        (l + 1, 2 * i, 2 * j + 1),
        (l + 1, 2 * i + 1, 2 * j + 1),
    ]
}

fn box_point_dist(lo: V2, hi: V2, p: V2) -> f64 {
    let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
    let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
    (dx * dx + dy * dy).sqrt()
}

/// Builds a boundary-fitted triangulation of a 2D domain with target
/// element size `h`, graded toward each center in `grading` by the radical
/// law with the given exponent.
pub fn build_mesh(domain: &DomainSpec, h: f64, grading: &[(V2, f64)]) -> Result<TriMesh> {
    domain.validate()?;
    if domain.dim != 2 {
        return Err(Error::validation(format!(
            "meshing needs a 2D domain, got dimension {}",
            domain.dim
        )));
    }
    if !(h > 0.0) {
        return Err(Error::validation("mesh size h must be positive"));
    }
    for (_, gamma) in grading {
        if !(*gamma >= 1.0) {
            return Err(Error::validation("grading exponent must be >= 1"));
        }
    }
    let radius = domain.ball.radius;
    let n_base = (radius / h).ceil() as i64 + 1;
    if n_base > MAX_BASE_CELLS_PER_AXIS {
        return Err(Error::validation(format!(
            "mesh size h = {h} is too small for ball radius {radius} ({n_base} cells per half-axis)"
        )));
    }
    let grid = Grid {
        anchor: [domain.ball.center[0], domain.ball.center[1]],
        h,
    };
    let center2 = grid.anchor;

    // Base cells intersecting the closed ball.
    let mut leaves: HashSet<CellKey> = HashSet::new();
    for i in -n_base..n_base {
        for j in -n_base..n_base {
            let k = (0u8, i, j);
            let (lo, hi) = grid.cell_box(k);
            if box_point_dist(lo, hi, center2) <= radius {
                leaves.insert(k);
            }
        }
    }

    refine_toward_centers(&grid, &mut leaves, grading, radius);
    balance(&mut leaves);

    // Keep the cells whose closure lies in the domain closure and whose
    // center is strictly interior.
    let crack_polys: Vec<&Polynomial> = domain
        .constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::Crack { poly, .. } => Some(poly),
            _ => None,
        })
        .collect();
    let mut kept: Vec<CellKey> = Vec::new();
    for &k in leaves.iter() {
        let (lo, hi) = grid.cell_box(k);
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let probes = [
            lo,
            [hi[0], lo[1]],
            hi,
            [lo[0], hi[1]],
            [mid[0], lo[1]],
            [hi[0], mid[1]],
            [mid[0], hi[1]],
            [lo[0], mid[1]],
            mid,
        ];
        if probes.iter().all(|p| domain.contains_closure(lift(*p)))
            && domain.contains(lift(mid))
        {
            check_cell_crack_free(&crack_polys, lo, hi, mid)?;
            kept.push(k);
        }
    }
    if kept.is_empty() {
        return Err(Error::Meshing(format!(
            "domain has no complete cells at mesh size h = {h}; empty at this resolution"
        )));
    }
    kept.sort();
    let lmax = kept.iter().map(|k| k.0).max().unwrap();

    // Register corner vertices in deterministic cell order.
    let mut registry: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<V2> = Vec::new();
    let mut vert_size: Vec<f64> = Vec::new();
    let register = |key: (i64, i64),
                        size: f64,
                        registry: &mut HashMap<(i64, i64), usize>,
                        vertices: &mut Vec<V2>,
                        vert_size: &mut Vec<f64>|
     -> usize {
        if let Some(&id) = registry.get(&key) {
            vert_size[id] = vert_size[id].min(size);
            return id;
        }
        let id = vertices.len();
        vertices.push(grid.lattice_coord(key, lmax));
        vert_size.push(size);
        registry.insert(key, id);
        id
    };
    for &k in &kept {
        let step = 1i64 << (lmax - k.0);
        let s = grid.cell_size(k.0);
        let (jx, jy) = (k.1 * step, k.2 * step);
        for key in [(jx, jy), (jx + step, jy), (jx + step, jy + step), (jx, jy + step)] {
            register(key, s, &mut registry, &mut vertices, &mut vert_size);
        }
    }

    // Collect per-cell triangulation plans: plain cells get a diagonal
    // split, cells with hanging midpoints a center fan.
    enum CellPlan {
        Plain { c: [usize; 4], parity_even: bool },
        Fan { center: usize, ring: Vec<usize> },
    }
    let mut plans: Vec<CellPlan> = Vec::new();
    for &k in &kept {
        let step = 1i64 << (lmax - k.0);
        let half = step / 2;
        let s = grid.cell_size(k.0);
        let (jx, jy) = (k.1 * step, k.2 * step);
        let c = [
            registry[&(jx, jy)],
            registry[&(jx + step, jy)],
            registry[&(jx + step, jy + step)],
            registry[&(jx, jy + step)],
        ];
        let mid_keys = [
            (jx + half, jy),
            (jx + step, jy + half),
            (jx + half, jy + step),
            (jx, jy + half),
        ];
        let mids: Vec<Option<usize>> = mid_keys
            .iter()
            .map(|key| if half > 0 { registry.get(key).copied() } else { None })
            .collect();
        if mids.iter().all(|m| m.is_none()) {
            plans.push(CellPlan::Plain {
                c,
                parity_even: (k.1 + k.2).rem_euclid(2) == 0,
            });
        } else {
            let center =
                register((jx + half, jy + half), s, &mut registry, &mut vertices, &mut vert_size);
            let mut ring: Vec<usize> = Vec::with_capacity(8);
            for e in 0..4 {
                ring.push(c[e]);
                if let Some(m) = mids[e] {
                    ring.push(m);
                }
            }
            plans.push(CellPlan::Fan { center, ring });
        }
    }
    let emit = |plans: &[CellPlan], rim: Option<&BTreeSet<usize>>| -> Vec<[usize; 3]> {
        let mut tris = Vec::new();
        for plan in plans {
            match plan {
                CellPlan::Plain { c, parity_even } => {
                    // A diagonal joining two vertices that boundary snapping
                    // displaced can spawn a sliver whose corners all land on
                    // one arc. Prefer the diagonal with fewer displaced
                    // endpoints; where nothing moved the parity pattern
                    // stands, which keeps halved meshes exactly nested on
                    // polygonal domains.
                    let use_even = match rim {
                        Some(rim) => {
                            let even = rim.contains(&c[0]) as u8 + rim.contains(&c[2]) as u8;
                            let odd = rim.contains(&c[1]) as u8 + rim.contains(&c[3]) as u8;
                            if even != odd {
                                even < odd
                            } else {
                                *parity_even
                            }
                        }
                        None => *parity_even,
                    };
                    if use_even {
                        tris.push([c[0], c[1], c[2]]);
                        tris.push([c[0], c[2], c[3]]);
                    } else {
                        tris.push([c[1], c[2], c[3]]);
                        tris.push([c[1], c[3], c[0]]);
                    }
                }
                CellPlan::Fan { center, ring } => {
                    for i in 0..ring.len() {
                        tris.push([*center, ring[i], ring[(i + 1) % ring.len()]]);
                    }
                }
            }
        }
        tris
    };
    // Boundary edges are cell sides, independent of diagonal choice, so the
    // rim found on the first pass stays valid for the second.
    let rim = boundary_vertex_set(&emit(&plans, None));

    // Project staircase vertices onto the true boundary.
    let surfaces = domain.boundary_surfaces();
    let scales: Vec<f64> = surfaces
        .iter()
        .map(|s| {
            s.poly
                .sup_bound_on_ball(domain.ball.center, domain.ball.radius * 1.05)
                .max(1e-30)
        })
        .collect();
    let grads: Vec<Vec<Polynomial>> = surfaces.iter().map(|s| s.poly.gradient()).collect();
    // Cracks are interior slits kept grid-exact by the alignment check, so
    // they are never snap targets; a staircase vertex of the outer rim must
    // not be pulled onto a nearby crack.
    let snappable: Vec<bool> = surfaces
        .iter()
        .map(|s| match s.piece {
            PieceId::Constraint(i) => {
                !matches!(domain.constraints[i], Constraint::Crack { .. })
            }
            _ => true,
        })
        .collect();
    let mut flagged: Vec<usize> = Vec::new();
    let mut displaced: BTreeSet<usize> = BTreeSet::new();
    for &v in &rim {
        let p = lift(vertices[v]);
        let already = surfaces
            .iter()
            .zip(&scales)
            .any(|(s, sc)| s.poly.value(p).abs() <= 1e-9 * sc && s.within_closure(p));
        if already {
            continue;
        }
        let cap = 3.0 * vert_size[v];
        let mut best: Option<(f64, Pt)> = None;
        for (si, surf) in surfaces.iter().enumerate() {
            if !snappable[si] {
                continue;
            }
            let q = if surf.piece == PieceId::Ball {
                radial_projection(domain, p)
            } else {
                crate::domain::project_to_variety(&surf.poly, &grads[si], p, 1e-13, 40)
            };
            if let Some(q) = q {
                let d = crate::geom::dist(p, q);
                if d <= cap && surf.within_closure(q) && best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, q));
                }
            }
        }
        if best.is_none() {
            best = bisect_to_boundary(&surfaces, &scales, &grads, &snappable, p, cap);
        }
        match best {
            Some((_, q)) => {
                vertices[v] = [q[0], q[1]];
                displaced.insert(v);
            }
            None => flagged.push(v),
        }
    }
    let mut triangles = emit(&plans, Some(&displaced));

    // Duplicate crack vertices per germ component.
    for c in &domain.constraints {
        if let Constraint::Crack { poly, clip } = c {
            let scale = poly
                .sup_bound_on_ball(domain.ball.center, domain.ball.radius * 1.05)
                .max(1e-30);
            duplicate_crack_vertices(&mut vertices, &mut triangles, poly, clip, scale);
        }
    }

    // Final boundary extraction and tagging.
    let boundary = oriented_boundary_edges(&triangles);
    let mut boundary_edges: Vec<([usize; 2], BoundaryCondition)> = Vec::new();
    for [a, b] in boundary {
        let pa = lift(vertices[a]);
        let pb = lift(vertices[b]);
        let piece = attribute_edge(&surfaces, &scales, pa, pb);
        let tag = domain.condition_of(piece)?;
        boundary_edges.push(([a, b], tag));
    }

    let mut mesh = TriMesh {
        vertices,
        triangles,
        boundary_edges,
        grading_centers: grading.to_vec(),
        flagged,
    };
    if mesh.min_angle_deg() < MESH_MIN_ANGLE_DEG {
        smooth_interior(&mut mesh, grading);
    }
    debug_assert!(mesh.conformity_ok());
    Ok(mesh)
}

/// Splits leaves until every cell obeys the radical size law of each
/// grading center, down to each center's depth cap.
fn refine_toward_centers(
    grid: &Grid,
    leaves: &mut HashSet<CellKey>,
    grading: &[(V2, f64)],
    radius: f64,
) {
    let caps: Vec<u8> = grading
        .iter()
        .map(|(_, gamma)| {
            let levels = (gamma - 1.0) * (radius / grid.h).log2();
            levels.ceil().clamp(0.0, f64::from(MAX_DEPTH)) as u8
        })
        .collect();
    let mut work: Vec<CellKey> = leaves.iter().copied().collect();
    while let Some(k) = work.pop() {
        if !leaves.contains(&k) {
            continue;
        }
        let (lo, hi) = grid.cell_box(k);
        let s = grid.cell_size(k.0);
        let needs_split = grading.iter().zip(&caps).any(|((c, gamma), &cap)| {
            if k.0 >= cap {
                return false;
            }
            let d = box_point_dist(lo, hi, *c);
            let target = grid.h * (d / radius).powf((gamma - 1.0) / gamma);
            s > target
        });
        if needs_split {
            leaves.remove(&k);
            for ch in children(k) {
                leaves.insert(ch);
                work.push(ch);
            }
        }
    }
}

/// Enforces the 2:1 level difference between edge-adjacent leaves.
fn balance(leaves: &mut HashSet<CellKey>) {
    let mut work: Vec<CellKey> = leaves.iter().copied().collect();
    while let Some(k) = work.pop() {
        if !leaves.contains(&k) {
            continue;
        }
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let nk = (k.0, k.1 + dx, k.2 + dy);
            let mut a = nk;
            loop {
                if leaves.contains(&a) {
                    if k.0 as i16 - a.0 as i16 >= 2 {
                        leaves.remove(&a);
                        for ch in children(a) {
                            leaves.insert(ch);
                            work.push(ch);
                        }
                        work.push(k);
                    }
                    break;
                }
                if a.0 == 0 {
                    break;
                }
                a = parent(a);
            }
        }
    }
}

/// Rejects cells whose interior is cut by a crack: all interior probes of a
/// kept cell must see a single strict sign of every crack polynomial.
fn check_cell_crack_free(
    crack_polys: &[&Polynomial],
    lo: V2,
    hi: V2,
    mid: V2,
) -> Result<()> {
    if crack_polys.is_empty() {
        return Ok(());
    }
    let pull = |a: V2| -> V2 {
        [a[0] + 0.25 * (mid[0] - a[0]), a[1] + 0.25 * (mid[1] - a[1])]
    };
    let probes = [
        mid,
        pull(lo),
        pull([hi[0], lo[1]]),
        pull(hi),
        pull([lo[0], hi[1]]),
        pull([mid[0], lo[1]]),
        pull([hi[0], mid[1]]),
        pull([mid[0], hi[1]]),
        pull([lo[0], mid[1]]),
    ];
    for poly in crack_polys {
        let mut pos = false;
        let mut neg = false;
        for pr in &probes {
            let v = poly.value(lift(*pr));
            if v > 0.0 {
                pos = true;
            } else if v < 0.0 {
                neg = true;
            } else {
                pos = true;
                neg = true;
            }
        }
        if pos && neg {
            return Err(Error::Meshing(format!(
                "crack {{{} = 0}} cuts through cell interiors; align it with the mesh grid",
                poly
            )));
        }
    }
    Ok(())
}

fn radial_projection(domain: &DomainSpec, p: Pt) -> Option<Pt> {
    let c = domain.ball.center;
    let d = crate::geom::sub(p, c);
    let n = crate::geom::norm(d);
    if n == 0.0 {
        return None;
    }
    Some(crate::geom::add(c, crate::geom::scale(d, domain.ball.radius / n)))
}

/// Fallback projection: walk along the gradient direction of the closest
/// surface until the polynomial changes sign, then bisect. Returns the
/// point and its distance, or None if no surface is reachable within `cap`.
fn bisect_to_boundary(
    surfaces: &[Surface],
    scales: &[f64],
    grads: &[Vec<Polynomial>],
    snappable: &[bool],
    p: Pt,
    cap: f64,
) -> Option<(f64, Pt)> {
    let mut order: Vec<usize> = (0..surfaces.len()).filter(|&i| snappable[i]).collect();
    order.sort_by(|&a, &b| {
        let ra = surfaces[a].poly.value(p).abs() / scales[a];
        let rb = surfaces[b].poly.value(p).abs() / scales[b];
        ra.partial_cmp(&rb).unwrap()
    });
    for si in order {
        let g = Polynomial::gradient_value(&grads[si], p);
        let dir = crate::geom::normalize(g)?;
        let v0 = surfaces[si].poly.value(p);
        for sgn in [1.0, -1.0] {
            let step = crate::geom::scale(dir, sgn * cap / 16.0);
            let mut prev = p;
            let mut prev_v = v0;
            for _ in 0..16 {
                let next = crate::geom::add(prev, step);
                let v = surfaces[si].poly.value(next);
                if v == 0.0 || v.signum() != prev_v.signum() {
                    let (mut a, mut b) = (prev, next);
                    let mut va = prev_v;
                    for _ in 0..60 {
                        let m = crate::geom::scale(crate::geom::add(a, b), 0.5);
                        let vm = surfaces[si].poly.value(m);
                        if vm == 0.0 || vm.signum() == va.signum() {
                            a = m;
                            va = vm;
                        } else {
                            b = m;
                        }
                    }
                    let q = crate::geom::scale(crate::geom::add(a, b), 0.5);
                    if surfaces[si].within_closure(q) {
                        return Some((crate::geom::dist(p, q), q));
                    }
                    break;
                }
                prev = next;
                prev_v = v;
            }
        }
    }
    None
}

/// Vertices incident to an edge bordered by exactly one triangle.
fn boundary_vertex_set(triangles: &[[usize; 3]]) -> BTreeSet<usize> {
    let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
    for tri in triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut out = BTreeSet::new();
    for tri in triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if counts[&(a.min(b), a.max(b))] == 1 {
                out.insert(a);
                out.insert(b);
            }
        }
    }
    out
}

/// Boundary edges oriented as traversed by their unique triangle.
fn oriented_boundary_edges(triangles: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
    for tri in triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut out = Vec::new();
    for tri in triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if counts[&(a.min(b), a.max(b))] == 1 {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Splits every crack vertex into one copy per connected component of its
/// incident triangles, where two triangles connect through a shared edge
/// that does not itself lie on the crack. A crack tip has one component and
/// keeps its single vertex; an interior crack vertex gets two copies; a
/// crossing gets four.
fn duplicate_crack_vertices(
    vertices: &mut Vec<V2>,
    triangles: &mut [[usize; 3]],
    poly: &Polynomial,
    clip: &[(Polynomial, crate::domain::Sign)],
    scale: f64,
) {
    let on_crack = |v: V2| -> bool {
        let p = lift(v);
        poly.value(p).abs() <= 1e-9 * scale
            && clip.iter().all(|(q, s)| s.holds_closed(q.value(p)))
    };
    let crack_ids: Vec<usize> = (0..vertices.len())
        .filter(|&i| on_crack(vertices[i]))
        .collect();
    let crack_set: HashSet<usize> = crack_ids.iter().copied().collect();
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            if crack_set.contains(&v) {
                incident.entry(v).or_default().push(t);
            }
        }
    }
    for (&v, tris) in &incident {
        // Component labels over the local fan.
        let mut label = vec![usize::MAX; tris.len()];
        let mut n_comp = 0;
        for start in 0..tris.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let comp = n_comp;
            n_comp += 1;
            let mut stack = vec![start];
            label[start] = comp;
            while let Some(i) = stack.pop() {
                let ti = triangles[tris[i]];
                for (j, other) in tris.iter().enumerate() {
                    if label[j] != usize::MAX {
                        continue;
                    }
                    let tj = triangles[*other];
                    // Shared edge through v that stays off the crack.
                    let shared = ti.iter().any(|&w| {
                        w != v && !crack_set.contains(&w) && tj.contains(&w)
                    });
                    if shared {
                        label[j] = comp;
                        stack.push(j);
                    }
                }
            }
        }
        for comp in 1..n_comp {
            let copy = vertices.len();
            vertices.push(vertices[v]);
            for (i, &t) in tris.iter().enumerate() {
                if label[i] == comp {
                    for slot in triangles[t].iter_mut() {
                        if *slot == v {
                            *slot = copy;
                        }
                    }
                }
            }
        }
    }
}

/// Finds the boundary piece carrying an edge: the first surface containing
/// both endpoints, else the surface with the smallest relative residual at
/// the midpoint.
fn attribute_edge(surfaces: &[Surface], scales: &[f64], pa: Pt, pb: Pt) -> PieceId {
    for (s, sc) in surfaces.iter().zip(scales) {
        let tol = 1e-8 * sc;
        if s.poly.value(pa).abs() <= tol
            && s.poly.value(pb).abs() <= tol
            && s.within_closure(pa)
            && s.within_closure(pb)
        {
            return s.piece;
        }
    }
    let mid = crate::geom::scale(crate::geom::add(pa, pb), 0.5);
    let mut best = (f64::INFINITY, surfaces.last().unwrap().piece);
    for (s, sc) in surfaces.iter().zip(scales) {
        if !s.within_closure(mid) {
            continue;
        }
        let r = s.poly.value(mid).abs() / sc;
        if r < best.0 {
            best = (r, s.piece);
        }
    }
    best.1
}

/// Laplacian smoothing of interior vertices, accepting only moves that
/// improve the local minimum angle and keep all incident areas positive.
/// Boundary, crack, and grading-center vertices stay fixed.
fn smooth_interior(mesh: &mut TriMesh, grading: &[(V2, f64)]) {
    let fixed: HashSet<usize> = mesh
        .boundary_edges
        .iter()
        .flat_map(|([a, b], _)| [*a, *b])
        .chain((0..mesh.vertices.len()).filter(|&i| {
            grading
                .iter()
                .any(|(c, _)| dist2(mesh.vertices[i], *c) < 1e-12)
        }))
        .collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    for _ in 0..10 {
        let mut moved = false;
        for v in 0..mesh.vertices.len() {
            if fixed.contains(&v) || incident[v].is_empty() {
                continue;
            }
            let mut nbrs: BTreeSet<usize> = BTreeSet::new();
            for &t in &incident[v] {
                for &w in &mesh.triangles[t] {
                    if w != v {
                        nbrs.insert(w);
                    }
                }
            }
            let mut avg = [0.0, 0.0];
            for &w in &nbrs {
                avg[0] += mesh.vertices[w][0];
                avg[1] += mesh.vertices[w][1];
            }
            avg[0] /= nbrs.len() as f64;
            avg[1] /= nbrs.len() as f64;
            let local_min = |pos: V2, mesh: &TriMesh| -> f64 {
                incident[v]
                    .iter()
                    .map(|&t| {
                        let mut pts = mesh.triangle_points(t);
                        for (i, &w) in mesh.triangles[t].iter().enumerate() {
                            if w == v {
                                pts[i] = pos;
                            }
                        }
                        if signed_area(pts[0], pts[1], pts[2]) <= 0.0 {
                            return -1.0;
                        }
                        min_angle_deg(pts[0], pts[1], pts[2])
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            let before = local_min(mesh.vertices[v], mesh);
            let after = local_min(avg, mesh);
            if after > before {
                mesh.vertices[v] = avg;
                moved = true;
            }
        }
        if !moved || mesh.min_angle_deg() >= MESH_MIN_ANGLE_DEG {
            break;
        }
    }
}

/// Writes the frozen plain-text mesh format: vertex count and coordinates,
/// triangle count and index triples, boundary edge count and tagged pairs.
pub fn export_text(m: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str(&format!("V {}\n", m.vertices.len()));
    for v in &m.vertices {
        out.push_str(&format!("{:.12e} {:.12e}\n", v[0], v[1]));
    }
    out.push_str(&format!("T {}\n", m.triangles.len()));
    for t in &m.triangles {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    out.push_str(&format!("B {}\n", m.boundary_edges.len()));
    for ([a, b], tag) in &m.boundary_edges {
        let name = match tag {
            BoundaryCondition::Dirichlet => "DIRICHLET",
            BoundaryCondition::Neumann => "NEUMANN",
        };
        out.push_str(&format!("{} {} {}\n", a, b, name));
    }
    out
}

/// Maximum constraint residual over boundary vertices, relative to each
/// surface's scale; measures how well vertices sit on the boundary.
pub fn max_boundary_residual(domain: &DomainSpec, mesh: &TriMesh) -> f64 {
    let surfaces = domain.boundary_surfaces();
    let scales: Vec<f64> = surfaces
        .iter()
        .map(|s| {
            s.poly
                .sup_bound_on_ball(domain.ball.center, domain.ball.radius * 1.05)
                .max(1e-30)
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut seen = BTreeSet::new();
    for ([a, b], _) in &mesh.boundary_edges {
        for &v in &[*a, *b] {
            if !seen.insert(v) {
                continue;
            }
            let p = mesh.vertex_pt(v);
            let r = surfaces
                .iter()
                .zip(&scales)
                .filter(|(s, _)| s.within_closure(p))
                .map(|(s, sc)| s.poly.value(p).abs() / sc)
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(r);
        }
    }
    worst
}
