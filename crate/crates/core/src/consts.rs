//! Frozen numeric tolerances and defaults used across the crate.
//!
//! Every constant here is part of the observable contract: run manifests
//! echo the full table so that results can be tied to the exact thresholds
//! that produced them. Change a value here and recorded runs change meaning.

/// Residual threshold below which a polynomial value counts as zero.
pub const EPS_VAL: f64 = 1e-10;

/// Gradient-norm threshold below which a point counts as critical.
pub const EPS_GRAD: f64 = 1e-8;

/// De-duplication radius for point clouds, relative to the region radius.
pub const EPS_MERGE_REL: f64 = 1e-6;

/// Hausdorff stabilization tolerance for link clouds across dyadic radii.
pub const EPS_STAB: f64 = 0.02;

/// Relative tolerance for boundary-vertex constraint residuals after
/// Newton projection (scaled by the local element size).
pub const EPS_FIT: f64 = 1e-8;

/// Walk-on-spheres termination shell width, relative to the ball radius.
pub const EPS_WOS_REL: f64 = 1e-4;

/// Hard cap on walk-on-spheres step counts; longer walks are excluded.
pub const WOS_MAX_STEPS: usize = 100_000;

/// Fraction of excluded walks above which an estimate is flagged.
pub const WOS_EXCLUSION_FLAG: f64 = 0.01;

/// Default criterion threshold as a fraction of the relevant full
/// spherical measure (the smaller of the two clause scales).
pub const ALPHA_FRACTION: f64 = 0.05;

/// Chain-break factor for codimension-2 polyline length: gaps larger than
/// this multiple of the median nearest-neighbor spacing split chains.
pub const LINK_GAP_FACTOR: f64 = 5.0;

/// Absolute cap (geodesic radians) on polyline chain segments, so that a
/// handful of isolated cluster points never fabricates arc length.
pub const LINK_GAP_ABS: f64 = 0.5;

/// Angular gap (radians) separating clusters when counting isolated link
/// directions on a circle.
pub const LINK_CLUSTER_GAP: f64 = 0.1;

/// Scan resolution for root detection: samples per full 2D circle sweep
/// and per random great circle in 3D, plus bisection depth per bracket.
pub const LINK_SCAN_2D: usize = 512;
pub const LINK_SCAN_CIRCLE: usize = 96;
pub const LINK_BISECT_ITERS: usize = 48;

/// Offset used to test which sides of a surface touch the domain, as a
/// fraction of the link radius.
pub const LINK_ADJ_REL: f64 = 1e-3;

/// Multiplier on the upper-quantile nearest-neighbor spacing used to pick
/// the fill radius for Monte-Carlo spherical area estimates. The quantile
/// tracks the cloud's covering radius, so the fill region has no interior
/// holes; the multiplier adds headroom.
pub const FILL_FACTOR: f64 = 1.5;
pub const FILL_QUANTILE: f64 = 0.99;

/// Clamp range for the Monte-Carlo fill radius (geodesic radians).
pub const FILL_MIN: f64 = 0.02;
pub const FILL_MAX: f64 = 0.30;

/// Net radius for evening out curve clouds before polyline chaining, as a
/// multiple of the median nearest-neighbor spacing. Random root samples
/// have exponential spacing; snapping to a net of this radius removes the
/// short-gap noise that fragments greedy chains.
pub const CHAIN_NET_FACTOR: f64 = 2.0;

/// Sample count for Monte-Carlo spherical measure integration.
pub const MEASURE_SAMPLES: usize = 20_000;

/// Cap on link cloud size fed to measure and Hausdorff routines; larger
/// clouds are thinned deterministically by stride.
pub const LINK_CLOUD_CAP: usize = 8_000;

/// Default grading strength toward singular points.
pub const GRADING_DEFAULT: f64 = 3.0;

/// Minimum acceptable triangle angle (degrees) away from graded cores.
pub const MESH_MIN_ANGLE_DEG: f64 = 15.0;

/// Minimum acceptable triangle angle (degrees) inside the innermost
/// graded ring around a grading center.
pub const MESH_MIN_ANGLE_CORE_DEG: f64 = 5.0;

/// Relative residual target for the conjugate gradient solver.
pub const CG_REL_TOL: f64 = 1e-10;

/// Iteration cap for the conjugate gradient solver, per unknown.
pub const CG_MAX_ITERS_PER_UNKNOWN: usize = 20;

/// CG stagnation window: no 10x residual drop over this many iterations
/// aborts the solve with a diagnostic.
pub const CG_STAGNATION_WINDOW: usize = 500;

/// Default ellipticity floor for coefficient fields.
pub const LAMBDA0_DEFAULT: f64 = 1e-6;

/// Default exponent grid for critical-exponent estimation: start, step, end.
pub const P_GRID_START: f64 = 2.0;
pub const P_GRID_STEP: f64 = 0.25;
pub const P_GRID_END: f64 = 8.0;

/// Outermost annulus radius as a fraction of the domain radius.
pub const ANNULUS_R0_REL: f64 = 0.25;

/// Number of dyadic annulus levels in a scaling profile.
pub const ANNULUS_LEVELS: usize = 8;

/// Number of innermost annuli dropped from FEM profile fits (below the
/// mesh resolution floor).
pub const ANNULUS_DROP_INNER: usize = 2;

/// Fraction of low-confidence gradient samples above which a sampled
/// annulus is discarded from the fit.
pub const ANNULUS_WOS_DISCARD: f64 = 0.20;

/// Sample budget per annulus for sampled (Monte-Carlo) profiles.
pub const ANNULUS_SAMPLES: usize = 4096;

/// Minimum least-squares fit quality (r^2) for a trusted scaling slope.
pub const FIT_MIN_R2: f64 = 0.90;

/// Scaling slope above which a profile counts as bounded-mass at small
/// radii ("converging tail") when classifying the critical exponent.
pub const BETA_POSITIVE_MARGIN: f64 = 0.1;

/// Stratified sample grid per tube slice in 3D (per axis).
pub const SLICE_GRID_3D: usize = 64;

/// Angular sample count for 2D arc slices.
pub const SLICE_SAMPLES_2D: usize = 1024;

/// Default walker count for walk-on-spheres estimates.
pub const WOS_WALKERS_DEFAULT: usize = 100_000;

/// Walkers per deterministic reduction block.
pub const WOS_BLOCK: usize = 1024;

/// Central-difference step for walk-on-spheres gradients, relative to the
/// ball radius.
pub const WOS_GRAD_STEP_REL: f64 = 0.01;

/// Default per-radius sample budget for link sampling.
pub const LINK_SAMPLES_DEFAULT: usize = 10_000;

/// Default outermost link radius as a fraction of the ball radius, and
/// the number of dyadic radii tried before giving up on stabilization.
pub const LINK_R0_REL: f64 = 0.25;
pub const LINK_RADII: usize = 8;

/// Returns the full tolerance table as (name, value) pairs for manifests.
pub fn table() -> Vec<(&'static str, String)> {
    fn f(v: f64) -> String {
        format!("{v}")
    }
    vec![
        ("eps_val", f(EPS_VAL)),
        ("eps_grad", f(EPS_GRAD)),
        ("eps_merge_rel", f(EPS_MERGE_REL)),
        ("eps_stab", f(EPS_STAB)),
        ("eps_fit", f(EPS_FIT)),
        ("eps_wos_rel", f(EPS_WOS_REL)),
        ("wos_max_steps", WOS_MAX_STEPS.to_string()),
        ("wos_exclusion_flag", f(WOS_EXCLUSION_FLAG)),
        ("alpha_fraction", f(ALPHA_FRACTION)),
        ("link_gap_factor", f(LINK_GAP_FACTOR)),
        ("link_gap_abs", f(LINK_GAP_ABS)),
        ("link_cluster_gap", f(LINK_CLUSTER_GAP)),
        ("link_scan_2d", LINK_SCAN_2D.to_string()),
        ("link_scan_circle", LINK_SCAN_CIRCLE.to_string()),
        ("link_bisect_iters", LINK_BISECT_ITERS.to_string()),
        ("link_adj_rel", f(LINK_ADJ_REL)),
        ("fill_factor", f(FILL_FACTOR)),
        ("fill_quantile", f(FILL_QUANTILE)),
        ("fill_min", f(FILL_MIN)),
        ("fill_max", f(FILL_MAX)),
        ("chain_net_factor", f(CHAIN_NET_FACTOR)),
        ("measure_samples", MEASURE_SAMPLES.to_string()),
        ("link_cloud_cap", LINK_CLOUD_CAP.to_string()),
        ("grading_default", f(GRADING_DEFAULT)),
        ("mesh_min_angle_deg", f(MESH_MIN_ANGLE_DEG)),
        ("mesh_min_angle_core_deg", f(MESH_MIN_ANGLE_CORE_DEG)),
        ("cg_rel_tol", f(CG_REL_TOL)),
        ("cg_max_iters_per_unknown", CG_MAX_ITERS_PER_UNKNOWN.to_string()),
        ("cg_stagnation_window", CG_STAGNATION_WINDOW.to_string()),
        ("lambda0_default", f(LAMBDA0_DEFAULT)),
        ("p_grid_start", f(P_GRID_START)),
        ("p_grid_step", f(P_GRID_STEP)),
        ("p_grid_end", f(P_GRID_END)),
        ("annulus_r0_rel", f(ANNULUS_R0_REL)),
        ("annulus_levels", ANNULUS_LEVELS.to_string()),
        ("annulus_drop_inner", ANNULUS_DROP_INNER.to_string()),
        ("annulus_samples", ANNULUS_SAMPLES.to_string()),
        ("annulus_wos_discard", f(ANNULUS_WOS_DISCARD)),
        ("fit_min_r2", f(FIT_MIN_R2)),
        ("beta_positive_margin", f(BETA_POSITIVE_MARGIN)),
        ("slice_grid_3d", SLICE_GRID_3D.to_string()),
        ("slice_samples_2d", SLICE_SAMPLES_2D.to_string()),
        ("wos_walkers_default", WOS_WALKERS_DEFAULT.to_string()),
        ("wos_block", WOS_BLOCK.to_string()),
        ("wos_grad_step_rel", f(WOS_GRAD_STEP_REL)),
        ("link_samples_default", LINK_SAMPLES_DEFAULT.to_string()),
        ("link_r0_rel", f(LINK_R0_REL)),
        ("link_radii", LINK_RADII.to_string()),
    ]
}
