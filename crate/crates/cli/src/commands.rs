//! The five subcommands. Each one builds the domain from the config,
//! writes CSV tables stamped with the config hash plus a manifest, and
//! reports through [`CliError`] so the binary can map failures to exit
//! codes.

use std::path::PathBuf;

use serde_json::json;

use conelab::cone::{check_criterion, LinkParams};
use conelab::domain::DomainSpec;
use conelab::fem::{assemble, solve, SolutionField};
use conelab::geom::Pt;
use conelab::mesh2d::{build_mesh, max_boundary_residual, mesh_quality, TriMesh};
use conelab::regularity::{
    annulus_profile, annulus_profile_sampled, critical_exponent, wos_gradient_source,
    AnnulusProfile, FieldSource, ProfileSpec, SliceSpec, TubeWidth,
};
use conelab::wos::{wos_batch, WosConfig};

use crate::config::RunConfig;
use crate::output::{config_hash, ensure_dir, fmt, CsvWriter, Manifest};
use crate::CliError;

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub hash: String,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Result<Ctx, CliError> {
        let out = PathBuf::from(&cfg.output.dir);
        ensure_dir(&out)?;
        let hash = config_hash(&cfg);
        Ok(Ctx { cfg, out, hash })
    }

    fn domain(&self) -> Result<DomainSpec, CliError> {
        Ok(self.cfg.build_domain()?)
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, &self.cfg, &self.hash)
    }

    fn mesh_step(&self) -> Result<f64, CliError> {
        self.cfg.analysis.h.ok_or_else(|| {
            CliError::Usage("this command meshes the domain; set `h` in [analysis]".into())
        })
    }

    fn grading_2d(&self) -> Vec<([f64; 2], f64)> {
        self.cfg
            .domain
            .grading
            .iter()
            .map(|(p, s)| ([p[0], p[1]], *s))
            .collect()
    }

    fn solve_2d(&self, domain: &DomainSpec) -> Result<(TriMesh, SolutionField), CliError> {
        let h = self.mesh_step()?;
        let mesh = build_mesh(domain, h, &self.grading_2d())?;
        let sys = assemble(&mesh, domain)?;
        let u = solve(&sys)?;
        Ok((mesh, u))
    }

    fn criterion_points(&self) -> Result<&[Pt], CliError> {
        if self.cfg.analysis.points.is_empty() {
            return Err(CliError::Usage(
                "no points to check; add `point` lines to [analysis] or pass --point".into(),
            ));
        }
        Ok(&self.cfg.analysis.points)
    }

    fn reject_unsupported_3d(&self, domain: &DomainSpec) -> Result<(), CliError> {
        if !domain.source.is_zero() {
            return Err(CliError::Usage("volume source unsupported in 3D".into()));
        }
        if !domain.operator.is_identity() {
            return Err(CliError::Usage(
                "variable coefficients unsupported in 3D; only the identity operator walks".into(),
            ));
        }
        Ok(())
    }

    fn wos_config(&self, domain: DomainSpec) -> WosConfig {
        let mut w = WosConfig::new(domain, self.cfg.analysis.seed);
        if let Some(n) = self.cfg.analysis.walkers {
            w.walkers = n;
        }
        w
    }

    fn profile_spec(&self, domain: &DomainSpec) -> ProfileSpec {
        let a = &self.cfg.analysis;
        let mut spec = ProfileSpec::for_domain(domain);
        spec.seed = a.seed;
        if let Some(r0) = a.r0 {
            spec.r0 = r0;
        }
        if let Some(levels) = a.levels {
            spec.levels = levels;
        }
        if let Some(samples) = a.samples {
            spec.samples = samples;
        }
        spec.p_values = self.cfg.p_values();
        spec
    }
}

fn all_low_confidence(message: &str) -> CliError {
    CliError::Core(conelab::Error::Numerical(message.to_string()))
}

pub fn check_cone(ctx: &Ctx) -> Result<(), CliError> {
    let domain = ctx.domain()?;
    let points = ctx.criterion_points()?;
    let a = &ctx.cfg.analysis;
    let mut params = LinkParams::for_ball_radius(domain.ball.radius);
    if let Some(r0) = a.r0 {
        params.r0 = r0;
    }
    if let Some(levels) = a.levels {
        params.levels = levels;
    }
    if let Some(samples) = a.samples {
        params.samples = samples;
    }

    let mut csv = CsvWriter::new(
        &ctx.out,
        "cone.csv",
        &ctx.hash,
        "t_x,t_y,t_z,clause1,clause2,alpha,holds,confidence",
    );
    let mut manifest = ctx.manifest("check-cone");
    let mut holds_count = 0usize;
    let mut low_count = 0usize;
    let mut alpha_used = None;
    for &t in points {
        let report = check_criterion(&domain, t, a.alpha, &params, a.seed)?;
        alpha_used = Some(report.alpha);
        if report.holds {
            holds_count += 1;
        }
        if report.low_confidence {
            low_count += 1;
        }
        csv.row(&[
            fmt(t[0]),
            fmt(t[1]),
            fmt(t[2]),
            fmt(report.clause1),
            fmt(report.clause2),
            fmt(report.alpha),
            report.holds.to_string(),
            if report.low_confidence { "0".into() } else { "1".into() },
        ]);
    }
    let path = csv.finish()?;
    println!("wrote {} ({} points, {} hold)", path.display(), points.len(), holds_count);

    manifest.resolve("alpha", json!(alpha_used));
    manifest.resolve("link_r0", json!(params.r0));
    manifest.resolve("link_levels", json!(params.levels));
    manifest.resolve("link_samples", json!(params.samples));
    manifest.metric("points", json!(points.len()));
    manifest.metric("holds", json!(holds_count));
    manifest.metric("low_confidence", json!(low_count));
    manifest.output(&path);
    let mpath = manifest.write(&ctx.out)?;
    println!("wrote {}", mpath.display());

    if low_count == points.len() {
        return Err(all_low_confidence("every criterion report is low-confidence"));
    }
    Ok(())
}

pub fn solve_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let domain = ctx.domain()?;
    let mut manifest = ctx.manifest("solve");
    if domain.dim == 2 {
        let (mesh, u) = ctx.solve_2d(&domain)?;
        let path = ctx.out.join("solution.txt");
        let mut text = format!("# config {}\n", ctx.hash);
        text.push_str(&u.export_text());
        std::fs::write(&path, text)?;
        println!(
            "wrote {} ({} vertices, {} triangles, {} iterations)",
            path.display(),
            mesh.vertices.len(),
            mesh.triangles.len(),
            u.iterations
        );
        let q = mesh_quality(&mesh);
        manifest.resolve("h", json!(ctx.cfg.analysis.h));
        manifest.metric("vertices", json!(mesh.vertices.len()));
        manifest.metric("triangles", json!(mesh.triangles.len()));
        manifest.metric("iterations", json!(u.iterations));
        manifest.metric("condition_estimate", json!(u.condition_estimate));
        manifest.metric("energy", json!(u.energy_history.last().copied()));
        manifest.metric("min_angle_deg", json!(q.min_angle_deg));
        manifest.metric("max_aspect", json!(q.max_aspect));
        manifest.metric("boundary_residual", json!(max_boundary_residual(&domain, &mesh)));
        manifest.output(&path);
        let mpath = manifest.write(&ctx.out)?;
        println!("wrote {}", mpath.display());
        return Ok(());
    }

    ctx.reject_unsupported_3d(&domain)?;
    let eval = &ctx.cfg.analysis.eval_points;
    if eval.is_empty() {
        return Err(CliError::Usage(
            "3D solves evaluate at configured points; add `eval_point` lines to [analysis]".into(),
        ));
    }
    let wcfg = ctx.wos_config(domain);
    let records = wos_batch(&wcfg, eval)?;
    let mut csv = CsvWriter::new(
        &ctx.out,
        "wos.csv",
        &ctx.hash,
        "x,y,z,value,stderr,mean_steps,excluded,flagged",
    );
    let mut flagged_count = 0usize;
    let mut excluded_total = 0usize;
    for r in &records {
        let e = r.estimate;
        if e.flagged {
            flagged_count += 1;
        }
        excluded_total += e.excluded;
        csv.row(&[
            fmt(r.point[0]),
            fmt(r.point[1]),
            fmt(r.point[2]),
            fmt(e.mean),
            fmt(e.stderr),
            fmt(e.mean_steps),
            e.excluded.to_string(),
            e.flagged.to_string(),
        ]);
    }
    let path = csv.finish()?;
    println!("wrote {} ({} points, {} flagged)", path.display(), records.len(), flagged_count);

    let total_walks = wcfg.walkers * records.len();
    manifest.resolve("walkers", json!(wcfg.walkers));
    manifest.resolve("shrink_tolerance", json!(wcfg.shrink_tolerance));
    manifest.resolve("max_steps", json!(wcfg.max_steps));
    manifest.metric("points", json!(records.len()));
    manifest.metric("flagged", json!(flagged_count));
    manifest.metric("exclusion_rate", json!(excluded_total as f64 / total_walks as f64));
    manifest.output(&path);
    let mpath = manifest.write(&ctx.out)?;
    println!("wrote {}", mpath.display());

    if flagged_count == records.len() {
        return Err(all_low_confidence("every evaluation point came back flagged"));
    }
    Ok(())
}

fn profile_csv(
    ctx: &Ctx,
    index: usize,
    profile: &AnnulusProfile,
) -> Result<PathBuf, CliError> {
    let mut csv = CsvWriter::new(
        &ctx.out,
        &format!("profile_{index}.csv"),
        &ctx.hash,
        "j,r,p,mass",
    );
    for j in 0..profile.mass.len() {
        for (ip, &p) in profile.p_values.iter().enumerate() {
            csv.row(&[
                j.to_string(),
                fmt(profile.radii[j]),
                fmt(p),
                fmt(profile.mass[j][ip]),
            ]);
        }
    }
    Ok(csv.finish()?)
}

pub fn estimate_p(ctx: &Ctx) -> Result<(), CliError> {
    let domain = ctx.domain()?;
    let points = ctx.criterion_points()?;
    let spec = ctx.profile_spec(&domain);

    let fem_solution = if domain.dim == 2 { Some(ctx.solve_2d(&domain)?.1) } else { None };
    let wcfg = if domain.dim == 3 {
        ctx.reject_unsupported_3d(&domain)?;
        Some(ctx.wos_config(domain.clone()))
    } else {
        None
    };

    let mut csv = CsvWriter::new(
        &ctx.out,
        "exponent.csv",
        &ctx.hash,
        "t_x,t_y,t_z,p_star,margin,confidence",
    );
    let mut manifest = ctx.manifest("estimate-p");
    let mut low_count = 0usize;
    let mut profile_paths = Vec::new();
    for (k, &t) in points.iter().enumerate() {
        let profile = match (&fem_solution, &wcfg) {
            (Some(u), _) => annulus_profile(u, t, &spec)?,
            (_, Some(w)) => {
                let source = wos_gradient_source(w);
                annulus_profile_sampled(&w.domain, &source, t, &spec)?
            }
            _ => unreachable!(),
        };
        profile_paths.push(profile_csv(ctx, k, &profile)?);
        match critical_exponent(&profile) {
            Ok(est) => {
                let p_cell = match est.p_star {
                    Some(p) => fmt(p),
                    None => "unbounded".to_string(),
                };
                csv.row(&[
                    fmt(t[0]),
                    fmt(t[1]),
                    fmt(t[2]),
                    p_cell,
                    fmt(est.margin),
                    fmt(est.confidence),
                ]);
            }
            Err(conelab::Error::Numerical(_)) => {
                low_count += 1;
                csv.row(&[
                    fmt(t[0]),
                    fmt(t[1]),
                    fmt(t[2]),
                    "nan".to_string(),
                    fmt(conelab::consts::BETA_POSITIVE_MARGIN),
                    fmt(0.0),
                ]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let path = csv.finish()?;
    println!("wrote {} ({} points)", path.display(), points.len());

    manifest.resolve("r0", json!(spec.r0));
    manifest.resolve("levels", json!(spec.levels));
    manifest.resolve("samples", json!(spec.samples));
    manifest.resolve("p_values", json!(spec.p_values));
    if let Some(u) = &fem_solution {
        manifest.metric("iterations", json!(u.iterations));
        manifest.metric("condition_estimate", json!(u.condition_estimate));
    }
    manifest.metric("points", json!(points.len()));
    manifest.metric("low_confidence", json!(low_count));
    manifest.output(&path);
    for p in &profile_paths {
        manifest.output(p);
    }
    let mpath = manifest.write(&ctx.out)?;
    println!("wrote {}", mpath.display());

    if low_count == points.len() {
        return Err(all_low_confidence("every exponent estimate fell below the trust threshold"));
    }
    Ok(())
}

pub fn slice_poincare(ctx: &Ctx) -> Result<(), CliError> {
    let domain = ctx.domain()?;
    let a = &ctx.cfg.analysis;
    let stratum = a.stratum.clone().ok_or_else(|| {
        CliError::Usage("slice-poincare needs a `stratum` line in [analysis]".into())
    })?;
    if a.etas.is_empty() {
        return Err(CliError::Usage("slice-poincare needs an `eta` list in [analysis]".into()));
    }
    if a.width.is_empty() {
        return Err(CliError::Usage("slice-poincare needs a `width` list in [analysis]".into()));
    }
    let width = if a.width.len() == 1 {
        TubeWidth::Const(a.width[0])
    } else {
        TubeWidth::Along(a.width.clone())
    };
    let p = a.slice_p.unwrap_or(2.0);
    let spec = SliceSpec { stratum, width, etas: a.etas.clone(), p, seed: a.seed };

    let fem_solution;
    let source = match &a.test_field {
        Some(f) => FieldSource::Closed(f),
        None => {
            if domain.dim != 2 {
                return Err(CliError::Usage(
                    "3D slices need a closed-form `test_field`; only 2D problems are solved"
                        .into(),
                ));
            }
            fem_solution = ctx.solve_2d(&domain)?.1;
            FieldSource::Fem(&fem_solution)
        }
    };
    let rows = conelab::regularity::slice_poincare_ratio(&domain, &source, &spec)?;

    let mut csv = CsvWriter::new(&ctx.out, "slice.csv", &ctx.hash, "eta,num,den,ratio");
    let mut degenerate = 0usize;
    for r in &rows {
        let ratio_cell = match r.ratio {
            Some(v) => fmt(v),
            None => {
                degenerate += 1;
                "degenerate".to_string()
            }
        };
        csv.row(&[fmt(r.eta), fmt(r.num), fmt(r.den), ratio_cell]);
    }
    let path = csv.finish()?;
    println!("wrote {} ({} slices, {} degenerate)", path.display(), rows.len(), degenerate);

    let mut manifest = ctx.manifest("slice-poincare");
    manifest.resolve("p", json!(p));
    manifest.resolve("etas", json!(a.etas));
    manifest.resolve("field", json!(if a.test_field.is_some() { "closed-form" } else { "fem" }));
    manifest.metric("slices", json!(rows.len()));
    manifest.metric("degenerate", json!(degenerate));
    manifest.output(&path);
    let mpath = manifest.write(&ctx.out)?;
    println!("wrote {}", mpath.display());

    if degenerate == rows.len() {
        return Err(all_low_confidence("every slice ratio is degenerate"));
    }
    Ok(())
}

pub fn mesh_export(ctx: &Ctx) -> Result<(), CliError> {
    let domain = ctx.domain()?;
    if domain.dim != 2 {
        return Err(CliError::Usage("mesh export is for 2D domains; 3D runs are meshless".into()));
    }
    let h = ctx.mesh_step()?;
    let mesh = build_mesh(&domain, h, &ctx.grading_2d())?;
    let path = ctx.out.join("mesh.txt");
    let mut text = format!("# config {}\n", ctx.hash);
    text.push_str(&conelab::mesh2d::export_text(&mesh));
    std::fs::write(&path, text)?;
    println!(
        "wrote {} ({} vertices, {} triangles)",
        path.display(),
        mesh.vertices.len(),
        mesh.triangles.len()
    );

    let q = mesh_quality(&mesh);
    let mut manifest = ctx.manifest("mesh-export");
    manifest.resolve("h", json!(h));
    manifest.metric("vertices", json!(mesh.vertices.len()));
    manifest.metric("triangles", json!(mesh.triangles.len()));
    manifest.metric("min_angle_deg", json!(q.min_angle_deg));
    manifest.metric("max_aspect", json!(q.max_aspect));
    manifest.metric("conformity", json!(q.conformity));
    manifest.metric("boundary_residual", json!(max_boundary_residual(&domain, &mesh)));
    manifest.output(&path);
    let mpath = manifest.write(&ctx.out)?;
    println!("wrote {}", mpath.display());
    Ok(())
}

/// Shared by the binary and the tests: run one named command.
pub fn run(command: &str, cfg: RunConfig) -> Result<(), CliError> {
    let ctx = Ctx::new(cfg)?;
    for w in &ctx.cfg.warnings {
        eprintln!("warning: {w}");
    }
    match command {
        "check-cone" => check_cone(&ctx),
        "solve" => solve_cmd(&ctx),
        "estimate-p" => estimate_p(&ctx),
        "slice-poincare" => slice_poincare(&ctx),
        "mesh-export" => mesh_export(&ctx),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

/// CLI point syntax: "x,y" or "x,y,z".
pub fn parse_cli_point(s: &str) -> Result<Pt, CliError> {
    let comps: Vec<&str> = s.split(',').collect();
    if comps.len() != 2 && comps.len() != 3 {
        return Err(CliError::Usage(format!("`{s}` is not a point (2 or 3 coordinates)")));
    }
    let mut p = [0.0; 3];
    for (i, c) in comps.iter().enumerate() {
        p[i] = c
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("`{}` is not a number", c.trim())))?;
    }
    Ok(p)
}
