//! Flat sectioned key-value run configuration.
//!
//! A config file has four sections. Keys are `name = value` lines;
//! `#` starts a comment; blank lines are ignored. `constraint`,
//! `crack`, `excluded`, `grading`, `point`, and `eval_point` may repeat;
//! every other key may appear at most once. Parsing is lossless: the
//! canonical text produced by [`RunConfig::to_text`] reparses to an
//! equal value.

use conelab::cone::StratumSpec;
use conelab::domain::{Ball, Constraint, DomainSpec, PieceId, Selector, Sign};
use conelab::field::{CoefficientField, ScalarField};
use conelab::geom::Pt;
use conelab::poly::Polynomial;
use conelab::consts::LAMBDA0_DEFAULT;

use crate::fieldexpr::{parse_field, write_field};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainCfg,
    pub operator: OperatorCfg,
    pub analysis: AnalysisCfg,
    pub output: OutputCfg,
    /// Notes about defaults that were filled in; echoed in manifests.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainCfg {
    pub dim: usize,
    pub center: Pt,
    pub radius: f64,
    pub constraints: Vec<Constraint>,
    pub seed_point: Option<Pt>,
    pub dirichlet: Selector,
    pub neumann: Selector,
    pub grading: Vec<(Pt, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCfg {
    /// Explicitly configured coefficient entries; missing entries
    /// default to the identity matrix.
    pub entries: Vec<(usize, usize, ScalarField)>,
    pub lambda0: Option<f64>,
    pub f: ScalarField,
    pub g: ScalarField,
    pub theta: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisCfg {
    /// Boundary points handed to criterion and exponent commands.
    pub points: Vec<Pt>,
    /// Interior evaluation grid for the 3D solve path.
    pub eval_points: Vec<Pt>,
    pub alpha: Option<f64>,
    /// Exponent grid as (start, step, end).
    pub p_grid: Option<(f64, f64, f64)>,
    pub r0: Option<f64>,
    pub levels: Option<usize>,
    pub samples: Option<usize>,
    pub h: Option<f64>,
    pub etas: Vec<f64>,
    pub stratum: Option<StratumSpec>,
    /// Tube width values; one value is a constant width, several are
    /// linearly interpolated along the stratum.
    pub width: Vec<f64>,
    pub slice_p: Option<f64>,
    pub walkers: Option<usize>,
    pub seed: u64,
    /// Closed-form field measured by slice-poincare instead of a
    /// finite-element solution.
    pub test_field: Option<ScalarField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputCfg {
    pub dir: String,
}

/// A config problem with the line it came from.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line: Some(line), message: message.into() })
}

fn err_global<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line: None, message: message.into() })
}

pub fn parse_config(path: &std::path::Path) -> Result<RunConfig, crate::CliError> {
    let text = std::fs::read_to_string(path).map_err(crate::CliError::Io)?;
    parse_config_str(&text).map_err(|e| crate::CliError::Config {
        path: path.display().to_string(),
        line: e.line,
        message: e.message,
    })
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let entries = scan_entries(text)?;
    let dim = find_dim(&entries)?;

    let mut cfg = RunConfig {
        domain: DomainCfg {
            dim,
            center: [0.0; 3],
            radius: 0.0,
            constraints: Vec::new(),
            seed_point: None,
            dirichlet: Selector::All,
            neumann: Selector::None,
            grading: Vec::new(),
        },
        operator: OperatorCfg {
            entries: Vec::new(),
            lambda0: None,
            f: ScalarField::zero(),
            g: ScalarField::zero(),
            theta: ScalarField::zero(),
        },
        analysis: AnalysisCfg {
            points: Vec::new(),
            eval_points: Vec::new(),
            alpha: None,
            p_grid: None,
            r0: None,
            levels: None,
            samples: None,
            h: None,
            etas: Vec::new(),
            stratum: None,
            width: Vec::new(),
            slice_p: None,
            walkers: None,
            seed: 0,
            test_field: None,
        },
        output: OutputCfg { dir: "out".to_string() },
        warnings: Vec::new(),
    };

    let mut seen: Vec<(String, String)> = Vec::new();
    let mut radius_set = false;
    let mut operator_section_present = false;
    for e in &entries {
        if e.section == "operator" {
            operator_section_present = true;
        }
        let repeatable = matches!(
            e.key.as_str(),
            "constraint" | "crack" | "excluded" | "grading" | "point" | "eval_point"
        );
        if !repeatable {
            let tag = (e.section.clone(), e.key.clone());
            if seen.contains(&tag) {
                return err(e.line, format!("duplicate key `{}` in [{}]", e.key, e.section));
            }
            seen.push(tag);
        }
        match (e.section.as_str(), e.key.as_str()) {
            ("domain", "dim") => {}
            ("domain", "center") => cfg.domain.center = parse_point(e, dim)?,
            ("domain", "radius") => {
                cfg.domain.radius = parse_num(e)?;
                radius_set = true;
            }
            ("domain", "constraint") => {
                let (poly, sign) = parse_comparison(e, &e.value, dim)?;
                cfg.domain.constraints.push(Constraint::Sign { poly, sign });
            }
            ("domain", "crack") => {
                let mut parts = e.value.split(';');
                let head = parts.next().unwrap();
                let poly = parse_poly(e, head, dim)?;
                let mut clip = Vec::new();
                for part in parts {
                    clip.push(parse_comparison(e, part, dim)?);
                }
                cfg.domain.constraints.push(Constraint::Crack { poly, clip });
            }
            ("domain", "excluded") => {
                let mut faces = Vec::new();
                for part in e.value.split('&') {
                    faces.push(parse_comparison(e, part, dim)?);
                }
                cfg.domain.constraints.push(Constraint::Excluded { faces });
            }
            ("domain", "seed_point") => cfg.domain.seed_point = Some(parse_point(e, dim)?),
            ("domain", "dirichlet") => cfg.domain.dirichlet = parse_selector(e)?,
            ("domain", "neumann") => cfg.domain.neumann = parse_selector(e)?,
            ("domain", "grading") => {
                let (left, right) = split_once_str(e, &e.value, ':')?;
                let pt = parse_point_str(e, &left, dim)?;
                let strength = parse_num_str(e, &right)?;
                cfg.domain.grading.push((pt, strength));
            }
            ("operator", "lambda0") => cfg.operator.lambda0 = Some(parse_num(e)?),
            ("operator", "f") => cfg.operator.f = parse_field_entry(e, dim)?,
            ("operator", "g") => cfg.operator.g = parse_field_entry(e, dim)?,
            ("operator", "theta") => cfg.operator.theta = parse_field_entry(e, dim)?,
            ("operator", key) if key.len() == 3 && key.starts_with('a') => {
                let bytes = key.as_bytes();
                let (i, j) = (bytes[1] - b'0', bytes[2] - b'0');
                let (i, j) = (i as usize, j as usize);
                if i >= dim || j >= dim {
                    return err(e.line, format!("coefficient `{key}` is outside a {dim}x{dim} matrix"));
                }
                cfg.operator.entries.push((i, j, parse_field_entry(e, dim)?));
            }
            ("analysis", "point") => cfg.analysis.points.push(parse_point(e, dim)?),
            ("analysis", "eval_point") => cfg.analysis.eval_points.push(parse_point(e, dim)?),
            ("analysis", "alpha") => cfg.analysis.alpha = Some(parse_num(e)?),
            ("analysis", "p_grid") => {
                let parts: Vec<&str> = e.value.split(':').collect();
                if parts.len() != 3 {
                    return err(e.line, "p_grid takes the form `start : step : end`");
                }
                let start = parse_num_str(e, parts[0])?;
                let step = parse_num_str(e, parts[1])?;
                let end = parse_num_str(e, parts[2])?;
                if !(step > 0.0) || end < start {
                    return err(e.line, "p_grid needs a positive step and end >= start");
                }
                cfg.analysis.p_grid = Some((start, step, end));
            }
            ("analysis", "r0") => cfg.analysis.r0 = Some(parse_num(e)?),
            ("analysis", "levels") => cfg.analysis.levels = Some(parse_usize(e)?),
            ("analysis", "samples") => cfg.analysis.samples = Some(parse_usize(e)?),
            ("analysis", "h") => cfg.analysis.h = Some(parse_num(e)?),
            ("analysis", "eta") => {
                for part in e.value.split(',') {
                    cfg.analysis.etas.push(parse_num_str(e, part)?);
                }
            }
            ("analysis", "stratum") => cfg.analysis.stratum = Some(parse_stratum(e, dim)?),
            ("analysis", "width") => {
                for part in e.value.split(',') {
                    cfg.analysis.width.push(parse_num_str(e, part)?);
                }
            }
            ("analysis", "slice_p") => cfg.analysis.slice_p = Some(parse_num(e)?),
            ("analysis", "walkers") => cfg.analysis.walkers = Some(parse_usize(e)?),
            ("analysis", "seed") => {
                cfg.analysis.seed = e
                    .value
                    .trim()
                    .parse()
                    .map_err(|_| ConfigError {
                        line: Some(e.line),
                        message: format!("`{}` is not an unsigned seed", e.value.trim()),
                    })?;
            }
            ("analysis", "test_field") => cfg.analysis.test_field = Some(parse_field_entry(e, dim)?),
            ("output", "dir") => cfg.output.dir = e.value.trim().to_string(),
            (section, key) => {
                return err(e.line, format!("unknown key `{key}` in [{section}]"));
            }
        }
    }

    if !radius_set {
        return err_global("missing key `radius` in [domain]");
    }
    if !(cfg.domain.radius > 0.0) {
        return err_global("ball radius must be positive");
    }
    if operator_section_present && cfg.operator.lambda0.is_none() {
        cfg.warnings.push(format!(
            "lambda0 not set; using the default ellipticity floor {LAMBDA0_DEFAULT}"
        ));
    }

    // Build once so semantic problems (empty Dirichlet part, asymmetric
    // coefficients, bad selectors) surface at parse time with their
    // proper names.
    cfg.build_domain().map_err(|e| ConfigError { line: None, message: e.to_string() })?;
    Ok(cfg)
}

fn scan_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let s = stripped.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(ConfigError { line: Some(line), message: "unclosed section header".into() })?
                .trim();
            if !matches!(name, "domain" | "operator" | "analysis" | "output") {
                return err(line, format!("unknown section [{name}]"));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = match s.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => return err(line, format!("expected `key = value`, found `{s}`")),
        };
        if section.is_empty() {
            return err(line, "key appears before any section header");
        }
        if key.is_empty() {
            return err(line, "empty key");
        }
        entries.push(Entry {
            line,
            section: section.clone(),
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(entries)
}

fn find_dim(entries: &[Entry]) -> Result<usize, ConfigError> {
    for e in entries {
        if e.section == "domain" && e.key == "dim" {
            let dim: usize = e.value.trim().parse().map_err(|_| ConfigError {
                line: Some(e.line),
                message: format!("`{}` is not a dimension", e.value.trim()),
            })?;
            if !(2..=3).contains(&dim) {
                return err(e.line, "dim must be 2 or 3");
            }
            return Ok(dim);
        }
    }
    err_global("missing key `dim` in [domain]")
}

fn parse_num(e: &Entry) -> Result<f64, ConfigError> {
    parse_num_str(e, &e.value)
}

fn parse_num_str(e: &Entry, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s.trim().parse().map_err(|_| ConfigError {
        line: Some(e.line),
        message: format!("`{}` is not a number", s.trim()),
    })?;
    if !v.is_finite() {
        return err(e.line, format!("`{}` is not finite", s.trim()));
    }
    Ok(v)
}

fn parse_usize(e: &Entry) -> Result<usize, ConfigError> {
    e.value.trim().parse().map_err(|_| ConfigError {
        line: Some(e.line),
        message: format!("`{}` is not a nonnegative integer", e.value.trim()),
    })
}

fn parse_point(e: &Entry, dim: usize) -> Result<Pt, ConfigError> {
    parse_point_str(e, &e.value, dim)
}

fn parse_point_str(e: &Entry, s: &str, dim: usize) -> Result<Pt, ConfigError> {
    let comps: Vec<&str> = s.split(',').collect();
    if comps.len() != 2 && comps.len() != 3 {
        return err(e.line, format!("`{}` is not a point (2 or 3 coordinates)", s.trim()));
    }
    let mut p = [0.0; 3];
    for (i, c) in comps.iter().enumerate() {
        p[i] = parse_num_str(e, c)?;
    }
    if dim == 2 && p[2] != 0.0 {
        return err(e.line, "2D points carry a zero third coordinate");
    }
    Ok(p)
}

/// Parses `<poly> <op> 0` where `<op>` is `<`, `>`, `!=`, or `=`.
fn parse_comparison(e: &Entry, s: &str, dim: usize) -> Result<(Polynomial, Sign), ConfigError> {
    let (op_pos, op_len, sign) = if let Some(p) = s.find("!=") {
        (p, 2, Sign::Ne)
    } else if let Some(p) = s.find('<') {
        (p, 1, Sign::Lt)
    } else if let Some(p) = s.find('>') {
        (p, 1, Sign::Gt)
    } else if let Some(p) = s.find('=') {
        (p, 1, Sign::Eq)
    } else {
        return err(e.line, format!("`{}` needs a comparison against 0", s.trim()));
    };
    let rhs = s[op_pos + op_len..].trim();
    if rhs != "0" {
        return err(e.line, format!("comparisons are against 0, found `{rhs}`"));
    }
    let poly = parse_poly(e, &s[..op_pos], dim)?;
    Ok((poly, sign))
}

fn parse_poly(e: &Entry, s: &str, dim: usize) -> Result<Polynomial, ConfigError> {
    Polynomial::parse(s.trim(), dim).map_err(|err| ConfigError {
        line: Some(e.line),
        message: err.to_string(),
    })
}

fn parse_field_entry(e: &Entry, dim: usize) -> Result<ScalarField, ConfigError> {
    parse_field(&e.value, dim).map_err(|m| ConfigError { line: Some(e.line), message: m })
}

fn parse_selector(e: &Entry) -> Result<Selector, ConfigError> {
    let v = e.value.trim();
    match v {
        "all" => Ok(Selector::All),
        "none" => Ok(Selector::None),
        _ => {
            let mut pieces = Vec::new();
            for part in v.split(',') {
                let part = part.trim();
                if part == "ball" {
                    pieces.push(PieceId::Ball);
                } else if let Some(i) = part.strip_prefix('c') {
                    let idx: usize = i.parse().map_err(|_| ConfigError {
                        line: Some(e.line),
                        message: format!("`{part}` is not a boundary piece (ball or c<i>)"),
                    })?;
                    pieces.push(PieceId::Constraint(idx));
                } else {
                    return err(e.line, format!("`{part}` is not a boundary piece (ball or c<i>)"));
                }
            }
            Ok(Selector::Pieces(pieces))
        }
    }
}

fn parse_stratum(e: &Entry, dim: usize) -> Result<StratumSpec, ConfigError> {
    let v = e.value.trim();
    if let Some(rest) = v.strip_prefix("point") {
        return Ok(StratumSpec::Point { at: parse_point_str(e, rest, dim)? });
    }
    if let Some(rest) = v.strip_prefix("segment") {
        let parts: Vec<&str> = rest.split(';').collect();
        if parts.len() != 3 {
            return err(e.line, "segment strata take `segment center ; direction ; half_length`");
        }
        return Ok(StratumSpec::Segment {
            center: parse_point_str(e, parts[0], dim)?,
            dir: parse_point_str(e, parts[1], dim)?,
            half_length: parse_num_str(e, parts[2])?,
        });
    }
    err(e.line, "stratum is `point x, y, z` or `segment center ; direction ; half_length`")
}

fn split_once_str(e: &Entry, s: &str, sep: char) -> Result<(String, String), ConfigError> {
    match s.split_once(sep) {
        Some((a, b)) => Ok((a.to_string(), b.to_string())),
        None => err(e.line, format!("expected `{sep}` in `{}`", s.trim())),
    }
}

fn write_comparison(poly: &Polynomial, sign: Sign) -> String {
    let op = match sign {
        Sign::Lt => "<",
        Sign::Gt => ">",
        Sign::Ne => "!=",
        Sign::Eq => "=",
    };
    format!("{poly} {op} 0")
}

fn write_point(p: &Pt, dim: usize) -> String {
    if dim == 2 {
        format!("{}, {}", p[0], p[1])
    } else {
        format!("{}, {}, {}", p[0], p[1], p[2])
    }
}

fn write_selector(s: &Selector) -> String {
    match s {
        Selector::All => "all".to_string(),
        Selector::None => "none".to_string(),
        Selector::Pieces(ids) => {
            let parts: Vec<String> = ids
                .iter()
                .map(|id| match id {
                    PieceId::Ball => "ball".to_string(),
                    PieceId::Constraint(i) => format!("c{i}"),
                })
                .collect();
            parts.join(", ")
        }
    }
}

impl RunConfig {
    /// Canonical serialization; reparses to an equal value.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let dim = self.domain.dim;
        let mut s = String::new();
        let _ = writeln!(s, "[domain]");
        let _ = writeln!(s, "dim = {dim}");
        let _ = writeln!(s, "center = {}", write_point(&self.domain.center, dim));
        let _ = writeln!(s, "radius = {}", self.domain.radius);
        for c in &self.domain.constraints {
            match c {
                Constraint::Sign { poly, sign } => {
                    let _ = writeln!(s, "constraint = {}", write_comparison(poly, *sign));
                }
                Constraint::Crack { poly, clip } => {
                    let mut parts = vec![format!("{poly}")];
                    parts.extend(clip.iter().map(|(q, sg)| write_comparison(q, *sg)));
                    let _ = writeln!(s, "crack = {}", parts.join(" ; "));
                }
                Constraint::Excluded { faces } => {
                    let parts: Vec<String> =
                        faces.iter().map(|(q, sg)| write_comparison(q, *sg)).collect();
                    let _ = writeln!(s, "excluded = {}", parts.join(" & "));
                }
            }
        }
        if let Some(p) = &self.domain.seed_point {
            let _ = writeln!(s, "seed_point = {}", write_point(p, dim));
        }
        let _ = writeln!(s, "dirichlet = {}", write_selector(&self.domain.dirichlet));
        let _ = writeln!(s, "neumann = {}", write_selector(&self.domain.neumann));
        for (p, strength) in &self.domain.grading {
            let _ = writeln!(s, "grading = {} : {strength}", write_point(p, dim));
        }

        let op = &self.operator;
        let op_has_content = !op.entries.is_empty()
            || op.lambda0.is_some()
            || !op.f.is_zero()
            || !op.g.is_zero()
            || !op.theta.is_zero();
        if op_has_content {
            let _ = writeln!(s, "\n[operator]");
            for (i, j, f) in &op.entries {
                let _ = writeln!(s, "a{i}{j} = {}", write_field(f));
            }
            if let Some(l) = op.lambda0 {
                let _ = writeln!(s, "lambda0 = {l}");
            }
            if !op.f.is_zero() {
                let _ = writeln!(s, "f = {}", write_field(&op.f));
            }
            if !op.g.is_zero() {
                let _ = writeln!(s, "g = {}", write_field(&op.g));
            }
            if !op.theta.is_zero() {
                let _ = writeln!(s, "theta = {}", write_field(&op.theta));
            }
        }

        let a = &self.analysis;
        let _ = writeln!(s, "\n[analysis]");
        for p in &a.points {
            let _ = writeln!(s, "point = {}", write_point(p, dim));
        }
        for p in &a.eval_points {
            let _ = writeln!(s, "eval_point = {}", write_point(p, dim));
        }
        if let Some(v) = a.alpha {
            let _ = writeln!(s, "alpha = {v}");
        }
        if let Some((p0, dp, p1)) = a.p_grid {
            let _ = writeln!(s, "p_grid = {p0} : {dp} : {p1}");
        }
        if let Some(v) = a.r0 {
            let _ = writeln!(s, "r0 = {v}");
        }
        if let Some(v) = a.levels {
            let _ = writeln!(s, "levels = {v}");
        }
        if let Some(v) = a.samples {
            let _ = writeln!(s, "samples = {v}");
        }
        if let Some(v) = a.h {
            let _ = writeln!(s, "h = {v}");
        }
        if !a.etas.is_empty() {
            let parts: Vec<String> = a.etas.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "eta = {}", parts.join(", "));
        }
        if let Some(st) = &a.stratum {
            match st {
                StratumSpec::Point { at } => {
                    let _ = writeln!(s, "stratum = point {}", write_point(at, dim));
                }
                StratumSpec::Segment { center, dir, half_length } => {
                    let _ = writeln!(
                        s,
                        "stratum = segment {} ; {} ; {half_length}",
                        write_point(center, dim),
                        write_point(dir, dim)
                    );
                }
            }
        }
        if !a.width.is_empty() {
            let parts: Vec<String> = a.width.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "width = {}", parts.join(", "));
        }
        if let Some(v) = a.slice_p {
            let _ = writeln!(s, "slice_p = {v}");
        }
        if let Some(v) = a.walkers {
            let _ = writeln!(s, "walkers = {v}");
        }
        let _ = writeln!(s, "seed = {}", a.seed);
        if let Some(f) = &a.test_field {
            let _ = writeln!(s, "test_field = {}", write_field(f));
        }

        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output.dir);
        s
    }

    /// Assembles the boundary-value problem this config describes.
    pub fn build_domain(&self) -> conelab::Result<DomainSpec> {
        let d = &self.domain;
        let mut spec = DomainSpec::new(
            d.dim,
            Ball::new(d.center, d.radius),
            d.constraints.clone(),
        );
        for sel in [&d.dirichlet, &d.neumann] {
            if let Selector::Pieces(ids) = sel {
                for id in ids {
                    if let PieceId::Constraint(i) = id {
                        if *i >= d.constraints.len() {
                            return Err(conelab::Error::validation(format!(
                                "selector references constraint c{i} but the domain has {}",
                                d.constraints.len()
                            )));
                        }
                    }
                }
            }
        }
        let dirichlet_empty = match &d.dirichlet {
            Selector::None => true,
            Selector::Pieces(ids) => ids.is_empty(),
            Selector::All => false,
        };
        if dirichlet_empty {
            return Err(conelab::Error::validation(
                "the Dirichlet part of the boundary is empty",
            ));
        }
        spec.dirichlet = d.dirichlet.clone();
        spec.neumann = d.neumann.clone();

        let op = &self.operator;
        let lambda0 = op.lambda0.unwrap_or(LAMBDA0_DEFAULT);
        if op.entries.is_empty() && op.lambda0.is_none() {
            spec.operator = CoefficientField::identity(d.dim);
        } else {
            let mut grid: Vec<ScalarField> = (0..d.dim * d.dim)
                .map(|k| {
                    let (i, j) = (k / d.dim, k % d.dim);
                    ScalarField::Const(if i == j { 1.0 } else { 0.0 })
                })
                .collect();
            for (i, j, f) in &op.entries {
                grid[i * d.dim + j] = f.clone();
            }
            spec.operator = CoefficientField::new(d.dim, grid, lambda0)?;
        }
        spec.source = op.f.clone();
        spec.dirichlet_data = op.g.clone();
        spec.neumann_data = op.theta.clone();
        spec.seed_point = d.seed_point;
        spec.grading = d.grading.clone();
        spec.validate()?;
        Ok(spec)
    }

    /// The exponent grid, expanded.
    pub fn p_values(&self) -> Vec<f64> {
        match self.analysis.p_grid {
            None => conelab::regularity::p_grid(),
            Some((start, step, end)) => {
                let n = ((end - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| start + step * k as f64).collect()
            }
        }
    }
}
