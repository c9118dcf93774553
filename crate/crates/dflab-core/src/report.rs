//! Run configuration, the analysis pipeline and its report document.
//!
//! Configs are plain `key = value` lines; `#` starts a comment.
//!
//! ```text
//! kind = worm
//! r = 2.0
//! resolution = 64
//! tau = 0.4
//! ```

use crate::classify::{classify_weak_set, BoundaryClassification, ComponentKind, CurveRow, LEVI_REL_TOL, M1_TOL};
use crate::cutoff::build_lambda;
use crate::distance::PROJECTION_TOL;
use crate::error::{DflabError, Result};
use crate::index::{build_g, df_bounds, good_vector_field_criterion, DFBounds, Existence, GCandidate, KAPPA_TOL};
use crate::profile::{
    make_ball, make_no_twist_annulus, make_twisted_worm, profile_from_radius, HartogsProfile, ProfileKind,
    RadiusProfile, WormParams,
};
use crate::psh::{
    certify, numeric_df_bisect, BisectOptions, CertificateReport, CollarGrid, DfBracket, ExhaustionCandidate, Side,
    Weight, TOL_PSD,
};
use crate::stein::{snb_check, stein_verdict, steinness_index_bound, SnbCheck, SteinReport, SteinnessBound, VERDICT_TOL};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Worm,
    NoTwist,
    Radius,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub r: f64,
    /// Twist rate of the worm phase `exp(i twist log t)`.
    pub twist: f64,
    pub epsilon: f64,
    pub scale: f64,
    pub collar_halfwidth: f64,
    /// `constant:c`, `paraboloid:c` or `gaussian:a`.
    pub radius: Option<String>,
    /// Upper bound for `|z|^2` on a radius domain.
    pub t_max: Option<f64>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            kind: DomainKind::Ball,
            r: 2.0,
            twist: 1.0,
            epsilon: 0.1,
            scale: 2e4,
            collar_halfwidth: crate::profile::DEFAULT_COLLAR,
            radius: None,
            t_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            _ => Err(DflabError::Config(format!("unknown format {s:?}; expected json, csv or text"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub resolution: usize,
    pub kappa_samples: usize,
    /// Certify at this exponent when set.
    pub tau: Option<f64>,
    pub exterior: bool,
    pub bisect: bool,
    pub bisect_tolerance: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub grid_points: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::default(),
            resolution: 64,
            kappa_samples: crate::index::DEFAULT_KAPPA_SAMPLES,
            tau: None,
            exterior: false,
            bisect: false,
            bisect_tolerance: 0.02,
            d_min: crate::psh::DEFAULT_D_MIN,
            d_max: crate::psh::DEFAULT_D_MAX,
            grid_points: crate::psh::DEFAULT_GRID_POINTS,
            seed: 0,
            format: OutputFormat::Json,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| DflabError::Config(format!("bad value for {key}: {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(DflabError::Config(format!("bad boolean for {key}: {v:?}"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(DflabError::Config(format!("line {}: expected key = value", n + 1)));
            };
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DflabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let d = &mut self.domain;
        match key {
            "kind" => {
                d.kind = match v {
                    "ball" => DomainKind::Ball,
                    "worm" => DomainKind::Worm,
                    "no_twist" => DomainKind::NoTwist,
                    "radius" => DomainKind::Radius,
                    _ => return Err(DflabError::Config(format!("unknown domain kind {v:?}"))),
                }
            }
            "r" => d.r = parse_num(key, v)?,
            "twist" => d.twist = parse_num(key, v)?,
            "epsilon" => d.epsilon = parse_num(key, v)?,
            "scale" => d.scale = parse_num(key, v)?,
            "collar_halfwidth" => d.collar_halfwidth = parse_num(key, v)?,
            "radius" => d.radius = Some(v.to_string()),
            "t_max" => d.t_max = Some(parse_num(key, v)?),
            "resolution" => self.resolution = parse_num(key, v)?,
            "kappa_samples" => self.kappa_samples = parse_num(key, v)?,
            "tau" => self.tau = Some(parse_num(key, v)?),
            "exterior" => self.exterior = parse_bool(key, v)?,
            "bisect" => self.bisect = parse_bool(key, v)?,
            "bisect_tolerance" => self.bisect_tolerance = parse_num(key, v)?,
            "d_min" => self.d_min = parse_num(key, v)?,
            "d_max" => self.d_max = parse_num(key, v)?,
            "grid_points" => self.grid_points = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "format" => self.format = OutputFormat::parse(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(DflabError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let d = &self.domain;
        if self.resolution < crate::classify::MIN_RESOLUTION {
            bad.push(format!("resolution {} is below {}", self.resolution, crate::classify::MIN_RESOLUTION));
        }
        if self.kappa_samples < 2 {
            bad.push("kappa_samples must be at least 2".into());
        }
        if !(d.collar_halfwidth > 0.0) {
            bad.push("collar_halfwidth must be positive".into());
        }
        if !(self.d_min >= 1e-5 && self.d_min <= self.d_max && self.d_max <= d.collar_halfwidth) {
            bad.push(format!(
                "depths [{}, {}] must satisfy 1e-5 <= d_min <= d_max <= collar_halfwidth = {}",
                self.d_min, self.d_max, d.collar_halfwidth
            ));
        }
        if matches!(d.kind, DomainKind::Worm | DomainKind::NoTwist) && !(d.r > 1.0) {
            bad.push(format!("r must exceed 1, got {}", d.r));
        }
        if d.kind == DomainKind::Radius && d.radius.is_none() {
            bad.push("radius domains need radius = <spec>".into());
        }
        if let Some(t) = self.tau {
            let ok = if self.exterior { t > 1.0 } else { t > 0.0 && t < 1.0 };
            if !ok {
                bad.push(format!("tau = {t} is out of range for the chosen side"));
            }
        }
        if !(self.bisect_tolerance >= 0.01) {
            bad.push("bisect_tolerance must be at least 0.01".into());
        }
        if self.grid_points < 2 {
            bad.push("grid_points must be at least 2".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(DflabError::ConstraintViolation(bad))
        }
    }
}

pub fn build_profile(d: &DomainSpec) -> Result<HartogsProfile> {
    let p = match d.kind {
        DomainKind::Ball => make_ball(),
        DomainKind::Worm => make_twisted_worm(WormParams::new(d.r)?, d.twist, build_lambda(d.epsilon, d.scale)?),
        DomainKind::NoTwist => make_no_twist_annulus(WormParams::new(d.r)?, build_lambda(d.epsilon, d.scale)?),
        DomainKind::Radius => {
            let spec = d.radius.as_deref().ok_or_else(|| DflabError::Config("missing radius spec".into()))?;
            let f = RadiusProfile::parse(spec)?;
            let t_max = match (&f, d.t_max) {
                (_, Some(t)) => t,
                (RadiusProfile::Constant(c) | RadiusProfile::Paraboloid(c), None) => *c,
                _ => return Err(DflabError::Config(format!("radius profile {spec} needs t_max"))),
            };
            profile_from_radius(f, (0.0, t_max))?
        }
    };
    p.with_collar_halfwidth(d.collar_halfwidth)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub kind: ComponentKind,
    pub t_range: (f64, f64),
    pub w_anchor: C64,
    pub flat: bool,
    pub radially_closed: bool,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub components: Vec<ComponentSummary>,
    pub strongly_pseudoconvex_fraction: f64,
    pub is_regular: bool,
    pub resolution: usize,
    pub curve: Vec<CurveRow>,
}

impl From<&BoundaryClassification> for ClassificationSummary {
    fn from(c: &BoundaryClassification) -> Self {
        Self {
            components: c
                .components
                .iter()
                .map(|k| ComponentSummary {
                    kind: k.kind,
                    t_range: k.t_range,
                    w_anchor: k.w_anchor,
                    flat: k.flat,
                    radially_closed: k.radially_closed,
                    samples: k.samples.len(),
                })
                .collect(),
            strongly_pseudoconvex_fraction: c.strongly_pseudoconvex_fraction,
            is_regular: c.is_regular,
            resolution: c.resolution,
            curve: c.curve.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSummary {
    pub a: f64,
    pub b: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub good_vector_fields: Existence,
    pub kappa: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub levi_relative: f64,
    pub flat_dz: f64,
    pub kappa_zero: f64,
    pub verdict: f64,
    pub psd: f64,
    pub projection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            levi_relative: LEVI_REL_TOL,
            flat_dz: M1_TOL,
            kappa_zero: KAPPA_TOL,
            verdict: VERDICT_TOL,
            psd: TOL_PSD,
            projection: PROJECTION_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub provenance: Provenance,
    pub domain: ProfileKind,
    pub classification: ClassificationSummary,
    pub annuli: Vec<AnnulusSummary>,
    pub bounds: DFBounds,
    pub stein: Option<SteinReport>,
    pub steinness: Option<SteinnessBound>,
    pub df_one_check: Option<SnbCheck>,
    pub certificates: Vec<CertificateReport>,
    /// Weight used for certification, or a sample one for plotting.
    pub g_candidate: Option<GCandidate>,
    pub bracket: Option<DfBracket>,
    pub notes: Vec<String>,
}

fn certify_at(
    p: &HartogsProfile,
    cfg: &RunConfig,
    bounds: &DFBounds,
    tau: f64,
    notes: &mut Vec<String>,
) -> Result<(CertificateReport, Option<GCandidate>)> {
    let side = if cfg.exterior { Side::Exterior } else { Side::Interior };
    let flat = ExhaustionCandidate::new(tau, side, Weight::Constant(1.0))?;
    let generic = CollarGrid::strongly_pseudoconvex(p, side, cfg.grid_points, cfg.d_min, cfg.d_max)?;
    let mut report = certify(p, &flat, &generic, cfg.seed);
    let mut used = None;
    for inv in bounds.per_component.iter().filter_map(|b| b.invariant.as_ref()) {
        let cand = match build_g(tau, inv.c_upper, inv.a, inv.b) {
            Ok(g) => {
                used.get_or_insert(g);
                ExhaustionCandidate::from_g(g, side)?
            }
            Err(e) => {
                notes.push(format!("no positive weight at tau = {tau} on [{:.6}, {:.6}]: {e}; using a constant weight", inv.a, inv.b));
                flat.clone()
            }
        };
        let n_d = 4;
        let grid = CollarGrid::annulus(p, inv, side, (cfg.grid_points / n_d).max(2), n_d, cfg.d_min, cfg.d_max)?;
        report = report.merge(certify(p, &cand, &grid, cfg.seed));
    }
    Ok((report, used))
}

pub fn run_analyze(cfg: &RunConfig) -> Result<ReportDocument> {
    cfg.validate()?;
    let p = build_profile(&cfg.domain)?;
    let classification = classify_weak_set(&p, cfg.resolution)?;
    let mut notes = Vec::new();
    let bounds = df_bounds(&p, &classification, cfg.kappa_samples)?;
    if !bounds.consistent {
        notes.push(format!("lower bound {} exceeds upper bound {}", bounds.lower, bounds.upper));
    }
    let invariants: Vec<_> = bounds.per_component.iter().filter_map(|b| b.invariant.clone()).collect();
    let annuli = invariants
        .iter()
        .map(|inv| AnnulusSummary {
            a: inv.a,
            b: inv.b,
            c_lower: inv.c_lower,
            c_upper: inv.c_upper,
            good_vector_fields: good_vector_field_criterion(inv),
            kappa: inv.kappa.clone(),
        })
        .collect();

    let (mut stein, mut steinness, mut df_one_check) = (None, None, None);
    match (invariants.as_slice(), classification.components.len()) {
        ([inv], 1) => {
            let rep = stein_verdict(&p, &classification, inv)?;
            let snb = snb_check(inv);
            if !snb.consistent {
                notes.push("index bound is one but the twist does not vanish on the inner rim".into());
            }
            if snb.flagged {
                notes.push("twist vanishes on the inner rim while the index bound is below one".into());
            }
            if snb.df_upper >= 1.0 && rep.verdict != Existence::Exists {
                notes.push("index one without a Stein neighborhood verdict".into());
            }
            stein = Some(rep);
            steinness = Some(steinness_index_bound(inv));
            df_one_check = Some(snb);
        }
        _ => notes.push(format!(
            "Stein analysis skipped: weak set has {} components, {} of them annuli",
            classification.components.len(),
            invariants.len()
        )),
    }

    let mut certificates = Vec::new();
    let mut g_candidate = None;
    if let Some(tau) = cfg.tau {
        let (rep, g) = certify_at(&p, cfg, &bounds, tau, &mut notes)?;
        certificates.push(rep);
        g_candidate = g;
    }
    if g_candidate.is_none() {
        if let Some(inv) = invariants.first() {
            g_candidate = build_g(0.95 * bounds.lower, inv.c_upper, inv.a, inv.b).ok();
        }
    }
    let bracket = if cfg.bisect {
        let opts = BisectOptions {
            tolerance: cfg.bisect_tolerance,
            grid_points: cfg.grid_points,
            d_min: cfg.d_min,
            d_max: cfg.d_max,
            seed: cfg.seed,
            ..BisectOptions::default()
        };
        let b = numeric_df_bisect(&p, &classification, &opts)?;
        if !b.monotone {
            notes.push("certification was not monotone in tau".into());
        }
        Some(b)
    } else {
        None
    };

    Ok(ReportDocument {
        provenance: Provenance {
            tool: "dflab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            tolerances: Tolerances::default(),
        },
        domain: p.kind().clone(),
        classification: ClassificationSummary::from(&classification),
        annuli,
        bounds,
        stein,
        steinness,
        df_one_check,
        certificates,
        g_candidate,
        bracket,
        notes,
    })
}

impl ReportDocument {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DflabError::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| DflabError::Io(e.to_string()))
    }

    /// Flat `key,value` table of the scalar results.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("weak_components".into(), self.classification.components.len().to_string()),
            ("strongly_pseudoconvex_fraction".into(), self.classification.strongly_pseudoconvex_fraction.to_string()),
            ("is_regular".into(), self.classification.is_regular.to_string()),
            ("df_upper".into(), self.bounds.upper.to_string()),
            ("df_lower".into(), self.bounds.lower.to_string()),
            ("bounds_consistent".into(), self.bounds.consistent.to_string()),
        ];
        for (i, a) in self.annuli.iter().enumerate() {
            rows.push((format!("annulus{i}_a"), a.a.to_string()));
            rows.push((format!("annulus{i}_b"), a.b.to_string()));
            rows.push((format!("annulus{i}_c_lower"), a.c_lower.to_string()));
            rows.push((format!("annulus{i}_c_upper"), a.c_upper.to_string()));
            rows.push((format!("annulus{i}_good_vector_fields"), verdict_str(a.good_vector_fields).into()));
        }
        if let Some(s) = &self.stein {
            rows.push(("c1".into(), s.c1.to_string()));
            rows.push(("a1".into(), s.a1.to_string()));
            rows.push(("stein_verdict".into(), verdict_str(s.verdict).into()));
            rows.push(("threshold_lhs".into(), s.threshold_lhs.to_string()));
            rows.push(("threshold_rhs".into(), s.threshold_rhs.to_string()));
        }
        if let Some(s) = &self.steinness {
            rows.push(("steinness_feasible".into(), s.feasible.to_string()));
            rows.push(("steinness_tau_lower".into(), s.tau_lower.map_or("".into(), |t| t.to_string())));
        }
        for (i, c) in self.certificates.iter().enumerate() {
            rows.push((format!("certificate{i}_tau"), c.tau.to_string()));
            rows.push((format!("certificate{i}_passed"), c.passed.to_string()));
            rows.push((format!("certificate{i}_min_det"), c.min_scaled_determinant.map_or("".into(), |d| d.to_string())));
        }
        if let Some(b) = &self.bracket {
            rows.push(("bracket_feasible".into(), b.feasible.to_string()));
            rows.push(("bracket_infeasible".into(), b.infeasible.to_string()));
        }
        let mut s = String::from("key,value\n");
        for (k, v) in rows {
            s.push_str(&format!("{k},{v}\n"));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<28} {v}\n"));
        line("domain", format!("{:?}", self.domain));
        line("weak components", self.classification.components.len().to_string());
        for c in &self.classification.components {
            line("  component", format!("{:?} t in [{:.6}, {:.6}] w = {:.6}", c.kind, c.t_range.0, c.t_range.1, c.w_anchor));
        }
        line("regular", self.classification.is_regular.to_string());
        for a in &self.annuli {
            line(
                "annulus",
                format!("[{:.6}, {:.6}] kappa in [{:.9}, {:.9}] good fields {}", a.a, a.b, a.c_lower, a.c_upper, verdict_str(a.good_vector_fields)),
            );
        }
        line("index upper bound", format!("{:.9}", self.bounds.upper));
        line("index lower bound", format!("{:.9}", self.bounds.lower));
        if let Some(st) = &self.stein {
            line("c1", format!("{:.9}", st.c1));
            line("a1", format!("{:.9}", st.a1));
            line("Stein neighborhood basis", verdict_str(st.verdict).into());
        }
        if let Some(st) = &self.steinness {
            let v = st.tau_lower.map_or("infeasible".to_string(), |t| format!("tau > {t:.9}"));
            line("Steinness bound", v);
        }
        for c in &self.certificates {
            let det = c.min_scaled_determinant.map_or("n/a".to_string(), |d| format!("{d:.3e}"));
            line("certificate", format!("tau = {} {:?} passed = {} min det = {det}", c.tau, c.side, c.passed));
        }
        if let Some(b) = &self.bracket {
            line("index bracket", format!("[{:.6}, {:.6}]", b.feasible, b.infeasible));
        }
        for n in &self.notes {
            line("note", n.clone());
        }
        s
    }

    pub fn render(&self, f: OutputFormat) -> Result<String> {
        match f {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => Ok(self.to_csv()),
            OutputFormat::Text => Ok(self.to_text()),
        }
    }
}

pub fn verdict_str(v: Existence) -> &'static str {
    match v {
        Existence::Exists => "exists",
        Existence::NotExists => "not_exists",
        Existence::Inconclusive => "inconclusive",
    }
}

/// Writes `kappa_profile.csv`, `g_profile.csv` and `cert_scan.csv` into `dir`.
pub fn emit_plot_data(report: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut open = |name: &str| -> Result<(fs::File, PathBuf)> {
        let path = dir.join(name);
        let f = fs::File::create(&path)?;
        written.push(path.clone());
        Ok((f, path))
    };
    let (mut f, _) = open("kappa_profile.csv")?;
    writeln!(f, "t,kappa")?;
    for a in &report.annuli {
        for (t, k) in &a.kappa {
            writeln!(f, "{t:.12},{k:.12}")?;
        }
    }
    let (mut f, _) = open("g_profile.csv")?;
    writeln!(f, "t,g")?;
    if let Some(g) = &report.g_candidate {
        for (t, v) in g.tabulate(200) {
            writeln!(f, "{t:.12},{v:.12}")?;
        }
    }
    let (mut f, _) = open("cert_scan.csv")?;
    writeln!(f, "t,d,det")?;
    for c in &report.certificates {
        for r in &c.rows {
            let det = r.det.map_or_else(|| "nan".to_string(), |d| format!("{d:.6e}"));
            writeln!(f, "{:.12},{:.6e},{det}", r.t, r.depth)?;
        }
    }
    Ok(written)
}
