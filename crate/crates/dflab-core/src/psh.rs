//! Numerical plurisubharmonicity certificates for `sigma = -h (-delta)^tau`
//! inside the domain and `sigma = h delta^tau` outside it, and a bisection
//! estimate of the Diederich–Fornæss index built on them.

use crate::boundary::slices;
use crate::classify::{BoundaryClassification, ComponentKind};
use crate::complex::{boundary_complex_jet, complex_jet, wirtinger_from_real, ComplexJet2};
use crate::distance::{max_curvature, project_to_boundary, unit_normal, AmbientPoint, RealHessian4};
use crate::error::{DflabError, Result};
use crate::index::{build_g, curvature_profile, g_with_frequency, AnnulusInvariant, GCandidate, DEFAULT_KAPPA_SAMPLES};
use crate::profile::HartogsProfile;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::Arc;

pub const TOL_PSD: f64 = 1e-9;
pub const AVERAGE_NODES: usize = 64;
pub const DEFAULT_D_MIN: f64 = 1e-4;
pub const DEFAULT_D_MAX: f64 = 1e-2;
pub const DEFAULT_GRID_POINTS: usize = 128;
pub const RANDOM_DIRECTIONS: usize = 8;
/// Generic collar points need a Levi eigenvalue at least this fraction of the
/// boundary Hessian norm.
pub const STRICT_LEVI_FLOOR: f64 = 0.05;
/// Generic depths stay below this fraction of the local radius of curvature.
pub const REACH_FRACTION: f64 = 0.25;

pub type Hermitian2 = [[C64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Interior,
    Exterior,
}

impl Side {
    /// `+1` outside, `-1` inside.
    pub fn sign(self) -> f64 {
        match self {
            Side::Interior => -1.0,
            Side::Exterior => 1.0,
        }
    }
}

/// `h(z, w)` before rotational averaging.
#[derive(Clone)]
pub enum Weight {
    Constant(f64),
    /// `h = g(|z|^2)^(1 - tau)`.
    FromG(GCandidate),
    Custom(Arc<dyn Fn(C64, C64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weight::Constant(c) => write!(f, "Constant({c})"),
            Weight::FromG(g) => write!(f, "FromG({g:?})"),
            Weight::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `\int_0^{2 pi} h(e^{i theta} z, w) d theta` by the periodic trapezoid rule.
pub fn rotational_average<F: Fn(C64, C64) -> f64>(h: &F, z: C64, w: C64) -> f64 {
    let step = TAU / AVERAGE_NODES as f64;
    (0..AVERAGE_NODES).map(|k| h(z * C64::from_polar(1.0, k as f64 * step), w)).sum::<f64>() * step
}

/// Averaged weight and its Wirtinger derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightJet {
    pub value: f64,
    pub d_z: C64,
    pub d_w: C64,
    pub d_zzbar: f64,
    pub d_zwbar: C64,
    pub d_wwbar: f64,
}

impl WeightJet {
    fn first(&self) -> [C64; 2] {
        [self.d_z, self.d_w]
    }

    fn hermitian(&self) -> Hermitian2 {
        [[C64::new(self.d_zzbar, 0.0), self.d_zwbar], [self.d_zwbar.conj(), C64::new(self.d_wwbar, 0.0)]]
    }
}

#[derive(Clone, Debug)]
pub struct ExhaustionCandidate {
    pub tau: f64,
    pub side: Side,
    pub weight: Weight,
}

impl ExhaustionCandidate {
    pub fn new(tau: f64, side: Side, weight: Weight) -> Result<Self> {
        let ok = match side {
            Side::Interior => tau > 0.0 && tau < 1.0,
            Side::Exterior => tau > 1.0 && tau.is_finite(),
        };
        if !ok {
            return Err(DflabError::Config(format!("tau = {tau} is out of range for the {side:?} side")));
        }
        Ok(Self { tau, side, weight })
    }

    /// Candidate built from a positive `g` on an annulus.
    pub fn from_g(g: GCandidate, side: Side) -> Result<Self> {
        Self::new(g.tau, side, Weight::FromG(g))
    }

    pub fn weight_jet(&self, x: &AmbientPoint) -> Result<WeightJet> {
        match &self.weight {
            Weight::Constant(c) => Ok(WeightJet {
                value: TAU * c,
                d_z: C64::new(0.0, 0.0),
                d_w: C64::new(0.0, 0.0),
                d_zzbar: 0.0,
                d_zwbar: C64::new(0.0, 0.0),
                d_wwbar: 0.0,
            }),
            Weight::FromG(g) => {
                let t = x.t();
                let (gv, g1, g2) = g.jet(t);
                if !(gv > 0.0) {
                    return Err(DflabError::NonPositive(gv));
                }
                let e = 1.0 - self.tau;
                let v = TAU * gv.powf(e);
                let ht = TAU * e * gv.powf(e - 1.0) * g1;
                let htt = TAU * e * ((e - 1.0) * gv.powf(e - 2.0) * g1 * g1 + gv.powf(e - 1.0) * g2);
                Ok(WeightJet {
                    value: v,
                    d_z: ht * x.z.conj(),
                    d_w: C64::new(0.0, 0.0),
                    d_zzbar: ht + t * htt,
                    d_zwbar: C64::new(0.0, 0.0),
                    d_wwbar: 0.0,
                })
            }
            Weight::Custom(h) => custom_weight_jet(h.as_ref(), x),
        }
    }
}

fn custom_weight_jet(h: &(dyn Fn(C64, C64) -> f64 + Send + Sync), x: &AmbientPoint) -> Result<WeightJet> {
    let f = |c: [f64; 4]| {
        let p = AmbientPoint::from_coords(c);
        rotational_average(&|z, w| h(z, w), p.z, p.w)
    };
    let c0 = x.coords();
    let step = 1e-4;
    let shifted = |i: usize, a: f64, j: usize, b: f64| {
        let mut c = c0;
        c[i] += a;
        c[j] += b;
        f(c)
    };
    let v = f(c0);
    if !(v > 0.0) {
        return Err(DflabError::NonPositive(v));
    }
    let mut grad = [0.0; 4];
    let mut hess = [[0.0; 4]; 4];
    for i in 0..4 {
        grad[i] = (shifted(i, step, i, 0.0) - shifted(i, -step, i, 0.0)) / (2.0 * step);
        hess[i][i] = (shifted(i, step, i, 0.0) - 2.0 * v + shifted(i, -step, i, 0.0)) / (step * step);
        for j in 0..i {
            let m = (shifted(i, step, j, step) - shifted(i, step, j, -step) - shifted(i, -step, j, step)
                + shifted(i, -step, j, -step))
                / (4.0 * step * step);
            hess[i][j] = m;
            hess[j][i] = m;
        }
    }
    let jet = wirtinger_from_real(&RealHessian4 { h: hess }, grad);
    Ok(WeightJet {
        value: v,
        d_z: jet.d_z,
        d_w: jet.d_w,
        d_zzbar: jet.d_zzbar.re,
        d_zwbar: jet.d_zwbar,
        d_wwbar: jet.d_wwbar.re,
    })
}

/// Complex Hessian of `sigma` split by order of vanishing in the depth `s`:
/// `s^(tau-2)`, `s^(tau-1)` and `s^tau`, each including its power of `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaTerms {
    pub order_minus_2: Hermitian2,
    pub order_minus_1: Hermitian2,
    pub order_0: Hermitian2,
    pub depth: f64,
}

impl SigmaTerms {
    pub fn total(&self) -> Hermitian2 {
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                m[j][k] = self.order_minus_2[j][k] + self.order_minus_1[j][k] + self.order_0[j][k];
            }
        }
        m
    }
}

/// Exact product and chain rule for `sigma = nu h s^tau` with `s = nu delta`.
pub fn sigma_terms_from_jets(tau: f64, side: Side, d: &ComplexJet2, sdist: f64, h: &WeightJet) -> Result<SigmaTerms> {
    let nu = side.sign();
    let s = nu * sdist;
    if !(s > 0.0) {
        return Err(DflabError::DomainError(format!("point at signed distance {sdist} is not on the {side:?} side")));
    }
    let ds = d.first().map(|v| v * nu);
    let dss = d.hermitian();
    let hf = h.first();
    let hh = h.hermitian();
    let zero = [[C64::new(0.0, 0.0); 2]; 2];
    let (mut m2, mut m1, mut m0) = (zero, zero, zero);
    for j in 0..2 {
        for k in 0..2 {
            m2[j][k] = nu * h.value * tau * (tau - 1.0) * s.powf(tau - 2.0) * ds[j] * ds[k].conj();
            m1[j][k] = nu
                * tau
                * s.powf(tau - 1.0)
                * (hf[j] * ds[k].conj() + hf[k].conj() * ds[j] + h.value * nu * dss[j][k]);
            m0[j][k] = nu * s.powf(tau) * hh[j][k];
        }
    }
    Ok(SigmaTerms { order_minus_2: m2, order_minus_1: m1, order_0: m0, depth: s })
}

pub fn sigma_terms(p: &HartogsProfile, cand: &ExhaustionCandidate, x: &AmbientPoint) -> Result<SigmaTerms> {
    let (jet, dj) = complex_jet(p, x)?;
    let h = cand.weight_jet(x)?;
    sigma_terms_from_jets(cand.tau, cand.side, &jet, dj.projection.sdist, &h)
}

pub fn sigma_hessian(p: &HartogsProfile, cand: &ExhaustionCandidate, x: &AmbientPoint) -> Result<Hermitian2> {
    Ok(sigma_terms(p, cand, x)?.total())
}

/// `S M S` with `S = diag(1, depth)`.
pub fn scale_matrix(m: &Hermitian2, depth: f64) -> Hermitian2 {
    [[m[0][0], m[0][1] * depth], [m[1][0] * depth, m[1][1] * depth * depth]]
}

pub fn hermitian_det(m: &Hermitian2) -> f64 {
    m[0][0].re * m[1][1].re - m[0][1].norm_sqr()
}

pub fn hermitian_norm(m: &Hermitian2) -> f64 {
    m.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Limit matrix entries `(a, b, c)` at a point of a flat annulus.
pub fn abc_limit_matrix(p: &HartogsProfile, cand: &ExhaustionCandidate, foot: &AmbientPoint) -> Result<(f64, f64, C64)> {
    if p.rho(foot.t(), foot.w)?.abs() > 1e-10 {
        return Err(DflabError::NotAnnulus);
    }
    let d = boundary_complex_jet(p, foot)?;
    if d.d_z.norm() > 1e-8 || d.d_zzbar.re.abs() > 1e-7 {
        return Err(DflabError::NotAnnulus);
    }
    let h = cand.weight_jet(foot)?;
    let tau = cand.tau;
    let twist = 4.0 * h.value * tau * d.d_zwbar.norm_sqr() - h.d_zzbar;
    let (a, b) = match cand.side {
        Side::Interior => (twist, 0.25 * tau * (1.0 - tau) * h.value),
        Side::Exterior => (-twist, 0.25 * tau * (tau - 1.0) * h.value),
    };
    let c = h.value * tau * d.d_zwbar + tau * h.d_z * d.d_w.conj();
    Ok((a, b, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub point: AmbientPoint,
    pub foot_t: f64,
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarGrid {
    pub side: Side,
    pub points: Vec<GridPoint>,
}

fn log_depth(i: usize, n: usize, d_min: f64, d_max: f64) -> f64 {
    if n < 2 {
        return d_min;
    }
    (d_min.ln() + (d_max.ln() - d_min.ln()) * i as f64 / (n - 1) as f64).exp().clamp(d_min, d_max)
}

fn check_depths(p: &HartogsProfile, d_min: f64, d_max: f64) -> Result<()> {
    if !(d_min >= 1e-5) || !(d_max >= d_min) || d_max > p.collar_halfwidth() {
        return Err(DflabError::GridInvalid(format!(
            "depths [{d_min}, {d_max}] must satisfy 1e-5 <= d_min <= d_max <= {}",
            p.collar_halfwidth()
        )));
    }
    Ok(())
}

fn offset_point(p: &HartogsProfile, foot: &AmbientPoint, side: Side, depth: f64) -> Result<AmbientPoint> {
    let n = unit_normal(p, foot)?;
    let x = foot.offset(n, side.sign() * depth);
    let pr = project_to_boundary(p, &x).map_err(|e| DflabError::GridInvalid(format!("depth {depth} over t = {:.6}: {e}", foot.t())))?;
    if (pr.sdist - side.sign() * depth).abs() > 1e-8 * (1.0 + depth) {
        return Err(DflabError::GridInvalid(format!(
            "point at depth {depth} over t = {:.6} projects to signed distance {:.3e}",
            foot.t(),
            pr.sdist
        )));
    }
    Ok(x)
}

impl CollarGrid {
    /// Points over the flat annulus `{A <= t <= B} x {w_anchor}`: `n_t` radii
    /// times `n_d` log-spaced depths.
    pub fn annulus(
        p: &HartogsProfile,
        inv: &AnnulusInvariant,
        side: Side,
        n_t: usize,
        n_d: usize,
        d_min: f64,
        d_max: f64,
    ) -> Result<Self> {
        check_depths(p, d_min, d_max)?;
        let mut points = Vec::with_capacity(n_t * n_d);
        for i in 0..n_t {
            let t = if n_t < 2 { inv.a } else { inv.a + (inv.b - inv.a) * i as f64 / (n_t - 1) as f64 };
            let phase = 2.399_963_229_728_653 * i as f64;
            let foot = AmbientPoint::new(C64::from_polar(t.sqrt(), phase), inv.w_anchor);
            for k in 0..n_d {
                let depth = log_depth(k, n_d, d_min, d_max);
                // near the rims a deep point may be closer to the caps than to its foot
                if let Ok(x) = offset_point(p, &foot, side, depth) {
                    points.push(GridPoint { point: x, foot_t: t, depth });
                }
            }
        }
        if points.is_empty() {
            return Err(DflabError::GridInvalid("no annulus point projects back to its foot".into()));
        }
        Ok(Self { side, points })
    }

    /// Points over strongly pseudoconvex parts of the boundary, uniform in the
    /// slice parametrization, depths cycling log-uniformly and kept within
    /// reach of the local curvature.
    pub fn strongly_pseudoconvex(
        p: &HartogsProfile,
        side: Side,
        n_points: usize,
        d_min: f64,
        d_max: f64,
    ) -> Result<Self> {
        check_depths(p, d_min, d_max)?;
        let n_theta = 8;
        let n_t = (n_points / n_theta).max(2);
        let n_d = 5;
        let mut points = Vec::new();
        for (i, s) in slices(p, n_t).iter().enumerate() {
            for k in 0..n_theta {
                let th = TAU * (k as f64 + 0.5 * (i % 2) as f64) / n_theta as f64;
                let Ok(w) = s.point(p, th) else { continue };
                let foot = AmbientPoint::new(C64::new(s.t.sqrt(), 0.0), w);
                let jet = boundary_complex_jet(p, &foot)?;
                let hb = crate::distance::boundary_real_hessian(p, &foot)?;
                let hnorm = hb.h.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
                if jet.levi_eigenvalue() < STRICT_LEVI_FLOOR * hnorm {
                    continue;
                }
                let reach = REACH_FRACTION / max_curvature(p, &foot)?.max(1e-300);
                let depth = log_depth((i + k) % n_d, n_d, d_min, d_max).min(reach);
                if depth < d_min {
                    continue;
                }
                let foot = AmbientPoint::new(C64::from_polar(s.t.sqrt(), 0.7 * k as f64), w);
                if let Ok(x) = offset_point(p, &foot, side, depth) {
                    points.push(GridPoint { point: x, foot_t: s.t, depth });
                }
            }
        }
        Ok(Self { side, points })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertRow {
    pub t: f64,
    pub depth: f64,
    /// `det(S H S) / depth^(2 tau)`; `None` when the point failed to evaluate.
    pub det: Option<f64>,
    pub b: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub tau: f64,
    pub side: Side,
    pub grid_size: usize,
    pub min_scaled_determinant: Option<f64>,
    pub min_b: Option<f64>,
    pub worst_point: Option<GridPoint>,
    pub spot_checks: usize,
    pub spot_failures: usize,
    pub evaluation_errors: usize,
    pub rows: Vec<CertRow>,
}

impl CertificateReport {
    pub fn merge(mut self, other: CertificateReport) -> CertificateReport {
        if other.min_scaled_determinant.is_some()
            && (self.min_scaled_determinant.is_none() || other.min_scaled_determinant < self.min_scaled_determinant)
        {
            self.min_scaled_determinant = other.min_scaled_determinant;
            self.worst_point = other.worst_point;
        }
        self.passed &= other.passed;
        self.grid_size += other.grid_size;
        self.min_b = opt_min(self.min_b, other.min_b);
        self.spot_checks += other.spot_checks;
        self.spot_failures += other.spot_failures;
        self.evaluation_errors += other.evaluation_errors;
        self.rows.extend(other.rows);
        self
    }
}

struct PointOutcome {
    row: CertRow,
    spot: Option<bool>,
    error: bool,
}

fn evaluate_point(p: &HartogsProfile, cand: &ExhaustionCandidate, g: &GridPoint, dirs: Option<&[[C64; 2]]>) -> PointOutcome {
    let Ok(terms) = sigma_terms(p, cand, &g.point) else {
        return PointOutcome {
            row: CertRow { t: g.foot_t, depth: g.depth, det: None, b: None, passed: false },
            spot: None,
            error: true,
        };
    };
    let m = scale_matrix(&terms.total(), terms.depth);
    let norm = hermitian_norm(&m);
    let det = hermitian_det(&m);
    let b = m[1][1].re;
    let passed = b > 0.0 && m[0][0].re >= -TOL_PSD * norm && det >= -TOL_PSD * norm * norm;
    let spot = dirs.map(|ds| {
        ds.iter().all(|v| {
            let q = (v[0].conj() * (m[0][0] * v[0] + m[0][1] * v[1]) + v[1].conj() * (m[1][0] * v[0] + m[1][1] * v[1])).re;
            q >= -TOL_PSD * norm * 10.0
        })
    });
    let scale = terms.depth.powf(2.0 * cand.tau);
    let row = CertRow { t: g.foot_t, depth: g.depth, det: Some(det / scale), b: Some(b / terms.depth.powf(cand.tau)), passed };
    PointOutcome { row, spot, error: false }
}

/// PSD test of the scaled Hessian of `sigma` at every grid point, with
/// random-direction spot checks on every tenth point.
pub fn certify(p: &HartogsProfile, cand: &ExhaustionCandidate, grid: &CollarGrid, seed: u64) -> CertificateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Option<Vec<[C64; 2]>>> = (0..grid.points.len())
        .map(|i| {
            (i % 10 == 0).then(|| {
                let mut v = vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
                for _ in 0..RANDOM_DIRECTIONS {
                    let a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    let b = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    let n = (a.norm_sqr() + b.norm_sqr()).sqrt().max(1e-300);
                    v.push([a / n, b / n]);
                }
                v
            })
        })
        .collect();
    let outcomes: Vec<PointOutcome> = grid
        .points
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(g, d)| evaluate_point(p, cand, g, d.as_deref()))
        .collect();
    let mut worst: Option<(usize, f64)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Some(d) = o.row.det {
            if worst.is_none_or(|(_, w)| d < w) {
                worst = Some((i, d));
            }
        }
    }
    let spot_checks = outcomes.iter().filter(|o| o.spot.is_some()).count();
    let spot_failures = outcomes.iter().filter(|o| o.spot == Some(false)).count();
    let evaluation_errors = outcomes.iter().filter(|o| o.error).count();
    let passed =
        side_matches(cand, grid) && !outcomes.is_empty() && outcomes.iter().all(|o| o.row.passed) && spot_failures == 0;
    CertificateReport {
        passed,
        tau: cand.tau,
        side: cand.side,
        grid_size: grid.points.len(),
        min_scaled_determinant: worst.map(|w| w.1),
        min_b: outcomes.iter().fold(None, |m, o| opt_min(m, o.row.b)),
        worst_point: worst.map(|(i, _)| grid.points[i]),
        spot_checks,
        spot_failures,
        evaluation_errors,
        rows: outcomes.into_iter().map(|o| o.row).collect(),
    }
}

fn opt_min(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn side_matches(cand: &ExhaustionCandidate, grid: &CollarGrid) -> bool {
    cand.side == grid.side
}

pub fn write_cert_csv<W: Write>(r: &CertificateReport, out: &mut W) -> Result<()> {
    writeln!(out, "t,d,det,b")?;
    for row in &r.rows {
        let f = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6e}"));
        writeln!(out, "{:.12},{:.6e},{},{}", row.t, row.depth, f(row.det), f(row.b))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectOptions {
    pub tolerance: f64,
    pub grid_points: usize,
    pub depths: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub seed: u64,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self { tolerance: 0.02, grid_points: DEFAULT_GRID_POINTS, depths: 4, d_min: DEFAULT_D_MIN, d_max: DEFAULT_D_MAX, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfBracket {
    /// Largest certified exponent.
    pub feasible: f64,
    /// Smallest exponent that failed, or 1 when every tested exponent passed.
    pub infeasible: f64,
    /// Certification never passed above a failing exponent.
    pub monotone: bool,
    pub evaluations: Vec<(f64, bool)>,
}

struct AnnulusCase {
    inv: AnnulusInvariant,
    grid: CollarGrid,
}

/// Weights tried on an annulus at exponent `tau`: the one matched to `tau`
/// and the curvature constant, then two fixed-frequency probes.
pub fn candidate_family(tau: f64, inv: &AnnulusInvariant) -> Vec<GCandidate> {
    let l = inv.log_ratio();
    let mut out: Vec<GCandidate> = build_g(tau, inv.c_upper, inv.a, inv.b).into_iter().collect();
    if l > 0.0 {
        for f in [0.99, 0.9] {
            if let Ok(g) = g_with_frequency(tau, inv.c_upper, f * PI / l, inv.a, inv.b) {
                out.push(g);
            }
        }
    }
    out
}

fn feasible_at(p: &HartogsProfile, tau: f64, cases: &[AnnulusCase], generic: &CollarGrid, seed: u64) -> Result<bool> {
    let flat = ExhaustionCandidate::new(tau, Side::Interior, Weight::Constant(1.0))?;
    if !generic.points.is_empty() && !certify(p, &flat, generic, seed).passed {
        return Ok(false);
    }
    for case in cases {
        let ok = candidate_family(tau, &case.inv).into_iter().any(|g| {
            ExhaustionCandidate::from_g(g, Side::Interior).is_ok_and(|c| certify(p, &c, &case.grid, seed).passed)
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bisection on `tau` in `[0.01, 0.99]` for the largest certified exponent.
pub fn numeric_df_bisect(p: &HartogsProfile, c: &BoundaryClassification, opts: &BisectOptions) -> Result<DfBracket> {
    if !(opts.tolerance >= 0.01) {
        return Err(DflabError::Config(format!("bisection tolerance must be at least 0.01, got {}", opts.tolerance)));
    }
    let mut cases = Vec::new();
    for comp in c.components.iter().filter(|k| k.kind == ComponentKind::AnnulusLike) {
        let inv = curvature_profile(p, comp, DEFAULT_KAPPA_SAMPLES)?;
        let n_t = (opts.grid_points / opts.depths.max(1)).max(2);
        let grid = CollarGrid::annulus(p, &inv, Side::Interior, n_t, opts.depths, opts.d_min, opts.d_max)?;
        cases.push(AnnulusCase { inv, grid });
    }
    let generic = CollarGrid::strongly_pseudoconvex(p, Side::Interior, opts.grid_points, opts.d_min, opts.d_max)?;
    let mut evaluations = Vec::new();
    let test = |tau: f64, ev: &mut Vec<(f64, bool)>| -> Result<bool> {
        let ok = feasible_at(p, tau, &cases, &generic, opts.seed)?;
        ev.push((tau, ok));
        Ok(ok)
    };
    let (mut lo, mut hi) = (0.01, 0.99);
    if !test(lo, &mut evaluations)? {
        return Err(DflabError::NoBracket(lo));
    }
    if test(hi, &mut evaluations)? {
        return Ok(DfBracket { feasible: hi, infeasible: 1.0, monotone: true, evaluations });
    }
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        if test(mid, &mut evaluations)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let monotone = evaluations.iter().all(|&(t, ok)| !ok || evaluations.iter().all(|&(s, ok2)| ok2 || s > t));
    Ok(DfBracket { feasible: lo, infeasible: hi, monotone, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_weak_set;
    use crate::cutoff::build_lambda;
    use crate::profile::{make_ball, make_no_twist_annulus, make_worm, WormParams};

    fn worm(r: f64) -> (HartogsProfile, BoundaryClassification, AnnulusInvariant) {
        let w = make_worm(WormParams::new(r).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&w, 64).unwrap();
        let inv = curvature_profile(&w, &c.components[0], 33).unwrap();
        (w, c, inv)
    }

    #[test]
    fn averages() {
        let z = C64::new(0.3, 0.4);
        let w = C64::new(0.1, 0.0);
        assert!((rotational_average(&|_, _| 1.0, z, w) - TAU).abs() < 1e-13);
        assert!((rotational_average(&|z: C64, _| 1.0 + z.re, z, w) - TAU).abs() < 1e-13);
        assert!((rotational_average(&|z: C64, _| z.norm_sqr(), z, w) - TAU * 0.25).abs() < 1e-13);
    }

    #[test]
    fn ball_sigma_positive() {
        let b = make_ball().with_collar_halfwidth(0.2).unwrap();
        let cand = ExhaustionCandidate::new(0.5, Side::Interior, Weight::Constant(1.0)).unwrap();
        let m = sigma_hessian(&b, &cand, &AmbientPoint::new(C64::new(0.0, 0.0), C64::new(0.9, 0.0))).unwrap();
        assert!(m[0][0].re > 0.0 && hermitian_det(&m) > 0.0);
    }

    #[test]
    fn ball_certifies_at_all_tau() {
        let b = make_ball();
        let grid = CollarGrid::strongly_pseudoconvex(&b, Side::Interior, 128, 1e-4, 1e-2).unwrap();
        assert!(grid.points.len() > 100);
        for tau in [0.3, 0.6, 0.9] {
            let cand = ExhaustionCandidate::new(tau, Side::Interior, Weight::Constant(1.0)).unwrap();
            let r = certify(&b, &cand, &grid, 1);
            assert!(r.passed, "tau={tau} {:?}", r.min_scaled_determinant);
            assert!(r.spot_checks > 0 && r.evaluation_errors == 0);
        }
    }

    #[test]
    fn custom_weight_matches_constant() {
        let x = AmbientPoint::new(C64::new(0.3, 0.2), C64::new(0.5, 0.1));
        let c = ExhaustionCandidate::new(0.5, Side::Interior, Weight::Custom(Arc::new(|z: C64, _| 2.0 + z.re))).unwrap();
        let j = c.weight_jet(&x).unwrap();
        assert!((j.value - 2.0 * TAU).abs() < 1e-12);
        assert!(j.d_z.norm() < 1e-6 && j.d_zzbar.abs() < 1e-4);
    }

    #[test]
    fn no_twist_limit_matrix() {
        let p = make_no_twist_annulus(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&p, 64).unwrap();
        let w0 = c.components[0].w_anchor;
        let cand = ExhaustionCandidate::new(0.4, Side::Interior, Weight::Constant(1.0)).unwrap();
        let (a, b, cc) = abc_limit_matrix(&p, &cand, &AmbientPoint::new(C64::new(1.5f64.sqrt(), 0.0), w0)).unwrap();
        assert!(a.abs() < 1e-12 && cc.norm() < 1e-12);
        assert!((b - 0.5 * PI * 0.4 * 0.6).abs() < 1e-12);
        assert!(matches!(
            abc_limit_matrix(&make_ball(), &cand, &AmbientPoint::new(C64::new(0.6, 0.0), C64::new(0.8, 0.0))),
            Err(DflabError::NotAnnulus)
        ));
    }

    #[test]
    fn linearization_identity() {
        let (w, _, inv) = worm((PI / 2.0).exp());
        let g = build_g(0.4, inv.c_upper, inv.a, inv.b).unwrap();
        let cand = ExhaustionCandidate::from_g(g, Side::Interior).unwrap();
        for t in [1.2, 2.0, 3.5] {
            let foot = AmbientPoint::new(C64::from_polar(f64::sqrt(t), 0.4), inv.w_anchor);
            let (a, b, c) = abc_limit_matrix(&w, &cand, &foot).unwrap();
            let (gv, g1, g2) = g.jet(t);
            let kappa2 = 0.25 / (t * t);
            let tau: f64 = 0.4;
            let rhs = (-tau.powi(3) * t * gv * kappa2 - 0.25 * tau * (1.0 - tau).powi(2) * (g1 + t * g2))
                * gv.powf(1.0 - 2.0 * tau)
                * TAU
                * TAU;
            assert!((a * b - c.norm_sqr() - rhs).abs() < 1e-8, "{} vs {rhs}", a * b - c.norm_sqr());
        }
    }

    #[test]
    fn scaled_limit_converges() {
        let (w, _, inv) = worm(2.0);
        let g = build_g(0.3, inv.c_upper, inv.a, inv.b).unwrap();
        let cand = ExhaustionCandidate::from_g(g, Side::Interior).unwrap();
        let foot = AmbientPoint::new(C64::new(2.0f64.sqrt(), 0.0), inv.w_anchor);
        let (a, b, c) = abc_limit_matrix(&w, &cand, &foot).unwrap();
        let mut errs = Vec::new();
        for d in [1e-3, 1e-4, 1e-5] {
            let x = offset_point(&w, &foot, Side::Interior, d).unwrap();
            let m = scale_matrix(&sigma_hessian(&w, &cand, &x).unwrap(), d);
            let s = d.powf(0.3);
            let e = (m[0][0].re / s - a).abs() + (m[1][1].re / s - b).abs() + (m[0][1] / s - c).norm();
            errs.push(e);
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0] && errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn worm_certification_separates_half() {
        let (w, _, inv) = worm((PI / 2.0).exp());
        let grid = CollarGrid::annulus(&w, &inv, Side::Interior, 16, 3, 1e-4, 1e-3).unwrap();
        let g = build_g(0.45, inv.c_upper, inv.a, inv.b).unwrap();
        let r = certify(&w, &ExhaustionCandidate::from_g(g, Side::Interior).unwrap(), &grid, 0);
        assert!(r.passed, "{:?}", r.min_scaled_determinant);
        for tau in [0.55f64] {
            for gc in candidate_family(tau, &inv) {
                let r = certify(&w, &ExhaustionCandidate::from_g(gc, Side::Interior).unwrap(), &grid, 0);
                assert!(!r.passed);
            }
        }
        let flat = ExhaustionCandidate::new(0.6, Side::Interior, Weight::Constant(1.0)).unwrap();
        assert!(certify(&w, &flat, &grid, 0).min_scaled_determinant.unwrap() < 0.0);
    }

    #[test]
    fn exterior_side() {
        let b = make_ball();
        let grid = CollarGrid::strongly_pseudoconvex(&b, Side::Exterior, 64, 1e-4, 1e-2).unwrap();
        let cand = ExhaustionCandidate::new(1.5, Side::Exterior, Weight::Constant(1.0)).unwrap();
        assert!(certify(&b, &cand, &grid, 0).passed);
        let wrong = ExhaustionCandidate::new(0.5, Side::Interior, Weight::Constant(1.0)).unwrap();
        assert!(!certify(&b, &wrong, &grid, 0).passed);
        assert!(ExhaustionCandidate::new(0.5, Side::Exterior, Weight::Constant(1.0)).is_err());
    }
}
