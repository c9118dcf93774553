//! Annulus curvature invariant and the resulting bounds on the
//! Diederich–Fornæss index.
//!
//! On a flat annulus `{A <= |z|^2 <= B} x {w0}` the obstruction is measured by
//! `kappa(t) = |z| |d^2 delta / dw dzbar|`. With `C` a bound on `kappa` the index
//! is controlled by `pi / (2 C log(B/A) + pi)`.

use crate::classify::{BoundaryClassification, ComponentKind, WeakComponent};
use crate::complex::boundary_complex_jet;
use crate::distance::{project_to_boundary, AmbientPoint};
use crate::error::{DflabError, Result};
use crate::profile::HartogsProfile;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// `kappa` below this counts as vanishing.
pub const KAPPA_TOL: f64 = 1e-7;
pub const DEFAULT_KAPPA_SAMPLES: usize = 129;
const G_GRID: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusInvariant {
    pub a: f64,
    pub b: f64,
    pub w_anchor: C64,
    /// `(t, kappa)` on an increasing grid over `[a, b]`.
    pub kappa: Vec<(f64, f64)>,
    pub c_lower: f64,
    pub c_upper: f64,
}

impl AnnulusInvariant {
    /// Builds an invariant from a tabulated profile; `table` must be sorted in `t`.
    pub fn from_table(w_anchor: C64, table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() {
            return Err(DflabError::DomainError("empty kappa table".into()));
        }
        if table.windows(2).any(|w| w[1].0 < w[0].0) || table.iter().any(|&(t, k)| !(t > 0.0) || !(k >= 0.0)) {
            return Err(DflabError::DomainError("kappa table must be sorted with t > 0 and kappa >= 0".into()));
        }
        let c_lower = table.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let c_upper = table.iter().map(|x| x.1).fold(0.0, f64::max);
        Ok(Self { a: table[0].0, b: table[table.len() - 1].0, w_anchor, kappa: table, c_lower, c_upper })
    }

    pub fn log_ratio(&self) -> f64 {
        (self.b / self.a).ln()
    }

    /// `kappa` at the inner rim.
    pub fn kappa_inner(&self) -> f64 {
        self.kappa[0].1
    }
}

/// Effective radial window of an annulus: the weak range, cut down to the
/// cutoff-free band when the profile has one.
pub fn effective_window(p: &HartogsProfile, comp: &WeakComponent) -> (f64, f64) {
    let (a, b) = comp.t_range;
    match p.lambda_free_band() {
        Some((lo, hi)) if a.max(lo) <= b.min(hi) => (a.max(lo), b.min(hi)),
        _ => (a, b),
    }
}

/// `|z| |d_zwbar|` at the boundary point over `(sqrt t, w)`, projecting first
/// when the anchor is not exactly on the boundary at this `t`.
pub fn kappa_at(p: &HartogsProfile, t: f64, w: C64) -> Result<f64> {
    let mut foot = AmbientPoint::new(C64::new(t.sqrt(), 0.0), w);
    if p.rho(t, w)?.abs() > 1e-10 {
        foot = project_to_boundary(p, &foot)?.foot;
    }
    let jet = boundary_complex_jet(p, &foot)?;
    Ok(foot.z.norm() * jet.d_zwbar.norm())
}

pub fn curvature_profile(p: &HartogsProfile, comp: &WeakComponent, n_samples: usize) -> Result<AnnulusInvariant> {
    if comp.kind != ComponentKind::AnnulusLike {
        return Err(DflabError::NotAnnulus);
    }
    let (a, b) = effective_window(p, comp);
    if !(a > 0.0) {
        return Err(DflabError::NotAnnulus);
    }
    let n = if b > a { n_samples.max(2) } else { 1 };
    let table = (0..n)
        .map(|i| {
            let t = if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
            kappa_at(p, t, comp.w_anchor).map(|k| (t, k))
        })
        .collect::<Result<Vec<_>>>()?;
    AnnulusInvariant::from_table(comp.w_anchor, table)
}

/// `pi / (2 C log(B/A) + pi)`.
pub fn closed_form_bound(c: f64, a: f64, b: f64) -> f64 {
    PI / (2.0 * c * (b / a).ln() + PI)
}

/// Best bound over all grid subintervals, each using the minimum of `kappa`
/// on that subinterval.
pub fn df_upper_bound(inv: &AnnulusInvariant) -> f64 {
    let k = &inv.kappa;
    let mut best = 1.0f64;
    for i in 0..k.len() {
        let mut m = k[i].1;
        for j in i + 1..k.len() {
            m = m.min(k[j].1);
            best = best.min(closed_form_bound(m, k[i].0, k[j].0));
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentBound {
    pub kind: ComponentKind,
    pub t_range: (f64, f64),
    pub upper: f64,
    pub lower: f64,
    pub invariant: Option<AnnulusInvariant>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DFBounds {
    pub upper: f64,
    pub lower: f64,
    /// `lower <= upper` up to rounding.
    pub consistent: bool,
    pub per_component: Vec<ComponentBound>,
}

/// Per-component bounds. Disk-like and non-flat components contribute 1.
pub fn df_bounds(p: &HartogsProfile, c: &BoundaryClassification, n_samples: usize) -> Result<DFBounds> {
    if !c.is_regular {
        return Err(DflabError::IrregularWeakSet);
    }
    let mut per_component = Vec::new();
    for comp in &c.components {
        let entry = if comp.kind == ComponentKind::AnnulusLike {
            let inv = curvature_profile(p, comp, n_samples)?;
            ComponentBound {
                kind: comp.kind,
                t_range: (inv.a, inv.b),
                upper: df_upper_bound(&inv),
                lower: closed_form_bound(inv.c_upper, inv.a, inv.b),
                invariant: Some(inv),
            }
        } else {
            ComponentBound { kind: comp.kind, t_range: comp.t_range, upper: 1.0, lower: 1.0, invariant: None }
        };
        per_component.push(entry);
    }
    let upper = per_component.iter().map(|b| b.upper).fold(1.0, f64::min);
    let lower = per_component.iter().map(|b| b.lower).fold(1.0, f64::min);
    Ok(DFBounds { upper, lower, consistent: lower <= upper + 1e-12, per_component })
}

pub fn df_lower_bound(p: &HartogsProfile, c: &BoundaryClassification) -> Result<f64> {
    Ok(df_bounds(p, c, DEFAULT_KAPPA_SAMPLES)?.lower)
}

/// Oscillation length `omega log(B/A)` of the linearized weight equation.
pub fn sturm_window(tau: f64, c: f64, a: f64, b: f64) -> f64 {
    2.0 * tau * c / (1.0 - tau).abs() * (b / a).ln()
}

fn window_too_wide(window: f64) -> bool {
    window >= PI * (1.0 - 1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

pub fn sturm_window_check(tau: f64, c: f64, a: f64, b: f64) -> Feasibility {
    if window_too_wide(sturm_window(tau, c, a, b)) {
        Feasibility::Infeasible
    } else {
        Feasibility::Feasible
    }
}

/// Positive weight `g(t) = c1 cos(omega log t) + c2 sin(omega log t) - eps`
/// on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GCandidate {
    pub tau: f64,
    pub c: f64,
    pub omega: f64,
    pub phi: f64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub b: f64,
}

impl GCandidate {
    fn phase(&self, t: f64) -> f64 {
        self.omega * t.ln()
    }

    pub fn value(&self, t: f64) -> f64 {
        let l = self.phase(t);
        self.c1 * l.cos() + self.c2 * l.sin() - self.eps
    }

    /// `(g, g', g'')` in `t`.
    pub fn jet(&self, t: f64) -> (f64, f64, f64) {
        let l = self.phase(t);
        let (s, c) = l.sin_cos();
        let p = self.c1 * c + self.c2 * s;
        let q = -self.c1 * s + self.c2 * c;
        let g1 = self.omega * q / t;
        let g2 = -self.omega * q / (t * t) - self.omega * self.omega * p / (t * t);
        (p - self.eps, g1, g2)
    }

    /// `-1/4 tau (1-tau)^2 (g' + t g'') - tau^3 g C^2 / t`; nonnegative for a
    /// valid weight.
    pub fn linearized_lhs(&self, t: f64) -> f64 {
        let (g, g1, g2) = self.jet(t);
        let tau = self.tau;
        -0.25 * tau * (1.0 - tau).powi(2) * (g1 + t * g2) - tau.powi(3) * g * self.c * self.c / t
    }

    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n < 2 || self.a == self.b {
            return vec![self.a];
        }
        let (la, lb) = (self.a.ln(), self.b.ln());
        (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    /// `(t, g)` on a log-uniform grid.
    pub fn tabulate(&self, n: usize) -> Vec<(f64, f64)> {
        self.grid(n).into_iter().map(|t| (t, self.value(t))).collect()
    }
}

/// Weight with a prescribed frequency `omega`, centered on `[a, b]`; no
/// inequality check. Requires `omega log(B/A) < pi`.
pub fn g_with_frequency(tau: f64, c: f64, omega: f64, a: f64, b: f64) -> Result<GCandidate> {
    let window = omega * (b / a).ln();
    if window_too_wide(window) {
        return Err(DflabError::WindowTooWide { window });
    }
    let phi = 0.5 * PI - 0.5 * omega * (a.ln() + b.ln());
    let eps = 0.5 * (0.5 * window).cos();
    Ok(GCandidate { tau, c, omega, phi, eps, c1: phi.sin(), c2: phi.cos(), a, b })
}

pub fn build_g(tau: f64, c: f64, a: f64, b: f64) -> Result<GCandidate> {
    if !(tau > 0.0) || tau == 1.0 || !tau.is_finite() {
        return Err(DflabError::Config(format!("tau must be positive and different from 1, got {tau}")));
    }
    if !(c >= 0.0) || !(a > 0.0) || !(b >= a) || !b.is_finite() {
        return Err(DflabError::DomainError(format!("need C >= 0 and 0 < A <= B, got C={c}, A={a}, B={b}")));
    }
    let omega = 2.0 * tau * c / (1.0 - tau).abs();
    let window = omega * (b / a).ln();
    if window_too_wide(window) {
        return Err(DflabError::WindowTooWide { window });
    }
    let g = g_with_frequency(tau, c, omega, a, b)?;
    for t in g.grid(G_GRID) {
        let v = g.value(t);
        if !(v > 0.0) {
            return Err(DflabError::NonPositive(v));
        }
        let lhs = g.linearized_lhs(t);
        let scale = tau.powi(3) * c * c / t + tau * (1.0 - tau).powi(2) * omega * omega / t;
        if lhs < -1e-12 * scale {
            return Err(DflabError::NumericMismatch(format!("linearized inequality fails at t={t}: {lhs:e}")));
        }
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Existence {
    Exists,
    NotExists,
    Inconclusive,
}

/// Good vector fields exist near the annulus iff it is a single circle or
/// `kappa` vanishes somewhere on it.
pub fn good_vector_field_criterion(inv: &AnnulusInvariant) -> Existence {
    if inv.a == inv.b || inv.c_lower <= KAPPA_TOL {
        Existence::Exists
    } else {
        Existence::NotExists
    }
}

pub fn write_kappa_csv<W: Write>(inv: &AnnulusInvariant, out: &mut W) -> Result<()> {
    writeln!(out, "t,kappa")?;
    for (t, k) in &inv.kappa {
        writeln!(out, "{t:.12},{k:.12}")?;
    }
    Ok(())
}

pub fn write_g_csv<W: Write>(g: &GCandidate, n: usize, out: &mut W) -> Result<()> {
    writeln!(out, "t,g")?;
    for (t, v) in g.tabulate(n) {
        writeln!(out, "{t:.12},{v:.12}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_weak_set;
    use crate::cutoff::build_lambda;
    use crate::profile::{make_ball, make_no_twist_annulus, make_twisted_worm, make_worm, WormParams};
    use proptest::prelude::*;

    fn flat(k: f64, a: f64, b: f64, n: usize) -> AnnulusInvariant {
        let t: Vec<(f64, f64)> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64, k)).collect();
        AnnulusInvariant::from_table(C64::new(0.0, 0.0), t).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let e_pi = PI.exp();
        assert!((df_upper_bound(&flat(0.5, 1.0, e_pi, 33)) - 0.5).abs() < 1e-14);
        assert_eq!(df_upper_bound(&flat(0.0, 1.0, 4.0, 33)), 1.0);
        assert!((df_upper_bound(&flat(0.5, 1.0, 4.0, 33)) - 0.693_831).abs() < 1e-6);
    }

    #[test]
    fn subinterval_optimization_ignores_dips() {
        let mut t = flat(0.5, 1.0, 4.0, 41).kappa;
        t[0].1 = 0.0;
        let inv = AnnulusInvariant::from_table(C64::new(0.0, 0.0), t.clone()).unwrap();
        let expect = closed_form_bound(0.5, t[1].0, 4.0);
        assert!((df_upper_bound(&inv) - expect).abs() < 1e-14);
        assert_eq!(good_vector_field_criterion(&inv), Existence::Exists);
    }

    #[test]
    fn worm_kappa_is_half() {
        let w = make_worm(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&w, 64).unwrap();
        let inv = curvature_profile(&w, &c.components[0], 33).unwrap();
        assert_eq!((inv.a, inv.b), (1.0, 4.0));
        for (_, k) in &inv.kappa {
            assert!((k - 0.5).abs() < 1e-8, "{k}");
        }
        let bounds = df_bounds(&w, &c, 33).unwrap();
        let exact = PI / (4f64.ln() + PI);
        assert!((bounds.upper - exact).abs() < 1e-6 && (bounds.lower - exact).abs() < 1e-6);
        assert_eq!(good_vector_field_criterion(&inv), Existence::NotExists);
    }

    #[test]
    fn twisted_worm_kappa_quarter() {
        let w = make_twisted_worm(WormParams::new(2.0).unwrap(), 0.5, build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&w, 64).unwrap();
        assert_eq!(c.components.len(), 1);
        let inv = curvature_profile(&w, &c.components[0], 17).unwrap();
        assert!((inv.c_lower - 0.25).abs() < 1e-8 && (inv.c_upper - 0.25).abs() < 1e-8, "{inv:?}");
    }

    #[test]
    fn no_twist_and_ball() {
        let p = make_no_twist_annulus(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&p, 64).unwrap();
        let inv = curvature_profile(&p, &c.components[0], 17).unwrap();
        assert!(inv.c_upper < 1e-12);
        assert_eq!(df_upper_bound(&inv), 1.0);
        assert_eq!(df_lower_bound(&p, &c).unwrap(), 1.0);
        assert_eq!(good_vector_field_criterion(&inv), Existence::Exists);
        let b = make_ball();
        assert_eq!(df_lower_bound(&b, &classify_weak_set(&b, 64).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn disk_component_is_not_annulus() {
        let comp = WeakComponent {
            kind: ComponentKind::DiskLike,
            w_anchor: C64::new(0.0, 0.0),
            t_range: (0.0, 1.0),
            flat: true,
            radially_closed: true,
            samples: vec![],
        };
        assert_eq!(curvature_profile(&make_ball(), &comp, 8), Err(DflabError::NotAnnulus));
    }

    #[test]
    fn build_g_examples() {
        let e_pi = PI.exp();
        let g = build_g(0.45, 0.5, 1.0, e_pi).unwrap();
        assert!((g.omega * PI - 0.8181818181818182 * PI).abs() < 1e-12);
        assert!(matches!(build_g(0.5, 0.5, 1.0, e_pi), Err(DflabError::WindowTooWide { .. })));
        assert_eq!(sturm_window_check(0.5, 0.5, 1.0, e_pi), Feasibility::Infeasible);
        assert_eq!(sturm_window_check(0.49, 0.5, 1.0, e_pi), Feasibility::Feasible);
        let flat_g = build_g(0.99, 0.0, 1.0, 50.0).unwrap();
        assert!((flat_g.value(7.0) - 0.5).abs() < 1e-15);
        assert_eq!(sturm_window_check(0.99, 0.0, 1.0, 1e9), Feasibility::Feasible);
    }

    #[test]
    fn bound_is_monotone() {
        let mut prev = 1.0;
        for k in 0..20 {
            let v = closed_form_bound(0.05 * k as f64, 1.0, 4.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn build_g_matches_sturm(tau in 0.01f64..0.99, c in 0.0f64..2.0, a in 0.1f64..5.0, ratio in 1.0f64..100.0) {
            let b = a * ratio;
            let ok = build_g(tau, c, a, b);
            prop_assert_eq!(ok.is_ok(), sturm_window_check(tau, c, a, b) == Feasibility::Feasible);
            if let Ok(g) = ok {
                for t in g.grid(200) {
                    prop_assert!(g.value(t) > 0.0);
                    prop_assert!(g.linearized_lhs(t) >= -1e-12);
                }
            }
        }
    }
}
