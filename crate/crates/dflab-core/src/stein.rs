//! Period of the boundary one-form around an annulus, the derived winding
//! constant, and the Stein neighborhood verdicts built on them.

use crate::classify::{BoundaryClassification, ComponentKind};
use crate::complex::boundary_complex_jet;
use crate::distance::AmbientPoint;
use crate::error::{DflabError, Result};
use crate::index::{df_upper_bound, AnnulusInvariant, Existence, KAPPA_TOL};
use crate::profile::HartogsProfile;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub const VERDICT_TOL: f64 = 1e-9;
pub const QUADRATURE_NODES: usize = 64;
/// Allowed gap between the closed-form period and its quadrature.
pub const PERIOD_AGREEMENT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinReport {
    pub c1: f64,
    pub c1_quadrature: f64,
    pub a1: f64,
    pub verdict: Existence,
    /// `|d^2 delta / dz dwbar|` on the inner rim.
    pub threshold_lhs: f64,
    /// `pi / (2 sqrt(A) |log(A/B)|)`.
    pub threshold_rhs: f64,
    /// The inner rim is traversed counterclockwise in `z`; only `|a1|` enters
    /// the verdict.
    pub orientation: String,
}

fn rim_foot(inv: &AnnulusInvariant, theta: f64) -> AmbientPoint {
    AmbientPoint::new(C64::from_polar(inv.a.sqrt(), theta), inv.w_anchor)
}

/// Integrand of the period at angle `theta` on the inner rim, per unit `dtheta`.
fn period_density(p: &HartogsProfile, inv: &AnnulusInvariant, theta: f64) -> Result<f64> {
    let foot = rim_foot(inv, theta);
    let jet = boundary_complex_jet(p, &foot)?;
    let dw = jet.d_w.conj();
    if dw.norm() <= 1e-10 {
        return Err(DflabError::DegenerateNormal(dw.norm()));
    }
    let coef = -jet.d_zwbar / dw;
    let dz = C64::new(0.0, 1.0) * foot.z;
    Ok(2.0 * (coef * dz).re)
}

/// Closed-form period, evaluated at the rim point on the positive real axis.
pub fn alpha_period_c1(p: &HartogsProfile, inv: &AnnulusInvariant) -> Result<f64> {
    Ok(TAU * period_density(p, inv, 0.0)?)
}

/// Trapezoid rule over the whole inner rim.
pub fn alpha_period_quadrature(p: &HartogsProfile, inv: &AnnulusInvariant, nodes: usize) -> Result<f64> {
    let h = TAU / nodes as f64;
    let mut s = 0.0;
    for k in 0..nodes {
        s += period_density(p, inv, k as f64 * h)?;
    }
    Ok(s * h)
}

pub fn winding_constant_a1(c1: f64, a: f64, b: f64) -> f64 {
    c1 / (4.0 * PI) * (a / b).ln()
}

fn single_annulus(c: &BoundaryClassification) -> Result<()> {
    let annuli = c.components.iter().filter(|k| k.kind == ComponentKind::AnnulusLike).count();
    if annuli != 1 || c.components.len() != 1 {
        return Err(DflabError::HypothesisViolation(format!(
            "weak set must be a single annulus; found {} components ({annuli} annulus-like)",
            c.components.len()
        )));
    }
    Ok(())
}

pub fn verdict_from_a1(a1: f64) -> Existence {
    let m = a1.abs();
    if m < PI - VERDICT_TOL {
        Existence::Exists
    } else if m > PI + VERDICT_TOL {
        Existence::NotExists
    } else {
        Existence::Inconclusive
    }
}

pub fn stein_verdict(p: &HartogsProfile, c: &BoundaryClassification, inv: &AnnulusInvariant) -> Result<SteinReport> {
    single_annulus(c)?;
    let c1 = alpha_period_c1(p, inv)?;
    let c1_quadrature = alpha_period_quadrature(p, inv, QUADRATURE_NODES)?;
    if (c1 - c1_quadrature).abs() > PERIOD_AGREEMENT * (1.0 + c1.abs()) {
        return Err(DflabError::NumericMismatch(format!("period {c1} disagrees with quadrature {c1_quadrature}")));
    }
    let a1 = winding_constant_a1(c1, inv.a, inv.b);
    let jet = boundary_complex_jet(p, &rim_foot(inv, 0.0))?;
    Ok(SteinReport {
        c1,
        c1_quadrature,
        a1,
        verdict: verdict_from_a1(a1),
        threshold_lhs: jet.d_zwbar.norm(),
        threshold_rhs: PI / (2.0 * inv.a.sqrt() * (inv.a / inv.b).ln().abs()),
        orientation: "counterclockwise inner rim".into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnbCheck {
    /// `kappa` vanishes on the inner rim.
    pub holds: bool,
    pub df_upper: f64,
    /// Index one forces `holds`.
    pub consistent: bool,
    /// `holds` although the index bound is below one.
    pub flagged: bool,
}

/// Index one on a single-annulus domain forces the twist to vanish on the
/// inner rim, hence a Stein neighborhood basis.
pub fn df_one_implies_snb_check(c: &BoundaryClassification, inv: &AnnulusInvariant) -> Result<SnbCheck> {
    single_annulus(c)?;
    Ok(snb_check(inv))
}

pub fn snb_check(inv: &AnnulusInvariant) -> SnbCheck {
    let holds = inv.kappa_inner() < KAPPA_TOL;
    let df_upper = df_upper_bound(inv);
    SnbCheck { holds, df_upper, consistent: df_upper < 1.0 || holds, flagged: holds && df_upper < 1.0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinnessBound {
    pub c: f64,
    pub log_ratio: f64,
    pub feasible: bool,
    pub tau_lower: Option<f64>,
}

pub fn steinness_index_bound(inv: &AnnulusInvariant) -> SteinnessBound {
    let c = inv.c_lower;
    let l = inv.log_ratio();
    let feasible = 2.0 * c * l < PI;
    SteinnessBound { c, log_ratio: l, feasible, tau_lower: feasible.then(|| PI / (PI - 2.0 * c * l)) }
}
