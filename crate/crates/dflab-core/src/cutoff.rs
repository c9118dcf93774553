//! The convex cutoff used to cap worm-type domains.
//!
//! The cutoff solves `l'' = 100 l' + bump` with zero data at the origin, where
//! the bump `scale * exp(4 - epsilon^2 / (x (epsilon - x)))` is smooth, flat at
//! zero, supported on `(0, epsilon)`, and peaks at `scale`. On `[0, epsilon]` the solution is tabulated and
//! evaluated by cubic Hermite interpolation; beyond `epsilon` the bump is zero
//! and the solution is exponential in closed form.

use crate::error::{DflabError, Result};
use crate::ode::{integrate, Tolerance};
use serde::{Deserialize, Serialize};

/// Growth rate in the cutoff's convexity condition.
pub const GROWTH: f64 = 100.0;

const TABLE_NODES: usize = 8192;

pub const COND_VANISH: &str = "λ(x)=0 if x≤0";
pub const COND_EXCEEDS_ONE: &str = "λ(x)>1 if x>1";
pub const COND_CONVEX_GROWTH: &str = "λ''≥100λ'";
pub const COND_STRICT_CONVEX: &str = "λ''>0 if x>0";
pub const COND_STEEP: &str = "λ'>100 if λ>1/2";

/// Value and first three derivatives at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Outcome of the grid check; empty `failures` means all five conditions hold.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct CutoffReport {
    pub grid_points: usize,
    pub failures: Vec<String>,
    /// Smallest x with λ(x) ≥ 1.
    pub unit_crossing: f64,
    /// Integral of the bump over its support.
    pub bump_mass: f64,
}

#[derive(Clone, Debug)]
pub struct LambdaCutoff {
    epsilon: f64,
    scale: f64,
    step: f64,
    // (λ, λ') at x_k = k*step on [0, epsilon]
    table: Vec<[f64; 2]>,
    report: CutoffReport,
}

impl LambdaCutoff {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn report(&self) -> &CutoffReport {
        &self.report
    }

    /// Exponent `e(x)` with bump = scale * exp(-e(x)) on the support; zero at the midpoint.
    fn bump_exponent(&self, x: f64) -> f64 {
        let e = self.epsilon;
        e * e / (x * (e - x)) - 4.0
    }

    /// Natural log of the bump, `-inf` off the support.
    pub fn log_bump(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.epsilon {
            f64::NEG_INFINITY
        } else {
            self.scale.ln() - self.bump_exponent(x)
        }
    }

    /// Bump value and its first derivative.
    pub fn bump(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 || x >= self.epsilon {
            return (0.0, 0.0);
        }
        let m = self.scale * (-self.bump_exponent(x)).exp();
        let e = self.epsilon;
        let q = x * (e - x);
        (m, m * e * e * (e - 2.0 * x) / (q * q))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).value
    }

    pub fn jet(&self, x: f64) -> CutoffJet {
        if x <= 0.0 {
            return CutoffJet::default();
        }
        if x >= self.epsilon {
            let [l0, d0] = *self.table.last().unwrap();
            let g = (GROWTH * (x - self.epsilon)).exp();
            let d1 = d0 * g;
            return CutoffJet {
                value: l0 + d0 * (g - 1.0) / GROWTH,
                d1,
                d2: GROWTH * d1,
                d3: GROWTH * GROWTH * d1,
            };
        }
        let s = x / self.step;
        let k = (s.floor() as usize).min(self.table.len() - 2);
        let h = self.step;
        let u = s - k as f64;
        let [l0, p0] = self.table[k];
        let [l1, p1] = self.table[k + 1];
        let x0 = k as f64 * h;
        let x1 = x0 + h;
        let (m0, _) = self.bump(x0);
        let (m1, _) = self.bump(x1);
        let q0 = GROWTH * p0 + m0;
        let q1 = GROWTH * p1 + m1;
        let (h00, h10, h01, h11) = hermite(u);
        let value = h00 * l0 + h10 * h * p0 + h01 * l1 + h11 * h * p1;
        let d1 = h00 * p0 + h10 * h * q0 + h01 * p1 + h11 * h * q1;
        let (m, dm) = self.bump(x);
        let d2 = GROWTH * d1 + m;
        CutoffJet { value, d1, d2, d3: GROWTH * d2 + dm }
    }

    /// Smallest x ≥ 0 where λ reaches `level` (λ is increasing on x > 0).
    pub fn inverse(&self, level: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.value(hi) < level {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        hi
    }
}

fn hermite(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2)
}

/// Builds the cutoff and checks the five defining conditions on a grid.
pub fn build_lambda(epsilon: f64, scale: f64) -> Result<LambdaCutoff> {
    let cutoff = integrate_cutoff(epsilon, scale)?;
    if cutoff.report.failures.is_empty() {
        Ok(cutoff)
    } else {
        Err(DflabError::ConstraintViolation(cutoff.report.failures.clone()))
    }
}

/// Like [`build_lambda`] but returns the cutoff even when a condition fails.
pub fn integrate_cutoff(epsilon: f64, scale: f64) -> Result<LambdaCutoff> {
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(DflabError::Config(format!("epsilon must lie in (0, 1/4], got {epsilon}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(DflabError::Config(format!("scale must be positive, got {scale}")));
    }
    let step = epsilon / (TABLE_NODES - 1) as f64;
    let mut cut = LambdaCutoff { epsilon, scale, step, table: Vec::new(), report: CutoffReport::default() };
    let tol = Tolerance { rtol: 1e-13, atol: 1e-300 };
    let mut table = Vec::with_capacity(TABLE_NODES);
    table.push([0.0, 0.0]);
    let mut y = [0.0f64, 0.0f64];
    // mass of the bump, integrated alongside
    let mut mass = 0.0;
    for k in 1..TABLE_NODES {
        let a = (k - 1) as f64 * step;
        let b = if k == TABLE_NODES - 1 { epsilon } else { k as f64 * step };
        let f = |x: f64, s: &[f64; 3]| {
            let (m, _) = cut.bump(x);
            [s[1], GROWTH * s[1] + m, m]
        };
        let (next, _) = integrate(f, a, b, [y[0], y[1], mass], tol, step);
        y = [next[0], next[1]];
        mass = next[2];
        table.push(y);
    }
    cut.table = table;
    cut.report = verify(&cut, mass);
    Ok(cut)
}

fn verify(cut: &LambdaCutoff, mass: f64) -> CutoffReport {
    let eps = cut.epsilon;
    let mut xs: Vec<f64> = (0..=2500).map(|i| -1.0 + 2.5 * i as f64 / 2500.0).collect();
    xs.extend((1..2000).map(|i| eps * i as f64 / 2000.0));
    let mut failures = Vec::new();
    let mut note = |name: &str, x: f64| {
        if !failures.iter().any(|f: &String| f.starts_with(name)) {
            failures.push(format!("{name} (witness x = {x:.6})"));
        }
    };
    for &x in &xs {
        let j = cut.jet(x);
        if x <= 0.0 && (j.value != 0.0 || j.d1 != 0.0) {
            note(COND_VANISH, x);
        }
        if x > 1.0 && !(j.value > 1.0) {
            note(COND_EXCEEDS_ONE, x);
        }
        let (m, _) = cut.bump(x);
        let slack = j.d2 - GROWTH * j.d1;
        if !(slack >= -1e-12 * j.d2.abs().max(m)) {
            note(COND_CONVEX_GROWTH, x);
        }
        if x > 0.0 {
            // underflow-safe: inside the support the bump is positive iff its log is finite
            let positive = if x < eps { cut.log_bump(x).is_finite() || j.d2 > 0.0 } else { j.d2 > 0.0 };
            if !positive {
                note(COND_STRICT_CONVEX, x);
            }
        }
        if j.value > 0.5 && !(j.d1 > GROWTH) {
            note(COND_STEEP, x);
        }
    }
    let unit_crossing = if cut.value(2.0) >= 1.0 { cut.inverse(1.0) } else { f64::INFINITY };
    CutoffReport { grid_points: xs.len(), failures, unit_crossing, bump_mass: mass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_cut() -> LambdaCutoff {
        build_lambda(0.1, 2e4).unwrap()
    }

    #[test]
    fn vanishes_on_negative_axis() {
        let c = default_cut();
        assert_eq!(c.value(-1.0), 0.0);
        assert_eq!(c.jet(0.0), CutoffJet::default());
    }

    #[test]
    fn ode_residual_equals_bump() {
        let c = default_cut();
        for i in 1..200 {
            let x = 0.3 * i as f64 / 200.0;
            let j = c.jet(x);
            let (m, _) = c.bump(x);
            let res = j.d2 - GROWTH * j.d1;
            assert!(res >= 0.0);
            assert!((res - m).abs() <= 1e-9 * j.d2.abs().max(1.0));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = default_cut();
        for &x in &[0.05, 0.1, 0.124, 0.2, 0.249, 0.26, 0.4] {
            let h = 1e-6;
            let (a, b) = (c.jet(x - h), c.jet(x + h));
            let j = c.jet(x);
            let fd1 = (b.value - a.value) / (2.0 * h);
            let fd2 = (b.d1 - a.d1) / (2.0 * h);
            let fd3 = (b.d2 - a.d2) / (2.0 * h);
            assert!((fd1 - j.d1).abs() <= 1e-6 * (1.0 + j.d1.abs()), "d1 at {x}");
            assert!((fd2 - j.d2).abs() <= 1e-6 * (1.0 + j.d2.abs()), "d2 at {x}");
            assert!((fd3 - j.d3).abs() <= 1e-5 * (1.0 + j.d3.abs()), "d3 at {x}");
        }
    }

    #[test]
    fn steep_where_above_half() {
        let c = default_cut();
        let x = c.inverse(0.5);
        assert!(c.jet(x).d1 > GROWTH);
        assert!((c.value(x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bump_peak_equals_scale() {
        let c = default_cut();
        assert!((c.bump(0.05).0 - 2e4).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(matches!(build_lambda(0.3, 1.0), Err(DflabError::Config(_))));
        assert!(matches!(build_lambda(0.1, -1.0), Err(DflabError::Config(_))));
    }

    #[test]
    fn small_scale_reports_steepness_failure() {
        match build_lambda(0.25, 100.0) {
            Err(DflabError::ConstraintViolation(f)) => assert!(f.iter().any(|s| s.starts_with(COND_STEEP))),
            other => panic!("expected violation, got {other:?}"),
        }
    }
}
