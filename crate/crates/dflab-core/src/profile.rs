//! Rotationally invariant defining functions `rho(t, w)` with `t = |z|^2`.

use crate::cutoff::{CutoffJet, LambdaCutoff};
use crate::error::{DflabError, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Partial derivatives of `rho` in `(t, u, v)` with `w = u + iv`, up to order 3.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet3 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
    pub third: [[[f64; 3]; 3]; 3],
}

impl Jet3 {
    pub fn rho_t(&self) -> f64 {
        self.grad[0]
    }

    /// Complex derivative `d rho / d w = (rho_u - i rho_v) / 2`.
    pub fn rho_w(&self) -> C64 {
        C64::new(0.5 * self.grad[1], -0.5 * self.grad[2])
    }

    /// `d^2 rho / dt dw`.
    pub fn rho_tw(&self) -> C64 {
        C64::new(0.5 * self.hess[0][1], -0.5 * self.hess[0][2])
    }

    /// `d^2 rho / dw dwbar`.
    pub fn rho_wwbar(&self) -> f64 {
        0.25 * (self.hess[1][1] + self.hess[2][2])
    }

    fn symmetrize(&mut self) {
        for i in 0..3 {
            for j in 0..3 {
                let mut idx = [i, j];
                idx.sort_unstable();
                self.hess[i][j] = self.hess[idx[0]][idx[1]];
                for k in 0..3 {
                    let mut idx = [i, j, k];
                    idx.sort_unstable();
                    self.third[i][j][k] = self.third[idx[0]][idx[1]][idx[2]];
                }
            }
        }
    }
}

/// A smooth function of `(t, w)` whose zero set bounds a Hartogs domain.
pub trait DefiningFunction: Send + Sync + fmt::Debug {
    fn value(&self, t: f64, w: C64) -> Result<f64>;

    /// Defaults to nested central differences of [`DefiningFunction::value`].
    fn jet(&self, t: f64, w: C64) -> Result<Jet3> {
        finite_difference_jet(self, t, w)
    }
}

/// Central-difference jet used for profiles without closed-form derivatives.
pub fn finite_difference_jet<F: DefiningFunction + ?Sized>(f: &F, t: f64, w: C64) -> Result<Jet3> {
    let base = [t, w.re, w.im];
    let eval = |p: [f64; 3]| f.value(p[0], C64::new(p[1], p[2]));
    let shift = |p: [f64; 3], i: usize, h: f64| {
        let mut q = p;
        q[i] += h;
        q
    };
    let d1 = |p: [f64; 3], i: usize, h: f64| -> Result<f64> {
        Ok((eval(shift(p, i, h))? - eval(shift(p, i, -h))?) / (2.0 * h))
    };
    let d2 = |p: [f64; 3], i: usize, j: usize, h: f64| -> Result<f64> {
        if i == j {
            Ok((eval(shift(p, i, h))? - 2.0 * eval(p)? + eval(shift(p, i, -h))?) / (h * h))
        } else {
            Ok((d1(shift(p, j, h), i, h)? - d1(shift(p, j, -h), i, h)?) / (2.0 * h))
        }
    };
    let mut jet = Jet3 { value: eval(base)?, ..Jet3::default() };
    for i in 0..3 {
        jet.grad[i] = d1(base, i, 1e-6)?;
        for j in i..3 {
            jet.hess[i][j] = d2(base, i, j, 1e-4)?;
            for k in j..3 {
                let h = 1e-3;
                jet.third[i][j][k] = (d2(shift(base, k, h), i, j, h)? - d2(shift(base, k, -h), i, j, h)?) / (2.0 * h);
            }
        }
    }
    jet.symmetrize();
    Ok(jet)
}

/// Ambient gradient in `(x, y, u, v)` at `z = x + iy`.
pub fn ambient_gradient(jet: &Jet3, z: C64) -> [f64; 4] {
    let rt = jet.grad[0];
    [2.0 * z.re * rt, 2.0 * z.im * rt, jet.grad[1], jet.grad[2]]
}

/// Ambient real Hessian in `(x, y, u, v)` at `z = x + iy`.
pub fn ambient_hessian(jet: &Jet3, z: C64) -> [[f64; 4]; 4] {
    let (x, y) = (z.re, z.im);
    let (rt, rtt) = (jet.grad[0], jet.hess[0][0]);
    let (rtu, rtv) = (jet.hess[0][1], jet.hess[0][2]);
    let mut h = [[0.0; 4]; 4];
    h[0][0] = 4.0 * x * x * rtt + 2.0 * rt;
    h[1][1] = 4.0 * y * y * rtt + 2.0 * rt;
    h[0][1] = 4.0 * x * y * rtt;
    h[0][2] = 2.0 * x * rtu;
    h[0][3] = 2.0 * x * rtv;
    h[1][2] = 2.0 * y * rtu;
    h[1][3] = 2.0 * y * rtv;
    h[2][2] = jet.hess[1][1];
    h[2][3] = jet.hess[1][2];
    h[3][3] = jet.hess[2][2];
    for i in 0..4 {
        for j in 0..i {
            h[i][j] = h[j][i];
        }
    }
    h
}

/// Largest normalized mismatch between the jet and central differences of the
/// next-lower order, over all entries of order 1 to 3.
///
/// Each difference quotient is Richardson-extrapolated from steps `h` and
/// `h/2`; entry `e` contributes `|fd - e| / (1 + |e|)`.
pub fn jet_fd_residual(p: &HartogsProfile, t: f64, w: C64, h: f64) -> Result<f64> {
    let j = p.jet(t, w)?;
    let mut worst = 0.0f64;
    let quotient = |i: usize, h: f64| -> Result<(Jet3, Jet3)> {
        let mut d = [0.0; 3];
        d[i] = h;
        Ok((p.jet(t + d[0], w + C64::new(d[1], d[2]))?, p.jet(t - d[0], w - C64::new(d[1], d[2]))?))
    };
    for i in 0..3 {
        let (a, b) = quotient(i, h)?;
        let (a2, b2) = quotient(i, 0.5 * h)?;
        let rich = |f: f64, f2: f64| (4.0 * f2 - f) / 3.0;
        let mut check = |fd: f64, e: f64| worst = worst.max((fd - e).abs() / (1.0 + e.abs()));
        check(rich((a.value - b.value) / (2.0 * h), (a2.value - b2.value) / h), j.grad[i]);
        for k in 0..3 {
            check(rich((a.grad[k] - b.grad[k]) / (2.0 * h), (a2.grad[k] - b2.grad[k]) / h), j.hess[i][k]);
            for l in 0..3 {
                let fd = rich((a.hess[k][l] - b.hess[k][l]) / (2.0 * h), (a2.hess[k][l] - b2.hess[k][l]) / h);
                check(fd, j.third[i][k][l]);
            }
        }
    }
    Ok(worst)
}

/// Which benchmark a profile was built from; echoed in reports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Ball,
    Worm { r: f64, twist: f64, epsilon: f64, scale: f64 },
    NoTwist { r: f64, epsilon: f64, scale: f64 },
    Radius { label: String },
    Custom { label: String },
}

/// Parameters of a worm-type domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WormParams {
    pub r: f64,
}

impl WormParams {
    pub fn new(r: f64) -> Result<Self> {
        if r > 1.0 && r.is_finite() {
            Ok(WormParams { r })
        } else {
            Err(DflabError::Config(format!("worm parameter r must exceed 1, got {r}")))
        }
    }
}

/// A Hartogs domain `{ rho(|z|^2, w) < 0 }` with the metadata the solvers need.
#[derive(Clone)]
pub struct HartogsProfile {
    kind: ProfileKind,
    func: Arc<dyn DefiningFunction>,
    collar_halfwidth: f64,
    t_window: (f64, f64),
    flat_band: Option<(f64, f64)>,
    seeds: Arc<OnceLock<Vec<[f64; 3]>>>,
}

impl fmt::Debug for HartogsProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HartogsProfile")
            .field("kind", &self.kind)
            .field("collar_halfwidth", &self.collar_halfwidth)
            .field("t_window", &self.t_window)
            .finish()
    }
}

pub const DEFAULT_COLLAR: f64 = 1e-2;

impl HartogsProfile {
    /// Wraps a user defining function. `t_window` bounds the values of `|z|^2`
    /// attained on the closure of the domain.
    pub fn from_function(label: &str, func: Arc<dyn DefiningFunction>, t_window: (f64, f64)) -> Result<Self> {
        if !(t_window.0 >= 0.0 && t_window.1 > t_window.0) {
            return Err(DflabError::Config(format!("bad t window {t_window:?}")));
        }
        Ok(Self::assemble(ProfileKind::Custom { label: label.to_string() }, func, t_window, None))
    }

    fn assemble(kind: ProfileKind, func: Arc<dyn DefiningFunction>, t_window: (f64, f64), band: Option<(f64, f64)>) -> Self {
        HartogsProfile {
            kind,
            func,
            collar_halfwidth: DEFAULT_COLLAR,
            t_window,
            flat_band: band,
            seeds: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_collar_halfwidth(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(DflabError::Config(format!("collar halfwidth must be positive, got {h}")));
        }
        self.collar_halfwidth = h;
        Ok(self)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn collar_halfwidth(&self) -> f64 {
        self.collar_halfwidth
    }

    /// Range of `|z|^2` over the closed domain.
    pub fn t_window(&self) -> (f64, f64) {
        self.t_window
    }

    /// Band of `t` where the cutoff terms vanish identically, if any.
    pub fn lambda_free_band(&self) -> Option<(f64, f64)> {
        self.flat_band
    }

    pub fn rho(&self, t: f64, w: C64) -> Result<f64> {
        let v = self.func.value(t, w)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DflabError::DomainError(format!("non-finite value at t = {t}, w = {w}")))
        }
    }

    pub fn jet(&self, t: f64, w: C64) -> Result<Jet3> {
        let j = self.func.jet(t, w)?;
        if j.value.is_finite() && j.grad.iter().all(|g| g.is_finite()) && j.hess.iter().flatten().all(|g| g.is_finite()) {
            Ok(j)
        } else {
            Err(DflabError::DomainError(format!("non-finite jet at t = {t}, w = {w}")))
        }
    }

    pub(crate) fn seed_cache(&self) -> &OnceLock<Vec<[f64; 3]>> {
        &self.seeds
    }
}

#[derive(Debug)]
struct Ball;

impl DefiningFunction for Ball {
    fn value(&self, t: f64, w: C64) -> Result<f64> {
        Ok(t + w.norm_sqr() - 1.0)
    }

    fn jet(&self, t: f64, w: C64) -> Result<Jet3> {
        let mut j = Jet3 { value: t + w.norm_sqr() - 1.0, ..Jet3::default() };
        j.grad = [1.0, 2.0 * w.re, 2.0 * w.im];
        j.hess[1][1] = 2.0;
        j.hess[2][2] = 2.0;
        Ok(j)
    }
}

/// The unit ball `t + |w|^2 - 1`.
pub fn make_ball() -> HartogsProfile {
    HartogsProfile::assemble(ProfileKind::Ball, Arc::new(Ball), (0.0, 1.0), None)
}

/// Cutoff terms `l(1/t - 1) + l(t - r^2)` and their t-derivatives.
fn cap_terms(cut: &LambdaCutoff, r: f64, t: f64) -> [f64; 4] {
    let CutoffJet { value: a0, d1: a1, d2: a2, d3: a3 } = cut.jet(1.0 / t - 1.0);
    let CutoffJet { value: b0, d1: b1, d2: b2, d3: b3 } = cut.jet(t - r * r);
    let (p1, p2, p3) = (-1.0 / (t * t), 2.0 / (t * t * t), -6.0 / (t * t * t * t));
    [
        a0 + b0,
        a1 * p1 + b1,
        a2 * p1 * p1 + a1 * p2 + b2,
        a3 * p1 * p1 * p1 + 3.0 * a2 * p1 * p2 + a1 * p3 + b3,
    ]
}

#[derive(Debug)]
struct Worm {
    r: f64,
    twist: f64,
    cut: Arc<LambdaCutoff>,
}

impl Worm {
    /// `phase^(n)(t)` for `phase = exp(i twist log t)`, n = 0..=3.
    fn phase_derivatives(&self, t: f64) -> [C64; 4] {
        let f = C64::from_polar(1.0, self.twist * t.ln());
        let im = C64::new(0.0, self.twist);
        let mut out = [f; 4];
        let mut poly = C64::new(1.0, 0.0);
        for n in 1..4 {
            poly *= im - (n - 1) as f64;
            out[n] = poly * f / t.powi(n as i32);
        }
        out
    }
}

fn require_positive_t(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(DflabError::DomainError(format!("profile requires t > 0, got {t}")))
    }
}

impl DefiningFunction for Worm {
    fn value(&self, t: f64, w: C64) -> Result<f64> {
        require_positive_t(t)?;
        let f = C64::from_polar(1.0, self.twist * t.ln());
        Ok((w + f).norm_sqr() - 1.0 + cap_terms(&self.cut, self.r, t)[0])
    }

    fn jet(&self, t: f64, w: C64) -> Result<Jet3> {
        require_positive_t(t)?;
        let p = self.phase_derivatives(t);
        let cap = cap_terms(&self.cut, self.r, t);
        let (u, v) = (w.re, w.im);
        let pair = |c: C64| 2.0 * (u * c.re + v * c.im);
        let mut j = Jet3 { value: (w + p[0]).norm_sqr() - 1.0 + cap[0], ..Jet3::default() };
        j.grad = [pair(p[1]) + cap[1], 2.0 * (u + p[0].re), 2.0 * (v + p[0].im)];
        j.hess[0][0] = pair(p[2]) + cap[2];
        j.hess[0][1] = 2.0 * p[1].re;
        j.hess[0][2] = 2.0 * p[1].im;
        j.hess[1][1] = 2.0;
        j.hess[2][2] = 2.0;
        j.third[0][0][0] = pair(p[3]) + cap[3];
        j.third[0][0][1] = 2.0 * p[2].re;
        j.third[0][0][2] = 2.0 * p[2].im;
        j.symmetrize();
        Ok(j)
    }
}

#[derive(Debug)]
struct NoTwist {
    r: f64,
    cut: Arc<LambdaCutoff>,
}

impl DefiningFunction for NoTwist {
    fn value(&self, t: f64, w: C64) -> Result<f64> {
        require_positive_t(t)?;
        Ok(w.norm_sqr() - 1.0 + cap_terms(&self.cut, self.r, t)[0])
    }

    fn jet(&self, t: f64, w: C64) -> Result<Jet3> {
        require_positive_t(t)?;
        let cap = cap_terms(&self.cut, self.r, t);
        let mut j = Jet3 { value: w.norm_sqr() - 1.0 + cap[0], ..Jet3::default() };
        j.grad = [cap[1], 2.0 * w.re, 2.0 * w.im];
        j.hess[0][0] = cap[2];
        j.hess[1][1] = 2.0;
        j.hess[2][2] = 2.0;
        j.third[0][0][0] = cap[3];
        Ok(j)
    }
}

fn cap_window(cut: &LambdaCutoff, r: f64) -> (f64, f64) {
    let x1 = cut.inverse(1.0);
    (1.0 / (1.0 + x1), r * r + x1)
}

/// The worm `|w + exp(i log t)|^2 - 1 + l(1/t - 1) + l(t - r^2)`.
pub fn make_worm(params: WormParams, cutoff: LambdaCutoff) -> HartogsProfile {
    make_twisted_worm(params, 1.0, cutoff)
}

/// Worm variant with phase `exp(i * twist * log t)`.
pub fn make_twisted_worm(params: WormParams, twist: f64, cutoff: LambdaCutoff) -> HartogsProfile {
    let r = params.r;
    let window = cap_window(&cutoff, r);
    let kind = ProfileKind::Worm { r, twist, epsilon: cutoff.epsilon(), scale: cutoff.scale() };
    let func = Worm { r, twist, cut: Arc::new(cutoff) };
    HartogsProfile::assemble(kind, Arc::new(func), window, Some((1.0, r * r)))
}

/// The untwisted control `|w|^2 - 1 + l(1/t - 1) + l(t - r^2)`.
pub fn make_no_twist_annulus(params: WormParams, cutoff: LambdaCutoff) -> HartogsProfile {
    let r = params.r;
    let window = cap_window(&cutoff, r);
    let kind = ProfileKind::NoTwist { r, epsilon: cutoff.epsilon(), scale: cutoff.scale() };
    let func = NoTwist { r, cut: Arc::new(cutoff) };
    HartogsProfile::assemble(kind, Arc::new(func), window, Some((1.0, r * r)))
}

/// Value of a radius function and its partials in `(u, v)` to order 3.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RadiusJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub third: [[[f64; 2]; 2]; 2],
}

impl RadiusJet {
    pub fn f_w(&self) -> C64 {
        C64::new(0.5 * self.grad[0], -0.5 * self.grad[1])
    }

    pub fn f_wwbar(&self) -> f64 {
        0.25 * (self.hess[0][0] + self.hess[1][1])
    }
}

type RadiusFn = Arc<dyn Fn(C64) -> f64 + Send + Sync>;

/// Squared boundary radius `f(w)`; the domain is `{ |z|^2 < f(w) }`.
#[derive(Clone)]
pub enum RadiusProfile {
    /// `f = c`.
    Constant(f64),
    /// `f = c - |w|^2`.
    Paraboloid(f64),
    /// `f = exp(a |w|^2)`.
    Gaussian(f64),
    /// Arbitrary smooth positive function, differentiated numerically.
    Custom { label: String, f: RadiusFn },
}

impl fmt::Debug for RadiusProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl RadiusProfile {
    pub fn label(&self) -> String {
        match self {
            RadiusProfile::Constant(c) => format!("constant:{c}"),
            RadiusProfile::Paraboloid(c) => format!("paraboloid:{c}"),
            RadiusProfile::Gaussian(a) => format!("gaussian:{a}"),
            RadiusProfile::Custom { label, .. } => label.clone(),
        }
    }

    /// Parses `constant:c`, `paraboloid:c` or `gaussian:a`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        let num = |default: f64| -> Result<f64> {
            if arg.trim().is_empty() {
                Ok(default)
            } else {
                arg.trim().parse().map_err(|_| DflabError::Config(format!("bad radius argument in {spec:?}")))
            }
        };
        match name.trim() {
            "constant" => Ok(RadiusProfile::Constant(num(1.0)?)),
            "paraboloid" => Ok(RadiusProfile::Paraboloid(num(2.0)?)),
            "gaussian" => Ok(RadiusProfile::Gaussian(num(1.0)?)),
            other => Err(DflabError::Config(format!("unknown radius profile {other:?}"))),
        }
    }

    pub fn value(&self, w: C64) -> f64 {
        match self {
            RadiusProfile::Constant(c) => *c,
            RadiusProfile::Paraboloid(c) => c - w.norm_sqr(),
            RadiusProfile::Gaussian(a) => (a * w.norm_sqr()).exp(),
            RadiusProfile::Custom { f, .. } => f(w),
        }
    }

    pub fn jet(&self, w: C64) -> RadiusJet {
        let (u, v) = (w.re, w.im);
        let mut j = RadiusJet { value: self.value(w), ..RadiusJet::default() };
        match self {
            RadiusProfile::Constant(_) => {}
            RadiusProfile::Paraboloid(_) => {
                j.grad = [-2.0 * u, -2.0 * v];
                j.hess = [[-2.0, 0.0], [0.0, -2.0]];
            }
            RadiusProfile::Gaussian(a) => {
                let f = j.value;
                let (a2, a3) = (a * a, a * a * a);
                j.grad = [2.0 * a * u * f, 2.0 * a * v * f];
                j.hess[0][0] = (2.0 * a + 4.0 * a2 * u * u) * f;
                j.hess[0][1] = 4.0 * a2 * u * v * f;
                j.hess[1][1] = (2.0 * a + 4.0 * a2 * v * v) * f;
                j.third[0][0][0] = (12.0 * a2 * u + 8.0 * a3 * u * u * u) * f;
                j.third[0][0][1] = (4.0 * a2 * v + 8.0 * a3 * u * u * v) * f;
                j.third[0][1][1] = (4.0 * a2 * u + 8.0 * a3 * u * v * v) * f;
                j.third[1][1][1] = (12.0 * a2 * v + 8.0 * a3 * v * v * v) * f;
            }
            RadiusProfile::Custom { f, .. } => {
                // reuse the generic stencil through a t-independent wrapper
                let probe = RadiusAsFunction(f.clone());
                if let Ok(fj) = finite_difference_jet(&probe, 0.0, w) {
                    j.grad = [fj.grad[1], fj.grad[2]];
                    for a in 0..2 {
                        for b in 0..2 {
                            j.hess[a][b] = fj.hess[a + 1][b + 1];
                            for c in 0..2 {
                                j.third[a][b][c] = fj.third[a + 1][b + 1][c + 1];
                            }
                        }
                    }
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                let mut i2 = [a, b];
                i2.sort_unstable();
                j.hess[a][b] = j.hess[i2[0]][i2[1]];
                for c in 0..2 {
                    let mut i3 = [a, b, c];
                    i3.sort_unstable();
                    j.third[a][b][c] = j.third[i3[0]][i3[1]][i3[2]];
                }
            }
        }
        j
    }
}

struct RadiusAsFunction(RadiusFn);

impl fmt::Debug for RadiusAsFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RadiusAsFunction")
    }
}

impl DefiningFunction for RadiusAsFunction {
    fn value(&self, _t: f64, w: C64) -> Result<f64> {
        Ok((self.0)(w))
    }
}

#[derive(Debug)]
struct RadiusDomain {
    f: RadiusProfile,
}

impl DefiningFunction for RadiusDomain {
    fn value(&self, t: f64, w: C64) -> Result<f64> {
        let f = self.f.value(w);
        if !(f > 0.0) {
            return Err(DflabError::DomainError(format!("radius function nonpositive at w = {w}")));
        }
        Ok(t / f - 1.0)
    }

    fn jet(&self, t: f64, w: C64) -> Result<Jet3> {
        let fj = self.f.jet(w);
        let f = fj.value;
        if !(f > 0.0) {
            return Err(DflabError::DomainError(format!("radius function nonpositive at w = {w}")));
        }
        // derivatives of g = 1/f
        let (f2, f3, f4) = (f * f, f * f * f, f * f * f * f);
        let g = 1.0 / f;
        let ga = |a: usize| -fj.grad[a] / f2;
        let gab = |a: usize, b: usize| -fj.hess[a][b] / f2 + 2.0 * fj.grad[a] * fj.grad[b] / f3;
        let gabc = |a: usize, b: usize, c: usize| {
            -fj.third[a][b][c] / f2
                + 2.0 * (fj.hess[a][b] * fj.grad[c] + fj.hess[a][c] * fj.grad[b] + fj.hess[b][c] * fj.grad[a]) / f3
                - 6.0 * fj.grad[a] * fj.grad[b] * fj.grad[c] / f4
        };
        let mut j = Jet3 { value: t * g - 1.0, ..Jet3::default() };
        j.grad = [g, t * ga(0), t * ga(1)];
        for a in 0..2 {
            j.hess[0][a + 1] = ga(a);
            for b in a..2 {
                j.hess[a + 1][b + 1] = t * gab(a, b);
                j.third[0][a + 1][b + 1] = gab(a, b);
                for c in b..2 {
                    j.third[a + 1][b + 1][c + 1] = t * gabc(a, b, c);
                }
            }
        }
        j.symmetrize();
        Ok(j)
    }
}

/// Domain `{ |z|^2 < f(w) }` with defining function `t / f(w) - 1`.
///
/// `t_window` must bound `f` on the closure of the domain.
pub fn profile_from_radius(f: RadiusProfile, t_window: (f64, f64)) -> Result<HartogsProfile> {
    if !(f.value(C64::new(0.0, 0.0)) > 0.0) {
        return Err(DflabError::DomainError("radius function must be positive at w = 0".into()));
    }
    let kind = ProfileKind::Radius { label: f.label() };
    Ok(HartogsProfile::assemble(kind, Arc::new(RadiusDomain { f }), t_window, None))
}
