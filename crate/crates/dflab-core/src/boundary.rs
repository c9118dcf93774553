//! Parametrization of the reduced boundary surface.
//!
//! For fixed `t = |z|^2` the slice `{ w : rho(t, w) < 0 }` is assumed star-shaped
//! about the minimizer of `rho(t, .)`. Boundary points are then
//! `w = center(t) + R(t, theta) e^{i theta}`.

use crate::error::{DflabError, Result};
use crate::profile::HartogsProfile;
use crate::C64;

/// Minimizer of `rho(t, .)` and the minimum value; the slice is nonempty iff
/// the value is negative.
pub fn slice_center(p: &HartogsProfile, t: f64, hint: C64) -> Result<(C64, f64)> {
    let mut w = hint;
    let mut val = p.rho(t, w)?;
    for _ in 0..100 {
        let j = p.jet(t, w)?;
        let g = [j.grad[1], j.grad[2]];
        let (a, b, c) = (j.hess[1][1], j.hess[1][2], j.hess[2][2]);
        let det = a * c - b * b;
        let mut step = if a > 0.0 && det > 0.0 {
            [-(c * g[0] - b * g[1]) / det, -(a * g[1] - b * g[0]) / det]
        } else {
            [-g[0], -g[1]]
        };
        let mut moved = false;
        for _ in 0..60 {
            let cand = w + C64::new(step[0], step[1]);
            if let Ok(v) = p.rho(t, cand) {
                if v <= val {
                    let small = (cand - w).norm() <= 1e-15 * (1.0 + w.norm());
                    w = cand;
                    val = v;
                    moved = !small;
                    break;
                }
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        if !moved {
            break;
        }
    }
    Ok((w, val))
}

/// Distance from `center` to the boundary along direction `theta`.
pub fn slice_radius(p: &HartogsProfile, t: f64, center: C64, theta: f64) -> Result<f64> {
    let dir = C64::from_polar(1.0, theta);
    let f = |r: f64| p.rho(t, center + dir * r);
    if f(0.0)? >= 0.0 {
        return Err(DflabError::DomainError(format!("empty slice at t = {t}")));
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(DflabError::DomainError(format!("unbounded slice at t = {t}")));
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let j = p.jet(t, center + dir * r)?;
        if j.value == 0.0 {
            return Ok(r);
        }
        if j.value < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let slope = j.grad[1] * dir.re + j.grad[2] * dir.im;
        let newton = r - j.value / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - r).abs() <= 2.0 * f64::EPSILON * r.max(1e-300) || hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

/// One nonempty slice of the boundary.
#[derive(Clone, Copy, Debug)]
pub struct Slice {
    pub t: f64,
    pub center: C64,
}

impl Slice {
    pub fn point(&self, p: &HartogsProfile, theta: f64) -> Result<C64> {
        let r = slice_radius(p, self.t, self.center, theta)?;
        Ok(self.center + C64::from_polar(r, theta))
    }
}

/// Nonempty slices at `n` equally spaced values across the t window,
/// endpoints included; slices whose center fails to be interior are dropped.
pub fn slices(p: &HartogsProfile, n: usize) -> Vec<Slice> {
    let (lo, hi) = p.t_window();
    let mut out = Vec::with_capacity(n);
    let mut hint = C64::new(0.0, 0.0);
    for i in 0..n {
        let t = lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64;
        if let Ok((c, v)) = slice_center(p, t, hint) {
            if v < 0.0 {
                out.push(Slice { t, center: c });
                hint = c;
            }
        }
    }
    out
}

/// Coarse boundary sample in reduced coordinates `(|z|, Re w, Im w)`, cached.
pub(crate) fn seed_points(p: &HartogsProfile) -> &Vec<[f64; 3]> {
    p.seed_cache().get_or_init(|| {
        let (lo, hi) = p.t_window();
        let nt = 40;
        let nth = 32;
        let mut pts = Vec::new();
        let mut hint = C64::new(0.0, 0.0);
        // cell centers plus points hugging both ends of the window
        let mut ts: Vec<f64> = (0..nt).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / nt as f64).collect();
        for f in [1e-4, 1e-3, 4e-3] {
            ts.push(lo + (hi - lo) * f);
            ts.push(hi - (hi - lo) * f);
        }
        if lo == 0.0 {
            ts.push(0.0);
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for t in ts {
            let Ok((c, v)) = slice_center(p, t, hint) else { continue };
            if v >= 0.0 {
                continue;
            }
            hint = c;
            for k in 0..nth {
                let th = std::f64::consts::TAU * k as f64 / nth as f64;
                if let Ok(r) = slice_radius(p, t, c, th) {
                    let w = c + C64::from_polar(r, th);
                    pts.push([t.sqrt(), w.re, w.im]);
                }
            }
        }
        pts
    })
}
