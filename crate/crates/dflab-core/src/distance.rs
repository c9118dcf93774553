//! Closest-point projection, signed distance, and its real Hessian.
//!
//! Hartogs symmetry reduces the projection to the surface
//! `{ rho(R^2, U + iV) = 0 }` in `(R, U, V)` space; the foot is lifted back by
//! reusing the phase of `z`.

use crate::boundary::seed_points;
use crate::error::{DflabError, Result};
use crate::profile::{ambient_gradient, ambient_hessian, HartogsProfile};
use crate::C64;
use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub z: C64,
    pub w: C64,
}

impl AmbientPoint {
    pub fn new(z: C64, w: C64) -> Self {
        AmbientPoint { z, w }
    }

    /// Real coordinates `(x, y, u, v)`.
    pub fn coords(&self) -> [f64; 4] {
        [self.z.re, self.z.im, self.w.re, self.w.im]
    }

    pub fn from_coords(c: [f64; 4]) -> Self {
        AmbientPoint { z: C64::new(c[0], c[1]), w: C64::new(c[2], c[3]) }
    }

    pub fn t(&self) -> f64 {
        self.z.norm_sqr()
    }

    pub fn reduced(&self) -> ReducedPoint {
        ReducedPoint { r: self.z.norm(), u: self.w.re, v: self.w.im }
    }

    pub fn offset(&self, dir: [f64; 4], s: f64) -> Self {
        let c = self.coords();
        Self::from_coords([c[0] + s * dir[0], c[1] + s * dir[1], c[2] + s * dir[2], c[3] + s * dir[3]])
    }
}

/// An orbit of the circle action: `(|z|, Re w, Im w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub r: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub foot: AmbientPoint,
    pub sdist: f64,
    pub grad: [f64; 4],
    pub converged: bool,
    pub iterations: usize,
}

/// Symmetric real Hessian in `(x, y, u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealHessian4 {
    pub h: [[f64; 4]; 4],
}

impl RealHessian4 {
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut h = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                h[i][j] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        RealHessian4 { h }
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.h[i][j])
    }

    pub fn max_abs(&self) -> f64 {
        self.h.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &RealHessian4) -> f64 {
        let mut m = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.h[i][j] - other.h[i][j]).abs());
            }
        }
        m
    }

    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += self.h[i][j] * v[j];
            }
        }
        out
    }
}

pub const PROJECTION_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 100;
const SEED_COUNT: usize = 8;

struct Reduced<'a> {
    p: &'a HartogsProfile,
}

impl Reduced<'_> {
    /// `G(R, U, V) = rho(R^2, U + iV)` with gradient and Hessian.
    fn eval(&self, y: [f64; 3]) -> Result<(f64, [f64; 3], [[f64; 3]; 3])> {
        let r = y[0];
        let j = self.p.jet(r * r, C64::new(y[1], y[2]))?;
        let g = [2.0 * r * j.grad[0], j.grad[1], j.grad[2]];
        let mut h = [[0.0; 3]; 3];
        h[0][0] = 2.0 * j.grad[0] + 4.0 * r * r * j.hess[0][0];
        h[0][1] = 2.0 * r * j.hess[0][1];
        h[0][2] = 2.0 * r * j.hess[0][2];
        h[1][1] = j.hess[1][1];
        h[1][2] = j.hess[1][2];
        h[2][2] = j.hess[2][2];
        h[1][0] = h[0][1];
        h[2][0] = h[0][2];
        h[2][1] = h[1][2];
        Ok((j.value, g, h))
    }

    /// Newton on `p - q + mu grad G(p) = 0, G(p) = 0` from `start`.
    fn lagrange_newton(&self, q: [f64; 3], start: [f64; 3]) -> Option<([f64; 3], usize)> {
        let mut y = start;
        // land on the surface first with a few normal steps
        for _ in 0..30 {
            let (g, dg, _) = self.eval(y).ok()?;
            let n2 = dot3(dg, dg);
            if n2 == 0.0 || !g.is_finite() {
                return None;
            }
            let s = g / n2;
            y = [y[0] - s * dg[0], y[1] - s * dg[1], y[2] - s * dg[2]];
            if (s * n2.sqrt()).abs() < 1e-14 {
                break;
            }
        }
        let (_, dg, _) = self.eval(y).ok()?;
        let d = sub3(q, y);
        let mut mu = -dot3(d, dg) / dot3(dg, dg);
        let scale = 1.0 + norm3(q);
        let residual = |y: [f64; 3], mu: f64| -> Option<(f64, [f64; 4], [[f64; 3]; 3], [f64; 3])> {
            let (g, dg, hg) = self.eval(y).ok()?;
            let f = [y[0] - q[0] + mu * dg[0], y[1] - q[1] + mu * dg[1], y[2] - q[2] + mu * dg[2], g];
            let nf = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2] + (f[3] / norm3(dg)).powi(2)).sqrt();
            nf.is_finite().then_some((nf, f, hg, dg))
        };
        let (mut nf, mut f, mut hg, mut dg) = residual(y, mu)?;
        for it in 0..MAX_NEWTON {
            let mut jac = Matrix4::<f64>::zeros();
            for i in 0..3 {
                for k in 0..3 {
                    jac[(i, k)] = if i == k { 1.0 } else { 0.0 } + mu * hg[i][k];
                }
                jac[(i, 3)] = dg[i];
                jac[(3, i)] = dg[i];
            }
            let rhs = Vector4::new(-f[0], -f[1], -f[2], -f[3]);
            let step = jac.lu().solve(&rhs)?;
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let yn = [y[0] + lam * step[0], y[1] + lam * step[1], y[2] + lam * step[2]];
                let mun = mu + lam * step[3];
                if let Some((nfn, fn_, hgn, dgn)) = residual(yn, mun) {
                    if nfn < nf || nfn <= 1e-15 * scale {
                        y = yn;
                        mu = mun;
                        nf = nfn;
                        f = fn_;
                        hg = hgn;
                        dg = dgn;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            let tiny = step.norm() <= 4.0 * f64::EPSILON * scale;
            if nf <= PROJECTION_TOL * scale && (tiny || !accepted || nf <= 1e-15 * scale) {
                return Some((y, it + 1));
            }
            if !accepted {
                return (nf <= PROJECTION_TOL * scale).then_some((y, it + 1));
            }
        }
        (nf <= PROJECTION_TOL * scale).then_some((y, MAX_NEWTON))
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn norm4(a: [f64; 4]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unit outward normal `grad rho / |grad rho|` at an ambient point.
pub fn unit_normal(p: &HartogsProfile, x: &AmbientPoint) -> Result<[f64; 4]> {
    let j = p.jet(x.t(), x.w)?;
    let g = ambient_gradient(&j, x.z);
    let n = norm4(g);
    if n < 1e-10 {
        return Err(DflabError::DegenerateGradient(n));
    }
    Ok([g[0] / n, g[1] / n, g[2] / n, g[3] / n])
}

/// Closest boundary point, signed distance and unit gradient of the distance.
pub fn project_to_boundary(p: &HartogsProfile, x: &AmbientPoint) -> Result<ProjectionResult> {
    let collar = p.collar_halfwidth();
    let rho = p.rho(x.t(), x.w)?;
    let j = p.jet(x.t(), x.w)?;
    let gn = norm4(ambient_gradient(&j, x.z));
    let estimate = if gn > 0.0 { rho.abs() / gn } else { f64::INFINITY };
    if estimate > 1.5 * collar {
        return Err(DflabError::OutsideCollar { estimate, halfwidth: collar });
    }
    let red = x.reduced();
    let q = [red.r, red.u, red.v];
    let solver = Reduced { p };

    let mut starts = vec![q];
    let seeds = seed_points(p);
    let mut near: Vec<(f64, usize)> = seeds.iter().enumerate().map(|(i, s)| (norm3(sub3(*s, q)), i)).collect();
    let k = SEED_COUNT.min(near.len());
    if k > 0 {
        near.select_nth_unstable_by(k - 1, |a, b| a.0.partial_cmp(&b.0).unwrap());
        near.truncate(k);
        near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        starts.extend(near.iter().map(|&(_, i)| seeds[i]));
    }

    let mut best: Option<([f64; 3], f64, usize)> = None;
    let mut total_iters = 0;
    for s in starts {
        if let Some((mut y, its)) = solver.lagrange_newton(q, s) {
            total_iters += its;
            y[0] = y[0].abs();
            let d = norm3(sub3(q, y));
            if best.is_none_or(|b| d < b.1) {
                best = Some((y, d, its));
            }
        }
    }
    let Some((y, dist, _)) = best else {
        return Err(DflabError::ProjectionDiverged(format!("no seed converged for {x:?}")));
    };
    let phase = if x.z.norm() > 0.0 { x.z / x.z.norm() } else { C64::new(1.0, 0.0) };
    let foot = AmbientPoint::new(phase * y[0], C64::new(y[1], y[2]));
    let sdist = if rho > 0.0 {
        dist
    } else if rho < 0.0 {
        -dist
    } else {
        0.0
    };
    if sdist.abs() > collar * (1.0 + 1e-9) {
        return Err(DflabError::OutsideCollar { estimate: sdist.abs(), halfwidth: collar });
    }
    let grad = if sdist.abs() > 1e-7 {
        let xc = x.coords();
        let fc = foot.coords();
        let g = [(xc[0] - fc[0]) / sdist, (xc[1] - fc[1]) / sdist, (xc[2] - fc[2]) / sdist, (xc[3] - fc[3]) / sdist];
        let n = norm4(g);
        [g[0] / n, g[1] / n, g[2] / n, g[3] / n]
    } else {
        unit_normal(p, &foot)?
    };
    Ok(ProjectionResult { foot, sdist, grad, converged: true, iterations: total_iters })
}

pub fn signed_distance(p: &HartogsProfile, x: &AmbientPoint) -> Result<f64> {
    Ok(project_to_boundary(p, x)?.sdist)
}

/// Hessian of the signed distance at a boundary point: the Weingarten map
/// `P Hess(rho) P / |grad rho|` with `P` the tangential projector.
pub fn boundary_real_hessian(p: &HartogsProfile, foot: &AmbientPoint) -> Result<RealHessian4> {
    let j = p.jet(foot.t(), foot.w)?;
    if j.value.abs() > 1e-10 {
        return Err(DflabError::DomainError(format!("point is off the boundary (rho = {:.3e})", j.value)));
    }
    let g = ambient_gradient(&j, foot.z);
    let gn = norm4(g);
    if gn < 1e-10 {
        return Err(DflabError::DegenerateGradient(gn));
    }
    let n = Vector4::new(g[0] / gn, g[1] / gn, g[2] / gn, g[3] / gn);
    let proj = Matrix4::identity() - n * n.transpose();
    let hr = ambient_hessian(&j, foot.z);
    let hm = Matrix4::from_fn(|i, k| hr[i][k]);
    Ok(RealHessian4::from_matrix(&(proj * hm * proj / gn)))
}

/// `H_b (I + s H_b)^{-1}`, the Hessian transported a signed distance `s` along the normal.
pub fn transport_hessian(hb: &RealHessian4, sdist: f64) -> Result<RealHessian4> {
    let m = hb.matrix();
    let a = Matrix4::identity() + m * sdist;
    let eig = SymmetricEigen::new(a);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for e in eig.eigenvalues.iter() {
        lo = lo.min(e.abs());
        hi = hi.max(e.abs());
    }
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(DflabError::SingularTransport(cond));
    }
    let inv = a.try_inverse().ok_or(DflabError::SingularTransport(cond))?;
    Ok(RealHessian4::from_matrix(&(m * inv)))
}

/// Projection and both Hessians at a collar point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceJet {
    pub projection: ProjectionResult,
    pub boundary_hessian: RealHessian4,
    pub hessian: RealHessian4,
}

pub fn distance_jet(p: &HartogsProfile, x: &AmbientPoint) -> Result<DistanceJet> {
    let projection = project_to_boundary(p, x)?;
    let boundary_hessian = boundary_real_hessian(p, &projection.foot)?;
    let hessian = transport_hessian(&boundary_hessian, projection.sdist)?;
    Ok(DistanceJet { projection, boundary_hessian, hessian })
}

pub fn interior_real_hessian(p: &HartogsProfile, x: &AmbientPoint) -> Result<RealHessian4> {
    Ok(distance_jet(p, x)?.hessian)
}

/// Richardson-extrapolated second differences of the signed distance.
///
/// Starts at `h = min(1e-4, 0.01 / curvature)` and halves down to `h / 64`,
/// returning the level whose estimate moved least from the previous one. The
/// Hessian can vary on very short scales where a cutoff switches on.
pub fn fd_real_hessian(p: &HartogsProfile, x: &AmbientPoint) -> Result<RealHessian4> {
    let k = max_curvature(p, &project_to_boundary(p, x)?.foot)?;
    let f0 = signed_distance(p, x)?;
    let at = |h: f64| -> Result<[[f64; 4]; 4]> {
        let f = |d: [f64; 4]| signed_distance(p, &x.offset(d, 1.0));
        let e = |i: usize, s: f64| {
            let mut d = [0.0; 4];
            d[i] = s;
            d
        };
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = (f(e(i, h))? - 2.0 * f0 + f(e(i, -h))?) / (h * h);
            for j in 0..i {
                let pp = f(add4(e(i, h), e(j, h)))?;
                let pm = f(add4(e(i, h), e(j, -h)))?;
                let mp = f(add4(e(i, -h), e(j, h)))?;
                let mm = f(add4(e(i, -h), e(j, -h)))?;
                m[i][j] = (pp - pm - mp + mm) / (4.0 * h * h);
                m[j][i] = m[i][j];
            }
        }
        Ok(m)
    };
    let mut h = (1e-4f64).min(0.01 / k.max(1e-300));
    let mut coarse = at(h)?;
    let mut prev: Option<RealHessian4> = None;
    let mut best: Option<(f64, RealHessian4)> = None;
    for _ in 0..6 {
        h *= 0.5;
        let fine = at(h)?;
        let mut r = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
            }
        }
        let r = RealHessian4 { h: r };
        if let Some(q) = &prev {
            let moved = r.max_diff(q);
            if best.as_ref().is_none_or(|(m, _)| moved < *m) {
                best = Some((moved, *q));
            }
        }
        prev = Some(r);
        coarse = fine;
    }
    Ok(best.expect("at least two levels").1)
}

fn add4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Writes `x, y, u, v, sdist, eikonal_defect, hessian_residual` rows, where the
/// residual is the transport-vs-difference Hessian mismatch.
pub fn write_distance_diagnostics<W: Write>(p: &HartogsProfile, points: &[AmbientPoint], out: &mut W) -> Result<()> {
    writeln!(out, "x,y,u,v,sdist,eikonal_defect,hessian_residual")?;
    for x in points {
        let jet = distance_jet(p, x)?;
        let fd = fd_real_hessian(p, x)?;
        let c = x.coords();
        writeln!(
            out,
            "{},{},{},{},{:.17e},{:.3e},{:.3e}",
            c[0],
            c[1],
            c[2],
            c[3],
            jet.projection.sdist,
            norm4(jet.projection.grad) - 1.0,
            jet.hessian.max_diff(&fd)
        )?;
    }
    Ok(())
}

/// Largest principal curvature magnitude at a boundary point.
pub fn max_curvature(p: &HartogsProfile, foot: &AmbientPoint) -> Result<f64> {
    let hb = boundary_real_hessian(p, foot)?;
    let eig = SymmetricEigen::new(hb.matrix());
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs())))
}

/// Random points at signed depth within the collar, seeded and reproducible.
///
/// Feet are drawn uniformly in `(t, theta)` over the boundary parametrization;
/// depths are log-uniform in `[d_min, d_max]` capped at `reach_fraction` of the
/// local radius of curvature, with random side and random phase of `z`.
pub fn random_collar_points(
    p: &HartogsProfile,
    n: usize,
    seed: u64,
    d_min: f64,
    d_max: f64,
    reach_fraction: f64,
) -> Vec<AmbientPoint> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = p.t_window();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 50 * n {
        attempts += 1;
        let t = lo + (hi - lo) * rng.random::<f64>();
        let th = std::f64::consts::TAU * rng.random::<f64>();
        let Ok((c, v)) = crate::boundary::slice_center(p, t, C64::new(0.0, 0.0)) else { continue };
        if v >= 0.0 {
            continue;
        }
        let Ok(r) = crate::boundary::slice_radius(p, t, c, th) else { continue };
        let phase = C64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
        let foot = AmbientPoint::new(phase * t.sqrt(), c + C64::from_polar(r, th));
        let (Ok(k), Ok(n4)) = (max_curvature(p, &foot), unit_normal(p, &foot)) else { continue };
        let cap = if k > 0.0 { reach_fraction / k } else { f64::INFINITY };
        let top = d_max.min(cap).min(p.collar_halfwidth());
        if top < d_min {
            continue;
        }
        let d = (d_min.ln() + (top.ln() - d_min.ln()) * rng.random::<f64>()).exp();
        let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out.push(foot.offset(n4, side * d));
    }
    out
}
