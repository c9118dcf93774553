//! Detection and classification of weakly pseudoconvex boundary pieces.
//!
//! The reduced boundary is sampled on a `(t, theta)` grid. A sample is weak
//! when its Levi eigenvalue is below `1e-7` times the local Hessian norm, and
//! belongs to the flat part `M1` when additionally `|d_z| < 1e-8`. Weak samples
//! are merged into components by adjacency in both grid directions.

use crate::boundary::{slice_center, slice_radius, slices, Slice};
use crate::complex::ComplexJet2;
use crate::distance::AmbientPoint;
use crate::error::{DflabError, Result};
use crate::profile::HartogsProfile;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

pub const LEVI_REL_TOL: f64 = 1e-7;
pub const M1_TOL: f64 = 1e-8;
pub const MIN_RESOLUTION: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    DiskLike,
    AnnulusLike,
    M2Type,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakSample {
    pub t: f64,
    pub theta: f64,
    pub w: C64,
    pub levi: f64,
    pub levi_tol: f64,
    pub dz_abs: f64,
    pub d_zzbar: f64,
    pub kappa: f64,
    pub m1: bool,
    pub slice: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakComponent {
    pub kind: ComponentKind,
    pub w_anchor: C64,
    pub t_range: (f64, f64),
    /// `d_z` and `d_zzbar` vanish (to tolerance) on every sample.
    pub flat: bool,
    pub radially_closed: bool,
    pub samples: Vec<WeakSample>,
}

/// Minimum-Levi sample of one slice, for plotting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: f64,
    pub levi: f64,
    pub dz_abs: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClassification {
    pub components: Vec<WeakComponent>,
    pub strongly_pseudoconvex_fraction: f64,
    pub is_regular: bool,
    pub resolution: usize,
    pub grid_samples: usize,
    pub curve: Vec<CurveRow>,
}

impl BoundaryClassification {
    pub fn annuli(&self) -> impl Iterator<Item = &WeakComponent> {
        self.components.iter().filter(|c| c.kind == ComponentKind::AnnulusLike)
    }

    pub fn weak_sample_count(&self) -> usize {
        self.components.iter().map(|c| c.samples.len()).sum()
    }
}

struct Probe {
    levi: f64,
    tol: f64,
    jet: ComplexJet2,
    w: C64,
}

fn probe(p: &HartogsProfile, t: f64, center: C64, theta: f64) -> Result<Probe> {
    let r = slice_radius(p, t, center, theta)?;
    let w = center + C64::from_polar(r, theta);
    let foot = AmbientPoint::new(C64::new(t.sqrt(), 0.0), w);
    let hb = crate::distance::boundary_real_hessian(p, &foot)?;
    let n = crate::distance::unit_normal(p, &foot)?;
    let jet = crate::complex::wirtinger_from_real(&hb, n);
    let norm = hb.h.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    Ok(Probe { levi: jet.levi_eigenvalue(), tol: LEVI_REL_TOL * norm + 1e-14, jet, w })
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of `rho_t` along the slice near `theta`, when it changes sign in
/// `[theta - half, theta + half]`.
fn polish_flat_point(p: &HartogsProfile, t: f64, center: C64, theta: f64, half: f64) -> Option<f64> {
    let f = |th: f64| -> Option<f64> {
        let r = slice_radius(p, t, center, th).ok()?;
        p.jet(t, center + C64::from_polar(r, th)).ok().map(|j| j.grad[0])
    };
    let (mut a, mut b) = (theta - half, theta + half);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Some(a);
    }
    if fa * fb > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Some(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

fn sample_from(p: &Probe, t: f64, theta: f64, slice: usize) -> WeakSample {
    let dz = p.jet.d_z.norm();
    WeakSample {
        t,
        theta: theta.rem_euclid(TAU),
        w: p.w,
        levi: p.levi,
        levi_tol: p.tol,
        dz_abs: dz,
        d_zzbar: p.jet.d_zzbar.re,
        kappa: t.sqrt() * p.jet.d_zwbar.norm(),
        m1: dz < M1_TOL,
        slice,
    }
}

struct SliceScan {
    weak: Vec<WeakSample>,
    strong: usize,
    total: usize,
    curve: Option<CurveRow>,
    radius_max: f64,
}

fn scan_slice(p: &HartogsProfile, s: &Slice, index: usize, n: usize) -> Result<SliceScan> {
    let dth = TAU / n as f64;
    let probes: Vec<Probe> = (0..n).map(|k| probe(p, s.t, s.center, k as f64 * dth)).collect::<Result<_>>()?;
    let mut weak = Vec::new();
    let mut strong = 0;
    let mut radius_max = 0.0f64;
    for (k, pr) in probes.iter().enumerate() {
        radius_max = radius_max.max((pr.w - s.center).norm());
        if pr.levi <= pr.tol {
            weak.push(refine_weak(p, s, index, k as f64 * dth, dth, pr));
        } else {
            strong += 1;
        }
    }
    // local minima between grid points
    for k in 0..n {
        let (prev, next) = (&probes[(k + n - 1) % n], &probes[(k + 1) % n]);
        let here = &probes[k];
        let isolated = here.levi > here.tol && prev.levi > prev.tol && next.levi > next.tol;
        if !(isolated && here.levi <= prev.levi && here.levi <= next.levi && here.levi < 0.05 * (here.tol / LEVI_REL_TOL)) {
            continue;
        }
        let th0 = k as f64 * dth;
        let (th, _) = golden_min(
            |th| probe(p, s.t, s.center, th).map(|q| q.levi).unwrap_or(f64::INFINITY),
            th0 - dth,
            th0 + dth,
            80,
        );
        let pr = probe(p, s.t, s.center, th)?;
        if pr.levi <= pr.tol {
            weak.push(refine_weak(p, s, index, th, dth, &pr));
        }
    }
    weak.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
    weak.dedup_by(|a, b| (a.theta - b.theta).abs() < 1e-12);
    let curve = probes
        .iter()
        .min_by(|a, b| a.levi.partial_cmp(&b.levi).unwrap())
        .map(|m| CurveRow { t: s.t, levi: m.levi, dz_abs: m.jet.d_z.norm(), kappa: s.t.sqrt() * m.jet.d_zwbar.norm() });
    Ok(SliceScan { weak, strong, total: n, curve, radius_max })
}

/// Moves a weak sample onto the nearby zero of `rho_t` when `d_z` is small but
/// not exactly zero.
fn refine_weak(p: &HartogsProfile, s: &Slice, index: usize, theta: f64, dth: f64, pr: &Probe) -> WeakSample {
    let base = sample_from(pr, s.t, theta, index);
    if base.dz_abs <= 1e-14 || base.dz_abs > 1e-3 {
        return base;
    }
    if let Some(th) = polish_flat_point(p, s.t, s.center, theta, 0.5 * dth) {
        if let Ok(q) = probe(p, s.t, s.center, th) {
            if q.levi <= q.tol {
                return sample_from(&q, s.t, th, index);
            }
        }
    }
    base
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = i;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn reduced_distance(a: &WeakSample, b: &WeakSample) -> f64 {
    ((a.t.sqrt() - b.t.sqrt()).powi(2) + (a.w - b.w).norm_sqr()).sqrt()
}

/// Samples the boundary on `resolution` slices by `resolution` angles and
/// assembles the weak set into typed components.
pub fn classify_weak_set(p: &HartogsProfile, resolution: usize) -> Result<BoundaryClassification> {
    if resolution < MIN_RESOLUTION {
        return Err(DflabError::Config(format!("resolution must be at least {MIN_RESOLUTION}, got {resolution}")));
    }
    let sl = slices(p, resolution);
    if sl.is_empty() {
        return Err(DflabError::DomainError("no nonempty boundary slice in the t window".into()));
    }
    let scans: Vec<SliceScan> =
        sl.par_iter().enumerate().map(|(i, s)| scan_slice(p, s, i, resolution)).collect::<Result<_>>()?;
    let dth = TAU / resolution as f64;
    let total: usize = scans.iter().map(|s| s.total).sum();
    let strong: usize = scans.iter().map(|s| s.strong).sum();
    let curve: Vec<CurveRow> = scans.iter().filter_map(|s| s.curve).collect();

    let mut all: Vec<WeakSample> = Vec::new();
    let mut offsets = Vec::with_capacity(scans.len() + 1);
    for s in &scans {
        offsets.push(all.len());
        all.extend(s.weak.iter().copied());
    }
    offsets.push(all.len());

    let mut uf = UnionFind((0..all.len()).collect());
    let mut mixed_link = None;
    let mut link = |uf: &mut UnionFind, a: usize, b: usize, all: &[WeakSample]| {
        if all[a].m1 != all[b].m1 && mixed_link.is_none() {
            mixed_link = Some((a, b));
        }
        uf.union(a, b);
    };
    for i in 0..scans.len() {
        let (lo, hi) = (offsets[i], offsets[i + 1]);
        let m = hi - lo;
        for k in 0..m {
            let (a, b) = (lo + k, lo + (k + 1) % m);
            if a != b && angular_gap(all[a].theta, all[b].theta) <= 1.5 * dth {
                link(&mut uf, a, b, &all);
            }
        }
        if i + 1 < scans.len() {
            let (nlo, nhi) = (offsets[i + 1], offsets[i + 2]);
            let step = (sl[i + 1].t.sqrt() - sl[i].t.sqrt()).abs() + (sl[i + 1].center - sl[i].center).norm();
            let h = step.max(scans[i].radius_max * dth).max(scans[i + 1].radius_max * dth);
            for a in lo..hi {
                for b in nlo..nhi {
                    if reduced_distance(&all[a], &all[b]) <= 2.5 * h {
                        link(&mut uf, a, b, &all);
                    }
                }
            }
        }
    }
    if let Some((a, b)) = mixed_link {
        return Err(DflabError::IrregularConfiguration(format!(
            "flat sample at t = {:.6} adjacent to non-flat weak sample at t = {:.6}",
            all[a].t, all[b].t
        )));
    }

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..all.len() {
        let r = uf.find(i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }

    let mut components = Vec::new();
    for (_, idx) in groups {
        let samples: Vec<WeakSample> = idx.iter().map(|&i| all[i]).collect();
        components.push(assemble_component(p, &sl, samples, dth)?);
    }
    components.sort_by(|a, b| a.t_range.0.partial_cmp(&b.t_range.0).unwrap());
    let is_regular = components.iter().all(|c| c.kind != ComponentKind::DiskLike || c.radially_closed);
    Ok(BoundaryClassification {
        components,
        strongly_pseudoconvex_fraction: strong as f64 / total as f64,
        is_regular,
        resolution,
        grid_samples: total,
        curve,
    })
}

fn assemble_component(p: &HartogsProfile, sl: &[Slice], samples: Vec<WeakSample>, dth: f64) -> Result<WeakComponent> {
    let m1 = samples[0].m1;
    let touches_axis = samples.iter().any(|s| s.t == 0.0);
    let kind = match (m1, touches_axis) {
        (false, _) => ComponentKind::M2Type,
        (true, true) => ComponentKind::DiskLike,
        (true, false) => ComponentKind::AnnulusLike,
    };
    let mut idx: Vec<usize> = samples.iter().map(|s| s.slice).collect();
    idx.sort_unstable();
    idx.dedup();
    let contiguous = idx.windows(2).all(|w| w[1] == w[0] + 1);
    let radially_closed = kind == ComponentKind::DiskLike && idx[0] == 0 && contiguous;
    let flat = m1 && samples.iter().all(|s| s.d_zzbar.abs() <= s.levi_tol);

    let lowest = *samples.iter().min_by(|a, b| a.t.partial_cmp(&b.t).unwrap()).unwrap();
    let highest = *samples.iter().max_by(|a, b| a.t.partial_cmp(&b.t).unwrap()).unwrap();
    let (t_lo, t_hi) = p.t_window();
    let lo_t = if kind == ComponentKind::DiskLike {
        lowest.t
    } else if lowest.slice == 0 {
        refine_edge(p, t_lo, sl[0].center, lowest, dth)
    } else {
        let s = &sl[lowest.slice - 1];
        refine_edge(p, s.t, s.center, lowest, dth)
    };
    let hi_t = match sl.get(highest.slice + 1) {
        Some(s) => refine_edge(p, s.t, s.center, highest, dth),
        None => refine_edge(p, t_hi, sl[sl.len() - 1].center, highest, dth),
    };

    let mut ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ts[ts.len() / 2];
    let anchor = samples
        .iter()
        .min_by(|a, b| {
            let ka = ((a.t - median).abs(), a.dz_abs);
            let kb = ((b.t - median).abs(), b.dz_abs);
            ka.partial_cmp(&kb).unwrap()
        })
        .unwrap()
        .w;
    Ok(WeakComponent { kind, w_anchor: anchor, t_range: (lo_t, hi_t), flat, radially_closed, samples })
}

/// Bisects in `t` between a weak sample and an outer `t` (neighboring slice or
/// window end) for the edge of the weak set, tracking the sample's direction
/// from the center.
fn refine_edge(p: &HartogsProfile, outside_t: f64, hint: C64, inside: WeakSample, dth: f64) -> f64 {
    if outside_t == inside.t {
        return inside.t;
    }
    let weak_at = |t: f64| -> bool {
        let Ok((c, v)) = slice_center(p, t, hint) else { return false };
        if v >= 0.0 {
            return false;
        }
        let th = (inside.w - c).arg();
        let (_, levi_min) = golden_min(
            |x| probe(p, t, c, x).map(|q| q.levi - q.tol).unwrap_or(f64::INFINITY),
            th - 2.0 * dth,
            th + 2.0 * dth,
            60,
        );
        levi_min <= 0.0
    };
    let (mut a, mut b) = (inside.t, outside_t);
    if weak_at(b) {
        return b;
    }
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if weak_at(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// CSV rows `t, levi, dz_abs, kappa` along the minimum-Levi curve.
pub fn write_curve_csv<W: Write>(c: &BoundaryClassification, out: &mut W) -> Result<()> {
    writeln!(out, "t,levi,dz_abs,kappa")?;
    for r in &c.curve {
        writeln!(out, "{:.12},{:.6e},{:.6e},{:.12}", r.t, r.levi, r.dz_abs, r.kappa)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::build_lambda;
    use crate::profile::{make_ball, make_no_twist_annulus, make_worm, WormParams};

    #[test]
    fn ball_has_no_weak_points() {
        let c = classify_weak_set(&make_ball(), 64).unwrap();
        assert!(c.components.is_empty());
        assert_eq!(c.strongly_pseudoconvex_fraction, 1.0);
        assert!(c.is_regular);
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(matches!(classify_weak_set(&make_ball(), 32), Err(DflabError::Config(_))));
    }

    #[test]
    fn worm_has_one_annulus() {
        let w = make_worm(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&w, 64).unwrap();
        assert_eq!(c.components.len(), 1, "{:?}", c.components.iter().map(|k| (k.kind, k.t_range)).collect::<Vec<_>>());
        let a = &c.components[0];
        assert_eq!(a.kind, ComponentKind::AnnulusLike);
        assert!(a.flat);
        assert!(a.w_anchor.norm() < 1e-10, "{}", a.w_anchor);
        assert!((a.t_range.0 - 1.0).abs() < 2.0 / 64.0 && (a.t_range.1 - 4.0).abs() < 2.0 / 64.0, "{:?}", a.t_range);
    }

    #[test]
    fn no_twist_band() {
        let p = make_no_twist_annulus(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let c = classify_weak_set(&p, 64).unwrap();
        assert_eq!(c.components.len(), 1);
        let a = &c.components[0];
        assert_eq!(a.kind, ComponentKind::AnnulusLike);
        assert!((a.w_anchor.norm() - 1.0).abs() < 1e-12);
        assert!((a.t_range.0 - 1.0).abs() < 2.0 / 64.0 && (a.t_range.1 - 4.0).abs() < 2.0 / 64.0, "{:?}", a.t_range);
    }
}
