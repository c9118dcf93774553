//! Wirtinger form of the signed-distance Hessian and the Levi form.

use crate::distance::{distance_jet, AmbientPoint, DistanceJet, RealHessian4};
use crate::error::{DflabError, Result};
use crate::profile::{HartogsProfile, RadiusProfile};
use crate::C64;
use serde::{Deserialize, Serialize};

/// First and second Wirtinger derivatives of the signed distance at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexJet2 {
    pub d_z: C64,
    pub d_w: C64,
    pub d_zzbar: C64,
    pub d_zwbar: C64,
    pub d_wwbar: C64,
    pub d_zz: C64,
    pub d_zw: C64,
    pub d_ww: C64,
}

impl ComplexJet2 {
    pub fn first(&self) -> [C64; 2] {
        [self.d_z, self.d_w]
    }

    /// `H[j][k] = d^2 / dz_j dzbar_k`.
    pub fn hermitian(&self) -> [[C64; 2]; 2] {
        [[self.d_zzbar, self.d_zwbar], [self.d_zwbar.conj(), self.d_wwbar]]
    }

    /// `P[j][k] = d^2 / dz_j dz_k`.
    pub fn pure(&self) -> [[C64; 2]; 2] {
        [[self.d_zz, self.d_zw], [self.d_zw, self.d_ww]]
    }

    fn from_parts(first: [C64; 2], herm: [[C64; 2]; 2], pure: [[C64; 2]; 2]) -> Self {
        ComplexJet2 {
            d_z: first[0],
            d_w: first[1],
            d_zzbar: herm[0][0],
            d_zwbar: herm[0][1],
            d_wwbar: herm[1][1],
            d_zz: pure[0][0],
            d_zw: pure[0][1],
            d_ww: pure[1][1],
        }
    }

    /// Unit vector spanning the complex tangent line `t_1 d_z + t_2 d_w = 0`.
    pub fn unit_tangent(&self) -> [C64; 2] {
        let n = (self.d_z.norm_sqr() + self.d_w.norm_sqr()).sqrt();
        if n == 0.0 {
            return [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        }
        [self.d_w / n, -self.d_z / n]
    }

    /// Levi form on the unit complex tangent vector.
    pub fn levi_eigenvalue(&self) -> f64 {
        let t = self.unit_tangent();
        hermitian_form(&self.hermitian(), t)
    }
}

fn hermitian_form(h: &[[C64; 2]; 2], t: [C64; 2]) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            s += h[j][k] * t[j] * t[k].conj();
        }
    }
    s.re
}

/// Assembles Wirtinger derivatives from the real Hessian and gradient in `(x, y, u, v)`.
pub fn wirtinger_from_real(h: &RealHessian4, grad: [f64; 4]) -> ComplexJet2 {
    let h = &h.h;
    let mut herm = [[C64::new(0.0, 0.0); 2]; 2];
    let mut pure = herm;
    for j in 0..2 {
        for k in 0..2 {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            herm[j][k] = C64::new(0.25 * (h[xj][xk] + h[yj][yk]), 0.25 * (h[xj][yk] - h[yj][xk]));
            pure[j][k] = C64::new(0.25 * (h[xj][xk] - h[yj][yk]), -0.25 * (h[xj][yk] + h[yj][xk]));
        }
    }
    let first = [C64::new(0.5 * grad[0], -0.5 * grad[1]), C64::new(0.5 * grad[2], -0.5 * grad[3])];
    ComplexJet2::from_parts(first, herm, pure)
}

/// Inverse of [`wirtinger_from_real`] on the second-order part.
pub fn real_from_wirtinger(jet: &ComplexJet2) -> RealHessian4 {
    let herm = jet.hermitian();
    let pure = jet.pure();
    let mut h = [[0.0; 4]; 4];
    for j in 0..2 {
        for k in 0..2 {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let (a, b) = (herm[j][k], pure[j][k]);
            h[xj][xk] = 2.0 * (a + b).re;
            h[yj][yk] = 2.0 * (a - b).re;
            h[xj][yk] = 2.0 * (a - b).im;
            h[yj][xk] = -2.0 * (a + b).im;
        }
    }
    RealHessian4 { h }
}

/// Signed-distance complex jet at an ambient collar point.
pub fn complex_jet(p: &HartogsProfile, x: &AmbientPoint) -> Result<(ComplexJet2, DistanceJet)> {
    let dj = distance_jet(p, x)?;
    Ok((wirtinger_from_real(&dj.hessian, dj.projection.grad), dj))
}

/// Complex jet at a boundary point (no transport).
pub fn boundary_complex_jet(p: &HartogsProfile, foot: &AmbientPoint) -> Result<ComplexJet2> {
    let hb = crate::distance::boundary_real_hessian(p, foot)?;
    let n = crate::distance::unit_normal(p, foot)?;
    Ok(wirtinger_from_real(&hb, n))
}

/// First-order expansion of the second derivatives a signed distance `sdist`
/// off the boundary, from the jet at the foot:
/// `H' = H - s (2 H H + 2 P conj(P))` and `P' = P - 2 s (P conj(H)^T + H P)`
/// in index form. The remainder is `O(s^2)`.
pub fn interior_complex_expansion(jet_at_foot: &ComplexJet2, sdist: f64) -> ComplexJet2 {
    let h = jet_at_foot.hermitian();
    let p = jet_at_foot.pure();
    let zero = C64::new(0.0, 0.0);
    let mut herm = [[zero; 2]; 2];
    let mut pure = [[zero; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let mut sh = zero;
            let mut sp = zero;
            for l in 0..2 {
                sh += 2.0 * h[j][l] * h[l][k] + 2.0 * p[j][l] * p[k][l].conj();
                sp += 2.0 * (p[j][l] * h[k][l] + h[j][l] * p[l][k]);
            }
            herm[j][k] = h[j][k] - sdist * sh;
            pure[j][k] = p[j][k] - sdist * sp;
        }
    }
    ComplexJet2::from_parts(jet_at_foot.first(), herm, pure)
}

/// Levi form `sum H_jk t_j conj(t_k)` on a complex tangent vector.
pub fn levi_form(jet: &ComplexJet2, tangent: [C64; 2]) -> Result<f64> {
    let residual = (tangent[0] * jet.d_z + tangent[1] * jet.d_w).norm();
    if residual > 1e-8 {
        return Err(DflabError::NotTangent(residual));
    }
    Ok(hermitian_form(&jet.hermitian(), tangent))
}

/// Coefficients of `dz` and `dzbar` in the boundary one-form
/// `-(d_zwbar / conj(d_w)) dz - (conj(d_zwbar) / d_w) dzbar`.
pub fn alpha_coefficients(jet: &ComplexJet2) -> Result<(C64, C64)> {
    let m = jet.d_w.norm();
    if m <= 1e-10 {
        return Err(DflabError::DegenerateNormal(m));
    }
    Ok((-jet.d_zwbar / jet.d_w.conj(), -jet.d_zwbar.conj() / jet.d_w))
}

/// `|f_w|^2 - f f_wwbar`; nonnegative exactly where `{ |z|^2 < f(w) }` is
/// pseudoconvex.
pub fn radius_profile_levi_check(f: &RadiusProfile, w: C64) -> f64 {
    let j = f.jet(w);
    j.f_w().norm_sqr() - j.value * j.f_wwbar()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::build_lambda;
    use crate::distance::unit_normal;
    use crate::profile::{make_ball, make_no_twist_annulus, make_worm, WormParams};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_hessian() {
        let mut h = [[0.0; 4]; 4];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let j = wirtinger_from_real(&RealHessian4 { h }, [0.0; 4]);
        assert_eq!(j.d_zzbar, c(0.5, 0.0));
        assert_eq!(j.d_zwbar, c(0.0, 0.0));
        assert_eq!(j.d_wwbar, c(0.5, 0.0));
        assert_eq!(j.d_zz, c(0.0, 0.0));
    }

    #[test]
    fn sphere_jet_and_levi() {
        let b = make_ball();
        let foot = AmbientPoint::new(c(0.0, 0.0), c(1.0, 0.0));
        let j = boundary_complex_jet(&b, &foot).unwrap();
        assert!((j.d_wwbar - c(0.25, 0.0)).norm() < 1e-15);
        assert!((levi_form(&j, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(levi_form(&j, [c(0.0, 0.0), c(0.0, 0.0)]).unwrap(), 0.0);
        assert!(matches!(levi_form(&j, [c(0.0, 0.0), c(1.0, 0.0)]), Err(DflabError::NotTangent(_))));
    }

    #[test]
    fn sphere_alpha_matches_closed_form() {
        // on the unit sphere: d_w = wbar/2, d_zwbar = -zbar w / 4
        let b = make_ball();
        let (z, w) = (c(0.6, 0.0), c(0.0, 0.8));
        let j = boundary_complex_jet(&b, &AmbientPoint::new(z, w)).unwrap();
        assert!((j.d_w - w.conj() / 2.0).norm() < 1e-15);
        assert!((j.d_zwbar - (-z.conj() * w / 4.0)).norm() < 1e-15);
        let (a, bb) = alpha_coefficients(&j).unwrap();
        let expect = -(-z.conj() * w / 4.0) / (w / 2.0);
        assert!((a - expect).norm() < 1e-14);
        assert!((bb - a.conj()).norm() < 1e-14);
    }

    fn worm_foot(t: f64) -> (HartogsProfile, AmbientPoint) {
        let w = make_worm(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        (w, AmbientPoint::new(c(t.sqrt(), 0.0), c(0.0, 0.0)))
    }

    #[test]
    fn worm_annulus_jet() {
        for &t in &[1.3, 2.0, 3.5] {
            let (w, foot) = worm_foot(t);
            let j = boundary_complex_jet(&w, &foot).unwrap();
            assert!((j.d_zwbar.norm() - 0.5 / t.sqrt()).abs() < 1e-14);
            assert!(levi_form(&j, [c(1.0, 0.0), c(0.0, 0.0)]).unwrap().abs() < 1e-14);
            let (a, _) = alpha_coefficients(&j).unwrap();
            assert!((a.norm() - 1.0 / t.sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn no_twist_alpha_vanishes() {
        let p = make_no_twist_annulus(WormParams::new(2.0).unwrap(), build_lambda(0.1, 2e4).unwrap());
        let j = boundary_complex_jet(&p, &AmbientPoint::new(c(1.2, 0.3), c(0.6, 0.8))).unwrap();
        let (a, b) = alpha_coefficients(&j).unwrap();
        assert_eq!((a, b), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn expansion_matches_transport() {
        let (w, foot) = worm_foot(2.0);
        let zero = interior_complex_expansion(&boundary_complex_jet(&w, &foot).unwrap(), 0.0);
        assert_eq!(zero, boundary_complex_jet(&w, &foot).unwrap());
        let n = unit_normal(&w, &foot).unwrap();
        let s = -1e-3;
        let x = foot.offset(n, s);
        let (exact, _) = complex_jet(&w, &x).unwrap();
        let approx = interior_complex_expansion(&zero, s);
        // flat annulus: d_zzbar = -4 s |rho_tw|^2 t with |rho_tw| = 1/(2t) after normalization
        assert!((approx.d_zzbar.re - 4e-3 * 0.25 / 2.0).abs() < 1e-15);
        for (a, b) in [
            (exact.d_zzbar, approx.d_zzbar),
            (exact.d_zwbar, approx.d_zwbar),
            (exact.d_wwbar, approx.d_wwbar),
            (exact.d_zz, approx.d_zz),
            (exact.d_zw, approx.d_zw),
            (exact.d_ww, approx.d_ww),
        ] {
            assert!((a - b).norm() < 5e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn radius_levi_examples() {
        assert_eq!(radius_profile_levi_check(&RadiusProfile::Constant(1.0), c(0.3, 0.2)), 0.0);
        assert!((radius_profile_levi_check(&RadiusProfile::Paraboloid(2.0), c(1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert!((radius_profile_levi_check(&RadiusProfile::Gaussian(1.0), c(0.0, 0.0)) + 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip_real_hessian(v in proptest::collection::vec(-10.0f64..10.0, 10), g in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let mut h = [[0.0; 4]; 4];
            let mut k = 0;
            for i in 0..4 {
                for j in i..4 {
                    h[i][j] = v[k];
                    h[j][i] = v[k];
                    k += 1;
                }
            }
            let rh = RealHessian4 { h };
            let jet = wirtinger_from_real(&rh, [g[0], g[1], g[2], g[3]]);
            prop_assert!(jet.d_zzbar.im.abs() < 1e-12 && jet.d_wwbar.im.abs() < 1e-12);
            prop_assert!(real_from_wirtinger(&jet).max_diff(&rh) < 1e-12);
        }
    }
}
