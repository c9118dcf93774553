//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use dflab_core::classify::{classify_weak_set, ComponentKind};
use dflab_core::complex::boundary_complex_jet;
use dflab_core::cutoff::build_lambda;
use dflab_core::distance::*;
use dflab_core::index::*;
use dflab_core::profile::*;
use dflab_core::psh::{numeric_df_bisect, BisectOptions};
use dflab_core::stein::{stein_verdict, steinness_index_bound};
use dflab_core::{Result, C64};
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

fn worm(r: f64) -> HartogsProfile {
    make_worm(WormParams::new(r).unwrap(), build_lambda(0.1, 2e4).unwrap())
}

fn no_twist(r: f64) -> HartogsProfile {
    make_no_twist_annulus(WormParams::new(r).unwrap(), build_lambda(0.1, 2e4).unwrap())
}

fn single_annulus(p: &HartogsProfile) -> Result<(dflab_core::classify::BoundaryClassification, AnnulusInvariant)> {
    let c = classify_weak_set(p, 64)?;
    let comp = c.annuli().next().ok_or(dflab_core::DflabError::NotAnnulus)?;
    let inv = curvature_profile(p, comp, DEFAULT_KAPPA_SAMPLES)?;
    Ok((c, inv))
}

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn sharpness() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for r in [1.5, 2.0, (PI / 2.0).exp()] {
        let start = Instant::now();
        let p = worm(r);
        let c = classify_weak_set(&p, 64).map_err(|e| e.to_string())?;
        let b = df_bounds(&p, &c, DEFAULT_KAPPA_SAMPLES).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        let target = PI / ((r * r).ln() + PI);
        worst = worst.max((b.upper - target).abs()).max((b.lower - target).abs());
    }
    check(
        worst < 1e-6 && slowest < Duration::from_secs(10),
        format!("max error {worst:.2e}, slowest {slowest:.2?}"),
        format!("max error {worst:.2e} (tol 1e-6), slowest {slowest:.2?} (limit 10 s)"),
    )
}

fn curvature() -> Outcome {
    let p = worm(2.0);
    let (lo, hi) = p.lambda_free_band().ok_or("worm has no flat band")?;
    let (lo, hi) = (lo.max(1.0), hi.min(4.0));
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let t = lo + (hi - lo) * i as f64 / 200.0;
        let k = kappa_at(&p, t, C64::new(0.0, 0.0)).map_err(|e| e.to_string())?;
        worst = worst.max((k - 0.5).abs());
    }
    check(worst < 1e-8, format!("max |kappa - 1/2| = {worst:.2e} on [{lo:.4}, {hi:.4}]"), format!("max |kappa - 1/2| = {worst:.2e}"))
}

fn phase_transition() -> Outcome {
    let h = PI / 2.0;
    let mut msgs = Vec::new();
    let mut ok = true;
    for (r, want) in [((h - 0.1).exp(), Existence::Exists), ((h + 0.1).exp(), Existence::NotExists), (h.exp(), Existence::Inconclusive)] {
        let p = worm(r);
        let (c, inv) = single_annulus(&p).map_err(|e| e.to_string())?;
        let rep = stein_verdict(&p, &c, &inv).map_err(|e| e.to_string())?;
        let err = (rep.a1.abs() - (r * r).ln()).abs();
        ok &= rep.verdict == want && err < 1e-6;
        msgs.push(format!("r={r:.4}: {:?} |a1| err {err:.1e}", rep.verdict));
    }
    check(ok, msgs.join(", "), msgs.join(", "))
}

fn steinness() -> Outcome {
    let (_, inv) = single_annulus(&worm(2.0)).map_err(|e| e.to_string())?;
    let s = steinness_index_bound(&inv);
    let want = PI / (PI - 4f64.ln());
    let got = s.tau_lower.ok_or("bound reported infeasible")?;
    let err = (got - want).abs();
    check(err < 1e-9, format!("tau_lower {got:.12}, error {err:.1e}"), format!("tau_lower {got:.12} vs {want:.12}"))
}

fn bracket() -> Outcome {
    let start = Instant::now();
    let opts = BisectOptions::default();
    let p = worm((PI / 2.0).exp());
    let c = classify_weak_set(&p, 64).map_err(|e| e.to_string())?;
    let w = numeric_df_bisect(&p, &c, &opts).map_err(|e| e.to_string())?;
    let b = make_ball();
    let cb = classify_weak_set(&b, 64).map_err(|e| e.to_string())?;
    let bb = numeric_df_bisect(&b, &cb, &opts).map_err(|e| e.to_string())?;
    let el = start.elapsed();
    let ok = w.infeasible - w.feasible <= 0.02 + 1e-12
        && w.feasible <= 0.5
        && 0.5 <= w.infeasible
        && bb.infeasible >= 0.95
        && el < Duration::from_secs(300);
    let msg = format!("worm [{:.5}, {:.5}], ball [{:.3}, {:.3}], {el:.2?}", w.feasible, w.infeasible, bb.feasible, bb.infeasible);
    check(ok, msg.clone(), msg)
}

fn distance_invariants() -> Outcome {
    let (mut eik, mut grad, mut hess) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for p in [make_ball(), worm(2.0), no_twist(2.0)] {
        let pts = random_collar_points(&p, 100, 2024, 1e-4, 5e-3, 0.25);
        count += pts.len();
        for x in &pts {
            let j = distance_jet(&p, x).map_err(|e| e.to_string())?;
            let g = j.projection.grad;
            eik = eik.max((g.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs());
            let n = unit_normal(&p, &j.projection.foot).map_err(|e| e.to_string())?;
            grad = grad.max((0..4).map(|i| (g[i] - n[i]).abs()).fold(0.0, f64::max));
            let fd = fd_real_hessian(&p, x).map_err(|e| e.to_string())?;
            hess = hess.max(j.hessian.max_diff(&fd) / j.hessian.max_abs().max(1.0));
        }
    }
    let msg = format!("{count} points: eikonal {eik:.1e}, gradient {grad:.1e}, hessian {hess:.1e}");
    check(count == 300 && eik < 1e-8 && grad < 1e-8 && hess < 1e-5, msg.clone(), msg)
}

fn annulus_identities() -> Outcome {
    let p = worm(2.0);
    let (lo, hi) = p.lambda_free_band().ok_or("worm has no flat band")?;
    let (lo, hi) = (lo.max(1.0), hi.min(4.0));
    let (mut phi, mut dw, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..64 {
        let t = lo + (hi - lo) * (k as f64 + 0.5) / 64.0;
        let z = C64::from_polar(t.sqrt(), 2.399963 * k as f64);
        let j = boundary_complex_jet(&p, &AmbientPoint::new(z, C64::new(0.0, 0.0))).map_err(|e| e.to_string())?;
        phi = phi.max((2.0 * (j.d_zwbar * j.d_w / z.conj()).re).abs());
        dw = dw.max((4.0 * j.d_w.norm_sqr() - 1.0).abs());
        sym = sym.max((j.d_zwbar.norm() - j.d_zw.norm()).abs());
    }
    let msg = format!("phase residual {phi:.1e}, |4|d_w|^2 - 1| {dw:.1e}, mixed symmetry {sym:.1e}");
    check(phi < 1e-8 && dw < 1e-8 && sym < 1e-10, msg.clone(), msg)
}

fn sturm_equivalence() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let (mut agree, mut feasible, mut grid_fail) = (0, 0, 0);
    for _ in 0..100 {
        let tau = rng.random_range(0.02..0.98);
        let c = rng.random_range(0.05..1.5);
        let a = rng.random_range(0.2..3.0);
        let b = a * rng.random_range(1.05f64..30.0);
        let built = build_g(tau, c, a, b);
        let f = sturm_window_check(tau, c, a, b) == Feasibility::Feasible;
        if built.is_ok() == f {
            agree += 1;
        }
        if let Ok(g) = built {
            feasible += 1;
            let ok = g.grid(5000).into_iter().all(|t| {
                let scale = tau.powi(3) * c * c / t + tau * (1.0 - tau).powi(2) * g.omega * g.omega / t;
                g.value(t) > 0.0 && g.linearized_lhs(t) >= -1e-10 * scale
            });
            if !ok {
                grid_fail += 1;
            }
        }
    }
    let msg = format!("{agree}/100 agree, {feasible} feasible, {grid_fail} grid failures");
    check(agree == 100 && grid_fail == 0 && feasible > 0 && feasible < 100, msg.clone(), msg)
}

fn good_vector_fields() -> Outcome {
    let mut msgs = Vec::new();
    let mut ok = true;
    for (name, p, want) in [("worm", worm(2.0), Existence::NotExists), ("no-twist", no_twist(2.0), Existence::Exists)] {
        let (c, inv) = single_annulus(&p).map_err(|e| e.to_string())?;
        ok &= c.components.len() == 1 && c.components[0].kind == ComponentKind::AnnulusLike;
        let v = good_vector_field_criterion(&inv);
        let upper = df_upper_bound(&inv);
        ok &= v == want && ((v == Existence::Exists) == (upper == 1.0));
        msgs.push(format!("{name}: {v:?}, upper {upper:.6}"));
    }
    check(ok, msgs.join(", "), msgs.join(", "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 worm sharpness", sharpness),
        ("2 worm curvature", curvature),
        ("3 Stein phase transition", phase_transition),
        ("4 Steinness bound", steinness),
        ("5 certification bracket", bracket),
        ("6 distance invariants", distance_invariants),
        ("7 annulus identities", annulus_identities),
        ("8 Sturm/weight equivalence", sturm_equivalence),
        ("9 good vector fields", good_vector_fields),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(m) => println!("PASS  {name}: {m}"),
            Err(m) => {
                failed += 1;
                println!("FAIL  {name}: {m}");
            }
        }
    }
    println!("{}/9 acceptance criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
