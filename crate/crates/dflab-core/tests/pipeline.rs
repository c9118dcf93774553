use dflab_core::index::{closed_form_bound, Existence};
use dflab_core::report::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn worm(r: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.domain.kind = DomainKind::Worm;
    c.domain.r = r;
    c
}

#[test]
fn worm_report_is_sharp() {
    let rep = run_analyze(&worm(2.0)).unwrap();
    let target = PI / (4f64.ln() + PI);
    assert!((rep.bounds.upper - target).abs() < 1e-6);
    assert!((rep.bounds.lower - target).abs() < 1e-6);
    assert!(rep.bounds.consistent);
    assert_eq!(rep.stein.as_ref().unwrap().verdict, Existence::Exists);
    assert_eq!(rep.annuli[0].good_vector_fields, Existence::NotExists);
    assert!(rep.steinness.unwrap().feasible);
}

#[test]
fn wide_worm_has_no_stein_basis() {
    let rep = run_analyze(&worm((PI / 2.0 + 0.1).exp())).unwrap();
    assert_eq!(rep.stein.unwrap().verdict, Existence::NotExists);
    assert!(!rep.steinness.unwrap().feasible);
}

#[test]
fn no_twist_report() {
    let mut c = worm(2.0);
    c.domain.kind = DomainKind::NoTwist;
    let rep = run_analyze(&c).unwrap();
    assert_eq!(rep.bounds.upper, 1.0);
    assert!(rep.annuli[0].kappa.iter().all(|&(_, k)| k == 0.0));
    assert_eq!(rep.annuli[0].good_vector_fields, Existence::Exists);
    assert!(rep.df_one_check.unwrap().holds);
}

#[test]
fn certified_worm_round_trips_and_plots() {
    let mut c = worm(2.0);
    c.tau = Some(0.45);
    let rep = run_analyze(&c).unwrap();
    assert!(rep.certificates[0].passed);
    let back = ReportDocument::from_json(&rep.to_json().unwrap()).unwrap();
    assert_eq!(back, rep);

    let dir = std::env::temp_dir().join(format!("dflab-plot-{}", std::process::id()));
    let files = emit_plot_data(&rep, &dir).unwrap();
    assert_eq!(files.len(), 3);
    let kappa = std::fs::read_to_string(dir.join("kappa_profile.csv")).unwrap();
    assert!(kappa.starts_with("t,kappa\n"));
    let band = rep.annuli[0].kappa.len();
    assert_eq!(kappa.lines().count(), band + 1);
    let scan = std::fs::read_to_string(dir.join("cert_scan.csv")).unwrap();
    for line in scan.lines().skip(1) {
        let det: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(det >= -1e-9, "{line}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reports_are_deterministic() {
    let mut c = worm(2.0);
    c.tau = Some(0.4);
    c.seed = 9;
    assert_eq!(run_analyze(&c).unwrap(), run_analyze(&c).unwrap());
}

#[test]
fn csv_and_text_render() {
    let rep = run_analyze(&worm(2.0)).unwrap();
    let csv = rep.to_csv();
    assert!(csv.lines().any(|l| l.starts_with("df_upper,0.6938")));
    assert!(csv.contains("stein_verdict,exists"));
    assert!(rep.to_text().contains("index upper bound"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_echo_round_trips(r in 1.1f64..5.0, res in 64usize..200, seed in any::<u64>()) {
        let text = format!("kind = worm\nr = {r:?}\nresolution = {res}\nseed = {seed}\nformat = text\n");
        let c = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(c.domain.r, r);
        prop_assert_eq!(c.resolution, res);
        let json = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
    }

    #[test]
    fn closed_form_bound_is_monotone(c in 0.01f64..2.0, a in 0.1f64..5.0, ratio in 1.01f64..50.0, dc in 0.0f64..1.0) {
        let b = a * ratio;
        let v = closed_form_bound(c, a, b);
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(closed_form_bound(c + dc, a, b) <= v + 1e-15);
        prop_assert!(closed_form_bound(c, a, b * 1.5) <= v + 1e-15);
    }
}
