use std::process::Command;

fn dflab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dflab")).args(args).env("DFLAB_THREADS", "2").output().unwrap()
}

#[test]
fn worm_json_report() {
    let out = dflab(&["worm", "--r", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let upper = v["bounds"]["upper"].as_f64().unwrap();
    assert!((upper - 0.693831945).abs() < 1e-6);
    assert_eq!(v["stein"]["verdict"], "exists");
}

#[test]
fn config_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# no-twist band\nkind = no_twist\nr = 2\n").unwrap();
    let out = dir.path().join("report.csv");
    let o = dflab(&["--config", cfg.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap(), "analyze"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.contains("df_upper,1\n"));
    assert!(csv.contains("annulus0_good_vector_fields,exists"));
}

#[test]
fn plot_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = dflab(&["--out", dir.path().to_str().unwrap(), "plot"]);
    assert!(o.status.success());
    for f in ["kappa_profile.csv", "g_profile.csv", "cert_scan.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn certify_and_stein_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("w.cfg");
    std::fs::write(&cfg, "kind = worm\nr = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = dflab(&["--config", c, "certify", "--tau", "0.45"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["certificates"][0]["passed"], true);
    let o = dflab(&["--config", c, "--format", "text", "stein"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict   exists"));
}

#[test]
fn exit_codes() {
    assert_eq!(dflab(&["analyze", "--resolution", "8"]).status.code(), Some(1));
    assert_eq!(dflab(&["bogus"]).status.code(), Some(1));
    assert_eq!(dflab(&["--help"]).status.code(), Some(0));
    assert_eq!(dflab(&["worm", "--r", "0.5"]).status.code(), Some(1));
    // stein needs a single annulus; the ball has none
    assert_eq!(dflab(&["stein"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(dflab(&["--config", cfg.to_str().unwrap(), "analyze"]).status.code(), Some(1));
}
