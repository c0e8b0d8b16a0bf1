use std::process::Command;

fn gwpt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gwpt"))
        .args(args)
        .output()
        .unwrap()
}

const SMALL: [&str; 10] = [
    "--eps", "1/32", "--nz1", "8", "--nz2", "8", "--nz3", "8", "--nz4", "8",
];

#[test]
fn run_writes_profiles_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", "--test", "a1ii", "--out", out];
    args.extend(SMALL);
    let o = gwpt(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rho = std::fs::read_to_string(dir.path().join("rho_profile.csv")).unwrap();
    assert!(rho.starts_with("x,mean,sd\n"));
    assert_eq!(rho.lines().count(), 9601);
    let stats = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(stats.contains("mass,"));
    let prov: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run.provenance.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(prov["config_sha256"].as_str().unwrap().len(), 64);
    assert!(prov.get("timings").is_none());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let read = || {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec![
            "compare",
            "--test",
            "a1ii",
            "--out",
            dir.path().to_str().unwrap(),
        ];
        args.extend(SMALL);
        assert!(gwpt(&args).status.success());
        std::fs::read(dir.path().join("errors.csv")).unwrap()
    };
    let a = read();
    assert_eq!(a, read());
    let text = String::from_utf8(a).unwrap();
    assert!(
        text.starts_with("eps,Nz2,T,Er_psi,Er1_j,Er2_j,wall_ode_s,wall_w_s,wall_rec_s,wall_ds_s\n")
    );
}

#[test]
fn config_file_overrides_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"test_id": "a1i", "eps": "1/64", "nz1": 4, "nz2": 4, "nz3": 4, "outputs": ["rho"]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = gwpt(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("rho_profile.csv").exists());
    assert!(!out.join("j_profile.csv").exists());
}

#[test]
fn bad_configuration_names_stage_and_field() {
    let o = gwpt(&[
        "run",
        "--test",
        "a1ii",
        "--nz2",
        "0",
        "--out",
        "/nonexistent",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("[config]") && err.contains("nz2"), "{err}");
    let o = gwpt(&["run", "--test", "zz"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classical_writes_both_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let o = gwpt(&[
        "classical",
        "--test",
        "a1ii",
        "--nz1",
        "64",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "classical_density_histogram.csv",
        "classical_density_derivative.csv",
        "classical_moments.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
