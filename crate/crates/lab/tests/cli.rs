use std::process::Command;

fn nodalkk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nodalkk"))
}

#[test]
fn config_verb_prints_effective_config() {
    let out = nodalkk().args(["--n", "24", "--set", "solver.k=5", "config"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = nodalkk::RunConfig::from_toml_str(&text).unwrap();
    assert_eq!((cfg.geometry.n, cfg.solver.k), (24, 5));
}

#[test]
fn unknown_keys_fail_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[solver]\nk = 4\ntol = 1e-8\nseed = 0\nweights = [1]\nturbo = true\n").unwrap();
    let out = nodalkk().arg("--config").arg(&path).arg("config").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("turbo"));
}

#[test]
fn spectrum_then_nodal_then_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--n", "16", "--k", "4", "--weights", "[1]", "--out"];
    let run = |extra: &[&str]| {
        let out = nodalkk().args(common).arg(dir.path()).args(extra).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    run(&["spectrum"]);
    assert!(dir.path().join("spectrum_m1.nbl").exists());
    let text = run(&["nodal", "--m", "1", "--index", "1", "--svg"]);
    assert!(text.contains("domains 2, nodal-set components 1"), "{text}");
    let svg = std::fs::read_to_string(dir.path().join("nodal_m1_i1_theta.svg")).unwrap();
    assert!(svg.contains("viewBox=\"0 0 1024 1024\""));
    run(&["--set", "sphere.pairs=[[2,1]]", "sphere", "--svg"]);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sphere.json")).unwrap()).unwrap();
    assert_eq!(report["entries"][0]["domain_count"], 4);
    assert!(report["header"]["config_hash"].as_str().unwrap().len() == 64);
    assert!(dir.path().join("sphere_N2_m1.svg").exists());
}
