use std::process::Command;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_threshdiff"))
}

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    let transient = write(dir.path(), "t.json", r#"{"thresholds":[0.0],"drifts":[-1.0,1.0],"vols":[1.0,1.0]}"#);
    let invalid = write(dir.path(), "bad.json", r#"{"thresholds":[0.0],"drifts":[1.0],"vols":[1.0,1.0]}"#);
    let malformed = write(dir.path(), "junk.json", "{not json");

    let out = exe().args(["escape", "--model"]).arg(&transient).args(["--y", "0,1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("y,p_minus,p_plus"));
    let p: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((p - 0.5 * (-2f64).exp()).abs() < 1e-15);

    let out = exe().args(["stationary", "--model"]).arg(&transient).args(["--grid", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("μ₀ > 0 and μ_n < 0"));

    for bad in [&invalid, &malformed] {
        let out = exe().args(["scale", "--model"]).arg(bad).args(["--grid", "0,1"]).output().unwrap();
        assert_eq!(out.status.code(), Some(2));
    }
    assert_eq!(exe().args(["scale", "--grid", "0,1"]).output().unwrap().status.code(), Some(1));
}

#[test]
fn csv_goes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"thresholds":[0.0,1.0],"drifts":[1.0,-0.5,-1.0],"vols":[1.0,2.0,1.0]}"#);
    let target = dir.path().join("density.csv");
    let status = exe()
        .args(["eval-density", "--model"])
        .arg(&m)
        .args(["--q", "1", "--x", "0.5", "--grid", "-2:3:11", "--out"])
        .arg(&target)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&target).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.ends_with('\n') && !text.contains('\r'));
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{field}");
        }
    }
}
