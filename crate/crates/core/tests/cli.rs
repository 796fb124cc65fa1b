use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn prrtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prrtc"))
        .args(args)
        .output()
        .unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let sc = scenario("straight_pothole.json");
    let o = prrtc(&[
        "plan",
        "--scenario",
        &sc,
        "--seed",
        "2",
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["plan.json", "path.csv", "plan.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(out.join("path.csv")).unwrap();
    assert!(csv.starts_with("x,y\n"));
}

#[test]
fn track_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let sc = scenario("left_turn_vehicle.json");
    let o = prrtc(&["track", "--scenario", &sc, "--out", path_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(text.starts_with("t,px,py,psi,v,delta,v_cmd\n"));
    assert!(text.lines().count() > 10);
    assert!(out.join("track.svg").is_file());
}

#[test]
fn bench_single_method_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out: PathBuf = dir.path().join("bench");
    let sc = scenario("straight_pothole.json");
    let o = prrtc(&[
        "bench",
        "--scenario",
        &sc,
        "--trials",
        "5",
        "--methods",
        "prrt",
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats = std::fs::read_to_string(out.join("stats.csv")).unwrap();
    let lines: Vec<&str> = stats.lines().collect();
    assert_eq!(lines[0], "method,mean_iters,std_iters,success_rate,mean_ms");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("prrt,") && lines[1].ends_with(",NA"));
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 6);
}

#[test]
fn bad_parameter_fails() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("left_turn_vehicle.json");
    let o = prrtc(&[
        "plan",
        "--scenario",
        &sc,
        "--param",
        "nonsense=1",
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = prrtc(&[
        "plan",
        "--scenario",
        &sc,
        "--param",
        "lambda=-3",
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(!o.status.success());
}

#[test]
fn missing_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = prrtc(&[
        "plan",
        "--scenario",
        "/no/such/file.json",
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(!o.status.success());
    let o = prrtc(&[
        "bench",
        "--scenario",
        &scenario("left_turn_vehicle.json"),
        "--methods",
        "astar",
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(!o.status.success());
}

#[test]
fn render_matches_plan_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let sc = scenario("straight_two_obstacles.json");
    assert!(prrtc(&[
        "plan",
        "--scenario",
        &sc,
        "--seed",
        "4",
        "--out",
        path_arg(&out)
    ])
    .status
    .success());
    let svg = out.join("again.svg");
    let o = prrtc(&[
        "render",
        "--scenario",
        &sc,
        "--plan",
        path_arg(&out.join("plan.json")),
        "--out",
        path_arg(&svg),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(svg).unwrap(),
        std::fs::read(out.join("plan.svg")).unwrap()
    );
}
