use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_d2dmac"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("d2dmac-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn golden_all_passes() {
    let o = run(&["golden"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["sec3-example: PASS", "fdmac-e-example: PASS", "radius-sweep: PASS"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn unknown_golden_fails() {
    let o = run(&["golden", "no-such-golden"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-golden"));
}

#[test]
fn lp_export_matches_frozen_file() {
    let o = run(&["export", "--format", "lp"]);
    assert!(o.status.success());
    let frozen = std::fs::read_to_string(fixtures().join("sec3-example.lp")).unwrap();
    assert_eq!(stdout(&o), frozen);
}

#[test]
fn fixture_round_trip_is_stable() {
    let first = scratch("roundtrip-1.toml");
    let o = run(&["export", "--format", "fixture", "-o", first.to_str().unwrap()]);
    assert!(o.status.success());
    let saved = std::fs::read_to_string(&first).unwrap();
    assert_eq!(saved, std::fs::read_to_string(fixtures().join("sec3-example.toml")).unwrap());

    // load the bundled file from disk and save it again; a second save is a fixed point
    let second = scratch("roundtrip-2.toml");
    let third = scratch("roundtrip-3.toml");
    assert!(run(&["export", "-f", "fixture", "-i", first.to_str().unwrap(), "-o", second.to_str().unwrap()]).status.success());
    assert!(run(&["export", "-f", "fixture", "-i", second.to_str().unwrap(), "-o", third.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read_to_string(&second).unwrap(), std::fs::read_to_string(&third).unwrap());

    let lp = run(&["export", "-f", "lp", "-i", second.to_str().unwrap()]);
    assert_eq!(stdout(&lp), stdout(&run(&["export", "-f", "lp"])));
}

#[test]
fn empty_instance_exports_trivial_model() {
    let path = scratch("empty.toml");
    std::fs::write(
        &path,
        "name = \"empty\"\narea_side = 10.0\ngateway = 0\n\n[[nodes]]\nid = 0\nkind = \"gateway\"\nx = 5.0\ny = 5.0\n",
    )
    .unwrap();
    let o = run(&["export", "-i", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("Minimize") && text.trim_end().ends_with("End"), "{text}");
    assert!(text.contains("0 <= delta_1 <= 0"), "{text}");
    assert!(!text.contains(" b_") && !text.contains(" a_"), "{text}");
}

#[test]
fn radius_emits_table() {
    let o = run(&["radius", "--ms-db", "5", "--max-interferers", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ms_db,F,radius_m");
    assert_eq!(lines.len(), 5);
    let radii: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(radii.windows(2).all(|w| w[1] > w[0]));
    assert!((radii[3] / radii[0] - 2.0).abs() < 1e-12);
}

#[test]
fn optimal_prints_optimum_and_schedule() {
    let o = run(&["optimal", "--instance", "sec3-example"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("optimum: 9"), "{text}");
    assert!(text.contains("proven: true"), "{text}");
    assert!(text.contains("paths: 1:Ordinary 2:Direct 3:Direct 4:Direct"), "{text}");
}

#[test]
fn sweep_is_deterministic() {
    let cfg = scratch("small.toml");
    std::fs::write(&cfg, "[deployment]\nwn_count = 10\n[traffic]\nloads = [1.0, 3.0]\n[frame]\nsim_seconds = 0.01\n[run]\nseeds = [4, 5]\n")
        .unwrap();
    let summary = scratch("summary.csv");
    let a = run(&["sweep", "-c", cfg.to_str().unwrap(), "-s", summary.to_str().unwrap()]);
    let b = run(&["sweep", "-c", cfg.to_str().unwrap(), "--threads", "1"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 1 + 4 * 2 * 2);
    let summary = std::fs::read_to_string(summary).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4 * 2);
}

#[test]
fn sweep_with_no_seeds_writes_header_only() {
    let cfg = scratch("noseeds.toml");
    std::fs::write(&cfg, "[run]\nseeds = []\n").unwrap();
    let o = run(&["sweep", "-c", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o),
        "protocol,beta,load,traffic_mode,wn_count,seed,avg_delay_slots,network_throughput,flow_delay_bw,flow_delay_in,flow_tp_bw,flow_tp_in\n"
    );
}

#[test]
fn bad_config_names_the_field() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "[frame]\noverhead = 3\n").unwrap();
    let o = run(&["sweep", "-c", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("overhead"));
}
