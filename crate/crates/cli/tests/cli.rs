use std::path::Path;
use std::process::{Command, Output};

fn windroute(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windroute"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(
        &path,
        "[graph]\nn = 25\np = 0.15\nx_max = 3000.0\ny_max = 3000.0\n\
         [experiment]\ntrials = 20\nround_size = 10\nbudgets = [60.0]\nks = [4]\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_graph_writes_loadable_json() {
    let dir = tempfile::tempdir().unwrap();
    ok(&windroute(&["generate-graph", "--n", "12", "--p", "0.3", "--seed", "4", "--out", "g.json"], dir.path()));
    let g = windroute::graph::TimeGraph::load(&dir.path().join("g.json")).unwrap();
    assert_eq!(g.vertex_count(), 12);
    assert_eq!(g.depot(), 0);
}

#[test]
fn run_then_report_reproduces_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let listed = ok(&windroute(&["run", "--config", &cfg, "--out", "res"], dir.path()));
    assert!(listed.contains("records.csv") && listed.contains("aggregate.csv"));
    let res = dir.path().join("res");
    let first = std::fs::read_to_string(res.join("aggregate.csv")).unwrap();
    assert_eq!(first.lines().count(), 1 + 4);
    std::fs::remove_file(res.join("aggregate.csv")).unwrap();
    ok(&windroute(&["report", "--in", "res"], dir.path()));
    assert_eq!(std::fs::read_to_string(res.join("aggregate.csv")).unwrap(), first);
}

#[test]
fn sweep_writes_one_table_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    ok(&windroute(&["sweep", "--config", &cfg, "--lambda", "0,1,2", "--out", "sw"], dir.path()));
    let table = std::fs::read_to_string(dir.path().join("sw/sweep_B60_K4.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("lambda,planner,suc,abrt,fail"));
    assert_eq!(table.lines().count(), 1 + 3 * 4);
}

#[test]
fn ablate_selected_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    ok(&windroute(&["ablate", "--config", &cfg, "--variants", "full,no_opt", "--out", "ab"], dir.path()));
    let table = std::fs::read_to_string(dir.path().join("ab/ablation.csv")).unwrap();
    let variants: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(variants, ["full", "no_opt"]);
}

#[test]
fn speed_curve_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&windroute(&["speed-curve", "--payloads", "0,8", "--min", "6", "--max", "10", "--step", "1"], dir.path()));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("v_a_mps,case,wh_per_km"));
    // four cases per payload, five airspeeds each
    assert_eq!(lines.count(), 2 * 4 * 5);
}

#[test]
fn fleet_episode_writes_logs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    ok(&windroute(&["fleet", "--config", &cfg, "--seed", "3", "--out", "fl"], dir.path()));
    for (file, header) in [
        ("fleet_log.csv", "t,event,vehicle,detail"),
        ("assignments.csv", "t,drone,customer"),
        ("missions.csv", "drone,customer,launch_vertex,start_s,outcome,energy_wh"),
    ] {
        let text = std::fs::read_to_string(dir.path().join("fl").join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
    }
}

#[test]
fn printed_defaults_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&windroute(&["config"], dir.path()));
    windroute::harness::Config::from_toml(&text).unwrap();
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[planner]\nkappa_ret = 0.5\n").unwrap();
    let out = windroute(&["run", "--config", "bad.toml", "--out", "x"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa_ret"));
    let out = windroute(&["run", "--config", "missing.toml", "--out", "x"], dir.path());
    assert!(!out.status.success());
    let out = windroute(&["report", "--in", "nowhere"], dir.path());
    assert!(!out.status.success());
}
