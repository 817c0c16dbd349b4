use std::path::Path;
use std::process::{Command, Output};

use vmplace::cli::RunSummary;
use vmplace::trace::parse_csv;

fn vmpsim(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmpsim"))
        .current_dir(cwd)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn steady_generator_config_gives_full_utilization() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "steady.toml",
        r#"
generator = "cwtg"
duration = 12
num_services = 3
max_vms_per_service = 5
horizontal_elasticity = { pdf = "uniform", a = 5, b = 5 }
vertical_elasticity = { pdf = "uniform", a = 1, b = 1 }
server_util = { pdf = "uniform", a = 100, b = 100 }
network_util = { pdf = "uniform", a = 100, b = 100 }
"#,
    );
    let out = vmpsim(dir.path(), &["gen-trace", "--config", "steady.toml", "--out", "t.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(std::fs::File::open(dir.path().join("t.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.u_cpu == 100.0 && r.u_ram == 100.0 && r.u_net == 100.0));
    let manifest = std::fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap();
    assert!(manifest.contains("\"generator\": \"cwtg\""));
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = vmpsim(dir.path(), &["gen-trace", "--config", "nope.toml", "--out", "t.csv"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("t.csv").exists());
}

#[test]
fn malformed_trace_exits_with_schema_code() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "0,0,0,0,6,8,450,100,100\n");
    let out = vmpsim(dir.path(), &["run", "--trace", "bad.csv", "--algo", "ff", "--out", "o"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.csv", "");
    let out = vmpsim(dir.path(), &["run", "--trace", "t.csv", "--algo", "nsga2", "--out", "o"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn empty_trace_runs_to_zero_power() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.csv", "");
    let out = vmpsim(dir.path(), &["run", "--trace", "t.csv", "--algo", "ff", "--out", "o"]);
    assert_eq!(code(&out), 0);
    let summary: RunSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.mean.objectives.raw[0], 0.0);
    assert_eq!(summary.steps, 1);
}

#[test]
fn unplaceable_top_priority_vm_exits_with_infeasible_code() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "[problem]\nfederation_enabled = false\n");
    // sla 4 is the top level by default; 20 ECU fits no 8-ECU PM
    write(
        dir.path(),
        "t.csv",
        "t,b,c,v,cpu,ram,net,u_cpu,u_ram,u_net,r_cpu,r_ram,r_net,t_init,t_end,sla\n0,0,0,0,20,2,10,100,100,100,0.05,0,0,0,1,4\n",
    );
    let out = vmpsim(dir.path(), &["run", "--config", "run.toml", "--trace", "t.csv", "--algo", "bfd", "--out", "o"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_memetic_runs_are_summarized() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "w.toml", "generator = \"legacy\"\nduration = 20\nservices = 15\n");
    write(dir.path(), "run.toml", "[problem]\ns = 5\n[sim.ma]\npopulation_size = 10\ngenerations = 5\n");
    assert_eq!(code(&vmpsim(dir.path(), &["gen-trace", "--config", "w.toml", "--out", "w.csv"])), 0);
    let out = vmpsim(
        dir.path(),
        &["run", "--config", "run.toml", "--trace", "w.csv", "--algo", "ma", "--seeds", "10", "--out", "ma"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: RunSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ma/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.runs.len(), 10);
    let mean = summary.runs.iter().map(|r| r.average_cost).sum::<f64>() / 10.0;
    assert!((summary.mean.average_cost - mean).abs() < 1e-12);
    assert!(dir.path().join("ma/steps-seed9.csv").exists());
}

#[test]
fn compare_rejects_mixed_objective_sets() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.toml", "generator = \"cwtg\"\nduration = 10\nnum_services = 5\nmax_vms_per_service = 3\n");
    write(dir.path(), "p2.toml", "preset = \"part_two\"\n");
    assert_eq!(code(&vmpsim(dir.path(), &["gen-trace", "--config", "g.toml", "--out", "t.csv"])), 0);
    let run = |args: &[&str]| code(&vmpsim(dir.path(), args));
    assert_eq!(run(&["run", "--trace", "t.csv", "--algo", "ff", "--load-profile", "high", "--out", "a"]), 0);
    assert_eq!(
        run(&["run", "--config", "p2.toml", "--trace", "t.csv", "--algo", "bfd", "--load-profile", "high", "--out", "b"]),
        0
    );
    assert_eq!(run(&["compare", "a", "--out", "single"]), 0);
    let grid = std::fs::read_to_string(dir.path().join("single/costs.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2);
    assert_eq!(run(&["compare", "a", "b", "--out", "mixed"]), 2);
    assert!(!dir.path().join("mixed").exists());
}
