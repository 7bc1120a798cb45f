use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uam-corridor"))
}

fn scenario(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name]
        .iter()
        .collect()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let out = ok(bin().arg("validate").arg("--scenario").arg(&path).output().unwrap());
        assert!(out.contains("ok"));
    }
}

#[test]
fn validate_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("unknown_key.scn", "warp_speed = 9\n"),
        ("bad_value.scn", "arrival_rate = fast\n"),
        ("violation.scn", "dfr.t_buffer = 1\ndfr.t_buffer_min = 2\n"),
    ] {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        let out = bin().arg("validate").arg("--scenario").arg(&path).output().unwrap();
        assert!(!out.status.success(), "{name} accepted");
        assert!(!out.stderr.is_empty());
    }
    let missing = dir.path().join("missing.scn");
    assert!(!bin()
        .arg("validate")
        .arg("--scenario")
        .arg(missing)
        .output()
        .unwrap()
        .status
        .success());
}

#[test]
fn empty_rate_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin()
        .args(["sweep", "--rates", "0.2:0.1:0.01", "--out"])
        .arg(dir.path())
        .output()
        .unwrap());
    assert_eq!(
        lines(&dir.path().join("sweep.csv")),
        ["scenario,mode,arrival_rate,actual_rate,throughput,min_ttc,min_separation,termination"]
    );
}

#[test]
fn small_sweep_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (sub, jobs) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(sub);
        ok(bin()
            .args([
                "sweep",
                "--rates",
                "0.05:0.25:0.1",
                "--modes",
                "VFR1,DFR1",
                "--scenarios",
                "a,d",
            ])
            .args(["--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .unwrap());
        outputs.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn sweep_rejects_unknown_mode() {
    let out = bin().args(["sweep", "--modes", "VFR9"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn run_with_trace_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(bin()
        .arg("run")
        .arg("--scenario")
        .arg(scenario("single_forecast.scn"))
        .arg("--trace")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap());
    assert!(stdout.starts_with("TIME_LIMIT"));
    let headers = [
        ("samples.csv", "t,kind,follower,leader,value"),
        (
            "summary.csv",
            "scenario,mode,arrival_rate,actual_rate,throughput,min_ttc,min_separation,termination",
        ),
        ("events.csv", "t,event,vehicle,other,detail"),
        ("trace.csv", "t,vehicle,cwp,eta"),
        ("positions.csv", "t,vehicle,x,v"),
    ];
    for (file, header) in headers {
        let rows = lines(&dir.path().join(file));
        assert_eq!(rows[0], header, "{file}");
        assert!(rows.len() > 1, "{file} is empty");
    }
    let events = lines(&dir.path().join("events.csv"));
    let updates: Vec<&String> = events.iter().filter(|l| l.contains(",ETA_UPDATE,")).collect();
    assert_eq!(updates.len(), 3);
    assert!(updates[0].starts_with("105,") && updates[1].starts_with("105.2,") && updates[2].starts_with("105.4,"));
    assert!(lines(&dir.path().join("summary.csv"))[1].starts_with("single_forecast,DFR,"));
}

#[test]
fn run_without_trace_skips_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin()
        .arg("run")
        .arg("--scenario")
        .arg(scenario("baseline_vfr2.scn"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap());
    assert!(dir.path().join("summary.csv").exists());
    assert!(!dir.path().join("trace.csv").exists());
    assert!(!dir.path().join("positions.csv").exists());
}

#[test]
fn trace_subcommand_writes_traces_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(bin()
        .arg("trace")
        .arg("--scenario")
        .arg(scenario("single_forecast.scn"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap());
    assert!(dir.path().join("trace.csv").exists());
    assert!(dir.path().join("positions.csv").exists());
    assert!(!dir.path().join("samples.csv").exists());
}
