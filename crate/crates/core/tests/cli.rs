use std::path::Path;
use std::process::{Command, Output};

use oddm::harness::{read_csv, CSV_HEADER};

const SMALL: &str = "frame.M = 16\nframe.N = 8\nframe.Q = 4\nframe.oversampling = 4\n\
    channel.model = random\nchannel.max_delay = 3\nchannel.max_doppler = 2\n\
    sim.snr_db = 10,20\nsim.trials = 4\nsim.frames_per_trial = 1\n";

fn oddm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oddm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(oddm(&["--help"]).status.code(), Some(0));
    assert_eq!(oddm(&["ber", "--bogus"]).status.code(), Some(1));
    assert_eq!(oddm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(oddm(&["ber", "--detector", "zf"]).status.code(), Some(1));
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "frame.M = 16\nframe.bogus = 3\n");
    let o = oddm(&["ber", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn ber_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = oddm(&["ber", "--config", &cfg, "--csi", "estimated", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let ra = read_csv(&a).unwrap();
    let rb = read_csv(&b).unwrap();
    assert_eq!(ra.rows.len(), 2);
    assert!(ra.rows.iter().all(|r| r.bits == 4 * 256 && r.nmse_db.is_some()));
    assert_eq!(ra.to_csv_string_without_timing().unwrap(), rb.to_csv_string_without_timing().unwrap());
}

#[test]
fn scheme_list_runs_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = oddm(&["ber", "--config", &cfg, "--scheme", "oddm,otfs,ofdm"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 1 + 3 * 2);
    assert!(out.contains("ofdm,zf,"));
}

#[test]
fn nmse_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}sim.level = matrix\n"));
    let o = oddm(&["nmse", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains(",alternating,") && out.contains(",exhaustive,"));

    let o = oddm(&["estimate", "--config", &cfg, "--trial", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("# truth"));
    assert!(out.contains("# estimate") && out.contains("nmse_db"));
}

#[test]
fn runtime_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // EVA needs more delay bins than this OFDM prefix covers
    let cfg = write_config(dir.path(), "sim.scheme = ofdm\nsim.ofdm_cp = 1\nsim.trials = 1\nsim.snr_db = 10\n");
    let o = oddm(&["ber", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn selftest_passes() {
    let o = oddm(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
