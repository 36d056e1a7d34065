//! The `nhssh` binary: exit codes, messages and written files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str =
    "n_cells = 8\nregion_start = 7\nregion_end = 10\nt_max = 2\ndt = 0.5\nt_sample = 2\n";

fn nhssh(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nhssh"));
    cmd.args(args).env_remove("NHSSH_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_files_and_lists_them() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = nhssh(
        &[
            "run",
            "--scenario",
            "bipartite",
            "--config",
            &conf,
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[("NHSSH_THREADS", "2")],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listed.lines().count(), 2);
    let csv = fs::read_to_string(out_dir.join("bipartite.csv")).unwrap();
    assert!(csv.starts_with("t,rho_left,rho_right,side_init\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    assert!(fs::read_to_string(out_dir.join("summary.txt"))
        .unwrap()
        .contains("scenario = bipartite"));
}

#[test]
fn scenario_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), &format!("scenario = spectrum\n{SMALL}"));
    let out_dir = dir.path().join("out");
    let out = nhssh(
        &[
            "run",
            "--scenario",
            "reshuffle",
            "--config",
            &conf,
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("reshuffle.csv").exists());
    assert!(!out_dir.join("spectrum.csv").exists());
}

#[test]
fn set_overrides_apply_after_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = nhssh(
        &[
            "run",
            "--scenario",
            "lightcone",
            "--config",
            &conf,
            "--out",
            out_dir.to_str().unwrap(),
            "--set",
            "sides=right",
            "--set",
            "t_max = 1",
            "--set",
            "t_sample=1",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!out_dir.join("lightcone_left.csv").exists());
    let csv = fs::read_to_string(out_dir.join("lightcone_right.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 16);
}

#[test]
fn validate_reports_ok() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "# flagship\nu_im = 0.25\n");
    let out = nhssh(&["validate", "--config", &conf], &[]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("ok (scenario spectrum, 220 sites)"));
}

#[test]
fn unknown_key_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "n_cells = 8\nregoin_start = 3\n");
    for args in [
        vec!["validate", "--config", &conf],
        vec!["run", "--scenario", "spectrum", "--config", &conf],
    ] {
        let out = nhssh(&args, &[]);
        assert_eq!(out.status.code(), Some(2));
        let err = stderr(&out);
        assert!(
            err.starts_with("config error: ")
                && err.contains("line 2")
                && err.contains("regoin_start"),
            "{err}"
        );
    }
}

#[test]
fn region_out_of_bounds_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhssh(
        &[
            "run",
            "--scenario",
            "spectrum",
            "--set",
            "region_start=300",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("region_start"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn malformed_set_exits_2() {
    let out = nhssh(&["run", "--scenario", "spectrum", "--set", "n_cells"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--set"));
}

#[test]
fn trivial_initial_phase_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), &format!("{SMALL}v_initial = 1.5\n"));
    let out = nhssh(
        &[
            "run",
            "--scenario",
            "bipartite",
            "--config",
            &conf,
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.starts_with("error: left edge state"), "{err}");
}

#[test]
fn unknown_scenario_exits_2() {
    let out = nhssh(&["run", "--scenario", "fig10"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL);
    for value in ["0", "many"] {
        let out = nhssh(
            &[
                "run",
                "--scenario",
                "spectrum",
                "--config",
                &conf,
                "--out",
                dir.path().to_str().unwrap(),
            ],
            &[("NHSSH_THREADS", value)],
        );
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains("NHSSH_THREADS"));
    }
}

#[test]
fn missing_config_file_exits_2() {
    let out = nhssh(&["validate", "--config", "/nonexistent/run.conf"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
