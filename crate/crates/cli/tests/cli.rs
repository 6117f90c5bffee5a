use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use dce_cli::table::ParsedCsv;

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["spectrum", "--nz-max", "5", "--set", "nx_max=2", "--rwa", "--oracle", "--set", "tau_p=0.02"];
    let a = dce(&args);
    let b = dce(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let sweep = ["sweep", "--set", "axis=nz", "--set", "start=1", "--set", "stop=4", "--set", "step=1", "--set", "pipeline=true"];
    assert_eq!(dce(&sweep).stdout, dce(&sweep).stdout);
}

#[test]
fn manifest_reproduces_output() {
    let cfg = scratch("run.cfg");
    fs::write(&cfg, "# fundamental under gravity\nchi = 1e-3\ngamma_a_p = 0.01\nmetric_order = 2\ntau_p = 0.03\n").unwrap();
    let out = scratch("first.csv");
    let o = dce(&["spectrum", "--config", cfg.to_str().unwrap(), "--nz-max", "4", "--set", "epsilon=2e-3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = scratch("first.csv.manifest");
    let again = scratch("second.csv");
    let o = dce(&["spectrum", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
    assert_eq!(fs::read(&manifest).unwrap(), fs::read(scratch("second.csv.manifest")).unwrap());
    let csv = ParsedCsv::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(csv.meta_value("schema"), Some("dce-spectrum/1"));
    assert_eq!(csv.meta_value("config-sha256").map(str::len), Some(64));
}

#[test]
fn flags_override_set_and_file() {
    let cfg = scratch("override.cfg");
    fs::write(&cfg, "nz_max = 3\n").unwrap();
    let o = dce(&["modes", "--config", cfg.to_str().unwrap(), "--set", "nz_max=5", "--nz-max", "2"]);
    let csv = ParsedCsv::parse(&stdout(&o)).unwrap();
    assert_eq!(csv.rows.len(), 2);
}

#[test]
fn config_errors_exit_two_with_location() {
    let cfg = scratch("bad.cfg");
    fs::write(&cfg, "chi = 0\nepsilon = lots\n").unwrap();
    let o = dce(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.cfg:2") && err.contains("epsilon"), "{err}");
    assert_eq!(dce(&["spectrum", "--set", "colour=blue"]).status.code(), Some(2));
    assert_eq!(dce(&["spectrum", "--set", "chi=0.3"]).status.code(), Some(2));
    assert_eq!(dce(&["spectrum", "--set", "mass=1", "--set", "radius=1e5", "--set", "chi=0"]).status.code(), Some(2));
    assert_eq!(dce(&["spectrum", "--set", "tau_p=0.1", "--set", "t=3"]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_three() {
    let o = dce(&["spectrum", "--oracle", "--nz-max", "2", "--set", "rtol=1e-300", "--set", "atol=1e-300"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn empty_sweep_is_header_only() {
    let o = dce(&["sweep", "--set", "start=1", "--set", "stop=0"]);
    assert!(o.status.success());
    let csv = ParsedCsv::parse(&stdout(&o)).unwrap();
    assert!(csv.rows.is_empty());
    assert_eq!(csv.header[0], "sweep_gamma_a_p");
}

#[test]
fn core_suite_passes_on_flat_space() {
    let o = dce(&["validate"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = ParsedCsv::parse(&stdout(&o)).unwrap();
    assert!(csv.rows.iter().all(|r| r[2] == "pass"));
    assert!(csv.rows.len() >= 10);
}

#[test]
fn modes_without_gradient_share_columns() {
    let o = dce(&["modes", "--nz-max", "3", "--set", "nx_max=2"]);
    let csv = ParsedCsv::parse(&stdout(&o)).unwrap();
    assert_eq!(csv.column_f64("omega_first").unwrap(), csv.column_f64("omega_second_approx").unwrap());
    assert_eq!(csv.column_f64("omega_first_exact").unwrap(), csv.column_f64("omega_second_root").unwrap());
    let ortho: f64 = csv.meta_value("orthonormality").unwrap().parse().unwrap();
    assert!(ortho <= 1e-6);
}

#[test]
fn help_documents_columns() {
    let o = dce(&["--help"]);
    let text = stdout(&o);
    assert!(text.contains("dce-spectrum/1") && text.contains("n_perturbative"), "{text}");
    assert!(stdout(&dce(&["keys"])).contains("tau_scaling"));
}
