use std::path::Path;
use std::process::{Command, Output};

fn superexp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superexp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SUPEREXP_OUT_DIR")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const HARMONIC_LIKE: &str = "[potential]\nfamily = \"opp_cos\"\nalpha = 2.0\nbeta = 0.1\nk = 1.0\n\n[solve]\nstates = 12\n";

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", HARMONIC_LIKE);
    let out = superexp(&["solve", &cfg, "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    for f in ["eigenvalues.csv", "spacings.csv", "states.csv", "config.toml"] {
        assert!(res.join(f).exists(), "{f}");
    }
    let eig = std::fs::read_to_string(res.join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 13);
}

#[test]
fn out_dir_env_wins_over_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", HARMONIC_LIKE);
    let out = Command::new(env!("CARGO_BIN_EXE_superexp"))
        .args(["solve", &cfg, "--out", "flag"])
        .current_dir(dir.path())
        .env("SUPEREXP_OUT_DIR", "env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env/eigenvalues.csv").exists());
    assert!(!dir.path().join("flag").exists());
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[potential]\nfamily = \"opp_cos\"\nalpha = -1.0\n");
    assert_eq!(superexp(&["solve", &cfg], dir.path()).status.code(), Some(1));

    let cfg = write(dir.path(), "typo.toml", "[potential]\nfamily = \"sso\"\nalpha = 1.0\nbogus = 3\n");
    let out = superexp(&["solve", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn unknown_figure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(superexp(&["reproduce", "fig99"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_file_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(superexp(&["solve", "nope.toml"], dir.path()).status.code(), Some(3));
}

#[test]
fn converge_reports_an_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "conv.toml",
        "[potential]\nfamily = \"opp_cos\"\nalpha = 2.0\nbeta = 0.0\nk = 1.0\n\n[grid]\nkind = \"walls\"\npoints_per_wavelength = 20.0\nq_min = -10.0\nq_max = 10.0\n\n[solve]\nstates = 5\n",
    );
    let out = superexp(&["converge", &cfg, "--h", "0.2,0.1,0.05", "--out", "c"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fitted order"), "{stdout}");
    assert!(dir.path().join("c/convergence.csv").exists());
}
