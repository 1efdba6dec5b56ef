//! End-to-end checks of the `dce` binary: exit codes, CSV artifacts, and
//! run-to-run determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const FAST_CFG: &str = "\
chi0 = 0.05
b0 = 1.0
alpha = 0.2
omega = 2k1
modes = 3
t_f = 20
t_max = 25
dt = 0.01
stride = 10
fit_lo = 5
fit_hi = 24
";

#[test]
fn spectrum_writes_tables_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), FAST_CFG);
    let out = tmp.path().join("out");
    let res = dce(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    for name in ["spectrum.csv", "gaps.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        // every artifact starts with a '#'-prefixed resolved-config header
        assert!(text.starts_with("# "), "{name} missing config header");
        assert!(text.contains("# chi0 = 0.05"), "{name} header lacks chi0");
        let first_data = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(first_data, "b0,n,k_n,M_n,gap_n");
    }
}

#[test]
fn evolve_is_deterministic_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), FAST_CFG);
    let (out_a, out_b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&out_a, &out_b] {
        let res = dce(&[
            "evolve",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            "2",
        ]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    }
    for name in ["trajectory.csv", "particles.csv", "bogoliubov.csv", "fits.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn cli_overrides_beat_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), FAST_CFG);
    let out = tmp.path().join("out");
    let res = dce(&[
        "evolve",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--modes",
        "2",
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("particles.csv")).unwrap();
    assert!(text.contains("# alpha = 0.1"), "override not reflected in header");
    assert!(text.contains("# modes = 2"), "override not reflected in header");
}

#[test]
fn bad_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    // missing file
    let res = dce(&["spectrum", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(res.status.code(), Some(2));
    // invalid value
    let cfg = write_cfg(tmp.path(), "chi0 = 0.05\nb0 = 1.0\nt_f = -5\n");
    let res = dce(&["evolve", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    // workers = 0
    let cfg = write_cfg(tmp.path(), FAST_CFG);
    let res = dce(&["evolve", "--config", &cfg, "--workers", "0"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn integration_blowup_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), FAST_CFG);
    let res = dce(&[
        "evolve",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("out").to_str().unwrap(),
        "--alpha",
        "1e150",
    ]);
    assert_eq!(res.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn degenerate_fit_window_exits_five() {
    let tmp = tempfile::tempdir().unwrap();
    // window [10.00, 10.05] holds at most one sample at stride 10 * dt 0.01
    let cfg = write_cfg(
        tmp.path(),
        "chi0 = 0.05\nb0 = 1.0\nalpha = 0.2\nomega = 2k1\nmodes = 3\nt_f = 20\n\
         t_max = 25\ndt = 0.01\nstride = 10\nfit_lo = 10.0\nfit_hi = 10.05\n",
    );
    let res = dce(&[
        "compare",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(5), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}
