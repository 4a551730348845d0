use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hsqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsqkd")).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn mhps_family_reproduces_golden_files() {
    let out = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep".to_owned(), "--out".into(), out.path().to_str().unwrap().into()];
    for m in [1, 4, 16, 128] {
        args.push("--config".into());
        args.push(workspace().join(format!("configs/single/mhps_m{m}.toml")).to_str().unwrap().into());
    }
    let o = hsqkd(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    for m in [1, 4, 16, 128] {
        let name = format!("mhps_m{m}.csv");
        let got = std::fs::read_to_string(out.path().join(&name)).unwrap();
        let golden =
            std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(&name)).unwrap();
        assert!(got == golden, "{name} differs from golden");
    }
}

#[test]
fn sweep_writes_svg_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let c =
        config(dir.path(), "a.toml", "[source]\nkind = \"wcs\"\n[channel]\nloss_stop = 5\n[output]\nname = \"w\"\n");
    let out = dir.path().join("out");
    let o = hsqkd(&["sweep", "--config", &c, "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("w.csv")).unwrap().lines().count(), 7);
    assert!(std::fs::read_to_string(out.join("w.svg")).unwrap().contains("<polyline"));
}

#[test]
fn optimize_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "a.toml", "[source]\nkind = \"single_photon\"\n[channel]\nlosses = [0.0]\n");
    let o = hsqkd(&["optimize", "--config", &c]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        text,
        format!(
            "{}\n0.00000000000e0,,2.26722233280e-1,2.50000400000e-1,5.00079199873e-3,0.00000000000e0,,,,\n",
            hsqkd_cli::report::SWEEP_HEADER
        )
    );
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        ("[source]\nkind = \"wcs\"\n[protocol]\nkind = \"passive_decoy\"\n[channel]\nloss_stop = 3\n", "sweep"),
        ("[source]\nkind = \"amhps\"\nm = 4\n", "sweep"),
        ("[source]\nkind = \"amhps\"\nm = 4\n[channel]\nlosses = []\n", "sweep"),
        ("[source]\nkind = \"amhps\"\nm = 4\nmu = 0.2\n[mc]\ntrials = 0\n", "validate-mc"),
        ("[source]\nkind = \"amhps\"\nm = 4\ncolour = 1\n", "sweep"),
    ];
    for (i, (text, cmd)) in cases.iter().enumerate() {
        let c = config(dir.path(), &format!("c{i}.toml"), text);
        let o = hsqkd(&[cmd, "--config", &c, "--out", out]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains("config error"), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn compare_needs_two_configs_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let a =
        config(dir.path(), "a.toml", "[source]\nkind = \"wcs\"\n[channel]\nloss_stop = 4\n[output]\nname = \"a\"\n");
    let b = config(
        dir.path(),
        "b.toml",
        "[source]\nkind = \"mhps\"\nm = 4\n[channel]\nloss_stop = 4\n[output]\nname = \"b\"\n",
    );
    let c = config(
        dir.path(),
        "c.toml",
        "[source]\nkind = \"mhps\"\nm = 4\n[channel]\nloss_stop = 5\n[output]\nname = \"c\"\n",
    );

    let o = hsqkd(&["compare", "--config", &a, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid mismatch"));
    let o = hsqkd(&["compare", "--config", &a, "--config", &c, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid mismatch"));

    let o = hsqkd(&["compare", "--config", &a, "--config", &b, "--out", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("loss_db,a,b"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn io_errors_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = hsqkd(&["sweep", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let c = config(dir.path(), "a.toml", "[source]\nkind = \"wcs\"\n[channel]\nloss_stop = 1\n");
    let blocker = config(dir.path(), "file", "");
    let o = hsqkd(&["sweep", "--config", &c, "--out", &blocker]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn validate_mc_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "mc.toml",
        "[source]\nkind = \"amhps\"\nm = 8\nmu = 0.2\n[mc]\ntrials = 1000000\nseed = 7\n[output]\nname = \"ref\"\n",
    );
    let out = dir.path().join("out");
    let a = hsqkd(&["validate-mc", "--config", &c, "--out", out.to_str().unwrap()]);
    assert!(a.status.success(), "{}", stderr(&a));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.lines().last().unwrap().starts_with("PASS, tv="), "{text}");
    assert!(text.contains("seed 7"));
    assert_eq!(std::fs::read_to_string(out.join("ref_mc.txt")).unwrap(), text);
    let b = hsqkd(&["validate-mc", "--config", &c]);
    assert_eq!(a.stdout, b.stdout);

    let o = hsqkd(&["validate-mc", "--config", &c, "--seed", "8"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("seed 8"));
}

#[test]
fn validate_mc_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "mc.toml",
        "[source]\nkind = \"smhps\"\nm = 4\nmu = 0.3\n[mc]\ntrials = 1000\ntv_tolerance = 1e-9\n",
    );
    let o = hsqkd(&["validate-mc", "--config", &c]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}
