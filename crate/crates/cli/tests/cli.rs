use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use spiral_anchor_cli::{Config, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_PARTIAL};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cli(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_spiral-anchor"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&o.stdout).to_string() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap(), text)
}

fn run_config(cmd: &str, config: &Path, out: &Path) -> (i32, String) {
    cli(&[cmd, "--config", config.to_str().unwrap()], out)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn every_shipped_config_round_trips() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let c = Config::load(&path).unwrap();
            let back = Config::parse(&c.echo().unwrap()).unwrap();
            assert_eq!(back, c, "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn continuation_outputs_are_reproducible_and_headed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("eb.toml");
    assert_eq!(run_config("continue", &cfg, &a).0, EXIT_OK);
    assert_eq!(cli(&["continue", "--config", cfg.to_str().unwrap(), "--workers", "2"], &b).0, EXIT_OK);
    for name in ["branches.csv", "events.csv", "summary.txt", "config.echo.toml"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name} differs");
        let first = String::from_utf8_lossy(&x).lines().next().unwrap().to_string();
        assert!(first.starts_with("# spiral-anchor ") && first.contains("sha256:"), "{name}: {first}");
    }
    let echo = fs::read_to_string(a.join("config.echo.toml")).unwrap();
    assert_eq!(Config::parse(&echo).unwrap(), Config::load(&cfg).unwrap());
}

#[test]
fn eb_levelset_candidates_agree_with_continuation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("eb.toml");
    assert_eq!(run_config("levelset", &cfg, tmp.path()).0, EXIT_OK);
    assert_eq!(run_config("continue", &cfg, tmp.path()).0, EXIT_OK);
    let cands: Vec<[f64; 2]> = csv_rows(&tmp.path().join("fold_candidates.csv"))
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            [f[0].parse().unwrap(), f[1].parse().unwrap()]
        })
        .collect();
    let folds: Vec<[f64; 2]> = csv_rows(&tmp.path().join("events.csv"))
        .iter()
        .filter(|r| r.split(',').nth(1) == Some("fold"))
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            [f[2].parse().unwrap(), f[3].parse().unwrap()]
        })
        .collect();
    assert_eq!(cands.len(), folds.len());
    for c in &cands {
        assert!(folds.iter().any(|f| (f[0] - c[0]).hypot(f[1] - c[1]) < 1e-6), "{c:?}");
    }
    for x in [[1.2483, -0.1286], [0.2269, -3.4760], [0.3371, 3.1473], [2.2769, 0.2982]] {
        assert!(cands.iter().any(|c| (c[0] - x[0]).hypot(c[1] - x[1]) < 1e-3), "{x:?}");
    }
    assert!(tmp.path().join("curves_kappa.csv").exists());
}

#[test]
fn overlapping_wedges_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, text) = run_config("continue", &configs().join("ex1.toml"), tmp.path());
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("anchoring wedges overlap"), "{text}");
}

#[test]
fn center_bundle_runs_and_refuses_the_unperturbed_system() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = run_config("centerbundle", &configs().join("centerbundle_linear.toml"), &tmp.path().join("ok"));
    assert_eq!(code, EXIT_OK);
    let summary = fs::read_to_string(tmp.path().join("ok/summary.txt")).unwrap();
    assert!(summary.contains("classification: "));
    let (code, text) = run_config("centerbundle", &configs().join("centerbundle_zero.toml"), &tmp.path().join("zero"));
    assert_eq!(code, EXIT_NUMERICAL, "{text}");
    assert!(text.contains("non-hyperbolic"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "[continuation]\nrho = 0.01\nrhoo = 1\n");
    let (code, text) = run_config("continue", &bad, &tmp.path().join("o"));
    assert_eq!(code, EXIT_CONFIG);
    assert!(text.contains("rhoo"), "{text}");
    let (code, _) = run_config("continue", &tmp.path().join("missing.toml"), &tmp.path().join("o"));
    assert_eq!(code, EXIT_CONFIG);
    let no_map = write_config(tmp.path(), "[continuation]\nrho = 0.01\n");
    assert_eq!(run_config("levelset", &no_map, &tmp.path().join("o")).0, EXIT_CONFIG);
}

const SMALL_FHN: &str = r#"
[model]
diffusion = [1.0, 0.0]

[model.kinetics]
type = "fhn"
varsigma = 0.3
beta = 0.6
gamma = 0.5

[[model.bells]]
amplitude = -0.3
center = [-1.0, 1.0]
shape = { rate = -0.05 }
target = "u"

[run]
n = 40
l = 10.0
duration = 20.0
frame_every = 500
"#;

#[test]
fn simulate_writes_tips_and_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_FHN);
    let out = tmp.path().join("sim");
    assert_eq!(run_config("simulate", &cfg, &out).0, EXIT_OK);
    assert!(csv_rows(&out.join("tips.csv")).len() > 50);
    let frame = fs::read(out.join("frames/u_00000.pgm")).unwrap();
    assert!(frame.starts_with(b"P5\n# spiral-anchor "));
    assert!(frame.len() > 40 * 40);
}

#[test]
fn blow_up_is_a_partial_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL_FHN}dt = 1.0\n"));
    let out = tmp.path().join("sim");
    let (code, _) = run_config("simulate", &cfg, &out);
    assert_eq!(code, EXIT_PARTIAL);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("aborted"), "{summary}");
}
