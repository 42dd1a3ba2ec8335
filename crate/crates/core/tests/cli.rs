use std::path::{Path, PathBuf};

use volterra_feller::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["volterra-feller"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const CIR: &str = r#"
[model]
family = "cir"
kappa = 1.0
theta = 1.0
sigma = 1.0
x0 = 1.0

[kernel]
kind = "constant"
level = 1.0
"#;

#[test]
fn help_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for sub in [
        "",
        "test",
        "scale",
        "resolvent",
        "approx",
        "simulate",
        "crosscheck",
    ] {
        let args: Vec<&str> = if sub.is_empty() {
            vec!["--help"]
        } else {
            vec![sub, "--help"]
        };
        let (code, out, _) = run(&args);
        assert_eq!(code, 0);
        let name = if sub.is_empty() {
            "help.txt".to_string()
        } else {
            format!("help_{sub}.txt")
        };
        let path = golden.join(name);
        if update {
            std::fs::write(&path, &out).unwrap();
        } else {
            let expected = std::fs::read_to_string(&path).unwrap();
            assert_eq!(out, expected, "{}", path.display());
        }
    }
}

#[test]
fn cir_feller_case_is_decisive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cir.toml", CIR);
    let (code, out, _) = run(&["test", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let v = &doc["verdicts"][0];
    assert_eq!(v["verdict"], "NoExitAS");
    assert_eq!(v["boundary"], "Left");
}

#[test]
fn negative_kappa_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        &CIR.replace("kappa = 1.0", "kappa = -1"),
    );
    let (code, out, err) = run(&["test", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("kappa"), "{err}");
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &CIR.replace("level", "lvl"));
    let (code, _, err) = run(&["test", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("lvl") && err.contains("line"), "{err}");
}

#[test]
fn inconclusive_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[model]
family = "jacobi"
a = 0.0
b = 1.0
kappa = 2.0
theta = 0.5
sigma = 0.5
x0 = 0.5

[kernel]
kind = "constant"
level = 1.0

[test]
tests = ["sup_inf"]
"#;
    let cfg = write(dir.path(), "j.toml", text);
    let (code, out, _) = run(&["test", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("Inconclusive"));
}

#[test]
fn approx_truncation_scalars() {
    let (code, out, _) = run(&[
        "approx",
        "--alpha",
        "0.5",
        "--scheme",
        "truncation",
        "--T",
        "1",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("K(0)=0.636620"), "{out}");
    assert!(out.contains("K'(0)=-0.212207"), "{out}");
}

#[test]
fn approx_single_interval_pair() {
    let (code, out, _) = run(&[
        "approx",
        "--alpha",
        "0.5",
        "--scheme",
        "quadrature",
        "--nodes",
        "0,1",
        "--q",
        "1",
    ]);
    assert_eq!(code, 0);
    let row = out.lines().find(|l| l.starts_with("1,")).unwrap();
    let v: Vec<f64> = row.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
    assert!((v[0] - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    assert!((v[1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn scale_csv_has_header_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cir.toml", CIR);
    let args = [
        "scale",
        "--config",
        cfg.to_str().unwrap(),
        "--from",
        "0.5",
        "--to",
        "2",
        "--points",
        "4",
        "--format",
        "csv",
    ];
    let (code, out, _) = run(&args);
    assert_eq!(code, 0);
    let body: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "x,p_prime,p,v");
    assert_eq!(body.len(), 5);
    assert!(body[2].starts_with("1.0,1.0,0.0,0.0"));
}

/// Strips the echoed config from CSV output and feeds it back.
#[test]
fn echoed_csv_config_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cir.toml", CIR);
    let args = [
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--n-paths",
        "64",
        "--seed",
        "5",
        "--format",
        "csv",
    ];
    let (code, first, _) = run(&args);
    assert_eq!(code, 0);
    let echoed: String = first
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .map(|l| format!("{}\n", l.strip_prefix(' ').unwrap_or(l)))
        .collect();
    let again = write(dir.path(), "echo.toml", &echoed);
    let (code, second, _) = run(&["simulate", "--config", again.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(first, second);
}

#[test]
fn echoed_json_config_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cir.toml", CIR);
    let (_, first, _) = run(&["test", "--config", cfg.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&first).unwrap();
    let again = write(dir.path(), "echo.json", &doc["config"].to_string());
    let (code, second, _) = run(&["test", "--config", again.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(first, second);
}

#[test]
fn crosscheck_classical_cir_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CIR}\n[sim]\nhorizon = 2.0\nn_paths = 200\nseed = 1\n");
    let cfg = write(dir.path(), "cir.toml", &text);
    let (code, out, _) = run(&["crosscheck", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["consistent"], true);
}

#[test]
fn output_path_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cir.toml", CIR);
    let target = dir.path().join("verdicts.csv");
    let (code, out, _) = run(&[
        "test",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(target).unwrap();
    assert!(written.contains("test,boundary,verdict,rule,evidence\n"));
}
