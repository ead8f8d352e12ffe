use std::process::{Command, Output};

use hyperbessel::hypergroup::FanPoint;
use hyperbessel::kernels::{KernelCase, TransitionLaw};
use hyperbessel::verify::VerificationReport;

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperbessel"));
    cmd.args(args).env_remove("HYPERBESSEL_THREADS");
    if let Some(t) = threads {
        cmd.env("HYPERBESSEL_THREADS", t);
    }
    cmd.output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn kernel_geometric_example() {
    let text = stdout(&["qbes-kernel", "--delta", "1", "--state", "tau=-2,k=0", "--t", "1"]);
    let law: TransitionLaw = serde_json::from_str(&text).unwrap();
    assert_eq!(law.case, KernelCase::NegativeBinomial);
    for (l, atom) in law.atoms.iter().enumerate() {
        assert_eq!(atom.point, FanPoint::Discrete { tau: -1.0, k: l as u32 });
        let expected = 0.5f64.powi(l as i32 + 1);
        assert!((atom.prob - expected).abs() <= 1e-15 * expected.max(1e-300) + 1e-300);
    }
    assert!(law.tail_mass <= 1e-12);
    let again = serde_json::to_string_pretty(&law).unwrap();
    assert_eq!(again.trim_end(), text.trim_end());
}

#[test]
fn absorbing_paths_example() {
    let text = stdout(&[
        "qbes-sim", "--delta", "2", "--start", "tau=1,k=0", "--t-grid", "0.5,1.0", "--paths", "3",
        "--seed", "7",
    ]);
    assert!(text.starts_with("path_id,time,coord0,coord1,branch,k\n"));
    assert!(!text.contains('\r'));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 9);
    for path in 0..3 {
        let mine: Vec<_> = rows.iter().filter(|r| r[0] == path.to_string()).collect();
        let times: Vec<f64> = mine.iter().map(|r| r[1].parse().unwrap()).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0]);
        for r in &mine {
            assert_eq!((r[4].as_str(), r[5].as_str()), ("discrete", "0"));
            assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn ray_rows_use_continuous_branch() {
    let text = stdout(&[
        "qbes-sim", "--delta", "1.5", "--start", "tau=-1,k=2", "--t-grid", "1,2", "--paths", "4",
        "--seed", "3",
    ]);
    for r in csv_rows(&text).iter().filter(|r| r[1].parse::<f64>().unwrap() == 1.0) {
        assert_eq!((r[4].as_str(), r[5].as_str()), ("continuous", "-1"));
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
    let text = stdout(&["bes-sim", "--delta", "2", "--x0", "1", "--t-grid", "0.5,1", "--paths", "2"]);
    for r in csv_rows(&text) {
        assert_eq!((r[3].as_str(), r[4].as_str(), r[5].as_str()), ("0.0000000000000000e0", "continuous", "-1"));
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "qbes-sim", "--delta", "2.7", "--start", "tau=-1.2,k=1", "--t-grid", "0.4:3:6", "--paths",
        "40", "--seed", "11",
    ];
    let a = run(&args, Some("1"));
    let b = run(&args, Some("8"));
    let c = run(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("hyperbessel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("density.csv");
    let p = path.to_str().unwrap();
    let out = run(
        &["bes-density", "--delta", "1", "--t", "1", "--x", "0", "--y-grid", "0,1", "--out", p],
        None,
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&path).unwrap());
    let expected = (2.0 / std::f64::consts::PI).sqrt() * (-0.5f64).exp();
    assert!((rows[1][1].parse::<f64>().unwrap() - expected).abs() < 1e-15);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_exit_codes() {
    let out = run(&["verify", "--suite", "gegenbauer", "--tol", "1e-8"], None);
    assert_eq!(out.status.code(), Some(0));
    let reports: Vec<VerificationReport> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!reports.is_empty() && reports.iter().all(|r| r.pass && r.tol == 1e-8));
    let text = serde_json::to_string_pretty(&reports).unwrap();
    assert_eq!(text.trim_end(), String::from_utf8(out.stdout).unwrap().trim_end());

    let out = run(&["verify", "--suite", "kummer", "--tol", "1e-300"], None);
    assert_eq!(out.status.code(), Some(2));
    let reports: Vec<VerificationReport> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(reports.iter().any(|r| !r.pass));
}

#[test]
fn validation_errors_exit_one_with_one_line() {
    for args in [
        vec!["verify", "--suite", "nope"],
        vec!["verify", "--tol", "-1"],
        vec!["verify", "--format", "csv"],
        vec!["qbes-kernel", "--delta", "-1", "--state", "tau=1,k=0", "--t", "1"],
        vec!["qbes-kernel", "--delta", "1", "--state", "tau=0,k=0", "--t", "1"],
        vec!["qbes-kernel", "--delta", "1", "--state", "tau=1,k=0", "--t", "1", "--trunc-eps", "0.1"],
        vec!["qbes-sim", "--delta", "1", "--start", "y1=1", "--t-grid", "1,0.5"],
        vec!["bes-density", "--delta", "1", "--t", "1", "--x", "0", "--y-grid", "-1"],
        vec!["char-eval", "--alpha", "-0.5", "--char", "y1=1", "--points", "1:0"],
        vec!["char-eval", "--hypergroup", "bessel-kingman", "--alpha", "0.5", "--u-grid", "1", "--x-grid", "1"],
        vec!["hankel", "--alpha", "2", "--function", "gaussian", "--u-grid", "1", "--cutoff", "0"],
        vec!["no-such-command"],
        vec!["qbes-kernel", "--delta", "1"],
    ] {
        let out = run(&args, None);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error"), "{err}");
    }
    let out = run(&["verify", "--suite", "kummer"], Some("many"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn hankel_builtin_transforms() {
    // α = 3: ∫ e^{-x²/2} j_{1/2}(ux) x² dx = √(π/2) e^{-u²/2} and
    // ∫_0^1 j_{1/2}(ux) x² dx = j_{3/2}(u)/3 = (sin u - u cos u)/u³.
    let text = stdout(&["hankel", "--alpha", "3", "--function", "gaussian", "--u-grid", "0:4:9"]);
    for r in csv_rows(&text) {
        let u: f64 = r[0].parse().unwrap();
        let expected = (std::f64::consts::PI / 2.0).sqrt() * (-0.5 * u * u).exp();
        assert!((r[1].parse::<f64>().unwrap() - expected).abs() <= 1e-10, "u={u}");
        assert_eq!(r[3], "false");
    }
    let text = stdout(&["hankel", "--alpha", "3", "--function", "indicator", "--u-grid", "0.5:6:5"]);
    for r in csv_rows(&text) {
        let u: f64 = r[0].parse().unwrap();
        let expected = (u.sin() - u * u.cos()) / u.powi(3);
        assert!((r[1].parse::<f64>().unwrap() - expected).abs() <= 1e-12, "u={u}");
        assert_eq!(r[3], "false");
    }
}

#[test]
fn char_eval_outputs() {
    let text = stdout(&["char-eval", "--alpha", "1", "--char", "y1=0.25", "--points", "1:0.3,2:-1"]);
    let rows = csv_rows(&text);
    // j_1(2x√y1) with α = 1: j_1(z) = 2 J_1(z)/z; J_1(1) = 0.44005058574493355.
    assert!((rows[0][2].parse::<f64>().unwrap() - 2.0 * 0.440_050_585_744_933_55).abs() < 1e-14);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.0);
    let text = stdout(&[
        "char-eval", "--hypergroup", "bessel-kingman", "--alpha", "1", "--u-grid", "0,2", "--x-grid",
        "0.5", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v[1]["value"].as_f64().unwrap() - 1f64.cos()).abs() < 1e-15);
}
