use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obliquebart"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--fn", "rotated-axes", "--theta", "0.7853981634", "--delta", "4", "--n", "1000", "--seed", "7"];
    let a = ok(&run(&args, dir.path()));
    let b = ok(&run(&args, dir.path()));
    assert_eq!(a, b);
    assert_eq!(a.lines().next(), Some("x1,x2,y"));
    assert_eq!(a.lines().count(), 1001);
}

#[test]
fn fit_then_predict_regression() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run(&["simulate", "--fn", "sinusoid", "--theta", "0.5", "--n", "200", "--seed", "1", "--out", "d.csv"], p));
    ok(&run(
        &["fit", "--data", "d.csv", "--out", "m.model", "--trees", "10", "--burn", "30", "--iters", "20", "--seed", "3"],
        p,
    ));
    let diag = std::fs::read_to_string(p.join("m.model.diagnostics.csv")).unwrap();
    assert!(diag.starts_with("chain,iter,sigma2,theta,mean_depth,total_leaves,grow_accept_rate,prune_accept_rate,axis_aligned_rule_fraction\n"));
    assert_eq!(diag.lines().count(), 21);

    let preds = ok(&run(&["predict", "--model", "m.model", "--data", "d.csv"], p));
    let mut lines = preds.lines();
    assert_eq!(lines.next(), Some("row,mean,lo2.5,hi97.5"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.len() == 4 && r[2] <= r[1] && r[1] <= r[3]));
}

#[test]
fn classification_predictions_have_labels() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut csv = String::from("a,b,label\n");
    for i in 0..80 {
        let a = (i as f64 * 0.37).sin();
        let b = (i as f64 * 0.11).cos();
        csv.push_str(&format!("{a},{b},{}\n", u8::from(a > b)));
    }
    std::fs::write(p.join("c.csv"), csv).unwrap();
    ok(&run(
        &[
            "fit", "--task", "classification", "--outcome", "label", "--data", "c.csv", "--out", "c.model", "--trees", "10",
            "--burn", "30", "--iters", "20",
        ],
        p,
    ));
    let preds = ok(&run(&["predict", "--model", "c.model", "--data", "c.csv"], p));
    assert!(preds.starts_with("row,mean,lo2.5,hi97.5,prob,label\n"));
    for line in preds.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let prob: f64 = cols[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&prob));
        assert_eq!(cols[5], if prob > 0.5 { "1" } else { "0" });
    }
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(!run(&["fit", "--data", "missing.csv", "--out", "m"], p).status.success());
    assert!(!run(&["simulate", "--fn", "spiral", "--theta", "0"], p).status.success());
    assert!(!run(&["simulate", "--fn", "sinusoid", "--theta", "2"], p).status.success());
    assert!(!run(&["frobnicate"], p).status.success());
    std::fs::write(p.join("bad.csv"), "x,y\n1,2\nabc,3\n").unwrap();
    let out = run(&["fit", "--data", "bad.csv", "--out", "m"], p);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("'x'"), "{err}");
}
