use std::process::{Command, Output};

use reldim::cli::fmt_num;
use reldim::dimension::{f_theta, f_theta_real, f_theta_two_cap, two_ball_accuracy};

fn reldim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reldim"))
        .args(args)
        .output()
        .unwrap()
}

fn body(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exit_codes() {
    assert_eq!(
        reldim(&["fprob", "--theta", "0", "--d", "3"]).status.code(),
        Some(0)
    );
    assert_eq!(reldim(&["fprob", "--eps", "1"]).status.code(), Some(2));
    assert_eq!(reldim(&["figure", "4"]).status.code(), Some(2));
    assert_eq!(reldim(&["two-ball", "--d", "0"]).status.code(), Some(2));
    assert_eq!(
        reldim(&["learn-sim", "--trials", "ten"]).status.code(),
        Some(2)
    );
    assert_eq!(
        reldim(&["dim", "--confidence", "1.5"]).status.code(),
        Some(2)
    );
    // clap's own usage errors share the validation code
    assert_eq!(reldim(&["no-such-command"]).status.code(), Some(2));
    // an unreachable tolerance exhausts the panel budget
    let out = reldim(&["fprob", "--theta=-0.7", "--d", "3.3", "--tol", "1e-18"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn header_records_provenance() {
    let out = reldim(&[
        "relative-dim",
        "--d",
        "2",
        "--eps",
        "2.5",
        "--pair",
        "yx",
        "--samples",
        "100000",
        "--seed",
        "17",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["seed"], "17");
    assert!(v["meta"]["tool"].as_str().unwrap().starts_with("reldim "));
    assert!(v["meta"]["timestamp"].is_string());
    assert_eq!(v["record"]["p_hat"], 0.0);
    assert_eq!(v["record"]["dim"], "inf");

    let out = reldim(&["figure", "2", "--grid", "0,1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# tool: reldim "));
    assert!(text.lines().any(|l| l.starts_with("# timestamp: ")));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# fig 3 subset\ntheta = 0\ngrid = 1,2,3\n").unwrap();
    let path = cfg.to_str().unwrap();
    let rows = body(&reldim(&["figure", "3", "--config", path]));
    assert_eq!(rows.len(), 4);
    let rows = body(&reldim(&["figure", "3", "--config", path, "--grid", "4"]));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][2], fmt_num(2f64.powi(-5)));

    std::fs::write(&cfg, "theta = 0\nbias = 2\n").unwrap();
    assert_eq!(
        reldim(&["figure", "3", "--config", path]).status.code(),
        Some(2)
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fig2.csv");
    let out = reldim(&[
        "figure",
        "2",
        "--grid",
        "0:2.5:0.5",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&file).unwrap();
    let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "d,eps,accuracy");
    assert_eq!(rows.len(), 1 + 6 * 6);
}

#[test]
fn figure_tables_round_trip() {
    let rows = body(&reldim(&["figure", "2"]));
    assert_eq!(rows[0], ["d", "eps", "accuracy"]);
    for r in &rows[1..] {
        let d: usize = r[0].parse().unwrap();
        let eps: f64 = r[1].parse().unwrap();
        assert_eq!(r[2], fmt_num(two_ball_accuracy(d, eps).unwrap()));
    }
    let rows = body(&reldim(&["figure", "3", "--grid", "0.5:10:0.5"]));
    assert_eq!(rows[0], ["theta", "d", "f_theta"]);
    for r in &rows[1..] {
        let theta: f64 = r[0].parse().unwrap();
        let d: f64 = r[1].parse().unwrap();
        let want = if theta > -2.0 && theta < 0.0 {
            f_theta_two_cap(theta, d).unwrap()
        } else {
            f_theta_real(theta, d).unwrap()
        };
        assert_eq!(r[2], fmt_num(want));
        if theta == 0.0 && d.fract() == 0.0 {
            let printed: f64 = r[2].parse().unwrap();
            assert!((printed - (-(d + 1.0)).exp2()).abs() <= 1e-12 * printed);
        }
    }
}

#[test]
fn figure5_linear_degree_is_ambient_dimension() {
    let rows = body(&reldim(&[
        "figure",
        "5",
        "--d",
        "1,2,4",
        "--deg-max",
        "2",
        "--bias",
        "1.5",
    ]));
    assert_eq!(rows[0], ["d", "b", "deg", "intrinsic_dim"]);
    for r in rows[1..].iter().filter(|r| r[2] == "1") {
        let d: f64 = r[0].parse().unwrap();
        let dim: f64 = r[3].parse().unwrap();
        assert!((dim - d).abs() < 1e-5, "{r:?}");
    }
    let rows = body(&reldim(&["poly-dim", "--d", "3", "--deg-max", "3"]));
    assert_eq!(rows[0], ["d", "b", "deg", "p0", "intrinsic_dim"]);
    assert_eq!(rows.len(), 4);
}

#[test]
fn dim_of_six_ball() {
    let out = reldim(&["dim", "--d", "6", "--samples", "2000000", "--seed", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v["record"]["p_hat"].as_f64().unwrap();
    let exact = 2f64.powi(-7);
    assert!(
        (p - exact).abs() < 4.0 * (exact * (1.0 - exact) / 2e6).sqrt(),
        "{p}"
    );
}

#[test]
fn dim_from_points_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pts.csv");
    let mut rng = reldim::geometry::stream_rng(4, 0);
    let ball = reldim::geometry::BallSpec::unit(3).unwrap();
    let pts: Vec<_> = (0..600).map(|_| ball.sample(&mut rng)).collect();
    reldim::geometry::write_points_csv(std::fs::File::create(&file).unwrap(), &pts).unwrap();
    let out = reldim(&["dim", "--input", file.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["record"]["pairs"], 600 * 599);
    let dim = v["record"]["dim"].as_f64().unwrap();
    assert!((dim - 3.0).abs() < 0.5, "{dim}");
}

#[test]
fn learn_sim_one_shot_matches_f() {
    let rows = body(&reldim(&[
        "learn-sim",
        "--d",
        "3",
        "--eps",
        "0.5",
        "--theta",
        "0",
        "--k-train",
        "1",
        "--trials",
        "200000",
        "--samples",
        "100000",
        "--centre",
        "y",
        "--seed",
        "6",
    ]));
    assert_eq!(
        rows[0],
        [
            "d",
            "eps",
            "theta",
            "k_train",
            "trials",
            "P_hat_Y",
            "ciY_low",
            "ciY_high",
            "boundY_low",
            "boundY_high",
            "P_hat_X",
            "ciX_low",
            "ciX_high",
            "boundX_low",
            "boundX_high",
            "seed"
        ]
    );
    let p: f64 = rows[1][5].parse().unwrap();
    let f = f_theta(0.0, 3).unwrap();
    assert!(
        (p - f).abs() < 4.0 * (f * (1.0 - f) / 2e5).sqrt(),
        "{p} vs {f}"
    );
    assert_eq!(rows[1][15], "6");
}

#[test]
fn negative_theta_flag() {
    let rows = body(&reldim(&["fprob", "--theta", "-1", "--d", "50"]));
    let v: f64 = rows[1][2].parse().unwrap();
    assert!((v - f_theta(-1.0, 50).unwrap()).abs() < 1e-11);
}
