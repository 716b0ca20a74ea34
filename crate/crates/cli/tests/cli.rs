use std::path::Path;
use std::process::{Command, Output};

fn odrpo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odrpo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows (provenance comment and header removed), split on commas.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(csv: &str) -> &str {
    csv.lines().find(|l| !l.starts_with('#')).unwrap()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn grpo_advantages_for_a_balanced_pair() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "g.csv", "group_id,r_1,r_2,r_3,r_4\ng1,1,1,2,2\n");
    let out = odrpo(&["advantage", "--input", &input, "--estimator", "grpo"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# "));
    assert_eq!(header(&text), "group_id,rollout,reward,advantage");
    let adv: Vec<f64> = rows(&text).iter().map(|r| f(&r[3])).collect();
    assert_eq!(adv, vec![-1.0, -1.0, 1.0, 1.0]);
}

#[test]
fn empty_input_names_missing_header() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.csv", "");
    let out = odrpo(&["advantage", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("group_id,r_1,...,r_G"), "{}", stderr(&out));
}

#[test]
fn malformed_cell_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.csv", "group_id,r_1,r_2\na,1,2\nb,1,two\n");
    let out = odrpo(&["advantage", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn off_scale_reward_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "g.csv", "group_id,r_1,r_2\na,1,7\n");
    let out = odrpo(&["advantage", "--input", &input, "--scale-k", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn per_bin_columns_sum_to_advantage() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "g.csv",
        "group_id,r_1,r_2,r_3,r_4,r_5\na,1,3,3,5,2\nb,0.5,2,6,2,\nc,2,2,2,2,2\n",
    );
    let weights = dir.path().join("w.csv");
    let out = odrpo(&[
        "advantage",
        "--input",
        &input,
        "--scale-levels",
        "0.5,1,2,3,5,6",
        "--estimator",
        "odrpo",
        "--weights",
        "gini-med",
        "--per-bin",
        "--weights-out",
        weights.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(header(&text), "group_id,rollout,reward,advantage,bin_1,bin_2,bin_3,bin_4,bin_5,bin_6");
    let data = rows(&text);
    assert_eq!(data.len(), 5 + 4 + 5);
    for r in &data {
        let total: f64 = r[4..].iter().map(|c| f(c)).sum();
        assert!((total - f(&r[3])).abs() < 1e-12, "{r:?}");
    }
    let diag = std::fs::read_to_string(weights).unwrap();
    assert_eq!(header(&diag), "group_id,bin,mu,weight");
    assert_eq!(rows(&diag).len(), 3 * 6);
}

#[test]
fn per_bin_needs_ordinal_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "g.csv", "group_id,r_1,r_2\na,1,2\n");
    let out = odrpo(&["advantage", "--input", &input, "--estimator", "grpo", "--per-bin"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_mean_group_is_an_estimator_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "z.csv", "group_id,r_1,r_2\nz,0,0\n");
    let out = odrpo(&["advantage", "--input", &input, "--estimator", "maxrl", "--scale-levels", "0,1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn curl_scan_defaults() {
    let out = odrpo(&["curl-scan"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(header(&text), "estimator,K,M,mac,max_abs");
    let data = rows(&text);
    assert_eq!(data.len(), 8 * 4 * 5);
    let cell = |e: &str, k: &str, m: &str| {
        data.iter().find(|r| r[0] == e && r[1] == k && r[2] == m).map(|r| f(&r[3])).unwrap()
    };
    assert!((cell("grpo", "3", "2") - 2.0).abs() < 1e-12);
    assert!((cell("maxrl", "3", "2") - 1.0 / 15.0).abs() < 1e-12);
    for r in data.iter().filter(|r| r[0].starts_with("odrpo") && !r[0].ends_with("gini-median")) {
        assert!(f(&r[3]) <= 1e-9, "{r:?}");
    }
    // canonical ordering does not depend on the thread count
    let serial = odrpo(&["curl-scan", "--threads", "1"]);
    assert_eq!(stdout(&serial).lines().skip(1).collect::<Vec<_>>(), text.lines().skip(1).collect::<Vec<_>>());
    assert_eq!(stdout(&odrpo(&["curl-scan"])), text);
}

#[test]
fn curl_scan_guard() {
    let out = odrpo(&["curl-scan", "--k-min", "12", "--k-max", "12", "--m-min", "12", "--m-max", "12"]);
    assert_eq!(out.status.code(), Some(4));
    let bad = odrpo(&["curl-scan", "--k-min", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn objective_table() {
    let out = odrpo(&["objective", "--group-size", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(header(&text), "P,beta,alpha,beta_minus_alpha,arcsin_grad");
    let data = rows(&text);
    assert_eq!(data.len(), 21);
    for r in &data {
        assert!((f(&r[3]) - 1.0).abs() < 1e-12);
    }
    assert_eq!(data[0][4], "inf");
    assert_eq!(data[20][4], "inf");

    let large = rows(&stdout(&odrpo(&["objective", "--group-size", "512", "--points", "3"])));
    let mid = &large[1];
    assert_eq!(f(&mid[0]), 0.5);
    assert!((f(&mid[3]) - f(&mid[4])).abs() / f(&mid[4]) < 0.01, "{mid:?}");
    for r in &large {
        assert!(r.iter().all(|c| c != "nan"), "{r:?}");
    }
}

#[test]
fn rater_sim_noiseless_and_noisy() {
    let dir = tempfile::tempdir().unwrap();
    let resp = dir.path().join("resp.csv");
    let clean = odrpo(&[
        "rater-sim",
        "--datapoints",
        "50",
        "--noise-width",
        "0",
        "--outlier-rate",
        "0",
        "--responses-out",
        resp.to_str().unwrap(),
    ]);
    assert!(clean.status.success(), "{}", stderr(&clean));
    let text = stdout(&clean);
    assert_eq!(header(&text), "datapoint,W,chi2,p_value,flip_rate");
    for r in rows(&text) {
        assert_eq!(f(&r[1]), 1.0);
        assert_eq!(f(&r[4]), 0.0);
    }
    assert!(stderr(&clean).contains("median_W=1 "), "{}", stderr(&clean));
    let per_response = std::fs::read_to_string(resp).unwrap();
    assert_eq!(header(&per_response), "datapoint,response,mean,std,skew,kurtosis");
    assert_eq!(rows(&per_response).len(), 50 * 8);

    let noisy = odrpo(&["rater-sim", "--seed", "5"]);
    let data = rows(&stdout(&noisy));
    assert_eq!(data.len(), 1000);
    let mut ws: Vec<f64> = data.iter().map(|r| f(&r[1])).collect();
    ws.sort_by(|a, b| a.total_cmp(b));
    assert!(ws[500] < 0.9, "median {}", ws[500]);
    let threaded = stdout(&odrpo(&["rater-sim", "--seed", "5", "--threads", "2"]));
    assert_eq!(rows(&threaded), data);
}

#[test]
fn exact_training_trace_ascends() {
    let out = odrpo(&["train", "--scale-k", "4", "--lr", "0.2", "--steps", "50"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(header(&text), "step,J,expected_reward,adv_mean,adv_std,grad_norm");
    let j: Vec<f64> = rows(&text).iter().map(|r| f(&r[1])).collect();
    assert_eq!(j.len(), 50);
    assert!(j.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn sampled_training_is_seeded() {
    let args = ["train", "--mode", "sampled", "--judge", "--votes", "3", "--steps", "30", "--seed", "8"];
    let a = odrpo(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&odrpo(&args)));
}

#[test]
fn exact_training_guard() {
    let out = odrpo(&["train", "--scale-k", "10", "--group-size", "40", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn vote_sweep_rows_and_deterministic_judge() {
    let out = odrpo(&["vote-sweep", "--steps", "20", "--deterministic-judge"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(header(&text), "N,estimator,final_J,final_expected_reward");
    let data = rows(&text);
    assert_eq!(data.len(), 4 * 5);
    for e in ["grpo", "maxrl", "odrpo-std-unit", "odrpo-std-gini", "odrpo-std-gini-median"] {
        let finals: Vec<&Vec<String>> = data.iter().filter(|r| r[1] == e).collect();
        assert_eq!(finals.len(), 4);
        assert!(finals.iter().all(|r| r[2] == finals[0][2] && r[3] == finals[0][3]), "{e}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# exact run\nscale_k = 3\nsteps = 4\nseed = 2\n");
    let from_file = rows(&stdout(&odrpo(&["train", "--config", &cfg])));
    assert_eq!(from_file.len(), 4);
    let overridden = rows(&stdout(&odrpo(&["train", "--config", &cfg, "--steps", "6"])));
    assert_eq!(overridden.len(), 6);
    assert_eq!(overridden[..4], from_file[..]);

    let bad = write(dir.path(), "bad.cfg", "unknown_key = 1\n");
    assert_eq!(odrpo(&["train", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn writes_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obj.csv");
    let out = odrpo(&["objective", "--points", "5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let body = std::fs::read_to_string(path).unwrap();
    assert_eq!(rows(&body).len(), 5);
    assert!(body.ends_with('\n') && !body.contains('\r'));
}
