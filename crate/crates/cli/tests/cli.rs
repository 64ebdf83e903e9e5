use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bottomup::distributions::{normal_cdf, normal_quantile};
use bottomup::evaluation::mix_families;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bottomup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = run(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_csv(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Data rows of a CSV output, header comment and column header dropped.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const CALIBRATE: &[&str] = &[
    "calibrate",
    "--objective",
    "mix",
    "--theta",
    "-3.10",
    "--k",
    "10",
    "--alpha",
    "0.05",
    "--b",
    "100000",
    "--seed",
    "7",
];

#[test]
fn calibrate_is_reproducible_from_recorded_command() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("tt.json");
    let mut args = CALIBRATE.to_vec();
    args.extend(["-o", path_str(&first)]);
    ok(&args);
    let text = std::fs::read_to_string(&first).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["thresholds"].as_array().unwrap().len(), 9);

    let again = dir.path().join("again.json");
    let mut args = CALIBRATE.to_vec();
    args.extend(["--workers", "3", "-o", path_str(&again)]);
    ok(&args);
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());

    let recorded = json["generator"]["command"].as_str().unwrap();
    let replay = dir.path().join("replay.json");
    let mut args: Vec<&str> = recorded.split(' ').collect();
    args.extend(["-o", path_str(&replay)]);
    ok(&args);
    assert_eq!(text, std::fs::read_to_string(&replay).unwrap());
}

#[test]
fn calibrate_with_too_few_draws_is_a_usage_error() {
    let mut args = CALIBRATE.to_vec();
    *args.iter_mut().find(|a| **a == "100000").unwrap() = "10";
    let (c, err) = code(&args);
    assert_eq!(c, 2);
    assert!(err.contains("infeasible"), "{err}");
}

#[test]
fn apply_holm_example_and_large_p_values() {
    let dir = TempDir::new().unwrap();
    let input = write_csv(
        &dir,
        "in.csv",
        "family_id,p1,p2\nex,0.02,0.04\nnull,0.9,0.9\n",
    );
    let before = std::fs::read(&input).unwrap();
    let out = ok(&[
        "apply",
        "-i",
        path_str(&input),
        "--procedure",
        "holm",
        "--alpha",
        "0.05",
    ]);
    assert_eq!(
        data_rows(&out),
        [["ex", "1", "1", "2"], ["null", "0", "0", "0"]]
    );
    assert!(out.lines().next().unwrap().starts_with("# bottomup "));
    assert_eq!(before, std::fs::read(&input).unwrap());
}

#[test]
fn apply_all_large_p_values_rejects_nothing() {
    let dir = TempDir::new().unwrap();
    let rows: String = (0..5).map(|i| format!("f{i},0.9,0.9,0.9\n")).collect();
    let input = write_csv(&dir, "in.csv", &format!("family_id,p1,p2,p3\n{rows}"));
    let table = dir.path().join("t.json");
    ok(&[
        "calibrate",
        "--objective",
        "single",
        "--theta",
        "-2",
        "--k",
        "3",
        "--b",
        "2000",
        "-o",
        path_str(&table),
    ]);
    let ih = dir.path().join("ih.json");
    ok(&[
        "calibrate",
        "--objective",
        "mix",
        "--theta",
        "-2",
        "--k",
        "3",
        "--b",
        "2000",
        "--suite",
        "simes",
        "-o",
        path_str(&ih),
    ]);
    let mut runs: Vec<Vec<&str>> = [
        "bonferroni",
        "holm",
        "hommel",
        "gou",
        "bu-avg:-1.5",
        "ih-single:-1",
    ]
    .iter()
    .map(|p| vec!["--procedure", *p, "--b", "2000"])
    .collect();
    runs.push(vec!["--thresholds", path_str(&table)]);
    runs.push(vec!["--thresholds", path_str(&ih)]);
    for extra in runs {
        let mut args = vec!["apply", "-i", path_str(&input)];
        args.extend(extra);
        let rows = data_rows(&ok(&args));
        assert_eq!(rows.len(), 5);
        assert!(
            rows.iter().all(|r| r[1..] == ["0", "0", "0", "0"]),
            "{args:?}"
        );
    }
}

#[test]
fn apply_summary_on_generated_dataset() {
    let dir = TempDir::new().unwrap();
    let families = mix_families(5, -1.80, 0.5, 248, 17).unwrap();
    let mut text = String::from("family_id,p1,p2,p3,p4,p5\n");
    for (i, f) in families.iter().enumerate() {
        let cols: Vec<String> = f.iter().map(|x| format!("{x:e}")).collect();
        text.push_str(&format!("s{i},{}\n", cols.join(",")));
    }
    let input = write_csv(&dir, "subgroups.csv", &text);
    let decisions = dir.path().join("d.csv");
    let out = ok(&[
        "apply",
        "-i",
        path_str(&input),
        "--procedure",
        "bu-mix:-1.80",
        "--b",
        "5000",
        "--seed",
        "3",
        "--summary",
        "-o",
        path_str(&decisions),
    ]);
    let summary = data_rows(&out);
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0][0], "bu-mix:-1.80");
    assert_eq!(summary[0][1], "248");
    let rows = data_rows(&std::fs::read_to_string(&decisions).unwrap());
    assert_eq!(rows.len(), 248);
    assert!(rows
        .iter()
        .enumerate()
        .all(|(i, r)| r[0] == format!("s{i}") && r.len() == 7));
}

#[test]
fn apply_rejects_malformed_input() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "family_id,p1,p2\na,0.1\n",
        "family_id,p1,p2\na,0.1,1.5\n",
        "family_id,p1,p2\na,0.1,-0.01\n",
        "family_id,p1,p2\na,0.1,NaN\n",
        "family_id,p1,p2\na,0.1,x\n",
        "id,p1,p2\na,0.1,0.2\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let input = write_csv(&dir, &format!("bad{i}.csv"), text);
        let (c, err) = code(&["apply", "-i", path_str(&input), "--procedure", "holm"]);
        assert_eq!(c, 2, "{text:?}: {err}");
    }
    let input = write_csv(&dir, "k2.csv", "family_id,p1,p2\na,0.1,0.2\n");
    let table = dir.path().join("k3.json");
    ok(&[
        "calibrate",
        "--objective",
        "mix",
        "--theta",
        "-2",
        "--k",
        "3",
        "--b",
        "2000",
        "-o",
        path_str(&table),
    ]);
    let (c, err) = code(&[
        "apply",
        "-i",
        path_str(&input),
        "--thresholds",
        path_str(&table),
    ]);
    assert_eq!(c, 2);
    assert!(err.contains("K = 3"), "{err}");
}

#[test]
fn apply_clamps_exact_zero_and_one() {
    let dir = TempDir::new().unwrap();
    let input = write_csv(&dir, "edge.csv", "family_id,p1,p2\na,0,1\n");
    let out = run(&["apply", "-i", path_str(&input), "--procedure", "hommel"]);
    assert!(out.status.success());
    assert_eq!(
        data_rows(&String::from_utf8(out.stdout).unwrap()),
        [["a", "1", "0", "1"]]
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("clamped"));
}

#[test]
fn io_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&["apply", "-i", path_str(&missing), "--procedure", "holm"]).0,
        3
    );
    let nowhere = dir.path().join("no/such/dir/out.txt");
    assert_eq!(
        code(&[
            "region",
            "--procedure",
            "holm",
            "--res",
            "2",
            "-o",
            path_str(&nowhere)
        ])
        .0,
        3
    );
    let cfg = dir.path().join("absent.cfg");
    assert_eq!(
        code(&[
            "solve-theta",
            "--config",
            path_str(&cfg),
            "--k",
            "2",
            "--power",
            "0.5"
        ])
        .0,
        3
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&["region", "--procedure", "nosuch"]).0, 2);
    assert_eq!(code(&["region", "--procedure", "bu-mix"]).0, 2);
    assert_eq!(code(&["region", "--procedure", "holm", "--k", "4"]).0, 2);
    assert_eq!(
        code(&["region", "--procedure", "holm", "--fix", "p4=0.1"]).0,
        2
    );
    assert_eq!(code(&["exact", "--preset", "s4"]).0, 2);
    assert_eq!(code(&["solve-theta", "--k", "10", "--power", "1.5"]).0, 2);
    assert_eq!(code(&["frobnicate"]).0, 2);
    assert_eq!(
        code(&[
            "calibrate",
            "--objective",
            "mix",
            "--theta",
            "-1",
            "--k",
            "3",
            "--suite",
            "x"
        ])
        .0,
        2
    );
}

#[test]
fn simulate_writes_one_row_per_procedure_and_setting() {
    let out = ok(&[
        "simulate",
        "--k",
        "10",
        "--alpha",
        "0.05",
        "--theta-true",
        "-3.10",
        "--k1",
        "1..10,mix",
        "--reps",
        "2000",
        "--seed",
        "11",
        "--procedures",
        "hommel,gou,bu-mix:-3.10,bu-mix:-2.05,bu-single:-3.10",
        "--b",
        "2000",
    ]);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 55);
    let header = out.lines().nth(1).unwrap();
    assert_eq!(
        header,
        "procedure,K,k1_setting,theta_true,alpha,reps,seed,fwer,fwer_se,tpr,tpr_se"
    );
    assert!(out.lines().next().unwrap().contains("--seed=11"));
}

#[test]
fn simulate_bonferroni_power_and_null_level() {
    let (k, alpha, theta, reps) = (10usize, 0.05, -3.10, 40_000usize);
    let out = ok(&[
        "simulate",
        "--k",
        "10",
        "--theta-true",
        "-3.10",
        "--k1",
        "0,1",
        "--reps",
        "40000",
        "--seed",
        "5",
        "--procedures",
        "bonferroni,holm",
    ]);
    let rows = data_rows(&out);
    let cell = |name: &str, k1: &str, col: usize| -> String {
        rows.iter().find(|r| r[0] == name && r[2] == k1).unwrap()[col].clone()
    };
    let power = normal_cdf(normal_quantile(alpha / k as f64).unwrap() - theta);
    let tpr: f64 = cell("bonferroni", "1", 9).parse().unwrap();
    let se = (power * (1.0 - power) / reps as f64).sqrt();
    assert!((tpr - power).abs() <= 3.0 * se, "{tpr} vs {power}");
    assert!((power - 0.70).abs() < 0.01);
    for name in ["bonferroni", "holm"] {
        let fwer: f64 = cell(name, "0", 7).parse().unwrap();
        let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();
        assert!(fwer <= bound, "{name}: {fwer}");
        assert_eq!(cell(name, "0", 9), "NA");
    }
}

#[test]
fn simulate_output_independent_of_workers() {
    let args = [
        "simulate",
        "--k",
        "6",
        "--theta-true",
        "-2.5",
        "--k1",
        "2,mix",
        "--reps",
        "3000",
        "--seed",
        "9",
        "--procedures",
        "hommel,bu-mix:-2.5",
        "--b",
        "3000",
    ];
    let one = ok(&[&args[..], &["--workers", "1"]].concat());
    let many = ok(&[&args[..], &["--workers", "4"]].concat());
    assert_eq!(one, many);
}

#[test]
fn solve_theta_prints_six_decimals() {
    let out = ok(&[
        "solve-theta",
        "--alpha",
        "0.05",
        "--k",
        "10",
        "--power",
        "0.3",
    ]);
    let line = out.trim();
    assert_eq!(line.split('.').nth(1).unwrap().len(), 6, "{line}");
    let theta: f64 = line.parse().unwrap();
    assert!((theta + 2.051).abs() < 0.01, "{theta}");
}

#[test]
fn exact_s3_reports_boundary_and_both_tprs() {
    let out = ok(&["exact", "--preset", "s3"]);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    let results = json["results"].as_array().unwrap();
    let by_name = |n: &str| results.iter().find(|r| r["procedure"] == n).unwrap();
    let (bu, ih) = (by_name("bu"), by_name("ih"));
    let boundary = bu["boundaries"][0].as_f64().unwrap();
    assert!((boundary - 0.02521).abs() < 1e-5, "{boundary}");
    let (tpr_bu, tpr_ih) = (bu["tpr"].as_f64().unwrap(), ih["tpr"].as_f64().unwrap());
    assert!((tpr_bu - 0.1558337).abs() < 2e-4, "{tpr_bu}");
    assert!(tpr_ih > tpr_bu);
}

#[test]
fn region_grid_shape() {
    let out = ok(&[
        "region",
        "--procedure",
        "gou",
        "--k",
        "3",
        "--fix",
        "p3=0.03",
        "--res",
        "100",
    ]);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 10_000);
    assert!(rows
        .iter()
        .all(|r| r[0] == "gou" && r[3] == "0.03" && r.len() == 8));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write_csv(
        &dir,
        "run.cfg",
        "# campaign\nk = 4\ntheta_true = -2.0\nk1 = 1\nreps = 500\nseed = 21\nprocedures = \"holm\"\n",
    );
    let out = ok(&["--config", path_str(&cfg), "simulate", "--reps", "800"]);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..7], ["holm", "4", "1", "-2", "0.05", "800", "21"]);
    let header = out.lines().next().unwrap();
    assert!(
        header.contains("--reps=800") && header.contains("--seed=21"),
        "{header}"
    );

    let args: Vec<&str> = header
        .trim_start_matches("# bottomup ")
        .split(' ')
        .skip(1)
        .collect();
    let replay = ok(&args);
    assert_eq!(replay, out);

    let bad = write_csv(&dir, "bad.cfg", "k = 4\nnot_a_flag = 1\n");
    let (c, err) = code(&["simulate", "--config", path_str(&bad)]);
    assert_eq!(c, 2);
    assert!(err.contains("not-a-flag"), "{err}");
}
