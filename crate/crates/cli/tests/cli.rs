use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use admnet::oracle::fixtures::diamond;
use admnet_cli::error::CliError;
use admnet_cli::io::NetworkFile;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn re(v: &Value) -> f64 {
    v["re"].as_f64().unwrap()
}

fn diamond_args(s: &str) -> Vec<String> {
    [
        "finite",
        "--network",
        data("diamond.json").to_str().unwrap(),
        "--source",
        "a",
        "--boundary",
        "g",
        "--s",
        s,
    ]
    .iter()
    .map(|x| x.to_string())
    .collect()
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn diamond_at_one() {
    let r = json_of(&strs(&diamond_args("1,0")));
    let res = &r["results"];
    assert!((re(&res["admittance"]["value"]["value"]) - 1.6).abs() < 1e-12);
    assert!((re(&res["green_diagonal"]["value"]) - 15.0 / 8.0).abs() < 1e-12);
    assert!((re(&res["voltages"]["values"]["b"]) - 0.8).abs() < 1e-12);
    assert!((re(&res["voltages"]["values"]["c"]) - 0.6).abs() < 1e-12);
    assert_eq!(res["stochastic"], Value::Bool(true));
    assert_eq!(r["passed"], Value::Bool(true));
    // every kind coincides at s = 1
    let radii: Vec<f64> = res["spectral_radii"]["kinds"]
        .as_object()
        .unwrap()
        .values()
        .map(|k| k["radius"]["value"].as_f64().unwrap())
        .collect();
    // t = 1 and t = |s| coincide
    assert_eq!(radii.len(), 4);
    for w in radii.windows(2) {
        assert!((w[0] - w[1]).abs() < 1e-12);
    }
    assert!((radii[0] - 1.0 / 6f64.sqrt()).abs() < 1e-10);
}

#[test]
fn diamond_series_converges_and_diverges() {
    let s = format!("{},{}", 0.3f64.cos(), 0.3f64.sin());
    let mut args = diamond_args(&s);
    args.push("--series".into());
    let r = json_of(&strs(&args));
    assert_eq!(r["results"]["series"]["status"], "converged");
    assert_eq!(r["passed"], Value::Bool(true));
    let series = re(&r["results"]["series"]["first_passage"]["b"]["value"]["value"]);
    let direct = re(&r["results"]["voltages"]["values"]["b"]);
    assert!((series - direct).abs() < 1e-10);

    let alpha = (1.0 / 8f64.sqrt()).acos() + 1e-3;
    let mut args = diamond_args(&format!("{},{}", alpha.cos(), alpha.sin()));
    args.push("--series".into());
    let r = json_of(&strs(&args));
    assert_eq!(r["results"]["series"]["status"], "diverged");
    assert!(r["results"]["admittance"]["value"]["value"]["re"].is_f64());
}

#[test]
fn monte_carlo_is_seeded() {
    let mut args = diamond_args("1,0");
    args.extend(["--kind", "tilde", "--mc-walks", "20000", "--seed", "7"].map(String::from));
    let a = run(&strs(&args));
    let b = run(&strs(&args));
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reports_are_byte_stable() {
    let args = [
        "infinite",
        "--generator",
        "tree:b=2",
        "--s",
        "1,0;0.5,0.2",
        "--n-max",
        "12",
        "--classify",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("admnet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad_json = dir.join("bad.json");
    std::fs::write(&bad_json, "{ \"vertices\": [").unwrap();
    let extra = dir.join("extra.json");
    std::fs::write(
        &extra,
        r#"{"vertices":["a","b"],"edges":[{"u":"a","v":"b","L":0,"R":1,"D":0,"C":2}]}"#,
    )
    .unwrap();
    let negative = dir.join("negative.json");
    std::fs::write(
        &negative,
        r#"{"vertices":["a","b"],"edges":[{"u":"a","v":"b","L":0,"R":-1,"D":0}]}"#,
    )
    .unwrap();

    let code = |args: &[&str]| run(args).status.code();
    let finite = |file: &Path, s: &str, boundary: &str| {
        code(&[
            "finite",
            "--network",
            file.to_str().unwrap(),
            "--source",
            "a",
            "--boundary",
            boundary,
            "--s",
            s,
        ])
    };
    assert_eq!(finite(&bad_json, "1,0", "b"), Some(2));
    assert_eq!(finite(&extra, "1,0", "b"), Some(2));
    assert_eq!(finite(&dir.join("missing.json"), "1,0", "b"), Some(2));
    assert_eq!(finite(&data("diamond.json"), "one", "g"), Some(2));
    assert_eq!(finite(&negative, "1,0", "b"), Some(3));
    assert_eq!(finite(&data("diamond.json"), "-1,0", "g"), Some(3));
    assert_eq!(finite(&data("diamond.json"), "1,0", "a"), Some(3));
    assert_eq!(finite(&data("diamond.json"), "1,0", "nowhere"), Some(3));
    assert_eq!(code(&["infinite", "--generator", "torus"]), Some(2));
    assert_eq!(code(&["infinite", "--generator", "tree:b=2:b=3"]), Some(2));
    assert_eq!(
        code(&[
            "tree",
            "--generator",
            "line",
            "--s",
            "1,0",
            "martin",
            "--x",
            "o",
            "--xi",
            "o.0"
        ]),
        Some(3)
    );
    assert_eq!(code(&["freegroup", "--k", "1"]), Some(3));
    assert_eq!(
        code(&[
            "--format",
            "csv",
            "finite",
            "--network",
            data("diamond.json").to_str().unwrap(),
            "--source",
            "a",
            "--boundary",
            "g",
            "--s",
            "1,0"
        ]),
        Some(2)
    );
    assert_eq!(code(&["nonsense"]), Some(2));

    let consistency = admnet::Error::Consistency {
        check: "x".into(),
        residual: 1.0,
        tolerance: 0.0,
    };
    assert_eq!(CliError::from(consistency).code(), 4);
    assert_eq!(
        CliError::from(admnet::Error::Singular("x".into())).code(),
        4
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn network_file_round_trip() {
    let file = NetworkFile::read(&data("diamond.json")).unwrap();
    let (net, _) = file.to_network().unwrap();
    assert_eq!(net, diamond());
    let written = NetworkFile::from_network(&net, &file.vertices);
    let text = serde_json::to_string(&written).unwrap();
    let again: NetworkFile = serde_json::from_str(&text).unwrap();
    assert_eq!(again, written);
    assert_eq!(again.to_network().unwrap().0, net);
}

fn verdict(uri: &str, n_max: &str) -> String {
    let r = json_of(&[
        "infinite",
        "--generator",
        uri,
        "--s",
        "1,0;0.5,0.2",
        "--n-max",
        n_max,
        "--classify",
    ]);
    r["results"]["verdict"].as_str().unwrap().to_string()
}

#[test]
fn classification_of_standard_generators() {
    assert_eq!(verdict("line", "30"), "recurrent");
    assert_eq!(verdict("tree:b=2", "40"), "transient");
    assert_eq!(verdict("grid2d", "30"), "recurrent");
}

#[test]
fn line_trace_is_two_over_n() {
    let r = json_of(&["infinite", "--generator", "line", "--n-max", "20"]);
    let t = &r["results"]["frequencies"][0]["trace"];
    for (n, v) in t["radii"]
        .as_array()
        .unwrap()
        .iter()
        .zip(t["values"].as_array().unwrap())
    {
        let n = n.as_f64().unwrap();
        assert!((re(v) - 2.0 / n).abs() < 1e-9);
    }
}

#[test]
fn infinite_kernels_report_identities() {
    let s = format!(
        "{},{}",
        (std::f64::consts::PI / 8.0).cos(),
        (std::f64::consts::PI / 8.0).sin()
    );
    let r = json_of(&[
        "infinite",
        "--generator",
        "tree:b=2",
        "--s",
        &s,
        "--tol",
        "1e-8",
        "--kernels",
        "--window",
        "o.0;o.1;o.0.1",
    ]);
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(
        r["results"]["frequencies"][0]["kernels"]["entries"]["o.0.1"]["f"]["value"]["re"].is_f64()
    );
}

#[test]
fn csv_sweep_table() {
    let out = run(&[
        "--format",
        "csv",
        "freegroup",
        "--k",
        "2",
        "--alpha-grid",
        "0:0.5:0.25",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,norm,closed_form,below_one,total_abs,bound");
    assert_eq!(lines.len(), 4);
}

#[test]
fn free_group_threshold() {
    let r = json_of(&[
        "freegroup",
        "--k",
        "2",
        "--assign",
        "s,1/s",
        "--alpha-grid",
        "0:1:0.1",
    ]);
    let res = &r["results"];
    let t = res["threshold_angle"]["value"].as_f64().unwrap();
    assert!((t - std::f64::consts::FRAC_PI_6).abs() < 1e-9);
    let n0 = res["rows"][0]["norm"]["value"].as_f64().unwrap();
    assert!((n0 - 3f64.sqrt() / 2.0).abs() < 1e-10);
    assert_eq!(r["passed"], Value::Bool(true));
}

fn truncation_addresses(b: usize, depth: usize) -> Vec<String> {
    let mut level = vec![String::from("o")];
    let mut all = level.clone();
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|p| (0..b).map(move |i| format!("{p}.{i}")))
            .collect();
        all.extend(level.iter().cloned());
    }
    all
}

#[test]
fn tree_subcommands() {
    let r = json_of(&[
        "tree",
        "--generator",
        "tree:b=2",
        "--s",
        "0.8,0.3",
        "martin",
        "--x",
        "o",
        "--xi",
        "o.1.0",
    ]);
    let k = &r["results"]["martin_kernel"]["value"];
    assert!((re(k) - 1.0).abs() < 1e-12 && k["im"].as_f64().unwrap().abs() < 1e-12);

    let dir = std::env::temp_dir().join(format!("admnet-tree-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let ones: serde_json::Map<String, Value> = truncation_addresses(2, 3)
        .into_iter()
        .map(|a| (a, serde_json::json!({"re": 1.0, "im": 0.0})))
        .collect();
    let h = dir.join("h.json");
    std::fs::write(
        &h,
        serde_json::to_string(&serde_json::json!({ "values": ones })).unwrap(),
    )
    .unwrap();
    let r = json_of(&[
        "tree",
        "--generator",
        "tree:b=2",
        "--s",
        "0.8,0.3",
        "--depth",
        "3",
        "represent",
        "--h",
        h.to_str().unwrap(),
    ]);
    assert!((re(&r["results"]["total"]["value"]) - 1.0).abs() < 1e-10);
    assert_eq!(r["passed"], Value::Bool(true));

    let leaves: serde_json::Map<String, Value> = truncation_addresses(2, 3)
        .into_iter()
        .filter(|a| a.len() == 7)
        .enumerate()
        .map(|(i, a)| (a, serde_json::json!({"re": 0.1 * i as f64, "im": 0.05})))
        .collect();
    let nu = dir.join("nu.json");
    std::fs::write(
        &nu,
        serde_json::to_string(&serde_json::json!({ "depth": 3, "values": leaves })).unwrap(),
    )
    .unwrap();
    let r = json_of(&[
        "tree",
        "--generator",
        "tree:b=2",
        "--s",
        "0.8,0.3",
        "--depth",
        "3",
        "integrate",
        "--nu",
        nu.to_str().unwrap(),
        "--x",
        "o",
    ]);
    // K(o, .) = 1, so the integral at the root is the total mass
    let total = r["results"]["total"].clone();
    assert!((re(&r["results"]["value"]["value"]) - re(&total)).abs() < 1e-12);
    assert_eq!(r["passed"], Value::Bool(true));

    let wrong_depth = run(&[
        "tree",
        "--generator",
        "tree:b=2",
        "--s",
        "0.8,0.3",
        "--depth",
        "2",
        "integrate",
        "--nu",
        nu.to_str().unwrap(),
        "--x",
        "o",
    ]);
    assert_eq!(wrong_depth.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}
