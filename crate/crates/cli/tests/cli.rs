use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use multilad::graph::parse_edge_stream;
use multilad::{
    lad_detect, multilad_detect, AnomalyScoreSeries, DetectorConfig, LaplacianKind,
    PowerMeanConfig, SignatureSize,
};
use tempfile::TempDir;

const SMALL: &str = r#"
steps = 40
nodes = 60
views = 3
continuity = 0.5
seed = 3

[[rows]]
time = 0
kind = "start"
blocks = 2
p_in = 0.4
p_ex = 0.05

[[rows]]
time = 20
kind = "change_point"
blocks = 4
p_in = 0.4
p_ex = 0.05

[[rows]]
time = 30
kind = "event"
blocks = 4
p_in = 0.4
p_ex = 0.3
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_multilad"));
    c.env_remove("LAD_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_stream(dir: &TempDir, name: &str) -> PathBuf {
    let config = dir.path().join("small.toml");
    fs::write(&config, SMALL).unwrap();
    let out = dir.path().join(name);
    ok(&["generate", "--config", s(&config), "--out", s(&out)]);
    out
}

fn scores(path: &Path) -> AnomalyScoreSeries {
    AnomalyScoreSeries::parse_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Column-wise bit equality; the startup length is not stored in the file.
fn assert_same_scores(file: &Path, lib: &AnomalyScoreSeries) {
    let z = scores(file);
    assert_eq!(z.z_short, lib.z_short);
    assert_eq!(z.z_long, lib.z_long);
    assert_eq!(z.z_star, lib.z_star);
}

#[test]
fn generate_is_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let a = small_stream(&dir, "a.csv");
    let b = small_stream(&dir, "b.csv");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.truth.csv")).unwrap(),
        fs::read(dir.path().join("b.truth.csv")).unwrap()
    );

    let c = dir.path().join("c.csv");
    let config = dir.path().join("small.toml");
    ok(&["generate", "--config", s(&config), "--out", s(&c), "--seed", "4"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    // the environment variable stands in for --seed
    let d = dir.path().join("d.csv");
    let out = bin()
        .args(["generate", "--config", s(&config), "--out", s(&d)])
        .env("LAD_SEED", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&c).unwrap(), fs::read(&d).unwrap());
}

#[test]
fn generate_writes_truth_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = small_stream(&dir, "g.csv");
    let truth = fs::read_to_string(dir.path().join("g.truth.csv")).unwrap();
    assert_eq!(truth, "t,kind\n20,change_point\n30,event\n");
    let manifest: toml::Table =
        toml::from_str(&fs::read_to_string(dir.path().join("g.csv.manifest.toml")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"].as_str(), Some("generate"));
    assert_eq!(manifest["seed"].as_integer(), Some(3));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        assert!(Path::new(o.as_str().unwrap()).is_file());
    }
    let g = parse_edge_stream(&fs::read_to_string(out).unwrap(), None).unwrap();
    assert_eq!((g.num_steps(), g.num_views(), g.max_node_count()), (40, 3, 60));
}

#[test]
fn pure_config_has_benchmark_shape() {
    let dir = TempDir::new().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/pure.toml");
    let out = dir.path().join("pure.csv");
    ok(&["generate", "--config", config, "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("#@ steps=151 views=1 nodes=500"));
    let truth = fs::read_to_string(dir.path().join("pure.truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1 + 7);
}

#[test]
fn bad_configs_exit_2_and_missing_files_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("p_ex = 0.3", "p_ex = 0.5")).unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(code(&["generate", "--config", s(&bad), "--out", s(&out)]), 2);
    fs::write(&bad, "steps = \"many\"\n").unwrap();
    assert_eq!(code(&["generate", "--config", s(&bad), "--out", s(&out)]), 2);

    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&["generate", "--config", s(&missing), "--out", s(&out)]), 3);
    let good = dir.path().join("good.toml");
    fs::write(&good, SMALL).unwrap();
    let unwritable = dir.path().join("no-such-dir").join("x.csv");
    assert_eq!(code(&["generate", "--config", s(&good), "--out", s(&unwritable)]), 3);
}

#[test]
fn lad_on_constant_graph_scores_zero() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("const.csv");
    let mut text = String::from("# a triangle and a pendant edge, unchanged over time\n");
    for t in 0..20 {
        for (i, j) in [(0, 1), (1, 2), (0, 2), (2, 3)] {
            text.push_str(&format!("{t},0,{i},{j},1\n"));
        }
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("scores.csv");
    // windows are required for files that did not come from `generate`
    assert_eq!(code(&["detect", "--input", s(&input), "--method", "lad", "--out", s(&out)]), 2);
    for method in ["lad", "multilad", "activity", "maxlad", "meanlad"] {
        ok(&[
            "detect", "--input", s(&input), "--method", method, "--ws", "2", "--wl", "4", "--out",
            s(&out),
        ]);
        let z = scores(&out);
        assert_eq!(z.len(), 20);
        assert!(z.z_star.iter().all(|&v| v.abs() < 1e-12), "{method}: {:?}", z.z_star);
    }
}

#[test]
fn multilad_matches_library_and_reduces_to_lad() {
    let dir = TempDir::new().unwrap();
    let input = small_stream(&dir, "g.csv");
    let g = parse_edge_stream(&fs::read_to_string(&input).unwrap(), None).unwrap();
    let det = DetectorConfig {
        k: SignatureSize::Top(8),
        ..DetectorConfig::default()
    };
    let pm = PowerMeanConfig::new(-10.0).unwrap();

    let out = dir.path().join("multi.csv");
    ok(&[
        "detect", "--input", s(&input), "--method", "multilad", "--p", "-10", "--k", "8", "--out",
        s(&out),
    ]);
    assert_same_scores(&out, &multilad_detect(&g, &det, &pm).unwrap());

    // one view: power mean of a single spectrum is that spectrum
    let one = dir.path().join("one.csv");
    let mut single = String::new();
    for line in fs::read_to_string(&input).unwrap().lines() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 || fields[1] == "0" || fields[1] == "view" {
            single.push_str(line);
            single.push('\n');
        }
    }
    fs::write(&one, single.replace("views=3", "views=1")).unwrap();
    ok(&["detect", "--input", s(&one), "--method", "multilad", "--k", "8", "--out", s(&out)]);
    let g1 = parse_edge_stream(&fs::read_to_string(&one).unwrap(), None).unwrap();
    let lad = lad_detect(
        g1.view(0),
        &DetectorConfig {
            laplacian: LaplacianKind::Normalized,
            shift: pm.epsilon,
            ..det.clone()
        },
    )
    .unwrap();
    assert_same_scores(&out, &lad);
}

#[test]
fn output_does_not_depend_on_jobs() {
    let dir = TempDir::new().unwrap();
    let input = small_stream(&dir, "g.csv");
    let mut seen = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(format!("j{jobs}.csv"));
        ok(&[
            "--jobs", jobs, "detect", "--input", s(&input), "--method", "meanlad", "--out",
            s(&out),
        ]);
        seen.push(fs::read(&out).unwrap());
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn spectrum_dump_has_one_row_per_step() {
    let dir = TempDir::new().unwrap();
    let input = small_stream(&dir, "g.csv");
    let out = dir.path().join("s.csv");
    let dump = dir.path().join("spectrum.csv");
    ok(&[
        "detect", "--input", s(&input), "--method", "lad", "--k", "3", "--view", "2", "--out",
        s(&out), "--dump-spectrum", s(&dump),
    ]);
    let text = fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,lambda_1,lambda_2,lambda_3"));
    assert_eq!(lines.count(), 40);
    assert_eq!(
        code(&[
            "detect", "--input", s(&input), "--method", "activity", "--out", s(&out),
            "--dump-spectrum", s(&dump),
        ]),
        2
    );
}

#[test]
fn flag_misuse_exits_2() {
    let dir = TempDir::new().unwrap();
    let input = small_stream(&dir, "g.csv");
    let out = dir.path().join("s.csv");
    let base = ["detect", "--input", s(&input), "--out", s(&out)];
    let with = |extra: &[&str]| {
        let mut v = base.to_vec();
        v.extend_from_slice(extra);
        code(&v)
    };
    assert_eq!(with(&["--method", "spectral"]), 2);
    assert_eq!(with(&["--method", "lad", "--p", "2"]), 2);
    assert_eq!(with(&["--method", "lad", "--view", "3"]), 2);
    assert_eq!(with(&["--method", "lad", "--ws", "6", "--wl", "4"]), 2);
    assert_eq!(with(&["--method", "lad", "--k", "0"]), 2);
    assert_eq!(with(&["--method", "multilad", "--p", "0"]), 2);
    assert_eq!(code(&["bench", "no-such-family", "--trials", "1"]), 2);
    assert_eq!(code(&["bench", "pure", "--trials", "0"]), 2);
}

fn score_file(dir: &TempDir, z_star: &[f64]) -> PathBuf {
    let path = dir.path().join("scores.csv");
    let mut text = String::from("t,z_short,z_long,z_star\n");
    for (t, z) in z_star.iter().enumerate() {
        text.push_str(&format!("{t},{z},{z},{z}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn eval_perfect_and_shuffled_truth() {
    let dir = TempDir::new().unwrap();
    let planted = [16, 31, 61, 76, 91, 106, 136];
    let z: Vec<f64> = (0..151)
        .map(|t| if planted.contains(&t) { 1.0 + t as f64 } else { 0.0 })
        .collect();
    let scores = score_file(&dir, &z);
    let truth = dir.path().join("truth.csv");
    let rows: Vec<String> = planted.iter().map(|t| format!("{t},change_point")).collect();
    fs::write(&truth, format!("t,kind\n{}\n", rows.join("\n"))).unwrap();
    let first = ok(&["eval", "--scores", s(&scores), "--truth", s(&truth)]);
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert!(stdout.starts_with("Hits@7 = 1.000"), "{stdout}");
    let report = fs::read_to_string(dir.path().join("scores.hits.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().starts_with("7,1,136;106;91"));

    let mut shuffled = rows.clone();
    shuffled.reverse();
    shuffled.swap(0, 3);
    fs::write(&truth, format!("t,kind\n{}\n", shuffled.join("\n"))).unwrap();
    let second = ok(&["eval", "--scores", s(&scores), "--truth", s(&truth)]);
    assert_eq!(stdout, String::from_utf8(second.stdout).unwrap());
    assert_eq!(report, fs::read_to_string(dir.path().join("scores.hits.csv")).unwrap());

    let half = ok(&["eval", "--scores", s(&scores), "--truth", s(&truth), "-n", "3"]);
    assert!(String::from_utf8(half.stdout).unwrap().starts_with("Hits@3 = 0.429"));
}

#[test]
fn eval_rejects_misaligned_files() {
    let dir = TempDir::new().unwrap();
    let scores = score_file(&dir, &[0.0; 20]);
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, "t,kind\n5,event\n25,change_point\n").unwrap();
    assert_eq!(code(&["eval", "--scores", s(&scores), "--truth", s(&truth)]), 2);
    fs::write(&truth, "t,kind\n5,sometimes\n").unwrap();
    assert_eq!(code(&["eval", "--scores", s(&scores), "--truth", s(&truth)]), 2);
}

#[test]
fn bench_pure_single_trial() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let stdout = String::from_utf8(
        ok(&["bench", "pure", "--trials", "1", "--seed", "5", "--out", s(&out)]).stdout,
    )
    .unwrap();
    assert!(stdout.contains("pure (1 trials)"), "{stdout}");
    let report = fs::read_to_string(&out).unwrap();
    let lad = report.lines().find(|l| l.starts_with("pure,LAD,")).expect("LAD row");
    assert_eq!(lad, "pure,LAD,0,1,5,1,0,1");
    assert!(dir.path().join("bench.csv.manifest.toml").is_file());
}
