use std::path::Path;
use std::process::{Command, Output};

use ctxlite::dataset::Dataset;
use ctxlite::ingest::load_csv;

const WORLD: &str = "users = 2\nn_labels = 3\nsessions_per_user_label = 2\nsession_min_ms = 8000\nsession_max_ms = 12000\n";

fn ctxlite(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxlite")).args(args).current_dir(cwd).output().expect("spawn ctxlite")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = ctxlite(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn usage_error(args: &[&str], cwd: &Path) -> String {
    let out = ctxlite(args, cwd);
    assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    String::from_utf8(out.stderr).unwrap()
}

fn logs_dir(dir: &Path) {
    std::fs::write(dir.join("w.cfg"), WORLD).unwrap();
    ok(&["synth", "--config", "w.cfg", "--seed", "4", "--out", "logs"], dir);
}

#[test]
fn pipeline_from_logs_to_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    logs_dir(dir);
    ok(&["ingest", "--logs", "logs", "--out", "data.csv"], dir);
    let data: Dataset<f64> = load_csv(&dir.join("data.csv")).unwrap();
    assert_eq!(data.labels.len(), 3);
    assert!(data.x.cols() >= 1000);

    ok(&["balance", "--in", "data.csv", "--k", "3", "--seed", "1", "--out", "bal.csv"], dir);
    let bal: Dataset<f64> = load_csv(&dir.join("bal.csv")).unwrap();
    let counts = bal.class_counts();
    assert!(counts.iter().all(|&c| c == counts[0]), "{counts:?}");
    assert_eq!(counts[0], *data.class_counts().iter().max().unwrap());

    ok(&["reduce", "--in", "bal.csv", "--kind", "pca", "--d", "5", "--model", "pca.txt", "--out", "z.csv"], dir);
    ok(&["reduce", "--in", "data.csv", "--model", "pca.txt", "--out", "zt.csv"], dir);
    let z: Dataset<f64> = load_csv(&dir.join("zt.csv")).unwrap();
    assert_eq!(z.x.shape(), (data.len(), 5));
    assert_eq!(z.y, data.y);

    for kind in ["knn", "svm", "cart", "random"] {
        let model = format!("{kind}.txt");
        ok(&["train", "--in", "z.csv", "--kind", kind, "--seed", "2", "--model", &model], dir);
        let stdout = ok(&["predict", "--in", "zt.csv", "--model", &model, "--out", "pred.csv"], dir);
        let acc: f64 = stdout.split_whitespace().nth(1).unwrap().parse().unwrap();
        let pred = std::fs::read_to_string(dir.join("pred.csv")).unwrap();
        let rows: Vec<&str> = pred.lines().skip(1).collect();
        assert_eq!(rows.len(), data.len());
        let hits = rows.iter().filter(|r| {
            let f: Vec<&str> = r.split(',').collect();
            f[1] == f[2]
        });
        assert!((hits.count() as f64 / rows.len() as f64 - acc).abs() < 1e-6);
        if kind != "random" {
            assert!(acc > 0.8, "{kind}: {acc}");
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    logs_dir(dir);
    ok(&["ingest", "--logs", "logs", "--out", "data.csv"], dir);
    let width = load_csv::<f64>(&dir.join("data.csv")).unwrap().x.cols();

    let msg = usage_error(&["reduce", "--in", "data.csv", "--kind", "pca", "--d", "5000", "--model", "m", "--out", "z"], dir);
    assert!(msg.contains("5000") && msg.contains(&width.to_string()), "{msg}");
    let msg = usage_error(&["balance", "--in", "data.csv", "--out", "b.csv"], dir);
    assert!(msg.contains("--seed"), "{msg}");
    usage_error(&["reduce", "--in", "data.csv", "--kind", "grp", "--d", "5", "--model", "m", "--out", "z"], dir);
    usage_error(&["train", "--in", "data.csv", "--kind", "svm", "--model", "m"], dir);
    usage_error(&["train", "--in", "data.csv", "--kind", "forest", "--model", "m"], dir);
    usage_error(&["bench", "--exp", "5", "--config", "c"], dir);

    let out = ctxlite(&["ingest", "--logs", "missing", "--out", "x.csv"], dir);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let top = ok(&["--help"], tmp.path());
    for sub in ["synth", "ingest", "balance", "reduce", "train", "predict", "bench", "report"] {
        assert!(top.contains(sub), "{sub}");
    }
    let cases: [(&str, &[&str]); 8] = [
        ("synth", &["--config", "--seed", "--out"]),
        ("ingest", &["--logs", "--enrich", "--out"]),
        ("balance", &["--in", "--k", "--seed", "--out"]),
        ("reduce", &["--in", "--kind", "--d", "--model", "--out", "--epochs"]),
        ("train", &["--in", "--kind", "--model", "--k", "--lambda", "--max-depth", "--export-tree"]),
        ("predict", &["--in", "--model", "--out", "--kind"]),
        ("bench", &["--exp", "--config", "--out", "--seed", "--threads"]),
        ("report", &["--in", "--out"]),
    ];
    for (sub, flags) in cases {
        let help = ok(&[sub, "--help"], tmp.path());
        for f in flags {
            assert!(help.contains(f), "{sub} --help lacks {f}");
        }
    }
}

#[test]
fn bench_report_is_reproducible_and_reloadable() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = "d_grid = 2, 3\nreducers = pca, grp, nmf\nrepeats = 1\nnmf_max_iter = 20\n\
               world.users = 2\nworld.n_labels = 3\nworld.sessions_per_user_label = 2\n\
               world.session_min_ms = 6000\nworld.session_max_ms = 9000\n\
               world.streams = light, accelerometer, ringer_mode, battery\n";
    std::fs::write(dir.join("bench.cfg"), cfg).unwrap();
    let stdout = ok(&["bench", "--exp", "all", "--config", "bench.cfg", "--seed", "9", "--out", "a"], dir);
    assert!(stdout.contains("report rows"));
    ok(&["bench", "--exp", "all", "--config", "bench.cfg", "--seed", "9", "--out", "b", "--threads", "2"], dir);
    let a = std::fs::read(dir.join("a/report.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b/report.csv")).unwrap());

    ok(&["report", "--in", "a", "--out", "figs"], dir);
    let fig = std::fs::read_dir(dir.join("figs")).unwrap().count();
    assert!(fig >= 4, "{fig} files");

    let with_seed = format!("{cfg}seed = 3\n");
    std::fs::write(dir.join("seeded.cfg"), with_seed).unwrap();
    let msg = usage_error(&["bench", "--exp", "1", "--config", "seeded.cfg", "--seed", "9", "--out", "c"], dir);
    assert!(msg.contains("seed"), "{msg}");
}
