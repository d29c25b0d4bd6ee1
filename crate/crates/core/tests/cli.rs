use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::{array, Array1};
use oodlab::cli::{list_scenes, sha256_hex, FileDigest};
use oodlab::io::procedural::{export_family, AssetFamily};
use oodlab::io::write_scene;
use oodlab::losses::Beta;
use oodlab::model::{write_checkpoint, Layer, MlpParams};
use oodlab::{Point3, Scene};
use tempfile::TempDir;

fn oodlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oodlab"))
        .current_dir(dir)
        .env_remove("OODLAB_JOBS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Output digests listed in a manifest.
fn outputs(dir: &Path) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    v["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["path"].as_str().unwrap().to_string(), o["sha256"].as_str().unwrap().to_string()))
        .collect()
}

fn genscan(dir: &Path, out: &str, count: usize) {
    let cfg = format!("seed = 5\n[paths]\nout = \"{out}\"\n[scan]\ncount = {count}\n");
    write(dir, "gen.toml", &cfg);
    let r = oodlab(dir, &["genscan", "--config", "gen.toml"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
}

#[test]
fn genscan_writes_count_scene_pairs_deterministically() {
    let dir = TempDir::new().unwrap();
    genscan(dir.path(), "a", 3);
    write(dir.path(), "b.toml", "seed = 5\n[paths]\nout = \"b\"\n[scan]\ncount = 3\n");
    assert_eq!(code(&oodlab(dir.path(), &["genscan", "--config", "b.toml", "--jobs", "1"])), 0);
    let a = outputs(&dir.path().join("a"));
    assert_eq!(a.len(), 6);
    assert_eq!(a, outputs(&dir.path().join("b")));
    for (rel, digest) in &a {
        assert_eq!(&sha256_hex(&fs::read(dir.path().join("a").join(rel)).unwrap()), digest);
    }
    assert_eq!(list_scenes(&dir.path().join("a")).unwrap().len(), 3);

    write(dir.path(), "c.toml", "seed = 5\n[paths]\nout = \"c\"\n[scan]\ncount = 3\n");
    assert_eq!(code(&oodlab(dir.path(), &["genscan", "--config", "c.toml", "--seed", "6"])), 0);
    assert_ne!(a, outputs(&dir.path().join("c")));
}

#[test]
fn zero_azimuth_step_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.toml", "[scan]\nazimuth_step = 0.0\n");
    let r = oodlab(dir.path(), &["genscan", "--config", "bad.toml"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("scan.azimuth_step"), "{}", stderr(&r));
}

#[test]
fn unknown_key_and_bad_jobs_are_config_errors() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.toml", "[scan]\ncuont = 2\n");
    let r = oodlab(dir.path(), &["genscan", "--config", "bad.toml"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("cuont"));
    assert_eq!(code(&oodlab(dir.path(), &["gradcheck", "--jobs", "0"])), 2);
    assert_eq!(code(&oodlab(dir.path(), &["genscan", "--config", "missing.toml"])), 2);
}

#[test]
fn rerun_without_force_is_refused() {
    let dir = TempDir::new().unwrap();
    genscan(dir.path(), "s", 1);
    let r = oodlab(dir.path(), &["genscan", "--config", "gen.toml"]);
    assert_eq!(code(&r), 3);
    assert!(stderr(&r).contains("--force"));
    assert_eq!(code(&oodlab(dir.path(), &["genscan", "--config", "gen.toml", "--force"])), 0);
}

#[test]
fn jobs_env_var_is_accepted() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "g.toml", "[paths]\nout = \"o\"\n[gradcheck]\ninstances = 3\n");
    let r = Command::new(env!("CARGO_BIN_EXE_oodlab"))
        .current_dir(dir.path())
        .env("OODLAB_JOBS", "2")
        .args(["gradcheck", "--config", "g.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&r), 0, "{}", stderr(&r));
}

#[test]
fn synth_modes_and_warnings() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    genscan(d, "scans", 2);
    fs::create_dir(d.join("empty")).unwrap();
    export_family(AssetFamily::Angular, d.join("assets")).unwrap();

    write(d, "empty.toml", "[paths]\nscenes = \"scans\"\nassets = \"empty\"\nout = \"x\"\n");
    let r = oodlab(d, &["synth", "--config", "empty.toml"]);
    assert_eq!(code(&r), 2, "{}", stderr(&r));

    // no scene carries class 9, so resize has nothing to act on
    write(
        d,
        "resize.toml",
        "classes = 9\n[paths]\nscenes = \"scans\"\nout = \"r\"\n[synthesis]\nmode = \"resize\"\nresize_class = 9\n",
    );
    let r = oodlab(d, &["synth", "--config", "resize.toml"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(stderr(&r).contains("resize skipped"));
    for (a, b) in outputs(&d.join("r")).iter().filter(|o| !o.0.ends_with(".json")).zip(outputs(&d.join("scans"))) {
        assert_eq!(*a, b);
    }

    write(
        d,
        "zero.toml",
        "[paths]\nscenes = \"scans\"\nassets = \"assets\"\nout = \"z\"\n[synthesis]\ncount_p = 0.0\n",
    );
    let r = oodlab(d, &["synth", "--config", "zero.toml"]);
    assert_eq!(code(&r), 0);
    assert!(stderr(&r).contains("copied unchanged"));
    let z: Vec<_> = outputs(&d.join("z")).into_iter().filter(|o| !o.0.ends_with(".json")).collect();
    assert_eq!(z, outputs(&d.join("scans")));

    for out in ["a1", "a2"] {
        let cfg = format!("seed = 1\n[paths]\nscenes = \"scans\"\nassets = \"assets\"\nout = \"{out}\"\n[synthesis]\nmode = \"both\"\n");
        write(d, "asset.toml", &cfg);
        assert_eq!(code(&oodlab(d, &["synth", "--config", "asset.toml", "--force"])), 0);
    }
    assert_eq!(outputs(&d.join("a1")), outputs(&d.join("a2")));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("a1/merge_report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 2);
    assert!(report[0]["outcome"]["drawn"].is_u64());
}

fn train_cfg(d: &Path, name: &str, out: &str, epochs: usize, extra: &str) {
    let cfg = format!(
        "seed = 2\n[paths]\nscenes = \"scans\"\nout = \"{out}\"\n[train]\nepochs = {epochs}\nhidden = [8]\npoints_per_scene = 256\n{extra}"
    );
    write(d, name, &cfg);
}

#[test]
fn train_preconditions_determinism_and_divergence() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    genscan(d, "scans", 2);

    train_cfg(d, "ce.toml", "ce", 2, "mode = \"ce\"\n");
    let r = oodlab(d, &["train", "--config", "ce.toml"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(fs::read_to_string(d.join("ce/train_log.csv")).unwrap().lines().count(), 3);

    train_cfg(d, "dyn.toml", "dyn", 2, "mode = \"abstain+dynamic\"\n");
    let r = oodlab(d, &["train", "--config", "dyn.toml"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("outlier"));

    train_cfg(d, "zero.toml", "zero", 0, "mode = \"ce\"\n");
    let r = oodlab(d, &["train", "--config", "zero.toml"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("epochs"));

    train_cfg(d, "ce2.toml", "ce2", 2, "mode = \"ce\"\n");
    assert_eq!(code(&oodlab(d, &["train", "--config", "ce2.toml"])), 0);
    assert_eq!(outputs(&d.join("ce")), outputs(&d.join("ce2")));

    train_cfg(d, "boom.toml", "boom", 5, "mode = \"ce\"\nlearning_rate = 1e200\n");
    let r = oodlab(d, &["train", "--config", "boom.toml"]);
    assert_eq!(code(&r), 4, "{}", stderr(&r));
    assert!(stderr(&r).contains("last finite epoch"));
}

/// Two inlier classes at heights 0 and 1, synthetic outliers at height 3,
/// and a linear model that separates them exactly on the `z` feature.
fn perfect_fixture(d: &Path, with_outliers: bool) {
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30 {
        let (z, l) = match i % 3 {
            0 => (0.0, 1),
            1 => (1.0, 2),
            _ if with_outliers => (3.0, 4),
            _ => (0.0, 1),
        };
        pts.push(Point3::new(5.0 + i as f64, 1.0, z));
        labels.push(l);
    }
    let scene = Scene::new(pts, None, labels).unwrap();
    write_scene(&scene, d.join("scenes/velodyne/000000.bin"), d.join("scenes/labels/000000.label")).unwrap();
    // feature f = z / 2: logits (5 - 20f, 0, 40f - 30)
    let params = MlpParams {
        layers: vec![Layer { weight: array![[-20.0], [0.0], [40.0]], bias: Array1::from(vec![5.0, 0.0, -30.0]) }],
    };
    write_checkpoint(&d.join("model.ckpt"), &params, Beta::from([1.0; 3])).unwrap();
    let cfg = "classes = 2\n[paths]\nscenes = \"scenes\"\ncheckpoint = \"model.ckpt\"\nout = \"eval\"\n\
               [features]\nfeatures = [\"z\"]\nz_scale = 2.0\n[metrics]\ngrid_size = 25\n";
    write(d, "eval.toml", cfg);
}

#[test]
fn eval_perfect_classifier() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    perfect_fixture(d, true);
    let r = oodlab(d, &["eval", "--config", "eval.toml"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let summary = fs::read_to_string(d.join("eval/summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("rule,aupr,auroc,miou_old"));
    assert_eq!(lines.next(), Some("p_o,1,1,100"));
    let curves = fs::read_to_string(d.join("eval/curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("coverage,threshold,risk,aupr,auroc"));
    assert_eq!(curves.lines().count(), 1 + 25);
    let hist = fs::read_to_string(d.join("eval/histogram.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("bin_lo,bin_hi,inlier_count,outlier_count"));
    assert_eq!(hist.lines().count(), 11);
    assert!(summary.ends_with('\n') && !summary.contains('\r'));

    let first: Vec<FileDigest> =
        serde_json::from_str::<serde_json::Value>(&fs::read_to_string(d.join("eval/manifest.json")).unwrap())
            .map(|v| {
                v["outputs"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|o| FileDigest {
                        path: o["path"].as_str().unwrap().into(),
                        sha256: o["sha256"].as_str().unwrap().into(),
                    })
                    .collect()
            })
            .unwrap();
    assert_eq!(code(&oodlab(d, &["eval", "--config", "eval.toml", "--force"])), 0);
    let again = outputs(&d.join("eval"));
    assert_eq!(first.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect::<Vec<_>>(), again);
}

#[test]
fn eval_without_outliers_emits_na() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    perfect_fixture(d, false);
    let r = oodlab(d, &["eval", "--config", "eval.toml"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(stderr(&r).contains("no outlier points"));
    let summary = fs::read_to_string(d.join("eval/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("p_o,NA,NA,"));
}

#[test]
fn eval_rejects_mismatched_checkpoint() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    perfect_fixture(d, true);
    let cfg = fs::read_to_string(d.join("eval.toml")).unwrap().replace("[\"z\"]", "[\"z\", \"r\"]");
    write(d, "eval.toml", &cfg);
    assert_eq!(code(&oodlab(d, &["eval", "--config", "eval.toml"])), 2);
}

#[test]
fn gradcheck_passes_and_catches_sign_flips() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "ok.toml", "[paths]\nout = \"ok\"\n");
    let r = oodlab(d, &["gradcheck", "--config", "ok.toml"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let csv = fs::read_to_string(d.join("ok/gradcheck.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("loss,max_rel_error,worst_seed,pass"));
    assert_eq!(csv.lines().count(), 7);

    write(d, "flip.toml", "[paths]\nout = \"flip\"\n[gradcheck]\ninstances = 5\ninject_sign_flip = \"penalty\"\n");
    let r = oodlab(d, &["gradcheck", "--config", "flip.toml"]);
    assert_eq!(code(&r), 4);
    assert!(stderr(&r).contains("penalty"));
}
