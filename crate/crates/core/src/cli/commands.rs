use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Needs, RunConfig};
use super::manifest::{digest_file, sha256_hex, FileDigest, RunManifest, MANIFEST_FILE};
use super::{CliError, CommandReport};
use crate::gradcheck::run_gradcheck;
use crate::io::{encode_labels, encode_points, generate_scan, load_asset, read_scene, write_atomic, ObjectAsset};
use crate::losses::softmax_head;
use crate::metrics::{aupr, auroc, coverage_curves, default_grid, miou_old, po_histogram, ScoredPoint};
use crate::model::{
    encode_checkpoint, forward, predict_classes, read_checkpoint, train as train_model, training_sample, ScoringRule,
};
use crate::rng::{RngStream, ASSET_STREAM, GENERATOR, SCAN_STREAM, SYNTH_STREAM, TRAIN_STREAM};
use crate::scene::Scene;
use crate::synthesis::augment_scene;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const GRADCHECK_FILE: &str = "gradcheck.csv";
pub const MERGE_REPORT_FILE: &str = "merge_report.json";
pub const SUMMARY_HEADER: &str = "rule,aupr,auroc,miou_old";

/// Point and label file of one scene in a `velodyne/` + `labels/` tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneFiles {
    pub stem: String,
    pub points: PathBuf,
    pub labels: PathBuf,
}

impl SceneFiles {
    fn rel_points(stem: &str) -> String {
        format!("velodyne/{stem}.bin")
    }

    fn rel_labels(stem: &str) -> String {
        format!("labels/{stem}.label")
    }
}

/// Scenes under `dir`, sorted by file stem. Every `velodyne/<stem>.bin`
/// needs a `labels/<stem>.label`.
pub fn list_scenes(dir: &Path) -> Result<Vec<SceneFiles>, CliError> {
    let velodyne = dir.join("velodyne");
    let entries = fs::read_dir(&velodyne)
        .map_err(|e| CliError::Config(format!("paths.scenes: cannot list {}: {e}", velodyne.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Runtime(crate::Error::io(&velodyne, e)))?.path();
        if path.extension().is_none_or(|e| e != "bin") {
            continue;
        }
        let Some(stem) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else { continue };
        let labels = dir.join("labels").join(format!("{stem}.label"));
        if !labels.is_file() {
            return Err(CliError::Config(format!("paths.scenes: missing label file {}", labels.display())));
        }
        out.push(SceneFiles { stem, points: path, labels });
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("paths.scenes: no scenes in {}", velodyne.display())));
    }
    out.sort_by(|a, b| a.stem.cmp(&b.stem));
    Ok(out)
}

fn check_collisions(out_dir: &Path, rels: &[String], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    for rel in rels.iter().map(String::as_str).chain([MANIFEST_FILE]) {
        let p = out_dir.join(rel);
        if p.exists() {
            return Err(CliError::Collision(p));
        }
    }
    Ok(())
}

fn emit(out_dir: &Path, rel: String, bytes: &[u8]) -> Result<FileDigest, CliError> {
    write_atomic(&out_dir.join(&rel), bytes)?;
    Ok(FileDigest { path: rel, sha256: sha256_hex(bytes) })
}

fn emit_scene(out_dir: &Path, stem: &str, scene: &Scene) -> Result<[FileDigest; 2], CliError> {
    Ok([
        emit(out_dir, SceneFiles::rel_points(stem), &encode_points(scene))?,
        emit(out_dir, SceneFiles::rel_labels(stem), &encode_labels(scene))?,
    ])
}

fn scene_rels(stems: impl IntoIterator<Item = String>) -> Vec<String> {
    stems.into_iter().flat_map(|s| [SceneFiles::rel_points(&s), SceneFiles::rel_labels(&s)]).collect()
}

fn input_digests(files: &[SceneFiles]) -> Result<Vec<FileDigest>, CliError> {
    let nested: Vec<[FileDigest; 2]> = files
        .par_iter()
        .map(|f| {
            Ok([
                digest_file(&f.points, f.points.display().to_string())?,
                digest_file(&f.labels, f.labels.display().to_string())?,
            ])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn read_scenes(files: &[SceneFiles]) -> Result<Vec<Scene>, CliError> {
    files.par_iter().map(|f| Ok(read_scene(&f.points, &f.labels)?)).collect()
}

fn finish(
    cfg: &RunConfig,
    command: &'static str,
    inputs: Vec<FileDigest>,
    mut outputs: Vec<FileDigest>,
    warnings: Vec<String>,
    summary: String,
) -> Result<CommandReport, CliError> {
    outputs.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        tool: "oodlab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        generator: GENERATOR,
        config: serde_json::to_value(cfg).expect("config serializes"),
        inputs,
        outputs,
    };
    manifest.write(&cfg.paths.out)?;
    Ok(CommandReport { out_dir: cfg.paths.out.clone(), manifest, warnings, summary })
}

pub fn genscan(cfg: &RunConfig, force: bool) -> Result<CommandReport, CliError> {
    cfg.validate(Needs::default())?;
    let out = &cfg.paths.out;
    let stems: Vec<String> = (0..cfg.scan.count).map(|k| format!("{k:06}")).collect();
    check_collisions(out, &scene_rels(stems.clone()), force)?;
    let base = cfg.scan.to_scan_config();
    let nested: Vec<[FileDigest; 2]> = stems
        .par_iter()
        .enumerate()
        .map(|(k, stem)| {
            let mut scan_cfg = base.clone();
            if cfg.scan.random_layout {
                let mut rng = RngStream::new(cfg.seed, SCAN_STREAM).derive(k as u64);
                scan_cfg.obstacles.extend(base.with_random_layout(&cfg.scan.layout, &mut rng)?.obstacles);
            }
            emit_scene(out, stem, &generate_scan(&scan_cfg)?)
        })
        .collect::<Result<_, CliError>>()?;
    let outputs: Vec<FileDigest> = nested.into_iter().flatten().collect();
    let summary = format!("wrote {} scenes to {}", stems.len(), out.display());
    finish(cfg, "genscan", Vec::new(), outputs, Vec::new(), summary)
}

fn load_assets(cfg: &RunConfig) -> Result<(Vec<ObjectAsset>, Vec<FileDigest>), CliError> {
    let dir = cfg.paths.assets.as_ref().expect("validated");
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Runtime(crate::Error::io(dir, e)))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("paths.assets: no asset files in {}", dir.display())));
    }
    let mut rng = RngStream::new(cfg.seed, ASSET_STREAM);
    let mut assets = Vec::with_capacity(files.len());
    let mut digests = Vec::with_capacity(files.len());
    for f in &files {
        assets.push(load_asset(f, cfg.synthesis.asset_samples, cfg.synthesis.asset_up, &mut rng)?);
        digests.push(digest_file(f, f.display().to_string())?);
    }
    Ok((assets, digests))
}

#[derive(serde::Serialize)]
struct SceneReport<'a> {
    scene: &'a str,
    #[serde(flatten)]
    report: crate::synthesis::AugmentReport,
}

pub fn synth(cfg: &RunConfig, force: bool) -> Result<CommandReport, CliError> {
    let needs_assets = cfg.synthesis.uses_assets();
    cfg.validate(Needs { scenes: true, assets: needs_assets, ..Needs::default() })?;
    let labels = cfg.labels()?;
    let out = &cfg.paths.out;
    let files = list_scenes(cfg.paths.scenes.as_ref().expect("validated"))?;
    let mut rels = scene_rels(files.iter().map(|f| f.stem.clone()));
    rels.push(MERGE_REPORT_FILE.into());
    check_collisions(out, &rels, force)?;

    let (assets, mut inputs) = if needs_assets { load_assets(cfg)? } else { (Vec::new(), Vec::new()) };
    inputs.extend(input_digests(&files)?);

    let results: Vec<_> = files
        .par_iter()
        .enumerate()
        .map(|(k, f)| {
            let scene = read_scene(&f.points, &f.labels)?;
            let mut rng = RngStream::new(cfg.seed, SYNTH_STREAM).derive(k as u64);
            let (augmented, report) = augment_scene(&scene, &assets, &cfg.synthesis, labels, &mut rng);
            let digests = emit_scene(out, &f.stem, &augmented)?;
            Ok((digests, report))
        })
        .collect::<Result<_, CliError>>()?;

    let mut outputs = Vec::new();
    let mut warnings = Vec::new();
    let mut reports = Vec::with_capacity(files.len());
    let (mut merged, mut resized) = (0u32, 0usize);
    for (f, (digests, report)) in files.iter().zip(results) {
        outputs.extend(digests);
        if cfg.synthesis.uses_resize() && report.resize.is_none() {
            warnings
                .push(format!("scene {}: no instance of class {}; resize skipped", f.stem, cfg.synthesis.resize_class));
        }
        if needs_assets && report.outcome.drawn == 0 {
            warnings.push(format!("scene {}: drew 0 objects; copied unchanged", f.stem));
        }
        merged += report.outcome.merged;
        resized += usize::from(report.resize.is_some());
        reports.push(SceneReport { scene: &f.stem, report });
    }
    let mut json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    json.push('\n');
    outputs.push(emit(out, MERGE_REPORT_FILE.into(), json.as_bytes())?);
    let summary = format!("augmented {} scenes: {merged} objects merged, {resized} instances resized", files.len());
    finish(cfg, "synth", inputs, outputs, warnings, summary)
}

pub fn train(cfg: &RunConfig, force: bool) -> Result<CommandReport, CliError> {
    cfg.validate(Needs { scenes: true, ..Needs::default() })?;
    let out = &cfg.paths.out;
    let files = list_scenes(cfg.paths.scenes.as_ref().expect("validated"))?;
    check_collisions(out, &[CHECKPOINT_FILE.into(), TRAIN_LOG_FILE.into()], force)?;
    let inputs = input_digests(&files)?;
    let scenes = read_scenes(&files)?;
    let data = scenes.iter().map(|s| training_sample(s, &cfg.features)).collect::<crate::Result<Vec<_>>>()?;
    let mut rng = RngStream::new(cfg.seed, TRAIN_STREAM);
    let model = train_model(&data, cfg.classes, &cfg.train, &cfg.loss, &mut rng)?;
    let outputs = vec![
        emit(out, CHECKPOINT_FILE.into(), &encode_checkpoint(&model.params, model.beta))?,
        emit(out, TRAIN_LOG_FILE.into(), model.log_csv().as_bytes())?,
    ];
    let last = model.log.last().expect("epochs >= 1");
    let summary = format!("trained {} for {} epochs, final loss {}", cfg.train.mode.name(), last.epoch, last.loss);
    finish(cfg, "train", inputs, outputs, Vec::new(), summary)
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

pub fn eval(cfg: &RunConfig, force: bool) -> Result<CommandReport, CliError> {
    cfg.validate(Needs { scenes: true, checkpoint: true, ..Needs::default() })?;
    let out = &cfg.paths.out;
    let ckpt = cfg.paths.checkpoint.as_ref().expect("validated");
    let files = list_scenes(cfg.paths.scenes.as_ref().expect("validated"))?;
    check_collisions(out, &[SUMMARY_FILE.into(), CURVES_FILE.into(), HISTOGRAM_FILE.into()], force)?;

    let (params, _) = read_checkpoint(ckpt)?;
    if params.input_dim() != cfg.features.dim() {
        return Err(CliError::Config(format!(
            "features: {} configured features but the checkpoint expects {}",
            cfg.features.dim(),
            params.input_dim()
        )));
    }
    if params.classes() != cfg.classes as usize {
        return Err(CliError::Config(format!(
            "classes = {} but the checkpoint has {} inlier classes",
            cfg.classes,
            params.classes()
        )));
    }
    let mut inputs = vec![digest_file(ckpt, ckpt.display().to_string())?];
    inputs.extend(input_digests(&files)?);
    let scenes = read_scenes(&files)?;
    let classes = cfg.classes;

    // One vector of scored points per rule, scenes concatenated in order.
    let per_scene: Vec<Vec<Vec<ScoredPoint>>> = scenes
        .par_iter()
        .map(|scene| {
            let sample = training_sample(scene, &cfg.features)?;
            let head = forward(&sample.features, &params)?;
            let probs = softmax_head(&head);
            let predicted = predict_classes(&head.inlier);
            Ok(ScoringRule::ALL
                .iter()
                .map(|rule| {
                    rule.score(&head, &probs)
                        .into_iter()
                        .zip(&sample.labels)
                        .zip(&predicted)
                        .map(|((score, &truth), &predicted)| ScoredPoint {
                            score,
                            is_outlier: truth > classes,
                            predicted,
                            truth,
                        })
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    let mut by_rule: Vec<Vec<ScoredPoint>> = vec![Vec::new(); ScoringRule::ALL.len()];
    for scene in per_scene {
        for (acc, pts) in by_rule.iter_mut().zip(scene) {
            acc.extend(pts);
        }
    }
    let rule_points = |rule: ScoringRule| &by_rule[ScoringRule::ALL.iter().position(|&r| r == rule).unwrap()];

    let mut warnings = Vec::new();
    let po = rule_points(ScoringRule::OutlierProb);
    let outliers = po.iter().filter(|p| p.is_outlier).count();
    if outliers == 0 {
        warnings.push("eval set has no outlier points; AUPR and AUROC are NA".into());
    } else if outliers == po.len() {
        warnings.push("eval set has no inlier points; AUPR and AUROC are NA".into());
    }

    let mut summary_csv = format!("{SUMMARY_HEADER}\n");
    let mut summary = String::new();
    for (rule, pts) in ScoringRule::ALL.iter().zip(&by_rule) {
        let row = [aupr(pts).ok(), auroc(pts).ok(), miou_old(pts, classes).ok()].map(na);
        summary_csv.push_str(&format!("{},{}\n", rule.name(), row.join(",")));
        summary.push_str(&format!("{:>8}  aupr {}  auroc {}  miou_old {}\n", rule.name(), row[0], row[1], row[2]));
    }
    let curves = coverage_curves(rule_points(cfg.metrics.curve_rule), classes, &default_grid(cfg.metrics.grid_size))?;
    let hist = po_histogram(po)?;
    let outputs = vec![
        emit(out, SUMMARY_FILE.into(), summary_csv.as_bytes())?,
        emit(out, CURVES_FILE.into(), curves.to_csv().as_bytes())?,
        emit(out, HISTOGRAM_FILE.into(), hist.to_csv().as_bytes())?,
    ];
    finish(cfg, "eval", inputs, outputs, warnings, summary)
}

pub fn gradcheck(cfg: &RunConfig, force: bool) -> Result<CommandReport, CliError> {
    cfg.validate(Needs::default())?;
    let out = &cfg.paths.out;
    check_collisions(out, &[GRADCHECK_FILE.into()], force)?;
    let report = run_gradcheck(cfg.seed, &cfg.gradcheck, &cfg.loss)?;
    let csv = report.to_csv();
    let outputs = vec![emit(out, GRADCHECK_FILE.into(), csv.as_bytes())?];
    let done = finish(cfg, "gradcheck", Vec::new(), outputs, Vec::new(), csv.clone())?;
    if !report.all_pass() {
        let failed: Vec<&str> = report.rows.iter().filter(|r| !r.pass).map(|r| r.loss.name()).collect();
        return Err(CliError::Numeric(format!(
            "gradient check failed for {} (tolerance {:e})\n{csv}",
            failed.join(", "),
            cfg.gradcheck.tolerance
        )));
    }
    Ok(done)
}
