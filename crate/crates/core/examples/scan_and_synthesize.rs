//! Ray casts one procedural sweep and injects outlier objects into it.

use oodlab::io::procedural::{family_assets, AssetFamily};
use oodlab::io::{generate_scan, LayoutConfig, ScanConfig};
use oodlab::synthesis::{augment_scene, SynthesisConfig, SynthesisMode};
use oodlab::{LabelSpace, RngStream};

fn main() -> oodlab::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let labels = LabelSpace::new(3)?;
    let mut rng = RngStream::new(seed, 1);
    let cfg = ScanConfig::default().with_random_layout(&LayoutConfig::default(), &mut rng)?;
    let scene = generate_scan(&cfg)?;
    println!("scan: {} points, {} obstacles", scene.len(), cfg.obstacles.len());

    let mut asset_rng = RngStream::new(seed, 3);
    let assets = family_assets(AssetFamily::Angular, 2000, &mut asset_rng)?;
    let synth = SynthesisConfig { mode: SynthesisMode::Both, ..SynthesisConfig::default() };
    let mut synth_rng = RngStream::new(seed, 2);
    let (augmented, report) = augment_scene(&scene, &assets, &synth, labels, &mut synth_rng);

    println!("objects drawn: {}", report.outcome.drawn);
    println!("  merged: {}", report.outcome.merged);
    println!(
        "  rejected by range / overlap / ground: {} / {} / {}",
        report.outcome.failed_range, report.outcome.failed_overlap, report.outcome.failed_ground
    );
    if let Some(r) = &report.resize {
        println!("resized instance: {} points, scale {:.2}", r.indices.len(), r.scale);
    }
    for label in 1..=labels.max_label() {
        println!("label {label}: {} points", augmented.count_label(label));
    }
    Ok(())
}
