//! Trains the per-point classifier on a few augmented sweeps with two
//! objectives and compares the outlier ranking on a held-out sweep.

use oodlab::bench::{build_data, score_points, BenchConfig};
use oodlab::metrics::{aupr, auroc};
use oodlab::model::{train, LossMode, TrainConfig};
use oodlab::RngStream;

fn main() -> oodlab::Result<()> {
    let cfg = BenchConfig { scans: 24, ..BenchConfig::default() };
    let data = build_data(&cfg, 0)?;
    println!("{} train scenes, {} eval scenes", data.train.len(), data.eval.len());
    for mode in [LossMode::AbstainStatic, LossMode::Ce] {
        let tc = TrainConfig { mode, epochs: 6, ..cfg.train.clone() };
        let model = train(&data.train, cfg.classes, &tc, &cfg.loss, &mut RngStream::new(0, 4))?;
        let points = score_points(&model, &data.eval, cfg.classes)?;
        println!("\n{}", mode.name());
        print!("{}", model.log_csv());
        println!("eval AUPR {:.4}  AUROC {:.4}", aupr(&points)?, auroc(&points)?);
    }
    Ok(())
}
