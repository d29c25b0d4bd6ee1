//! Threshold metrics and risk-coverage curves on a synthetic score set.

use oodlab::metrics::{aupr, auroc, coverage_curves, default_grid, miou_old, po_histogram, ScoredPoint};
use oodlab::RngStream;

fn main() -> oodlab::Result<()> {
    let mut rng = RngStream::new(3, 0);
    let classes = 3;
    let points: Vec<ScoredPoint> = (0..2000)
        .map(|_| {
            let is_outlier = rng.next_f64() < 0.1;
            let truth = if is_outlier { 5 } else { 1 + rng.below(classes as usize) as u32 };
            // outliers score higher on average; inliers are sometimes misclassified
            let score = (rng.next_f64() * 0.7 + if is_outlier { 0.3 } else { 0.0 }).min(1.0);
            let predicted = if rng.next_f64() < 0.2 + score * 0.3 { 1 + (truth % classes) } else { truth.min(classes) };
            ScoredPoint { score, is_outlier, predicted, truth }
        })
        .collect();

    println!("AUROC {:.4}  AUPR {:.4}  mIoU_old {:.2}", auroc(&points)?, aupr(&points)?, miou_old(&points, classes)?);
    println!();
    print!("{}", coverage_curves(&points, classes, &default_grid(10))?.to_csv());
    println!();
    print!("{}", po_histogram(&points)?.to_csv());
    Ok(())
}
