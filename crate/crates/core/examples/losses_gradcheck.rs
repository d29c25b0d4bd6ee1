//! Evaluates each training objective on a tiny batch and checks every
//! analytic gradient against central differences.

use ndarray::{array, Array1};
use oodlab::gradcheck::{run_gradcheck, GradcheckConfig};
use oodlab::losses::{cce_loss, compute_alpha, softmax_head, total_loss, Beta, HeadOutput, LossConfig, PenaltyMode};

fn main() -> oodlab::Result<()> {
    // three inlier classes; rows are an inlier, a resized and a synthetic outlier
    let inlier = array![[6.0, -2.0, -2.0], [0.5, 0.2, 0.1], [-1.0, -1.5, -0.5]];
    let head = HeadOutput::new(inlier, Array1::from(vec![-3.0, 1.0, 2.0]))?;
    let labels = [1, 4, 5];
    let cfg = LossConfig::default();
    let p = softmax_head(&head);
    let alpha = compute_alpha(&head.inlier);
    println!("alpha: {:?}", alpha.values.to_vec());
    println!("p^o:   {:?}", p.p.column(3).to_vec());

    let beta = Beta::from(cfg.beta_init);
    let stat = total_loss(&p, &alpha, &labels, &cfg, PenaltyMode::Static, beta)?;
    let dyn_ = total_loss(&p, &alpha, &labels, &cfg, PenaltyMode::Dynamic, beta)?;
    let cce = cce_loss(&head, &labels, cfg.lambda_cce)?;
    println!("abstain + static penalty:  {:.6}", stat.value);
    println!("abstain + dynamic penalty: {:.6}  dL/dbeta {:?}", dyn_.value, dyn_.grad_beta);
    println!("ce + cce:                  {:.6}", cce.value);

    let report = run_gradcheck(0, &GradcheckConfig::default(), &cfg)?;
    print!("\n{}", report.to_csv());
    Ok(())
}
