//! Trains every loss mode on procedural sweeps and prints median AUPR.
//!
//! `cargo run --release --example desk_benchmark -- [scans] [seeds]`

use std::time::Instant;

use oodlab::bench::{run_bench, BenchConfig};

fn main() -> oodlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = BenchConfig::default();
    if let Some(s) = args.next() {
        cfg.scans = s.parse().expect("scan count");
    }
    if let Some(s) = args.next() {
        cfg.seeds = (0..s.parse().expect("seed count")).collect();
    }
    let start = Instant::now();
    let report = run_bench(&cfg)?;
    print!("{}", report.to_csv());
    for (mode, aupr) in report.median_aupr() {
        println!("median AUPR {mode:>16}: {aupr:.2}");
    }
    println!("elapsed: {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
