//! End-to-end reconstruction of the Example 1 source at desk scale
//! (8 sample paths, 3 outer iterations, 3000 Adam steps each), written to a
//! run directory with the same layout as `cwi invert`.
//!
//!     cargo run --release --example reconstruct_ex1 -- [out_dir] [seed]

use std::path::PathBuf;

use cwi::cli::invert;
use cwi::config::Config;

fn main() -> cwi::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/example-ex1-desk".into()));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let config = Config {
        experiment: Some("ex1-desk".into()),
        seed,
        ..Config::default()
    }
    .resolve()?;

    let summary = invert(&config, &out)?;
    println!("relative L2 error of the averaged source: {:.4}", summary.error.unwrap_or(f64::NAN));
    println!("per-sample errors: {:?}", summary.per_sample_errors);
    println!("consecutive differences: {:?}", summary.consecutive);
    let (v, x, y) = summary.max_relative_difference;
    println!("largest relative difference {v:.3} at ({x:.3}, {y:.3})");
    println!("artifacts in {}", out.display());
    Ok(())
}
