//! Seed splitting, Brownian increments and multiplicative measurement noise.
//!
//!     cargo run --example noise_and_paths -- [master_seed]

use cwi::forward::{extract_cauchy, CauchyData};
use cwi::stochastic::{apply_noise, derive_seed, sample_path_with, BrownianVariance, SeedRole};
use cwi::{Field, Mesh};

fn main() -> cwi::Result<()> {
    let master: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let mesh = Mesh::reference();
    for role in [SeedRole::ForwardPath, SeedRole::Noise, SeedRole::FunctionalPath] {
        let seeds: Vec<String> = (0..3).map(|i| format!("{:016x}", derive_seed(master, role, i))).collect();
        println!("{role:?}: {}", seeds.join(" "));
    }

    for law in [BrownianVariance::Tau, BrownianVariance::SqrtTau] {
        let n = 2000;
        let var: f64 = (0..n)
            .map(|i| {
                let p = sample_path_with(derive_seed(master, SeedRole::ForwardPath, i), mesh.m, mesh.tau, law);
                p.increments.iter().map(|d| d * d).sum::<f64>() / p.len() as f64
            })
            .sum::<f64>()
            / n as f64;
        println!("{law:?}: mean ΔW² = {var:.5} (std-dev {:.5}²)", law.std_dev(mesh.tau));
    }

    let clean: CauchyData = extract_cauchy(&Field::constant(mesh, 1.0), 0);
    for delta in [0.0, 0.05, 0.1] {
        let noisy = apply_noise(&clean, delta, derive_seed(master, SeedRole::Noise, 0))?;
        let rel: Vec<f64> = noisy.dirichlet_values().map(|v| v - 1.0).collect();
        let max = rel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = rel.iter().map(|v| v.abs()).sum::<f64>() / rel.len() as f64;
        println!("δ = {delta}: max |f/f* − 1| = {max:.4}, mean = {mean:.4}");
    }
    Ok(())
}
