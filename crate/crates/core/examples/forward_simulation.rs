//! Integrates the stochastic wave equation for Example 1 and prints a few
//! statistics of the trajectory and its lateral traces.
//!
//!     cargo run --release --example forward_simulation -- [seed]

use cwi::experiments::registry;
use cwi::forward::{extract_cauchy, solve_forward};
use cwi::stochastic::{derive_seed, sample_path, SeedRole};

fn main() -> cwi::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = registry("ex1")?;
    let mesh = spec.forward_mesh()?;
    println!("mesh {:?}, CFL number {:.3}", mesh.shape(), mesh.cfl_number());

    let (u0, f) = spec.forward_initial()?;
    let path = sample_path(derive_seed(seed, SeedRole::ForwardPath, 0), mesh.m, mesh.tau);
    let u = solve_forward(&mesh, &u0, &f, &spec.coefficient_forward(), &spec.nonlinearity()?, &path)?;

    for k in [0, mesh.m / 4, mesh.m / 2, mesh.m] {
        let s = u.slice(k);
        let max = s.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        println!("t = {:.3}: max u = {max:8.4}, mean u = {mean:8.4}, W = {:+.4}", mesh.t(k), path.cumulative()[k]);
    }

    let data = extract_cauchy(&u, 0);
    let g_max = data.neumann_values().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("max |∂u/∂ν| on the observed edges: {g_max:.4}");
    Ok(())
}
