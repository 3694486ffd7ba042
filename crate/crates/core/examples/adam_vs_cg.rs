//! Adam and Fletcher–Reeves CG on the same single-path functional of
//! Example 4, at equal numbers of gradient evaluations.
//!
//!     cargo run --release --example adam_vs_cg -- [budget]

use cwi::driver::simulate_dataset;
use cwi::experiments::registry;
use cwi::objective::ObjectiveContext;
use cwi::optimizer::{cg_minimize, minimize, AdamParams};
use cwi::stochastic::{derive_seed, sample_path, SeedRole};

fn main() -> cwi::Result<()> {
    let budget: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(600);
    let mut spec = registry("ex4")?;
    spec.hyper.n_forward_paths = 1;
    let record = simulate_dataset(&spec, 1)?.remove(0);
    let mesh = spec.inverse_mesh()?;
    let path = sample_path(derive_seed(1, SeedRole::FunctionalPath, 0), mesh.m, mesh.tau);
    let ctx = ObjectiveContext::new(
        spec.hyper.objective_settings(),
        record.noisy,
        path,
        spec.coefficient_inverse(),
        spec.nonlinearity()?,
    )?;
    let x0 = vec![0.0; ctx.dim()];

    let adam = AdamParams {
        steps: budget - 1,
        ..spec.hyper.adam
    };
    let a = minimize(&mut ctx.evaluator(), x0.clone(), &adam, budget / 10, |_, _, _| {})?;
    let c = cg_minimize(&mut ctx.evaluator(), x0, budget)?;

    println!("{:>8} {:>14}   {:>8} {:>14}", "evals", "J (Adam)", "evals", "J (CG)");
    let rows = a.trace.len().max(c.trace.len());
    for r in 0..rows {
        let left = a.trace.get(r).map(|p| format!("{:>8} {:>14.6e}", p.step + 1, p.value)).unwrap_or_default();
        let right = c.trace.get(r * c.trace.len() / rows).map(|p| format!("{:>8} {:>14.6e}", p.step, p.value)).unwrap_or_default();
        println!("{left:>23}   {right}");
    }
    println!(
        "final J: Adam {:.6e} ({} evals), CG {:.6e} ({} evals)",
        a.final_value().unwrap(),
        a.grad_evals,
        c.final_value().unwrap(),
        c.grad_evals
    );
    Ok(())
}
