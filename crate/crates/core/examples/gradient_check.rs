//! Central differences against the hand-derived gradient of the functional on
//! a small mesh with Example 1 coefficients.
//!
//!     cargo run --release --example gradient_check -- [n_dofs]

use cwi::forward::{extract_cauchy, solve_forward, CoefficientA, DirichletTrace, Nonlinearity};
use cwi::objective::{ObjectiveContext, ObjectiveSettings};
use cwi::stochastic::{sample_path, SampleRng};
use cwi::Mesh;

fn main() -> cwi::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let mesh = Mesh::new(10, 8, 8, 1.0, 1.0, 1.5, 0.0, 0.0)?;
    let a = CoefficientA::from_fn(|t, x, y| 10.0 * x * y * t * t);
    let f = Nonlinearity::sqrt_grad();
    let src = |x: f64, y: f64| (3.0 * x).sin() * (2.0 * y).cos();
    let path = sample_path(11, mesh.m, mesh.tau);
    let u = solve_forward(&mesh, &mesh.sample_spatial(src), &DirichletTrace::stationary(&mesh, src), &a, &f, &path)?;

    let mut ctx = ObjectiveContext::new(ObjectiveSettings::default(), extract_cauchy(&u, 0), path, a, f)?;
    let mut rng = SampleRng::from_seed(5);
    let prev: Vec<f64> = (0..ctx.dim()).map(|_| rng.uniform_symmetric()).collect();
    ctx.set_previous(&ctx.embed(&prev)?)?;
    let x: Vec<f64> = (0..ctx.dim()).map(|_| rng.uniform_symmetric()).collect();
    let g = ctx.grad_j(&x)?;

    println!("{:>6} {:>14} {:>14} {:>10}", "dof", "analytic", "central", "rel err");
    let mut worst = 0.0f64;
    for _ in 0..n {
        let d = (rng.uniform() * ctx.dim() as f64) as usize;
        // J is quadratic, so a unit step is exact up to rounding.
        let mut p = x.clone();
        p[d] += 1.0;
        let jp = ctx.eval_j(&p)?;
        p[d] -= 2.0;
        let jm = ctx.eval_j(&p)?;
        let fd = 0.5 * (jp - jm);
        let rel = (fd - g[d]).abs() / g[d].abs();
        worst = worst.max(rel);
        println!("{d:>6} {:>14.6e} {fd:>14.6e} {rel:>10.2e}", g[d]);
    }
    println!("worst relative error: {worst:.2e}");
    Ok(())
}
