//! The weight function on the reference domain: which edges are observed,
//! how large the weights get, and which of the admissibility conditions hold.
//!
//!     cargo run --example carleman_weights

use cwi::weights::{check_condition_psi2, classify_boundary, CarlemanParams};
use cwi::Mesh;

fn main() {
    let mesh = Mesh::reference();
    let p = CarlemanParams::default();
    let classes = classify_boundary(&mesh, &p);
    for e in &classes.edges {
        let (nx, ny) = e.edge.outward_normal();
        let share = e.nodes.iter().filter(|b| **b).count() as f64 / e.nodes.len() as f64;
        println!(
            "{:?} (ν = ({nx:+}, {ny:+})): observed = {}, nodes with ∇ψ·ν > 0: {:.0}%",
            e.edge,
            e.observed,
            100.0 * share
        );
    }

    let report = check_condition_psi2(&mesh, &p, mesh.t_final);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    println!("\n θ(t, ½, y) for y = 0, 0.75, 1.5:");
    for t in [0.0, 0.5, 1.0] {
        let row: Vec<String> = [0.0, 0.75, 1.5].iter().map(|&y| format!("{:.4}", p.theta(t, 0.5, y))).collect();
        println!("  t = {t:.1}: {}", row.join("  "));
    }
}
