#![allow(dead_code)]

use cwi::forward::{extract_cauchy, solve_forward, CauchyData, CoefficientA, DirichletTrace, Nonlinearity};
use cwi::objective::{ObjectiveContext, ObjectiveSettings};
use cwi::stochastic::{apply_noise, sample_path, BrownianPath, SampleRng};
use cwi::{Field, Mesh};
use nalgebra::{DMatrix, DVector};

pub fn ex1_coefficient() -> CoefficientA {
    CoefficientA::from_fn(|t, x, y| 10.0 * x * y * t * t)
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SampleRng::from_seed(seed);
    (0..n).map(|_| rng.uniform_symmetric()).collect()
}

/// Noisy data from a forward solve of a smooth source on `mesh`.
pub fn simulated_data(mesh: &Mesh, seed: u64, delta: f64) -> (Field, CauchyData, BrownianPath) {
    let src = |x: f64, y: f64| 2.0 * (3.0 * x).sin() * (2.0 * y).cos() + x * y;
    let u0 = mesh.sample_spatial(src);
    let f = DirichletTrace::stationary(mesh, src);
    let path = sample_path(seed, mesh.m, mesh.tau);
    let u = solve_forward(mesh, &u0, &f, &ex1_coefficient(), &Nonlinearity::sqrt_grad(), &path).unwrap();
    let clean = extract_cauchy(&u, 0);
    let noisy = apply_noise(&clean, delta, seed ^ 0x5eed).unwrap();
    (u, noisy, path)
}

/// The tiny instance: 6 time levels, 5×5 cells, data taken from a
/// pseudo-random (not PDE-consistent) field.
pub fn tiny_context(seed: u64) -> ObjectiveContext {
    let mesh = Mesh::new(6, 5, 5, 1.0, 1.0, 1.5, 0.0, 0.0).unwrap();
    let values = random_vec(mesh.len(), seed);
    let u = Field::from_vec(mesh, values).unwrap();
    ObjectiveContext::new(
        ObjectiveSettings::default(),
        extract_cauchy(&u, 0),
        sample_path(seed + 1, mesh.m, mesh.tau),
        ex1_coefficient(),
        Nonlinearity::sqrt_grad(),
    )
    .unwrap()
}

/// `J(x) = ½ xᵀHx + bᵀx + c`, recovered from values of `J` alone.
pub struct Quadratic {
    pub h: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

pub fn polarize(ctx: &ObjectiveContext) -> Quadratic {
    let n = ctx.dim();
    let j = |x: &[f64]| ctx.eval_j(x).unwrap();
    let zero = vec![0.0; n];
    let c = j(&zero);
    let unit = |i: usize, s: f64| {
        let mut x = zero.clone();
        x[i] = s;
        x
    };
    let jp: Vec<f64> = (0..n).map(|i| j(&unit(i, 1.0))).collect();
    let jm: Vec<f64> = (0..n).map(|i| j(&unit(i, -1.0))).collect();
    let mut h = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        h[(i, i)] = jp[i] + jm[i] - 2.0 * c;
        b[i] = 0.5 * (jp[i] - jm[i]);
        for k in 0..i {
            let mut x = unit(i, 1.0);
            x[k] = 1.0;
            let v = j(&x) - jp[i] - jp[k] + c;
            h[(i, k)] = v;
            h[(k, i)] = v;
        }
    }
    Quadratic { h, b, c }
}

impl Quadratic {
    /// Solution of `Hx = −b`.
    pub fn minimizer(&self) -> Vec<f64> {
        let chol = self.h.clone().cholesky().expect("Hessian is positive definite");
        chol.solve(&(-&self.b)).iter().copied().collect()
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
