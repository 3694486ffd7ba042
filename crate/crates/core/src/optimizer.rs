//! Adam, as used for every inner minimization, and a Fletcher–Reeves
//! conjugate-gradient baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A smooth function of a flat parameter vector.
pub trait DifferentiableObjective {
    fn dim(&self) -> usize;

    /// Returns `J(x)` and writes `∇J(x)` into `grad`.
    fn value_and_grad(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_and_grad(x, &mut g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Update steps per minimization.
    pub steps: usize,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 12000,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config(format!(
                "Adam betas must lie in [0, 1): beta1 = {}, beta2 = {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.lr > 0.0) || !(self.eps >= 0.0) {
            return Err(Error::Config(format!(
                "Adam needs lr > 0 and eps >= 0 (lr = {}, eps = {})",
                self.lr, self.eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

/// One Adam update with bias correction by the post-increment step count.
pub fn adam_step(x: &mut [f64], state: &mut AdamState, g: &[f64], params: &AdamParams) -> Result<()> {
    if x.len() != g.len() || state.m.len() != g.len() || state.v.len() != g.len() {
        return Err(Error::ShapeMismatch {
            expected: x.len(),
            actual: g.len(),
        });
    }
    if let Some(index) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (params.beta1, params.beta2);
    let c1 = 1.0 / (1.0 - b1.powi(t));
    let c2 = 1.0 / (1.0 - b2.powi(t));
    for (((xi, mi), vi), gi) in x.iter_mut().zip(&mut state.m).zip(&mut state.v).zip(g) {
        *mi = b1 * *mi + (1.0 - b1) * gi;
        *vi = b2 * *vi + (1.0 - b2) * gi * gi;
        let m_hat = *mi * c1;
        let v_hat = *vi * c2;
        let denom = v_hat.sqrt() + params.eps;
        if denom > 0.0 {
            *xi -= params.lr * m_hat / denom;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Number of updates applied before this evaluation.
    pub step: usize,
    pub value: f64,
    pub grad_inf: f64,
}

#[derive(Debug, Clone)]
pub struct Minimization {
    pub x: Vec<f64>,
    pub trace: Vec<TracePoint>,
    pub grad_evals: usize,
}

impl Minimization {
    pub fn final_value(&self) -> Option<f64> {
        self.trace.last().map(|p| p.value)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,J,grad_inf")?;
        for p in &self.trace {
            writeln!(w, "{},{:e},{:e}", p.step, p.value, p.grad_inf)?;
        }
        Ok(())
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Runs exactly `params.steps` Adam updates from `x0`.
///
/// `J` and `|∇J|∞` are recorded before every `trace_every`-th update and once
/// more at the final iterate; `on_trace` sees the iterate at each record.
pub fn minimize<O, F>(
    objective: &mut O,
    x0: Vec<f64>,
    params: &AdamParams,
    trace_every: usize,
    mut on_trace: F,
) -> Result<Minimization>
where
    O: DifferentiableObjective + ?Sized,
    F: FnMut(usize, &[f64], f64),
{
    params.validate()?;
    let dim = objective.dim();
    if x0.len() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            actual: x0.len(),
        });
    }
    let trace_every = trace_every.max(1);
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut state = AdamState::new(dim);
    let mut trace = Vec::with_capacity(params.steps / trace_every + 2);
    let wrap = |step: usize| move |e: Error| Error::Optimizer {
        step,
        source: Box::new(e),
    };
    for step in 0..params.steps {
        let value = objective.value_and_grad(&x, &mut g).map_err(wrap(step))?;
        if step % trace_every == 0 {
            trace.push(TracePoint {
                step,
                value,
                grad_inf: inf_norm(&g),
            });
            on_trace(step, &x, value);
        }
        adam_step(&mut x, &mut state, &g, params).map_err(wrap(step))?;
    }
    let value = objective
        .value_and_grad(&x, &mut g)
        .map_err(wrap(params.steps))?;
    trace.push(TracePoint {
        step: params.steps,
        value,
        grad_inf: inf_norm(&g),
    });
    on_trace(params.steps, &x, value);
    Ok(Minimization {
        x,
        trace,
        grad_evals: params.steps + 1,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fletcher–Reeves nonlinear conjugate gradients.
///
/// Each iteration spends two gradient evaluations: one at a trial point to
/// fit the directional derivative by a secant (exact for quadratics), one at
/// the accepted point. Stops once `budget` evaluations are used or the
/// gradient vanishes.
pub fn cg_minimize<O>(objective: &mut O, x0: Vec<f64>, budget: usize) -> Result<Minimization>
where
    O: DifferentiableObjective + ?Sized,
{
    let dim = objective.dim();
    if x0.len() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            actual: x0.len(),
        });
    }
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut trial_g = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut value = objective.value_and_grad(&x, &mut g)?;
    let mut evals = 1;
    let mut trace = vec![TracePoint {
        step: evals,
        value,
        grad_inf: inf_norm(&g),
    }];
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut gg = dot(&g, &g);
    let mut iter = 0usize;
    while evals + 2 <= budget && gg > 0.0 {
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -gg;
        }
        let s0 = 1e-3 * inf_norm(&x).max(1.0) / inf_norm(&d);
        for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&d) {
            *t = xi + s0 * di;
        }
        objective
            .value_and_grad(&trial, &mut trial_g)
            .map_err(|e| Error::Optimizer {
                step: iter,
                source: Box::new(e),
            })?;
        let slope_trial = dot(&trial_g, &d);
        let curvature = slope_trial - slope;
        let step = if curvature > 0.0 { -s0 * slope / curvature } else { s0 };
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += step * di;
        }
        value = objective.value_and_grad(&x, &mut g).map_err(|e| Error::Optimizer {
            step: iter,
            source: Box::new(e),
        })?;
        evals += 2;
        let gg_new = dot(&g, &g);
        let beta = gg_new / gg;
        for (di, gi) in d.iter_mut().zip(&g) {
            *di = -gi + beta * *di;
        }
        gg = gg_new;
        iter += 1;
        trace.push(TracePoint {
            step: evals,
            value,
            grad_inf: inf_norm(&g),
        });
    }
    Ok(Minimization {
        x,
        trace,
        grad_evals: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J(x) = Σ c_i (x_i − t_i)²`
    struct Quadratic {
        scale: Vec<f64>,
        target: Vec<f64>,
    }

    impl DifferentiableObjective for Quadratic {
        fn dim(&self) -> usize {
            self.scale.len()
        }

        fn value_and_grad(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
            let mut v = 0.0;
            for i in 0..x.len() {
                let d = x[i] - self.target[i];
                v += self.scale[i] * d * d;
                grad[i] = 2.0 * self.scale[i] * d;
            }
            Ok(v)
        }
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let p = AdamParams::default();
        let mut x = vec![1.0, 1.0, 1.0];
        let mut s = AdamState::new(3);
        adam_step(&mut x, &mut s, &[3.0, -0.5, 1e4], &p).unwrap();
        assert!((x[0] - (1.0 - 0.01)).abs() < 1e-9);
        assert!((x[1] - (1.0 + 0.01)).abs() < 1e-9);
        assert!((x[2] - (1.0 - 0.01)).abs() < 1e-9);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_never_moves() {
        let p = AdamParams::default();
        let mut x = vec![0.3, -2.0];
        let mut s = AdamState::new(2);
        for _ in 0..100 {
            adam_step(&mut x, &mut s, &[0.0, 0.0], &p).unwrap();
        }
        assert_eq!(x, vec![0.3, -2.0]);
        assert!(s.m.iter().chain(&s.v).all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut s = AdamState::new(2);
        let err = adam_step(&mut [0.0, 0.0], &mut s, &[1.0, f64::NAN], &AdamParams::default());
        assert!(matches!(err, Err(Error::NonFiniteGradient { index: 1 })));
    }

    #[test]
    fn scalar_quadratic_regression() {
        // J(x) = x², x₀ = 1, default parameters.
        let p = AdamParams::default();
        let mut x = [1.0];
        let mut s = AdamState::new(1);
        let mut prev = 1.0f64;
        let mut traj = Vec::new();
        for _ in 0..100 {
            let g = [2.0 * x[0]];
            adam_step(&mut x, &mut s, &g, &p).unwrap();
            assert!(x[0].abs() < prev);
            prev = x[0].abs();
            traj.push(x[0]);
        }
        // Independent replay of the recursion in plain floating point.
        assert!((traj[0] - 0.99000000005).abs() < 1e-12);
        assert!((traj[9] - 0.9003496540059874).abs() < 1e-12);
        assert!((traj[99] - 0.22444604523187908).abs() < 1e-12);
    }

    #[test]
    fn sign_pattern_is_scale_invariant_without_eps() {
        let p = AdamParams {
            eps: 0.0,
            ..AdamParams::default()
        };
        let grads: Vec<[f64; 3]> = (0..20)
            .map(|n| {
                let t = n as f64;
                [t.sin(), (0.3 * t).cos() - 0.2, 1.0 / (1.0 + t)]
            })
            .collect();
        let run = |c: f64| {
            let mut x = [0.0; 3];
            let mut s = AdamState::new(3);
            let mut deltas = Vec::new();
            for g in &grads {
                let before = x;
                let scaled = [c * g[0], c * g[1], c * g[2]];
                adam_step(&mut x, &mut s, &scaled, &p).unwrap();
                deltas.push([x[0] - before[0], x[1] - before[1], x[2] - before[2]]);
            }
            deltas
        };
        let base = run(1.0);
        for c in [10.0, 0.1] {
            for (a, b) in base.iter().zip(run(c)) {
                for n in 0..3 {
                    assert_eq!(a[n].signum(), b[n].signum());
                    assert!((a[n] - b[n]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn minimize_zero_steps_returns_start() {
        let mut q = Quadratic {
            scale: vec![1.0, 2.0],
            target: vec![3.0, -1.0],
        };
        let p = AdamParams {
            steps: 0,
            ..AdamParams::default()
        };
        let out = minimize(&mut q, vec![0.5, 0.5], &p, 50, |_, _, _| {}).unwrap();
        assert_eq!(out.x, vec![0.5, 0.5]);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn minimize_is_deterministic_and_decreases() {
        let mk = || Quadratic {
            scale: vec![1.0, 10.0, 0.1],
            target: vec![0.3, -0.2, 0.1],
        };
        let p = AdamParams {
            steps: 2000,
            ..AdamParams::default()
        };
        let a = minimize(&mut mk(), vec![0.0; 3], &p, 10, |_, _, _| {}).unwrap();
        let b = minimize(&mut mk(), vec![0.0; 3], &p, 10, |_, _, _| {}).unwrap();
        assert_eq!(a.x, b.x);
        assert!(a.final_value().unwrap() < a.trace[0].value * 1e-3);
        let mut running = f64::INFINITY;
        for t in &a.trace {
            let next = running.min(t.value);
            assert!(next <= running);
            running = next;
        }
    }

    #[test]
    fn cg_terminates_on_quadratic() {
        let mut q = Quadratic {
            scale: vec![1.0, 4.0, 9.0, 100.0],
            target: vec![1.0, 2.0, 3.0, 4.0],
        };
        // n iterations in exact arithmetic; two more absorb rounding.
        let out = cg_minimize(&mut q, vec![0.0; 4], 2 * 6 + 1).unwrap();
        for (x, t) in out.x.iter().zip(&q.target) {
            assert!((x - t).abs() < 1e-10, "{x} vs {t}");
        }
    }

    #[test]
    fn cg_returns_immediately_at_stationary_point() {
        let mut q = Quadratic {
            scale: vec![1.0, 1.0],
            target: vec![1.0, 2.0],
        };
        let out = cg_minimize(&mut q, vec![1.0, 2.0], 100).unwrap();
        assert_eq!(out.grad_evals, 1);
        assert_eq!(out.x, vec![1.0, 2.0]);
    }
}
