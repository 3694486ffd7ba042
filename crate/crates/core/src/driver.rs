//! The outer fixed-point loop over sample paths and the reported metrics.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentSpec;
use crate::forward::{generate_dataset, CauchyData, CoefficientA, Nonlinearity, PathRecord};
use crate::mesh::{Field, Mesh};
use crate::objective::{ObjectiveContext, ObjectiveSettings};
use crate::optimizer::{minimize, AdamParams};
use crate::stochastic::{derive_seed, sample_path_with, BrownianPath, BrownianVariance, SeedRole};

/// Which Brownian increments enter the functional's Itô term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalNoise {
    /// A fresh path per sample, independent of the one that generated the data.
    #[default]
    Resample,
    /// The path that produced the dataset.
    ReuseForwardPath,
}

/// One measured dataset and the path that produced it.
#[derive(Debug, Clone)]
pub struct PathInput {
    pub data: CauchyData,
    pub path: BrownianPath,
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub n_samples: usize,
    pub n_outer: usize,
    pub adam: AdamParams,
    pub settings: ObjectiveSettings,
    pub functional_noise: FunctionalNoise,
    pub brownian_variance: BrownianVariance,
    pub master_seed: u64,
    pub trace_every: usize,
    /// Sample `ℓ` uses `dataset[ℓ mod len]`.
    pub dataset: Vec<PathInput>,
    pub a: CoefficientA,
    pub nonlinearity: Nonlinearity,
    /// When present, errors are traced during the minimizations.
    pub u0_star: Option<Vec<f64>>,
}

impl RunPlan {
    /// The plan an experiment prescribes, over an already simulated dataset.
    pub fn from_spec(spec: &ExperimentSpec, master_seed: u64, dataset: Vec<PathInput>) -> Result<Self> {
        let h = &spec.hyper;
        Ok(Self {
            n_samples: h.n_samples,
            n_outer: h.n_outer,
            adam: h.adam,
            settings: h.objective_settings(),
            functional_noise: h.functional_noise,
            brownian_variance: h.brownian_variance,
            master_seed,
            trace_every: h.trace_every,
            dataset,
            a: spec.coefficient_inverse(),
            nonlinearity: spec.nonlinearity()?,
            u0_star: Some(spec.u0_star()?),
        })
    }

    pub fn mesh(&self) -> Result<Mesh> {
        self.dataset
            .first()
            .map(|p| *p.data.mesh())
            .ok_or_else(|| Error::Config("empty dataset".into()))
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_outer == 0 {
            return Err(Error::Config("n_samples and n_outer must be >= 1".into()));
        }
        let mesh = self.mesh()?;
        if self.dataset.iter().any(|p| *p.data.mesh() != mesh) {
            return Err(Error::Config("dataset entries live on different meshes".into()));
        }
        if let Some(star) = &self.u0_star {
            if star.len() != mesh.slice_len() {
                return Err(Error::ShapeMismatch {
                    expected: mesh.slice_len(),
                    actual: star.len(),
                });
            }
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Outer iteration, starting at 1.
    pub outer: usize,
    /// Adam step within that iteration.
    pub step: usize,
    pub value: f64,
    pub grad_inf: f64,
    /// Relative error of the iterate's `k = 0` slice, when a reference is known.
    pub error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PathOutcome {
    pub sample: usize,
    pub dataset: usize,
    /// Seed of the functional's path (the dataset path's seed when reused).
    pub functional_seed: u64,
    /// `u_ℓⁿ(0, ·, ·)` for `n = 0..=N_I`.
    pub initial_slices: Vec<Vec<f64>>,
    pub final_field: Field,
    pub trace: Vec<TraceRow>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub u_c: Field,
    /// `u_c(0, ·, ·)`.
    pub u0: Vec<f64>,
    pub paths: Vec<PathOutcome>,
    pub failures: Vec<(usize, String)>,
    /// `d[n] = mean_ℓ ‖u_ℓ^{n+1}(0) − u_ℓⁿ(0)‖∞` for `n = 0..N_I`.
    pub consecutive: Vec<f64>,
    pub seconds: f64,
}

impl RunResult {
    pub fn error(&self, u0_star: &[f64]) -> Result<f64> {
        l2_relative_error(&self.u0, u0_star, self.u_c.mesh())
    }

    pub fn per_path_errors(&self, u0_star: &[f64]) -> Result<Vec<f64>> {
        let mesh = self.u_c.mesh();
        self.paths
            .iter()
            .map(|p| l2_relative_error(p.final_field.slice(0), u0_star, mesh))
            .collect()
    }

    /// Error-vs-step series averaged over the surviving paths, indexed by a
    /// global step counter `(outer − 1)·N_U + step`.
    pub fn mean_trace(&self, steps_per_outer: usize) -> Vec<(usize, f64, Option<f64>)> {
        let Some(first) = self.paths.first() else {
            return Vec::new();
        };
        let n = self.paths.len() as f64;
        (0..first.trace.len())
            .map(|r| {
                let row = first.trace[r];
                let value = self.paths.iter().map(|p| p.trace[r].value).sum::<f64>() / n;
                let error = row
                    .error
                    .map(|_| self.paths.iter().filter_map(|p| p.trace[r].error).sum::<f64>() / n);
                ((row.outer - 1) * steps_per_outer + row.step, value, error)
            })
            .collect()
    }
}

/// Simulates `spec.hyper.n_forward_paths` datasets, dropping (and logging)
/// failed paths.
pub fn simulate_dataset(spec: &ExperimentSpec, master_seed: u64) -> Result<Vec<PathRecord>> {
    let n = spec.hyper.n_forward_paths;
    let mut ok = Vec::new();
    for (index, r) in generate_dataset(spec, n, master_seed).into_iter().enumerate() {
        match r {
            Ok(rec) => ok.push(rec),
            Err(e) => eprintln!("forward path {index} failed: {e}"),
        }
    }
    if ok.is_empty() {
        return Err(Error::AllPathsFailed(n));
    }
    Ok(ok)
}

impl From<PathRecord> for PathInput {
    fn from(r: PathRecord) -> Self {
        Self {
            data: r.noisy,
            path: r.path,
        }
    }
}

/// `‖u0 − u0*‖ / ‖u0*‖` in the discrete `L²(G)` norm.
pub fn l2_relative_error(u0: &[f64], u0_star: &[f64], mesh: &Mesh) -> Result<f64> {
    if u0.len() != mesh.slice_len() || u0_star.len() != mesh.slice_len() {
        return Err(Error::ShapeMismatch {
            expected: mesh.slice_len(),
            actual: if u0.len() != mesh.slice_len() { u0.len() } else { u0_star.len() },
        });
    }
    let w = mesh.hx * mesh.hy;
    let num: f64 = u0.iter().zip(u0_star).map(|(a, b)| w * (a - b) * (a - b)).sum();
    let den: f64 = u0_star.iter().map(|b| w * b * b).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Mean over paths of `max |u^{n+1}(0) − uⁿ(0)|` for each consecutive pair.
pub fn consecutive_difference(iterates: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let Some(first) = iterates.first() else {
        return Vec::new();
    };
    let pairs = first.len().saturating_sub(1);
    (0..pairs)
        .map(|n| {
            let total: f64 = iterates
                .iter()
                .map(|slices| {
                    slices[n + 1]
                        .iter()
                        .zip(&slices[n])
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                })
                .sum();
            total / iterates.len() as f64
        })
        .collect()
}

/// Runs every sample path, in parallel on the current rayon pool, and
/// averages the final iterates in sample order.
pub fn run_inverse(plan: &RunPlan) -> Result<RunResult> {
    plan.validate()?;
    let mesh = plan.mesh()?;
    let start = Instant::now();
    let outcomes: Vec<Result<PathOutcome>> = (0..plan.n_samples)
        .into_par_iter()
        .map(|sample| run_path(plan, sample))
        .collect();

    let mut paths = Vec::new();
    let mut failures = Vec::new();
    for (sample, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(p) => paths.push(p),
            Err(e) => {
                eprintln!("sample {sample} failed: {e}");
                failures.push((sample, e.to_string()));
            }
        }
    }
    if paths.is_empty() {
        return Err(Error::AllPathsFailed(plan.n_samples));
    }

    let mut sum = vec![0.0; mesh.len()];
    for p in &paths {
        for (s, v) in sum.iter_mut().zip(p.final_field.as_slice()) {
            *s += v;
        }
    }
    let n = paths.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    let u_c = Field::from_vec(mesh, sum)?;
    let u0 = u_c.slice(0).to_vec();
    let slices: Vec<Vec<Vec<f64>>> = paths.iter().map(|p| p.initial_slices.clone()).collect();
    Ok(RunResult {
        u_c,
        u0,
        consecutive: consecutive_difference(&slices),
        paths,
        failures,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_path(plan: &RunPlan, sample: usize) -> Result<PathOutcome> {
    let start = Instant::now();
    let dataset = sample % plan.dataset.len();
    let input = &plan.dataset[dataset];
    let mesh = *input.data.mesh();
    let path = match plan.functional_noise {
        FunctionalNoise::ReuseForwardPath => input.path.clone(),
        FunctionalNoise::Resample => {
            let seed = derive_seed(plan.master_seed, SeedRole::FunctionalPath, sample as u64);
            sample_path_with(seed, mesh.m, mesh.tau, plan.brownian_variance)
        }
    };
    let functional_seed = path.seed;
    let mut ctx = ObjectiveContext::new(
        plan.settings,
        input.data.clone(),
        path,
        plan.a.clone(),
        plan.nonlinearity.clone(),
    )?;

    let error_of = |field: &Field| -> Option<f64> {
        let star = plan.u0_star.as_deref()?;
        l2_relative_error(field.slice(0), star, &mesh).ok()
    };

    let mut x = vec![0.0; ctx.dim()];
    let mut current = ctx.embed(&x)?;
    let mut initial_slices = vec![current.slice(0).to_vec()];
    let mut trace = Vec::new();
    for outer in 1..=plan.n_outer {
        ctx.set_previous(&current)?;
        let mut evaluator = ctx.evaluator();
        let mut rows = Vec::new();
        let result = minimize(&mut evaluator, x, &plan.adam, plan.trace_every, |step, xs, value| {
            let error = plan.u0_star.as_ref().and_then(|_| ctx.embed(xs).ok()).and_then(|f| error_of(&f));
            rows.push((step, value, error));
        })?;
        for ((step, value, error), point) in rows.into_iter().zip(&result.trace) {
            trace.push(TraceRow {
                outer,
                step,
                value,
                grad_inf: point.grad_inf,
                error,
            });
        }
        x = result.x;
        current = ctx.embed(&x)?;
        initial_slices.push(current.slice(0).to_vec());
    }
    Ok(PathOutcome {
        sample,
        dataset,
        functional_seed,
        initial_slices,
        final_field: current,
        trace,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{extract_cauchy, solve_forward, DirichletTrace};
    use crate::stochastic::sample_path;

    fn mesh() -> Mesh {
        Mesh::new(8, 5, 5, 1.0, 1.0, 1.5, 0.0, 0.0).unwrap()
    }

    fn plan(n_samples: usize, n_outer: usize, steps: usize) -> RunPlan {
        let m = mesh();
        let a = CoefficientA::from_fn(|t, x, y| 10.0 * x * y * t * t);
        let f = Nonlinearity::sqrt_grad();
        let dataset = (0..3)
            .map(|n| {
                let u0 = m.sample_spatial(|x, y| (2.0 * x + y).sin() + n as f64 * 0.1);
                let trace = DirichletTrace::stationary(&m, |x, y| (2.0 * x + y).sin() + n as f64 * 0.1);
                let path = sample_path(n, m.m, m.tau);
                let u = solve_forward(&m, &u0, &trace, &a, &f, &path).unwrap();
                PathInput {
                    data: extract_cauchy(&u, n),
                    path,
                }
            })
            .collect();
        RunPlan {
            n_samples,
            n_outer,
            adam: AdamParams {
                steps,
                ..AdamParams::default()
            },
            settings: ObjectiveSettings::default(),
            functional_noise: FunctionalNoise::Resample,
            brownian_variance: BrownianVariance::Tau,
            master_seed: 3,
            trace_every: 10,
            dataset,
            a,
            nonlinearity: f,
            u0_star: Some(m.sample_spatial(|x, y| (2.0 * x + y).sin())),
        }
    }

    #[test]
    fn relative_error_examples() {
        let m = mesh();
        let star = m.sample_spatial(|x, y| x + y);
        assert_eq!(l2_relative_error(&star, &star, &m).unwrap(), 0.0);
        assert_eq!(l2_relative_error(&vec![0.0; star.len()], &star, &m).unwrap(), 1.0);
        let scaled: Vec<f64> = star.iter().map(|v| 1.1 * v).collect();
        assert!((l2_relative_error(&scaled, &star, &m).unwrap() - 0.1).abs() < 1e-14);
        let zero = vec![0.0; star.len()];
        assert!(matches!(l2_relative_error(&star, &zero, &m), Err(Error::ZeroReference)));
    }

    #[test]
    fn consecutive_difference_examples() {
        let same = vec![vec![vec![1.0, 2.0], vec![1.0, 2.0]]];
        assert_eq!(consecutive_difference(&same), vec![0.0]);
        let two = vec![
            vec![vec![0.0, 0.0], vec![1.0, -3.0], vec![1.0, -2.0]],
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.5, 0.0]],
        ];
        assert_eq!(consecutive_difference(&two), vec![(3.0 + 0.5) / 2.0, (1.0 + 0.0) / 2.0]);
    }

    #[test]
    fn zero_steps_gives_the_embedded_zero() {
        let p = plan(1, 1, 0);
        let result = run_inverse(&p).unwrap();
        let ctx = ObjectiveContext::new(
            p.settings,
            p.dataset[0].data.clone(),
            BrownianPath::zero(mesh().m, mesh().tau),
            p.a.clone(),
            p.nonlinearity.clone(),
        )
        .unwrap();
        let base = ctx.embed(&vec![0.0; ctx.dim()]).unwrap();
        assert_eq!(result.u_c.as_slice(), base.as_slice());
        assert_eq!(result.u0, base.slice(0));
    }

    #[test]
    fn run_is_deterministic_and_averages_paths() {
        let p = plan(4, 2, 30);
        let a = run_inverse(&p).unwrap();
        let b = run_inverse(&p).unwrap();
        assert_eq!(a.u_c.as_slice(), b.u_c.as_slice());
        assert_eq!(a.paths.len(), 4);
        assert_eq!(a.paths[3].dataset, 0);
        let mut mean = vec![0.0; a.u_c.as_slice().len()];
        for path in &a.paths {
            for (m, v) in mean.iter_mut().zip(path.final_field.as_slice()) {
                *m += v / 4.0;
            }
        }
        for (m, v) in mean.iter().zip(a.u_c.as_slice()) {
            assert!((m - v).abs() < 1e-12);
        }
        assert_eq!(a.consecutive.len(), 2);
        assert_eq!(a.paths[0].initial_slices.len(), 3);
        // Two outer iterations of 30 steps, traced every 10 plus the final point.
        assert_eq!(a.paths[0].trace.len(), 2 * 4);
        assert!(a.paths[0].trace.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn stored_iterates_stay_feasible() {
        let p = plan(2, 2, 20);
        let result = run_inverse(&p).unwrap();
        let m = mesh();
        for path in &result.paths {
            let data = &p.dataset[path.dataset].data;
            let u = &path.final_field;
            for k in 0..=m.m {
                for i in 0..=m.nx {
                    for j in 0..=m.ny {
                        if m.is_boundary(i, j) {
                            assert_eq!(u.get(k, i, j), data.f.get(k, i, j));
                        } else if k == 0 {
                            assert_eq!(u.get(0, i, j), u.get(1, i, j));
                        }
                    }
                }
                if k >= 1 {
                    for j in 0..=m.ny {
                        let g = (u.get(k, m.nx, j) - u.get(k, m.nx - 1, j)) / m.hx;
                        assert!((g - data.g.right(k, j)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn reuse_mode_uses_dataset_paths() {
        let mut p = plan(3, 1, 5);
        p.functional_noise = FunctionalNoise::ReuseForwardPath;
        let r = run_inverse(&p).unwrap();
        for (n, path) in r.paths.iter().enumerate() {
            assert_eq!(path.functional_seed, p.dataset[n].path.seed);
        }
    }

    #[test]
    fn failed_paths_are_skipped() {
        let mut p = plan(2, 1, 5);
        let bad = p.dataset[1].data.f.values_mut();
        bad[0] = f64::NAN;
        let r = run_inverse(&p).unwrap();
        assert_eq!(r.paths.len(), 1);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].0, 1);

        p.n_samples = 1;
        p.dataset.swap(0, 1);
        assert!(matches!(run_inverse(&p), Err(Error::AllPathsFailed(1))));
    }
}
