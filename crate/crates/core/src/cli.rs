//! The `cwi` command line.
//!
//! ```text
//! cwi list-experiments
//! cwi verify-weights --experiment ex1
//! cwi gradcheck --experiment ex1 --seed 3
//! cwi forward --experiment ex1 --paths 8 --out runs/ex1-data
//! cwi invert --experiment ex1-desk --seed 7 --out runs/ex1-desk [--data runs/ex1-data]
//! cwi report --out runs/ex1-desk
//! ```
//!
//! Exit status: 0 on success, 2 on configuration errors, 1 otherwise.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{Config, Overrides, ResolvedConfig};
use crate::driver::{run_inverse, simulate_dataset, PathInput, RunPlan};
use crate::error::{Error, Result};
use crate::experiments::{registry, EXPERIMENT_IDS};
use crate::objective::{BottomRingMode, ObjectiveContext};
use crate::optimizer::DifferentiableObjective;
use crate::report::{read_dataset, report, write_dataset, write_run, Summary};
use crate::stochastic::{derive_seed, SampleRng, SeedRole};
use crate::weights::{check_condition_psi2, classify_boundary};

#[derive(Debug, Parser)]
#[command(name = "cwi", version, about = "Carleman-weighted source reconstruction for stochastic hyperbolic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate noisy lateral Cauchy data and store it.
    Forward(JobArgs),
    /// Reconstruct the initial source (simulating data unless --data is given).
    Invert(JobArgs),
    /// Check the weight-function conditions on the inverse mesh.
    VerifyWeights(JobArgs),
    /// Compare the analytic gradient with central differences.
    Gradcheck {
        #[command(flatten)]
        job: JobArgs,
        /// Number of randomly chosen unknowns to test.
        #[arg(long, default_value_t = 50)]
        dofs: usize,
    },
    /// Rebuild CSV series and summary.json of an `invert` output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the experiment registry as JSON.
    ListExperiments,
}

#[derive(Debug, Clone, Args)]
struct JobArgs {
    #[arg(long)]
    experiment: Option<String>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample paths: N_S for `invert`, simulated datasets for `forward`.
    #[arg(long)]
    paths: Option<usize>,
    /// Outer fixed-point iterations.
    #[arg(long)]
    outer: Option<usize>,
    /// Adam steps per minimization.
    #[arg(long)]
    steps: Option<usize>,
    /// Multiplicative noise level.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = ["free", "frozen"])]
    bottom_ring: Option<String>,
    /// Weight the data term by vol² instead of vol.
    #[arg(long)]
    paper_literal_volume: bool,
    /// Dataset directory written by `forward`.
    #[arg(long)]
    data: Option<PathBuf>,
}

impl JobArgs {
    fn resolve(&self, forward: bool) -> Result<ResolvedConfig> {
        let mut config = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(id) = &self.experiment {
            config.experiment = Some(id.clone());
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(data) = &self.data {
            config.data = Some(data.clone());
        }
        let mut flags = Overrides {
            n_outer: self.outer,
            steps: self.steps,
            delta: self.delta,
            bottom_ring: self.bottom_ring.as_deref().map(|s| match s {
                "frozen" => BottomRingMode::Frozen,
                _ => BottomRingMode::Free,
            }),
            paper_literal_volume: self.paper_literal_volume.then_some(true),
            ..Overrides::default()
        };
        if forward {
            flags.n_forward_paths = self.paths;
        } else {
            flags.n_samples = self.paths;
        }
        config.overrides = flags.merged_over(&config.overrides);
        config.resolve()
    }

    fn out_dir(&self, cfg: &ResolvedConfig, suffix: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}{suffix}-seed{}", cfg.spec.id, cfg.seed)))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            if n == 0 {
                return Err(Error::Config("--workers must be >= 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::ListExperiments => {
            let specs = EXPERIMENT_IDS.iter().map(|id| registry(id)).collect::<Result<Vec<_>>>()?;
            print_json(&serde_json::to_value(specs)?)
        }
        Command::VerifyWeights(job) => {
            let cfg = job.resolve(false)?;
            let mesh = cfg.spec.inverse_mesh()?;
            let p = cfg.spec.hyper.carleman;
            print_json(&json!({
                "experiment": cfg.spec.id,
                "cfl_number": mesh.cfl_number(),
                "classification": classify_boundary(&mesh, &p),
                "condition": check_condition_psi2(&mesh, &p, mesh.t_final),
            }))
        }
        Command::Forward(job) => {
            let cfg = job.resolve(true)?;
            let out = job.out_dir(&cfg, "-data");
            let records = job.pool()?.install(|| simulate_dataset(&cfg.spec, cfg.seed))?;
            let manifest = write_dataset(&out, &cfg, &records)?;
            print_json(&json!({
                "out": out,
                "paths": records.len(),
                "config_sha256": manifest.config_sha256,
            }))
        }
        Command::Invert(job) => {
            let cfg = job.resolve(false)?;
            let out = job.out_dir(&cfg, "");
            let summary = job.pool()?.install(|| invert(&cfg, &out))?;
            print_json(&serde_json::to_value(summary)?)
        }
        Command::Gradcheck { job, dofs } => {
            let cfg = job.resolve(false)?;
            let result = job.pool()?.install(|| gradcheck(&cfg, dofs))?;
            let pass = result.max_relative_error < 1e-6;
            print_json(&json!({
                "experiment": cfg.spec.id,
                "dofs": result.checked,
                "max_relative_error": result.max_relative_error,
                "pass": pass,
            }))?;
            if pass {
                Ok(())
            } else {
                Err(Error::CheckFailed(format!(
                    "gradient relative error {:e} exceeds 1e-6",
                    result.max_relative_error
                )))
            }
        }
        Command::Report { out } => {
            let summary = report(&out)?;
            print_json(&serde_json::to_value(summary)?)
        }
    }
}

fn load_or_simulate(cfg: &ResolvedConfig) -> Result<(Vec<PathInput>, f64)> {
    let start = Instant::now();
    let mesh = cfg.spec.inverse_mesh()?;
    let dataset = match &cfg.data {
        Some(dir) => read_dataset(dir, &mesh)?,
        None => simulate_dataset(&cfg.spec, cfg.seed)?
            .into_iter()
            .map(PathInput::from)
            .collect(),
    };
    Ok((dataset, start.elapsed().as_secs_f64()))
}

/// Simulates (or loads) data, runs the reconstruction and writes `out`.
pub fn invert(cfg: &ResolvedConfig, out: &Path) -> Result<Summary> {
    let (dataset, dataset_seconds) = load_or_simulate(cfg)?;
    let plan = RunPlan::from_spec(&cfg.spec, cfg.seed, dataset)?;
    let result = run_inverse(&plan)?;
    write_run(out, cfg, &result, dataset_seconds)
}

#[derive(Debug, Clone, Copy)]
pub struct GradcheckResult {
    pub checked: usize,
    pub max_relative_error: f64,
}

/// Central differences of `J` at a random point on `dofs` random unknowns,
/// against the analytic gradient. Errors are relative to `‖∇J‖∞`.
pub fn gradcheck(cfg: &ResolvedConfig, dofs: usize) -> Result<GradcheckResult> {
    let (mut dataset, _) = load_or_simulate(cfg)?;
    let input = dataset.swap_remove(0);
    let spec = &cfg.spec;
    let ctx = ObjectiveContext::new(
        spec.hyper.objective_settings(),
        input.data,
        input.path,
        spec.coefficient_inverse(),
        spec.nonlinearity()?,
    )?;
    let mut rng = SampleRng::from_seed(derive_seed(cfg.seed, SeedRole::Optimizer, 0));
    let x: Vec<f64> = (0..ctx.dim()).map(|_| rng.uniform_symmetric()).collect();
    let mut g = vec![0.0; ctx.dim()];
    ctx.evaluator().value_and_grad(&x, &mut g)?;
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let h = 1e-3;
    let mut worst = 0.0f64;
    let n = dofs.min(ctx.dim());
    for _ in 0..n {
        let d = ((rng.uniform() * ctx.dim() as f64) as usize).min(ctx.dim() - 1);
        let mut p = x.clone();
        p[d] += h;
        let jp = ctx.eval_j(&p)?;
        p[d] -= 2.0 * h;
        let jm = ctx.eval_j(&p)?;
        worst = worst.max(((jp - jm) / (2.0 * h) - g[d]).abs() / scale);
    }
    Ok(GradcheckResult {
        checked: n,
        max_relative_error: worst,
    })
}
