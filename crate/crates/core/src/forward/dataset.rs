use rayon::prelude::*;

use super::restrict::restrict_to_subdomain;
use super::traces::{extract_cauchy, CauchyData};
use super::solve_forward;
use crate::error::Result;
use crate::experiments::ExperimentSpec;
use crate::mesh::Field;
use crate::stochastic::{apply_noise, derive_seed, sample_path_with, BrownianPath, SeedRole};

/// One simulated measurement: the Brownian path that produced it, the clean
/// and noisy traces, and the trajectory on the inverse mesh.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub index: usize,
    /// Increments on the inverse time grid.
    pub path: BrownianPath,
    pub noise_seed: u64,
    pub clean: CauchyData,
    pub noisy: CauchyData,
    pub field: Field,
}

/// Simulates `n_paths` forward runs of `spec` and turns each into noisy
/// Cauchy data on the inverse mesh. Failures are reported per path.
pub fn generate_dataset(spec: &ExperimentSpec, n_paths: usize, master_seed: u64) -> Vec<Result<PathRecord>> {
    (0..n_paths)
        .into_par_iter()
        .map(|index| simulate_one(spec, index, master_seed))
        .collect()
}

fn simulate_one(spec: &ExperimentSpec, index: usize, master_seed: u64) -> Result<PathRecord> {
    let fwd_mesh = spec.forward_mesh()?;
    let inv_mesh = spec.inverse_mesh()?;
    let hyper = &spec.hyper;
    let seed = derive_seed(master_seed, SeedRole::ForwardPath, index as u64);
    let path = sample_path_with(seed, fwd_mesh.m, fwd_mesh.tau, hyper.brownian_variance);
    let (u0, f) = spec.forward_initial()?;
    let u = solve_forward(
        &fwd_mesh,
        &u0,
        &f,
        &spec.coefficient_forward(),
        &spec.nonlinearity()?,
        &path,
    )?;
    let (field, clean, path) = match &spec.window {
        Some(window) => {
            let r = restrict_to_subdomain(&u, window, &inv_mesh, index as u64)?;
            let sub = path.window(r.k0, inv_mesh.m)?;
            (r.field, r.data, sub)
        }
        None => {
            let clean = extract_cauchy(&u, index as u64);
            (u, clean, path)
        }
    };
    let noise_seed = derive_seed(master_seed, SeedRole::Noise, index as u64);
    let noisy = apply_noise(&clean, hyper.delta, noise_seed)?;
    Ok(PathRecord {
        index,
        path,
        noise_seed,
        clean,
        noisy,
        field,
    })
}
