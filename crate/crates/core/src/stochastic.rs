//! Seeded randomness: Brownian increments for the Itô term and uniform
//! multiplicative measurement noise.
//!
//! Every stream is a ChaCha20 generator seeded from a 64-bit value. Seeds for
//! different roles are split off a master seed by [`derive_seed`], so adding a
//! path never changes the draws of existing ones.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::CauchyData;
use crate::mesh::RawArray;

/// Recorded in every output manifest.
pub const RNG_ALGORITHM: &str = "chacha20(rand_chacha 0.9)+uniform53+box-muller/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRole {
    ForwardPath,
    Noise,
    FunctionalPath,
    Optimizer,
}

impl SeedRole {
    fn tag(self) -> u64 {
        match self {
            SeedRole::ForwardPath => 0x01,
            SeedRole::Noise => 0x02,
            SeedRole::FunctionalPath => 0x03,
            SeedRole::Optimizer => 0x04,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(master ⊕ splitmix64(tag << 56 ⊕ index))`.
pub fn derive_seed(master: u64, role: SeedRole, index: u64) -> u64 {
    splitmix64(master ^ splitmix64((role.tag() << 56) ^ index))
}

pub struct SampleRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl SampleRng {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    #[inline]
    pub fn uniform_symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Standard normal via Box–Muller; both variates of a pair are used.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// How the increment law `N(0, √τ)` is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrownianVariance {
    /// Standard deviation `√τ`, the Euler–Maruyama convention.
    #[default]
    Tau,
    /// Variance `√τ`; kept for sensitivity studies.
    SqrtTau,
}

impl BrownianVariance {
    pub fn std_dev(self, tau: f64) -> f64 {
        match self {
            BrownianVariance::Tau => tau.sqrt(),
            BrownianVariance::SqrtTau => tau.sqrt().sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    /// `ΔW_k = W_{k+1} − W_k` for `k = 0..M`.
    pub increments: Vec<f64>,
    pub seed: u64,
    pub tau: f64,
}

impl BrownianPath {
    /// A path with every increment zero.
    pub fn zero(m: usize, tau: f64) -> Self {
        Self {
            increments: vec![0.0; m],
            seed: 0,
            tau,
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Cumulative sums `W_0 = 0, W_1, …, W_M`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        w.push(acc);
        for d in &self.increments {
            acc += d;
            w.push(acc);
        }
        w
    }

    /// Increments `k0..k0+m` as a new path.
    pub fn window(&self, k0: usize, m: usize) -> Result<Self> {
        if k0 + m > self.len() {
            return Err(Error::WindowOutOfBounds(format!(
                "time window {}..{} exceeds path length {}",
                k0,
                k0 + m,
                self.len()
            )));
        }
        Ok(Self {
            increments: self.increments[k0..k0 + m].to_vec(),
            seed: self.seed,
            tau: self.tau,
        })
    }

    pub fn to_raw(&self) -> RawArray {
        let m = self.len();
        RawArray {
            dims: [m as u64, 1, 1],
            params: [m as f64 * self.tau, 0.0, 0.0, 0.0, 0.0, self.tau],
            data: self.increments.clone(),
        }
    }

    pub fn from_raw(raw: RawArray, seed: u64) -> Result<Self> {
        if raw.dims[1] != 1 || raw.dims[2] != 1 {
            return Err(Error::Config(format!(
                "Brownian path must be 1-D, got dims {:?}",
                raw.dims
            )));
        }
        Ok(Self {
            increments: raw.data,
            seed,
            tau: raw.params[5],
        })
    }
}

pub fn sample_path(seed: u64, m: usize, tau: f64) -> BrownianPath {
    sample_path_with(seed, m, tau, BrownianVariance::Tau)
}

pub fn sample_path_with(seed: u64, m: usize, tau: f64, law: BrownianVariance) -> BrownianPath {
    let sd = law.std_dev(tau);
    let mut rng = SampleRng::from_seed(seed);
    let increments = (0..m).map(|_| sd * rng.standard_normal()).collect();
    BrownianPath {
        increments,
        seed,
        tau,
    }
}

/// The `ξ` draws behind one noisy dataset, flattened in trace order
/// (see [`CauchyData::dirichlet_values`] / [`CauchyData::neumann_values`]).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub xi_f: Vec<f64>,
    pub xi_g: Vec<f64>,
    pub seed: u64,
}

impl NoiseRealization {
    pub fn draw(n_f: usize, n_g: usize, seed: u64) -> Self {
        let mut rng = SampleRng::from_seed(seed);
        let xi_f = (0..n_f).map(|_| rng.uniform_symmetric()).collect();
        let xi_g = (0..n_g).map(|_| rng.uniform_symmetric()).collect();
        Self { xi_f, xi_g, seed }
    }
}

/// `f = f*(1 + δξ)`, `g = g*(1 + δξ)` with an independent `ξ ~ U[-1, 1]` per
/// entry and per trace.
pub fn apply_noise(clean: &CauchyData, delta: f64, seed: u64) -> Result<CauchyData> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Config(format!("noise level must be >= 0, got {delta}")));
    }
    let xi = NoiseRealization::draw(
        clean.dirichlet_values().count(),
        clean.neumann_values().count(),
        seed,
    );
    let mut noisy = clean.clone();
    for (v, x) in noisy.dirichlet_values_mut().zip(&xi.xi_f) {
        *v *= 1.0 + delta * x;
    }
    for (v, x) in noisy.neumann_values_mut().zip(&xi.xi_g) {
        *v *= 1.0 + delta * x;
    }
    Ok(noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::extract_cauchy;
    use crate::mesh::{Field, Mesh};

    #[test]
    fn same_seed_same_path() {
        assert_eq!(sample_path(42, 100, 0.01), sample_path(42, 100, 0.01));
        assert_ne!(sample_path(42, 100, 0.01), sample_path(43, 100, 0.01));
    }

    #[test]
    fn increment_moments() {
        let n = 100_000;
        let tau = 0.01;
        let p = sample_path(7, n, tau);
        let mean = p.increments.iter().sum::<f64>() / n as f64;
        let var = p.increments.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 * (tau / n as f64).sqrt(), "mean {mean}");
        assert!((var - tau).abs() < 0.05 * tau, "var {var}");
    }

    #[test]
    fn sqrt_tau_law_has_larger_spread() {
        let p = sample_path_with(1, 50_000, 0.01, BrownianVariance::SqrtTau);
        let var = p.increments.iter().map(|d| d * d).sum::<f64>() / 50_000.0;
        assert!((var - 0.1).abs() < 0.005, "var {var}");
    }

    #[test]
    fn derived_seeds_differ_by_role_and_index() {
        let a = derive_seed(9, SeedRole::ForwardPath, 0);
        assert_ne!(a, derive_seed(9, SeedRole::ForwardPath, 1));
        assert_ne!(a, derive_seed(9, SeedRole::Noise, 0));
        assert_ne!(a, derive_seed(10, SeedRole::ForwardPath, 0));
        assert_eq!(a, derive_seed(9, SeedRole::ForwardPath, 0));
    }

    fn linear_data() -> CauchyData {
        let mesh = Mesh::new(100, 40, 60, 1.0, 1.0, 1.5, 0.0, 0.0).unwrap();
        let u = Field::from_fn(mesh, |t, x, y| 1.0 + x + 2.0 * y + t);
        extract_cauchy(&u, 0)
    }

    #[test]
    fn zero_noise_is_identity() {
        let d = linear_data();
        assert_eq!(apply_noise(&d, 0.0, 5).unwrap(), d);
    }

    #[test]
    fn noise_stays_in_band_and_averages_half_delta() {
        let d = linear_data();
        let delta = 0.1;
        let noisy = apply_noise(&d, delta, 11).unwrap();
        let mut rel = Vec::new();
        let pairs = d
            .dirichlet_values()
            .zip(noisy.dirichlet_values())
            .chain(d.neumann_values().zip(noisy.neumann_values()));
        for (c, n) in pairs {
            let (lo, hi) = if *c >= 0.0 {
                (c * (1.0 - delta), c * (1.0 + delta))
            } else {
                (c * (1.0 + delta), c * (1.0 - delta))
            };
            assert!(*n >= lo - 1e-15 && *n <= hi + 1e-15);
            if *c != 0.0 {
                rel.push(((n - c) / c).abs());
            }
        }
        assert!(rel.len() >= 10_000, "{} entries", rel.len());
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        assert!((mean - 0.05).abs() < 0.005, "mean relative deviation {mean}");
    }

    #[test]
    fn negative_noise_level_rejected() {
        assert!(apply_noise(&linear_data(), -0.1, 0).is_err());
    }
}
