//! Explicit finite-difference / Euler–Maruyama solver for
//! `du_t − Δu dt = F(u, u_t, ∇u) dt + a u dW` with `u_t(0) = 0`, plus
//! extraction of the lateral Cauchy data.

mod dataset;
mod restrict;
mod traces;

pub use dataset::{generate_dataset, PathRecord};
pub use restrict::{restrict_to_subdomain, Restricted, Window};
pub use traces::{extract_cauchy, extract_neumann, CauchyData, DirichletTrace, NeumannTrace};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};
use crate::stochastic::BrownianPath;

/// Noise coefficient `a(t, x, y)`.
#[derive(Clone)]
pub struct CoefficientA(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>);

impl CoefficientA {
    pub fn from_fn(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(move |_, _, _| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.0)(t, x, y)
    }

    /// `(t, x, y) ↦ a(t, x + dx, y + dy)`.
    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        let inner = self.0.clone();
        Self(Arc::new(move |t, x, y| inner(t, x + dx, y + dy)))
    }
}

impl fmt::Debug for CoefficientA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CoefficientA(..)")
    }
}

/// Arguments of the nonlinearity at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub ut: f64,
    pub gx: f64,
    pub gy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `√(1 + u²) + |∇u|`
    SqrtGrad,
    /// `min{eᵘ + |∇u|, cap}`
    ExpCapped { cap: f64 },
    Zero,
    Custom,
}

#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    func: Arc<dyn Fn(&NodeState) -> f64 + Send + Sync>,
    uses_time_derivative: bool,
}

impl Nonlinearity {
    pub fn from_kind(kind: NonlinearityKind) -> Result<Self> {
        Ok(match kind {
            NonlinearityKind::SqrtGrad => Self::sqrt_grad(),
            NonlinearityKind::ExpCapped { cap } => Self::exp_capped(cap),
            NonlinearityKind::Zero => Self::zero(),
            NonlinearityKind::Custom => {
                return Err(Error::Config(
                    "custom nonlinearities must be built with Nonlinearity::custom".into(),
                ))
            }
        })
    }

    pub fn sqrt_grad() -> Self {
        Self {
            kind: NonlinearityKind::SqrtGrad,
            func: Arc::new(|s| (1.0 + s.u * s.u).sqrt() + s.gx.hypot(s.gy)),
            uses_time_derivative: false,
        }
    }

    pub fn exp_capped(cap: f64) -> Self {
        Self {
            kind: NonlinearityKind::ExpCapped { cap },
            func: Arc::new(move |s| (s.u.exp() + s.gx.hypot(s.gy)).min(cap)),
            uses_time_derivative: false,
        }
    }

    pub fn zero() -> Self {
        Self {
            kind: NonlinearityKind::Zero,
            func: Arc::new(|_| 0.0),
            uses_time_derivative: false,
        }
    }

    /// `uses_time_derivative` must be true whenever `f` reads `ut`; the forward
    /// solver then resolves the forward difference `(u_{k+1} − u_k)/τ`
    /// implicitly by fixed-point iteration.
    pub fn custom(
        f: impl Fn(&NodeState) -> f64 + Send + Sync + 'static,
        uses_time_derivative: bool,
    ) -> Self {
        Self {
            kind: NonlinearityKind::Custom,
            func: Arc::new(f),
            uses_time_derivative,
        }
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn uses_time_derivative(&self) -> bool {
        self.uses_time_derivative
    }

    #[inline]
    pub fn eval(&self, s: &NodeState) -> f64 {
        (self.func)(s)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("uses_time_derivative", &self.uses_time_derivative)
            .finish()
    }
}

const MAX_FIXED_POINT_SWEEPS: usize = 200;

/// Integrates the equation on `mesh` from the spatial initial state `u0`
/// (`(Nx+1)·(Ny+1)` values, `j` fastest).
///
/// Levels 0 and 1 both hold `u0` (zero initial velocity); boundary nodes take
/// the Dirichlet data at every level. For `1 ≤ k ≤ M−1`
///
/// ```text
/// u_{k+1} = 2u_k − u_{k−1} + τ²(Δ_h u)_k + τ² F(t_k, x, y, u_k, (u_{k+1} − u_k)/τ, ∇⁺u_k)
///           + τ a(t_k, x, y) u_k ΔW_k
/// ```
pub fn solve_forward(
    mesh: &Mesh,
    u0: &[f64],
    dirichlet: &DirichletTrace,
    a: &CoefficientA,
    nonlinearity: &Nonlinearity,
    path: &BrownianPath,
) -> Result<Field> {
    if u0.len() != mesh.slice_len() {
        return Err(Error::ShapeMismatch {
            expected: mesh.slice_len(),
            actual: u0.len(),
        });
    }
    if dirichlet.mesh() != mesh {
        return Err(Error::Config("Dirichlet trace mesh differs from solver mesh".into()));
    }
    if path.len() < mesh.m {
        return Err(Error::ShapeMismatch {
            expected: mesh.m,
            actual: path.len(),
        });
    }
    let cfl = mesh.cfl_number();
    if cfl >= 1.0 {
        return Err(Error::CflViolation { cfl });
    }

    let m = *mesh;
    let mut u = Field::zeros(m);
    for k in 0..=1 {
        let slice = u.slice_mut(k);
        slice.copy_from_slice(u0);
        dirichlet.write_level(k, slice);
    }

    let (tau, hx2, hy2) = (m.tau, m.hx * m.hx, m.hy * m.hy);
    let tau2 = tau * tau;
    let n = m.slice_len();
    let nyp = m.ny + 1;
    let mut next = vec![0.0; n];
    for k in 1..m.m {
        let t = m.t(k);
        let dw = path.increments[k];
        {
            let values = u.as_slice();
            let prev = &values[(k - 1) * n..k * n];
            let cur = &values[k * n..(k + 1) * n];
            for i in 1..m.nx {
                let x = m.x(i);
                for j in 1..m.ny {
                    let y = m.y(j);
                    let c = i * nyp + j;
                    let uc = cur[c];
                    let lap = (cur[c + nyp] - 2.0 * uc + cur[c - nyp]) / hx2
                        + (cur[c + 1] - 2.0 * uc + cur[c - 1]) / hy2;
                    let base = 2.0 * uc - prev[c] + tau2 * lap + tau * a.eval(t, x, y) * uc * dw;
                    let mut state = NodeState {
                        t,
                        x,
                        y,
                        u: uc,
                        ut: (uc - prev[c]) / tau,
                        gx: (cur[c + nyp] - uc) / m.hx,
                        gy: (cur[c + 1] - uc) / m.hy,
                    };
                    let mut v = base + tau2 * nonlinearity.eval(&state);
                    if nonlinearity.uses_time_derivative() {
                        for _ in 0..MAX_FIXED_POINT_SWEEPS {
                            state.ut = (v - uc) / tau;
                            let w = base + tau2 * nonlinearity.eval(&state);
                            let done = (w - v).abs() <= 1e-15 * (1.0 + w.abs());
                            v = w;
                            if done {
                                break;
                            }
                        }
                    }
                    next[c] = v;
                }
            }
        }
        dirichlet.write_level(k + 1, &mut next);
        if let Some(pos) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                k: k + 1,
                i: pos / nyp,
                j: pos % nyp,
            });
        }
        u.slice_mut(k + 1).copy_from_slice(&next);
    }
    Ok(u)
}
