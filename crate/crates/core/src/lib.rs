//! Reconstruction of the initial source of a semilinear stochastic hyperbolic
//! equation from noisy lateral Cauchy data.
//!
//! The pipeline has two halves:
//!
//! * a forward simulator ([`forward`]) that integrates
//!   `du_t - Δu dt = F(u, u_t, ∇u) dt + a u dW` with centred differences in space
//!   and explicit Euler–Maruyama in time, then extracts the Dirichlet trace on
//!   the whole lateral boundary and the Neumann trace on the observed part;
//! * an inverse solver ([`driver`]) that repeatedly minimizes a Carleman-weighted
//!   Tikhonov functional ([`objective`]) with Adam ([`optimizer`]), freezing the
//!   nonlinearity at the previous iterate, and averages the result over sample
//!   paths.
//!
//! [`experiments`] holds the four benchmark configurations; the `cwi` binary and
//! the programs under `examples/` drive everything end to end.

pub mod cli;
pub mod config;
pub mod driver;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod report;
pub mod stochastic;
pub mod weights;

pub use error::{Error, Result};
pub use mesh::{Field, Mesh};
