//! Uniform space-time grids, 3-D fields and the finite-difference stencils
//! shared by the forward solver and the objective.

mod io;
mod stencil;

pub use io::{read_raw, write_raw, RawArray, MAGIC};
pub use stencil::{d2t, d2x, d2y, dt_fwd, dtx, dty, dxy, grad_fwd};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid over `[0, T] × [ox, ox + Lx] × [oy, oy + Ly]`.
///
/// Node `(k, i, j)` sits at `(k τ, ox + i hx, oy + j hy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub m: usize,
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub lx: f64,
    pub ly: f64,
    pub ox: f64,
    pub oy: f64,
    pub tau: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Mesh {
    pub const MIN_M: usize = 3;
    pub const MIN_N: usize = 4;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        nx: usize,
        ny: usize,
        t_final: f64,
        lx: f64,
        ly: f64,
        ox: f64,
        oy: f64,
    ) -> Result<Self> {
        if m < Self::MIN_M {
            return Err(Error::InvalidMesh(format!("M = {m} < {}", Self::MIN_M)));
        }
        if nx < Self::MIN_N || ny < Self::MIN_N {
            return Err(Error::InvalidMesh(format!(
                "Nx = {nx}, Ny = {ny}; both must be >= {}",
                Self::MIN_N
            )));
        }
        for (name, v) in [("T", t_final), ("Lx", lx), ("Ly", ly)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidMesh(format!("{name} = {v} must be positive")));
            }
        }
        if !ox.is_finite() || !oy.is_finite() {
            return Err(Error::InvalidMesh("origin must be finite".into()));
        }
        Ok(Self {
            m,
            nx,
            ny,
            t_final,
            lx,
            ly,
            ox,
            oy,
            tau: t_final / m as f64,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    /// `M = 65`, `Nx = 32`, `Ny = 48` on `(0, 1) × (0, 1.5)` with `T = 1`.
    pub fn reference() -> Self {
        Self::new(65, 32, 48, 1.0, 1.0, 1.5, 0.0, 0.0).expect("reference mesh is valid")
    }

    /// Node counts along `(t, x, y)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m + 1, self.nx + 1, self.ny + 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.m + 1) * self.slice_len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes in one time slice.
    #[inline]
    pub fn slice_len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        debug_assert!(k <= self.m && i <= self.nx && j <= self.ny);
        (k * (self.nx + 1) + i) * (self.ny + 1) + j
    }

    /// Index inside a single spatial slice.
    #[inline]
    pub fn sidx(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.ox + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.oy + j as f64 * self.hy
    }

    pub fn node_coords(&self, k: usize, i: usize, j: usize) -> (f64, f64, f64) {
        (self.t(k), self.x(i), self.y(j))
    }

    /// Nearest grid node to `(t, x, y)`, if the point lies on the grid to
    /// within a tiny fraction of a cell.
    pub fn index_of(&self, t: f64, x: f64, y: f64) -> Option<(usize, usize, usize)> {
        let snap = |v: f64, h: f64, n: usize| -> Option<usize> {
            let r = v / h;
            let n_r = r.round();
            if n_r < 0.0 || n_r > n as f64 || (r - n_r).abs() > 1e-9 {
                None
            } else {
                Some(n_r as usize)
            }
        };
        Some((
            snap(t, self.tau, self.m)?,
            snap(x - self.ox, self.hx, self.nx)?,
            snap(y - self.oy, self.hy, self.ny)?,
        ))
    }

    /// `τ (1/hx² + 1/hy²)^{1/2}`; the explicit scheme is stable below 1.
    pub fn cfl_number(&self) -> f64 {
        self.tau * (1.0 / (self.hx * self.hx) + 1.0 / (self.hy * self.hy)).sqrt()
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Spatial grid values of `f(x, y)`, `j` fastest.
    pub fn sample_spatial(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.slice_len());
        for i in 0..=self.nx {
            for j in 0..=self.ny {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }
}

/// Real values on every node of a [`Mesh`], stored with `k` outermost and `j`
/// innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Mesh,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: Mesh, c: f64) -> Self {
        Self {
            mesh,
            values: vec![c; mesh.len()],
        }
    }

    pub fn from_vec(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::ShapeMismatch {
                expected: mesh.len(),
                actual: values.len(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn from_fn(mesh: Mesh, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(mesh.len());
        for k in 0..=mesh.m {
            for i in 0..=mesh.nx {
                for j in 0..=mesh.ny {
                    values.push(f(mesh.t(k), mesh.x(i), mesh.y(j)));
                }
            }
        }
        Self { mesh, values }
    }

    #[inline]
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[self.mesh.idx(k, i, j)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.mesh.idx(k, i, j);
        self.values[n] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// The spatial slice at time level `k`.
    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.mesh.slice_len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.mesh.slice_len();
        &mut self.values[k * n..(k + 1) * n]
    }

    /// First non-finite node, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize, usize)> {
        let pos = self.values.iter().position(|v| !v.is_finite())?;
        Some(self.unravel(pos))
    }

    pub fn unravel(&self, pos: usize) -> (usize, usize, usize) {
        let nyp = self.mesh.ny + 1;
        let nxp = self.mesh.nx + 1;
        (pos / (nxp * nyp), (pos / nyp) % nxp, pos % nyp)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Write as `t,x,y,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,value")?;
        let m = &self.mesh;
        for k in 0..=m.m {
            for i in 0..=m.nx {
                for j in 0..=m.ny {
                    writeln!(w, "{},{},{},{}", m.t(k), m.x(i), m.y(j), self.get(k, i, j))?;
                }
            }
        }
        Ok(())
    }

    pub fn to_raw(&self) -> RawArray {
        RawArray::from_mesh(&self.mesh, self.values.clone())
    }

    pub fn from_raw(raw: RawArray) -> Result<Self> {
        let mesh = raw.mesh()?;
        Self::from_vec(mesh, raw.data)
    }
}
