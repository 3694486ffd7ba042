//! The discrete Carleman-weighted Tikhonov functional
//!
//! ```text
//! J(u) = Σ_{k,i,j interior} vol · [ θ²_{k,i,j} (Φ_{k,i,j}(u) − F(u_prev)_{k,i,j})²
//!        + κ θ₀²_{i,j} (u² + u_t² + |∇u|² + u_xx² + u_yy² + u_xy² + u_tx² + u_ty²) ]
//! ```
//!
//! with `vol = τ hx hy`, minimized over the free unknowns of the feasible set
//! (see [`DofLayout`]). The gradient is the hand-assembled adjoint of the
//! stencil pipeline.

mod kernel;
mod layout;

pub use layout::{BottomRingMode, DofLayout, NodeRule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{CauchyData, CoefficientA, NodeState, Nonlinearity};
use crate::mesh::{d2t, d2x, d2y, dt_fwd, dtx, dty, dxy, grad_fwd, Field, Mesh};
use crate::optimizer::DifferentiableObjective;
use crate::stochastic::BrownianPath;
use crate::weights::CarlemanParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSettings {
    pub carleman: CarlemanParams,
    pub kappa: f64,
    pub bottom_ring: BottomRingMode,
    /// Weight the data term by `vol²` instead of `vol`.
    pub paper_literal_volume: bool,
}

impl Default for ObjectiveSettings {
    fn default() -> Self {
        Self {
            carleman: CarlemanParams::default(),
            kappa: 1e-4,
            bottom_ring: BottomRingMode::Free,
            paper_literal_volume: false,
        }
    }
}

/// Values at the interior indices `1 ≤ k ≤ M−1`, `1 ≤ i ≤ Nx−1`, `1 ≤ j ≤ Ny−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField {
    mesh: Mesh,
    values: Vec<f64>,
}

impl InteriorField {
    fn zeros(mesh: &Mesh) -> Self {
        Self {
            mesh: *mesh,
            values: vec![0.0; (mesh.m - 1) * (mesh.nx - 1) * (mesh.ny - 1)],
        }
    }

    #[inline]
    fn pos(&self, k: usize, i: usize, j: usize) -> usize {
        debug_assert!(k >= 1 && k < self.mesh.m && i >= 1 && i < self.mesh.nx && j >= 1 && j < self.mesh.ny);
        ((k - 1) * (self.mesh.nx - 1) + (i - 1)) * (self.mesh.ny - 1) + (j - 1)
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[self.pos(k, i, j)]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let p = self.pos(k, i, j);
        self.values[p] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indices(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let m = self.mesh;
        (1..m.m).flat_map(move |k| (1..m.nx).flat_map(move |i| (1..m.ny).map(move |j| (k, i, j))))
    }
}

/// Everything the functional of one sample path and one outer iteration
/// depends on.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    mesh: Mesh,
    settings: ObjectiveSettings,
    layout: DofLayout,
    data: CauchyData,
    path: BrownianPath,
    a: CoefficientA,
    nonlinearity: Nonlinearity,
    /// `embed(0)`.
    base: Field,
    /// `θ₀²` per spatial node.
    theta0_sq: Vec<f64>,
    /// `exp(−2λc₀t_k²)`, so that `θ² = θ₀² · decay_k`.
    decay: Vec<f64>,
    /// `a(t_k, x_i, y_j) ΔW_k / τ` on the full grid (zero outside `1..M`).
    a_dw: Vec<f64>,
    /// `F(u_prev)` on the full grid (zero outside the interior).
    f_prev: Vec<f64>,
}

impl ObjectiveContext {
    /// The previous iterate starts as `embed(0)`.
    pub fn new(
        settings: ObjectiveSettings,
        data: CauchyData,
        path: BrownianPath,
        a: CoefficientA,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        let mesh = *data.mesh();
        if path.len() < mesh.m {
            return Err(Error::ShapeMismatch {
                expected: mesh.m,
                actual: path.len(),
            });
        }
        if !(settings.kappa >= 0.0) || !(settings.carleman.lambda >= 0.0) {
            return Err(Error::Config("kappa and lambda must be non-negative".into()));
        }
        let layout = DofLayout::new(&mesh, settings.bottom_ring);
        let p = settings.carleman;
        let theta0_sq = mesh.sample_spatial(|x, y| p.theta0(x, y).powi(2));
        let decay = (0..=mesh.m)
            .map(|k| {
                let t = mesh.t(k);
                (-2.0 * p.lambda * p.c0 * t * t).exp()
            })
            .collect();
        let mut a_dw = vec![0.0; mesh.len()];
        for k in 1..mesh.m {
            let s = path.increments[k] / mesh.tau;
            for i in 0..=mesh.nx {
                for j in 0..=mesh.ny {
                    a_dw[mesh.idx(k, i, j)] = a.eval(mesh.t(k), mesh.x(i), mesh.y(j)) * s;
                }
            }
        }
        let base = build_base(&mesh, &layout, &data);
        if let Some((k, i, j)) = base.first_non_finite() {
            return Err(Error::NonFinite {
                what: "Cauchy data",
                k,
                i,
                j,
            });
        }
        let mut ctx = Self {
            mesh,
            settings,
            layout,
            data,
            path,
            a,
            nonlinearity,
            base,
            theta0_sq,
            decay,
            a_dw,
            f_prev: vec![0.0; mesh.len()],
        };
        let base = ctx.base.clone();
        ctx.set_previous(&base)?;
        Ok(ctx)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn settings(&self) -> &ObjectiveSettings {
        &self.settings
    }

    pub fn data(&self) -> &CauchyData {
        &self.data
    }

    pub fn path(&self) -> &BrownianPath {
        &self.path
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Freeze the nonlinearity at `u_prev`.
    pub fn set_previous(&mut self, u_prev: &Field) -> Result<()> {
        if u_prev.mesh() != &self.mesh {
            return Err(Error::Config("previous iterate lives on a different mesh".into()));
        }
        if let Some((k, i, j)) = u_prev.first_non_finite() {
            return Err(Error::NonFinite {
                what: "previous iterate",
                k,
                i,
                j,
            });
        }
        let f = self.eval_f_field(u_prev)?;
        let m = self.mesh;
        for (k, i, j) in f.indices() {
            self.f_prev[m.idx(k, i, j)] = f.get(k, i, j);
        }
        Ok(())
    }

    /// Feasible field with the given free values.
    pub fn embed(&self, free: &[f64]) -> Result<Field> {
        self.check_len(free)?;
        let mut u = self.base.clone();
        self.embed_into(free, &mut u);
        Ok(u)
    }

    /// Writes the free values (and their `k = 0` mirrors) into a field that
    /// already agrees with `embed(0)` on every other node.
    pub(crate) fn embed_into(&self, free: &[f64], u: &mut Field) {
        let m = self.mesh;
        let (i_range, j_range) = (self.layout.i_range(), self.layout.j_range());
        let nj = j_range.end() - j_range.start() + 1;
        let values = u.as_mut_slice();
        let mut d = 0;
        for k in 1..=m.m {
            for i in i_range.clone() {
                let start = m.idx(k, i, *j_range.start());
                values[start..start + nj].copy_from_slice(&free[d..d + nj]);
                if k == 1 {
                    let s0 = m.idx(0, i, *j_range.start());
                    values[s0..s0 + nj].copy_from_slice(&free[d..d + nj]);
                }
                d += nj;
            }
        }
    }

    /// Free values of a field (inverse of [`embed`](Self::embed) on feasible fields).
    pub fn gather_free(&self, u: &Field) -> Vec<f64> {
        (0..self.dim())
            .map(|d| {
                let (k, i, j) = self.layout.node(d);
                u.get(k, i, j)
            })
            .collect()
    }

    /// `∂J/∂free = G(node) + G(mirror at k = 0)` for a full-grid gradient `G`.
    pub(crate) fn reduce_gradient(&self, full: &[f64], out: &mut [f64]) {
        let m = self.mesh;
        let (i_range, j_range) = (self.layout.i_range(), self.layout.j_range());
        let nj = j_range.end() - j_range.start() + 1;
        let mut d = 0;
        for k in 1..=m.m {
            for i in i_range.clone() {
                let start = m.idx(k, i, *j_range.start());
                out[d..d + nj].copy_from_slice(&full[start..start + nj]);
                if k == 1 {
                    let s0 = m.idx(0, i, *j_range.start());
                    for (o, g) in out[d..d + nj].iter_mut().zip(&full[s0..s0 + nj]) {
                        *o += g;
                    }
                }
                d += nj;
            }
        }
    }

    fn check_len(&self, free: &[f64]) -> Result<()> {
        if free.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                actual: free.len(),
            });
        }
        Ok(())
    }

    /// `Φ = {[du_t] − ([u_xx] + [u_yy])τ − a u ΔW_k} / τ` at interior indices.
    pub fn phi_field(&self, u: &Field) -> InteriorField {
        let m = self.mesh;
        let mut out = InteriorField::zeros(&m);
        for (k, i, j) in out.indices().collect::<Vec<_>>() {
            let a = self.a.eval(m.t(k), m.x(i), m.y(j));
            let phi = (d2t(u, k, i, j) - (d2x(u, k, i, j) + d2y(u, k, i, j)) * m.tau
                - a * u.get(k, i, j) * self.path.increments[k])
                / m.tau;
            out.set(k, i, j, phi);
        }
        out
    }

    /// `F(t_k, x_i, y_j, u, [u_t], [∇u])` at interior indices.
    pub fn eval_f_field(&self, u: &Field) -> Result<InteriorField> {
        let m = self.mesh;
        let mut out = InteriorField::zeros(&m);
        for (k, i, j) in out.indices().collect::<Vec<_>>() {
            let (gx, gy) = grad_fwd(u, k, i, j);
            let state = NodeState {
                t: m.t(k),
                x: m.x(i),
                y: m.y(j),
                u: u.get(k, i, j),
                ut: dt_fwd(u, k, i, j),
                gx,
                gy,
            };
            let v = self.nonlinearity.eval(&state);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "nonlinearity",
                    k,
                    i,
                    j,
                });
            }
            out.set(k, i, j, v);
        }
        Ok(out)
    }

    fn volumes(&self) -> (f64, f64) {
        let m = &self.mesh;
        let vol = m.tau * m.hx * m.hy;
        let data = if self.settings.paper_literal_volume { vol * vol } else { vol };
        (data, vol)
    }

    /// `J` evaluated term by term with the shared stencils.
    pub fn eval_j(&self, free: &[f64]) -> Result<f64> {
        let u = self.embed(free)?;
        self.eval_j_field(&u)
    }

    /// `J` of an arbitrary field (feasible or not).
    pub fn eval_j_field(&self, u: &Field) -> Result<f64> {
        let m = self.mesh;
        let (vol_data, vol) = self.volumes();
        let phi = self.phi_field(u);
        let kappa = self.settings.kappa;
        let mut total = 0.0;
        for (k, i, j) in phi.indices() {
            let s = m.sidx(i, j);
            let residual = phi.get(k, i, j) - self.f_prev[m.idx(k, i, j)];
            let data = vol_data * self.theta0_sq[s] * self.decay[k] * residual * residual;
            if !data.is_finite() {
                return Err(Error::NonFinite {
                    what: "data term",
                    k,
                    i,
                    j,
                });
            }
            let (gx, gy) = grad_fwd(u, k, i, j);
            let reg_terms = [
                u.get(k, i, j),
                dt_fwd(u, k, i, j),
                gx,
                gy,
                d2x(u, k, i, j),
                d2y(u, k, i, j),
                dxy(u, k, i, j),
                dtx(u, k, i, j),
                dty(u, k, i, j),
            ];
            let reg = vol * kappa * self.theta0_sq[s] * reg_terms.iter().map(|v| v * v).sum::<f64>();
            if !reg.is_finite() {
                return Err(Error::NonFinite {
                    what: "regularizer",
                    k,
                    i,
                    j,
                });
            }
            total += data + reg;
        }
        Ok(total)
    }

    /// Exact gradient of [`eval_j`](Self::eval_j) with respect to the free values.
    pub fn grad_j(&self, free: &[f64]) -> Result<Vec<f64>> {
        let mut eval = self.evaluator();
        let mut g = vec![0.0; self.dim()];
        eval.value_and_grad(free, &mut g)?;
        Ok(g)
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator {
            ctx: self,
            work: self.base.clone(),
            grad_field: vec![0.0; self.mesh.len()],
        }
    }
}

fn build_base(mesh: &Mesh, layout: &DofLayout, data: &CauchyData) -> Field {
    let m = *mesh;
    let mut u = Field::zeros(m);
    for k in 0..=m.m {
        data.f.write_level(k, u.slice_mut(k));
    }
    for k in 1..=m.m {
        for i in 0..=m.nx {
            for j in 0..=m.ny {
                let v = match layout.rule(k, i, j) {
                    NodeRule::TiedRight => data.f.get(k, m.nx, j) - m.hx * data.g.right(k, j),
                    NodeRule::TiedLeft => data.f.get(k, 0, j) - m.hx * data.g.left(k, j),
                    NodeRule::TiedTop => data.f.get(k, i, m.ny) - m.hy * data.g.top(k, i),
                    _ => continue,
                };
                u.set(k, i, j, v);
            }
        }
    }
    for i in 1..m.nx {
        for j in 1..m.ny {
            let v = u.get(1, i, j);
            u.set(0, i, j, v);
        }
    }
    u
}

/// Reusable scratch for repeated value/gradient evaluations.
pub struct Evaluator<'a> {
    ctx: &'a ObjectiveContext,
    work: Field,
    grad_field: Vec<f64>,
}

impl Evaluator<'_> {
    /// The last embedded field.
    pub fn field(&self) -> &Field {
        &self.work
    }
}

impl DifferentiableObjective for Evaluator<'_> {
    fn dim(&self) -> usize {
        self.ctx.dim()
    }

    fn value_and_grad(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let ctx = self.ctx;
        ctx.check_len(x)?;
        ctx.check_len(grad)?;
        ctx.embed_into(x, &mut self.work);
        let value = kernel::value_and_grad(ctx, &self.work, &mut self.grad_field);
        if !value.is_finite() {
            // Slow path only to name the offending term.
            ctx.eval_j_field(&self.work)?;
            return Err(Error::NonFinite {
                what: "objective",
                k: 0,
                i: 0,
                j: 0,
            });
        }
        ctx.reduce_gradient(&self.grad_field, grad);
        Ok(value)
    }

    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.ctx.check_len(x)?;
        self.ctx.embed_into(x, &mut self.work);
        self.ctx.eval_j_field(&self.work)
    }
}
