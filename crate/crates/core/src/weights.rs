//! Carleman weights `θ = exp(λ(ψ − c₀t²))`, `θ₀ = exp(λψ)`, the observed part
//! of the boundary and grid checks of the admissibility conditions on `ψ`.

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarlemanParams {
    pub lambda: f64,
    pub c0: f64,
    pub psi_center: (f64, f64),
    pub psi_offset: f64,
}

impl Default for CarlemanParams {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            c0: 0.25,
            psi_center: (0.5, -0.5),
            psi_offset: -4.175,
        }
    }
}

impl CarlemanParams {
    /// `ψ(x, y) = (x − x₀)² + (y − y₀)² + offset`.
    #[inline]
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.psi_center.0, y - self.psi_center.1);
        dx * dx + dy * dy + self.psi_offset
    }

    #[inline]
    pub fn psi_grad(&self, x: f64, y: f64) -> (f64, f64) {
        (2.0 * (x - self.psi_center.0), 2.0 * (y - self.psi_center.1))
    }

    #[inline]
    pub fn theta(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.lambda * (self.psi(x, y) - self.c0 * t * t)).exp()
    }

    #[inline]
    pub fn theta0(&self, x: f64, y: f64) -> f64 {
        (self.lambda * self.psi(x, y)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn outward_normal(self) -> (f64, f64) {
        match self {
            Edge::Left => (-1.0, 0.0),
            Edge::Right => (1.0, 0.0),
            Edge::Bottom => (0.0, -1.0),
            Edge::Top => (0.0, 1.0),
        }
    }

    /// Spatial node indices along the edge, corners included.
    pub fn nodes(self, mesh: &Mesh) -> Vec<(usize, usize)> {
        match self {
            Edge::Left => (0..=mesh.ny).map(|j| (0, j)).collect(),
            Edge::Right => (0..=mesh.ny).map(|j| (mesh.nx, j)).collect(),
            Edge::Bottom => (0..=mesh.nx).map(|i| (i, 0)).collect(),
            Edge::Top => (0..=mesh.nx).map(|i| (i, mesh.ny)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeClassification {
    pub edge: Edge,
    /// Every node of the edge has `∇ψ·ν > 0`.
    pub observed: bool,
    /// Per node along the edge, same order as [`Edge::nodes`].
    pub nodes: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryClassification {
    pub edges: Vec<EdgeClassification>,
}

impl BoundaryClassification {
    pub fn is_observed(&self, edge: Edge) -> bool {
        self.edges.iter().any(|e| e.edge == edge && e.observed)
    }

    pub fn observed_edges(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .filter(|e| e.observed)
            .map(|e| e.edge)
            .collect()
    }
}

/// Marks boundary nodes with `∇ψ·ν > 0` (identity metric).
pub fn classify_boundary(mesh: &Mesh, params: &CarlemanParams) -> BoundaryClassification {
    let edges = Edge::ALL
        .iter()
        .map(|&edge| {
            let (nx, ny) = edge.outward_normal();
            let nodes: Vec<bool> = edge
                .nodes(mesh)
                .into_iter()
                .map(|(i, j)| {
                    let (gx, gy) = params.psi_grad(mesh.x(i), mesh.y(j));
                    gx * nx + gy * ny > 0.0
                })
                .collect();
            EdgeClassification {
                edge,
                observed: nodes.iter().all(|&b| b),
                nodes,
            }
        })
        .collect();
    BoundaryClassification { edges }
}

/// Grid evaluation of the conditions on `ψ` and `c₀`. Informational only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `R₁² = max ψ` over the closed spatial grid.
    pub r1_squared: f64,
    pub min_quarter_grad_sq: f64,
    pub min_grad_norm: f64,
    /// `min ¼|∇ψ|² ≥ R₁²`.
    pub quarter_grad_bound_holds: bool,
    /// `R₁ / (√2 T)`.
    pub c0_upper_bound: f64,
    pub c0: f64,
    /// `c₀ < R₁ / (√2 T)`.
    pub c0_bound_holds: bool,
    /// `min |∇ψ| > 0`.
    pub grad_nonvanishing: bool,
    pub observed_edges: Vec<Edge>,
}

pub fn check_condition_psi2(mesh: &Mesh, params: &CarlemanParams, t_final: f64) -> ConditionReport {
    let mut max_psi = f64::NEG_INFINITY;
    let mut min_q = f64::INFINITY;
    let mut min_norm = f64::INFINITY;
    for i in 0..=mesh.nx {
        for j in 0..=mesh.ny {
            let (x, y) = (mesh.x(i), mesh.y(j));
            max_psi = max_psi.max(params.psi(x, y));
            let (gx, gy) = params.psi_grad(x, y);
            let sq = gx * gx + gy * gy;
            min_q = min_q.min(0.25 * sq);
            min_norm = min_norm.min(sq.sqrt());
        }
    }
    let r1 = max_psi.max(0.0).sqrt();
    let c0_upper_bound = r1 / (std::f64::consts::SQRT_2 * t_final);
    ConditionReport {
        r1_squared: max_psi,
        min_quarter_grad_sq: min_q,
        min_grad_norm: min_norm,
        quarter_grad_bound_holds: min_q >= max_psi,
        c0_upper_bound,
        c0: params.c0,
        c0_bound_holds: params.c0 < c0_upper_bound,
        grad_nonvanishing: min_norm > 0.0,
        observed_edges: classify_boundary(mesh, params).observed_edges(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn psi_values() {
        let p = CarlemanParams::default();
        assert_abs_diff_eq!(p.psi(0.5, -0.5), -4.175, epsilon = 1e-15);
        assert_abs_diff_eq!(p.psi(0.5, 1.0), -1.925, epsilon = 1e-14);
        assert_abs_diff_eq!(p.psi(0.0, 1.5), 0.075, epsilon = 1e-14);
        assert_abs_diff_eq!(p.psi(1.0, 1.5), 0.075, epsilon = 1e-14);
    }

    #[test]
    fn theta_values() {
        let p = CarlemanParams::default();
        assert_abs_diff_eq!(p.theta(1.0, 0.5, 1.0), (-0.435f64).exp(), epsilon = 1e-14);
        assert_eq!(p.theta(0.0, 0.3, 0.9), p.theta0(0.3, 0.9));
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let th = p.theta(k as f64 * 0.1, 0.2, 0.7);
            assert!(th > 0.0 && th < prev);
            prev = th;
        }
    }

    #[test]
    fn reference_boundary_classification() {
        let mesh = Mesh::reference();
        let c = classify_boundary(&mesh, &CarlemanParams::default());
        assert!(c.is_observed(Edge::Right));
        assert!(c.is_observed(Edge::Top));
        assert!(c.is_observed(Edge::Left));
        assert!(!c.is_observed(Edge::Bottom));
        let bottom = c.edges.iter().find(|e| e.edge == Edge::Bottom).unwrap();
        assert!(bottom.nodes.iter().all(|&b| !b));
    }

    #[test]
    fn classification_is_refinement_invariant() {
        let p = CarlemanParams::default();
        let coarse = Mesh::new(10, 4, 6, 1.0, 1.0, 1.5, 0.0, 0.0).unwrap();
        let fine = Mesh::new(10, 64, 96, 1.0, 1.0, 1.5, 0.0, 0.0).unwrap();
        assert_eq!(
            classify_boundary(&coarse, &p).observed_edges(),
            classify_boundary(&fine, &p).observed_edges()
        );
    }

    #[test]
    fn condition_report_on_reference_domain() {
        let r = check_condition_psi2(&Mesh::reference(), &CarlemanParams::default(), 1.0);
        assert_abs_diff_eq!(r.r1_squared, 0.075, epsilon = 1e-12);
        assert_abs_diff_eq!(r.min_quarter_grad_sq, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(r.min_grad_norm, 1.0, epsilon = 1e-12);
        assert!(r.quarter_grad_bound_holds);
        assert_abs_diff_eq!(r.c0_upper_bound, (0.075f64 / 2.0).sqrt(), epsilon = 1e-12);
        assert!(r.c0_upper_bound < 0.195 && r.c0_upper_bound > 0.193);
        assert!(!r.c0_bound_holds);
        assert!(r.grad_nonvanishing);
    }

    proptest! {
        #[test]
        fn theta_ratio_is_spatially_constant(t in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.5) {
            let p = CarlemanParams::default();
            let ratio = p.theta(t, x, y) / p.theta0(x, y);
            let expected = (-p.lambda * p.c0 * t * t).exp();
            prop_assert!((ratio - expected).abs() < 1e-13);
        }

        #[test]
        fn larger_lambda_shrinks_negative_exponent(t in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.4, dl in 0.0f64..2.0) {
            let p = CarlemanParams::default();
            prop_assume!(p.psi(x, y) < 0.0);
            let q = CarlemanParams { lambda: p.lambda + dl, ..p };
            prop_assert!(q.theta(t, x, y) <= p.theta(t, x, y));
        }
    }
}
