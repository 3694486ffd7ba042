//! Fused evaluation of `J` and its full-grid gradient.
//!
//! One sweep over the interior computes every stencil at a node, accumulates
//! its weighted square and scatters the transpose of the stencil times the
//! adjoint weight into the gradient.

use super::ObjectiveContext;
use crate::mesh::Field;

pub(super) fn value_and_grad(ctx: &ObjectiveContext, u: &Field, grad: &mut [f64]) -> f64 {
    let m = ctx.mesh;
    let (vol_data, vol) = ctx.volumes();
    let kappa = ctx.settings.kappa;
    let u = u.as_slice();
    grad.iter_mut().for_each(|g| *g = 0.0);

    let sk = m.slice_len();
    let si = m.ny + 1;
    let inv_tau = 1.0 / m.tau;
    let inv_hx = 1.0 / m.hx;
    let inv_hy = 1.0 / m.hy;
    let inv_tau2 = inv_tau * inv_tau;
    let inv_hx2 = inv_hx * inv_hx;
    let inv_hy2 = inv_hy * inv_hy;
    let inv_hxhy = inv_hx * inv_hy;
    let inv_hxt = inv_hx * inv_tau;
    let inv_hyt = inv_hy * inv_tau;
    let centre = -2.0 * inv_tau2 + 2.0 * inv_hx2 + 2.0 * inv_hy2;

    let mut total = 0.0;
    for k in 1..m.m {
        let decay = ctx.decay[k];
        let mut slice_total = 0.0;
        for i in 1..m.nx {
            let row = k * sk + i * si;
            for j in 1..m.ny {
                let c = row + j;
                let s = i * si + j;
                let uc = u[c];
                let ukp = u[c + sk];
                let ukm = u[c - sk];
                let uip = u[c + si];
                let uim = u[c - si];
                let ujp = u[c + 1];
                let ujm = u[c - 1];
                let uipjp = u[c + si + 1];
                let ukpip = u[c + sk + si];
                let ukpjp = u[c + sk + 1];

                // data term
                let adw = ctx.a_dw[c];
                let phi = (ukp - 2.0 * uc + ukm) * inv_tau2
                    - (uip - 2.0 * uc + uim) * inv_hx2
                    - (ujp - 2.0 * uc + ujm) * inv_hy2
                    - adw * uc;
                let r = phi - ctx.f_prev[c];
                let wd = vol_data * ctx.theta0_sq[s] * decay;
                let rho = 2.0 * wd * r;
                let mut acc = wd * r * r;
                let mut gc = rho * (centre - adw);
                grad[c + sk] += rho * inv_tau2;
                grad[c - sk] += rho * inv_tau2;
                grad[c + si] -= rho * inv_hx2;
                grad[c - si] -= rho * inv_hx2;
                grad[c + 1] -= rho * inv_hy2;
                grad[c - 1] -= rho * inv_hy2;

                // regularizer
                let wr = vol * kappa * ctx.theta0_sq[s];
                let w2 = 2.0 * wr;
                let ut = (ukp - uc) * inv_tau;
                let gx = (uip - uc) * inv_hx;
                let gy = (ujp - uc) * inv_hy;
                let uxx = (uip - 2.0 * uc + uim) * inv_hx2;
                let uyy = (ujp - 2.0 * uc + ujm) * inv_hy2;
                let uxy = (uipjp - uip - ujp + uc) * inv_hxhy;
                let utx = (ukpip - ukp - uip + uc) * inv_hxt;
                let uty = (ukpjp - ukp - ujp + uc) * inv_hyt;
                acc += wr
                    * (uc * uc
                        + ut * ut
                        + gx * gx
                        + gy * gy
                        + uxx * uxx
                        + uyy * uyy
                        + uxy * uxy
                        + utx * utx
                        + uty * uty);

                let q_ut = w2 * ut * inv_tau;
                let q_gx = w2 * gx * inv_hx;
                let q_gy = w2 * gy * inv_hy;
                let q_xx = w2 * uxx * inv_hx2;
                let q_yy = w2 * uyy * inv_hy2;
                let q_xy = w2 * uxy * inv_hxhy;
                let q_tx = w2 * utx * inv_hxt;
                let q_ty = w2 * uty * inv_hyt;

                gc += w2 * uc - q_ut - q_gx - q_gy - 2.0 * q_xx - 2.0 * q_yy + q_xy + q_tx + q_ty;
                grad[c + sk] += q_ut - q_tx - q_ty;
                grad[c + si] += q_gx + q_xx - q_xy - q_tx;
                grad[c + 1] += q_gy + q_yy - q_xy - q_ty;
                grad[c - si] += q_xx;
                grad[c - 1] += q_yy;
                grad[c + si + 1] += q_xy;
                grad[c + sk + si] += q_tx;
                grad[c + sk + 1] += q_ty;
                grad[c] += gc;

                slice_total += acc;
            }
        }
        total += slice_total;
    }
    total
}
