//! Divided differences on a [`Field`].
//!
//! Index ranges are contracts: centred differences need an interior index in
//! their direction, forward differences need `k < M`, `i < Nx`, `j < Ny` along
//! the directions they touch.

use super::Field;

/// `(u_{k+1} - 2u_k + u_{k-1}) / τ`. One division by τ, matching the
/// increment form of the time-stepping scheme.
#[inline]
pub fn d2t(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    debug_assert!(k >= 1 && k < u.mesh().m);
    (u.get(k + 1, i, j) - 2.0 * u.get(k, i, j) + u.get(k - 1, i, j)) / u.mesh().tau
}

#[inline]
pub fn d2x(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    debug_assert!(i >= 1 && i < u.mesh().nx);
    let h = u.mesh().hx;
    (u.get(k, i + 1, j) - 2.0 * u.get(k, i, j) + u.get(k, i - 1, j)) / (h * h)
}

#[inline]
pub fn d2y(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    debug_assert!(j >= 1 && j < u.mesh().ny);
    let h = u.mesh().hy;
    (u.get(k, i, j + 1) - 2.0 * u.get(k, i, j) + u.get(k, i, j - 1)) / (h * h)
}

#[inline]
pub fn dt_fwd(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    debug_assert!(k < u.mesh().m);
    (u.get(k + 1, i, j) - u.get(k, i, j)) / u.mesh().tau
}

/// Forward-difference gradient `(gx, gy)`.
#[inline]
pub fn grad_fwd(u: &Field, k: usize, i: usize, j: usize) -> (f64, f64) {
    let m = u.mesh();
    debug_assert!(i < m.nx && j < m.ny);
    let c = u.get(k, i, j);
    ((u.get(k, i + 1, j) - c) / m.hx, (u.get(k, i, j + 1) - c) / m.hy)
}

#[inline]
pub fn dxy(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    let m = u.mesh();
    debug_assert!(i < m.nx && j < m.ny);
    (u.get(k, i + 1, j + 1) - u.get(k, i + 1, j) - u.get(k, i, j + 1) + u.get(k, i, j))
        / (m.hx * m.hy)
}

#[inline]
pub fn dtx(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    let m = u.mesh();
    debug_assert!(k < m.m && i < m.nx);
    (u.get(k + 1, i + 1, j) - u.get(k + 1, i, j) - u.get(k, i + 1, j) + u.get(k, i, j))
        / (m.hx * m.tau)
}

#[inline]
pub fn dty(u: &Field, k: usize, i: usize, j: usize) -> f64 {
    let m = u.mesh();
    debug_assert!(k < m.m && j < m.ny);
    (u.get(k + 1, i, j + 1) - u.get(k + 1, i, j) - u.get(k, i, j + 1) + u.get(k, i, j))
        / (m.hy * m.tau)
}
