//! Resampling a big-domain trajectory onto the inverse mesh.

use serde::{Deserialize, Serialize};

use super::traces::{extract_cauchy, CauchyData};
use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};

/// `[t0, t1] × [x0, x1] × [y0, y1]` in big-domain coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Window {
    pub fn origin(&self) -> (f64, f64) {
        (self.x.0, self.y.0)
    }
}

#[derive(Debug, Clone)]
pub struct Restricted {
    /// The resampled trajectory on the inverse mesh.
    pub field: Field,
    /// Its `k = 0` slice.
    pub u0_star: Vec<f64>,
    /// Clean traces of the resampled trajectory.
    pub data: CauchyData,
    /// Big-mesh time level that maps to level 0 of the inverse mesh.
    pub k0: usize,
}

const FIT_TOL: f64 = 1e-9;

/// Bilinear spatial resampling of `u_big` over `window`, shifted so that the
/// window's lower-left corner becomes `(small.ox, small.oy)`.
pub fn restrict_to_subdomain(
    u_big: &Field,
    window: &Window,
    small: &Mesh,
    path_id: u64,
) -> Result<Restricted> {
    let big = *u_big.mesh();
    if ((big.tau - small.tau) / big.tau).abs() > 1e-12 {
        return Err(Error::TimeStepMismatch {
            big: big.tau,
            small: small.tau,
        });
    }
    let lengths = [
        ("t", window.t, small.t_final),
        ("x", window.x, small.lx),
        ("y", window.y, small.ly),
    ];
    for (name, (a, b), len) in lengths {
        if ((b - a) - len).abs() > FIT_TOL * len.max(1.0) {
            return Err(Error::WindowOutOfBounds(format!(
                "{name}-extent {} does not match inverse mesh length {len}",
                b - a
            )));
        }
    }
    let inside = |(a, b): (f64, f64), lo: f64, hi: f64| a >= lo - FIT_TOL && b <= hi + FIT_TOL;
    if !inside(window.t, 0.0, big.t_final)
        || !inside(window.x, big.ox, big.ox + big.lx)
        || !inside(window.y, big.oy, big.oy + big.ly)
    {
        return Err(Error::WindowOutOfBounds(format!("{window:?} outside the big domain")));
    }
    let k0_real = window.t.0 / big.tau;
    let k0 = k0_real.round() as usize;
    if (k0_real - k0 as f64).abs() > 1e-9 || k0 + small.m > big.m {
        return Err(Error::WindowOutOfBounds(format!(
            "window start t = {} is not on the big time grid",
            window.t.0
        )));
    }

    let locate = |v: f64, origin: f64, h: f64, n: usize| -> (usize, f64) {
        let r = ((v - origin) / h).clamp(0.0, n as f64);
        let i0 = (r.floor() as usize).min(n - 1);
        (i0, r - i0 as f64)
    };
    let xs: Vec<(usize, f64)> = (0..=small.nx)
        .map(|i| locate(window.x.0 + i as f64 * small.hx, big.ox, big.hx, big.nx))
        .collect();
    let ys: Vec<(usize, f64)> = (0..=small.ny)
        .map(|j| locate(window.y.0 + j as f64 * small.hy, big.oy, big.hy, big.ny))
        .collect();

    let mut field = Field::zeros(*small);
    for k in 0..=small.m {
        let kb = k0 + k;
        for (i, &(ib, wx)) in xs.iter().enumerate() {
            for (j, &(jb, wy)) in ys.iter().enumerate() {
                let v00 = u_big.get(kb, ib, jb);
                let v10 = u_big.get(kb, ib + 1, jb);
                let v01 = u_big.get(kb, ib, jb + 1);
                let v11 = u_big.get(kb, ib + 1, jb + 1);
                let v = (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01) + wx * ((1.0 - wy) * v10 + wy * v11);
                field.set(k, i, j, v);
            }
        }
    }
    let u0_star = field.slice(0).to_vec();
    let data = extract_cauchy(&field, path_id);
    Ok(Restricted {
        field,
        u0_star,
        data,
        k0,
    })
}
