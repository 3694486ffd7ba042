//! Which rule defines each grid value of a feasible field.

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;

/// Treatment of the ring `j = 1`, which has no Neumann data behind it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BottomRingMode {
    /// Part of the unknowns.
    #[default]
    Free,
    /// Held at zero, the value of the trivial initial guess.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRule {
    /// Boundary node, value from `f`.
    Dirichlet,
    /// `u_{0,i,j} = u_{1,i,j}`.
    Mirror,
    /// `u_{k,Nx−1,j} = f_{k,Nx,j} − hx·g_right`.
    TiedRight,
    /// `u_{k,1,j} = f_{k,0,j} − hx·g_left`.
    TiedLeft,
    /// `u_{k,i,Ny−1} = f_{k,i,Ny} − hy·g_top`.
    TiedTop,
    Frozen,
    Free(usize),
}

/// Free unknowns `k ∈ [1, M]`, `i ∈ [2, Nx−2]`, `j ∈ [j_lo, Ny−2]`, numbered
/// with `j` fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofLayout {
    mesh: Mesh,
    j_lo: usize,
}

impl DofLayout {
    pub fn new(mesh: &Mesh, mode: BottomRingMode) -> Self {
        let j_lo = match mode {
            BottomRingMode::Free => 1,
            BottomRingMode::Frozen => 2,
        };
        Self { mesh: *mesh, j_lo }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    #[inline]
    pub fn i_range(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.mesh.nx - 2
    }

    #[inline]
    pub fn j_range(&self) -> std::ops::RangeInclusive<usize> {
        self.j_lo..=self.mesh.ny - 2
    }

    #[inline]
    fn ni(&self) -> usize {
        self.mesh.nx - 3
    }

    #[inline]
    fn nj(&self) -> usize {
        self.mesh.ny - 1 - self.j_lo
    }

    pub fn len(&self) -> usize {
        self.mesh.m * self.ni() * self.nj()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node(&self, dof: usize) -> (usize, usize, usize) {
        let nj = self.nj();
        let per_k = self.ni() * nj;
        let k = dof / per_k + 1;
        let rem = dof % per_k;
        (k, rem / nj + 2, rem % nj + self.j_lo)
    }

    #[inline]
    pub fn dof(&self, k: usize, i: usize, j: usize) -> Option<usize> {
        if k >= 1 && self.i_range().contains(&i) && self.j_range().contains(&j) {
            Some(((k - 1) * self.ni() + (i - 2)) * self.nj() + (j - self.j_lo))
        } else {
            None
        }
    }

    pub fn rule(&self, k: usize, i: usize, j: usize) -> NodeRule {
        let m = &self.mesh;
        if m.is_boundary(i, j) {
            NodeRule::Dirichlet
        } else if k == 0 {
            NodeRule::Mirror
        } else if i == m.nx - 1 {
            NodeRule::TiedRight
        } else if i == 1 {
            NodeRule::TiedLeft
        } else if j == m.ny - 1 {
            NodeRule::TiedTop
        } else if j < self.j_lo {
            NodeRule::Frozen
        } else {
            NodeRule::Free(self.dof(k, i, j).expect("free node has a dof"))
        }
    }
}
