//! Lateral Cauchy data: the Dirichlet trace on the whole boundary and the
//! one-sided Neumann trace on the observed edges (right, left, top).

use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh, RawArray};

/// Dirichlet values `f` on every boundary node at every time level.
///
/// Node order within a time level: left edge `(0, 0..=Ny)`, right edge
/// `(Nx, 0..=Ny)`, bottom edge `(1..Nx, 0)`, top edge `(1..Nx, Ny)`. Each
/// boundary node appears exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletTrace {
    mesh: Mesh,
    values: Vec<f64>,
}

impl DirichletTrace {
    pub fn nodes_per_level(mesh: &Mesh) -> usize {
        2 * (mesh.ny + 1) + 2 * (mesh.nx - 1)
    }

    /// Position of boundary node `(i, j)` inside one time level.
    #[inline]
    pub fn node_index(mesh: &Mesh, i: usize, j: usize) -> Option<usize> {
        let side = mesh.ny + 1;
        if i == 0 {
            Some(j)
        } else if i == mesh.nx {
            Some(side + j)
        } else if j == 0 {
            Some(2 * side + i - 1)
        } else if j == mesh.ny {
            Some(2 * side + mesh.nx - 1 + i - 1)
        } else {
            None
        }
    }

    /// Spatial node of each entry inside a time level.
    pub fn node_list(mesh: &Mesh) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(Self::nodes_per_level(mesh));
        out.extend((0..=mesh.ny).map(|j| (0, j)));
        out.extend((0..=mesh.ny).map(|j| (mesh.nx, j)));
        out.extend((1..mesh.nx).map(|i| (i, 0)));
        out.extend((1..mesh.nx).map(|i| (i, mesh.ny)));
        out
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let nodes = Self::node_list(mesh);
        let mut values = Vec::with_capacity((mesh.m + 1) * nodes.len());
        for k in 0..=mesh.m {
            for &(i, j) in &nodes {
                values.push(f(mesh.t(k), mesh.x(i), mesh.y(j)));
            }
        }
        Self { mesh: *mesh, values }
    }

    pub fn from_field(u: &Field) -> Self {
        let mesh = *u.mesh();
        let nodes = Self::node_list(&mesh);
        let mut values = Vec::with_capacity((mesh.m + 1) * nodes.len());
        for k in 0..=mesh.m {
            for &(i, j) in &nodes {
                values.push(u.get(k, i, j));
            }
        }
        Self { mesh, values }
    }

    /// Time-independent trace of a spatial function.
    pub fn stationary(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(mesh, |_, x, y| f(x, y))
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = Self::node_index(&self.mesh, i, j).expect("not a boundary node");
        self.values[k * Self::nodes_per_level(&self.mesh) + n]
    }

    /// Overwrite the boundary of the spatial slice at level `k`.
    pub fn write_level(&self, k: usize, slice: &mut [f64]) {
        let per = Self::nodes_per_level(&self.mesh);
        let level = &self.values[k * per..(k + 1) * per];
        for (&(i, j), v) in Self::node_list(&self.mesh).iter().zip(level) {
            slice[self.mesh.sidx(i, j)] = *v;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// One-sided normal derivatives on the observed edges.
///
/// Node order within a time level: right edge `j = 0..=Ny`, left edge
/// `j = 0..=Ny`, top edge `i = 0..=Nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannTrace {
    mesh: Mesh,
    values: Vec<f64>,
}

impl NeumannTrace {
    pub fn nodes_per_level(mesh: &Mesh) -> usize {
        2 * (mesh.ny + 1) + mesh.nx + 1
    }

    #[inline]
    fn at(&self, k: usize, n: usize) -> f64 {
        self.values[k * Self::nodes_per_level(&self.mesh) + n]
    }

    #[inline]
    pub fn right(&self, k: usize, j: usize) -> f64 {
        self.at(k, j)
    }

    #[inline]
    pub fn left(&self, k: usize, j: usize) -> f64 {
        self.at(k, self.mesh.ny + 1 + j)
    }

    #[inline]
    pub fn top(&self, k: usize, i: usize) -> f64 {
        self.at(k, 2 * (self.mesh.ny + 1) + i)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Right: `(u_{Nx} − u_{Nx−1})/hx`; left: `(u_0 − u_1)/hx`; top:
/// `(u_{Ny} − u_{Ny−1})/hy`. The bottom edge is not observed.
pub fn extract_neumann(u: &Field) -> NeumannTrace {
    let m = *u.mesh();
    let mut values = Vec::with_capacity((m.m + 1) * NeumannTrace::nodes_per_level(&m));
    for k in 0..=m.m {
        for j in 0..=m.ny {
            values.push((u.get(k, m.nx, j) - u.get(k, m.nx - 1, j)) / m.hx);
        }
        for j in 0..=m.ny {
            values.push((u.get(k, 0, j) - u.get(k, 1, j)) / m.hx);
        }
        for i in 0..=m.nx {
            values.push((u.get(k, i, m.ny) - u.get(k, i, m.ny - 1)) / m.hy);
        }
    }
    NeumannTrace { mesh: m, values }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub path_id: u64,
    pub f: DirichletTrace,
    pub g: NeumannTrace,
}

impl CauchyData {
    pub fn new(path_id: u64, f: DirichletTrace, g: NeumannTrace) -> Result<Self> {
        if f.mesh != g.mesh {
            return Err(Error::Config("Dirichlet and Neumann traces live on different meshes".into()));
        }
        Ok(Self { path_id, f, g })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.f.mesh
    }

    pub fn dirichlet_values(&self) -> impl Iterator<Item = &f64> {
        self.f.values.iter()
    }

    pub fn neumann_values(&self) -> impl Iterator<Item = &f64> {
        self.g.values.iter()
    }

    pub fn dirichlet_values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.f.values.iter_mut()
    }

    pub fn neumann_values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.g.values.iter_mut()
    }

    /// `(f, g)` as `(M+1) × nodes` arrays carrying the mesh parameters.
    pub fn to_raw(&self) -> (RawArray, RawArray) {
        let m = self.mesh();
        let mk = |values: &Vec<f64>, per: usize| {
            let mut raw = RawArray::from_mesh(m, values.clone());
            raw.dims = [(m.m + 1) as u64, per as u64, 1];
            raw
        };
        (
            mk(&self.f.values, DirichletTrace::nodes_per_level(m)),
            mk(&self.g.values, NeumannTrace::nodes_per_level(m)),
        )
    }

    pub fn from_raw(mesh: Mesh, path_id: u64, f: RawArray, g: RawArray) -> Result<Self> {
        let check = |raw: &RawArray, per: usize| -> Result<()> {
            let expected = [(mesh.m + 1) as u64, per as u64, 1];
            if raw.dims != expected {
                return Err(Error::Config(format!(
                    "trace dims {:?} do not match mesh (expected {:?})",
                    raw.dims, expected
                )));
            }
            Ok(())
        };
        check(&f, DirichletTrace::nodes_per_level(&mesh))?;
        check(&g, NeumannTrace::nodes_per_level(&mesh))?;
        Ok(Self {
            path_id,
            f: DirichletTrace {
                mesh,
                values: f.data,
            },
            g: NeumannTrace {
                mesh,
                values: g.data,
            },
        })
    }
}

/// Both traces of a field.
pub fn extract_cauchy(u: &Field, path_id: u64) -> CauchyData {
    CauchyData {
        path_id,
        f: DirichletTrace::from_field(u),
        g: extract_neumann(u),
    }
}
