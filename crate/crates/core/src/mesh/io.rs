//! Flat binary array format.
//!
//! Layout (all little-endian):
//!
//! ```text
//! bytes  0..4    magic "CWI1"
//! bytes  4..28   three u64 dimensions (d0, d1, d2), d2 fastest
//! bytes 28..76   six f64 parameters [T, Lx, Ly, ox, oy, τ]
//! bytes 76..     d0·d1·d2 f64 values, row-major
//! ```
//!
//! For a field on a mesh the dimensions are the node counts `(M+1, Nx+1, Ny+1)`.
//! One-dimensional data (Brownian increments, boundary traces) use degenerate
//! trailing dimensions.

use std::io::{Read, Write};
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CWI1";

#[derive(Debug, Clone, PartialEq)]
pub struct RawArray {
    pub dims: [u64; 3],
    pub params: [f64; 6],
    pub data: Vec<f64>,
}

impl RawArray {
    pub fn new(dims: [u64; 3], params: [f64; 6], data: Vec<f64>) -> Result<Self> {
        let expected = dims.iter().product::<u64>() as usize;
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { dims, params, data })
    }

    pub fn from_mesh(mesh: &Mesh, data: Vec<f64>) -> Self {
        let (a, b, c) = mesh.shape();
        Self {
            dims: [a as u64, b as u64, c as u64],
            params: mesh_params(mesh),
            data,
        }
    }

    /// Rebuilds the mesh of a full 3-D field.
    pub fn mesh(&self) -> Result<Mesh> {
        let [d0, d1, d2] = self.dims;
        if d0 < 1 || d1 < 1 || d2 < 1 {
            return Err(Error::InvalidMesh(format!("degenerate dims {:?}", self.dims)));
        }
        let [t, lx, ly, ox, oy, _] = self.params;
        Mesh::new(
            d0 as usize - 1,
            d1 as usize - 1,
            d2 as usize - 1,
            t,
            lx,
            ly,
            ox,
            oy,
        )
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for d in self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for p in self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read<R: Read>(mut r: R) -> std::result::Result<Self, String> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| e.to_string())?;
        if &magic != MAGIC {
            return Err(format!("bad magic {magic:?}"));
        }
        let mut word = [0u8; 8];
        let mut dims = [0u64; 3];
        for d in &mut dims {
            r.read_exact(&mut word).map_err(|e| e.to_string())?;
            *d = u64::from_le_bytes(word);
        }
        let mut params = [0f64; 6];
        for p in &mut params {
            r.read_exact(&mut word).map_err(|e| e.to_string())?;
            *p = f64::from_le_bytes(word);
        }
        let n = dims
            .iter()
            .try_fold(1u64, |acc, d| acc.checked_mul(*d))
            .ok_or("dimension overflow")? as usize;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| e.to_string())?;
        if bytes.len() != n * 8 {
            return Err(format!("expected {} payload bytes, found {}", n * 8, bytes.len()));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, params, data })
    }
}

pub(crate) fn mesh_params(mesh: &Mesh) -> [f64; 6] {
    [mesh.t_final, mesh.lx, mesh.ly, mesh.ox, mesh.oy, mesh.tau]
}

pub fn write_raw(path: &Path, raw: &RawArray) -> Result<()> {
    let file = std::fs::File::create(path)?;
    raw.write(std::io::BufWriter::new(file))?;
    Ok(())
}

pub fn read_raw(path: &Path) -> Result<RawArray> {
    let file = std::fs::File::open(path)?;
    RawArray::read(std::io::BufReader::new(file)).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}
