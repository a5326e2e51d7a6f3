//! The `CDF1` field container: 4-byte magic, little-endian header length,
//! JSON header, then a raw little-endian payload (complex entries stored as
//! (re, im) pairs, row-major over [time, space axes..., arity]).

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::geometry::{Domain, SpaceTimeGrid};
use crate::scalar::Scalar;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &[u8; 4] = b"CDF1";

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    box_extents: Vec<[f64; 2]>,
    x0: Vec<f64>,
    t_final: f64,
    nx: Vec<usize>,
    nt: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    /// [n_time_levels, nx1, ..., nxn]
    shape: Vec<usize>,
    arity: usize,
    dtype: String,
    order: String,
    grid: GridHeader,
}

fn header_for(grid: &SpaceTimeGrid, arity: usize, dtype: &str) -> Header {
    let domain = grid.domain();
    let mut shape = vec![grid.n_levels()];
    shape.extend_from_slice(grid.nx());
    Header {
        shape,
        arity,
        dtype: dtype.to_string(),
        order: "row-major".to_string(),
        grid: GridHeader {
            box_extents: (0..domain.dim())
                .map(|a| [domain.lo()[a], domain.hi()[a]])
                .collect(),
            x0: domain.x0().to_vec(),
            t_final: domain.t_final(),
            nx: grid.nx().to_vec(),
            nt: grid.nt(),
        },
    }
}

fn grid_from_header(h: &Header) -> Result<Arc<SpaceTimeGrid>> {
    let lo = h.grid.box_extents.iter().map(|e| e[0]).collect();
    let hi = h.grid.box_extents.iter().map(|e| e[1]).collect();
    let domain = Domain::new(lo, hi, h.grid.x0.clone(), h.grid.t_final)?;
    Ok(Arc::new(SpaceTimeGrid::new(
        domain,
        h.grid.nx.clone(),
        h.grid.nt,
    )?))
}

/// Payload element codec shared by `f64` and `Complex64`.
pub trait Cdf1Dtype: Scalar {
    const DTYPE: &'static str;
    const WIDTH: usize;
    fn write_to(self, out: &mut Vec<u8>);
    fn read_from(bytes: &[u8]) -> Self;
}

impl Cdf1Dtype for f64 {
    const DTYPE: &'static str = "f64";
    const WIDTH: usize = 8;
    fn write_to(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_from(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
}

impl Cdf1Dtype for Complex64 {
    const DTYPE: &'static str = "c128";
    const WIDTH: usize = 16;
    fn write_to(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
    fn read_from(bytes: &[u8]) -> Self {
        Complex64::new(
            f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            f64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        )
    }
}

fn write_container<W: Write>(
    mut w: W,
    header: &Header,
    payload: &[u8],
) -> Result<()> {
    let header_json = serde_json::to_vec(header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(header_json.len() as u32).to_le_bytes())?;
    w.write_all(&header_json)?;
    w.write_all(payload)?;
    Ok(())
}

fn read_container<R: Read>(mut r: R) -> Result<(Header, Vec<u8>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a CDF1 container".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    let mut header_json = vec![0u8; len];
    r.read_exact(&mut header_json)?;
    let header: Header = serde_json::from_slice(&header_json)?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    Ok((header, payload))
}

/// Writes a scalar or vector field; vector components are interleaved per
/// node in axis order.
pub fn write_field<T: Cdf1Dtype>(path: &Path, components: &[&ScalarField<T>]) -> Result<()> {
    let arity = components.len();
    if arity == 0 {
        return Err(Error::InvalidArgument("no components to write".into()));
    }
    let grid = components[0].grid_arc();
    for c in components {
        components[0].same_grid(c)?;
    }
    let header = header_for(&grid, arity, T::DTYPE);
    let n = grid.n_levels() * grid.n_space();
    let mut payload = Vec::with_capacity(n * arity * T::WIDTH);
    for i in 0..n {
        for c in components {
            c.values()[i].write_to(&mut payload);
        }
    }
    let file = std::fs::File::create(path)?;
    write_container(std::io::BufWriter::new(file), &header, &payload)
}

pub fn write_scalar<T: Cdf1Dtype>(path: &Path, field: &ScalarField<T>) -> Result<()> {
    write_field(path, &[field])
}

pub fn write_vector<T: Cdf1Dtype>(path: &Path, field: &VectorField<T>) -> Result<()> {
    let refs: Vec<&ScalarField<T>> = field.components().iter().collect();
    write_field(path, &refs)
}

/// Reads a field back; returns the grid and per-component value vectors.
pub fn read_field<T: Cdf1Dtype>(path: &Path) -> Result<(Arc<SpaceTimeGrid>, Vec<ScalarField<T>>)> {
    let file = std::fs::File::open(path)?;
    let (header, payload) = read_container(std::io::BufReader::new(file))?;
    if header.dtype != T::DTYPE {
        return Err(Error::InvalidArgument(format!(
            "dtype mismatch: container holds {}, requested {}",
            header.dtype,
            T::DTYPE
        )));
    }
    if header.order != "row-major" {
        return Err(Error::InvalidArgument(format!(
            "unsupported payload order {}",
            header.order
        )));
    }
    let grid = grid_from_header(&header)?;
    let n = grid.n_levels() * grid.n_space();
    let expected = n * header.arity * T::WIDTH;
    if payload.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "payload holds {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut components = vec![Vec::with_capacity(n); header.arity];
    let mut offset = 0;
    for _ in 0..n {
        for comp in components.iter_mut() {
            comp.push(T::read_from(&payload[offset..]));
            offset += T::WIDTH;
        }
    }
    let fields = components
        .into_iter()
        .map(|values| ScalarField::from_values(grid.clone(), values))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, fields))
}

/// JSON sidecar describing an exported CGO solution.
#[derive(Debug, Serialize, Deserialize)]
pub struct CgoSidecar {
    pub kind: String,
    pub x0: Vec<f64>,
    pub omega: Vec<f64>,
    pub h: f64,
    pub eps: f64,
    pub residual_metrics: serde_json::Value,
}

pub fn write_sidecar(path: &Path, sidecar: &CgoSidecar) -> Result<()> {
    let json = serde_json::to_string_pretty(sidecar)?;
    std::fs::write(path, json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn scalar_roundtrip_preserves_bits() {
        let grid = Arc::new(
            SpaceTimeGrid::uniform(Domain::unit_square_default(), 6, 3).unwrap(),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f = ScalarField::from_fn(grid.clone(), |t, x| {
            t + x[0] * 3.1 - x[1] + rng_hash(x) * 0.0
        })
        .map(|v| v + 0.0);
        let mut values = f.values().to_vec();
        for v in values.iter_mut() {
            *v += rng.gen_range(-1.0..1.0);
        }
        let f = ScalarField::from_values(grid, values).unwrap();
        let dir = std::env::temp_dir().join("cgolab_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scalar.cdf1");
        write_scalar(&path, &f).unwrap();
        let (grid2, fields) = read_field::<f64>(&path).unwrap();
        assert_eq!(grid2.as_ref(), f.grid());
        assert_eq!(fields.len(), 1);
        assert_eq!(fields[0].values(), f.values());
    }

    fn rng_hash(_x: &[f64]) -> f64 {
        0.0
    }

    #[test]
    fn complex_vector_roundtrip() {
        let grid = Arc::new(
            SpaceTimeGrid::uniform(Domain::unit_square_default(), 5, 2).unwrap(),
        );
        let c0 = ScalarField::from_fn(grid.clone(), |t, x| Complex64::new(t, x[0]));
        let c1 = ScalarField::from_fn(grid.clone(), |t, x| Complex64::new(x[1], -t));
        let vf = VectorField::new(vec![c0, c1]).unwrap();
        let dir = std::env::temp_dir().join("cgolab_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("vector.cdf1");
        write_vector(&path, &vf).unwrap();
        let (_, fields) = read_field::<Complex64>(&path).unwrap();
        assert_eq!(fields.len(), 2);
        for (a, b) in fields[0].values().iter().zip(vf.component(0).values()) {
            assert_eq!(a, b);
        }
        // Requesting the wrong dtype is rejected.
        assert!(read_field::<f64>(&path).is_err());
    }
}
