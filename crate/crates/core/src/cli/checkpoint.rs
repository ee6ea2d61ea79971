//! Binary checkpoints.
//!
//! Layout (all little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic | `b"FWLB"` |
//! | version | u16 |
//! | dim | u8 |
//! | n_per_axis | u32 |
//! | basis | u8 (0 torus, 1 Dirichlet) |
//! | gamma, theta, t | f64 |
//! | u, v | `(re, im)` f64 pairs |
//! | axis_length | f64 |
//! | forcing | `(re, im)` f64 pairs |
//! | nonlinearity | u32 byte length, then JSON |
//!
//! Coefficients are listed in lexicographic wavenumber order: axis 0 is the
//! slowest and each axis runs through its wavenumbers in increasing order.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{ModelParams, SimState};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{Basis, Complex64, Grid, SpectralField};

pub const MAGIC: &[u8; 4] = b"FWLB";
pub const VERSION: u16 = 1;

/// Storage indices in lexicographic wavenumber order.
fn lexicographic_order(grid: &Grid) -> Vec<usize> {
    let n = grid.n_per_axis();
    let mut axis: Vec<usize> = (0..n).collect();
    let k = grid.axis_wavenumbers();
    axis.sort_by_key(|&i| k[i]);
    let dim = grid.dim();
    let mut out = Vec::with_capacity(grid.len());
    let mut multi = [0usize; 3];
    for flat in 0..grid.len() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            multi[a] = axis[rem % n];
            rem /= n;
        }
        out.push(grid.flat_index(&multi[..dim]));
    }
    out
}

fn put_f64(buf: &mut Vec<u8>, x: f64) {
    buf.extend_from_slice(&x.to_le_bytes());
}

fn put_coeffs(buf: &mut Vec<u8>, c: &[Complex64], order: &[usize]) {
    for &i in order {
        put_f64(buf, c[i].re);
        put_f64(buf, c[i].im);
    }
}

pub fn encode_checkpoint(state: &SimState, params: &ModelParams) -> Result<Vec<u8>> {
    let grid = state.grid();
    if !grid.same_as(params.grid()) {
        return Err(Error::GridMismatch);
    }
    let scalars = [params.gamma, params.theta, state.t];
    if scalars.iter().any(|x| !x.is_finite())
        || !state.u.is_finite()
        || !state.v.is_finite()
        || !params.forcing.is_finite()
    {
        return Err(Error::Checkpoint("refusing to write non-finite values".into()));
    }
    let order = lexicographic_order(grid);
    let json = serde_json::to_vec(&params.nonlinearity)?;
    let mut buf = Vec::with_capacity(64 + 48 * grid.len() + json.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(grid.dim() as u8);
    buf.extend_from_slice(&(grid.n_per_axis() as u32).to_le_bytes());
    buf.push(grid.basis().code());
    for x in scalars {
        put_f64(&mut buf, x);
    }
    put_coeffs(&mut buf, state.u.coeffs(), &order);
    put_coeffs(&mut buf, state.v.coeffs(), &order);
    put_f64(&mut buf, grid.axis_length());
    put_coeffs(&mut buf, params.forcing.coeffs(), &order);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Checkpoint(format!(
                "truncated: needed {n} bytes at offset {}, {} left",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn f64(&mut self) -> Result<f64> {
        let x = f64::from_le_bytes(self.array()?);
        if !x.is_finite() {
            return Err(Error::Checkpoint(format!(
                "non-finite value at offset {}",
                self.pos - 8
            )));
        }
        Ok(x)
    }

    fn coeffs(&mut self, grid: &Arc<Grid>, order: &[usize]) -> Result<SpectralField> {
        let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
        for &i in order {
            let re = self.f64()?;
            let im = self.f64()?;
            c[i] = Complex64::new(re, im);
        }
        SpectralField::new(grid.clone(), c)
    }
}

/// Fixed-size header fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointHeader {
    pub version: u16,
    pub dim: usize,
    pub n_per_axis: usize,
    pub basis: Basis,
    pub gamma: f64,
    pub theta: f64,
    pub t: f64,
}

fn read_header(r: &mut Reader) -> Result<CheckpointHeader> {
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version} (this reader handles version {VERSION})"
        )));
    }
    let dim = r.array::<1>()?[0] as usize;
    let n_per_axis = u32::from_le_bytes(r.array()?) as usize;
    let code = r.array::<1>()?[0];
    let basis = Basis::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown basis code {code}")))?;
    Ok(CheckpointHeader {
        version,
        dim,
        n_per_axis,
        basis,
        gamma: r.f64()?,
        theta: r.f64()?,
        t: r.f64()?,
    })
}

/// Reads only the header; the body is not validated.
pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    read_header(&mut Reader { bytes, pos: 0 })
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(SimState, ModelParams)> {
    let mut r = Reader { bytes, pos: 0 };
    let h = read_header(&mut r)?;
    if !(1..=3).contains(&h.dim) || h.n_per_axis == 0 {
        return Err(Error::Checkpoint(format!(
            "bad grid shape dim={} n={}",
            h.dim, h.n_per_axis
        )));
    }
    let expected_min = (h.n_per_axis as u128).pow(h.dim as u32) * 48;
    if (bytes.len() as u128) < expected_min {
        return Err(Error::Checkpoint("truncated coefficient block".into()));
    }
    // The axis length sits after the state; read it first to build the grid.
    let len = h.n_per_axis.pow(h.dim as u32);
    let mut peek = Reader {
        bytes,
        pos: r.pos + 32 * len,
    };
    let axis_length = peek.f64()?;
    let grid = Arc::new(
        Grid::with_axis_length(h.dim, h.n_per_axis, h.basis, axis_length)
            .map_err(|e| Error::Checkpoint(e.to_string()))?,
    );
    let order = lexicographic_order(&grid);
    let u = r.coeffs(&grid, &order)?;
    let v = r.coeffs(&grid, &order)?;
    r.f64()?;
    let forcing = r.coeffs(&grid, &order)?;
    let json_len = u32::from_le_bytes(r.array()?) as usize;
    let nonlinearity: NonlinearitySpec =
        serde_json::from_slice(r.take(json_len)?).map_err(|e| Error::Checkpoint(format!("nonlinearity: {e}")))?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let state = SimState::new(h.t, u, v)?;
    let params = ModelParams {
        gamma: h.gamma,
        theta: h.theta,
        nonlinearity,
        forcing,
    };
    Ok((state, params))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_checkpoint(state: &SimState, params: &ModelParams, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(state, params)?;
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(SimState, ModelParams)> {
    decode_checkpoint(&std::fs::read(path)?)
}
