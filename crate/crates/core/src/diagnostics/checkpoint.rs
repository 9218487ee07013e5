//! `.fkp` snapshots.
//!
//! Layout, all little endian: magic `FKPD`, `u32` version, `u32` grid points
//! per axis, `u32` basis size, `u32` radial and angular quadrature sizes,
//! `f64` extensibility `b`, `f64` time, `u64` step, `u32` count of auxiliary
//! accumulators followed by that many `f64`, then the coefficient blocks of
//! `r`, `u` and `psi` as interleaved `(re, im)` pairs in storage order.

use std::path::Path;

use num_complex::Complex64;

use crate::config_space::ConfigBasis;
use crate::coupling::CoupledState;
use crate::error::{FeneError, Result};
use crate::fluid::FluidState;
use crate::fokker_planck::PolymerField;
use crate::spectral::{SpectralField, TorusGrid};

use super::series::write_atomic;

pub const MAGIC: &[u8; 4] = b"FKPD";
pub const VERSION: u32 = 1;

/// A coupled state together with the run counters needed to resume it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: CoupledState,
    pub step: u64,
    pub aux: Vec<f64>,
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let s = &ck.state;
    let grid = s.fluid.grid();
    let basis = s.psi.basis();
    let quad = basis.quad();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        grid.n() as u32,
        basis.n_basis() as u32,
        quad.n_radial() as u32,
        quad.n_angular() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&quad.b().to_le_bytes());
    out.extend_from_slice(&s.time.to_le_bytes());
    out.extend_from_slice(&ck.step.to_le_bytes());
    out.extend_from_slice(&(ck.aux.len() as u32).to_le_bytes());
    for a in &ck.aux {
        out.extend_from_slice(&a.to_le_bytes());
    }
    for field in [&s.fluid.r, &s.fluid.u, s.psi.coeffs()] {
        for c in field.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(FeneError::Truncated(format!(
                "needed {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn field(&mut self, grid: &TorusGrid, ncomp: usize) -> Result<SpectralField> {
        let n = ncomp * grid.len();
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            let re = self.f64()?;
            let im = self.f64()?;
            c.push(Complex64::new(re, im));
        }
        SpectralField::from_raw_coeffs(grid, ncomp, c)
    }
}

/// Decodes a snapshot; `basis` must match the one it was written with.
pub fn decode(bytes: &[u8], basis: &ConfigBasis) -> Result<Checkpoint> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(FeneError::Version(format!("bad magic {magic:?}")));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(FeneError::Version(format!(
            "format version {version}, this build reads {VERSION}"
        )));
    }
    let n = cur.u32()? as usize;
    let n_basis = cur.u32()? as usize;
    let n_radial = cur.u32()? as usize;
    let n_angular = cur.u32()? as usize;
    let b = cur.f64()?;
    let quad = basis.quad();
    if n_basis != basis.n_basis()
        || n_radial != quad.n_radial()
        || n_angular != quad.n_angular()
        || b != quad.b()
    {
        return Err(FeneError::InvalidParameter(format!(
            "snapshot basis (b = {b}, {n_radial}x{n_angular}, {n_basis} modes) differs from configured basis \
             (b = {}, {}x{}, {} modes)",
            quad.b(),
            quad.n_radial(),
            quad.n_angular(),
            basis.n_basis()
        )));
    }
    let time = cur.f64()?;
    let step = cur.u64()?;
    let n_aux = cur.u32()? as usize;
    let aux = (0..n_aux).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
    let grid = TorusGrid::new(n)?;
    let r = cur.field(&grid, 1)?;
    let u = cur.field(&grid, 2)?;
    let psi = cur.field(&grid, n_basis)?;
    if cur.pos != bytes.len() {
        return Err(FeneError::Version(format!(
            "{} trailing bytes after the last block",
            bytes.len() - cur.pos
        )));
    }
    let fluid = FluidState::new(r, u, time)?;
    let psi = PolymerField::new(basis, psi, time)?;
    Ok(Checkpoint {
        state: CoupledState::new(fluid, psi)?,
        step,
        aux,
    })
}

pub fn checkpoint_save(ck: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode(ck))
}

pub fn checkpoint_load(path: &Path, basis: &ConfigBasis) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| FeneError::Io(format!("{}: {e}", path.display())))?;
    decode(&bytes, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{build_quadrature, eigen_basis};
    use crate::fokker_planck::ModeTerm;

    fn sample() -> (ConfigBasis, Checkpoint) {
        let quad = build_quadrature(4.0, 16, 16).unwrap();
        let basis = eigen_basis(&quad, 8).unwrap();
        let grid = TorusGrid::new(8).unwrap();
        let r = SpectralField::forward(&grid, 1, &grid.sample(|x| 2.0 + 0.1 * x[0].cos())).unwrap();
        let u = SpectralField::forward(&grid, 2, &[grid.sample(|x| x[1].sin()), grid.sample(|x| 0.3 * x[0].cos())].concat())
            .unwrap();
        let mut fluid = FluidState::new(r, u, 0.0).unwrap();
        fluid.time = 0.125;
        let mut psi = PolymerField::perturbed_equilibrium(
            &grid,
            &basis,
            &[ModeTerm { basis_index: 2, amplitude: 0.01, wave: [1, 2], sine: true }],
        )
        .unwrap();
        psi.time = 0.125;
        let state = CoupledState::new(fluid, psi).unwrap();
        (basis, Checkpoint { state, step: 125, aux: vec![1.5, -0.0, 3e-300] })
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (basis, ck) = sample();
        let bytes = encode(&ck);
        let back = decode(&bytes, &basis).unwrap();
        assert_eq!(back, ck);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn wrong_magic_and_truncation() {
        let (basis, ck) = sample();
        let mut bytes = encode(&ck);
        assert!(matches!(decode(&bytes[..bytes.len() - 3], &basis), Err(FeneError::Truncated(_))));
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes, &basis), Err(FeneError::Version(_))));
        let mut bytes = encode(&ck);
        bytes[4] = 9;
        assert!(matches!(decode(&bytes, &basis), Err(FeneError::Version(_))));
    }
}
