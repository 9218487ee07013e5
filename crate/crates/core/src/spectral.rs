//! Fourier representation of real fields on the flat torus `[0, 2 pi)^2`.
//!
//! Coefficients follow the convention `f(x) = sum_k fhat_k exp(i k . x)` with
//! `fhat_k = N^-2 sum_j f(x_j) exp(-i k . x_j)`, so `int f^2 dx = (2 pi)^2 sum |fhat_k|^2`.
//! Storage is row-major over `(i1, i2)` where `x1 = 2 pi i1 / N` runs along
//! the slow axis.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{FeneError, Result};

/// Area of the torus.
pub const TORUS_AREA: f64 = 4.0 * PI * PI;

struct GridInner {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<i64>,
}

/// Uniform `N x N` collocation grid on the `2 pi`-periodic torus.
///
/// Cheap to clone; FFT plans are shared.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusGrid({}x{})", self.n(), self.n())
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
    }
}

impl TorusGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(FeneError::InvalidParameter(format!(
                "grid n_points = {n_points} must be even and >= 8"
            )));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_points);
        let inv = planner.plan_fft_inverse(n_points);
        let half = (n_points / 2) as i64;
        let wavenumbers = (0..n_points as i64)
            .map(|i| if i <= half { i } else { i - n_points as i64 })
            .collect();
        Ok(TorusGrid {
            inner: Arc::new(GridInner {
                n: n_points,
                fwd,
                inv,
                wavenumbers,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of grid points (`N^2`).
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn side(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    pub fn dim(&self) -> usize {
        2
    }

    /// Signed wave number stored at array index `i` (`-N/2+1 ..= N/2`).
    pub fn wavenumber(&self, i: usize) -> i64 {
        self.inner.wavenumbers[i]
    }

    /// Largest retained |k_i| under the 2/3 rule: quadratic products of
    /// fields band-limited to this cutoff alias only into discarded modes.
    pub fn dealias_cutoff(&self) -> usize {
        (self.n() - 1) / 3
    }

    /// Coordinates of grid point `(i1, i2)`.
    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        let h = self.spacing();
        [h * i1 as f64, h * i2 as f64]
    }

    /// Flat index of `(i1, i2)`.
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n() + i2
    }

    /// Array index of the mode `-k`.
    fn mirror(&self, i: usize) -> usize {
        (self.n() - i) % self.n()
    }

    /// Evaluate `f` at every grid point, row-major.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                out.push(f(self.point(i1, i2)));
            }
        }
        out
    }

    /// In-place 2-D transform of one `N x N` block.
    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n();
        let plan = if inverse {
            &self.inner.inv
        } else {
            &self.inner.fwd
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// A real scalar, vector or tensor field stored as Fourier coefficients.
///
/// Components are stored contiguously, `ncomp` blocks of `N^2` coefficients.
/// Vector fields use components `(u1, u2)`; tensor fields use
/// `(T11, T12, T21, T22)`.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    ncomp: usize,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("ncomp", &self.ncomp)
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid, ncomp: usize) -> Self {
        SpectralField {
            grid: grid.clone(),
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); ncomp * grid.len()],
        }
    }

    /// Field that is constant per component.
    pub fn constant(grid: &TorusGrid, values: &[f64]) -> Self {
        let mut f = SpectralField::zeros(grid, values.len());
        for (c, v) in values.iter().enumerate() {
            f.comp_mut(c)[0] = Complex64::new(*v, 0.0);
        }
        f
    }

    /// Build from raw coefficients, projecting onto Hermitian symmetry so
    /// that the represented field is real.
    pub fn from_coeffs(grid: &TorusGrid, ncomp: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != ncomp * grid.len() {
            return Err(FeneError::SizeMismatch {
                expected: ncomp * grid.len(),
                got: coeffs.len(),
            });
        }
        let mut f = SpectralField {
            grid: grid.clone(),
            ncomp,
            coeffs,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Build from raw coefficients exactly as given.
    pub(crate) fn from_raw_coeffs(grid: &TorusGrid, ncomp: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != ncomp * grid.len() {
            return Err(FeneError::SizeMismatch {
                expected: ncomp * grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            ncomp,
            coeffs,
        })
    }

    /// Forward transform of grid values (component-major, row-major).
    pub fn forward(grid: &TorusGrid, ncomp: usize, values: &[f64]) -> Result<Self> {
        let len = grid.len();
        if values.len() != ncomp * len {
            return Err(FeneError::SizeMismatch {
                expected: ncomp * len,
                got: values.len(),
            });
        }
        let scale = 1.0 / len as f64;
        let mut coeffs: Vec<Complex64> = values
            .iter()
            .map(|&v| Complex64::new(v * scale, 0.0))
            .collect();
        for block in coeffs.chunks_mut(len) {
            grid.fft2(block, false);
        }
        Ok(SpectralField {
            grid: grid.clone(),
            ncomp,
            coeffs,
        })
    }

    /// Grid values of every component (component-major, row-major).
    pub fn backward(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in 0..self.ncomp {
            out.extend(self.backward_component(c));
        }
        out
    }

    pub fn backward_component(&self, c: usize) -> Vec<f64> {
        let mut buf = self.comp(c).to_vec();
        self.grid.fft2(&mut buf, true);
        buf.into_iter().map(|z| z.re).collect()
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    /// Extract one component as a scalar field.
    pub fn component(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            ncomp: 1,
            coeffs: self.comp(c).to_vec(),
        }
    }

    /// Stack scalar fields into one multi-component field.
    pub fn stack(parts: &[&SpectralField]) -> Result<SpectralField> {
        let grid = parts
            .first()
            .ok_or(FeneError::SizeMismatch {
                expected: 1,
                got: 0,
            })?
            .grid
            .clone();
        let mut coeffs = Vec::new();
        let mut ncomp = 0;
        for p in parts {
            p.check_grid(&grid)?;
            coeffs.extend_from_slice(&p.coeffs);
            ncomp += p.ncomp;
        }
        Ok(SpectralField {
            grid,
            ncomp,
            coeffs,
        })
    }

    pub(crate) fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if self.grid.n() != grid.n() {
            return Err(FeneError::GridMismatch(self.grid.n(), grid.n()));
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &SpectralField) -> Result<()> {
        self.check_grid(&other.grid)?;
        if self.ncomp != other.ncomp {
            return Err(FeneError::SizeMismatch {
                expected: self.ncomp,
                got: other.ncomp,
            });
        }
        Ok(())
    }

    fn symmetrize(&mut self) {
        let n = self.grid.n();
        let len = self.grid.len();
        for c in 0..self.ncomp {
            let block = &mut self.coeffs[c * len..(c + 1) * len];
            for i1 in 0..n {
                let m1 = self.grid.mirror(i1);
                for i2 in 0..n {
                    let m2 = self.grid.mirror(i2);
                    let a = i1 * n + i2;
                    let b = m1 * n + m2;
                    if a > b {
                        continue;
                    }
                    let avg = 0.5 * (block[a] + block[b].conj());
                    block[a] = avg;
                    block[b] = avg.conj();
                }
            }
        }
    }

    /// Largest deviation from Hermitian symmetry, for diagnostics.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for c in 0..self.ncomp {
            let block = self.comp(c);
            for i1 in 0..n {
                for i2 in 0..n {
                    let b = self.grid.mirror(i1) * n + self.grid.mirror(i2);
                    worst = worst.max((block[i1 * n + i2] - block[b].conj()).norm());
                }
            }
        }
        worst
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.coeffs {
            *a *= alpha;
        }
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &SpectralField, beta: f64) -> Result<SpectralField> {
        self.check_same_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * alpha + b * beta)
            .collect();
        Ok(SpectralField {
            grid: self.grid.clone(),
            ncomp: self.ncomp,
            coeffs,
        })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Apply `f(k1, k2, coefficient)` to every coefficient of every component.
    pub(crate) fn map_modes(&mut self, f: impl Fn(i64, i64, Complex64) -> Complex64) {
        let n = self.grid.n();
        let len = self.grid.len();
        let grid = self.grid.clone();
        for block in self.coeffs.chunks_mut(len) {
            for i1 in 0..n {
                let k1 = grid.wavenumber(i1);
                for i2 in 0..n {
                    let k2 = grid.wavenumber(i2);
                    let z = &mut block[i1 * n + i2];
                    *z = f(k1, k2, *z);
                }
            }
        }
    }

    /// Spectral derivative `d^alpha` applied to every component.
    pub fn derivative(&self, alpha: [u32; 2]) -> SpectralField {
        let nyq = (self.grid.n() / 2) as i64;
        let mut out = self.clone();
        out.map_modes(|k1, k2, z| {
            // An odd derivative of the Nyquist mode has no real representative.
            let k1 = if k1 == nyq && alpha[0] % 2 == 1 { 0 } else { k1 };
            let k2 = if k2 == nyq && alpha[1] % 2 == 1 { 0 } else { k2 };
            z * ik_pow(k1, alpha[0]) * ik_pow(k2, alpha[1])
        });
        out
    }

    /// Gradient of a scalar field as a vector field.
    pub fn gradient(&self) -> Result<SpectralField> {
        self.expect_ncomp(1)?;
        SpectralField::stack(&[&self.derivative([1, 0]), &self.derivative([0, 1])])
    }

    /// Divergence of a vector field, or row-wise divergence of a tensor field
    /// (`(div T)_a = sum_b d_b T_ab`).
    pub fn divergence(&self) -> Result<SpectralField> {
        match self.ncomp {
            2 => {
                let mut d = self.component(0).derivative([1, 0]);
                d.axpy(1.0, &self.component(1).derivative([0, 1]))?;
                Ok(d)
            }
            4 => {
                let mut r0 = self.component(0).derivative([1, 0]);
                r0.axpy(1.0, &self.component(1).derivative([0, 1]))?;
                let mut r1 = self.component(2).derivative([1, 0]);
                r1.axpy(1.0, &self.component(3).derivative([0, 1]))?;
                SpectralField::stack(&[&r0, &r1])
            }
            n => Err(FeneError::SizeMismatch {
                expected: 2,
                got: n,
            }),
        }
    }

    /// Laplacian of every component.
    pub fn laplacian(&self) -> SpectralField {
        let mut out = self.clone();
        out.map_modes(|k1, k2, z| z * (-((k1 * k1 + k2 * k2) as f64)));
        out
    }

    pub(crate) fn expect_ncomp(&self, n: usize) -> Result<()> {
        if self.ncomp != n {
            return Err(FeneError::SizeMismatch {
                expected: n,
                got: self.ncomp,
            });
        }
        Ok(())
    }

    /// Zero every mode outside the 2/3-rule band.
    pub fn dealias(&self) -> SpectralField {
        let kc = self.grid.dealias_cutoff() as i64;
        let mut out = self.clone();
        out.map_modes(|k1, k2, z| {
            if k1.abs() > kc || k2.abs() > kc {
                Complex64::new(0.0, 0.0)
            } else {
                z
            }
        });
        out
    }

    /// Galerkin projection onto modes with `max(|k1|, |k2|) <= n_modes`.
    pub fn project_pn(&self, n_modes: usize) -> SpectralField {
        let m = n_modes as i64;
        let mut out = self.clone();
        out.map_modes(|k1, k2, z| {
            if k1.abs().max(k2.abs()) > m {
                Complex64::new(0.0, 0.0)
            } else {
                z
            }
        });
        out
    }

    /// Product of two fields with both inputs and the result truncated to the
    /// 2/3-rule band. A scalar `self` broadcasts over the components of
    /// `other`; otherwise components are multiplied pairwise.
    pub fn dealiased_product(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(&other.grid)?;
        if self.ncomp != 1 && self.ncomp != other.ncomp {
            return Err(FeneError::SizeMismatch {
                expected: other.ncomp,
                got: self.ncomp,
            });
        }
        let a = self.dealias();
        let b = other.dealias();
        let len = self.grid.len();
        let av = a.backward();
        let bv = b.backward();
        let mut prod = vec![0.0; other.ncomp * len];
        for c in 0..other.ncomp {
            let ac = if self.ncomp == 1 { 0 } else { c };
            for j in 0..len {
                prod[c * len + j] = av[ac * len + j] * bv[c * len + j];
            }
        }
        Ok(SpectralField::forward(&self.grid, other.ncomp, &prod)?.dealias())
    }

    /// Bessel-potential norm `(sum_k (1+|k|^2)^s |fhat_k|^2 (2 pi)^2)^(1/2)`,
    /// summed over components.
    /// Zero-padded interpolation onto a grid `factor` times finer per axis.
    /// Nyquist modes are dropped.
    pub fn upsample(&self, factor: usize) -> Result<SpectralField> {
        let coarse = &self.grid;
        let fine = TorusGrid::new(coarse.n() * factor.max(1))?;
        let mut up = SpectralField::zeros(&fine, self.ncomp);
        let (nc, nf) = (coarse.n(), fine.n());
        let nyq = (nc / 2) as i64;
        for c in 0..self.ncomp {
            let src = self.comp(c);
            let dst = up.comp_mut(c);
            for i1 in 0..nc {
                let k1 = coarse.wavenumber(i1);
                for i2 in 0..nc {
                    let k2 = coarse.wavenumber(i2);
                    if k1.abs() == nyq || k2.abs() == nyq {
                        continue;
                    }
                    let f1 = k1.rem_euclid(nf as i64) as usize;
                    let f2 = k2.rem_euclid(nf as i64) as usize;
                    dst[f1 * nf + f2] = src[i1 * nc + i2];
                }
            }
        }
        Ok(up)
    }

    pub fn sobolev_norm(&self, s: u32) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    pub fn sobolev_norm_sq(&self, s: u32) -> f64 {
        let n = self.grid.n();
        let len = self.grid.len();
        let mut acc = 0.0;
        for block in self.coeffs.chunks(len) {
            for i1 in 0..n {
                let k1 = self.grid.wavenumber(i1) as f64;
                for i2 in 0..n {
                    let k2 = self.grid.wavenumber(i2) as f64;
                    let w = (1.0 + k1 * k1 + k2 * k2).powi(s as i32);
                    acc += w * block[i1 * n + i2].norm_sqr();
                }
            }
        }
        acc * TORUS_AREA
    }

    /// `L^2` inner product `int f . g dx` over all components.
    pub fn l2_inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_shape(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        Ok(s * TORUS_AREA)
    }

    /// Mean value of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.comp(c)[0].re
    }

    /// `int f_c dx`.
    pub fn integral(&self, c: usize) -> f64 {
        self.mean(c) * TORUS_AREA
    }

    /// Largest coefficient modulus difference, over all components.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// A field given at both ends of one time step, linear in between. Stage times of the SSP-RK3 scheme are the
/// start, the end and the midpoint of the step; the midpoint uses the average.
#[derive(Debug, Clone, Copy)]
pub struct FieldPath<'a> {
    pub start: &'a SpectralField,
    pub end: &'a SpectralField,
}

impl<'a> FieldPath<'a> {
    pub fn constant(t: &'a SpectralField) -> Self {
        FieldPath { start: t, end: t }
    }

    pub(crate) fn midpoint(&self) -> Result<SpectralField> {
        if std::ptr::eq(self.start, self.end) {
            return Ok(self.start.clone());
        }
        self.start.lin_comb(0.5, self.end, 0.5)
    }
}

fn ik_pow(k: i64, p: u32) -> Complex64 {
    let ik = Complex64::new(0.0, k as f64);
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        acc *= ik;
    }
    acc
}

/// Multi-indices with `|alpha| <= 2` in two dimensions.
const W2_INDICES: [[u32; 2]; 6] = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];

/// Grid-sampled `W^{2,inf}` norm: `max_x sum_{|alpha|<=2} |d^alpha u(x)|`, with
/// the Euclidean norm over components inside the sum.
pub fn sup_norm_w2inf(u: &SpectralField) -> f64 {
    let len = u.grid().len();
    let mut acc = vec![0.0; len];
    for alpha in W2_INDICES {
        let d = u.derivative(alpha).backward();
        for (j, a) in acc.iter_mut().enumerate() {
            let mut sq = 0.0;
            for c in 0..u.ncomp() {
                sq += d[c * len + j] * d[c * len + j];
            }
            *a += sq.sqrt();
        }
    }
    acc.into_iter().fold(0.0, f64::max)
}
