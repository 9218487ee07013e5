//! Galerkin solver for the Fokker-Planck equation
//!
//! ```text
//! psi_t + div_x(u psi) = eps lap_x psi - div_q((grad u) q psi) + kappa div_q(M grad_q(psi / M))
//! ```
//!
//! with `kappa = A11 / (4 lambda)`. The density is expanded as
//! `psi(x, q) = M(q) sum_i c_i(x) phi_i(q)` over the relaxation eigenbasis and
//! each `c_i` is a torus field. Testing against `phi_j` gives
//!
//! ```text
//! c_j' = -div(u (C c)_j) + sum_{a,b} d_b u_a (D^{ab} c)_j - kappa lambda_j c_j + eps lap c_j
//! ```
//!
//! where `C_ji = int M chi phi_i phi_j` and `D^{ab}_ji = int M chi q_b d_a phi_j phi_i`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config_space::{chi_of_radius, ConfigBasis};
use crate::error::{FeneError, Result};
use crate::fluid::grad_sup_norm;
use crate::model::ModelParams;
use crate::spectral::{FieldPath, SpectralField, TorusGrid, TORUS_AREA};

/// `psi / M` as torus fields of basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymerField {
    basis: ConfigBasis,
    coeffs: SpectralField,
    pub time: f64,
}

/// One term `amplitude * trig(k . x)` of an initial coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    /// Index into the configuration basis.
    pub basis_index: usize,
    pub amplitude: f64,
    #[serde(default)]
    pub wave: [i32; 2],
    /// Use `sin` instead of `cos`.
    #[serde(default)]
    pub sine: bool,
}

impl PolymerField {
    pub fn new(basis: &ConfigBasis, coeffs: SpectralField, time: f64) -> Result<Self> {
        coeffs.expect_ncomp(basis.n_basis())?;
        Ok(PolymerField {
            basis: basis.clone(),
            coeffs,
            time,
        })
    }

    /// `psi = M` everywhere.
    pub fn equilibrium(grid: &TorusGrid, basis: &ConfigBasis) -> Self {
        let mut coeffs = SpectralField::zeros(grid, basis.n_basis());
        coeffs.comp_mut(0)[0] = Complex64::new(1.0, 0.0);
        PolymerField {
            basis: basis.clone(),
            coeffs,
            time: 0.0,
        }
    }

    /// `psi = M (1 + sum of terms)`.
    pub fn perturbed_equilibrium(
        grid: &TorusGrid,
        basis: &ConfigBasis,
        terms: &[ModeTerm],
    ) -> Result<Self> {
        let mut psi = PolymerField::equilibrium(grid, basis);
        let len = grid.len();
        for term in terms {
            if term.basis_index >= basis.n_basis() {
                return Err(FeneError::InvalidParameter(format!(
                    "basis_index {} out of range (n_basis = {})",
                    term.basis_index,
                    basis.n_basis()
                )));
            }
            let vals = grid.sample(|x| {
                let phase = term.wave[0] as f64 * x[0] + term.wave[1] as f64 * x[1];
                term.amplitude * if term.sine { phase.sin() } else { phase.cos() }
            });
            let f = SpectralField::forward(grid, 1, &vals)?.dealias();
            let dst = psi.coeffs.comp_mut(term.basis_index);
            for (d, s) in dst.iter_mut().zip(f.comp(0)) {
                *d += s;
            }
            debug_assert_eq!(dst.len(), len);
        }
        Ok(psi)
    }

    pub fn basis(&self) -> &ConfigBasis {
        &self.basis
    }

    pub fn grid(&self) -> &TorusGrid {
        self.coeffs.grid()
    }

    pub fn coeffs(&self) -> &SpectralField {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut SpectralField {
        &mut self.coeffs
    }

    pub fn with_coeffs(&self, coeffs: SpectralField, time: f64) -> Result<Self> {
        PolymerField::new(&self.basis, coeffs, time)
    }

    /// `int int psi dq dx`.
    pub fn polymer_mass(&self) -> f64 {
        self.basis
            .moments()
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.coeffs.integral(i))
            .sum()
    }

    /// Marginal `eta(x) = int psi dq`.
    pub fn marginal(&self) -> Result<SpectralField> {
        let moments = self.basis.moments();
        let mut eta = SpectralField::zeros(self.grid(), 1);
        for (i, m) in moments.iter().enumerate() {
            eta.axpy(*m, &self.coeffs.component(i))?;
        }
        Ok(eta)
    }

    /// Kramers stress `T(x) = int psi F (x) q dq` as a 4-component field.
    /// Linear in the coefficients, so it is formed mode by mode.
    pub fn stress_field(&self) -> SpectralField {
        let grid = self.grid();
        let len = grid.len();
        let mut out = SpectralField::zeros(grid, 4);
        for i in 0..self.basis.n_basis() {
            let s = self.basis.stress_tensor(i);
            let ci = self.coeffs.comp(i);
            for (c, sc) in s.iter().enumerate() {
                if *sc == 0.0 {
                    continue;
                }
                let dst = out.comp_mut(c);
                for j in 0..len {
                    dst[j] += ci[j] * *sc;
                }
            }
        }
        out
    }

    /// Grid values of every coefficient, `vals[i * len + x]`.
    pub fn coefficient_values(&self) -> Vec<f64> {
        self.coeffs.backward()
    }

    pub(crate) fn lin_comb(&self, wa: f64, other: &PolymerField, wb: f64, time: f64) -> Result<Self> {
        Ok(PolymerField {
            basis: self.basis.clone(),
            coeffs: self.coeffs.lin_comb(wa, &other.coeffs, wb)?,
            time,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpScheme {
    #[default]
    ImexEuler,
    Ssprk3Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpStepConfig {
    pub dt: f64,
    pub epsilon: f64,
    /// Index `n` of the boundary cut-off `chi_n`; `None` uses `chi = 1`.
    pub chi_index: Option<usize>,
    #[serde(default)]
    pub scheme: FpScheme,
    /// Safety factor of the stability bound.
    pub cfl: f64,
}

impl FpStepConfig {
    pub fn new(dt: f64, epsilon: f64, chi_index: Option<usize>) -> Self {
        FpStepConfig {
            dt,
            epsilon,
            chi_index,
            scheme: FpScheme::ImexEuler,
            cfl: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FeneError::InvalidParameter(format!(
                "Fokker-Planck dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(FeneError::InvalidParameter(format!(
                "epsilon = {} must be >= 0",
                self.epsilon
            )));
        }
        if self.chi_index == Some(0) {
            return Err(FeneError::InvalidParameter("chi_index must be >= 1".into()));
        }
        Ok(())
    }
}

/// Precomputed configuration-space matrices for one basis and cut-off.
#[derive(Debug, Clone)]
pub struct FpOperator {
    basis: ConfigBasis,
    chi_index: Option<usize>,
    /// `None` when `chi = 1`, where the matrix is the identity.
    transport: Option<DMatrix<f64>>,
    /// `drift[2a + b]`.
    drift: [DMatrix<f64>; 4],
    transport_t: Option<DMatrix<f64>>,
    drift_t: [DMatrix<f64>; 4],
    drift_norm: f64,
    rates: Vec<f64>,
}

impl FpOperator {
    pub fn new(basis: &ConfigBasis, p: &ModelParams, chi_index: Option<usize>) -> Result<Self> {
        p.validate()?;
        let quad = basis.quad();
        let nb = basis.n_basis();
        let chi: Vec<f64> = quad
            .nodes()
            .iter()
            .map(|n| match chi_index {
                Some(k) => chi_of_radius(n.radius, quad.b(), k),
                None => 1.0,
            })
            .collect();
        let wm: Vec<f64> = (0..quad.len())
            .map(|n| quad.weights()[n] * quad.maxwellian()[n] * chi[n])
            .collect();
        let transport = chi_index.map(|_| {
            DMatrix::from_fn(nb, nb, |j, i| {
                let (vi, vj) = (basis.values(i), basis.values(j));
                (0..quad.len()).map(|n| wm[n] * vi[n] * vj[n]).sum()
            })
        });
        let drift: [DMatrix<f64>; 4] = std::array::from_fn(|ab| {
            let (a, b) = (ab / 2, ab % 2);
            DMatrix::from_fn(nb, nb, |j, i| {
                let vi = basis.values(i);
                let gj = basis.gradients(j);
                (0..quad.len())
                    .map(|n| wm[n] * quad.nodes()[n].q[b] * gj[n][a] * vi[n])
                    .sum()
            })
        });
        let drift_norm = drift.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let kappa = p.relaxation_rate();
        let rates = basis.eigenvalues().iter().map(|l| kappa * l).collect();
        Ok(FpOperator {
            basis: basis.clone(),
            chi_index,
            transport_t: transport.as_ref().map(|m| m.transpose()),
            drift_t: std::array::from_fn(|ab| drift[ab].transpose()),
            transport,
            drift,
            drift_norm,
            rates,
        })
    }

    pub fn basis(&self) -> &ConfigBasis {
        &self.basis
    }

    pub fn chi_index(&self) -> Option<usize> {
        self.chi_index
    }

    pub fn drift_matrix(&self, a: usize, b: usize) -> &DMatrix<f64> {
        &self.drift[2 * a + b]
    }

    pub fn transport_matrix(&self) -> Option<&DMatrix<f64>> {
        self.transport.as_ref()
    }

    /// `kappa lambda_j` per basis function.
    pub fn relaxation_rates(&self) -> &[f64] {
        &self.rates
    }

    fn check(&self, psi: &PolymerField, u: &SpectralField) -> Result<()> {
        if psi.basis != self.basis {
            return Err(FeneError::InvalidParameter(
                "polymer field and operator use different bases".into(),
            ));
        }
        u.expect_ncomp(2)?;
        u.check_grid(psi.grid())
    }

    /// Transport and drift blocks only.
    pub fn explicit_rhs(&self, psi: &PolymerField, u: &SpectralField) -> Result<SpectralField> {
        self.check(psi, u)?;
        let grid = psi.grid();
        let len = grid.len();
        let n = grid.n();
        let nb = self.basis.n_basis();
        // Column i holds the grid values of coefficient field i.
        let c = DMatrix::from_vec(len, nb, psi.coeffs.dealias().backward());
        let ud = u.dealias();
        let uv = ud.backward();
        let du1 = ud.derivative([1, 0]).backward();
        let du2 = ud.derivative([0, 1]).backward();

        let tc = match &self.transport_t {
            Some(mt) => &c * mt,
            None => c.clone(),
        };
        // grad_u[a][b] = d_b u_a
        let grad: [&[f64]; 4] = [&du1[..len], &du2[..len], &du1[len..], &du2[len..]];
        let mut g = DMatrix::zeros(len, nb);
        for (ab, w) in grad.iter().enumerate() {
            let mut part = &c * &self.drift_t[ab];
            for (x, wx) in w.iter().enumerate() {
                part.row_mut(x).scale_mut(*wx);
            }
            g += part;
        }

        let mut flux = vec![0.0; 2 * nb * len];
        for j in 0..nb {
            let col = tc.column(j);
            for x in 0..len {
                flux[(2 * j) * len + x] = uv[x] * col[x];
                flux[(2 * j + 1) * len + x] = uv[len + x] * col[x];
            }
        }
        let flux = SpectralField::forward(grid, 2 * nb, &flux)?.dealias();
        let mut out = SpectralField::forward(grid, nb, g.as_slice())?.dealias();
        let k: Vec<f64> = (0..n).map(|i| grid.wavenumber(i) as f64).collect();
        for j in 0..nb {
            let (fx, fy) = (flux.comp(2 * j), flux.comp(2 * j + 1));
            let dst = out.comp_mut(j);
            for i1 in 0..n {
                for i2 in 0..n {
                    let m = i1 * n + i2;
                    let div = fx[m] * k[i1] + fy[m] * k[i2];
                    dst[m] -= Complex64::new(-div.im, div.re);
                }
            }
        }
        Ok(out)
    }

    /// Relaxation and diffusion: `(-kappa lambda_j - eps |k|^2) c_j`.
    pub fn diagonal_rhs(&self, psi: &PolymerField, epsilon: f64) -> SpectralField {
        let mut out = psi.coeffs.clone();
        let rates = &self.rates;
        let grid = psi.grid().clone();
        let n = grid.n();
        for (j, rate) in rates.iter().enumerate() {
            let block = out.comp_mut(j);
            for i1 in 0..n {
                let k1 = grid.wavenumber(i1) as f64;
                for i2 in 0..n {
                    let k2 = grid.wavenumber(i2) as f64;
                    block[i1 * n + i2] *= -(rate + epsilon * (k1 * k1 + k2 * k2));
                }
            }
        }
        out
    }

    /// Full weak-form tendency.
    pub fn rhs(&self, psi: &PolymerField, u: &SpectralField, epsilon: f64) -> Result<SpectralField> {
        let mut out = self.explicit_rhs(psi, u)?;
        out.axpy(1.0, &self.diagonal_rhs(psi, epsilon))?;
        Ok(out)
    }

    /// Largest stable step for the velocity `u`.
    pub fn stability_bound(&self, u: &SpectralField, cfg: &FpStepConfig) -> f64 {
        let grid = u.grid();
        let kmax = std::f64::consts::SQRT_2 * grid.dealias_cutoff() as f64;
        let uv = u.backward();
        let len = grid.len();
        let umax = (0..len).map(|j| uv[j].hypot(uv[len + j])).fold(0.0, f64::max);
        let mut rate = umax * kmax + grad_sup_norm(u) * self.drift_norm;
        if cfg.scheme == FpScheme::Ssprk3Explicit {
            let lmax = self.rates.iter().copied().fold(0.0, f64::max);
            rate += lmax + cfg.epsilon * kmax * kmax;
        }
        if rate == 0.0 {
            f64::INFINITY
        } else {
            cfg.cfl * 2.5 / rate
        }
    }
}

/// Weak-form tendency of `psi` under velocity `u`.
pub fn fp_rhs(
    psi: &PolymerField,
    u: &SpectralField,
    op: &FpOperator,
    cfg: &FpStepConfig,
) -> Result<SpectralField> {
    op.rhs(psi, u, cfg.epsilon)
}

/// One step. IMEX Euler treats relaxation and diffusion implicitly (both are
/// diagonal); SSP-RK3 is fully explicit and uses the velocity at the stage
/// times (midpoint by averaging).
pub fn fp_step(
    psi: &PolymerField,
    u: FieldPath<'_>,
    op: &FpOperator,
    cfg: &FpStepConfig,
) -> Result<PolymerField> {
    cfg.validate()?;
    if op.chi_index != cfg.chi_index {
        return Err(FeneError::InvalidParameter(
            "operator cut-off index differs from step configuration".into(),
        ));
    }
    let bound = op
        .stability_bound(u.start, cfg)
        .min(op.stability_bound(u.end, cfg));
    if cfg.dt > bound {
        return Err(FeneError::StabilityViolation { dt: cfg.dt, bound });
    }
    let dt = cfg.dt;
    let t0 = psi.time;
    match cfg.scheme {
        FpScheme::ImexEuler => {
            let mut next = psi.coeffs.clone();
            next.axpy(dt, &op.explicit_rhs(psi, u.start)?)?;
            let grid = psi.grid().clone();
            let n = grid.n();
            for (j, rate) in op.rates.iter().enumerate() {
                let block = next.comp_mut(j);
                for i1 in 0..n {
                    let k1 = grid.wavenumber(i1) as f64;
                    for i2 in 0..n {
                        let k2 = grid.wavenumber(i2) as f64;
                        let diffusion = if cfg.epsilon == 0.0 {
                            0.0
                        } else {
                            cfg.epsilon * (k1 * k1 + k2 * k2)
                        };
                        block[i1 * n + i2] /= 1.0 + dt * (rate + diffusion);
                    }
                }
            }
            psi.with_coeffs(next, t0 + dt)
        }
        FpScheme::Ssprk3Explicit => {
            let mid = u.midpoint()?;
            let stage = |s: &PolymerField, v: &SpectralField, t: f64| -> Result<PolymerField> {
                let mut c = s.coeffs.clone();
                c.axpy(dt, &op.rhs(s, v, cfg.epsilon)?)?;
                s.with_coeffs(c, t + dt)
            };
            let s1 = stage(psi, u.start, t0)?;
            let e2 = stage(&s1, u.end, t0 + dt)?;
            let s2 = psi.lin_comb(0.75, &e2, 0.25, t0 + dt)?;
            let e3 = stage(&s2, &mid, t0 + 0.5 * dt)?;
            psi.lin_comb(1.0 / 3.0, &e3, 2.0 / 3.0, t0 + dt)
        }
    }
}

/// `|psi|^2_{W^{s,2}_x L^2_M}` and `|psi|^2_{W^{s,2}_x H^1_M}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpEnergy {
    pub l2m: f64,
    pub h1m: f64,
}

/// Both parts from coefficients, using orthonormality and `a(phi_i, phi_j) = lambda_i delta_ij`.
pub fn fp_energy(psi: &PolymerField, s: u32) -> FpEnergy {
    let l2m = psi.coeffs.sobolev_norm_sq(s);
    let h1m = psi
        .basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, l)| l.max(0.0) * psi.coeffs.component(i).sobolev_norm_sq(s))
        .sum();
    FpEnergy { l2m, h1m }
}

/// Same quantities with the configuration integrals taken by node quadrature.
pub fn fp_energy_quadrature(psi: &PolymerField, s: u32) -> FpEnergy {
    let gram = psi.basis.gram_matrix();
    let stiff = psi.basis.stiffness_matrix();
    let grid = psi.grid();
    let n = grid.n();
    let nb = psi.basis.n_basis();
    let mut l2m = 0.0;
    let mut h1m = 0.0;
    for i1 in 0..n {
        let k1 = grid.wavenumber(i1) as f64;
        for i2 in 0..n {
            let k2 = grid.wavenumber(i2) as f64;
            let w = (1.0 + k1 * k1 + k2 * k2).powi(s as i32) * TORUS_AREA;
            let idx = i1 * n + i2;
            let c: Vec<Complex64> = (0..nb).map(|i| psi.coeffs.comp(i)[idx]).collect();
            for i in 0..nb {
                for j in 0..nb {
                    let z = (c[i].conj() * c[j]).re;
                    l2m += w * gram[(i, j)] * z;
                    h1m += w * stiff[(i, j)] * z;
                }
            }
        }
    }
    FpEnergy { l2m, h1m }
}

/// Sign monitor for `psi = M phi` sampled on grid points times quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonnegativityReport {
    pub min_psi: f64,
    pub fraction_negative: f64,
}

/// Sample on the solver grid.
pub fn nonnegativity_report(psi: &PolymerField) -> NonnegativityReport {
    report_from_values(psi, &psi.coefficient_values(), psi.grid().len())
}

/// Sample on a grid refined by `factor` per axis (spectral interpolation).
pub fn nonnegativity_report_refined(psi: &PolymerField, factor: usize) -> Result<NonnegativityReport> {
    let up = psi.coeffs.upsample(factor)?;
    let len = up.grid().len();
    Ok(report_from_values(psi, &up.backward(), len))
}

fn report_from_values(psi: &PolymerField, vals: &[f64], len: usize) -> NonnegativityReport {
    let basis = &psi.basis;
    let quad = basis.quad();
    let nb = basis.n_basis();
    let nodes = quad.len();
    let coeffs = DMatrix::from_column_slice(len, nb, &vals[..len * nb]);
    let table = DMatrix::from_fn(nb, nodes, |i, node| quad.maxwellian()[node] * basis.values(i)[node]);
    let samples = coeffs * table;
    let min_psi = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let negative = samples.iter().filter(|v| **v < 0.0).count();
    NonnegativityReport {
        min_psi,
        fraction_negative: negative as f64 / (len * nodes) as f64,
    }
}
