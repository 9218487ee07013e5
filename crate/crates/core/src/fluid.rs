//! The fluid system in transformed variables `(r, u)`:
//!
//! ```text
//! r_t + phi_R [u . grad r + (gamma - 1)/2 r div u] = 0
//! u_t + phi_R [u . grad u + r grad r] = phi_R D(r) [div S(grad u) + div T] + f
//! ```
//!
//! Fields live in the 2/3-rule band, so products of two of them are formed
//! pointwise on the grid and truncated without aliasing.

use serde::{Deserialize, Serialize};

use crate::error::{FeneError, Result};
use crate::model::{d_coefficient_unchecked, r_to_density_unchecked, ForcingSpec, ModelParams};
use crate::spectral::{sup_norm_w2inf, FieldPath, SpectralField, TorusGrid, TORUS_AREA};

/// Transformed density and velocity at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub r: SpectralField,
    pub u: SpectralField,
    pub time: f64,
}

impl FluidState {
    pub fn new(r: SpectralField, u: SpectralField, time: f64) -> Result<Self> {
        r.expect_ncomp(1)?;
        u.expect_ncomp(2)?;
        u.check_grid(r.grid())?;
        Ok(FluidState { r, u, time })
    }

    /// Constant `r`, zero velocity.
    pub fn at_rest(grid: &TorusGrid, r0: f64) -> Self {
        FluidState {
            r: SpectralField::constant(grid, &[r0]),
            u: SpectralField::zeros(grid, 2),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.r.grid()
    }

    pub fn min_r(&self) -> f64 {
        self.r.backward().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_r(&self) -> f64 {
        self.r
            .backward()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mass density on the grid.
    pub fn density_values(&self, p: &ModelParams) -> Vec<f64> {
        self.r
            .backward()
            .into_iter()
            .map(|r| r_to_density_unchecked(r, p))
            .collect()
    }

    /// `int rho dx` by the grid rule (exact for band-limited integrands).
    pub fn mass(&self, p: &ModelParams) -> f64 {
        let rho = self.density_values(p);
        rho.iter().sum::<f64>() * TORUS_AREA / rho.len() as f64
    }

    /// `int rho u dx`.
    pub fn momentum(&self, p: &ModelParams) -> [f64; 2] {
        let rho = self.density_values(p);
        let u = self.u.backward();
        let len = rho.len();
        let w = TORUS_AREA / len as f64;
        let mut m = [0.0; 2];
        for (c, mc) in m.iter_mut().enumerate() {
            *mc = (0..len).map(|j| rho[j] * u[c * len + j]).sum::<f64>() * w;
        }
        m
    }

    /// `int rho |u| dx`, the scale against which momentum drift is measured.
    pub fn momentum_scale(&self, p: &ModelParams) -> f64 {
        let rho = self.density_values(p);
        let u = self.u.backward();
        let len = rho.len();
        (0..len)
            .map(|j| rho[j] * u[j].hypot(u[len + j]))
            .sum::<f64>()
            * TORUS_AREA
            / len as f64
    }

    pub(crate) fn lin_comb(&self, wa: f64, other: &FluidState, wb: f64, time: f64) -> Result<Self> {
        Ok(FluidState {
            r: self.r.lin_comb(wa, &other.r, wb)?,
            u: self.u.lin_comb(wa, &other.u, wb)?,
            time,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluidScheme {
    #[default]
    Ssprk3,
}

/// Switches for isolating parts of the right-hand side in unit tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidTerms {
    pub advection: bool,
    pub pressure: bool,
    pub evolve_density: bool,
}

impl Default for FluidTerms {
    fn default() -> Self {
        FluidTerms {
            advection: true,
            pressure: true,
            evolve_density: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidStepConfig {
    pub dt: f64,
    /// Cut-off radius `R`; `None` disables `phi_R`.
    #[serde(default)]
    pub cutoff_r: Option<f64>,
    /// Galerkin projection `P_n`.
    pub n_modes: usize,
    #[serde(default)]
    pub scheme: FluidScheme,
    /// Safety factor of the CFL bound.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub terms: FluidTerms,
}

fn default_cfl() -> f64 {
    0.5
}

impl FluidStepConfig {
    pub fn new(dt: f64, n_modes: usize) -> Self {
        FluidStepConfig {
            dt,
            cutoff_r: None,
            n_modes,
            scheme: FluidScheme::Ssprk3,
            cfl: default_cfl(),
            terms: FluidTerms::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FeneError::InvalidParameter(format!(
                "fluid dt = {} must be positive",
                self.dt
            )));
        }
        if self.n_modes < 1 {
            return Err(FeneError::InvalidParameter("n_modes must be >= 1".into()));
        }
        if let Some(r) = self.cutoff_r {
            if !(r > 0.0) {
                return Err(FeneError::InvalidParameter(format!(
                    "cutoff_r = {r} must be positive"
                )));
            }
        }
        if !(self.cfl > 0.0) {
            return Err(FeneError::InvalidParameter(format!(
                "cfl = {} must be positive",
                self.cfl
            )));
        }
        Ok(())
    }
}

/// Cut-off `phi_R`: 1 on `[0, R]`, 0 on `[R + 1, inf)`, C^1 cubic between.
pub fn phi_r(y: f64, big_r: f64) -> f64 {
    crate::config_space::cubic_step_down(y - big_r)
}

/// `phi_R(|u|_{2,inf})`, exactly `1.0` when the cut-off is disabled.
pub fn cutoff_factor(u: &SpectralField, cfg: &FluidStepConfig) -> f64 {
    match cfg.cutoff_r {
        None => 1.0,
        Some(r) => phi_r(sup_norm_w2inf(u), r),
    }
}

/// Body force sampled at time `t`, truncated to the dealiasing band.
pub fn forcing_field(grid: &TorusGrid, f: &ForcingSpec, t: f64) -> Result<SpectralField> {
    if f.is_zero() {
        return Ok(SpectralField::zeros(grid, 2));
    }
    let n = grid.n();
    let mut vals = vec![0.0; 2 * grid.len()];
    for i1 in 0..n {
        for i2 in 0..n {
            let v = f.eval(t, grid.point(i1, i2));
            let j = grid.index(i1, i2);
            vals[j] = v[0];
            vals[grid.len() + j] = v[1];
        }
    }
    Ok(SpectralField::forward(grid, 2, &vals)?.dealias())
}

fn to_band(grid: &TorusGrid, ncomp: usize, vals: &[f64], n_modes: usize) -> Result<SpectralField> {
    Ok(SpectralField::forward(grid, ncomp, vals)?
        .dealias()
        .project_pn(n_modes))
}

/// `-phi_R [u . grad r + (gamma - 1)/2 r div u]`, projected by `P_n`.
pub fn continuity_rhs(
    state: &FluidState,
    p: &ModelParams,
    cfg: &FluidStepConfig,
) -> Result<SpectralField> {
    let phi = cutoff_factor(&state.u, cfg);
    continuity_with_factor(state, p, cfg, phi)
}

fn continuity_with_factor(
    state: &FluidState,
    p: &ModelParams,
    cfg: &FluidStepConfig,
    phi: f64,
) -> Result<SpectralField> {
    let grid = state.grid();
    if !cfg.terms.evolve_density {
        return Ok(SpectralField::zeros(grid, 1));
    }
    let r = state.r.dealias();
    let u = state.u.dealias();
    let rv = r.backward();
    let gr = r.gradient()?.backward();
    let uv = u.backward();
    let div = u.divergence()?.backward();
    let len = grid.len();
    let half = 0.5 * (p.gamma - 1.0);
    let vals: Vec<f64> = (0..len)
        .map(|j| -phi * (uv[j] * gr[j] + uv[len + j] * gr[len + j] + half * rv[j] * div[j]))
        .collect();
    to_band(grid, 1, &vals, cfg.n_modes)
}

/// `-phi_R [u . grad u + r grad r] + phi_R D(r) [div S + div T] + f`,
/// projected by `P_n`. `stress` is a 4-component tensor field and `force`
/// a vector field.
pub fn momentum_rhs(
    state: &FluidState,
    stress: &SpectralField,
    force: &SpectralField,
    p: &ModelParams,
    cfg: &FluidStepConfig,
) -> Result<SpectralField> {
    let phi = cutoff_factor(&state.u, cfg);
    momentum_with_factor(state, stress, force, p, cfg, phi)
}

fn momentum_with_factor(
    state: &FluidState,
    stress: &SpectralField,
    force: &SpectralField,
    p: &ModelParams,
    cfg: &FluidStepConfig,
    phi: f64,
) -> Result<SpectralField> {
    let grid = state.grid();
    stress.check_grid(grid)?;
    stress.expect_ncomp(4)?;
    force.check_grid(grid)?;
    force.expect_ncomp(2)?;
    let len = grid.len();
    let r = state.r.dealias();
    let u = state.u.dealias();

    // D(r) is not polynomial: truncate it before forming products.
    let d_vals: Vec<f64> = r
        .backward()
        .into_iter()
        .map(|x| d_coefficient_unchecked(x, p))
        .collect();
    let d_band = SpectralField::forward(grid, 1, &d_vals)?.dealias().backward();

    let div_u = u.divergence()?;
    let mut visc = u.laplacian().scaled(p.mu_s);
    let grad_div = div_u.gradient()?;
    let bulk = p.mu_b + p.mu_s * (1.0 - 2.0 / p.dim as f64);
    visc.axpy(bulk, &grad_div)?;
    let mut forcing_terms = visc;
    forcing_terms.axpy(1.0, &stress.dealias().divergence()?)?;
    let ft = forcing_terms.backward();

    let uv = u.backward();
    let mut vals = vec![0.0; 2 * len];
    if cfg.terms.advection || cfg.terms.pressure {
        let du1 = u.derivative([1, 0]).backward();
        let du2 = u.derivative([0, 1]).backward();
        let rv = r.backward();
        let gr = r.gradient()?.backward();
        for c in 0..2 {
            for j in 0..len {
                let mut acc = 0.0;
                if cfg.terms.advection {
                    acc += uv[j] * du1[c * len + j] + uv[len + j] * du2[c * len + j];
                }
                if cfg.terms.pressure {
                    acc += rv[j] * gr[c * len + j];
                }
                vals[c * len + j] = -phi * acc;
            }
        }
    }
    for c in 0..2 {
        for j in 0..len {
            vals[c * len + j] += phi * d_band[j] * ft[c * len + j];
        }
    }
    let mut out = to_band(grid, 2, &vals, cfg.n_modes)?;
    out.axpy(1.0, &force.dealias().project_pn(cfg.n_modes))?;
    Ok(out)
}

/// Both tendencies with one evaluation of the cut-off.
pub fn fluid_rhs(
    state: &FluidState,
    stress: &SpectralField,
    force: &SpectralField,
    p: &ModelParams,
    cfg: &FluidStepConfig,
) -> Result<(SpectralField, SpectralField)> {
    let phi = cutoff_factor(&state.u, cfg);
    Ok((
        continuity_with_factor(state, p, cfg, phi)?,
        momentum_with_factor(state, stress, force, p, cfg, phi)?,
    ))
}

/// Largest admissible step:
/// `cfl * min(h / (max|u| + c_s), h^2 / (4 max D(r) (mu_s + mu_b)))`
/// with sound speed `c_s = max r * sqrt((gamma - 1)/2)`.
pub fn cfl_bound(state: &FluidState, p: &ModelParams, cfg: &FluidStepConfig) -> f64 {
    let h = state.grid().spacing();
    let u = state.u.backward();
    let len = state.grid().len();
    let umax = (0..len)
        .map(|j| u[j].hypot(u[len + j]))
        .fold(0.0, f64::max);
    let rv = state.r.backward();
    let rmax = rv.iter().copied().fold(0.0, f64::max);
    let rmin = rv.iter().copied().fold(f64::INFINITY, f64::min);
    let cs = rmax * (0.5 * (p.gamma - 1.0)).sqrt();
    let dmax = if rmin > 0.0 {
        d_coefficient_unchecked(rmin, p)
    } else {
        f64::INFINITY
    };
    let hyper = h / (umax + cs);
    let visc = h * h / (4.0 * dmax * (p.mu_s + p.mu_b));
    cfg.cfl * hyper.min(visc)
}

pub(crate) fn check_positive(state: &FluidState) -> Result<()> {
    let min_r = state.min_r();
    if !(min_r > 0.0) {
        return Err(FeneError::PositivityLoss {
            min_r,
            time: state.time,
        });
    }
    Ok(())
}

/// One SSP-RK3 step.
pub fn step(
    state: &FluidState,
    stress: FieldPath<'_>,
    forcing: &ForcingSpec,
    p: &ModelParams,
    cfg: &FluidStepConfig,
) -> Result<FluidState> {
    cfg.validate()?;
    let bound = cfl_bound(state, p, cfg);
    if cfg.dt > bound {
        return Err(FeneError::CflViolation { dt: cfg.dt, bound });
    }
    let dt = cfg.dt;
    let t0 = state.time;
    let grid = state.grid().clone();
    let mid = stress.midpoint()?;

    let stage = |s: &FluidState, tstress: &SpectralField, t: f64| -> Result<FluidState> {
        let f = forcing_field(&grid, forcing, t)?;
        let (dr, du) = fluid_rhs(s, tstress, &f, p, cfg)?;
        Ok(FluidState {
            r: s.r.lin_comb(1.0, &dr, dt)?,
            u: s.u.lin_comb(1.0, &du, dt)?,
            time: t + dt,
        })
    };

    let e1 = stage(state, stress.start, t0)?;
    let s1 = e1;
    let e2 = stage(&s1, stress.end, t0 + dt)?;
    let s2 = state.lin_comb(0.75, &e2, 0.25, t0 + dt)?;
    let e3 = stage(&s2, &mid, t0 + 0.5 * dt)?;
    let out = state.lin_comb(1.0 / 3.0, &e3, 2.0 / 3.0, t0 + dt)?;
    check_positive(&out)?;
    Ok(out)
}

/// `max_x sum_{a,b} |d_b u_a(x)|`.
pub fn grad_sup_norm(u: &SpectralField) -> f64 {
    let len = u.grid().len();
    let d1 = u.derivative([1, 0]).backward();
    let d2 = u.derivative([0, 1]).backward();
    (0..len)
        .map(|j| d1[j].abs() + d1[len + j].abs() + d2[j].abs() + d2[len + j].abs())
        .fold(0.0, f64::max)
}

/// Constant of the envelope, `max(1, (gamma - 1)/2)`.
pub fn envelope_constant(p: &ModelParams) -> f64 {
    (0.5 * (p.gamma - 1.0)).max(1.0)
}

/// `[inf r0 exp(-c I), sup r0 exp(c I)]` where `I = int_0^t |grad u|_inf`.
pub fn max_principle_envelope(
    inf_r0: f64,
    sup_r0: f64,
    grad_integral: f64,
    p: &ModelParams,
) -> (f64, f64) {
    let c = envelope_constant(p);
    (
        inf_r0 * (-c * grad_integral).exp(),
        sup_r0 * (c * grad_integral).exp(),
    )
}

/// `|r|_{W^{s,2}}^2 + |u|_{W^{s,2}}^2`.
pub fn fluid_energy(state: &FluidState, s: u32) -> f64 {
    state.r.sobolev_norm_sq(s) + state.u.sobolev_norm_sq(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::density_to_r;

    fn grid() -> TorusGrid {
        TorusGrid::new(32).unwrap()
    }

    fn field(grid: &TorusGrid, f: impl Fn([f64; 2]) -> f64) -> SpectralField {
        SpectralField::forward(grid, 1, &grid.sample(f)).unwrap()
    }

    fn vector(grid: &TorusGrid, f1: impl Fn([f64; 2]) -> f64, f2: impl Fn([f64; 2]) -> f64) -> SpectralField {
        SpectralField::stack(&[&field(grid, f1), &field(grid, f2)]).unwrap()
    }

    #[test]
    fn phi_r_shape() {
        assert_eq!(phi_r(0.0, 5.0), 1.0);
        assert_eq!(phi_r(5.0, 5.0), 1.0);
        assert_eq!(phi_r(6.5, 5.0), 0.0);
        let h = 1e-7;
        for knot in [5.0, 6.0] {
            let l = phi_r(knot - h, 5.0);
            let r = phi_r(knot + h, 5.0);
            assert!((l - r).abs() < 1e-10);
            assert!(((r - l) / (2.0 * h)).abs() < 1e-5);
        }
    }

    #[test]
    fn continuity_closed_form() {
        let g = grid();
        let p = ModelParams::default();
        let c = 2.0;
        let state = FluidState::new(
            SpectralField::constant(&g, &[c]),
            vector(&g, |x| x[0].sin(), |_| 0.0),
            0.0,
        )
        .unwrap();
        let cfg = FluidStepConfig::new(1e-3, 16);
        let rhs = continuity_rhs(&state, &p, &cfg).unwrap();
        let expect = field(&g, |x| -c * 0.5 * (p.gamma - 1.0) * x[0].cos());
        assert!(rhs.max_abs_diff(&expect).unwrap() < 1e-12);

        let rest = FluidState::at_rest(&g, c);
        let zero = continuity_rhs(&rest, &p, &cfg).unwrap();
        assert!(zero.max_abs_diff(&SpectralField::zeros(&g, 1)).unwrap() < 1e-15);

        // |u|_{2,inf} ~ 3 for sin: R = 1.5 puts it in the blend, R = 0.5 beyond.
        let y = sup_norm_w2inf(&state.u);
        let mut cut = cfg;
        cut.cutoff_r = Some(y - 0.5);
        let scaled = continuity_rhs(&state, &p, &cut).unwrap();
        assert!(scaled.max_abs_diff(&expect.scaled(phi_r(y, y - 0.5))).unwrap() < 1e-12);
        cut.cutoff_r = Some(y - 1.0);
        let off = continuity_rhs(&state, &p, &cut).unwrap();
        assert!(off.max_abs_diff(&SpectralField::zeros(&g, 1)).unwrap() < 1e-15);
    }

    #[test]
    fn momentum_closed_forms() {
        let g = grid();
        let p = ModelParams {
            mu_s: 1.0,
            mu_b: 0.0,
            ..ModelParams::default()
        };
        let c = 2.0;
        let cfg = FluidStepConfig::new(1e-3, 16);
        let zero_t = SpectralField::zeros(&g, 4);
        let zero_f = SpectralField::zeros(&g, 2);
        let rest = FluidState::at_rest(&g, c);
        let m0 = momentum_rhs(&rest, &zero_t, &zero_f, &p, &cfg).unwrap();
        assert!(m0.max_abs_diff(&zero_f).unwrap() < 1e-14);

        let dc = d_coefficient_unchecked(c, &p);
        // T = [[sin x1, 0], [0, cos x2]] has div T = (cos x1, -sin x2).
        let t = SpectralField::stack(&[
            &field(&g, |x| x[0].sin()),
            &SpectralField::zeros(&g, 1),
            &SpectralField::zeros(&g, 1),
            &field(&g, |x| x[1].cos()),
        ])
        .unwrap();
        let m1 = momentum_rhs(&rest, &t, &zero_f, &p, &cfg).unwrap();
        let expect = vector(&g, |x| dc * x[0].cos(), |x| -dc * x[1].sin());
        assert!(m1.max_abs_diff(&expect).unwrap() < 1e-10);

        let shear = FluidState::new(
            SpectralField::constant(&g, &[c]),
            vector(&g, |x| x[1].sin(), |_| 0.0),
            0.0,
        )
        .unwrap();
        let m2 = momentum_rhs(&shear, &zero_t, &zero_f, &p, &cfg).unwrap();
        let expect = vector(&g, |x| -dc * x[1].sin(), |_| 0.0);
        assert!(m2.max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let g = grid();
        let p = ModelParams::default();
        let r0 = density_to_r(1.0, &p).unwrap();
        let mut s = FluidState::at_rest(&g, r0);
        let t = SpectralField::constant(&g, &[1.0, 0.0, 0.0, 1.0]);
        let cfg = FluidStepConfig::new(1e-3, 16);
        let start = s.clone();
        for _ in 0..10 {
            s = step(&s, FieldPath::constant(&t), &ForcingSpec::zero(), &p, &cfg).unwrap();
        }
        assert!(s.r.max_abs_diff(&start.r).unwrap() < 1e-12);
        assert!(s.u.max_abs_diff(&start.u).unwrap() < 1e-12);
    }

    #[test]
    fn viscous_decay_is_monotone() {
        let g = grid();
        let p = ModelParams::default();
        let mut cfg = FluidStepConfig::new(1e-3, 16);
        cfg.terms = FluidTerms {
            advection: false,
            pressure: false,
            evolve_density: false,
        };
        let mut s = FluidState::new(
            SpectralField::constant(&g, &[2.0]),
            vector(&g, |x| x[1].sin() + 0.3 * (2.0 * x[0]).cos(), |x| 0.5 * x[0].sin()),
            0.0,
        )
        .unwrap();
        let zero_t = SpectralField::zeros(&g, 4);
        let mut prev = s.u.sobolev_norm_sq(0);
        for _ in 0..50 {
            s = step(&s, FieldPath::constant(&zero_t), &ForcingSpec::zero(), &p, &cfg).unwrap();
            let e = s.u.sobolev_norm_sq(0);
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn step_rejects_large_dt_and_reports_positivity() {
        let g = grid();
        let p = ModelParams::default();
        let s = FluidState::at_rest(&g, 1.0);
        let zero_t = SpectralField::zeros(&g, 4);
        let cfg = FluidStepConfig::new(10.0, 16);
        let err = step(&s, FieldPath::constant(&zero_t), &ForcingSpec::zero(), &p, &cfg).unwrap_err();
        assert!(matches!(err, FeneError::CflViolation { .. }));
        let neg = FluidState::at_rest(&g, -1.0);
        assert!(matches!(check_positive(&neg), Err(FeneError::PositivityLoss { .. })));
    }

    #[test]
    fn envelope_examples() {
        let p = ModelParams {
            gamma: 3.0,
            ..ModelParams::default()
        };
        let (lo, hi) = max_principle_envelope(1.0, 1.0, 2f64.ln(), &p);
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
        assert_eq!(max_principle_envelope(0.7, 1.3, 0.0, &p), (0.7, 1.3));
        let g = grid();
        let e = fluid_energy(&FluidState::at_rest(&g, 1.0), 0);
        assert!((e - TORUS_AREA).abs() < 1e-12);
    }
}
