//! The coupled system: a monolithic SSP-RK3 integrator and the fixed-point
//! map `psi~ -> T(psi~) -> (r, u) -> psi` with its contraction diagnostics.

use serde::{Deserialize, Serialize};

use crate::config_space::ConfigBasis;
use crate::error::{FeneError, Result};
use crate::fluid::{self, cfl_bound, fluid_rhs, forcing_field, FluidState, FluidStepConfig};
use crate::fokker_planck::{fp_energy, fp_step, FpOperator, FpScheme, FpStepConfig, PolymerField};
use crate::model::{ForcingSpec, ModelParams};
use crate::spectral::{sup_norm_w2inf, FieldPath, SpectralField};

/// `(r, u, psi)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub fluid: FluidState,
    pub psi: PolymerField,
    pub time: f64,
}

impl CoupledState {
    pub fn new(fluid: FluidState, psi: PolymerField) -> Result<Self> {
        fluid.r.check_grid(psi.grid())?;
        if fluid.time != psi.time {
            return Err(FeneError::InvalidParameter(format!(
                "fluid time {} differs from polymer time {}",
                fluid.time, psi.time
            )));
        }
        let time = fluid.time;
        Ok(CoupledState { fluid, psi, time })
    }

    fn set_time(&mut self, t: f64) {
        self.time = t;
        self.fluid.time = t;
        self.psi.time = t;
    }
}

/// Everything a coupled time step needs besides the state.
#[derive(Debug, Clone)]
pub struct CoupledSolver {
    pub params: ModelParams,
    pub forcing: ForcingSpec,
    pub fluid_cfg: FluidStepConfig,
    pub fp_cfg: FpStepConfig,
    op: FpOperator,
}

impl CoupledSolver {
    pub fn new(
        params: ModelParams,
        forcing: ForcingSpec,
        fluid_cfg: FluidStepConfig,
        fp_cfg: FpStepConfig,
        basis: &ConfigBasis,
    ) -> Result<Self> {
        params.validate()?;
        fluid_cfg.validate()?;
        fp_cfg.validate()?;
        if fluid_cfg.dt != fp_cfg.dt {
            return Err(FeneError::InvalidParameter(format!(
                "fluid dt {} and Fokker-Planck dt {} differ",
                fluid_cfg.dt, fp_cfg.dt
            )));
        }
        let op = FpOperator::new(basis, &params, fp_cfg.chi_index)?;
        Ok(CoupledSolver {
            params,
            forcing,
            fluid_cfg,
            fp_cfg,
            op,
        })
    }

    pub fn operator(&self) -> &FpOperator {
        &self.op
    }

    pub fn dt(&self) -> f64 {
        self.fluid_cfg.dt
    }

    fn explicit_fp_cfg(&self) -> FpStepConfig {
        FpStepConfig {
            scheme: FpScheme::Ssprk3Explicit,
            ..self.fp_cfg
        }
    }

    fn check_step(&self, state: &CoupledState) -> Result<()> {
        let dt = self.dt();
        let bound = cfl_bound(&state.fluid, &self.params, &self.fluid_cfg);
        if dt > bound {
            return Err(FeneError::CflViolation { dt, bound });
        }
        let bound = self.op.stability_bound(&state.fluid.u, &self.explicit_fp_cfg());
        if dt > bound {
            return Err(FeneError::StabilityViolation { dt, bound });
        }
        Ok(())
    }

    /// Forward-Euler substep used by every SSP-RK3 stage; the stress is
    /// recomputed from the stage value of `psi`.
    fn euler(&self, s: &CoupledState, t: f64) -> Result<CoupledState> {
        let dt = self.dt();
        let stress = s.psi.stress_field();
        let force = forcing_field(s.fluid.grid(), &self.forcing, t)?;
        let (dr, du) = fluid_rhs(&s.fluid, &stress, &force, &self.params, &self.fluid_cfg)?;
        let dpsi = self.op.rhs(&s.psi, &s.fluid.u, self.fp_cfg.epsilon)?;
        let fluid = FluidState {
            r: s.fluid.r.lin_comb(1.0, &dr, dt)?,
            u: s.fluid.u.lin_comb(1.0, &du, dt)?,
            time: t + dt,
        };
        let mut c = s.psi.coeffs().clone();
        c.axpy(dt, &dpsi)?;
        let psi = s.psi.with_coeffs(c, t + dt)?;
        Ok(CoupledState {
            fluid,
            psi,
            time: t + dt,
        })
    }

    fn combine(&self, a: &CoupledState, wa: f64, b: &CoupledState, wb: f64, t: f64) -> Result<CoupledState> {
        let c = a.psi.coeffs().lin_comb(wa, b.psi.coeffs(), wb)?;
        let mut out = CoupledState {
            fluid: FluidState {
                r: a.fluid.r.lin_comb(wa, &b.fluid.r, wb)?,
                u: a.fluid.u.lin_comb(wa, &b.fluid.u, wb)?,
                time: t,
            },
            psi: a.psi.with_coeffs(c, t)?,
            time: t,
        };
        out.set_time(t);
        Ok(out)
    }

    /// One monolithic SSP-RK3 step of the coupled system.
    pub fn coupled_step(&self, state: &CoupledState) -> Result<CoupledState> {
        self.check_step(state)?;
        let dt = self.dt();
        let t0 = state.time;
        let s1 = self.euler(state, t0)?;
        let e2 = self.euler(&s1, t0 + dt)?;
        let s2 = self.combine(state, 0.75, &e2, 0.25, t0 + dt)?;
        let e3 = self.euler(&s2, t0 + 0.5 * dt)?;
        let out = self.combine(state, 1.0 / 3.0, &e3, 2.0 / 3.0, t0 + dt)?;
        fluid::check_positive(&out.fluid)?;
        Ok(out)
    }

    /// `n` monolithic steps, keeping every state (the initial one included).
    pub fn monolithic_trajectory(&self, initial: &CoupledState, n: usize) -> Result<Vec<CoupledState>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(initial.clone());
        for _ in 0..n {
            let next = self.coupled_step(out.last().expect("nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Fluid solve over the sample times of `stress`, starting from `fluid0`.
    pub fn fluid_solve(&self, fluid0: &FluidState, stress: &[SpectralField]) -> Result<Vec<FluidState>> {
        if stress.is_empty() {
            return Err(FeneError::EmptyTrajectory);
        }
        let mut out = Vec::with_capacity(stress.len());
        out.push(fluid0.clone());
        for k in 0..stress.len() - 1 {
            let path = FieldPath {
                start: &stress[k],
                end: &stress[k + 1],
            };
            let next = fluid::step(
                out.last().expect("nonempty"),
                path,
                &self.forcing,
                &self.params,
                &self.fluid_cfg,
            )?;
            out.push(next);
        }
        Ok(out)
    }

    /// Fokker-Planck solve (explicit SSP-RK3) driven by the velocity samples.
    pub fn fp_solve(&self, psi0: &PolymerField, velocity: &[SpectralField]) -> Result<Vec<PolymerField>> {
        if velocity.is_empty() {
            return Err(FeneError::EmptyTrajectory);
        }
        let cfg = self.explicit_fp_cfg();
        let mut out = Vec::with_capacity(velocity.len());
        out.push(psi0.clone());
        for k in 0..velocity.len() - 1 {
            let path = FieldPath {
                start: &velocity[k],
                end: &velocity[k + 1],
            };
            let next = fp_step(out.last().expect("nonempty"), path, &self.op, &cfg)?;
            out.push(next);
        }
        Ok(out)
    }

    /// The fixed-point map: stress of `psi_tilde` drives the fluid, whose
    /// velocity drives the Fokker-Planck equation from the initial `psi`.
    pub fn fixed_point_map(
        &self,
        psi_tilde: &[PolymerField],
        initial: &CoupledState,
    ) -> Result<(Vec<FluidState>, Vec<PolymerField>)> {
        if psi_tilde.is_empty() {
            return Err(FeneError::EmptyTrajectory);
        }
        let stress: Vec<SpectralField> = psi_tilde.iter().map(|p| p.stress_field()).collect();
        let fluid = self.fluid_solve(&initial.fluid, &stress)?;
        let velocity: Vec<SpectralField> = fluid.iter().map(|f| f.u.clone()).collect();
        let psi = self.fp_solve(&initial.psi, &velocity)?;
        Ok((fluid, psi))
    }

    /// Iterate the fixed-point map from the constant-in-time seed.
    pub fn fixed_point_iteration(
        &self,
        initial: &CoupledState,
        cfg: &FixedPointConfig,
    ) -> Result<FixedPointReport> {
        cfg.validate()?;
        let n_steps = (cfg.horizon_t / self.dt()).round() as usize;
        if n_steps == 0 {
            return Err(FeneError::InvalidParameter(format!(
                "horizon {} shorter than one step {}",
                cfg.horizon_t,
                self.dt()
            )));
        }
        let seed: Vec<PolymerField> = (0..=n_steps)
            .map(|k| {
                let mut p = initial.psi.clone();
                p.time = initial.time + k as f64 * self.dt();
                p
            })
            .collect();
        let mut iterates = vec![seed];
        let mut distances = Vec::new();
        let mut fluid_last = Vec::new();
        for it in 0..cfg.max_iters {
            let (fluid, psi) = self
                .fixed_point_map(iterates.last().expect("nonempty"), initial)
                .map_err(|e| FeneError::FixedPoint {
                    iteration: it + 1,
                    source: Box::new(e),
                })?;
            let d = xs_distance(iterates.last().expect("nonempty"), &psi, cfg.s_prime)?;
            distances.push(d);
            iterates.push(psi);
            fluid_last = fluid;
            if d < cfg.stop_tol {
                break;
            }
        }
        let ratios = ratios_from_distances(&distances, cfg.stop_tol);
        Ok(FixedPointReport {
            iterates,
            distances,
            ratios,
            fluid: fluid_last,
        })
    }
}

/// Settings of the fixed-point experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    pub horizon_t: f64,
    /// Regularity of the monitored norm.
    pub s: u32,
    /// Regularity of the contraction norm, at most `s - 1`.
    pub s_prime: u32,
    pub max_iters: usize,
    /// Distances below this count as converged.
    pub stop_tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            horizon_t: 0.05,
            s: 2,
            s_prime: 1,
            max_iters: 5,
            stop_tol: 1e-13,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_t > 0.0) {
            return Err(FeneError::InvalidParameter(format!(
                "horizon_t = {} must be positive",
                self.horizon_t
            )));
        }
        if self.s < 1 || self.s_prime > self.s - 1 {
            return Err(FeneError::InvalidParameter(format!(
                "fixed-point regularities violate `s_prime <= s - 1` (s = {}, s_prime = {})",
                self.s, self.s_prime
            )));
        }
        if self.max_iters == 0 {
            return Err(FeneError::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Output of [`CoupledSolver::fixed_point_iteration`].
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// Seed followed by every image.
    pub iterates: Vec<Vec<PolymerField>>,
    /// `d_k = |iterate_{k+1} - iterate_k|_{X^{s'}}`.
    pub distances: Vec<f64>,
    pub ratios: Vec<ContractionRatio>,
    /// Fluid trajectory of the last application of the map.
    pub fluid: Vec<FluidState>,
}

/// One successive-distance ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContractionRatio {
    Ratio(f64),
    /// Both distances below the tolerance; the ratio carries no information.
    Converged,
}

impl ContractionRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            ContractionRatio::Ratio(r) => Some(*r),
            ContractionRatio::Converged => None,
        }
    }
}

fn ratios_from_distances(d: &[f64], tol: f64) -> Vec<ContractionRatio> {
    d.windows(2)
        .map(|w| {
            if w[0] <= tol || w[1] <= tol {
                ContractionRatio::Converged
            } else {
                ContractionRatio::Ratio(w[1] / w[0])
            }
        })
        .collect()
}

/// `sqrt(max_t |psi|^2_{W^{s,2}_x L^2_M} + int_0^T |psi|^2_{W^{s,2}_x H^1_M} dt)`
/// with the trapezoid rule on the sample times.
pub fn xs_norm(traj: &[PolymerField], s: u32) -> Result<f64> {
    if traj.is_empty() {
        return Err(FeneError::EmptyTrajectory);
    }
    let energies: Vec<_> = traj.iter().map(|p| fp_energy(p, s)).collect();
    let sup = energies.iter().map(|e| e.l2m).fold(0.0, f64::max);
    let mut integral = 0.0;
    for k in 1..traj.len() {
        let h = traj[k].time - traj[k - 1].time;
        integral += 0.5 * h * (energies[k].h1m + energies[k - 1].h1m);
    }
    Ok((sup + integral).sqrt())
}

/// `X^s` norm of the pointwise-in-time difference of two trajectories.
pub fn xs_distance(a: &[PolymerField], b: &[PolymerField], s: u32) -> Result<f64> {
    if a.len() != b.len() {
        return Err(FeneError::SizeMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let diff: Vec<PolymerField> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.lin_comb(1.0, y, -1.0, x.time))
        .collect::<Result<_>>()?;
    xs_norm(&diff, s)
}

/// Successive-distance ratios `d_{k+1} / d_k` of a sequence of trajectories.
pub fn contraction_factor(
    iterates: &[Vec<PolymerField>],
    s_prime: u32,
    tol: f64,
) -> Result<Vec<ContractionRatio>> {
    if iterates.len() < 3 {
        return Err(FeneError::InvalidParameter(format!(
            "contraction needs at least 3 iterates, got {}",
            iterates.len()
        )));
    }
    let d: Vec<f64> = iterates
        .windows(2)
        .map(|w| xs_distance(&w[0], &w[1], s_prime))
        .collect::<Result<_>>()?;
    Ok(ratios_from_distances(&d, tol))
}

/// `|u|_{W^{2,inf}} + |div T(psi)|_{L^inf}`, both grid sampled.
pub fn blowup_indicator(state: &CoupledState) -> Result<f64> {
    let div_t = state.psi.stress_field().divergence()?;
    let v = div_t.backward();
    let len = state.fluid.grid().len();
    let div_max = (0..len).map(|j| v[j].hypot(v[len + j])).fold(0.0, f64::max);
    Ok(sup_norm_w2inf(&state.fluid.u) + div_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{build_quadrature, eigen_basis};
    use crate::fokker_planck::ModeTerm;
    use crate::model::density_to_r;
    use crate::spectral::TorusGrid;

    fn setup(dt: f64) -> (TorusGrid, CoupledSolver) {
        let grid = TorusGrid::new(16).unwrap();
        let quad = build_quadrature(4.0, 16, 16).unwrap();
        let basis = eigen_basis(&quad, 12).unwrap();
        let p = ModelParams::default();
        let solver = CoupledSolver::new(
            p,
            ForcingSpec::zero(),
            FluidStepConfig::new(dt, 8),
            FpStepConfig::new(dt, p.epsilon, Some(16)),
            &basis,
        )
        .unwrap();
        (grid, solver)
    }

    fn perturbed(grid: &TorusGrid, solver: &CoupledSolver, amp: f64) -> CoupledState {
        let p = solver.params;
        let r0 = density_to_r(1.0, &p).unwrap();
        let mut fluid = FluidState::at_rest(grid, r0);
        let u1 = SpectralField::forward(grid, 1, &grid.sample(|x| amp * x[1].sin())).unwrap();
        let u2 = SpectralField::forward(grid, 1, &grid.sample(|x| 0.5 * amp * x[0].sin())).unwrap();
        fluid.u = SpectralField::stack(&[&u1, &u2]).unwrap();
        let psi = PolymerField::perturbed_equilibrium(
            grid,
            solver.operator().basis(),
            &[ModeTerm { basis_index: 3, amplitude: amp, wave: [1, 0], sine: false }],
        )
        .unwrap();
        CoupledState::new(fluid, psi).unwrap()
    }

    #[test]
    fn equilibrium_is_joint_fixed_point() {
        let (grid, solver) = setup(1e-3);
        let r0 = density_to_r(1.0, &solver.params).unwrap();
        let eq = CoupledState::new(
            FluidState::at_rest(&grid, r0),
            PolymerField::equilibrium(&grid, solver.operator().basis()),
        )
        .unwrap();
        let next = solver.coupled_step(&eq).unwrap();
        assert!(next.fluid.r.max_abs_diff(&eq.fluid.r).unwrap() < 1e-12);
        assert!(next.fluid.u.max_abs_diff(&eq.fluid.u).unwrap() < 1e-12);
        assert!(next.psi.coeffs().max_abs_diff(eq.psi.coeffs()).unwrap() < 1e-12);
        assert_eq!(blowup_indicator(&eq).unwrap(), 0.0);

        let seed: Vec<PolymerField> = (0..=10)
            .map(|k| {
                let mut p = eq.psi.clone();
                p.time = k as f64 * 1e-3;
                p
            })
            .collect();
        let (_, image) = solver.fixed_point_map(&seed, &eq).unwrap();
        assert!(xs_distance(&seed, &image, 1).unwrap() < 1e-10);
    }

    #[test]
    fn xs_norm_examples() {
        let (grid, solver) = setup(1e-3);
        let eq = PolymerField::equilibrium(&grid, solver.operator().basis());
        let traj: Vec<PolymerField> = (0..=10)
            .map(|k| {
                let mut p = eq.clone();
                p.time = 0.1 * k as f64;
                p
            })
            .collect();
        let n = xs_norm(&traj, 0).unwrap();
        assert!((n - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(matches!(xs_norm(&[], 0), Err(FeneError::EmptyTrajectory)));
    }

    #[test]
    fn geometric_sequence_ratios() {
        let (grid, solver) = setup(1e-3);
        let basis = solver.operator().basis();
        let delta = PolymerField::perturbed_equilibrium(
            &grid,
            basis,
            &[ModeTerm { basis_index: 2, amplitude: 0.1, wave: [1, 1], sine: false }],
        )
        .unwrap();
        let eq = PolymerField::equilibrium(&grid, basis);
        let iterates: Vec<Vec<PolymerField>> = (0..5)
            .map(|k| {
                let w = 0.5f64.powi(k);
                vec![eq.lin_comb(1.0 - w, &delta, w, 0.0).unwrap()]
            })
            .collect();
        let ratios = contraction_factor(&iterates, 1, 1e-14).unwrap();
        for r in ratios {
            assert!((r.value().unwrap() - 0.5).abs() < 1e-8);
        }
        let same = vec![vec![eq.clone()], vec![eq.clone()], vec![eq.clone()]];
        let ratios = contraction_factor(&same, 1, 1e-14).unwrap();
        assert!(ratios.iter().all(|r| *r == ContractionRatio::Converged));
    }

    #[test]
    fn monolithic_close_to_picard_pass() {
        let (grid, solver) = setup(2e-3);
        let init = perturbed(&grid, &solver, 0.05);
        let mono = solver.monolithic_trajectory(&init, 10).unwrap();
        let psi_mono: Vec<PolymerField> = mono.iter().map(|s| s.psi.clone()).collect();
        let (_, image) = solver.fixed_point_map(&psi_mono, &init).unwrap();
        let d = xs_distance(&psi_mono, &image, 1).unwrap();
        assert!(d < 1e-6, "distance {d}");
    }

    #[test]
    fn blowup_indicator_scales_with_velocity() {
        let (grid, solver) = setup(1e-3);
        let s1 = perturbed(&grid, &solver, 0.1);
        let mut s1 = s1;
        s1.psi = PolymerField::equilibrium(&grid, solver.operator().basis());
        let mut s2 = s1.clone();
        s2.fluid.u = s2.fluid.u.scaled(2.0);
        assert!(blowup_indicator(&s2).unwrap() > blowup_indicator(&s1).unwrap());
    }
}
