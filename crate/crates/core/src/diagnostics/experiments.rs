use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config_space::{lemma_a1_check, ConfDistribution, ConfigBasis};
use crate::coupling::{xs_distance, ContractionRatio, CoupledSolver, CoupledState, FixedPointConfig};
use crate::error::{FeneError, Result};
use crate::fluid::{fluid_energy, FluidState};
use crate::fokker_planck::PolymerField;
use crate::spectral::{SpectralField, TorusGrid};

use super::config::RunConfig;
use super::series::{csv_bytes, write_atomic};

fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    let n = (horizon / dt).round();
    if n < 1.0 || ((n * dt) - horizon).abs() > 1e-9 * horizon {
        return Err(FeneError::InvalidParameter(format!(
            "horizon {horizon} is not a whole number of steps of {dt}"
        )));
    }
    Ok(n as usize)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Smallest `c >= 0` making `g - c * integral` nonincreasing on the samples;
/// infinite if `g` grows on an interval where the integral is flat.
pub fn growth_constant(g: &[f64], integral: &[f64]) -> f64 {
    let mut c: f64 = 0.0;
    for k in 1..g.len().min(integral.len()) {
        let dg = g[k] - g[k - 1];
        if dg <= 0.0 {
            continue;
        }
        let di = integral[k] - integral[k - 1];
        if di <= 0.0 {
            return f64::INFINITY;
        }
        c = c.max(dg / di);
    }
    c
}

/// Output distance against input perturbation size.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceReport {
    pub kind: &'static str,
    pub deltas: Vec<f64>,
    pub distances: Vec<f64>,
    pub slope: f64,
}

impl DifferenceReport {
    fn new(kind: &'static str, deltas: &[f64], distances: Vec<f64>) -> Self {
        let slope = loglog_slope(deltas, &distances);
        DifferenceReport {
            kind,
            deltas: deltas.to_vec(),
            distances,
            slope,
        }
    }
}

fn stress_perturbation(grid: &TorusGrid) -> Result<SpectralField> {
    let mut v = grid.sample(|x| x[0].cos());
    let off = grid.sample(|x| (x[0] + x[1]).sin());
    v.extend_from_slice(&off);
    v.extend_from_slice(&off);
    v.extend(grid.sample(|x| x[1].cos()));
    Ok(SpectralField::forward(grid, 4, &v)?.dealias())
}

fn velocity_perturbation(grid: &TorusGrid) -> Result<SpectralField> {
    let mut v = grid.sample(|x| x[1].sin());
    v.extend(grid.sample(|x| x[0].cos()));
    Ok(SpectralField::forward(grid, 2, &v)?.dealias())
}

fn fluid_sup_distance(a: &[FluidState], b: &[FluidState], s: u32) -> Result<f64> {
    let mut d: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let diff = FluidState {
            r: x.r.sub(&y.r)?,
            u: x.u.sub(&y.u)?,
            time: x.time,
        };
        d = d.max(fluid_energy(&diff, s).sqrt());
    }
    Ok(d)
}

/// Fluid response to perturbing a stress history by `delta` times a fixed
/// smooth tensor field; the distance is `sup_t |(r1 - r2, u1 - u2)|_{W^{s,2}}`.
pub fn stress_difference(
    solver: &CoupledSolver,
    initial: &CoupledState,
    horizon: f64,
    deltas: &[f64],
    s: u32,
) -> Result<DifferenceReport> {
    let n = steps_for(horizon, solver.dt())?;
    let base_stress = initial.psi.stress_field();
    let g = stress_perturbation(initial.fluid.grid())?;
    let stress: Vec<SpectralField> = vec![base_stress.clone(); n + 1];
    let (base, perturbed) = rayon::join(
        || solver.fluid_solve(&initial.fluid, &stress),
        || {
            deltas
                .par_iter()
                .map(|d| {
                    let st = base_stress.lin_comb(1.0, &g, *d)?;
                    solver.fluid_solve(&initial.fluid, &vec![st; n + 1])
                })
                .collect::<Result<Vec<_>>>()
        },
    );
    let base = base?;
    let distances = perturbed?
        .iter()
        .map(|traj| fluid_sup_distance(&base, traj, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(DifferenceReport::new("stress_to_fluid", deltas, distances))
}

/// Polymer response to perturbing a velocity history by `delta` times a
/// fixed smooth field; the distance is the `X^s` norm of the difference.
pub fn velocity_difference(
    solver: &CoupledSolver,
    initial: &CoupledState,
    horizon: f64,
    deltas: &[f64],
    s: u32,
) -> Result<DifferenceReport> {
    let n = steps_for(horizon, solver.dt())?;
    let mono = solver.monolithic_trajectory(initial, n)?;
    let velocity: Vec<SpectralField> = mono.iter().map(|c| c.fluid.u.clone()).collect();
    let v = velocity_perturbation(initial.fluid.grid())?;
    let (base, perturbed) = rayon::join(
        || solver.fp_solve(&initial.psi, &velocity),
        || {
            deltas
                .par_iter()
                .map(|d| {
                    let vel = velocity
                        .iter()
                        .map(|u| u.lin_comb(1.0, &v, *d))
                        .collect::<Result<Vec<_>>>()?;
                    solver.fp_solve(&initial.psi, &vel)
                })
                .collect::<Result<Vec<_>>>()
        },
    );
    let base = base?;
    let distances = perturbed?
        .iter()
        .map(|traj| xs_distance(&base, traj, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(DifferenceReport::new("velocity_to_polymer", deltas, distances))
}

pub fn write_difference_csv(path: &Path, reports: &[&DifferenceReport]) -> Result<()> {
    let header = vec!["kind".to_string(), "delta".into(), "distance".into()];
    let rows = reports.iter().flat_map(|r| {
        r.deltas
            .iter()
            .zip(&r.distances)
            .map(|(d, x)| vec![r.kind.to_string(), format!("{d:.16e}"), format!("{x:.16e}")])
            .collect::<Vec<_>>()
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Fixed-point iteration at one horizon.
#[derive(Debug, Clone)]
pub struct ContractionRun {
    pub horizon: f64,
    pub distances: Vec<f64>,
    pub ratios: Vec<ContractionRatio>,
    /// `X^{s'}` distance of the last iterate to the monolithic trajectory.
    pub monolithic_distance: f64,
}

impl ContractionRun {
    /// Largest informative ratio; `None` if every ratio is converged.
    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios
            .iter()
            .filter_map(ContractionRatio::value)
            .reduce(f64::max)
    }
}

/// Fixed-point iterations over a sweep of horizons, run concurrently.
pub fn contraction_study(
    solver: &CoupledSolver,
    initial: &CoupledState,
    horizons: &[f64],
    fp: &FixedPointConfig,
) -> Result<Vec<ContractionRun>> {
    horizons
        .par_iter()
        .map(|&t| {
            let n = steps_for(t, solver.dt())?;
            let cfg = FixedPointConfig { horizon_t: t, ..*fp };
            let rep = solver.fixed_point_iteration(initial, &cfg)?;
            let mono: Vec<PolymerField> = solver
                .monolithic_trajectory(initial, n)?
                .into_iter()
                .map(|c| c.psi)
                .collect();
            let last = rep.iterates.last().expect("seed present");
            Ok(ContractionRun {
                horizon: t,
                monolithic_distance: xs_distance(last, &mono, fp.s_prime)?,
                distances: rep.distances,
                ratios: rep.ratios,
            })
        })
        .collect()
}

pub fn write_contraction_csv(path: &Path, runs: &[ContractionRun]) -> Result<()> {
    let header = ["horizon", "iteration", "distance", "ratio"].map(String::from).to_vec();
    let rows = runs.iter().flat_map(|r| {
        r.distances
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let ratio = match k.checked_sub(1).map(|j| r.ratios[j]) {
                    None => String::new(),
                    Some(ContractionRatio::Converged) => "converged".into(),
                    Some(ContractionRatio::Ratio(x)) => format!("{x:.16e}"),
                };
                vec![format!("{:.16e}", r.horizon), (k + 1).to_string(), format!("{d:.16e}"), ratio]
            })
            .collect::<Vec<_>>()
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Empirical constants of the weighted `L^1` inequality over a random ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaA1Report {
    pub ensemble_size: usize,
    pub deltas: Vec<f64>,
    /// `max over the ensemble of (lhs - delta h1) / l2`.
    pub constants: Vec<f64>,
}

impl LemmaA1Report {
    pub fn is_finite(&self) -> bool {
        self.constants.iter().all(|c| c.is_finite())
    }

    /// Constants grow as `delta` shrinks.
    pub fn is_monotone(&self) -> bool {
        let mut pairs: Vec<(f64, f64)> = self.deltas.iter().copied().zip(self.constants.iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

/// Random smooth ratios `psi/M` with coefficients decaying like
/// `(1 + lambda_i)^{-1/2}`.
pub fn lemma_a1_ensemble(basis: &ConfigBasis, size: usize, seed: u64) -> Result<Vec<ConfDistribution>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam = basis.eigenvalues();
    (0..size)
        .map(|_| {
            let c = lam
                .iter()
                .map(|l| rng.random_range(-1.0..1.0) / (1.0 + l).sqrt())
                .collect();
            ConfDistribution::new(basis, c)
        })
        .collect()
}

pub fn lemma_a1_experiment(
    basis: &ConfigBasis,
    ensemble_size: usize,
    deltas: &[f64],
    seed: u64,
) -> Result<LemmaA1Report> {
    if ensemble_size < 100 {
        return Err(FeneError::InvalidParameter(format!(
            "ensemble size {ensemble_size} must be >= 100"
        )));
    }
    let ensemble = lemma_a1_ensemble(basis, ensemble_size, seed)?;
    let constants = deltas
        .iter()
        .map(|&d| {
            ensemble.iter().try_fold(f64::NEG_INFINITY, |acc, phi| {
                Ok(acc.max(lemma_a1_check(phi, basis, d)?.required_constant()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaA1Report {
        ensemble_size,
        deltas: deltas.to_vec(),
        constants,
    })
}

pub fn write_lemma_csv(path: &Path, rep: &LemmaA1Report) -> Result<()> {
    let header = vec!["delta".to_string(), "constant".into()];
    let rows = rep
        .deltas
        .iter()
        .zip(&rep.constants)
        .map(|(d, c)| vec![format!("{d:.16e}"), format!("{c:.16e}")]);
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Self-convergence of the monolithic scheme under two dt halvings.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonReport {
    pub dts: [f64; 3],
    /// `|s_dt - s_{dt/2}|` and `|s_{dt/2} - s_{dt/4}|` at the horizon.
    pub differences: [f64; 2],
    pub order: f64,
}

fn state_distance(a: &CoupledState, b: &CoupledState) -> Result<f64> {
    let dr = a.fluid.r.sub(&b.fluid.r)?.sobolev_norm_sq(0);
    let du = a.fluid.u.sub(&b.fluid.u)?.sobolev_norm_sq(0);
    let dp = a.psi.coeffs().sub(b.psi.coeffs())?.sobolev_norm_sq(0);
    Ok((dr + du + dp).sqrt())
}

pub fn richardson_order(
    cfg: &RunConfig,
    basis: &ConfigBasis,
    initial: &CoupledState,
    horizon: f64,
    dt: f64,
) -> Result<RichardsonReport> {
    let dts = [dt, dt / 2.0, dt / 4.0];
    let finals = dts
        .par_iter()
        .map(|&h| {
            let mut c = cfg.clone();
            c.time.dt = h;
            let solver = c.build_solver(basis)?;
            let n = steps_for(horizon, h)?;
            let mut s = initial.clone();
            for _ in 0..n {
                s = solver.coupled_step(&s)?;
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let e1 = state_distance(&finals[0], &finals[1])?;
    let e2 = state_distance(&finals[1], &finals[2])?;
    Ok(RichardsonReport {
        dts,
        differences: [e1, e2],
        order: (e1 / e2).log2(),
    })
}
