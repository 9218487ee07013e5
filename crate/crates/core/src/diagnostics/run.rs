use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config_space::ConfigBasis;
use crate::coupling::{blowup_indicator, CoupledSolver, CoupledState};
use crate::error::{FeneError, Result};
use crate::fluid::{cutoff_factor, fluid_energy, grad_sup_norm, max_principle_envelope, FluidState};
use crate::fokker_planck::{fp_energy, nonnegativity_report, ModeTerm, PolymerField};
use crate::model::{density_to_r, ModelParams};
use crate::spectral::{SpectralField, TorusGrid};

use super::checkpoint::{checkpoint_save, Checkpoint};
use super::config::{RunConfig, Scenario};
use super::experiments;
use super::series::{read_series, write_atomic, write_series, TimeSeriesRecord};

const WAVES: [[i32; 2]; 4] = [[1, 0], [0, 1], [1, 1], [1, -1]];

fn random_polymer_terms(rng: &mut ChaCha8Rng, n_basis: usize, amplitude: f64) -> Vec<ModeTerm> {
    (1..n_basis.min(6))
        .map(|i| ModeTerm {
            basis_index: i,
            amplitude: amplitude * rng.random_range(-1.0..1.0),
            wave: WAVES[rng.random_range(0..WAVES.len())],
            sine: rng.random_bool(0.5),
        })
        .collect()
}

fn velocity_field(grid: &TorusGrid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<SpectralField> {
    let mut v = grid.sample(|x| f(x)[0]);
    v.extend(grid.sample(|x| f(x)[1]));
    Ok(SpectralField::forward(grid, 2, &v)?.dealias())
}

/// Initial data of the configured scenario; every random draw comes from
/// the run seed.
pub fn initial_state(cfg: &RunConfig, basis: &ConfigBasis) -> Result<CoupledState> {
    let grid = cfg.torus_grid()?;
    let p = &cfg.model;
    let sc = &cfg.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let r0 = density_to_r(1.0, p)?;
    let (fluid, psi) = match sc.kind {
        Scenario::Equilibrium => (
            FluidState::at_rest(&grid, r0),
            PolymerField::equilibrium(&grid, basis),
        ),
        Scenario::ShearPerturbation
        | Scenario::StressDifference
        | Scenario::ContractionStudy
        | Scenario::LemmaA1 => {
            let a = sc.velocity_amplitude;
            let mut fluid = FluidState::at_rest(&grid, r0);
            fluid.u = velocity_field(&grid, |x| [a * x[1].sin(), 0.5 * a * x[0].sin()])?;
            let terms = random_polymer_terms(&mut rng, basis.n_basis(), sc.polymer_amplitude);
            (fluid, PolymerField::perturbed_equilibrium(&grid, basis, &terms)?)
        }
        Scenario::DensityBump => {
            let a = sc.bump_amplitude;
            let values = grid
                .sample(|x| 1.0 + a * (x[0].cos() + x[1].cos() - 2.0).exp())
                .into_iter()
                .map(|rho| density_to_r(rho, p))
                .collect::<Result<Vec<_>>>()?;
            let r = SpectralField::forward(&grid, 1, &values)?.dealias();
            let fluid = FluidState::new(r, SpectralField::zeros(&grid, 2), 0.0)?;
            let terms = random_polymer_terms(&mut rng, basis.n_basis(), sc.polymer_amplitude);
            (fluid, PolymerField::perturbed_equilibrium(&grid, basis, &terms)?)
        }
    };
    CoupledState::new(fluid, psi)
}

/// Time integrals and initial extremes carried along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMonitor {
    pub inf_r0: f64,
    pub sup_r0: f64,
    pub grad_integral: f64,
    pub velocity_integral: f64,
    pub stress_integral: f64,
}

impl RunMonitor {
    fn start(state: &CoupledState) -> Result<Self> {
        let fine = state.fluid.r.upsample(4)?.backward();
        let inf = fine.iter().copied().fold(state.fluid.min_r(), f64::min);
        let sup = fine.iter().copied().fold(state.fluid.max_r(), f64::max);
        Ok(RunMonitor {
            inf_r0: inf,
            sup_r0: sup,
            grad_integral: 0.0,
            velocity_integral: 0.0,
            stress_integral: 0.0,
        })
    }

    pub fn to_aux(&self) -> Vec<f64> {
        vec![
            self.inf_r0,
            self.sup_r0,
            self.grad_integral,
            self.velocity_integral,
            self.stress_integral,
        ]
    }

    pub fn from_aux(aux: &[f64]) -> Result<Self> {
        match aux {
            [a, b, c, d, e] => Ok(RunMonitor {
                inf_r0: *a,
                sup_r0: *b,
                grad_integral: *c,
                velocity_integral: *d,
                stress_integral: *e,
            }),
            _ => Err(FeneError::Version(format!(
                "snapshot carries {} run accumulators, expected 5",
                aux.len()
            ))),
        }
    }
}

/// Integrands of the monitor integrals at one state.
fn integrands(state: &CoupledState, s: u32) -> Result<[f64; 3]> {
    let u = &state.fluid.u;
    let div_t = state.psi.stress_field().divergence()?;
    Ok([grad_sup_norm(u), u.sobolev_norm_sq(s + 1), div_t.sobolev_norm_sq(s)])
}

/// A coupled run in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: ModelParams,
    solver: CoupledSolver,
    state: CoupledState,
    step: u64,
    monitor: RunMonitor,
    integrands: [f64; 3],
    s_max: u32,
    s_monitor: u32,
    ceiling: f64,
    enforce_envelope: bool,
}

impl Simulation {
    pub fn new(cfg: &RunConfig, basis: &ConfigBasis) -> Result<Self> {
        let state = initial_state(cfg, basis)?;
        let monitor = RunMonitor::start(&state)?;
        Self::assemble(cfg, basis, state, 0, monitor)
    }

    pub fn from_state(cfg: &RunConfig, basis: &ConfigBasis, state: CoupledState) -> Result<Self> {
        let monitor = RunMonitor::start(&state)?;
        Self::assemble(cfg, basis, state, 0, monitor)
    }

    pub fn from_checkpoint(cfg: &RunConfig, basis: &ConfigBasis, ck: Checkpoint) -> Result<Self> {
        let monitor = RunMonitor::from_aux(&ck.aux)?;
        let grid = cfg.torus_grid()?;
        ck.state.fluid.r.check_grid(&grid)?;
        Self::assemble(cfg, basis, ck.state, ck.step, monitor)
    }

    fn assemble(
        cfg: &RunConfig,
        basis: &ConfigBasis,
        state: CoupledState,
        step: u64,
        monitor: RunMonitor,
    ) -> Result<Self> {
        let integrands = integrands(&state, cfg.run.s_monitor)?;
        Ok(Simulation {
            integrands,
            params: cfg.model,
            solver: cfg.build_solver(basis)?,
            state,
            step,
            monitor,
            s_max: cfg.run.s_max,
            s_monitor: cfg.run.s_monitor,
            ceiling: cfg.run.ceiling,
            enforce_envelope: cfg.run.enforce_envelope,
        })
    }

    pub fn state(&self) -> &CoupledState {
        &self.state
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn monitor(&self) -> &RunMonitor {
        &self.monitor
    }

    pub fn solver(&self) -> &CoupledSolver {
        &self.solver
    }

    pub fn set_ceiling(&mut self, ceiling: f64) {
        self.ceiling = ceiling;
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            state: self.state.clone(),
            step: self.step,
            aux: self.monitor.to_aux(),
        }
    }

    pub fn envelope(&self) -> (f64, f64) {
        max_principle_envelope(
            self.monitor.inf_r0,
            self.monitor.sup_r0,
            self.monitor.grad_integral,
            &self.params,
        )
    }

    pub fn record(&self) -> Result<TimeSeriesRecord> {
        let s = &self.state;
        let p = &self.params;
        let (lo, hi) = self.envelope();
        let fp: Vec<_> = (0..=self.s_max).map(|k| fp_energy(&s.psi, k)).collect();
        Ok(TimeSeriesRecord {
            step: self.step,
            time: s.time,
            mass: s.fluid.mass(p),
            momentum: s.fluid.momentum(p),
            polymer_mass: s.psi.polymer_mass(),
            fluid_energy: (0..=self.s_max).map(|k| fluid_energy(&s.fluid, k)).collect(),
            fp_l2m: fp.iter().map(|e| e.l2m).collect(),
            fp_h1m: fp.iter().map(|e| e.h1m).collect(),
            min_r: s.fluid.min_r(),
            max_r: s.fluid.max_r(),
            envelope_lower: lo,
            envelope_upper: hi,
            grad_integral: self.monitor.grad_integral,
            velocity_integral: self.monitor.velocity_integral,
            stress_integral: self.monitor.stress_integral,
            min_psi_sample: nonnegativity_report(&s.psi).min_psi,
            blowup_indicator: blowup_indicator(s)?,
            cutoff_active: cutoff_factor(&s.fluid.u, &self.solver.fluid_cfg) < 1.0,
        })
    }

    /// One coupled step followed by the envelope and blow-up checks.
    pub fn advance(&mut self) -> Result<()> {
        let before = self.integrands;
        let next = self.solver.coupled_step(&self.state)?;
        let after = integrands(&next, self.s_monitor)?;
        let h = next.time - self.state.time;
        self.monitor.grad_integral += 0.5 * h * (before[0] + after[0]);
        self.monitor.velocity_integral += 0.5 * h * (before[1] + after[1]);
        self.monitor.stress_integral += 0.5 * h * (before[2] + after[2]);
        self.state = next;
        self.integrands = after;
        self.step += 1;
        let time = self.state.time;
        if self.enforce_envelope {
            let (lower, upper) = self.envelope();
            let (min_r, max_r) = (self.state.fluid.min_r(), self.state.fluid.max_r());
            let slack = 1e-12 * upper;
            if min_r < lower - slack || max_r > upper + slack {
                return Err(FeneError::EnvelopeViolation {
                    time,
                    min_r,
                    max_r,
                    lower,
                    upper,
                });
            }
        }
        let value = blowup_indicator(&self.state)?;
        if !(value <= self.ceiling) {
            return Err(FeneError::BlowUp {
                value,
                ceiling: self.ceiling,
                time,
            });
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub max_steps: Option<u64>,
    pub ceiling: Option<f64>,
}

impl RunOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(o) = &self.output {
            cfg.run.output = o.clone();
        }
        if let Some(m) = self.max_steps {
            cfg.run.max_steps = Some(m);
        }
        if let Some(c) = self.ceiling {
            cfg.run.ceiling = c;
        }
    }
}

/// What a finished (or aborted) run reports.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub steps: u64,
    pub final_time: f64,
    pub error: Option<FeneError>,
    pub results: serde_json::Value,
    /// `int rho |u|` of the initial data, or the mass when it starts at rest.
    pub momentum_scale: f64,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, FeneError::exit_code)
    }
}

/// SHA-256 of `blob <len>\0<bytes>`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
    dir.join("snapshots").join(format!("step_{step:08}.fkp"))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| FeneError::Io(format!("{}: {e}", path.display())))
}

/// Steps of the recorded reference run for each scenario.
fn series_target(cfg: &RunConfig) -> u64 {
    let steps_for = |t: f64| (t / cfg.time.dt).round() as u64;
    match cfg.scenario.kind {
        Scenario::Equilibrium | Scenario::ShearPerturbation | Scenario::DensityBump => cfg.n_steps(),
        Scenario::StressDifference => steps_for(cfg.experiment.difference_horizon),
        Scenario::ContractionStudy => steps_for(cfg.experiment.horizons.iter().copied().fold(0.0, f64::max)),
        Scenario::LemmaA1 => 0,
    }
}

/// Executes the configured scenario, optionally resuming from a snapshot,
/// and writes `series.csv`, `manifest.json` and `snapshots/`.
pub fn run_scenario(cfg: &RunConfig, resume: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.run.output.clone();
    create_dir(&out.join("snapshots"))?;
    let basis = cfg.build_basis()?;

    let (mut sim, mut records, resumed_from) = match resume {
        Some(path) => {
            let ck = super::checkpoint::checkpoint_load(path, &basis)?;
            let sim = Simulation::from_checkpoint(cfg, &basis, ck)?;
            let series = out.join("series.csv");
            let mut kept = if series.exists() { read_series(&series)? } else { Vec::new() };
            kept.retain(|r| r.step <= sim.step());
            (sim, kept, Some(path.display().to_string()))
        }
        None => (Simulation::new(cfg, &basis)?, Vec::new(), None),
    };
    if records.last().map(|r| r.step) != Some(sim.step()) {
        records.push(sim.record()?);
    }

    let target = series_target(cfg);
    let stop = cfg.run.max_steps.map_or(target, |m| m.min(target));
    let mut error = None;
    while sim.step() < stop {
        if let Err(e) = sim.advance() {
            error = Some(e);
            break;
        }
        let k = sim.step();
        if k % cfg.run.record_every == 0 || k == stop {
            records.push(sim.record()?);
        }
        if cfg.run.snapshot_every > 0 && k % cfg.run.snapshot_every == 0 {
            checkpoint_save(&sim.checkpoint(), &snapshot_path(&out, k))?;
        }
    }
    if error.is_some() && records.last().map(|r| r.step) != Some(sim.step()) {
        records.push(sim.record()?);
    }
    checkpoint_save(&sim.checkpoint(), &snapshot_path(&out, sim.step()))?;
    write_series(&out.join("series.csv"), &records, cfg.run.s_max)?;

    let initial = initial_state(cfg, &basis)?;
    let momentum_scale = match initial.fluid.momentum_scale(&cfg.model) {
        m if m > 0.0 => m,
        _ => initial.fluid.mass(&cfg.model),
    };
    let mut results = json!({});
    if error.is_none() && sim.step() == target {
        match run_experiment(cfg, &basis, &initial, &out) {
            Ok(r) => results = r,
            Err(e) => error = Some(e),
        }
    }

    let summary = RunSummary {
        output: out.clone(),
        steps: sim.step(),
        final_time: sim.state().time,
        error,
        results,
        momentum_scale,
    };
    write_manifest(cfg, &summary, resumed_from.as_deref())?;
    Ok(summary)
}

fn run_experiment(
    cfg: &RunConfig,
    basis: &ConfigBasis,
    initial: &CoupledState,
    out: &Path,
) -> Result<serde_json::Value> {
    let ex = &cfg.experiment;
    match cfg.scenario.kind {
        Scenario::StressDifference => {
            let solver = cfg.build_solver(basis)?;
            let s_prime = cfg.fixed_point.s_prime;
            let fluid = experiments::stress_difference(&solver, initial, ex.difference_horizon, &ex.deltas, s_prime)?;
            let fp = experiments::velocity_difference(&solver, initial, ex.difference_horizon, &ex.deltas, s_prime)?;
            experiments::write_difference_csv(&out.join("difference.csv"), &[&fluid, &fp])?;
            Ok(json!({
                "stress_to_fluid_slope": fluid.slope,
                "velocity_to_polymer_slope": fp.slope,
            }))
        }
        Scenario::ContractionStudy => {
            let solver = cfg.build_solver(basis)?;
            let runs = experiments::contraction_study(&solver, initial, &ex.horizons, &cfg.fixed_point)?;
            experiments::write_contraction_csv(&out.join("contraction.csv"), &runs)?;
            let per: Vec<_> = runs
                .iter()
                .map(|r| {
                    json!({
                        "horizon": r.horizon,
                        "max_ratio": r.max_ratio(),
                        "monolithic_distance": r.monolithic_distance,
                    })
                })
                .collect();
            Ok(json!({ "horizons": per }))
        }
        Scenario::LemmaA1 => {
            let rep = experiments::lemma_a1_experiment(basis, ex.ensemble_size, &ex.lemma_deltas, cfg.run.seed)?;
            experiments::write_lemma_csv(&out.join("lemma_a1.csv"), &rep)?;
            Ok(json!({
                "deltas": rep.deltas,
                "constants": rep.constants,
                "finite": rep.is_finite(),
                "monotone": rep.is_monotone(),
            }))
        }
        _ => Ok(json!({})),
    }
}

fn write_manifest(cfg: &RunConfig, s: &RunSummary, resumed_from: Option<&str>) -> Result<()> {
    let config_text = cfg.to_toml_string();
    let (status, reason, message) = match &s.error {
        None if s.steps < series_target(cfg) => ("stopped", "max_steps", String::new()),
        None => ("completed", "ok", String::new()),
        Some(e) => ("failed", e.reason_code(), e.to_string()),
    };
    let manifest = json!({
        "program": "fene",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario.kind.name(),
        "status": status,
        "reason_code": reason,
        "message": message,
        "exit_code": s.exit_code(),
        "steps": s.steps,
        "final_time": s.final_time,
        "seed": cfg.run.seed,
        "momentum_scale": s.momentum_scale,
        "input_hash": content_hash(config_text.as_bytes()),
        "resumed_from": resumed_from,
        "config": serde_json::to_value(cfg).map_err(|e| FeneError::Io(e.to_string()))?,
        "results": s.results,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| FeneError::Io(e.to_string()))?;
    write_atomic(&s.output.join("manifest.json"), text.as_bytes())
}
