use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config_space::{build_quadrature, eigen_basis, ConfigBasis};
use crate::coupling::{CoupledSolver, FixedPointConfig};
use crate::error::{FeneError, Result};
use crate::fluid::FluidStepConfig;
use crate::fokker_planck::{FpScheme, FpStepConfig};
use crate::model::{ForcingSpec, ModelParams};
use crate::spectral::TorusGrid;

/// The scenario a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Equilibrium,
    #[default]
    ShearPerturbation,
    DensityBump,
    StressDifference,
    ContractionStudy,
    LemmaA1,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Equilibrium => "equilibrium",
            Scenario::ShearPerturbation => "shear_perturbation",
            Scenario::DensityBump => "density_bump",
            Scenario::StressDifference => "stress_difference",
            Scenario::ContractionStudy => "contraction_study",
            Scenario::LemmaA1 => "lemma_a1",
        }
    }

    /// Scenarios whose main product is a time series of one coupled run.
    pub fn is_time_stepping(&self) -> bool {
        matches!(
            self,
            Scenario::Equilibrium | Scenario::ShearPerturbation | Scenario::DensityBump
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Points per axis.
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigSpaceSpec {
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_basis: usize,
    /// Boundary cut-off index; absent means no cut-off.
    pub chi_index: Option<usize>,
}

impl Default for ConfigSpaceSpec {
    fn default() -> Self {
        ConfigSpaceSpec {
            n_radial: 32,
            n_angular: 32,
            n_basis: 40,
            chi_index: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidSpec {
    /// Galerkin projection; defaults to the dealiasing cutoff.
    pub n_modes: Option<usize>,
    pub cutoff_r: Option<f64>,
    pub cfl: f64,
}

impl Default for FluidSpec {
    fn default() -> Self {
        FluidSpec {
            n_modes: None,
            cutoff_r: None,
            cfl: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpSpec {
    pub cfl: f64,
}

impl Default for FpSpec {
    fn default() -> Self {
        FpSpec { cfl: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub horizon_t: f64,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec {
            dt: 1e-3,
            horizon_t: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: Scenario,
    /// Velocity amplitude of the shear profile.
    pub velocity_amplitude: f64,
    /// Amplitude of the random polymer perturbation.
    pub polymer_amplitude: f64,
    /// Relative height of the density bump.
    pub bump_amplitude: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            kind: Scenario::ShearPerturbation,
            velocity_amplitude: 0.1,
            polymer_amplitude: 1e-3,
            bump_amplitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    pub output: PathBuf,
    /// Record a series row every this many steps.
    pub record_every: u64,
    /// Write a snapshot every this many steps; 0 writes only the final one.
    pub snapshot_every: u64,
    /// Blow-up indicator ceiling.
    pub ceiling: f64,
    /// Largest Sobolev index recorded in the series.
    pub s_max: u32,
    /// Sobolev index of the energy-shape monitor.
    pub s_monitor: u32,
    pub max_steps: Option<u64>,
    /// Abort when `r` leaves the maximum-principle envelope.
    pub enforce_envelope: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            seed: 0,
            output: PathBuf::from("fene-run"),
            record_every: 1,
            snapshot_every: 0,
            ceiling: 1e3,
            s_max: 2,
            s_monitor: 2,
            max_steps: None,
            enforce_envelope: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Perturbation sizes of the difference experiments.
    pub deltas: Vec<f64>,
    /// Horizon of the difference experiments.
    pub difference_horizon: f64,
    /// Horizons of the contraction sweep.
    pub horizons: Vec<f64>,
    pub ensemble_size: usize,
    pub lemma_deltas: Vec<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            deltas: vec![1e-4, 1e-3, 1e-2],
            difference_horizon: 0.05,
            horizons: vec![0.1, 0.05, 0.025],
            ensemble_size: 200,
            lemma_deltas: vec![1.0, 0.1, 0.01],
        }
    }
}

/// Complete description of a run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub forcing: ForcingSpec,
    pub grid: GridSpec,
    pub config_space: ConfigSpaceSpec,
    pub fluid: FluidSpec,
    pub fp: FpSpec,
    pub time: TimeSpec,
    pub scenario: ScenarioSpec,
    pub run: RunSpec,
    pub fixed_point: FixedPointConfig,
    pub experiment: ExperimentSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| FeneError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FeneError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            FeneError::Config(msg) => FeneError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let grid = self.torus_grid()?;
        let cs = &self.config_space;
        if cs.n_basis == 0 {
            return Err(FeneError::InvalidParameter("n_basis must be >= 1".into()));
        }
        if let Some(n) = self.fluid.n_modes {
            if n > grid.dealias_cutoff() {
                return Err(FeneError::InvalidParameter(format!(
                    "n_modes = {n} exceeds the dealiasing cutoff {}",
                    grid.dealias_cutoff()
                )));
            }
        }
        self.fluid_step_config()?.validate()?;
        self.fp_step_config()?.validate()?;
        if !(self.time.horizon_t > 0.0) {
            return Err(FeneError::InvalidParameter(format!(
                "horizon_t = {} must be positive",
                self.time.horizon_t
            )));
        }
        if self.run.record_every == 0 {
            return Err(FeneError::InvalidParameter("record_every must be >= 1".into()));
        }
        if !(self.run.ceiling > 0.0) {
            return Err(FeneError::InvalidParameter(format!(
                "ceiling = {} must be positive",
                self.run.ceiling
            )));
        }
        if self.run.s_monitor > self.run.s_max {
            return Err(FeneError::InvalidParameter(format!(
                "s_monitor = {} exceeds s_max = {}",
                self.run.s_monitor, self.run.s_max
            )));
        }
        self.fixed_point.validate()?;
        if self.scenario.kind == Scenario::LemmaA1 && self.experiment.ensemble_size < 100 {
            return Err(FeneError::InvalidParameter(format!(
                "ensemble_size = {} must be >= 100",
                self.experiment.ensemble_size
            )));
        }
        if self.experiment.deltas.iter().any(|d| !(*d > 0.0))
            || self.experiment.lemma_deltas.iter().any(|d| !(*d > 0.0))
            || self.experiment.horizons.iter().any(|h| !(*h > 0.0))
        {
            return Err(FeneError::InvalidParameter(
                "experiment deltas and horizons must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn torus_grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.n)
    }

    /// Number of steps covering the horizon.
    pub fn n_steps(&self) -> u64 {
        (self.time.horizon_t / self.time.dt).round().max(1.0) as u64
    }

    pub fn fluid_step_config(&self) -> Result<FluidStepConfig> {
        let grid = self.torus_grid()?;
        let mut c = FluidStepConfig::new(
            self.time.dt,
            self.fluid.n_modes.unwrap_or_else(|| grid.dealias_cutoff()),
        );
        c.cutoff_r = self.fluid.cutoff_r;
        c.cfl = self.fluid.cfl;
        Ok(c)
    }

    pub fn fp_step_config(&self) -> Result<FpStepConfig> {
        Ok(FpStepConfig {
            dt: self.time.dt,
            epsilon: self.model.epsilon,
            chi_index: self.config_space.chi_index,
            scheme: FpScheme::Ssprk3Explicit,
            cfl: self.fp.cfl,
        })
    }

    pub fn build_basis(&self) -> Result<ConfigBasis> {
        let cs = &self.config_space;
        let quad = build_quadrature(self.model.b, cs.n_radial, cs.n_angular)?;
        eigen_basis(&quad, cs.n_basis)
    }

    pub fn build_solver(&self, basis: &ConfigBasis) -> Result<CoupledSolver> {
        CoupledSolver::new(
            self.model,
            self.forcing,
            self.fluid_step_config()?,
            self.fp_step_config()?,
            basis,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str(
            "[scenario]\nkind = \"equilibrium\"\n[time]\ndt = 0.002\nhorizon_t = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.kind, Scenario::Equilibrium);
        assert_eq!(cfg.n_steps(), 100);
        assert_eq!(cfg.grid.n, 32);
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = RunConfig::from_toml_str("[model]\nbogus = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, FeneError::Config(_)));
        assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn bad_extensibility_names_constraint() {
        let text = "[model]\na = 1.0\ngamma = 1.4\nmu_s = 0.5\nmu_b = 0.1\nepsilon = 0.0\na11 = 1.0\nlambda = 1.0\nb = 1.5\n";
        let err = RunConfig::from_toml_str(text).unwrap_err();
        assert!(err.to_string().contains("b > 2"));
        assert_eq!(err.exit_code(), 2);
    }
}
