//! Run orchestration: configs, scenarios, recorded series, snapshots,
//! experiments and run reports.

mod checkpoint;
mod config;
mod experiments;
mod report;
mod run;
mod series;

pub use checkpoint::{checkpoint_load, checkpoint_save, decode, encode, Checkpoint, MAGIC, VERSION};
pub use config::{
    ConfigSpaceSpec, ExperimentSpec, FluidSpec, FpSpec, GridSpec, RunConfig, RunSpec, Scenario, ScenarioSpec,
    TimeSpec,
};
pub use experiments::{
    contraction_study, growth_constant, lemma_a1_ensemble, lemma_a1_experiment, loglog_slope, richardson_order,
    stress_difference, velocity_difference, write_contraction_csv, write_difference_csv, write_lemma_csv,
    ContractionRun, DifferenceReport, LemmaA1Report, RichardsonReport,
};
pub use report::{build_report, conservation_drifts, energy_shape_constants, RunReport};
pub use run::{content_hash, initial_state, run_scenario, RunMonitor, RunOverrides, RunSummary, Simulation};
pub use series::{read_series, write_series, TimeSeriesRecord};
