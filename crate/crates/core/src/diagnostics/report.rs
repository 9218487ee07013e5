use std::fmt;
use std::path::Path;

use crate::error::{FeneError, Result};

use super::experiments::growth_constant;
use super::series::{read_series, TimeSeriesRecord};

/// Summary of a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub status: String,
    pub reason_code: String,
    pub rows: usize,
    pub final_step: u64,
    pub final_time: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub polymer_mass_drift: f64,
    pub min_r: f64,
    pub min_psi_sample: f64,
    pub max_blowup_indicator: f64,
    pub envelope_respected: bool,
    pub cutoff_ever_active: bool,
    /// Fitted constant of the polymer energy shape at the monitor index.
    pub polymer_energy_constant: f64,
    /// Fitted constant of the fluid energy shape at the monitor index.
    pub fluid_energy_constant: f64,
}

fn relative_drift(values: impl Iterator<Item = f64>, scale: f64) -> f64 {
    let v: Vec<f64> = values.collect();
    match v.first() {
        None => 0.0,
        Some(first) => v.iter().map(|x| (x - first).abs()).fold(0.0, f64::max) / scale,
    }
}

/// Fitted constants of the two energy shapes,
/// `log |psi|^2 - c int |u|^2_{s+1}` and
/// `log(|(r,u)|^2 + int |div T|^2) - c int |u|^2_{s+1}`.
pub fn energy_shape_constants(records: &[TimeSeriesRecord], s: u32) -> (f64, f64) {
    let s = s as usize;
    let integral: Vec<f64> = records.iter().map(|r| r.velocity_integral).collect();
    let polymer: Vec<f64> = records.iter().map(|r| r.fp_l2m[s].ln()).collect();
    let fluid: Vec<f64> = records
        .iter()
        .map(|r| (r.fluid_energy[s] + r.stress_integral).ln())
        .collect();
    (growth_constant(&polymer, &integral), growth_constant(&fluid, &integral))
}

/// Relative drifts of mass, momentum and polymer mass. Momentum is measured
/// against `momentum_scale`, the initial `int rho |u|` (or the mass at rest).
pub fn conservation_drifts(records: &[TimeSeriesRecord], momentum_scale: f64) -> [f64; 3] {
    let first = &records[0];
    [
        relative_drift(records.iter().map(|r| r.mass), first.mass.abs()),
        relative_drift(records.iter().map(|r| r.momentum[0]), momentum_scale)
            .max(relative_drift(records.iter().map(|r| r.momentum[1]), momentum_scale)),
        relative_drift(records.iter().map(|r| r.polymer_mass), first.polymer_mass.abs()),
    ]
}

pub fn build_report(dir: &Path) -> Result<RunReport> {
    let records = read_series(&dir.join("series.csv"))?;
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| FeneError::Io(format!("{}: {e}", manifest_path.display())))?;
    let manifest: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| FeneError::Config(format!("{}: {e}", manifest_path.display())))?;
    let field = |k: &str| manifest[k].as_str().unwrap_or("").to_string();
    let s_monitor = manifest["config"]["run"]["s_monitor"].as_u64().unwrap_or(0) as u32;
    let last = records
        .last()
        .ok_or_else(|| FeneError::Config("series.csv has no rows".into()))?;
    let s_monitor = s_monitor.min(last.s_max());
    let momentum_scale = manifest["momentum_scale"]
        .as_f64()
        .unwrap_or_else(|| records[0].mass.abs());
    let [mass_drift, momentum_drift, polymer_mass_drift] = conservation_drifts(&records, momentum_scale);
    let (pc, fc) = energy_shape_constants(&records, s_monitor);
    Ok(RunReport {
        scenario: field("scenario"),
        status: field("status"),
        reason_code: field("reason_code"),
        rows: records.len(),
        final_step: last.step,
        final_time: last.time,
        mass_drift,
        momentum_drift,
        polymer_mass_drift,
        min_r: records.iter().map(|r| r.min_r).fold(f64::INFINITY, f64::min),
        min_psi_sample: records.iter().map(|r| r.min_psi_sample).fold(f64::INFINITY, f64::min),
        max_blowup_indicator: records.iter().map(|r| r.blowup_indicator).fold(0.0, f64::max),
        envelope_respected: records
            .iter()
            .all(|r| r.min_r >= r.envelope_lower * (1.0 - 1e-12) && r.max_r <= r.envelope_upper * (1.0 + 1e-12)),
        cutoff_ever_active: records.iter().any(|r| r.cutoff_active),
        polymer_energy_constant: pc,
        fluid_energy_constant: fc,
    })
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario            {}", self.scenario)?;
        writeln!(f, "status              {} ({})", self.status, self.reason_code)?;
        writeln!(f, "rows                {}", self.rows)?;
        writeln!(f, "final step / time   {} / {:.6}", self.final_step, self.final_time)?;
        writeln!(f, "mass drift          {:.3e}", self.mass_drift)?;
        writeln!(f, "momentum drift      {:.3e}", self.momentum_drift)?;
        writeln!(f, "polymer mass drift  {:.3e}", self.polymer_mass_drift)?;
        writeln!(f, "min r               {:.6e}", self.min_r)?;
        writeln!(f, "min psi sample      {:.6e}", self.min_psi_sample)?;
        writeln!(f, "max blow-up ind.    {:.6e}", self.max_blowup_indicator)?;
        writeln!(f, "envelope respected  {}", self.envelope_respected)?;
        writeln!(f, "cut-off ever active {}", self.cutoff_ever_active)?;
        writeln!(f, "energy constant psi {:.3e}", self.polymer_energy_constant)?;
        write!(f, "energy constant r,u {:.3e}", self.fluid_energy_constant)
    }
}
