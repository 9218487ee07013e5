use std::path::Path;

use crate::error::{FeneError, Result};

/// One row of `series.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub step: u64,
    pub time: f64,
    pub mass: f64,
    pub momentum: [f64; 2],
    pub polymer_mass: f64,
    /// `|(r, u)|^2_{W^{s,2}}` for `s = 0..=s_max`.
    pub fluid_energy: Vec<f64>,
    /// `|psi|^2_{W^{s,2}_x L^2_M}` for `s = 0..=s_max`.
    pub fp_l2m: Vec<f64>,
    /// `|psi|^2_{W^{s,2}_x H^1_M}` for `s = 0..=s_max`.
    pub fp_h1m: Vec<f64>,
    pub min_r: f64,
    pub max_r: f64,
    pub envelope_lower: f64,
    pub envelope_upper: f64,
    /// `int_0^t |grad u|_inf`.
    pub grad_integral: f64,
    /// `int_0^t |u|^2_{W^{s+1,2}}` at the monitor index.
    pub velocity_integral: f64,
    /// `int_0^t |div T|^2_{W^{s,2}}` at the monitor index.
    pub stress_integral: f64,
    pub min_psi_sample: f64,
    pub blowup_indicator: f64,
    pub cutoff_active: bool,
}

impl TimeSeriesRecord {
    pub fn s_max(&self) -> u32 {
        self.fluid_energy.len() as u32 - 1
    }

    pub fn header(s_max: u32) -> Vec<String> {
        let mut h: Vec<String> = ["step", "time", "mass", "momentum_1", "momentum_2", "polymer_mass"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for prefix in ["fluid_energy", "fp_l2m", "fp_h1m"] {
            h.extend((0..=s_max).map(|s| format!("{prefix}_s{s}")));
        }
        h.extend(
            [
                "min_r",
                "max_r",
                "envelope_lower",
                "envelope_upper",
                "grad_integral",
                "velocity_integral",
                "stress_integral",
                "min_psi_sample",
                "blowup_indicator",
                "cutoff_active",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        h
    }

    pub fn to_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.16e}");
        let mut row = vec![
            self.step.to_string(),
            f(self.time),
            f(self.mass),
            f(self.momentum[0]),
            f(self.momentum[1]),
            f(self.polymer_mass),
        ];
        for v in [&self.fluid_energy, &self.fp_l2m, &self.fp_h1m] {
            row.extend(v.iter().map(|x| f(*x)));
        }
        row.extend(
            [
                self.min_r,
                self.max_r,
                self.envelope_lower,
                self.envelope_upper,
                self.grad_integral,
                self.velocity_integral,
                self.stress_integral,
                self.min_psi_sample,
                self.blowup_indicator,
            ]
            .iter()
            .map(|x| f(*x)),
        );
        row.push(u8::from(self.cutoff_active).to_string());
        row
    }

    pub fn from_row(row: &[String], s_max: u32) -> Result<Self> {
        let width = Self::header(s_max).len();
        if row.len() != width {
            return Err(FeneError::Config(format!(
                "series row has {} fields, expected {width}",
                row.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|e| FeneError::Config(format!("series field {i} `{}`: {e}", row[i])))
        };
        let step = row[0]
            .parse::<u64>()
            .map_err(|e| FeneError::Config(format!("series step `{}`: {e}", row[0])))?;
        let ns = s_max as usize + 1;
        let block = |start: usize| -> Result<Vec<f64>> { (start..start + ns).map(num).collect() };
        let tail = 6 + 3 * ns;
        Ok(TimeSeriesRecord {
            step,
            time: num(1)?,
            mass: num(2)?,
            momentum: [num(3)?, num(4)?],
            polymer_mass: num(5)?,
            fluid_energy: block(6)?,
            fp_l2m: block(6 + ns)?,
            fp_h1m: block(6 + 2 * ns)?,
            min_r: num(tail)?,
            max_r: num(tail + 1)?,
            envelope_lower: num(tail + 2)?,
            envelope_upper: num(tail + 3)?,
            grad_integral: num(tail + 4)?,
            velocity_integral: num(tail + 5)?,
            stress_integral: num(tail + 6)?,
            min_psi_sample: num(tail + 7)?,
            blowup_indicator: num(tail + 8)?,
            cutoff_active: row[tail + 9] == "1",
        })
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(|e| FeneError::Io(format!("{}: {e}", path.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| FeneError::Io(format!("{}: {e}", path.display())))
}

/// Serializes a table with a header row.
pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| FeneError::Io(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| FeneError::Io(e.to_string()))
}

pub fn write_series(path: &Path, records: &[TimeSeriesRecord], s_max: u32) -> Result<()> {
    let bytes = csv_bytes(
        &TimeSeriesRecord::header(s_max),
        records.iter().map(TimeSeriesRecord::to_row),
    )?;
    write_atomic(path, &bytes)
}

pub fn read_series(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| FeneError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| FeneError::Io(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let n_energy = header.iter().filter(|h| h.starts_with("fluid_energy_s")).count();
    if n_energy == 0 {
        return Err(FeneError::Config(format!(
            "{}: missing fluid_energy columns",
            path.display()
        )));
    }
    let s_max = n_energy as u32 - 1;
    if header != TimeSeriesRecord::header(s_max) {
        return Err(FeneError::Config(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| FeneError::Io(e.to_string()))?;
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        out.push(TimeSeriesRecord::from_row(&row, s_max)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TimeSeriesRecord {
        TimeSeriesRecord {
            step: 7,
            time: 0.1 + 0.2,
            mass: 39.47841760435743,
            momentum: [1e-17, -3.0],
            polymer_mass: std::f64::consts::PI,
            fluid_energy: vec![1.0, 2.0, 1.0 / 3.0],
            fp_l2m: vec![4.0, 5.0, 6.0],
            fp_h1m: vec![0.0, f64::MIN_POSITIVE, 1e300],
            min_r: 0.9,
            max_r: 1.1,
            envelope_lower: 0.8,
            envelope_upper: 1.2,
            grad_integral: 0.01,
            velocity_integral: 0.02,
            stress_integral: 0.03,
            min_psi_sample: 1e-5,
            blowup_indicator: 2.5,
            cutoff_active: true,
        }
    }

    #[test]
    fn row_round_trip_is_lossless() {
        let r = sample();
        let back = TimeSeriesRecord::from_row(&r.to_row(), 2).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.to_row().len(), TimeSeriesRecord::header(2).len());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let mut b = sample();
        b.step = 8;
        b.cutoff_active = false;
        write_series(&path, &[sample(), b.clone()], 2).unwrap();
        let back = read_series(&path).unwrap();
        assert_eq!(back, vec![sample(), b]);
        assert!(!dir.path().join("series.csv.tmp").exists());
    }
}
