//! Sampled solver output shared by every method.

use serde::{Deserialize, Serialize};

use crate::discretization::Layout;
use crate::equations::polar;
use crate::error::{Error, Result};
use crate::system::IegsSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub pipe: String,
    pub n_seg: usize,
    pub dl_m: f64,
}

/// One accepted window of the adaptive solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowRecord {
    pub t0: f64,
    pub dt: f64,
    pub err: f64,
    pub rejects: usize,
    /// Window end was cut to a breakpoint, the horizon or a flow reversal.
    pub clamped: bool,
    pub dt_next: f64,
}

/// One controller update: the step it was computed from and the step it
/// proposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerUpdate {
    pub dt_in: f64,
    pub dt_out: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    pub parameters: serde_json::Value,
    pub grids: Vec<GridInfo>,
    pub steps: usize,
    pub rejected: usize,
    pub wall_clock_s: f64,
    #[serde(skip)]
    pub windows: Vec<WindowRecord>,
    #[serde(skip)]
    pub updates: Vec<ControllerUpdate>,
}

impl Provenance {
    pub fn new(method: &str, parameters: serde_json::Value, system: &IegsSystem, layout: &Layout) -> Self {
        Self {
            method: method.to_string(),
            parameters,
            grids: layout
                .grids
                .iter()
                .map(|g| GridInfo {
                    pipe: system.gas.pipelines[g.pipe].id.clone(),
                    n_seg: g.n_seg,
                    dl_m: g.dl_m,
                })
                .collect(),
            steps: 0,
            rejected: 0,
            wall_clock_s: 0.0,
            windows: Vec::new(),
            updates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// One row per sample time.
    pub values: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.names.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|r| r[c]).collect())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn check(&self) -> Result<()> {
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Range("sample times are not strictly increasing".into()));
        }
        if self.values.len() != self.times.len() || self.values.iter().any(|r| r.len() != self.names.len()) {
            return Err(Error::Range("trajectory is not rectangular".into()));
        }
        Ok(())
    }
}

/// Uniform sample grid over `[0, T]`; the last sample is `T` even when the
/// spacing does not divide the horizon.
pub fn sample_times(horizon: f64, sample_dt: f64) -> Result<Vec<f64>> {
    if !(sample_dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::Range(format!(
            "invalid sampling: T = {horizon}, dt = {sample_dt}"
        )));
    }
    let n = (horizon / sample_dt * (1.0 + 1e-12)).floor() as usize;
    let mut t: Vec<f64> = (0..=n).map(|i| i as f64 * sample_dt).collect();
    let last = *t.last().unwrap();
    if horizon - last > 1e-9 * horizon.max(1.0) {
        t.push(horizon);
    } else {
        *t.last_mut().unwrap() = horizon;
    }
    Ok(t)
}

/// Accumulates samples of the state vector and appends the derived bus
/// magnitude and angle columns.
pub struct TrajectoryBuilder {
    names: Vec<String>,
    bus_cols: Vec<(usize, usize)>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TrajectoryBuilder {
    pub fn new(system: &IegsSystem, layout: &Layout) -> Self {
        let mut names = layout.variable_names(system);
        let mut bus_cols = Vec::new();
        for (b, bus) in system.eps.buses.iter().enumerate() {
            names.push(format!("bus.{}.U", bus.id));
            names.push(format!("bus.{}.theta", bus.id));
            bus_cols.push((layout.e(b), layout.f(b)));
        }
        Self {
            names,
            bus_cols,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        let mut row = x.to_vec();
        for &(e, f) in &self.bus_cols {
            let (u, th) = polar(x[e], x[f]);
            row.push(u);
            row.push(th);
        }
        self.times.push(t);
        self.values.push(row);
    }

    pub fn finish(self, provenance: Provenance) -> Trajectory {
        Trajectory {
            names: self.names,
            times: self.times,
            values: self.values,
            provenance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_cover_horizon() {
        let t = sample_times(10800.0, 60.0).unwrap();
        assert_eq!(t.len(), 181);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 10800.0);
        let t = sample_times(100.0, 30.0).unwrap();
        assert_eq!(t, vec![0.0, 30.0, 60.0, 90.0, 100.0]);
        assert!(sample_times(1.0, 0.0).is_err());
    }
}
