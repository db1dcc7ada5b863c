//! Window-length controller driven by the last retained Taylor coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance class of a state variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarClass {
    Pressure,
    Flow,
    Voltage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowControlConfig {
    /// Absolute tolerance for pressures (Pa).
    pub atol_pressure: f64,
    /// Absolute tolerance for mass flows (kg/s).
    pub atol_flow: f64,
    /// Absolute tolerance for voltage components and bus powers (pu).
    pub atol_voltage: f64,
    pub rtol: f64,
    pub fac: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub dt_init: f64,
    pub dt_max: f64,
    /// Smallest window a rejection may shrink to.
    pub dt_min: f64,
}

impl Default for WindowControlConfig {
    fn default() -> Self {
        Self {
            atol_pressure: 1.0,
            atol_flow: 1e-4,
            atol_voltage: 1e-8,
            rtol: 1e-4,
            fac: 0.9,
            fac_min: 0.5,
            fac_max: 2.0,
            dt_init: 1.0,
            dt_max: 600.0,
            dt_min: 1e-3,
        }
    }
}

impl WindowControlConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fac > 0.0
            && self.fac < 1.0
            && self.fac_max >= 1.0
            && self.fac_min > 0.0
            && self.fac_min < 1.0
            && self.atol_pressure > 0.0
            && self.atol_flow > 0.0
            && self.atol_voltage > 0.0
            && self.rtol > 0.0
            && self.dt_init > 0.0
            && self.dt_min > 0.0
            && self.dt_max >= self.dt_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "invalid window controller configuration {self:?}"
            )))
        }
    }

    pub fn atol(&self, class: VarClass) -> f64 {
        match class {
            VarClass::Pressure => self.atol_pressure,
            VarClass::Flow => self.atol_flow,
            VarClass::Voltage => self.atol_voltage,
        }
    }
}

/// RMS of the scaled truncation estimates `ŷ[K]·dt^K / ε`, where
/// `ε = atol + min(|y(0)|, |y(dt)|)·rtol`. Non-finite inputs give `∞`.
pub fn window_error(
    last_coeff: &[f64],
    start: &[f64],
    end: &[f64],
    classes: &[VarClass],
    dt: f64,
    order: usize,
    cfg: &WindowControlConfig,
) -> f64 {
    if last_coeff.is_empty() {
        return 0.0;
    }
    let scale = dt.powi(order as i32);
    let mut sum = 0.0;
    for i in 0..last_coeff.len() {
        let eps = cfg.atol(classes[i]) + start[i].abs().min(end[i].abs()) * cfg.rtol;
        let r = last_coeff[i] * scale / eps;
        sum += r * r;
    }
    let err = (sum / last_coeff.len() as f64).sqrt();
    if err.is_finite() {
        err
    } else {
        f64::INFINITY
    }
}

/// Next window length `dt·fac·err^(−1/K)` clamped to
/// `[fac_min·dt, fac_max·dt]`, then to `[dt_min, dt_max]`.
pub fn adapt_window(err: f64, dt: f64, order: usize, cfg: &WindowControlConfig) -> f64 {
    let err = err.max(1e-12);
    let proposed = dt * cfg.fac * err.powf(-1.0 / order as f64);
    proposed
        .clamp(cfg.fac_min * dt, cfg.fac_max * dt)
        .min(cfg.dt_max)
        .max(cfg.dt_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> WindowControlConfig {
        WindowControlConfig {
            dt_max: 1e9,
            ..Default::default()
        }
    }

    #[test]
    fn unit_error_scales_by_fac() {
        let c = cfg();
        // ŷ·dt^K equal to ε
        let eps = c.atol_flow + 1.0 * c.rtol;
        let dt: f64 = 2.0;
        let y = eps / dt.powi(5);
        let err = window_error(&[y], &[1.0], &[1.0], &[VarClass::Flow], dt, 5, &c);
        assert_relative_eq!(err, 1.0, max_relative = 1e-12);
        assert_relative_eq!(adapt_window(err, dt, 5, &c), 0.9 * dt, max_relative = 1e-12);
    }

    #[test]
    fn zero_error_grows_by_fac_max() {
        let c = cfg();
        let err = window_error(&[0.0], &[1.0], &[1.0], &[VarClass::Pressure], 10.0, 5, &c);
        assert_eq!(err, 0.0);
        assert_eq!(adapt_window(err, 10.0, 5, &c), 20.0);
    }

    #[test]
    fn large_error_clamped_by_fac_min() {
        let c = cfg();
        let k = 5;
        let err = 2f64.powi(k);
        // 0.9/2 = 0.45 < fac_min
        assert_eq!(adapt_window(err, 8.0, k as usize, &c), 4.0);
        let loose = WindowControlConfig { fac_min: 0.2, ..c };
        assert_relative_eq!(adapt_window(err, 8.0, k as usize, &loose), 3.6, max_relative = 1e-12);
    }

    #[test]
    fn nonfinite_is_infinite_error() {
        let err = window_error(&[f64::NAN], &[1.0], &[1.0], &[VarClass::Flow], 1.0, 5, &cfg());
        assert!(err.is_infinite());
    }

    #[test]
    fn config_validation() {
        assert!(WindowControlConfig::default().validate().is_ok());
        assert!(WindowControlConfig {
            fac: 1.2,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WindowControlConfig {
            fac_min: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
