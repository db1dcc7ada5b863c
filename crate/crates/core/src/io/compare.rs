//! RMSE of a test trajectory against a reference, per variable and per
//! variable class, plus the runtime ratio from the two provenances.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Default)]
pub struct CompareOptions {
    /// Glob over variable names; all variables when `None`.
    pub vars: Option<String>,
    /// Interpolate the test trajectory linearly onto the reference times.
    pub resample: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarClass {
    Pressure,
    Flow,
    Voltage,
    Other,
}

impl VarClass {
    pub fn of(name: &str) -> Self {
        let parts: Vec<&str> = name.split('.').collect();
        let field = match parts.as_slice() {
            ["pipe", _, f, _] | ["node", _, f] | ["bus", _, f] => *f,
            _ => "",
        };
        match field {
            "pi" => VarClass::Pressure,
            "m" => VarClass::Flow,
            "e" | "f" | "U" => VarClass::Voltage,
            _ => VarClass::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarRmse {
    pub name: String,
    pub class: VarClass,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRmse {
    pub class: VarClass,
    pub variables: usize,
    /// Root mean square over every sample of every variable in the class.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub method: String,
    pub wall_clock_s: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub samples: usize,
    pub variables: Vec<VarRmse>,
    pub classes: Vec<ClassRmse>,
    pub reference: RunSummary,
    pub test: RunSummary,
    /// Test wall clock over reference wall clock.
    pub runtime_ratio: f64,
}

impl CompareReport {
    pub fn rmse(&self, name: &str) -> Option<f64> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.rmse)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Linear interpolation of `ys(xs)` at `x`; `xs` strictly increasing and
/// covering `x`.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let tol = 1e-9 * xs.last()?.abs().max(1.0);
    if x < xs[0] - tol || x > xs[xs.len() - 1] + tol {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return Some(ys[0]);
    }
    if k >= xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    Some(ys[k - 1] + w * (ys[k] - ys[k - 1]))
}

fn select(names: &[String], pattern: Option<&glob::Pattern>) -> BTreeSet<String> {
    names
        .iter()
        .filter(|n| pattern.is_none_or(|p| p.matches(n)))
        .cloned()
        .collect()
}

fn summary(t: &Trajectory) -> RunSummary {
    RunSummary {
        method: t.provenance.method.clone(),
        wall_clock_s: t.provenance.wall_clock_s,
        steps: t.provenance.steps,
    }
}

pub fn compare(reference: &Trajectory, test: &Trajectory, opts: &CompareOptions) -> Result<CompareReport> {
    let pattern = opts
        .vars
        .as_deref()
        .map(glob::Pattern::new)
        .transpose()
        .map_err(|e| Error::Range(format!("invalid --vars pattern: {e}")))?;
    let in_ref = select(&reference.names, pattern.as_ref());
    let in_test = select(&test.names, pattern.as_ref());
    if in_ref != in_test {
        let only_ref: Vec<_> = in_ref.difference(&in_test).cloned().collect();
        let only_test: Vec<_> = in_test.difference(&in_ref).cloned().collect();
        return Err(Error::Structural(format!(
            "variable sets differ: only in reference {only_ref:?}, only in test {only_test:?}"
        )));
    }
    if in_ref.is_empty() {
        return Err(Error::Range("no variables selected".into()));
    }
    let same_grid = reference.times == test.times;
    if !same_grid && !opts.resample {
        return Err(Error::Structural(format!(
            "sample grids differ ({} vs {} samples); pass --resample to interpolate",
            reference.times.len(),
            test.times.len()
        )));
    }
    let mut variables = Vec::new();
    for name in reference.names.iter().filter(|n| in_ref.contains(*n)) {
        let r = reference.column(name).expect("selected from reference");
        let t = test.column(name).expect("present in test");
        let t = if same_grid {
            t
        } else {
            reference
                .times
                .iter()
                .map(|&x| interp(&test.times, &t, x))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Range("reference times extend beyond the test trajectory".into()))?
        };
        variables.push(VarRmse {
            name: name.clone(),
            class: VarClass::of(name),
            rmse: rmse(&t, &r),
        });
    }
    let mut classes = Vec::new();
    for class in [VarClass::Pressure, VarClass::Flow, VarClass::Voltage, VarClass::Other] {
        let members: Vec<f64> = variables.iter().filter(|v| v.class == class).map(|v| v.rmse).collect();
        if !members.is_empty() {
            classes.push(ClassRmse {
                class,
                variables: members.len(),
                rmse: (members.iter().map(|r| r * r).sum::<f64>() / members.len() as f64).sqrt(),
            });
        }
    }
    let (rs, ts) = (summary(reference), summary(test));
    let runtime_ratio = if rs.wall_clock_s > 0.0 {
        ts.wall_clock_s / rs.wall_clock_s
    } else {
        f64::NAN
    };
    Ok(CompareReport {
        samples: reference.times.len(),
        variables,
        classes,
        reference: rs,
        test: ts,
        runtime_ratio,
    })
}
