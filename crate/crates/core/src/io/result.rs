//! Result file: comma-separated samples with a `time` column followed by
//! one column per variable, and a provenance sidecar at
//! `<path>.provenance.json`. Values carry 17 significant digits so a
//! re-read is bit-exact.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{parse_error, read_text, write_text};
use crate::trajectory::{Provenance, Trajectory};

pub fn provenance_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".provenance.json");
    PathBuf::from(p)
}

pub fn result_to_csv(traj: &Trajectory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("time").chain(traj.names.iter().map(String::as_str));
    w.write_record(header).expect("in-memory write");
    for (t, row) in traj.times.iter().zip(&traj.values) {
        let rec = std::iter::once(*t)
            .chain(row.iter().copied())
            .map(|v| format!("{v:.16e}"));
        w.write_record(rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn provenance_to_string(prov: &Provenance) -> String {
    let mut s = serde_json::to_string_pretty(prov).expect("provenance serializes");
    s.push('\n');
    s
}

/// Writes the samples and the sidecar. The trajectory is checked first so
/// nothing is written for a malformed one.
pub fn write_result(path: &Path, traj: &Trajectory) -> Result<()> {
    traj.check()?;
    write_text(&provenance_path(path), &provenance_to_string(&traj.provenance))?;
    write_text(path, &result_to_csv(traj))
}

/// Column names, sample times and rows of a result file.
pub type ResultTable = (Vec<String>, Vec<f64>, Vec<Vec<f64>>);

pub fn parse_result_csv(text: &str, origin: &str) -> Result<ResultTable> {
    let perr = |message: String| Error::Parse {
        path: origin.to_string(),
        message,
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| perr(e.to_string()))?.clone();
    if header.get(0) != Some("time") {
        return Err(perr("first column must be 'time'".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| perr(format!("line {}, column {}: {e}", i + 2, c + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        times.push(row[0]);
        values.push(row[1..].to_vec());
    }
    Ok((names, times, values))
}

/// Reads a result file and its sidecar.
pub fn read_result(path: &Path) -> Result<Trajectory> {
    let origin = path.display().to_string();
    let (names, times, values) = parse_result_csv(&read_text(path)?, &origin)?;
    let ppath = provenance_path(path);
    let provenance: Provenance =
        serde_json::from_str(&read_text(&ppath)?).map_err(|e| parse_error(&ppath.display().to_string(), &e))?;
    let traj = Trajectory {
        names,
        times,
        values,
        provenance,
    };
    traj.check().map_err(|e| Error::Parse {
        path: origin,
        message: e.to_string(),
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::GridInfo;
    use proptest::prelude::*;
    use serde_json::json;

    fn traj(values: Vec<Vec<f64>>) -> Trajectory {
        Trajectory {
            names: vec!["pipe.p.pi.0".into(), "bus.b.theta".into()],
            times: (0..values.len()).map(|i| i as f64 * 0.1).collect(),
            values,
            provenance: Provenance {
                method: "dt".into(),
                parameters: json!({"order": 5}),
                grids: vec![GridInfo {
                    pipe: "p".into(),
                    n_seg: 4,
                    dl_m: 250.0,
                }],
                steps: 7,
                rejected: 1,
                wall_clock_s: 0.25,
                windows: vec![],
                updates: vec![],
            },
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(rows in prop::collection::vec(prop::array::uniform2(any::<f64>().prop_filter("finite", |v| v.is_finite())), 1..20)) {
            let t = traj(rows.into_iter().map(|r| r.to_vec()).collect());
            let (names, times, values) = parse_result_csv(&result_to_csv(&t), "mem").unwrap();
            prop_assert_eq!(names, t.names.clone());
            prop_assert_eq!(times, t.times.clone());
            for (a, b) in values.iter().flatten().zip(t.values.iter().flatten()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn file_round_trip_includes_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let t = traj(vec![vec![1.0 / 3.0, -2e-300], vec![4e5, 0.0]]);
        write_result(&path, &t).unwrap();
        assert!(provenance_path(&path).exists());
        assert_eq!(read_result(&path).unwrap(), t);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,pipe.p.pi.0,bus.b.theta\n"));
    }

    #[test]
    fn malformed_trajectory_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut t = traj(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        t.times = vec![1.0, 1.0];
        assert!(write_result(&path, &t).is_err());
        assert!(!path.exists() && !provenance_path(&path).exists());
    }

    #[test]
    fn missing_sidecar_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, result_to_csv(&traj(vec![vec![1.0, 2.0]]))).unwrap();
        assert!(matches!(read_result(&path), Err(Error::Io { .. })));
    }
}
