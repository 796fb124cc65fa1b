//! Trajectory CSV: header `t,px,py,psi,v,delta,v_cmd`, six decimals per value.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tracking::{Trajectory, TrajectoryRecord};
use crate::vehicle::{ControlInput, VehicleState};

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "px", "py", "psi", "v", "delta", "v_cmd"];

pub fn export_trajectory_csv(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if trajectory.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(TRAJECTORY_HEADER)?;
    for r in &trajectory.records {
        let fields = [
            r.t,
            r.state.px,
            r.state.py,
            r.state.psi,
            r.state.v,
            r.control.delta,
            r.control.v_cmd,
        ];
        writer.write_record(fields.iter().map(|x| format!("{x:.6}")))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    if header.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(Error::InvalidParameter(format!(
            "{}: unexpected trajectory header",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let v: Vec<f64> = row
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("{}: bad number `{f}`", path.display()))
                })
            })
            .collect::<Result<_>>()?;
        records.push(TrajectoryRecord {
            t: v[0],
            state: VehicleState {
                px: v[1],
                py: v[2],
                psi: v[3],
                v: v[4],
            },
            control: ControlInput::new(v[5], v[6]),
        });
    }
    Ok(Trajectory { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            t,
            state: VehicleState::new(1.25 + t, -3.5, 0.123_456_7, 2.0),
            control: ControlInput::new(-0.2, 2.0),
        }
    }

    #[test]
    fn single_record_file_has_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        export_trajectory_csv(
            &Trajectory {
                records: vec![record(0.0)],
            },
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,px,py,psi,v,delta,v_cmd\n0.000000,1.250000,-3.500000,0.123457,2.000000,-0.200000,2.000000\n");
    }

    #[test]
    fn round_trip_within_format_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let traj = Trajectory {
            records: (0..5).map(|k| record(k as f64 * 0.1)).collect(),
        };
        export_trajectory_csv(&traj, &path).unwrap();
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(back.len(), traj.len());
        for (a, b) in traj.records.iter().zip(&back.records) {
            let pairs = [
                (a.t, b.t),
                (a.state.px, b.state.px),
                (a.state.py, b.state.py),
                (a.state.psi, b.state.psi),
                (a.state.v, b.state.v),
                (a.control.delta, b.control.delta),
                (a.control.v_cmd, b.control.v_cmd),
            ];
            for (x, y) in pairs {
                assert!((x - y).abs() <= 5e-7 + 1e-12);
            }
        }
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err =
            export_trajectory_csv(&Trajectory::default(), dir.path().join("x.csv")).unwrap_err();
        assert!(matches!(err, Error::EmptyTrajectory));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.csv");
        let err = export_trajectory_csv(
            &Trajectory {
                records: vec![record(0.0)],
            },
            path,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
