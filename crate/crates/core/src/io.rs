//! CSV readers and writers for data sets, planned trajectories and slack
//! schedules.
//!
//! Every table has a header row. Data and trajectory tables use the columns
//! `t,u_1..u_m,y_1..y_p`; slack tables use `t,eps_l1`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::hankel::DataTrajectory;
use crate::mintime::SlackEntry;
use crate::statespace::Trajectory;

fn header(m: usize, p: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=m).map(|i| format!("u_{i}")));
    h.extend((1..=p).map(|i| format!("y_{i}")));
    h
}

fn write_samples<W: Write>(
    inputs: &[DVector<f64>],
    outputs: &[DVector<f64>],
    start: i64,
    out: W,
) -> Result<()> {
    let m = inputs.first().map_or(0, |u| u.len());
    let p = outputs.first().map_or(0, |y| y.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(m, p))?;
    for (k, (u, y)) in inputs.iter().zip(outputs).enumerate() {
        let mut row = vec![(start + k as i64).to_string()];
        row.extend(u.iter().chain(y.iter()).map(|v| format!("{v:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

type Samples = (i64, Vec<DVector<f64>>, Vec<DVector<f64>>);

fn read_samples<R: Read>(input: R) -> Result<Samples> {
    let mut r = csv::Reader::from_reader(input);
    let head = r.headers()?.clone();
    if head.get(0) != Some("t") {
        return Err(invalid("first column must be `t`"));
    }
    let m = head.iter().filter(|h| h.starts_with("u_")).count();
    let p = head.iter().filter(|h| h.starts_with("y_")).count();
    if head.len() != 1 + m + p || m == 0 || p == 0 {
        return Err(invalid(format!(
            "unexpected header `{}`",
            head.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut start, mut inputs, mut outputs) = (0i64, Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| invalid(format!("row {}: bad number `{}`", k + 1, &rec[i])))
        };
        let t = num(0)? as i64;
        if k == 0 {
            start = t;
        } else if t != start + k as i64 {
            return Err(invalid(format!(
                "row {}: time index {t} is not consecutive",
                k + 1
            )));
        }
        inputs.push(DVector::from_iterator(
            m,
            (1..=m).map(&num).collect::<Result<Vec<_>>>()?,
        ));
        outputs.push(DVector::from_iterator(
            p,
            (1 + m..=m + p).map(&num).collect::<Result<Vec<_>>>()?,
        ));
    }
    Ok((start, inputs, outputs))
}

pub fn write_data_csv<W: Write>(data: &DataTrajectory, out: W) -> Result<()> {
    write_samples(data.inputs(), data.outputs(), 0, out)
}

pub fn read_data_csv<R: Read>(input: R) -> Result<DataTrajectory> {
    let (_, u, y) = read_samples(input)?;
    DataTrajectory::new(u, y)
}

/// Writes `traj` with `t` counted from its start index.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    write_samples(&traj.inputs, &traj.outputs, traj.start_index, out)
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Trajectory> {
    let (start, u, y) = read_samples(input)?;
    Trajectory::new(u, y, start)
}

pub fn write_slack_csv<W: Write>(schedule: &[SlackEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "eps_l1"])?;
    for e in schedule {
        w.write_record([e.t.to_string(), format!("{:e}", e.l1)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a truncated `path`.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| invalid(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let res = fs::File::create(&tmp)
        .map_err(Into::into)
        .and_then(|mut f| {
            write(&mut f)?;
            f.sync_all()?;
            Ok(())
        });
    match res {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn data_round_trip_is_exact() {
        let data = DataTrajectory::new(
            vec![v(&[0.1, -1.0 / 3.0]), v(&[1e-17, 2.5])],
            vec![v(&[std::f64::consts::PI]), v(&[-7.25e200])],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_data_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,u_1,u_2,y_1\n0,"));
        assert_eq!(read_data_csv(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn trajectory_keeps_negative_start() {
        let traj = Trajectory::new(vec![v(&[1.0]); 3], vec![v(&[2.0, 3.0]); 3], -2).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.start_index, -2);
        assert_eq!(back.outputs, traj.outputs);
    }

    #[test]
    fn rejects_gaps_and_bad_headers() {
        assert!(read_data_csv("t,u_1,y_1\n0,1,2\n2,1,2\n".as_bytes()).is_err());
        assert!(read_data_csv("k,u_1,y_1\n0,1,2\n".as_bytes()).is_err());
        assert!(read_data_csv("t,u_1\n0,1\n".as_bytes()).is_err());
        assert!(read_data_csv("t,u_1,y_1\n0,x,2\n".as_bytes()).is_err());
    }

    #[test]
    fn slack_table() {
        let s = [SlackEntry {
            t: 4,
            eps: vec![0.5, 0.25],
            l1: 0.75,
        }];
        let mut buf = Vec::new();
        write_slack_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,eps_l1\n4,7.5e-1\n");
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = std::env::temp_dir().join(format!("hm-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.txt");
        fs::write(&path, "old").unwrap();
        let err = write_atomic(&path, |f| {
            f.write_all(b"partial")?;
            Err(invalid("boom"))
        });
        assert!(err.is_err());
        assert_eq!(fs::read_to_string(&path).unwrap(), "old");
        write_atomic(&path, |f| Ok(f.write_all(b"new")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "new");
        fs::remove_dir_all(&dir).unwrap();
    }
}
