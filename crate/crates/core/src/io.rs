//! CSV trajectories and the plain-text vertex field format.
//!
//! A trajectory file has header `t,vertex,u` and one row per (sample,
//! vertex); numbers carry 17 significant digits so a read reproduces the
//! written values exactly. Mass residuals go to a sibling `<stem>.mass.csv`
//! with header `t,residual`, one row per step.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::graph::{VertexField, WeightedGraph};

/// Formats a number with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `out/run.csv` -> `out/run.mass.csv`.
pub fn mass_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.mass.csv"))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

/// Writes the trajectory CSV and its mass-residual sibling.
pub fn write_trajectory(g: &WeightedGraph, traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "vertex", "u"])?;
    for (t, u) in traj.iter() {
        g.check_field(u)?;
        let t = fmt_num(t);
        for x in 0..g.vertex_count() {
            w.write_record([t.as_str(), g.label(x), fmt_num(u[x]).as_str()])?;
        }
    }
    w.flush()?;

    let mut m = csv::Writer::from_path(mass_path(path))?;
    m.write_record(["t", "residual"])?;
    for (t, r) in traj.times().iter().skip(1).zip(traj.residuals()) {
        m.write_record([fmt_num(*t), fmt_num(*r)])?;
    }
    m.flush()?;
    Ok(())
}

/// Trajectory read back from CSV, with the vertex labels in column order.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredTrajectory {
    pub labels: Vec<String>,
    pub trajectory: Trajectory,
}

fn parse_num(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {what} {s:?}"),
    })
}

/// Reads a trajectory CSV; residuals come from the sibling mass file when
/// it exists.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<StoredTrajectory> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "vertex", "u"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header t,vertex,u, got {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        });
    }
    let mut labels: Vec<String> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: "expected 3 columns".into(),
            });
        }
        let t = parse_num(&rec[0], line, "time")?;
        let u = parse_num(&rec[2], line, "value")?;
        if times.last() != Some(&t) {
            times.push(t);
            rows.push(Vec::new());
        }
        let row = rows.last_mut().expect("row pushed above");
        if times.len() == 1 {
            labels.push(rec[1].to_string());
        } else if labels.get(row.len()).map(String::as_str) != Some(&rec[1]) {
            return Err(Error::Parse {
                line,
                message: format!("vertex {:?} out of order", &rec[1]),
            });
        }
        row.push(u);
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != labels.len()) {
        return Err(Error::Parse {
            line: 0,
            message: format!("sample {} has {} of {} vertices", bad, rows[bad].len(), labels.len()),
        });
    }

    let mut residuals = Vec::new();
    let mp = mass_path(path);
    if mp.exists() {
        let mut m = csv::Reader::from_path(&mp)?;
        for (i, rec) in m.records().enumerate() {
            let rec = rec?;
            residuals.push(parse_num(rec.get(1).unwrap_or(""), i + 2, "residual")?);
        }
    }
    let states = rows.into_iter().map(VertexField).collect();
    Ok(StoredTrajectory {
        labels,
        trajectory: Trajectory::from_parts(times, states, residuals),
    })
}

/// Parses a vertex field: one `<vertex> <value>` per line, `#` comments,
/// unlisted vertices are 0.
pub fn parse_field(g: &WeightedGraph, text: &str) -> Result<VertexField> {
    let mut f = VertexField::zeros(g.vertex_count());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected `<vertex> <value>`, got {line:?}"),
            });
        }
        let x = g.index_of(parts[0])?;
        f[x] = parse_num(parts[1], i + 1, "value")?;
    }
    Ok(f)
}

pub fn load_field(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<VertexField> {
    parse_field(g, &crate::error::read_file(path.as_ref())?)
}

/// CSV `vertex,u` for a single field.
pub fn field_csv(g: &WeightedGraph, u: &VertexField) -> String {
    let mut out = String::from("vertex,u\n");
    for x in 0..g.vertex_count() {
        out.push_str(&format!("{},{}\n", g.label(x), fmt_num(u[x])));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = WeightedGraph::path(3).unwrap();
        let mut tr = Trajectory::new(0.0, vec![0.1, 1.0 / 3.0, -2.5e-300].into());
        tr.push(0.1, vec![std::f64::consts::PI, 1e17, 0.0].into(), 1e-17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/run.csv");
        write_trajectory(&g, &tr, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.labels, vec!["x1", "x2", "x3"]);
        assert_eq!(back.trajectory, tr);
        assert!(dir.path().join("sub/run.mass.csv").exists());
    }

    #[test]
    fn empty_trajectory_is_header_only() {
        let g = WeightedGraph::path(2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_trajectory(&g, &Trajectory::empty(), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "t,vertex,u\n");
        assert!(read_trajectory(&path).unwrap().trajectory.is_empty());
    }

    #[test]
    fn field_format() {
        let g = WeightedGraph::path(3).unwrap();
        let f = parse_field(&g, "# peak\nx2 3\n\nx3 -1.5\n").unwrap();
        assert_eq!(f.values(), &[0.0, 3.0, -1.5]);
        assert!(matches!(parse_field(&g, "x2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_field(&g, "x9 1\n").is_err());
        assert!(field_csv(&g, &f).starts_with("vertex,u\nx1,0.0000000000000000e0\n"));
    }
}
